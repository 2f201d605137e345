//! Quadratic binary operads: presentations, components, duals, shifts and the
//! Schur / cofree / endomorphism constructions on graded spaces.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graded::{all_perms, transposition, GradedVectorSpace, SnModule};
use crate::linalg::{q, RationalMatrix, SparseVec, SubspaceBasis, Q};
use crate::tree::{add_term, Canon, Comb, Expr, FreeAlgebra, OpInfo, Symmetry};

/// Hard cap on operad arities handled by the engine.
pub const MAX_OPERAD_ARITY: usize = 4;

/// Sign convention of the pairing `T(E)(3) ⊗ T(E^∨)(3) → k` on the basis
/// `g(f(x_a, x_b), x_c)`, `(a, b, c)` a cyclic rotation of `(0, 1, 2)`:
/// innermost vertex evaluated first, so `f^∨` is moved past `g` and the pair
/// `(g, f)` contributes `scale(g)·scale(f)·(-1)^{|f||g|}`. `scale` is −1 on the
/// second member of a regular pair (the sign twist of `E^∨ = E^* ⊗ sgn`), +1 otherwise.
pub const PAIRING_INNERMOST_FIRST: bool = true;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub name: String,
    pub degree: i64,
    pub symmetry: Symmetry,
}

impl GeneratorSpec {
    pub fn new(name: &str, degree: i64, symmetry: Symmetry) -> Self {
        GeneratorSpec { name: name.into(), degree, symmetry }
    }
}

/// Expand generator specs into basis operations.
pub fn expand_ops(gens: &[GeneratorSpec]) -> Vec<OpInfo> {
    let mut ops = Vec::new();
    for g in gens {
        let k = ops.len();
        match g.symmetry {
            Symmetry::Symmetric => ops.push(OpInfo { name: g.name.clone(), degree: g.degree, partner: k, tau_sign: 1 }),
            Symmetry::Antisymmetric => {
                ops.push(OpInfo { name: g.name.clone(), degree: g.degree, partner: k, tau_sign: -1 })
            }
            Symmetry::Regular => {
                ops.push(OpInfo { name: g.name.clone(), degree: g.degree, partner: k + 1, tau_sign: 1 });
                ops.push(OpInfo { name: format!("{}'", g.name), degree: g.degree, partner: k, tau_sign: 1 });
            }
        }
    }
    ops
}

/// Pairing scale of each basis operation (−1 on second members of regular pairs).
fn op_scales(gens: &[GeneratorSpec]) -> Vec<i32> {
    let mut s = Vec::new();
    for g in gens {
        match g.symmetry {
            Symmetry::Regular => {
                s.push(1);
                s.push(-1);
            }
            _ => s.push(1),
        }
    }
    s
}

/// Canonical basis of the free component in arity 3 (sorted canonical trees).
pub fn tree_basis_3(gens: &[GeneratorSpec]) -> Vec<Expr> {
    let mut fa = FreeAlgebra::new(expand_ops(gens), vec![0; 3], vec![]);
    fa.normal_forms(&[0, 1, 2])
}

fn leaf0(_: u32) -> i64 {
    0
}

/// Binary generators plus an S₃-stable relation space in arity 3.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuadraticPresentation {
    pub name: String,
    pub generators: Vec<GeneratorSpec>,
    /// coordinates over `tree_basis_3(generators)`
    pub relations: SubspaceBasis,
}

/// One arity of a symmetric sequence: homogeneous basis with an S_n-action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeqComponent {
    pub labels: Vec<String>,
    pub degrees: Vec<i64>,
    pub module: SnModule,
}

impl SeqComponent {
    pub fn dim(&self) -> usize {
        self.degrees.len()
    }

    pub fn space(&self) -> GradedVectorSpace {
        GradedVectorSpace::new(self.labels.iter().cloned().zip(self.degrees.iter().copied()).collect())
    }

    pub fn dims_by_degree(&self) -> BTreeMap<i64, usize> {
        self.space().components()
    }

    /// Per degree, the character on all permutations (lexicographic order).
    pub fn graded_characters(&self) -> BTreeMap<i64, Vec<Q>> {
        let mut blocks: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
        for (i, d) in self.degrees.iter().enumerate() {
            blocks.entry(*d).or_default().push(i);
        }
        let perms = all_perms(self.module.n);
        let mats: Vec<RationalMatrix> = perms.iter().map(|p| self.module.action(p)).collect();
        blocks
            .into_iter()
            .map(|(d, idx)| {
                let ch = mats
                    .iter()
                    .map(|m| idx.iter().map(|&i| m.get(i, i)).fold(Q::zero(), |a, b| a + b))
                    .collect();
                (d, ch)
            })
            .collect()
    }

    /// Same dimensions per degree and same characters per degree.
    pub fn isomorphic(&self, other: &SeqComponent) -> bool {
        self.module.n == other.module.n && self.graded_characters() == other.graded_characters()
    }

    pub fn dual(&self) -> SeqComponent {
        SeqComponent {
            labels: self.labels.iter().map(|l| format!("{l}*")).collect(),
            degrees: self.degrees.iter().map(|d| -d).collect(),
            module: SnModule {
                n: self.module.n,
                dim: self.module.dim,
                generators: self.module.generators.iter().map(|g| g.transpose()).collect(),
            },
        }
    }

    /// `Λ_n^{⊗m} ⊗ (-)`: sign twist for odd `m`, degrees shifted by `−m(n−1)`.
    pub fn operadic_shift(&self, m: i64) -> SeqComponent {
        let n = self.module.n as i64;
        let module = if m.rem_euclid(2) == 1 { self.module.tensor(&SnModule::sign(self.module.n)) } else { self.module.clone() };
        SeqComponent {
            labels: self.labels.clone(),
            degrees: self.degrees.iter().map(|d| d - m * (n - 1)).collect(),
            module,
        }
    }
}

/// Arity-indexed family of graded S_n-modules, arities 1..=max_arity.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymmetricSequence {
    pub max_arity: usize,
    pub components: BTreeMap<usize, SeqComponent>,
}

impl SymmetricSequence {
    /// The unit: k in arity 1, zero elsewhere.
    pub fn unit(max_arity: usize) -> Self {
        let mut components = BTreeMap::new();
        components.insert(1, SeqComponent { labels: vec!["id".into()], degrees: vec![0], module: SnModule::trivial(1, 1) });
        SymmetricSequence { max_arity, components }
    }

    pub fn dims(&self) -> BTreeMap<usize, BTreeMap<i64, usize>> {
        self.components.iter().map(|(n, c)| (*n, c.dims_by_degree())).collect()
    }

    pub fn dual(&self) -> Self {
        SymmetricSequence {
            max_arity: self.max_arity,
            components: self.components.iter().map(|(n, c)| (*n, c.dual())).collect(),
        }
    }
}

pub fn operadic_shift(o: &SymmetricSequence, m: i64) -> SymmetricSequence {
    SymmetricSequence {
        max_arity: o.max_arity,
        components: o.components.iter().map(|(n, c)| (*n, c.operadic_shift(m))).collect(),
    }
}

/// The multilinear component of an operad, with its basis of normal-form trees.
#[derive(Clone, Debug)]
pub struct OperadComponent {
    pub arity: usize,
    pub basis: Vec<Expr>,
    pub component: SeqComponent,
}

impl QuadraticPresentation {
    /// Build from relation combinations (any trees on slots 0..2), closing under S₃.
    pub fn from_relation_trees(name: &str, generators: Vec<GeneratorSpec>, rels: &[Comb]) -> Self {
        let ops = expand_ops(&generators);
        let basis = tree_basis_3(&generators);
        let index: BTreeMap<Expr, usize> = basis.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let c = Canon { ops: &ops, leaf_deg: &leaf0 };
        let mut vecs = Vec::new();
        for r in rels {
            for p in all_perms(3) {
                let moved: Comb = r.iter().map(|(e, v)| (e.map_leaves(&|i| p[i as usize] as u32), v.clone())).collect();
                vecs.push(coords(&c.canonicalize_comb(&moved), &index));
            }
        }
        QuadraticPresentation {
            name: name.into(),
            generators,
            relations: SubspaceBasis::from_vectors(basis.len(), vecs),
        }
    }

    pub fn new(name: &str, generators: Vec<GeneratorSpec>, relation_vectors: Vec<Vec<Q>>) -> Result<Self> {
        if generators.is_empty() {
            return Err(Error::MalformedPresentation("no generators".into()));
        }
        let n = tree_basis_3(&generators).len();
        if let Some(bad) = relation_vectors.iter().find(|v| v.len() != n) {
            return Err(Error::MalformedPresentation(format!(
                "relation vector has length {} but the arity-3 tree basis has {n} elements",
                bad.len()
            )));
        }
        let p = QuadraticPresentation {
            name: name.into(),
            generators,
            relations: SubspaceBasis::from_vectors(n, relation_vectors.iter().map(|v| crate::linalg::sparse_from_dense(v))),
        };
        if !p.relations_are_equivariant() {
            return Err(Error::NonEquivariantRelations);
        }
        Ok(p)
    }

    pub fn ops(&self) -> Vec<OpInfo> {
        expand_ops(&self.generators)
    }

    pub fn tree_basis(&self) -> Vec<Expr> {
        tree_basis_3(&self.generators)
    }

    pub fn relation_combs(&self) -> Vec<Comb> {
        let basis = self.tree_basis();
        self.relations
            .vectors()
            .iter()
            .map(|v| v.iter().map(|(i, c)| (basis[*i].clone(), c.clone())).collect())
            .collect()
    }

    /// Generator space `E` with its S₂-action.
    pub fn generator_component(&self) -> SeqComponent {
        let ops = self.ops();
        let module = SnModule::from_generator_action(2, ops.len(), |_, j| vec![(ops[j].partner, q(ops[j].tau_sign as i64))]);
        SeqComponent {
            labels: ops.iter().map(|o| o.name.clone()).collect(),
            degrees: ops.iter().map(|o| o.degree).collect(),
            module,
        }
    }

    /// Free algebra over this presentation on leaves of the given degrees.
    pub fn free_algebra(&self, leaf_degrees: Vec<i64>) -> FreeAlgebra {
        FreeAlgebra::new(self.ops(), leaf_degrees, self.relation_combs())
    }

    /// Same generators, no relations.
    pub fn free(&self) -> QuadraticPresentation {
        QuadraticPresentation {
            name: format!("free({})", self.name),
            generators: self.generators.clone(),
            relations: SubspaceBasis::zero(self.tree_basis().len()),
        }
    }

    pub fn relations_are_equivariant(&self) -> bool {
        let basis = self.tree_basis();
        let ops = self.ops();
        let index: BTreeMap<Expr, usize> = basis.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let c = Canon { ops: &ops, leaf_deg: &leaf0 };
        for v in self.relations.vectors() {
            for i in 0..2 {
                let p = transposition(3, i);
                let moved: Comb = v
                    .iter()
                    .map(|(k, x)| (basis[*k].map_leaves(&|l| p[l as usize] as u32), x.clone()))
                    .collect();
                if !self.relations.contains(&coords(&c.canonicalize_comb(&moved), &index)) {
                    return false;
                }
            }
        }
        true
    }

    /// The presented operad in arity `n` (1 ≤ n ≤ 4).
    pub fn component(&self, n: usize) -> Result<OperadComponent> {
        if n == 0 || n > MAX_OPERAD_ARITY {
            return Err(Error::ArityOverflow { arity: n, bound: MAX_OPERAD_ARITY });
        }
        let mut fa = self.free_algebra(vec![0; n]);
        Ok(multilinear_component(&mut fa, n))
    }

    /// The quadratic dual operad `P^!`: generators `E^∨ = E^* ⊗ sgn`, relations `R^⊥`.
    pub fn koszul_dual(&self) -> QuadraticPresentation {
        let dual_gens: Vec<GeneratorSpec> = self
            .generators
            .iter()
            .map(|g| GeneratorSpec {
                name: dual_name(&g.name),
                degree: -g.degree,
                symmetry: match g.symmetry {
                    Symmetry::Symmetric => Symmetry::Antisymmetric,
                    Symmetry::Antisymmetric => Symmetry::Symmetric,
                    Symmetry::Regular => Symmetry::Regular,
                },
            })
            .collect();
        let ops = self.ops();
        let dops = expand_ops(&dual_gens);
        let scales = op_scales(&self.generators);
        let (shapes, signs) = shape_coordinates(&ops, &self.tree_basis());
        let (dshapes, dsigns) = shape_coordinates(&dops, &tree_basis_3(&dual_gens));
        assert_eq!(shapes.len(), dshapes.len());
        // pairing weight per shape (g, f, c)
        let weight: Vec<Q> = shapes
            .iter()
            .map(|&(g, f, _)| {
                let mut s = scales[g] * scales[f];
                if PAIRING_INNERMOST_FIRST && (ops[g].degree * ops[f].degree).rem_euclid(2) == 1 {
                    s = -s;
                }
                q(s as i64)
            })
            .collect();
        // rows: r in shape coordinates times the pairing weight
        let nshape = shapes.len();
        let rows: Vec<SparseVec> = self
            .relations
            .vectors()
            .iter()
            .map(|r| {
                let mut row: BTreeMap<usize, Q> = BTreeMap::new();
                for (k, sh) in shapes.iter().enumerate() {
                    let _ = sh;
                    let (ci, s) = signs[k];
                    if let Ok(pos) = r.binary_search_by_key(&ci, |(i, _)| *i) {
                        // canon_ci = s · shape_k
                        row.insert(k, &r[pos].1 * q(s as i64) * &weight[k]);
                    }
                }
                row.into_iter().filter(|(_, v)| !v.is_zero()).collect()
            })
            .collect();
        let m = RationalMatrix::from_rows(rows.len(), nshape, rows);
        let perp = m.kernel_basis();
        // back to canonical coordinates of the dual tree basis
        let dim_dual = dsigns.len();
        let vecs: Vec<SparseVec> = perp
            .vectors()
            .iter()
            .map(|w| {
                let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
                for (k, x) in w {
                    let (ci, s) = dsigns[*k];
                    *acc.entry(ci).or_insert_with(Q::zero) += x * q(s as i64);
                }
                acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
            })
            .collect();
        QuadraticPresentation {
            name: format!("{}!", self.name),
            generators: dual_gens,
            relations: SubspaceBasis::from_vectors(dim_dual, vecs),
        }
    }

    /// S₃-module structure on the relation space (basis: stored relation vectors).
    pub fn relation_component(&self) -> SeqComponent {
        let basis = self.tree_basis();
        let ops = self.ops();
        let index: BTreeMap<Expr, usize> = basis.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let c = Canon { ops: &ops, leaf_deg: &leaf0 };
        let rels = self.relations.vectors().to_vec();
        let module = SnModule::from_generator_action(3, rels.len(), |i, j| {
            let p = transposition(3, i);
            let moved: Comb = rels[j]
                .iter()
                .map(|(k, x)| (basis[*k].map_leaves(&|l| p[l as usize] as u32), x.clone()))
                .collect();
            let v = coords(&c.canonicalize_comb(&moved), &index);
            let co = self.relations.coordinates(&v).expect("relations are S3-stable");
            crate::linalg::sparse_from_dense(&co)
        });
        let degrees = rels
            .iter()
            .map(|v| {
                let (k, _) = v[0];
                basis[k].degree(&ops, &leaf0)
            })
            .collect();
        SeqComponent { labels: (0..rels.len()).map(|i| format!("r{i}")).collect(), degrees, module }
    }

    /// Quadratic dual cooperad data: cogenerators `E[1]`, corelations `R[2]`.
    pub fn quadratic_dual(&self) -> QuadraticCopresentation {
        let e = self.generator_component();
        let r = self.relation_component();
        QuadraticCopresentation {
            name: format!("{}⊥", self.name),
            cogenerators: SeqComponent { degrees: e.degrees.iter().map(|d| d - 1).collect(), ..e },
            corelations: SeqComponent { degrees: r.degrees.iter().map(|d| d - 2).collect(), ..r },
        }
    }

    /// Components in arities 1..=max as a symmetric sequence.
    pub fn sequence(&self, max_arity: usize) -> Result<SymmetricSequence> {
        let mut components = BTreeMap::new();
        for n in 1..=max_arity {
            components.insert(n, self.component(n)?.component);
        }
        Ok(SymmetricSequence { max_arity, components })
    }
}

fn dual_name(n: &str) -> String {
    match n.strip_suffix('^') {
        Some(base) => base.to_string(),
        None => format!("{n}^"),
    }
}

/// Sparse coordinates of a canonical combination.
fn coords(c: &Comb, index: &BTreeMap<Expr, usize>) -> SparseVec {
    let mut v: Vec<(usize, Q)> = c.iter().map(|(e, x)| (index[e], x.clone())).collect();
    v.sort_by_key(|(i, _)| *i);
    v
}

/// The shape basis `g(f(x_a,x_b),x_c)` and, per shape, `(canonical index, sign)` with
/// `canonical = sign · shape`.
fn shape_coordinates(ops: &[OpInfo], basis: &[Expr]) -> (Vec<(usize, usize, usize)>, Vec<(usize, i32)>) {
    let index: BTreeMap<Expr, usize> = basis.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
    let c = Canon { ops, leaf_deg: &leaf0 };
    let mut shapes = Vec::new();
    let mut signs = Vec::new();
    for cc in 0..3u32 {
        let (a, b) = ((cc + 1) % 3, (cc + 2) % 3);
        for g in 0..ops.len() {
            for f in 0..ops.len() {
                let t = Expr::node(g, Expr::node(f, Expr::Leaf(a), Expr::Leaf(b)), Expr::Leaf(cc));
                let (s, e) = c.canonicalize(&t).expect("shape trees never vanish");
                shapes.push((g, f, cc as usize));
                signs.push((index[&e], s));
            }
        }
    }
    (shapes, signs)
}

fn multilinear_component(fa: &mut FreeAlgebra, n: usize) -> OperadComponent {
    let m: Vec<u32> = (0..n as u32).collect();
    let basis = fa.normal_forms(&m);
    let index: BTreeMap<Expr, usize> = basis.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
    let mut gens = Vec::new();
    for i in 0..n.saturating_sub(1) {
        let p = transposition(n, i);
        let cols: Vec<SparseVec> = basis
            .iter()
            .map(|e| {
                let mut raw = Comb::new();
                add_term(&mut raw, e.map_leaves(&|l| p[l as usize] as u32), Q::one());
                coords(&fa.reduce(&raw), &index)
            })
            .collect();
        gens.push(RationalMatrix::from_columns(basis.len(), &cols));
    }
    let ops = fa.ops.clone();
    let labels = basis.iter().map(|e| e.render(&ops, &|i| format!("x{}", i + 1))).collect();
    let degrees = basis.iter().map(|e| fa.degree(e)).collect();
    OperadComponent {
        arity: n,
        component: SeqComponent { labels, degrees, module: SnModule { n, dim: basis.len(), generators: gens } },
        basis,
    }
}

/// Free operad component on the given generators.
pub fn free_operad_component(generators: &[GeneratorSpec], n: usize) -> Result<OperadComponent> {
    if n == 0 || n > MAX_OPERAD_ARITY {
        return Err(Error::ArityOverflow { arity: n, bound: MAX_OPERAD_ARITY });
    }
    let mut fa = FreeAlgebra::new(expand_ops(generators), vec![0; n], vec![]);
    Ok(multilinear_component(&mut fa, n))
}

pub fn presented_operad_component(p: &QuadraticPresentation, n: usize) -> Result<OperadComponent> {
    p.component(n)
}

/// Quadratic dual cooperad, truncated at arity 3.
#[derive(Clone, Debug)]
pub struct QuadraticCopresentation {
    pub name: String,
    /// arity 2: `E[1]`
    pub cogenerators: SeqComponent,
    /// arity 3: `R[2]`
    pub corelations: SeqComponent,
}

impl QuadraticCopresentation {
    pub fn component(&self, n: usize) -> Option<&SeqComponent> {
        match n {
            2 => Some(&self.cogenerators),
            3 => Some(&self.corelations),
            _ => None,
        }
    }
}

pub fn quadratic_dual(p: &QuadraticPresentation) -> QuadraticCopresentation {
    p.quadratic_dual()
}

/// Compose `f ∈ P(n)` with `g_i ∈ P(m_i)`; elements are combinations of
/// multilinear trees on leaves `0..arity`.
pub fn operad_compose(
    p: &QuadraticPresentation,
    f: &Comb,
    gs: &[(usize, Comb)],
    max_arity: usize,
) -> Result<(usize, Comb)> {
    let total: usize = gs.iter().map(|(m, _)| m).sum();
    if total > max_arity.min(MAX_OPERAD_ARITY) {
        return Err(Error::ArityOverflow { arity: total, bound: max_arity.min(MAX_OPERAD_ARITY) });
    }
    let ops = p.ops();
    let c = Canon { ops: &ops, leaf_deg: &leaf0 };
    // shift leaves of each g_i into its block
    let mut offsets = Vec::new();
    let mut off = 0u32;
    for (m, _) in gs {
        offsets.push(off);
        off += *m as u32;
    }
    let shifted: Vec<Comb> = gs
        .iter()
        .zip(&offsets)
        .map(|((_, g), o)| g.iter().map(|(e, v)| (e.map_leaves(&|l| l + o), v.clone())).collect())
        .collect();
    let mut out = Comb::new();
    for (tf, cf) in f {
        let mut partial: Vec<(Vec<Expr>, Q)> = vec![(Vec::new(), cf.clone())];
        for g in &shifted {
            let mut next = Vec::new();
            for (args, v) in &partial {
                for (e, w) in g {
                    let mut a = args.clone();
                    a.push(e.clone());
                    next.push((a, v * w));
                }
            }
            partial = next;
        }
        for (args, v) in partial {
            if let Some((s, e)) = c.substitute(tf, &args) {
                add_term(&mut out, e, v * q(s as i64));
            }
        }
    }
    let mut fa = p.free_algebra(vec![0; total]);
    Ok((total, fa.reduce(&out)))
}

/// `⊕_n X(n) ⊗_{S_n} V^{⊗n}` up to the sequence's max arity (coinvariants via invariants).
pub fn schur_apply(x: &SymmetricSequence, v: &GradedVectorSpace) -> GradedVectorSpace {
    let mut basis = Vec::new();
    for (n, comp) in &x.components {
        basis.extend(invariant_part(comp, v, *n).basis);
    }
    GradedVectorSpace::new(basis)
}

/// `(C(n) ⊗ V^{⊗n})^{S_n}`.
pub fn cofree_component(c: &SeqComponent, v: &GradedVectorSpace) -> GradedVectorSpace {
    invariant_part(c, v, c.module.n)
}

fn invariant_part(comp: &SeqComponent, v: &GradedVectorSpace, n: usize) -> GradedVectorSpace {
    let (tp, tuples) = SnModule::tensor_power(v, n);
    let total = comp.module.tensor(&tp);
    let vdeg = v.degrees();
    let degs: Vec<i64> = comp
        .degrees
        .iter()
        .flat_map(|d| tuples.iter().map(|t| d + t.iter().map(|&i| vdeg[i]).sum::<i64>()).collect::<Vec<_>>())
        .collect();
    let inv = total.invariants_subspace();
    GradedVectorSpace::new(
        inv.pivots().iter().enumerate().map(|(k, &p)| (format!("inv{n}_{k}"), degs[p])).collect(),
    )
}

/// `Hom(V^{⊗n}, V)` graded by `|out| − Σ|in|`.
pub fn endomorphism_component(v: &GradedVectorSpace, n: usize) -> GradedVectorSpace {
    let d = v.dim();
    let degs = v.degrees();
    let mut basis = Vec::new();
    let mut tuple = vec![0usize; n];
    loop {
        for out in 0..d {
            let deg = degs[out] - tuple.iter().map(|&i| degs[i]).sum::<i64>();
            basis.push((format!("{:?}->{}", tuple, out), deg));
        }
        // next tuple
        let mut k = n;
        loop {
            if k == 0 {
                return GradedVectorSpace::new(basis);
            }
            k -= 1;
            tuple[k] += 1;
            if tuple[k] < d {
                break;
            }
            tuple[k] = 0;
        }
        if d == 0 {
            return GradedVectorSpace::new(basis);
        }
    }
}

fn rel(terms: &[(i64, Expr)]) -> Comb {
    let mut c = Comb::new();
    for (s, e) in terms {
        add_term(&mut c, e.clone(), q(*s));
    }
    c
}

fn x(i: u32) -> Expr {
    Expr::Leaf(i)
}

fn n(op: usize, a: Expr, b: Expr) -> Expr {
    Expr::node(op, a, b)
}

/// Commutative associative: one symmetric degree-0 operation.
pub fn com() -> QuadraticPresentation {
    let assoc = rel(&[(1, n(0, n(0, x(0), x(1)), x(2))), (-1, n(0, x(0), n(0, x(1), x(2))))]);
    QuadraticPresentation::from_relation_trees("com", vec![GeneratorSpec::new("m", 0, Symmetry::Symmetric)], &[assoc])
}

/// Associative: the regular representation of S₂ in degree 0.
pub fn ass() -> QuadraticPresentation {
    let assoc = rel(&[(1, n(0, n(0, x(0), x(1)), x(2))), (-1, n(0, x(0), n(0, x(1), x(2))))]);
    QuadraticPresentation::from_relation_trees("ass", vec![GeneratorSpec::new("mu", 0, Symmetry::Regular)], &[assoc])
}

/// Lie: one antisymmetric degree-0 bracket, Jacobi.
pub fn lie() -> QuadraticPresentation {
    let jacobi = rel(&[
        (1, n(0, n(0, x(0), x(1)), x(2))),
        (1, n(0, n(0, x(1), x(2)), x(0))),
        (1, n(0, n(0, x(2), x(0)), x(1))),
    ]);
    QuadraticPresentation::from_relation_trees("lie", vec![GeneratorSpec::new("b", 0, Symmetry::Antisymmetric)], &[jacobi])
}

/// Gerstenhaber: symmetric product `m` of degree 0 and symmetric `l` of degree −1
/// (the bracket on the desuspension); `l(a,b) = (−1)^{|a|}[a,b]` for the usual bracket.
pub fn gerst() -> QuadraticPresentation {
    let (m, l) = (0, 1);
    let assoc = rel(&[(1, n(m, n(m, x(0), x(1)), x(2))), (-1, n(m, x(0), n(m, x(1), x(2))))]);
    let jacobi = rel(&[
        (1, n(l, n(l, x(0), x(1)), x(2))),
        (1, n(l, n(l, x(1), x(2)), x(0))),
        (1, n(l, n(l, x(2), x(0)), x(1))),
    ]);
    let leibniz = rel(&[
        (1, n(l, n(m, x(0), x(1)), x(2))),
        (-1, n(m, n(l, x(0), x(2)), x(1))),
        (-1, n(m, x(0), n(l, x(1), x(2)))),
    ]);
    QuadraticPresentation::from_relation_trees(
        "gerst",
        vec![GeneratorSpec::new("m", 0, Symmetry::Symmetric), GeneratorSpec::new("l", -1, Symmetry::Symmetric)],
        &[assoc, jacobi, leibniz],
    )
}

pub fn builtin(name: &str) -> Option<QuadraticPresentation> {
    match name {
        "com" => Some(com()),
        "ass" => Some(ass()),
        "lie" => Some(lie()),
        "gerst" => Some(gerst()),
        _ => None,
    }
}

/// Presentation file: generators and relation vectors over the sorted
/// canonical arity-3 tree basis. Coefficients are integers or "p/q" strings.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PresentationFile {
    pub name: String,
    pub generators: Vec<GeneratorSpec>,
    pub relations: Vec<Vec<serde_json::Value>>,
}

fn parse_coeff(v: &serde_json::Value) -> Result<Q> {
    match v {
        serde_json::Value::Number(num) => num
            .as_i64()
            .map(q)
            .ok_or_else(|| Error::MalformedPresentation(format!("coefficient {num} is not an integer"))),
        serde_json::Value::String(s) => s
            .trim()
            .parse::<Q>()
            .map_err(|_| Error::MalformedPresentation(format!("cannot parse coefficient {s:?}"))),
        other => Err(Error::MalformedPresentation(format!("unexpected coefficient {other}"))),
    }
}

impl PresentationFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::MalformedPresentation(e.to_string()))
    }

    pub fn into_presentation(self) -> Result<QuadraticPresentation> {
        let vecs = self
            .relations
            .iter()
            .map(|r| r.iter().map(parse_coeff).collect::<Result<Vec<Q>>>())
            .collect::<Result<Vec<_>>>()?;
        QuadraticPresentation::new(&self.name, self.generators, vecs)
    }

    pub fn from_presentation(p: &QuadraticPresentation) -> Self {
        let n = p.tree_basis().len();
        let relations = p
            .relations
            .vectors()
            .iter()
            .map(|v| {
                crate::linalg::dense_from_sparse(v, n)
                    .into_iter()
                    .map(|c| {
                        if c.is_integer() {
                            serde_json::Value::from(c.to_integer().to_string().parse::<i64>().unwrap_or(0))
                        } else {
                            serde_json::Value::String(c.to_string())
                        }
                    })
                    .collect()
            })
            .collect();
        PresentationFile { name: p.name.clone(), generators: p.generators.clone(), relations }
    }
}

/// Human-readable arity-3 tree basis (the order used by presentation files).
pub fn describe_tree_basis(generators: &[GeneratorSpec]) -> Vec<String> {
    let ops = expand_ops(generators);
    tree_basis_3(generators).iter().map(|e| e.render(&ops, &|i| format!("x{}", i + 1))).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims(p: &QuadraticPresentation, n: usize) -> usize {
        p.component(n).unwrap().basis.len()
    }

    #[test]
    fn builtin_arity_three_dimensions() {
        assert_eq!(com().relations.dim(), 2);
        assert_eq!(lie().relations.dim(), 1);
        assert_eq!(ass().relations.dim(), 6);
        assert_eq!(gerst().relations.dim(), 6);
        assert_eq!(dims(&com(), 3), 1);
        assert_eq!(dims(&lie(), 3), 2);
        assert_eq!(dims(&ass(), 3), 6);
        assert_eq!(dims(&gerst(), 3), 6);
    }

    #[test]
    fn gerst_arity_two_degrees() {
        let c = gerst().component(2).unwrap().component;
        assert_eq!(c.dims_by_degree(), BTreeMap::from([(-1, 1), (0, 1)]));
    }

    #[test]
    fn free_component_sizes() {
        assert_eq!(free_operad_component(&com().generators, 3).unwrap().basis.len(), 3);
        assert_eq!(free_operad_component(&ass().generators, 3).unwrap().basis.len(), 12);
        assert_eq!(free_operad_component(&ass().generators, 2).unwrap().basis.len(), 2);
    }

    #[test]
    fn com_associativity_collapses() {
        let p = com();
        let mut m = Comb::new();
        m.insert(n(0, x(0), x(1)), Q::one());
        let mut id = Comb::new();
        id.insert(x(0), Q::one());
        let (_, left) = operad_compose(&p, &m, &[(2, m.clone()), (1, id.clone())], 4).unwrap();
        let (_, right) = operad_compose(&p, &m, &[(1, id), (2, m.clone())], 4).unwrap();
        assert_eq!(left, right);
        assert_eq!(left.len(), 1);
    }

    #[test]
    fn shift_of_com_in_arity_two() {
        let c = com().component(2).unwrap().component.operadic_shift(-1);
        assert_eq!(c.degrees, vec![1]);
        assert_eq!(c.module.characters(), vec![q(1), q(-1)]);
    }

    #[test]
    fn endomorphism_examples() {
        assert_eq!(endomorphism_component(&GradedVectorSpace::concentrated(2, 0), 2).dim(), 8);
        let odd = GradedVectorSpace::concentrated(1, 1);
        assert_eq!(endomorphism_component(&odd, 2).components(), BTreeMap::from([(-1, 1)]));
    }

    #[test]
    fn koszul_duals_of_builtins() {
        let cd = com().koszul_dual();
        assert!(cd.relations_are_equivariant());
        assert_eq!(dims(&cd, 3), 2);
        assert_eq!(dims(&cd, 4), 6);
        let ld = lie().koszul_dual();
        assert_eq!(dims(&ld, 3), 1);
        assert_eq!(dims(&ld, 4), 1);
        let ad = ass().koszul_dual();
        assert!(ad.relations_are_equivariant());
        assert_eq!(dims(&ad, 3), 6);
        assert_eq!(dims(&ad, 4), 24);
    }

    #[test]
    fn gerst_dual_arity_four() {
        let gd = gerst().koszul_dual();
        assert!(gd.relations_are_equivariant());
        assert_eq!(gd.relations.dim(), 6);
        assert_eq!(dims(&gerst(), 4), 24);
        assert_eq!(dims(&gd, 4), 24);
    }

    #[test]
    fn double_dual_is_identity() {
        for p in [com(), lie(), ass(), gerst()] {
            let dd = p.koszul_dual().koszul_dual();
            assert_eq!(dd.generators, p.generators, "{}", p.name);
            assert_eq!(dd.relations, p.relations, "{}", p.name);
        }
    }

    #[test]
    fn dual_relation_dimension_matches_relations() {
        for p in [com(), lie(), ass(), gerst()] {
            let d = p.koszul_dual();
            assert_eq!(dims(&d, 3), p.relations.dim(), "{}", p.name);
        }
    }

    fn cooperad_vs_shifted_dual(p: &QuadraticPresentation, target: &QuadraticPresentation, m: i64) {
        let perp = p.quadratic_dual();
        for n in 2..=3 {
            let expected = target.component(n).unwrap().component.operadic_shift(m).dual();
            assert!(perp.component(n).unwrap().isomorphic(&expected), "{} arity {n}", p.name);
        }
    }

    #[test]
    fn quadratic_dual_cooperads() {
        cooperad_vs_shifted_dual(&com(), &lie(), -1);
        cooperad_vs_shifted_dual(&lie(), &com(), -1);
        cooperad_vs_shifted_dual(&ass(), &ass(), -1);
        // gerst is self-dual up to a double operadic shift
        cooperad_vs_shifted_dual(&gerst(), &gerst(), -2);
    }
}
