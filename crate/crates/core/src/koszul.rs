//! Koszul complexes, O∞-structures and coderivation complexes.
//!
//! Everything is computed in the dual picture: the cofree `P⊥`-coalgebra on a
//! finite space `X` is dual to the free `P^!`-algebra on generators `w_h`
//! (`h` running over a basis of `X`, `|w_h| = 1 − |h|`), a coderivation
//! `X`-component `C → X` is a derivation `w_h ↦ (trees in w)`, and `Q² = 0`
//! becomes `D² = 0`. Truncation keeps trees with at most `arity_bound` leaves
//! and total leaf filtration at most `filt_bound`; because structure maps never
//! increase filtration, the truncated objects are quotient complexes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{primary_ops, BasisElem, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::graded::GradedVectorSpace;
use crate::linalg::{cohomology_dim, q, RationalMatrix, SparseVec, SubspaceBasis, Q};
use crate::operad::{QuadraticPresentation, MAX_OPERAD_ARITY};
use crate::tree::{add_comb, add_term, scale_comb, Comb, Expr, FreeAlgebra, OpInfo};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Truncation {
    pub filt_bound: i64,
    pub arity_bound: usize,
}

/// Sign attached to `g^∨(w_a, w_b)` in the dual of `g(a, b)`.
pub fn structure_sign(deg_a: i64, _deg_b: i64) -> i64 {
    if deg_a.rem_euclid(2) == 1 {
        -1
    } else {
        1
    }
}

fn sgn(e: i64) -> Q {
    if e.rem_euclid(2) == 1 {
        -Q::one()
    } else {
        Q::one()
    }
}

/// Free `P^!`-algebra on the duals of a finite basis, with truncation.
#[derive(Clone)]
pub struct DualModel {
    pub presentation: QuadraticPresentation,
    pub dual: QuadraticPresentation,
    pub universe: Vec<BasisElem>,
    pub trunc: Truncation,
    pub free: FreeAlgebra,
    /// generator index of each dual basis operation
    pub op_generator: Vec<usize>,
}

impl DualModel {
    pub fn new(p: &QuadraticPresentation, universe: Vec<BasisElem>, trunc: Truncation) -> Self {
        let dual = p.koszul_dual();
        let degs = universe.iter().map(|b| 1 - b.degree).collect();
        let free = FreeAlgebra::new(dual.ops(), degs, dual.relation_combs());
        let prim = primary_ops(&dual);
        let nops = dual.ops().len();
        let op_generator = (0..nops).map(|o| prim.iter().rposition(|&s| s <= o).unwrap()).collect();
        DualModel { presentation: p.clone(), dual, universe, trunc, free, op_generator }
    }

    pub fn ops(&self) -> &[OpInfo] {
        &self.free.ops
    }

    pub fn generator_degree(&self, h: u32) -> i64 {
        1 - self.universe[h as usize].degree
    }

    pub fn filt(&self, e: &Expr) -> i64 {
        e.leaves().iter().map(|&h| self.universe[h as usize].filt).sum()
    }

    pub fn weight(&self, e: &Expr) -> i64 {
        e.leaves().iter().map(|&h| self.universe[h as usize].weight).sum()
    }

    pub fn degree(&self, e: &Expr) -> i64 {
        self.free.degree(e)
    }

    pub fn keep(&self, e: &Expr) -> bool {
        e.num_leaves() <= self.trunc.arity_bound && self.filt(e) <= self.trunc.filt_bound
    }

    /// Number of dual operations of each generator type in a tree.
    pub fn op_counts(&self, e: &Expr) -> Vec<usize> {
        let mut c = vec![0; self.dual.generators.len()];
        for o in e.ops() {
            c[self.op_generator[o]] += 1;
        }
        c
    }

    pub fn truncate(&self, c: &Comb) -> Comb {
        c.iter().filter(|(e, _)| self.keep(e)).map(|(e, v)| (e.clone(), v.clone())).collect()
    }

    pub fn normal_forms(&mut self, m: &[u32]) -> Vec<Expr> {
        self.free.normal_forms(m)
    }

    /// Non-decreasing leaf multisets of the given size within the filtration bound.
    pub fn multisets(&self, size: usize) -> Vec<Vec<u32>> {
        fn rec(u: &[BasisElem], size: usize, start: usize, budget: i64, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
            if cur.len() == size {
                out.push(cur.clone());
                return;
            }
            for h in start..u.len() {
                if u[h].filt <= budget {
                    cur.push(h as u32);
                    rec(u, size, h, budget - u[h].filt, cur, out);
                    cur.pop();
                }
            }
        }
        let mut out = Vec::new();
        rec(&self.universe, size, 0, self.trunc.filt_bound, &mut Vec::new(), &mut out);
        out
    }
}

/// Degrees of everything preceding each leaf in the prefix reading.
fn prefix_degrees(e: &Expr, ops: &[OpInfo], leaf_deg: &dyn Fn(u32) -> i64) -> Vec<i64> {
    fn walk(e: &Expr, ops: &[OpInfo], ld: &dyn Fn(u32) -> i64, acc: &mut i64, out: &mut Vec<i64>) {
        match e {
            Expr::Leaf(h) => {
                out.push(*acc);
                *acc += ld(*h);
            }
            Expr::Node(o, a, b) => {
                *acc += ops[*o as usize].degree;
                walk(a, ops, ld, acc, out);
                walk(b, ops, ld, acc, out);
            }
        }
    }
    let mut out = Vec::new();
    walk(e, ops, leaf_deg, &mut 0, &mut out);
    out
}

/// Replace the `pos`-th leaf (left to right) by `sub`.
fn replace_leaf(e: &Expr, pos: usize, sub: &Expr) -> Expr {
    fn go(e: &Expr, pos: usize, sub: &Expr, seen: &mut usize) -> Expr {
        match e {
            Expr::Leaf(_) => {
                let r = if *seen == pos { sub.clone() } else { e.clone() };
                *seen += 1;
                r
            }
            Expr::Node(o, a, b) => {
                let na = go(a, pos, sub, seen);
                let nb = go(b, pos, sub, seen);
                Expr::Node(*o, Box::new(na), Box::new(nb))
            }
        }
    }
    go(e, pos, sub, &mut 0)
}

/// A derivation of the free `P^!`-algebra, given on generators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Derivation {
    pub degree: i64,
    pub images: BTreeMap<u32, Comb>,
}

impl Derivation {
    pub fn zero(degree: i64) -> Self {
        Derivation { degree, images: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.images.values().all(|c| c.is_empty())
    }

    pub fn on(&self, h: u32) -> Comb {
        self.images.get(&h).cloned().unwrap_or_default()
    }

    pub fn set(&mut self, h: u32, c: Comb) {
        if c.is_empty() {
            self.images.remove(&h);
        } else {
            self.images.insert(h, c);
        }
    }

    pub fn add_scaled(&mut self, other: &Derivation, s: &Q) {
        for (h, c) in &other.images {
            let mut cur = self.on(*h);
            add_comb(&mut cur, c, s);
            self.set(*h, cur);
        }
    }

    pub fn scaled(&self, s: &Q) -> Derivation {
        let mut d = Derivation::zero(self.degree);
        d.add_scaled(self, s);
        d
    }

    /// Keep only image trees with the given number of leaves.
    pub fn arity_part(&self, leaves: usize) -> Derivation {
        let mut d = Derivation::zero(self.degree);
        for (h, c) in &self.images {
            d.set(*h, c.iter().filter(|(e, _)| e.num_leaves() == leaves).map(|(e, v)| (e.clone(), v.clone())).collect());
        }
        d
    }

    /// Apply to an element (truncated, in normal form).
    pub fn apply(&self, model: &mut DualModel, x: &Comb) -> Comb {
        let mut raw = Comb::new();
        let ops = model.free.ops.clone();
        for (tree, c) in x {
            let leaves = tree.leaves();
            let pre = {
                let ld = |i: u32| model.generator_degree(i);
                prefix_degrees(tree, &ops, &ld)
            };
            for (pos, h) in leaves.iter().enumerate() {
                let Some(img) = self.images.get(h) else { continue };
                let s = sgn(self.degree * pre[pos]);
                for (t, v) in img {
                    let new = replace_leaf(tree, pos, t);
                    if model.keep(&new) {
                        add_term(&mut raw, new, c * v * &s);
                    }
                }
            }
        }
        model.free.reduce(&raw)
    }

    /// Graded commutator `[a, b] = a∘b − (−1)^{|a||b|} b∘a` on the given generators.
    pub fn bracket(model: &mut DualModel, a: &Derivation, b: &Derivation, gens: &[u32]) -> Derivation {
        let mut out = Derivation::zero(a.degree + b.degree);
        let s = -sgn(a.degree * b.degree);
        for &h in gens {
            let mut v = a.apply(model, &b.on(h));
            let w = b.apply(model, &a.on(h));
            add_comb(&mut v, &w, &s);
            out.set(h, v);
        }
        out
    }

    pub fn square_is_zero(&self, model: &mut DualModel) -> bool {
        let gens: Vec<u32> = (0..model.universe.len() as u32).collect();
        gens.iter().all(|&h| {
            let x = self.on(h);
            self.apply(model, &x).is_empty()
        })
    }
}

/// Reduce a raw combination (no filtration cut; arity cut only).
fn reduce_untruncated(model: &mut DualModel, raw: &Comb) -> Comb {
    let a = model.trunc.arity_bound;
    let kept: Comb = raw.iter().filter(|(e, _)| e.num_leaves() <= a).map(|(e, v)| (e.clone(), v.clone())).collect();
    model.free.reduce(&kept)
}

/// Derivations dual to the differential and to each generating operation of `alg`.
/// `alg.basis` must be the model's universe.
pub fn structure_parts(model: &mut DualModel, alg: &FiniteAlgebra) -> (Derivation, Vec<Derivation>) {
    assert_eq!(alg.basis, model.universe, "algebra basis must match the model universe");
    let mut d1 = Derivation::zero(1);
    for (hp, dv) in alg.differential.iter().enumerate() {
        for (h, c) in dv {
            let mut cur = d1.on(*h as u32);
            add_term(&mut cur, Expr::Leaf(hp as u32), c.clone());
            d1.set(*h as u32, cur);
        }
    }
    let prim = primary_ops(&model.dual);
    let mut parts = Vec::new();
    for (g, table) in alg.products.iter().enumerate() {
        let mut raw: BTreeMap<u32, Comb> = BTreeMap::new();
        let mut keys: Vec<_> = table.keys().copied().collect();
        keys.sort();
        for (a, b) in keys {
            let s = q(structure_sign(alg.basis[a].degree, alg.basis[b].degree));
            let tree = Expr::node(prim[g], Expr::Leaf(a as u32), Expr::Leaf(b as u32));
            for (h, c) in &table[&(a, b)] {
                add_term(raw.entry(*h as u32).or_default(), tree.clone(), c * &s);
            }
        }
        let mut d = Derivation::zero(1);
        for (h, c) in raw {
            let r = reduce_untruncated(model, &c);
            d.set(h, r);
        }
        parts.push(d);
    }
    (d1, parts)
}

/// O∞-structure on a finite space, stored as the dual derivation split by arity
/// (number of leaves): component `i` is dual to `Q_i`.
#[derive(Clone)]
pub struct OInfinityStructure {
    pub model: DualModel,
    pub components: BTreeMap<usize, Derivation>,
    pub max_arity: usize,
}

impl std::fmt::Debug for OInfinityStructure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OInfinityStructure")
            .field("dim", &self.model.universe.len())
            .field("components", &self.components)
            .field("max_arity", &self.max_arity)
            .finish()
    }
}

impl OInfinityStructure {
    pub fn underlying(&self) -> GradedVectorSpace {
        GradedVectorSpace::new(self.model.universe.iter().map(|b| (b.label.clone(), b.degree)).collect())
    }

    pub fn component(&self, i: usize) -> Derivation {
        self.components.get(&i).cloned().unwrap_or_else(|| Derivation::zero(1))
    }

    pub fn total(&self) -> Derivation {
        let mut d = Derivation::zero(1);
        for c in self.components.values() {
            d.add_scaled(c, &Q::one());
        }
        d
    }

    pub fn set_component(&mut self, i: usize, d: Derivation) {
        if d.is_zero() {
            self.components.remove(&i);
        } else {
            self.components.insert(i, d);
        }
    }
}

/// Strict structure of an algebra: `Q₁ = d`, `Q₂` from the operations, `Q_i = 0` for `i > 2`.
pub fn oinfinity_from_algebra(alg: &FiniteAlgebra, trunc: Truncation) -> OInfinityStructure {
    let mut model = DualModel::new(&alg.presentation, alg.basis.clone(), trunc);
    let (d1, parts) = structure_parts(&mut model, alg);
    let mut q2 = Derivation::zero(1);
    for p in &parts {
        q2.add_scaled(p, &Q::one());
    }
    let mut s = OInfinityStructure { model, components: BTreeMap::new(), max_arity: trunc.arity_bound };
    s.set_component(1, d1);
    s.set_component(2, q2);
    s
}

/// `Q² = 0` on all cofree components within the truncation.
pub fn check_oinfinity(s: &mut OInfinityStructure) -> bool {
    let d = s.total();
    d.square_is_zero(&mut s.model)
}

// ---------------------------------------------------------------------------
// Koszul complexes

/// Free `P`-algebra on `V` up to the given weight, with weight = filtration = number of leaves.
pub fn free_algebra_on(p: &QuadraticPresentation, v: &GradedVectorSpace, max_weight: usize) -> FiniteAlgebra {
    let mut fa = p.free_algebra(v.degrees());
    let nv = v.dim() as u32;
    let mut basis = Vec::new();
    let mut elems: Vec<Expr> = Vec::new();
    for size in 1..=max_weight {
        for m in multisets_of(nv, size) {
            for e in fa.normal_forms(&m) {
                let label = e.render(&fa.ops, &|i| v.basis[i as usize].0.clone());
                basis.push(BasisElem { label, degree: fa.degree(&e), weight: size as i64, filt: size as i64 });
                elems.push(e);
            }
        }
    }
    let index: HashMap<Expr, usize> = elems.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
    let mut alg = FiniteAlgebra::zero(p.clone(), basis);
    let prim = primary_ops(p);
    for (g, &op) in prim.iter().enumerate() {
        for (i, a) in elems.iter().enumerate() {
            for (j, b) in elems.iter().enumerate() {
                if a.num_leaves() + b.num_leaves() > max_weight {
                    continue;
                }
                let ca: Comb = [(a.clone(), Q::one())].into_iter().collect();
                let cb: Comb = [(b.clone(), Q::one())].into_iter().collect();
                let r = fa.apply(op, &ca, &cb);
                let mut v: SparseVec = r.into_iter().map(|(e, c)| (index[&e], c)).collect();
                v.sort_by_key(|(k, _)| *k);
                if !v.is_empty() {
                    alg.products[g].insert((i, j), v);
                }
            }
        }
    }
    alg
}

fn multisets_of(n: u32, size: usize) -> Vec<Vec<u32>> {
    fn rec(n: u32, size: usize, start: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, size, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, size, 0, &mut Vec::new(), &mut out);
    out
}

/// One chain space: normal-form trees with their degrees and bigrading counts.
#[derive(Clone, Debug)]
pub struct ChainSpace {
    pub basis: Vec<Expr>,
    pub degrees: Vec<i64>,
    pub counts: Vec<Vec<usize>>,
}

impl ChainSpace {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }
}

/// Arity-`n` block: spaces indexed by the number of cogenerators `k = 1..=n`,
/// with the dual differential `k → k+1` (the transpose of `Q`, which lowers `k`).
#[derive(Clone, Debug)]
pub struct KoszulBlock {
    pub arity: usize,
    pub spaces: Vec<ChainSpace>,
    pub differentials: Vec<RationalMatrix>,
    /// the same differential split by generator type
    pub parts: Vec<Vec<RationalMatrix>>,
}

impl KoszulBlock {
    /// Cohomology dimension at each `k`.
    pub fn cohomology(&self) -> Result<Vec<usize>> {
        let n = self.spaces.len();
        (0..n)
            .map(|k| {
                let d_in = if k == 0 {
                    RationalMatrix::zeros(self.spaces[0].dim(), 0)
                } else {
                    self.differentials[k - 1].clone()
                };
                let d_out = if k + 1 < n {
                    self.differentials[k].clone()
                } else {
                    RationalMatrix::zeros(0, self.spaces[k].dim())
                };
                cohomology_dim(&d_in, &d_out)
            })
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct KoszulComplex {
    pub presentation: QuadraticPresentation,
    pub input: GradedVectorSpace,
    pub blocks: BTreeMap<usize, KoszulBlock>,
}

fn koszul_block(p: &QuadraticPresentation, v: &GradedVectorSpace, n: usize) -> KoszulBlock {
    let alg = free_algebra_on(p, v, n);
    let trunc = Truncation { filt_bound: n as i64, arity_bound: n };
    let mut model = DualModel::new(p, alg.basis.clone(), trunc);
    let (_, parts) = structure_parts(&mut model, &alg);
    let mut spaces = Vec::new();
    for k in 1..=n {
        let mut basis = Vec::new();
        for m in model.multisets(k) {
            if model_filt(&model, &m) != n as i64 {
                continue;
            }
            basis.extend(model.normal_forms(&m));
        }
        let degrees = basis.iter().map(|e| model.degree(e)).collect();
        let counts = basis.iter().map(|e| model.op_counts(e)).collect();
        spaces.push(ChainSpace { basis, degrees, counts });
    }
    let mut differentials = Vec::new();
    let mut split: Vec<Vec<RationalMatrix>> = vec![Vec::new(); parts.len()];
    for k in 0..n.saturating_sub(1) {
        let target: HashMap<Expr, usize> = spaces[k + 1].basis.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let mut total = vec![Vec::new(); spaces[k].dim()];
        for (g, part) in parts.iter().enumerate() {
            let cols: Vec<SparseVec> = spaces[k]
                .basis
                .iter()
                .map(|e| {
                    let x: Comb = [(e.clone(), Q::one())].into_iter().collect();
                    to_coords(&part.apply(&mut model, &x), &target)
                })
                .collect();
            for (i, c) in cols.iter().enumerate() {
                total[i] = crate::linalg::axpy(&total[i], &Q::one(), c);
            }
            split[g].push(RationalMatrix::from_columns(spaces[k + 1].dim(), &cols));
        }
        differentials.push(RationalMatrix::from_columns(spaces[k + 1].dim(), &total));
    }
    KoszulBlock { arity: n, spaces, differentials, parts: split }
}

fn model_filt(model: &DualModel, m: &[u32]) -> i64 {
    m.iter().map(|&h| model.universe[h as usize].filt).sum()
}

fn to_coords(c: &Comb, index: &HashMap<Expr, usize>) -> SparseVec {
    let mut v: SparseVec = c
        .iter()
        .map(|(e, x)| (*index.get(e).unwrap_or_else(|| panic!("term outside the target block")), x.clone()))
        .collect();
    v.sort_by_key(|(i, _)| *i);
    v
}

/// The complex dual to `(𝔽*_{P⊥}(𝔽_P(V)), Q)`, split by arity (= `V`-weight).
pub fn build_koszul_complex(p: &QuadraticPresentation, v: &GradedVectorSpace, max_arity: usize) -> Result<KoszulComplex> {
    if max_arity > MAX_OPERAD_ARITY {
        return Err(Error::ArityOverflow { arity: max_arity, bound: MAX_OPERAD_ARITY });
    }
    let blocks: BTreeMap<usize, KoszulBlock> =
        (1..=max_arity).into_par_iter().map(|n| (n, koszul_block(p, v, n))).collect();
    Ok(KoszulComplex { presentation: p.clone(), input: v.clone(), blocks })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ArityReport {
    pub arity: usize,
    pub acyclic: bool,
    /// cohomology per cogenerator count `k = 1..=n`
    pub cohomology: Vec<usize>,
}

/// Per arity: is the block exact (arity ≥ 2) / equal to `V` (arity 1)?
pub fn koszulity_check(
    p: &QuadraticPresentation,
    v: &GradedVectorSpace,
    max_arity: usize,
) -> Result<BTreeMap<usize, ArityReport>> {
    let c = build_koszul_complex(p, v, max_arity)?;
    let mut out = BTreeMap::new();
    for (n, b) in &c.blocks {
        let h = b.cohomology()?;
        let acyclic = if *n == 1 { h == vec![v.dim()] } else { h.iter().all(|&d| d == 0) };
        out.insert(*n, ArityReport { arity: *n, acyclic, cohomology: h });
    }
    Ok(out)
}

/// Bicomplex route for two-generator presentations: vertical cohomology for the
/// first generator's part, then the induced differential of the second.
/// Returns `true` when `E₂` vanishes in the block (which forces acyclicity).
pub fn bicomplex_acyclic(block: &KoszulBlock) -> Result<bool> {
    if block.parts.len() != 2 {
        return Err(Error::InvalidStructure("bicomplex check needs exactly two generators".into()));
    }
    let n = block.spaces.len();
    // bidegree (p, q) = (#second-type ops, #first-type ops)
    let mut cells: BTreeMap<(usize, usize), Vec<(usize, usize)>> = BTreeMap::new();
    for (k, s) in block.spaces.iter().enumerate() {
        for (i, c) in s.counts.iter().enumerate() {
            cells.entry((c[1], c[0])).or_default().push((k, i));
        }
    }
    let sub = |m: &RationalMatrix, rows: &[(usize, usize)], cols: &[(usize, usize)]| -> RationalMatrix {
        let rpos: HashMap<usize, usize> = rows.iter().enumerate().map(|(j, &(_, i))| (i, j)).collect();
        let columns: Vec<SparseVec> = cols
            .iter()
            .map(|&(_, i)| {
                let mut v: SparseVec = Vec::new();
                for (r, x) in m.transpose().row(i) {
                    if let Some(&j) = rpos.get(r) {
                        v.push((j, x.clone()));
                    }
                }
                v.sort_by_key(|(j, _)| *j);
                v
            })
            .collect();
        RationalMatrix::from_columns(rows.len(), &columns)
    };
    let empty: Vec<(usize, usize)> = Vec::new();
    let cell = |p: i64, q: i64| -> &Vec<(usize, usize)> {
        if p < 0 || q < 0 {
            return &empty;
        }
        cells.get(&(p as usize, q as usize)).unwrap_or(&empty)
    };
    let k_of = |p: usize, q: usize| p + q; // space index
    // vertical: first-generator part, (p, q) → (p, q+1); horizontal: (p, q) → (p+1, q)
    let vert = |p: usize, q: usize| -> RationalMatrix {
        let k = k_of(p, q);
        let (src, dst) = (cell(p as i64, q as i64), cell(p as i64, q as i64 + 1));
        if k + 1 >= n {
            return RationalMatrix::zeros(dst.len(), src.len());
        }
        sub(&block.parts[0][k], dst, src)
    };
    let horiz = |p: usize, q: usize| -> RationalMatrix {
        let k = k_of(p, q);
        let (src, dst) = (cell(p as i64, q as i64), cell(p as i64 + 1, q as i64));
        if k + 1 >= n {
            return RationalMatrix::zeros(dst.len(), src.len());
        }
        sub(&block.parts[1][k], dst, src)
    };
    let e1_dim = |p: usize, q: usize| -> Result<(usize, SubspaceBasis, SubspaceBasis)> {
        let v_in = if q == 0 { RationalMatrix::zeros(cell(p as i64, 0).len(), 0) } else { vert(p, q - 1) };
        let v_out = vert(p, q);
        let d = cohomology_dim(&v_in, &v_out)?;
        Ok((d, v_out.kernel_basis(), v_in.image_basis()))
    };
    let maxk = n;
    for q in 0..maxk {
        // E1 row at fixed q, p = 0..; d1 induced by the horizontal part
        let mut dims = Vec::new();
        let mut d1_rank = Vec::new();
        for p in 0..maxk {
            if p + q >= n {
                break;
            }
            let (d, z, _) = e1_dim(p, q)?;
            dims.push(d);
            // rank of d1: dim(D_h Z + B') − dim B'
            let b_next = if p + 1 + q < n {
                let (_, _, b) = e1_dim(p + 1, q)?;
                b
            } else {
                SubspaceBasis::zero(0)
            };
            if p + 1 + q >= n {
                d1_rank.push(0);
                continue;
            }
            let h = horiz(p, q);
            let imgs: Vec<SparseVec> = z.vectors().iter().map(|zv| h.mul_vec(zv)).collect();
            let span = b_next.sum(&SubspaceBasis::from_vectors(h.nrows(), imgs));
            d1_rank.push(span.dim() - b_next.dim());
        }
        for p in 0..dims.len() {
            let prev = if p == 0 { 0 } else { d1_rank[p - 1] };
            if dims[p] - d1_rank[p] - prev != 0 {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

// ---------------------------------------------------------------------------
// Coderivation complex of a Gerstenhaber algebra

/// One derivation component `w_h ↦ t`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Component {
    pub output: u32,
    pub tree: Expr,
}

/// Basis of one `(δ, p, q)` block.
#[derive(Clone, Debug, Default)]
pub struct HomBlock {
    pub components: Vec<Component>,
    pub degrees: Vec<i64>,
}

impl HomBlock {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    pub fn index(&self) -> HashMap<Component, usize> {
        self.components.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect()
    }

    pub fn derivation(&self, i: usize, v: &Q) -> Derivation {
        let c = &self.components[i];
        let mut d = Derivation::zero(self.degrees[i]);
        d.set(c.output, [(c.tree.clone(), v.clone())].into_iter().collect());
        d
    }
}

/// Blocks keyed by `(δ, p, q)`: `δ` map weight, `p` = number of bracket-type
/// and `q` = number of product-type dual operations (arity `p + q + 1`).
pub struct CoderivationComplex {
    pub algebra: FiniteAlgebra,
    pub model: DualModel,
    pub deltas: Vec<i64>,
    pub q_m_part: Derivation,
    pub q_l_part: Derivation,
    pub blocks: BTreeMap<(i64, usize, usize), HomBlock>,
    /// `Q_m`: `(δ,p,q) → (δ,p,q+1)`
    pub q_m: BTreeMap<(i64, usize, usize), RationalMatrix>,
    /// `Q_ℓ`: `(δ,p,q) → (δ,p+1,q)`
    pub q_l: BTreeMap<(i64, usize, usize), RationalMatrix>,
    /// components restricted to filtration-non-increasing maps
    pub filtered: bool,
}

/// Components `(h, t)` of map weight `δ` with `r` leaves within the truncation.
pub fn hom_components(model: &mut DualModel, delta: i64, leaves: usize, filtered: bool) -> Vec<Component> {
    let mut out = Vec::new();
    let by_weight: BTreeMap<i64, Vec<u32>> = {
        let mut m: BTreeMap<i64, Vec<u32>> = BTreeMap::new();
        for (i, b) in model.universe.iter().enumerate() {
            m.entry(b.weight).or_default().push(i as u32);
        }
        m
    };
    let out_bound = model.trunc.filt_bound + delta;
    for m in model.multisets(leaves) {
        let w: i64 = m.iter().map(|&h| model.universe[h as usize].weight).sum();
        let f: i64 = m.iter().map(|&h| model.universe[h as usize].filt).sum();
        let Some(hs) = by_weight.get(&(w + delta)) else { continue };
        if w + delta > out_bound {
            continue;
        }
        let nfs = model.normal_forms(&m);
        for &h in hs {
            if filtered && model.universe[h as usize].filt > f {
                continue;
            }
            for t in &nfs {
                out.push(Component { output: h, tree: t.clone() });
            }
        }
    }
    out.sort();
    out
}

/// Universe needed for a window of map weights.
pub fn universe_bound(weight_bound: i64, deltas: &[i64]) -> i64 {
    weight_bound + deltas.iter().copied().max().unwrap_or(0).max(0)
}

impl CoderivationComplex {
    /// `alg` must be built with weight bound `universe_bound(weight_bound, deltas)`.
    pub fn build(alg: &FiniteAlgebra, weight_bound: i64, arity_bound: usize, deltas: &[i64], filtered: bool) -> Result<Self> {
        if alg.presentation.generators.len() != 2 {
            return Err(Error::InvalidStructure("coderivation complex needs a two-generator (m, l) presentation".into()));
        }
        let trunc = Truncation { filt_bound: weight_bound, arity_bound };
        let mut model = DualModel::new(&alg.presentation, alg.basis.clone(), trunc);
        let (_, parts) = structure_parts(&mut model, alg);
        let mut c = CoderivationComplex {
            algebra: alg.clone(),
            model,
            deltas: deltas.to_vec(),
            q_m_part: parts[0].clone(),
            q_l_part: parts[1].clone(),
            blocks: BTreeMap::new(),
            q_m: BTreeMap::new(),
            q_l: BTreeMap::new(),
            filtered,
        };
        for &delta in deltas {
            for r in 1..=arity_bound {
                for comp in hom_components(&mut c.model, delta, r, filtered) {
                    let counts = c.model.op_counts(&comp.tree);
                    let key = (delta, counts[1], counts[0]);
                    let deg = c.model.degree(&comp.tree) - c.model.generator_degree(comp.output);
                    let b = c.blocks.entry(key).or_default();
                    b.components.push(comp);
                    b.degrees.push(deg);
                }
            }
        }
        let keys: Vec<_> = c.blocks.keys().copied().collect();
        for key in keys {
            let (d, p, qq) = key;
            let qm = c.differential_matrix(&c.q_m_part.clone(), key, (d, p, qq + 1));
            c.q_m.insert(key, qm);
            let ql = c.differential_matrix(&c.q_l_part.clone(), key, (d, p + 1, qq));
            c.q_l.insert(key, ql);
        }
        Ok(c)
    }

    pub fn block(&self, key: (i64, usize, usize)) -> HomBlock {
        self.blocks.get(&key).cloned().unwrap_or_default()
    }

    /// Matrix of `[part, ·]` from block `src` to block `dst`.
    pub fn differential_matrix(&mut self, part: &Derivation, src: (i64, usize, usize), dst: (i64, usize, usize)) -> RationalMatrix {
        let sb = self.block(src);
        let db = self.block(dst);
        let index = db.index();
        let cols: Vec<SparseVec> =
            (0..sb.dim()).map(|i| ad_component(&mut self.model, part, &sb, i, &index)).collect();
        RationalMatrix::from_columns(db.dim(), &cols)
    }

    /// Sum of all blocks at map weight `δ` with `r` leaves, split by degree, with
    /// the total differential to `r + 1` leaves.
    pub fn arity_space(&self, delta: i64, leaves: usize) -> HomBlock {
        let mut out = HomBlock::default();
        for ((d, p, qq), b) in &self.blocks {
            if *d == delta && p + qq + 1 == leaves {
                out.components.extend(b.components.iter().cloned());
                out.degrees.extend(b.degrees.iter().copied());
            }
        }
        out
    }

    /// Cohomology of the total differential at map weight `δ`, arity `r`, degree `deg`.
    pub fn total_cohomology(&mut self, delta: i64, leaves: usize, deg: i64) -> Result<usize> {
        self.cohomology_above(delta, leaves, deg, 1)
    }

    /// Same, in the subcomplex of components with at least `lowest` leaves.
    pub fn cohomology_above(&mut self, delta: i64, leaves: usize, deg: i64, lowest: usize) -> Result<usize> {
        let restrict = |b: &HomBlock| HomBlock {
            components: b.components.iter().zip(&b.degrees).filter(|(_, d)| **d == deg).map(|(c, _)| c.clone()).collect(),
            degrees: b.degrees.iter().copied().filter(|d| *d == deg).collect(),
        };
        let restrict_to = |b: &HomBlock, g: i64| HomBlock {
            components: b.components.iter().zip(&b.degrees).filter(|(_, d)| **d == g).map(|(c, _)| c.clone()).collect(),
            degrees: b.degrees.iter().copied().filter(|d| *d == g).collect(),
        };
        let mid = restrict(&self.arity_space(delta, leaves));
        let prev = if leaves > lowest { restrict_to(&self.arity_space(delta, leaves - 1), deg - 1) } else { HomBlock::default() };
        let next = restrict_to(&self.arity_space(delta, leaves + 1), deg + 1);
        let mut total = self.q_m_part.clone();
        total.add_scaled(&self.q_l_part, &Q::one());
        let mid_index = mid.index();
        let next_index = next.index();
        let d_in_cols: Vec<SparseVec> =
            (0..prev.dim()).map(|i| ad_component(&mut self.model, &total, &prev, i, &mid_index)).collect();
        let d_out_cols: Vec<SparseVec> =
            (0..mid.dim()).map(|i| ad_component(&mut self.model, &total, &mid, i, &next_index)).collect();
        let d_in = RationalMatrix::from_columns(mid.dim(), &d_in_cols);
        let d_out = RationalMatrix::from_columns(next.dim(), &d_out_cols);
        cohomology_dim(&d_in, &d_out)
    }
}

/// Coordinates of `[part, u_i]` in a target block (terms outside it must vanish).
pub fn ad_component(model: &mut DualModel, part: &Derivation, src: &HomBlock, i: usize, target: &HashMap<Component, usize>) -> SparseVec {
    let u = src.derivation(i, &Q::one());
    let gens: Vec<u32> = relevant_outputs(model, part, src.components[i].output);
    let br = Derivation::bracket(model, part, &u, &gens);
    let mut v: BTreeMap<usize, Q> = BTreeMap::new();
    for (h, c) in &br.images {
        for (t, x) in c {
            let comp = Component { output: *h, tree: t.clone() };
            match target.get(&comp) {
                Some(&j) => *v.entry(j).or_insert_with(Q::zero) += x,
                None => panic!("differential leaves the target block at {comp:?}"),
            }
        }
    }
    v.into_iter().filter(|(_, x)| !x.is_zero()).collect()
}

/// Generators whose image under `part` involves `h`, plus `h` itself.
pub(crate) fn relevant_outputs(model: &DualModel, part: &Derivation, h: u32) -> Vec<u32> {
    let mut s: BTreeSet<u32> = BTreeSet::new();
    s.insert(h);
    for (g, c) in &part.images {
        if c.keys().any(|t| t.leaves().contains(&h)) {
            s.insert(*g);
        }
    }
    let _ = model;
    s.into_iter().collect()
}

/// `dim H^{pq}(𝔤, Q_m)` at one map weight.
pub fn e1_term_at(c: &CoderivationComplex, delta: i64, p: usize, q: usize) -> Result<usize> {
    let mid = c.block((delta, p, q)).dim();
    let d_in = if q == 0 {
        RationalMatrix::zeros(mid, 0)
    } else {
        c.q_m.get(&(delta, p, q - 1)).cloned().unwrap_or_else(|| RationalMatrix::zeros(mid, 0))
    };
    let d_out = c.q_m.get(&(delta, p, q)).cloned().unwrap_or_else(|| RationalMatrix::zeros(0, mid));
    cohomology_dim(&d_in, &d_out)
}

/// `dim H^{pq}(𝔤, Q_m)` summed over the map weights of the complex; needs
/// `p + q + 2 ≤ arity_bound` so that the outgoing block is built.
pub fn e1_term(c: &CoderivationComplex, p: usize, q: usize) -> Result<usize> {
    if p + q + 2 > c.model.trunc.arity_bound {
        return Err(Error::BoundExceeded { requested: (p + q + 2) as i64, bound: c.model.trunc.arity_bound as i64 });
    }
    let mut total = 0;
    for &d in &c.deltas {
        total += e1_term_at(c, d, p, q)?;
    }
    Ok(total)
}

/// Check `Q_m² = Q_ℓ² = Q_mQ_ℓ + Q_ℓQ_m = 0` on all built blocks.
pub fn check_bicomplex(c: &CoderivationComplex) -> Result<()> {
    let zero = |r: usize, cc: usize| RationalMatrix::zeros(r, cc);
    for (&(d, p, q), b) in &c.blocks {
        let dim = |k: (i64, usize, usize)| c.blocks.get(&k).map(|b| b.dim()).unwrap_or(0);
        let qm = |k: (i64, usize, usize)| {
            c.q_m.get(&k).cloned().unwrap_or_else(|| zero(dim((k.0, k.1, k.2 + 1)), dim(k)))
        };
        let ql = |k: (i64, usize, usize)| {
            c.q_l.get(&k).cloned().unwrap_or_else(|| zero(dim((k.0, k.1 + 1, k.2)), dim(k)))
        };
        let _ = b;
        if !qm((d, p, q + 1)).mul(&qm((d, p, q)))?.is_zero() {
            return Err(Error::CompositionNotZero);
        }
        if !ql((d, p + 1, q)).mul(&ql((d, p, q)))?.is_zero() {
            return Err(Error::CompositionNotZero);
        }
        let a = qm((d, p + 1, q)).mul(&ql((d, p, q)))?;
        let bb = ql((d, p, q + 1)).mul(&qm((d, p, q)))?;
        let mut s = a.clone();
        for r in 0..s.nrows() {
            for cc in 0..s.ncols() {
                let v = a.get(r, cc) + bb.get(r, cc);
                s.set(r, cc, v);
            }
        }
        if !s.is_zero() {
            return Err(Error::CompositionNotZero);
        }
    }
    Ok(())
}

/// Independent count for `E₁^{p0}` of polyvector fields on `vars` variables at
/// map weight `δ`: pairs (monomial of size `1+p` in generators `g_{x_i}` (even,
/// weight 1) and `g_{ξ_i}` (odd, weight −1), basis monomial `h`) with
/// `wt(h) − wt(u) = δ`.
pub fn e1_oracle_polyvector(vars: usize, p: usize, delta: i64) -> usize {
    let size = 1 + p;
    let mut total = 0;
    // odd generators: choose a subset of size j, even: multiset of size size - j
    for j in 0..=size.min(vars) {
        let odd_choices = binom(vars, j);
        let even_choices = binom(vars + (size - j) - 1, size - j);
        let wt_u = (size - j) as i64 - j as i64;
        let target = delta + wt_u;
        total += odd_choices * even_choices * count_weight(vars, target);
    }
    total
}

/// Number of polyvector monomials of exact weight `w`.
pub fn count_weight(vars: usize, w: i64) -> usize {
    let mut t = 0;
    for e in 0..=vars {
        let d = w + e as i64;
        if d >= 0 {
            t += binom(vars, e) * binom(d as usize + vars - 1, vars - 1);
        }
    }
    t
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let mut r: usize = 1;
    for i in 0..k {
        r = r * (n - i) / (i + 1);
    }
    r
}

/// Helper for tests and callers: a combination with a single term.
pub fn single(e: Expr, v: Q) -> Comb {
    let mut c = Comb::new();
    add_term(&mut c, e, v);
    c
}

pub fn scale(c: &Comb, s: &Q) -> Comb {
    scale_comb(c, s)
}
