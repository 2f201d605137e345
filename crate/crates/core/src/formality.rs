//! λ-rescaled families of O∞-structures, the intrinsic-formality criterion and
//! the inductive construction of the trivializing isomorphism θ.
//!
//! Work is done in the dual picture of [`crate::koszul`]: an O∞-structure is a
//! square-zero derivation `D = Σ D_n` (`D_n` produces `n` leaves), and θ is an
//! algebra automorphism `Θ` of the free dual algebra with `Θ ∘ D^λ = D⁰ ∘ Θ`.
//! Since `D^λ_n = λ^{n−2} D_n` and `θ_n = φ_n λ^{n−1}`, the power of λ always
//! equals (leaves − 1) for θ and (leaves − 2) for `D`, so working mod `λ^K`
//! is the same as keeping at most `K + 1` leaves.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{BasisElem, FiniteAlgebra};
use crate::error::{Error, Result};
use crate::koszul::{
    hom_components, relevant_outputs, universe_bound, CoderivationComplex, Component, Derivation, DualModel,
    OInfinityStructure, Truncation,
};
use crate::linalg::{q, RationalMatrix, SparseVec, Q};
use crate::operad::QuadraticPresentation;
use crate::tree::{add_comb, add_term, Comb, Expr};

/// `Q^λ_n = λ^{n−2} Q_n`, computed mod `λ^order`.
#[derive(Clone, Debug)]
pub struct LambdaFamily {
    pub base: OInfinityStructure,
    pub order: usize,
}

impl LambdaFamily {
    /// `order` defaults to `arity bound − 1`.
    pub fn new(base: OInfinityStructure, order: Option<usize>) -> Result<Self> {
        if !base.component(1).is_zero() {
            return Err(Error::NonzeroQ1);
        }
        let order = order.unwrap_or(base.max_arity.saturating_sub(1)).max(1);
        Ok(LambdaFamily { base, order })
    }

    /// The strict part `Q⁰ = Q₂`.
    pub fn strict(&self) -> Derivation {
        self.base.component(2)
    }

    /// Largest number of leaves seen mod `λ^order`.
    pub fn leaf_cap(&self) -> usize {
        (self.order + 1).min(self.base.max_arity)
    }

    pub fn at(&self, lambda: &Q) -> Result<OInfinityStructure> {
        rescale(&self.base, lambda)
    }

    /// `true` when `Q_n = 0` for all `n > 2` within the cap.
    pub fn is_strict(&self) -> bool {
        (3..=self.leaf_cap()).all(|n| self.base.component(n).is_zero())
    }
}

/// `Q_n ↦ λ^{n−2} Q_n`.
pub fn rescale(s: &OInfinityStructure, lambda: &Q) -> Result<OInfinityStructure> {
    if !s.component(1).is_zero() {
        return Err(Error::NonzeroQ1);
    }
    let mut out = s.clone();
    out.components.clear();
    for (&n, d) in &s.components {
        let mut f = Q::one();
        for _ in 2..n {
            f *= lambda;
        }
        out.set_component(n, d.scaled(&f));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// algebra maps of the free dual algebra

/// An (even) algebra endomorphism of the free dual algebra, given on generators.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GeneratorMap {
    pub images: BTreeMap<u32, Comb>,
}

impl GeneratorMap {
    /// Identity on all generators that survive truncation.
    pub fn identity(model: &DualModel) -> Self {
        let mut images = BTreeMap::new();
        for h in 0..model.universe.len() as u32 {
            let e = Expr::Leaf(h);
            if model.keep(&e) {
                images.insert(h, [(e, Q::one())].into_iter().collect());
            }
        }
        GeneratorMap { images }
    }

    pub fn on(&self, h: u32) -> Comb {
        self.images.get(&h).cloned().unwrap_or_default()
    }

    /// Image of an element, truncated to `cap` leaves, in normal form.
    pub fn apply(&self, model: &mut DualModel, x: &Comb, cap: usize) -> Comb {
        let mut raw = Comb::new();
        for (t, c) in x {
            for (e, v) in self.substitute(t, cap) {
                if model.keep(&e) {
                    add_term(&mut raw, e, c * v);
                }
            }
        }
        model.free.reduce(&raw)
    }

    fn substitute(&self, t: &Expr, cap: usize) -> Comb {
        match t {
            Expr::Leaf(h) => self.on(*h),
            Expr::Node(o, a, b) => {
                let sa = self.substitute(a, cap);
                let sb = self.substitute(b, cap);
                let mut out = Comb::new();
                for (x, u) in &sa {
                    let lx = x.num_leaves();
                    for (y, w) in &sb {
                        if lx + y.num_leaves() <= cap {
                            add_term(&mut out, Expr::Node(*o, Box::new(x.clone()), Box::new(y.clone())), u * w);
                        }
                    }
                }
                out
            }
        }
    }

    /// Part with exactly `n` leaves.
    pub fn arity_part(&self, n: usize) -> BTreeMap<u32, Comb> {
        let mut out = BTreeMap::new();
        for (h, c) in &self.images {
            let p: Comb = c.iter().filter(|(e, _)| e.num_leaves() == n).map(|(e, v)| (e.clone(), v.clone())).collect();
            if !p.is_empty() {
                out.insert(*h, p);
            }
        }
        out
    }

    /// Terms with at most `n` leaves.
    pub fn up_to(&self, n: usize) -> GeneratorMap {
        let mut images = BTreeMap::new();
        for (h, c) in &self.images {
            let p: Comb = c.iter().filter(|(e, _)| e.num_leaves() <= n).map(|(e, v)| (e.clone(), v.clone())).collect();
            if !p.is_empty() {
                images.insert(*h, p);
            }
        }
        GeneratorMap { images }
    }
}

fn cap_comb(c: &Comb, cap: usize) -> Comb {
    c.iter().filter(|(e, _)| e.num_leaves() <= cap).map(|(e, v)| (e.clone(), v.clone())).collect()
}

/// `D(w_h)` summed over components `2..=cap`.
fn family_image(f: &LambdaFamily, h: u32, cap: usize) -> Comb {
    let mut out = Comb::new();
    for n in 2..=cap {
        add_comb(&mut out, &f.base.component(n).on(h), &Q::one());
    }
    cap_comb(&out, cap)
}

/// `Θ(D^λ(w_h)) − D⁰(Θ(w_h))` for every generator, truncated to `cap` leaves.
pub fn intertwining_defect(model: &mut DualModel, f: &LambdaFamily, map: &GeneratorMap, cap: usize) -> BTreeMap<u32, Comb> {
    let d0 = f.strict();
    let mut out = BTreeMap::new();
    for h in 0..model.universe.len() as u32 {
        let img = family_image(f, h, cap);
        let mut lhs = map.apply(model, &img, cap);
        let rhs = cap_comb(&d0.apply(model, &map.on(h)), cap);
        add_comb(&mut lhs, &rhs, &-Q::one());
        if !lhs.is_empty() {
            out.insert(h, lhs);
        }
    }
    out
}

/// `exp(u)(w_h)` truncated to `cap` leaves.
fn exp_derivation(model: &mut DualModel, u: &Derivation, h: u32, cap: usize) -> Comb {
    let mut total: Comb = [(Expr::Leaf(h), Q::one())].into_iter().collect();
    let mut term = total.clone();
    let mut k = 1i64;
    loop {
        term = cap_comb(&u.apply(model, &term), cap);
        if term.is_empty() {
            break;
        }
        term = term.into_iter().map(|(e, v)| (e, v / q(k))).collect();
        add_comb(&mut total, &term, &Q::one());
        k += 1;
    }
    total.retain(|e, _| model.keep(e));
    total
}

// ---------------------------------------------------------------------------
// θ

#[derive(Clone, Debug, Serialize)]
pub struct StageRecord {
    pub stage: usize,
    /// number of nonzero terms of the cocycle `z`
    pub cocycle_terms: usize,
    /// number of nonzero coordinates of the chosen `u`
    pub correction_terms: usize,
    /// map weights at which `z` had components
    pub deltas: Vec<i64>,
}

/// `θ_n = φ_n λ^{n−1}`; `components` holds `(n, φ_n)` in the dual picture
/// (`φ_n` sends each generator to its `n`-leaf part).
#[derive(Clone, Debug)]
pub struct ThetaIsomorphism {
    pub order: usize,
    pub components: Vec<(usize, BTreeMap<u32, Comb>)>,
    pub stages: Vec<StageRecord>,
    /// `Θ` after each stage (index 0 = identity)
    pub stage_maps: Vec<GeneratorMap>,
}

impl ThetaIsomorphism {
    pub fn identity(model: &DualModel, order: usize) -> Self {
        let id = GeneratorMap::identity(model);
        ThetaIsomorphism {
            order,
            components: vec![(1, id.images.clone())],
            stages: Vec::new(),
            stage_maps: vec![id],
        }
    }

    fn from_map(map: &GeneratorMap, order: usize, cap: usize) -> Vec<(usize, BTreeMap<u32, Comb>)> {
        let _ = order;
        (1..=cap).map(|n| (n, map.arity_part(n))).filter(|(n, p)| *n == 1 || !p.is_empty()).collect()
    }

    /// `Θ = Σ φ_n` as an algebra map.
    pub fn map(&self) -> GeneratorMap {
        let mut images: BTreeMap<u32, Comb> = BTreeMap::new();
        for (_, phi) in &self.components {
            for (h, c) in phi {
                add_comb(images.entry(*h).or_default(), c, &Q::one());
            }
        }
        images.retain(|_, c| !c.is_empty());
        GeneratorMap { images }
    }

    pub fn phi(&self, n: usize) -> BTreeMap<u32, Comb> {
        self.components.iter().find(|(k, _)| *k == n).map(|(_, p)| p.clone()).unwrap_or_default()
    }

    /// `true` when every `φ_n`, `n ≥ 2`, vanishes.
    pub fn is_identity(&self) -> bool {
        self.components.iter().all(|(n, p)| *n == 1 || p.values().all(|c| c.is_empty()))
    }
}

/// Render a combination with the model's labels.
pub fn render_comb(model: &DualModel, c: &Comb) -> String {
    if c.is_empty() {
        return "0".into();
    }
    let ops = model.ops().to_vec();
    let leaf = |i: u32| format!("w[{}]", model.universe[i as usize].label);
    c.iter().map(|(e, v)| format!("({v})·{}", e.render(&ops, &leaf))).collect::<Vec<_>>().join(" + ")
}

fn render_cocycle(model: &DualModel, z: &BTreeMap<u32, Comb>) -> String {
    z.iter()
        .map(|(h, c)| format!("w[{}] ↦ {}", model.universe[*h as usize].label, render_comb(model, c)))
        .collect::<Vec<_>>()
        .join("; ")
}

/// Map weight of a component `(h, t)`.
fn component_delta(model: &DualModel, h: u32, t: &Expr) -> i64 {
    model.universe[h as usize].weight - model.weight(t)
}

/// Columns `[D⁰, u_i]` for the given components, as maps to combinations.
fn bracket_columns(model: &DualModel, d0: &Derivation, comps: &[Component]) -> Vec<BTreeMap<u32, Comb>> {
    comps
        .par_chunks(8)
        .map(|chunk| {
            let mut m = model.clone();
            chunk
                .iter()
                .map(|c| {
                    let mut u = Derivation::zero(0);
                    u.set(c.output, [(c.tree.clone(), Q::one())].into_iter().collect());
                    let gens = relevant_outputs(&m, d0, c.output);
                    Derivation::bracket(&mut m, d0, &u, &gens).images
                })
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect()
}

/// Solve `[D⁰, u] = z` for a degree-0 filtered `u` with `leaves` leaves.
fn solve_stage(model: &mut DualModel, d0: &Derivation, z: &BTreeMap<u32, Comb>, leaves: usize) -> Option<(Derivation, Vec<i64>)> {
    // split z by map weight
    let mut by_delta: BTreeMap<i64, BTreeMap<u32, Comb>> = BTreeMap::new();
    for (h, c) in z {
        for (t, v) in c {
            let d = component_delta(model, *h, t);
            add_term(by_delta.entry(d).or_default().entry(*h).or_default(), t.clone(), v.clone());
        }
    }
    let mut u = Derivation::zero(0);
    for (&delta, zd) in &by_delta {
        let comps: Vec<Component> = hom_components(model, delta, leaves, true)
            .into_iter()
            .filter(|c| model.degree(&c.tree) == model.generator_degree(c.output))
            .collect();
        let cols = bracket_columns(model, d0, &comps);
        let mut index: HashMap<(u32, Expr), usize> = HashMap::new();
        let coords = |img: &BTreeMap<u32, Comb>, index: &mut HashMap<(u32, Expr), usize>| -> SparseVec {
            let mut v: BTreeMap<usize, Q> = BTreeMap::new();
            for (h, c) in img {
                for (t, x) in c {
                    let n = index.len();
                    let j = *index.entry((*h, t.clone())).or_insert(n);
                    *v.entry(j).or_insert_with(Q::zero) += x;
                }
            }
            v.into_iter().filter(|(_, x)| !x.is_zero()).collect()
        };
        let col_vecs: Vec<SparseVec> = cols.iter().map(|c| coords(c, &mut index)).collect();
        let rhs = coords(zd, &mut index);
        let m = RationalMatrix::from_columns(index.len(), &col_vecs);
        let sol = m.solve(&rhs)?;
        for (i, x) in sol.iter().enumerate() {
            if !x.is_zero() {
                let c = &comps[i];
                let mut cur = u.on(c.output);
                add_term(&mut cur, c.tree.clone(), x.clone());
                u.set(c.output, cur);
            }
        }
    }
    Some((u, by_delta.keys().copied().collect()))
}

/// Inductive construction of θ with `θ ∘ Q⁰ = Q^λ ∘ θ` mod `λ^K`.
pub fn theta_construct(f: &LambdaFamily) -> Result<ThetaIsomorphism> {
    let mut model = f.base.model.clone();
    let cap = f.leaf_cap();
    let mut theta = ThetaIsomorphism::identity(&model, f.order);
    if model.universe.is_empty() || f.is_strict() {
        return Ok(theta);
    }
    let d0 = f.strict();
    let mut map = GeneratorMap::identity(&model);
    for n in 1..=cap.saturating_sub(2) {
        let defect = intertwining_defect(&mut model, f, &map, n + 2);
        let mut z: BTreeMap<u32, Comb> = BTreeMap::new();
        for (h, c) in &defect {
            for (t, v) in c {
                if t.num_leaves() < n + 2 {
                    return Err(Error::InvalidStructure(format!("stage {n}: lower-order defect did not vanish")));
                }
                add_term(z.entry(*h).or_default(), t.clone(), v.clone());
            }
        }
        z.retain(|_, c| !c.is_empty());
        let cocycle_terms = z.values().map(|c| c.len()).sum();
        if z.is_empty() {
            theta.stages.push(StageRecord { stage: n, cocycle_terms: 0, correction_terms: 0, deltas: Vec::new() });
            theta.stage_maps.push(map.clone());
            continue;
        }
        let Some((u, deltas)) = solve_stage(&mut model, &d0, &z, n + 1) else {
            return Err(Error::ObstructionNotExact { stage: n, cocycle: render_cocycle(&model, &z) });
        };
        let correction_terms = u.images.values().map(|c| c.len()).sum();
        let mut next = GeneratorMap::default();
        for h in map.images.keys().copied().collect::<Vec<_>>() {
            let eta = exp_derivation(&mut model, &u, h, cap);
            let img = map.apply(&mut model, &eta, cap);
            if !img.is_empty() {
                next.images.insert(h, img);
            }
        }
        map = next;
        theta.stages.push(StageRecord { stage: n, cocycle_terms, correction_terms, deltas });
        theta.stage_maps.push(map.clone());
    }
    theta.components = ThetaIsomorphism::from_map(&map, f.order, cap);
    Ok(theta)
}

/// Intertwining mod `λ^K`, `θ₁ = id` and homogeneity `θ_n = φ_n λ^{n−1}`.
pub fn verify_theta(theta: &ThetaIsomorphism, f: &LambdaFamily) -> bool {
    let mut model = f.base.model.clone();
    let cap = f.leaf_cap();
    // θ₁ = id
    if theta.phi(1) != GeneratorMap::identity(&model).images {
        return false;
    }
    for (n, phi) in &theta.components {
        if *n == 0 || *n > cap {
            return false;
        }
        for (h, c) in phi {
            if (*h as usize) >= model.universe.len() {
                return false;
            }
            for t in c.keys() {
                // homogeneity: φ_n has exactly n leaves; θ has degree 0
                if t.num_leaves() != *n || model.degree(t) != model.generator_degree(*h) {
                    return false;
                }
            }
        }
    }
    let map = theta.map();
    intertwining_defect(&mut model, f, &map, cap).is_empty()
}

/// `Θ_n ≡ Θ_{n−1}` mod `λ^n` for consecutive stages.
pub fn stages_consistent(theta: &ThetaIsomorphism) -> bool {
    theta.stage_maps.windows(2).enumerate().all(|(i, w)| w[1].up_to(i + 1) == w[0].up_to(i + 1))
}

// ---------------------------------------------------------------------------
// perturbations

/// Random degree-0, weight-0, filtration-compatible derivation with the given leaf counts.
pub fn random_gauge(model: &mut DualModel, seed: u64, leaves: &[usize]) -> Derivation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Derivation::zero(0);
    for &r in leaves {
        let comps: Vec<Component> = hom_components(model, 0, r, true)
            .into_iter()
            .filter(|c| model.degree(&c.tree) == model.generator_degree(c.output))
            .collect();
        let mut any = false;
        for (i, c) in comps.iter().enumerate() {
            let pick = rng.random_bool(0.5) || (!any && i + 1 == comps.len());
            if !pick {
                continue;
            }
            let mut x: i64 = rng.random_range(-2..=2);
            if x == 0 {
                x = 1;
            }
            any = true;
            let mut cur = v.on(c.output);
            add_term(&mut cur, c.tree.clone(), q(x));
            v.set(c.output, cur);
        }
    }
    v
}

/// `e^{ad V} D⁰ = e^V D⁰ e^{−V}`, split by number of leaves.
pub fn conjugate(model: &mut DualModel, d0: &Derivation, v: &Derivation) -> BTreeMap<usize, Derivation> {
    let gens: Vec<u32> = (0..model.universe.len() as u32).collect();
    let mut total = d0.clone();
    let mut term = d0.clone();
    let mut k = 1i64;
    while k as usize <= model.trunc.arity_bound {
        term = Derivation::bracket(model, v, &term, &gens).scaled(&Q::new(1.into(), k.into()));
        if term.is_zero() {
            break;
        }
        total.add_scaled(&term, &Q::one());
        k += 1;
    }
    let mut out = BTreeMap::new();
    for n in 1..=model.trunc.arity_bound {
        let p = total.arity_part(n);
        if !p.is_zero() {
            out.insert(n, p);
        }
    }
    out
}

/// Exact perturbation of a strict structure by a seeded random gauge.
pub fn perturbed_structure(strict: &OInfinityStructure, seed: u64) -> OInfinityStructure {
    let mut s = strict.clone();
    let leaves: Vec<usize> = (2..s.max_arity).collect();
    let v = random_gauge(&mut s.model, seed, &leaves);
    let d0 = s.component(2);
    let parts = conjugate(&mut s.model, &d0, &v);
    s.components.clear();
    for (n, d) in parts {
        s.set_component(n, d);
    }
    s
}

/// A structure on a graded space with zero `Q₂` and a single nonzero
/// `Q_{stage+2}`, whose obstruction at `stage` cannot be exact.
pub fn designed_obstruction(stage: usize) -> Result<OInfinityStructure> {
    let n = stage + 2;
    let p = crate::operad::com();
    // a, b in degree 0; the target t in degree 2 − n so that |w_t| + 1 = |tree|
    let mut universe = vec![elem("a", 0), elem("b", 0)];
    universe.push(elem("t", 2 - n as i64));
    let trunc = Truncation { filt_bound: 0, arity_bound: n };
    let mut model = DualModel::new(&p, universe, trunc);
    let mut leaves = vec![0u32];
    leaves.extend(std::iter::repeat_n(1u32, n - 1));
    let tree = model
        .normal_forms(&leaves)
        .into_iter()
        .next()
        .ok_or_else(|| Error::InvalidStructure("no tree for the designed obstruction".into()))?;
    let mut d = Derivation::zero(1);
    d.set(2, [(tree, Q::one())].into_iter().collect());
    let mut s = OInfinityStructure { model, components: BTreeMap::new(), max_arity: n };
    s.set_component(n, d);
    Ok(s)
}

fn elem(label: &str, degree: i64) -> BasisElem {
    BasisElem { label: label.into(), degree, weight: 0, filt: 0 }
}

// ---------------------------------------------------------------------------
// intrinsic formality

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    InconclusiveAtBounds,
}

#[derive(Clone, Debug, Serialize)]
pub struct H1Entry {
    pub delta: i64,
    pub arity: usize,
    /// `dim H¹(𝔤_{≥1})` at this arity
    pub sub: usize,
    /// `dim H¹(𝔤)` at this arity = rank of the induced map here
    pub full: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct FormalityReport {
    pub verdict: Verdict,
    pub certified_arities: Vec<usize>,
    pub entries: Vec<H1Entry>,
}

/// `H¹(𝔤_{≥1}) → H¹(𝔤)` at the truncation. The differential raises the arity
/// by one, so the map is onto `H¹(𝔤)` in arities ≥ 2 and vanishes iff those
/// groups do. An arity `r` is certified when `r + 1` is within the bound.
/// `alg` must carry the universe `universe_bound(weight_bound, deltas)`.
pub fn intrinsic_formality_check(
    alg: &FiniteAlgebra,
    weight_bound: i64,
    arity_bound: usize,
    deltas: &[i64],
) -> Result<FormalityReport> {
    let certified: Vec<usize> = (2..arity_bound).collect();
    if certified.is_empty() {
        return Ok(FormalityReport { verdict: Verdict::InconclusiveAtBounds, certified_arities: Vec::new(), entries: Vec::new() });
    }
    let mut entries = Vec::new();
    if alg.dim() > 0 {
        let mut c = CoderivationComplex::build(alg, weight_bound, arity_bound, deltas, false)?;
        for &delta in deltas {
            for &r in &certified {
                let full = c.total_cohomology(delta, r, 1)?;
                let sub = c.cohomology_above(delta, r, 1, 2)?;
                entries.push(H1Entry { delta, arity: r, sub, full });
            }
        }
    }
    let verdict = if entries.iter().any(|e| e.full > 0) { Verdict::Fails } else { Verdict::Holds };
    Ok(FormalityReport { verdict, certified_arities: certified, entries })
}

/// Convenience: the universe needed by [`intrinsic_formality_check`].
pub fn formality_universe(weight_bound: i64, deltas: &[i64]) -> i64 {
    universe_bound(weight_bound, deltas)
}

/// Two-dimensional algebra over `p` with `m(a, a) = b` for the first generator.
pub fn square_zero_algebra(p: &QuadraticPresentation) -> FiniteAlgebra {
    let basis = vec![elem("a", 0), elem("b", 0)];
    let mut alg = FiniteAlgebra::zero(p.clone(), basis);
    alg.products[0].insert((0, 0), vec![(1, Q::one())]);
    alg
}
