//! Truncated Hochschild cochains of polynomial algebras: differential, cup
//! product, braces, the Gerstenhaber bracket, the B∞ operations, cohomology
//! tables and the HKR comparison with polyvector fields.
//!
//! A cochain is stored as a table on tuples of monomials whose total degree is
//! at most its validity bound. Every operation computes the bound up to which
//! its output is certified and never fills in values beyond it.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{q, RationalMatrix, SparseVec, SubspaceBasis, Q};
use crate::polyvector::{exponents, PolyKey, PolyvectorField};

pub type Mono = Vec<u32>;
pub type Poly = BTreeMap<Mono, Q>;

pub fn mono_degree(m: &[u32]) -> i64 {
    m.iter().map(|&a| a as i64).sum()
}

pub fn mono_mul(a: &[u32], b: &[u32]) -> Mono {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn tuple_degree(t: &[Mono]) -> i64 {
    t.iter().map(|m| mono_degree(m)).sum()
}

fn poly_add(p: &mut Poly, m: Mono, c: Q) {
    if c.is_zero() {
        return;
    }
    let e = p.entry(m.clone()).or_insert_with(Q::zero);
    *e += c;
    if e.is_zero() {
        p.remove(&m);
    }
}

pub fn poly_mul(a: &Poly, b: &Poly) -> Poly {
    let mut out = Poly::new();
    for (x, u) in a {
        for (y, v) in b {
            poly_add(&mut out, mono_mul(x, y), u * v);
        }
    }
    out
}

fn mono_poly(m: &[u32]) -> Poly {
    [(m.to_vec(), Q::one())].into_iter().collect()
}

/// Monomials of exactly degree `d`.
pub fn monomials_of_degree(vars: usize, d: i64) -> Vec<Mono> {
    if d < 0 {
        return Vec::new();
    }
    exponents(vars, d as u32).into_iter().filter(|m| mono_degree(m) == d).collect()
}

/// Tuples of `n` monomials of total degree at most `bound`, ordered.
pub fn input_tuples(vars: usize, n: usize, bound: i64) -> Vec<Vec<Mono>> {
    fn rec(vars: usize, n: usize, budget: i64, cur: &mut Vec<Mono>, out: &mut Vec<Vec<Mono>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for d in 0..=budget {
            for m in monomials_of_degree(vars, d) {
                cur.push(m);
                rec(vars, n, budget - d, cur, out);
                cur.pop();
            }
        }
    }
    let mut out = Vec::new();
    if bound >= 0 {
        rec(vars, n, bound, &mut Vec::new(), &mut out);
    }
    out
}

/// `k[x₁..x_N]` with the monomial basis up to total degree `D`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TruncatedPolyAlgebra {
    pub vars: usize,
    pub degree_bound: i64,
    #[serde(skip)]
    pub monomials: Vec<Mono>,
}

impl TruncatedPolyAlgebra {
    pub fn new(vars: usize, degree_bound: i64) -> Self {
        let monomials = (0..=degree_bound).flat_map(|d| monomials_of_degree(vars, d)).collect();
        TruncatedPolyAlgebra { vars, degree_bound, monomials }
    }

    pub fn dim(&self) -> usize {
        self.monomials.len()
    }

    /// Product of basis monomials; out-of-range products are an error.
    pub fn mul(&self, a: &[u32], b: &[u32]) -> Result<Mono> {
        let m = mono_mul(a, b);
        let d = mono_degree(&m);
        if d > self.degree_bound {
            return Err(Error::DegreeOverflow { degree: d });
        }
        Ok(m)
    }

    pub fn mu(&self) -> Cochain {
        Cochain::mu(self.vars, self.degree_bound)
    }
}

// ---------------------------------------------------------------------------
// cochains

/// Multilinear map `A^{⊗n} → A` of internal weight `w`, known on inputs of total degree ≤ `bound`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Cochain {
    pub vars: usize,
    pub arity: usize,
    pub weight: i64,
    pub bound: i64,
    /// nonzero values only
    pub table: BTreeMap<Vec<Mono>, Poly>,
}

impl Cochain {
    pub fn zero(vars: usize, arity: usize, weight: i64, bound: i64) -> Self {
        Cochain { vars, arity, weight, bound, table: BTreeMap::new() }
    }

    /// Tabulate `f` on all inputs up to `bound`.
    pub fn from_fn(vars: usize, arity: usize, weight: i64, bound: i64, f: impl Fn(&[Mono]) -> Poly) -> Self {
        let mut c = Cochain::zero(vars, arity, weight, bound);
        for t in input_tuples(vars, arity, bound) {
            let v = f(&t);
            c.set(t, v);
        }
        c
    }

    /// Degree in `𝒞[1]`.
    pub fn degree(&self) -> i64 {
        self.arity as i64 - 1
    }

    pub fn is_zero(&self) -> bool {
        self.table.is_empty()
    }

    pub fn set(&mut self, inputs: Vec<Mono>, value: Poly) {
        let d = tuple_degree(&inputs) + self.weight;
        assert!(value.keys().all(|m| mono_degree(m) == d), "value is not homogeneous of weight {}", self.weight);
        assert!(tuple_degree(&inputs) <= self.bound, "input beyond the validity bound");
        if value.is_empty() {
            self.table.remove(&inputs);
        } else {
            self.table.insert(inputs, value);
        }
    }

    /// Value on basis inputs (which must lie within the validity bound).
    pub fn eval(&self, inputs: &[Mono]) -> Poly {
        assert!(
            tuple_degree(inputs) <= self.bound,
            "evaluation at total degree {} beyond validity bound {}",
            tuple_degree(inputs),
            self.bound
        );
        self.table.get(inputs).cloned().unwrap_or_default()
    }

    /// Multilinear extension to polynomial arguments.
    pub fn eval_poly(&self, args: &[Poly]) -> Poly {
        fn rec(f: &Cochain, args: &[Poly], cur: &mut Vec<Mono>, coeff: Q, out: &mut Poly) {
            if cur.len() == args.len() {
                for (m, v) in f.eval(cur) {
                    poly_add(out, m, v * &coeff);
                }
                return;
            }
            for (m, c) in &args[cur.len()] {
                cur.push(m.clone());
                rec(f, args, cur, &coeff * c, out);
                cur.pop();
            }
        }
        let mut out = Poly::new();
        rec(self, args, &mut Vec::new(), Q::one(), &mut out);
        out
    }

    /// Forget values above a lower bound.
    pub fn restrict(&self, bound: i64) -> Result<Cochain> {
        if bound > self.bound {
            return Err(Error::ValidityUnderflow { available: self.bound, requested: bound });
        }
        let mut c = self.clone();
        c.bound = bound;
        c.table.retain(|t, _| tuple_degree(t) <= bound);
        Ok(c)
    }

    /// `self + s·other` at the common bound.
    pub fn add_scaled(&self, other: &Cochain, s: &Q) -> Cochain {
        assert_eq!((self.arity, self.weight), (other.arity, other.weight), "adding cochains of different type");
        let bound = self.bound.min(other.bound);
        let mut out = self.restrict(bound).expect("lower bound");
        for (t, v) in &other.table {
            if tuple_degree(t) > bound {
                continue;
            }
            let mut cur = out.table.remove(t).unwrap_or_default();
            for (m, c) in v {
                poly_add(&mut cur, m.clone(), c * s);
            }
            if !cur.is_empty() {
                out.table.insert(t.clone(), cur);
            }
        }
        out
    }

    pub fn scaled(&self, s: &Q) -> Cochain {
        Cochain::zero(self.vars, self.arity, self.weight, self.bound).add_scaled(self, s)
    }

    /// The multiplication `μ`.
    pub fn mu(vars: usize, bound: i64) -> Cochain {
        Cochain::from_fn(vars, 2, 0, bound, |t| mono_poly(&mono_mul(&t[0], &t[1])))
    }

    pub fn identity(vars: usize, bound: i64) -> Cochain {
        Cochain::from_fn(vars, 1, 0, bound, |t| mono_poly(&t[0]))
    }

    /// Homogeneous element of `A = 𝒞⁰`.
    pub fn constant(vars: usize, p: &Poly) -> Cochain {
        let w = p.keys().next().map(|m| mono_degree(m)).unwrap_or(0);
        let mut c = Cochain::zero(vars, 0, w, i64::MAX / 4);
        c.set(Vec::new(), p.clone());
        c
    }

    /// Seeded random cochain; each input tuple gets each admissible output
    /// monomial with probability `density` and a coefficient in `−2..=2`.
    pub fn random(rng: &mut impl Rng, vars: usize, arity: usize, weight: i64, bound: i64, density: f64) -> Cochain {
        let mut c = Cochain::zero(vars, arity, weight, bound);
        for t in input_tuples(vars, arity, bound) {
            let mut v = Poly::new();
            for m in monomials_of_degree(vars, tuple_degree(&t) + weight) {
                if rng.random_bool(density) {
                    let x: i64 = rng.random_range(-2..=2);
                    poly_add(&mut v, m, q(x));
                }
            }
            c.set(t, v);
        }
        c
    }
}

fn sign(e: i64) -> Q {
    if e.rem_euclid(2) == 1 {
        -Q::one()
    } else {
        Q::one()
    }
}

/// Certified output bound of `f{g₁,…,g_k}`.
pub fn brace_bound(f: &Cochain, gs: &[Cochain]) -> i64 {
    let mut b = f.bound - gs.iter().map(|g| g.weight.max(0)).sum::<i64>();
    for g in gs {
        b = b.min(g.bound);
    }
    b
}

/// Brace `f{g₁,…,g_k}`: sum over order-preserving insertions, with sign
/// `(−1)^{|g_j|·i_j}` where `i_j` counts the inputs preceding `g_j` and `|g| = arity − 1`.
pub fn brace(f: &Cochain, gs: &[Cochain]) -> Result<Cochain> {
    let bound = brace_bound(f, gs);
    if bound < 0 {
        return Err(Error::ValidityUnderflow { available: bound, requested: 0 });
    }
    let arity = (f.arity + gs.iter().map(|g| g.arity).sum::<usize>()) as i64 - gs.len() as i64;
    if arity < 0 {
        return Err(Error::Usage("brace of constants has negative arity".into()));
    }
    let arity = arity as usize;
    let weight = f.weight + gs.iter().map(|g| g.weight).sum::<i64>();
    let mut out = Cochain::zero(f.vars, arity, weight, bound);
    if gs.len() > f.arity {
        return Ok(out);
    }
    let slots = choose(f.arity, gs.len());
    for t in input_tuples(f.vars, arity, bound) {
        let mut value = Poly::new();
        for s in &slots {
            let mut args: Vec<Poly> = Vec::with_capacity(f.arity);
            let mut pos = 0;
            let mut eps = 0;
            let mut j = 0;
            for slot in 0..f.arity {
                if j < s.len() && s[j] == slot {
                    let g = &gs[j];
                    eps += g.degree() * pos as i64;
                    args.push(g.eval(&t[pos..pos + g.arity]));
                    pos += g.arity;
                    j += 1;
                } else {
                    args.push(mono_poly(&t[pos]));
                    pos += 1;
                }
            }
            if args.iter().any(|a| a.is_empty()) {
                continue;
            }
            let v = f.eval_poly(&args);
            let sg = sign(eps);
            for (m, c) in v {
                poly_add(&mut value, m, c * &sg);
            }
        }
        out.set(t, value);
    }
    Ok(out)
}

/// Increasing `k`-subsets of `0..n`.
fn choose(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i + 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::new(), &mut out);
    out
}

/// `(f ∪ g)(a, b) = f(a) g(b)`.
pub fn cup(f: &Cochain, g: &Cochain) -> Cochain {
    let bound = f.bound.min(g.bound);
    let arity = f.arity + g.arity;
    let mut out = Cochain::zero(f.vars, arity, f.weight + g.weight, bound);
    for t in input_tuples(f.vars, arity, bound) {
        let a = f.eval(&t[..f.arity]);
        if a.is_empty() {
            continue;
        }
        let b = g.eval(&t[f.arity..]);
        out.set(t, poly_mul(&a, &b));
    }
    out
}

/// `[f, g] = f{g} − (−1)^{|f||g|} g{f}` on `𝒞[1]`.
pub fn gerst_bracket(f: &Cochain, g: &Cochain) -> Result<Cochain> {
    let a = brace(f, std::slice::from_ref(g))?;
    let b = brace(g, std::slice::from_ref(f))?;
    Ok(a.add_scaled(&b, &-sign(f.degree() * g.degree())))
}

/// `d f = (−1)^{|f|} [μ, f]`, the usual alternating Hochschild differential.
pub fn hochschild_differential(f: &Cochain) -> Result<Cochain> {
    let mu = Cochain::mu(f.vars, f.bound + f.weight.max(0));
    Ok(gerst_bracket(&mu, f)?.scaled(&sign(f.degree())))
}

// ---------------------------------------------------------------------------
// B∞

/// The operations `m_n` (on `𝒞`) and `m_{pq}` (on `𝒞[1]`).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinftyOp {
    M(usize),
    Mpq(usize, usize),
}

/// `m₁ = d`, `m₂ = ∪`, `m_n = 0` (n > 2); `m_{1q}(f; g…) = f{g…}`, `m_{pq} = 0` (p > 1), `m_{01} = m_{10} = id`.
pub fn binfty_apply(op: BinftyOp, args: &[Cochain]) -> Result<Cochain> {
    let bad = |n: usize| Error::Usage(format!("operation expects {n} arguments, got {}", args.len()));
    let vars = args.first().map(|c| c.vars).unwrap_or(1);
    match op {
        BinftyOp::M(n) if args.len() != n => Err(bad(n)),
        BinftyOp::M(1) => hochschild_differential(&args[0]),
        BinftyOp::M(2) => Ok(cup(&args[0], &args[1])),
        BinftyOp::M(_) => {
            let arity = args.iter().map(|c| c.arity).sum();
            let w = args.iter().map(|c| c.weight).sum();
            let b = args.iter().map(|c| c.bound).min().unwrap_or(0);
            Ok(Cochain::zero(vars, arity, w, b))
        }
        BinftyOp::Mpq(p, qq) if args.len() != p + qq => Err(bad(p + qq)),
        BinftyOp::Mpq(0, 1) | BinftyOp::Mpq(1, 0) => Ok(args[0].clone()),
        BinftyOp::Mpq(1, _) => brace(&args[0], &args[1..]),
        BinftyOp::Mpq(_, _) => {
            let arity = args.iter().map(|c| c.arity).sum::<usize>() + 1 - args.len();
            let w = args.iter().map(|c| c.weight).sum();
            let b = args.iter().map(|c| c.bound).min().unwrap_or(0);
            Ok(Cochain::zero(vars, arity, w, b))
        }
    }
}

type Word = Vec<Cochain>;
type Tensor = Vec<(Q, Word)>;
pub type BraceFn<'a> = dyn Fn(&Cochain, &[Cochain]) -> Result<Cochain> + Sync + 'a;

fn word_degree(w: &[Cochain]) -> i64 {
    w.iter().map(|c| c.degree()).sum()
}

/// Product on `T^c(𝒞[1])` determined by `m_{1q}` = braces; only words of
/// length ≤ `max_len` are produced.
fn word_product(x: &[Cochain], y: &[Cochain], br: &BraceFn, max_len: usize) -> Result<Tensor> {
    // split y into S₀ B₁ S₁ … B_p S_p
    #[allow(clippy::too_many_arguments)]
    fn rec(
        x: &[Cochain],
        y: &[Cochain],
        k: usize,
        start: usize,
        passed: i64,
        sgn: i64,
        cur: &mut Word,
        br: &BraceFn,
        max_len: usize,
        out: &mut Tensor,
    ) -> Result<()> {
        if k == x.len() {
            if cur.len() + y.len() - start > max_len {
                return Ok(());
            }
            let mut w = cur.clone();
            w.extend(y[start..].iter().cloned());
            out.push((sign(sgn), w));
            return Ok(());
        }
        for a in start..=y.len() {
            // this letter, the gap before it and one letter per remaining f
            if cur.len() + (a - start) + (x.len() - k) > max_len {
                break;
            }
            for b in a..=y.len() {
                let block = &y[a..b];
                if block.len() > x[k].arity {
                    break;
                }
                let passed_now = passed + word_degree(&y[start..a]);
                let e = x[k].degree() * passed_now;
                // zero braces stay: their bound still limits where the identity is checked
                let h = br(&x[k], block)?;
                let len = cur.len();
                cur.extend(y[start..a].iter().cloned());
                cur.push(h);
                rec(x, y, k + 1, b, passed_now + word_degree(block), sgn + e, cur, br, max_len, out)?;
                cur.truncate(len);
            }
        }
        Ok(())
    }
    let mut out = Tensor::new();
    rec(x, y, 0, 0, 0, 0, &mut Vec::new(), br, max_len, &mut out)?;
    Ok(out)
}

fn tensor_product(x: &Tensor, y: &Tensor, br: &BraceFn, max_len: usize) -> Result<Tensor> {
    let mut out = Tensor::new();
    for (a, u) in x {
        if u.len() > max_len {
            continue;
        }
        for (b, v) in y {
            for (c, w) in word_product(u, v, br, max_len)? {
                out.push((a * b * c, w));
            }
        }
    }
    Ok(out)
}

/// `D w = [μ]·w − (−1)^{|w|} w·[μ]`, words of length ≤ `max_len`.
fn word_differential(w: &Tensor, mu: &Cochain, br: &BraceFn, max_len: usize) -> Result<Tensor> {
    let m: Tensor = vec![(Q::one(), vec![mu.clone()])];
    // D shortens words by at most one
    let w: Tensor = w.iter().filter(|(_, u)| u.len() <= max_len.saturating_add(1)).cloned().collect();
    let mut out = tensor_product(&m, &w, br, max_len)?;
    for (c, u) in &w {
        let s = -sign(word_degree(u));
        for (d, v) in word_product(u, &m[0].1, br, max_len)? {
            out.push((c * &d * &s, v));
        }
    }
    Ok(out)
}

/// Projection to one-letter words, summed by (arity, weight).
fn project(t: &Tensor) -> BTreeMap<(usize, i64), Cochain> {
    let mut out: BTreeMap<(usize, i64), Cochain> = BTreeMap::new();
    for (c, w) in t {
        if w.len() != 1 {
            continue;
        }
        let f = &w[0];
        let key = (f.arity, f.weight);
        let cur = out.remove(&key).unwrap_or_else(|| Cochain::zero(f.vars, f.arity, f.weight, f.bound));
        out.insert(key, cur.add_scaled(f, c));
    }
    out
}

fn projection_vanishes(t: &Tensor) -> bool {
    project(t).values().all(|c| c.is_zero())
}

fn neg(t: &Tensor) -> Tensor {
    t.iter().map(|(c, w)| (-c.clone(), w.clone())).collect()
}

/// Words of length `1..=max_len` over the sample.
fn words(sample: &[Cochain], max_len: usize) -> Vec<Word> {
    let mut out: Vec<Word> = Vec::new();
    let mut layer: Vec<Word> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for c in sample {
                let mut v = w.clone();
                v.push(c.clone());
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Outcome of a B∞ relation check; `failure` names the first violated identity.
#[derive(Clone, Debug, Serialize)]
pub struct BinftyReport {
    pub ok: bool,
    pub checked: usize,
    pub failure: Option<String>,
}

/// dg-bialgebra identities on `T^c(𝒞[1])`: `D² = 0` on words of length ≤ 3,
/// `D` a derivation of the product and the product associative on words of
/// total length ≤ 3. Both sides are (co)derivations or coalgebra maps, so
/// comparing projections to `𝒞[1]` is exact.
pub fn binfty_relations_check_with(sample: &[Cochain], br: &BraceFn) -> Result<BinftyReport> {
    let Some(first) = sample.first() else {
        return Ok(BinftyReport { ok: true, checked: 0, failure: None });
    };
    let vars = first.vars;
    let bound = sample.iter().map(|c| c.bound).max().unwrap_or(0);
    let mu = Cochain::mu(vars, bound + sample.iter().map(|c| c.weight.max(0)).sum::<i64>());
    let mut checked = 0;
    let fail = |what: String, checked: usize| Ok(BinftyReport { ok: false, checked, failure: Some(what) });

    for w in words(sample, 3) {
        let t: Tensor = vec![(Q::one(), w.clone())];
        let dd = word_differential(&word_differential(&t, &mu, br, 2)?, &mu, br, 1)?;
        checked += 1;
        if !projection_vanishes(&dd) {
            return fail(format!("D² ≠ 0 on a word of length {}", w.len()), checked);
        }
    }
    let ws = words(sample, 2);
    for x in &ws {
        for y in &ws {
            if x.len() + y.len() > 3 {
                continue;
            }
            let tx: Tensor = vec![(Q::one(), x.clone())];
            let ty: Tensor = vec![(Q::one(), y.clone())];
            let xy = tensor_product(&tx, &ty, br, 2)?;
            let mut lhs = word_differential(&xy, &mu, br, 1)?;
            lhs.extend(neg(&tensor_product(&word_differential(&tx, &mu, br, 1)?, &ty, br, 1)?));
            let s = sign(word_degree(x));
            for (c, w) in tensor_product(&tx, &word_differential(&ty, &mu, br, usize::MAX)?, br, 1)? {
                lhs.push((-(c * &s), w));
            }
            checked += 1;
            if !projection_vanishes(&lhs) {
                return fail("D is not a derivation of the product".into(), checked);
            }
        }
    }
    let singles = words(sample, 1);
    for x in &singles {
        for y in &singles {
            for z in &singles {
                let tx: Tensor = vec![(Q::one(), x.clone())];
                let ty: Tensor = vec![(Q::one(), y.clone())];
                let tz: Tensor = vec![(Q::one(), z.clone())];
                let mut lhs = tensor_product(&tensor_product(&tx, &ty, br, 1)?, &tz, br, 1)?;
                lhs.extend(neg(&tensor_product(&tx, &tensor_product(&ty, &tz, br, usize::MAX)?, br, 1)?));
                checked += 1;
                if !projection_vanishes(&lhs) {
                    return fail("product is not associative".into(), checked);
                }
            }
        }
    }
    Ok(BinftyReport { ok: true, checked, failure: None })
}

pub fn binfty_relations_check(sample: &[Cochain]) -> Result<BinftyReport> {
    binfty_relations_check_with(sample, &brace)
}

// ---------------------------------------------------------------------------
// cohomology

/// Basis of cochains of fixed arity and weight up to a bound: `(inputs, output monomial)`.
#[derive(Clone, Debug)]
pub struct CochainSpace {
    pub vars: usize,
    pub arity: usize,
    pub weight: i64,
    pub bound: i64,
    pub basis: Vec<(Vec<Mono>, Mono)>,
    index: HashMap<(Vec<Mono>, Mono), usize>,
}

impl CochainSpace {
    pub fn new(vars: usize, arity: usize, weight: i64, bound: i64) -> Self {
        let mut basis = Vec::new();
        for t in input_tuples(vars, arity, bound) {
            for m in monomials_of_degree(vars, tuple_degree(&t) + weight) {
                basis.push((t.clone(), m));
            }
        }
        let index = basis.iter().cloned().enumerate().map(|(i, b)| (b, i)).collect();
        CochainSpace { vars, arity, weight, bound, basis, index }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn coordinates(&self, c: &Cochain) -> Result<SparseVec> {
        let c = c.restrict(self.bound)?;
        let mut v: SparseVec = Vec::new();
        for (t, p) in &c.table {
            for (m, x) in p {
                v.push((self.index[&(t.clone(), m.clone())], x.clone()));
            }
        }
        v.sort_by_key(|(i, _)| *i);
        Ok(v)
    }

    pub fn cochain(&self, v: &SparseVec) -> Cochain {
        let mut c = Cochain::zero(self.vars, self.arity, self.weight, self.bound);
        for (i, x) in v {
            let (t, m) = &self.basis[*i];
            let mut cur = c.table.remove(t).unwrap_or_default();
            poly_add(&mut cur, m.clone(), x.clone());
            if !cur.is_empty() {
                c.table.insert(t.clone(), cur);
            }
        }
        c
    }
}

/// Matrix of the Hochschild differential `C^n_w → C^{n+1}_w` at a bound,
/// assembled from the alternating formula row by row.
pub fn differential_matrix(src: &CochainSpace, dst: &CochainSpace) -> RationalMatrix {
    let n = src.arity;
    let rows: Vec<SparseVec> = dst
        .basis
        .par_iter()
        .map(|(t, m)| {
            // coefficient of (t ↦ m) in d(e_j) for every source basis element j
            let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
            let mut add = |inputs: Vec<Mono>, factor: Option<&Mono>, s: i64| {
                let target = match factor {
                    None => m.clone(),
                    Some(f) => {
                        // m = f · m', need m' = m / f
                        if m.iter().zip(f).any(|(a, b)| a < b) {
                            return;
                        }
                        m.iter().zip(f).map(|(a, b)| a - b).collect()
                    }
                };
                if let Some(&j) = src.index.get(&(inputs, target)) {
                    *acc.entry(j).or_insert_with(Q::zero) += q(s);
                }
            };
            add(t[1..].to_vec(), Some(&t[0]), 1);
            for i in 0..n {
                let mut inp: Vec<Mono> = t[..i].to_vec();
                inp.push(mono_mul(&t[i], &t[i + 1]));
                inp.extend(t[i + 2..].iter().cloned());
                add(inp, None, if i % 2 == 0 { -1 } else { 1 });
            }
            add(t[..n].to_vec(), Some(&t[n]), if n % 2 == 0 { -1 } else { 1 });
            acc.into_iter().filter(|(_, x)| !x.is_zero()).collect()
        })
        .collect();
    RationalMatrix::from_rows(dst.dim(), src.dim(), rows)
}

/// Dimension and representatives of `H^n_w` of the complex truncated at `bound`.
pub fn truncated_cohomology(vars: usize, bound: i64, n: usize, w: i64) -> Result<(usize, Vec<Cochain>)> {
    let mid = CochainSpace::new(vars, n, w, bound);
    let next = CochainSpace::new(vars, n + 1, w, bound);
    let d_out = differential_matrix(&mid, &next);
    let image = if n > 0 {
        let prev = CochainSpace::new(vars, n - 1, w, bound);
        differential_matrix(&prev, &mid).image_basis()
    } else {
        SubspaceBasis::zero(mid.dim())
    };
    let ker = d_out.kernel_basis();
    let mut span = image.clone();
    let mut reps = Vec::new();
    for v in ker.vectors() {
        if !span.contains(v) {
            span = span.sum(&SubspaceBasis::from_vectors(mid.dim(), [v.clone()]));
            reps.push(mid.cochain(v));
        }
    }
    Ok((reps.len(), reps))
}

#[derive(Clone, Debug, Serialize)]
pub struct CohomologyEntry {
    pub arity: usize,
    pub weight: i64,
    pub dim: usize,
    pub stabilized: bool,
    /// dimension one bound higher (equal to `dim` when stabilized)
    pub dim_next: usize,
    pub hkr_oracle: usize,
    pub matches_hkr: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct AlgebraInfo {
    pub vars: usize,
    pub degree_bound: i64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CohomologyTable {
    pub algebra: AlgebraInfo,
    pub entries: Vec<CohomologyEntry>,
}

/// Stabilized `dim H^n_w` with representatives; `NotStabilized` when `D` and `D + 1` disagree.
pub fn hh_cohomology(a: &TruncatedPolyAlgebra, n: usize, w: i64) -> Result<(usize, Vec<Cochain>)> {
    let (d0, reps) = truncated_cohomology(a.vars, a.degree_bound, n, w)?;
    let (d1, _) = truncated_cohomology(a.vars, a.degree_bound + 1, n, w)?;
    if d0 != d1 {
        return Err(Error::NotStabilized { low: a.degree_bound, high: a.degree_bound + 1 });
    }
    Ok((d0, reps))
}

/// `#{x^α ξ_I : |I| = n, |α| − n = w}`, the dimension of `Λⁿ T_A` in weight `w`.
pub fn hkr_oracle(vars: usize, n: usize, w: i64) -> usize {
    if n > vars {
        return 0;
    }
    binomial(vars, n) * monomials_of_degree(vars, w + n as i64).len()
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Table over arities `0..=max_arity` and a weight window, blocks in parallel.
pub fn cohomology_table(a: &TruncatedPolyAlgebra, max_arity: usize, weights: &[i64]) -> Result<CohomologyTable> {
    let keys: Vec<(usize, i64)> = (0..=max_arity).flat_map(|n| weights.iter().map(move |&w| (n, w))).collect();
    let entries: Result<Vec<CohomologyEntry>> = keys
        .par_iter()
        .map(|&(n, w)| {
            let (dim, _) = truncated_cohomology(a.vars, a.degree_bound, n, w)?;
            let (dim_next, _) = truncated_cohomology(a.vars, a.degree_bound + 1, n, w)?;
            let oracle = hkr_oracle(a.vars, n, w);
            Ok(CohomologyEntry {
                arity: n,
                weight: w,
                dim,
                stabilized: dim == dim_next,
                dim_next,
                hkr_oracle: oracle,
                matches_hkr: dim == oracle && dim == dim_next,
            })
        })
        .collect();
    Ok(CohomologyTable { algebra: AlgebraInfo { vars: a.vars, degree_bound: a.degree_bound }, entries: entries? })
}

// ---------------------------------------------------------------------------
// HKR

fn partial_mono(m: &[u32], i: usize) -> Option<(Q, Mono)> {
    if m[i] == 0 {
        return None;
    }
    let mut r = m.to_vec();
    r[i] -= 1;
    Some((q(m[i] as i64), r))
}

fn permutations(n: usize) -> Vec<(Vec<usize>, i64)> {
    if n == 0 {
        return vec![(Vec::new(), 1)];
    }
    let mut out = Vec::new();
    for (p, s) in permutations(n - 1) {
        // insert n−1 at every position; moving it left past k entries adds k inversions
        for pos in 0..=p.len() {
            let mut v = p.clone();
            v.insert(pos, n - 1);
            let inv = (p.len() - pos) as i64;
            out.push((v, if inv % 2 == 0 { s } else { -s }));
        }
    }
    out
}

/// `x^α ξ_I ↦ ((a₁,…,a_p) ↦ Σ_σ sgn(σ) x^α Π_k ∂_{i_{σ(k)}} a_k)`, no `1/p!`.
pub fn hkr_map(p: &PolyvectorField, bound: i64) -> Result<Cochain> {
    let deg = p.exterior_degree().unwrap_or(0) as usize;
    let w = p.terms.keys().next().map(|k| k.weight()).unwrap_or(0);
    hkr_map_typed(p, deg, w, bound)
}

/// Same with arity and weight given (needed for the zero field).
pub fn hkr_map_typed(p: &PolyvectorField, deg: usize, w: i64, bound: i64) -> Result<Cochain> {
    if p.terms.keys().any(|k| k.weight() != w || k.exterior_degree() != deg as i64) {
        return Err(Error::Usage("hkr_map needs a homogeneous polyvector field".into()));
    }
    let perms = permutations(deg);
    let vars = p.vars;
    let terms: Vec<(PolyKey, Q, Vec<usize>)> = p
        .terms
        .iter()
        .map(|(k, c)| (k.clone(), c.clone(), (0..vars).filter(|i| k.xi & (1 << i) != 0).collect()))
        .collect();
    Ok(Cochain::from_fn(vars, deg, w, bound, |t| {
        let mut out = Poly::new();
        for (k, c, idx) in &terms {
            for (perm, s) in &perms {
                let mut coeff = c * q(*s);
                let mut mono = k.alpha.clone();
                let mut ok = true;
                for (slot, &pi) in perm.iter().enumerate() {
                    match partial_mono(&t[slot], idx[pi]) {
                        Some((x, r)) => {
                            coeff *= x;
                            mono = mono_mul(&mono, &r);
                        }
                        None => {
                            ok = false;
                            break;
                        }
                    }
                }
                if ok {
                    poly_add(&mut out, mono, coeff);
                }
            }
        }
        out
    }))
}

// ---------------------------------------------------------------------------
// Gerstenhaber structure on cohomology

/// Coboundary spaces, cached by (arity, weight, bound).
pub struct Coboundaries {
    vars: usize,
    cache: HashMap<(usize, i64, i64), (CochainSpace, SubspaceBasis)>,
}

impl Coboundaries {
    pub fn new(vars: usize) -> Self {
        Coboundaries { vars, cache: HashMap::new() }
    }

    /// Membership in the image of `d` at the cochain's own bound.
    pub fn is_coboundary(&mut self, c: &Cochain) -> Result<bool> {
        if c.is_zero() {
            return Ok(true);
        }
        let key = (c.arity, c.weight, c.bound);
        if !self.cache.contains_key(&key) {
            let mid = CochainSpace::new(self.vars, c.arity, c.weight, c.bound);
            let img = if c.arity > 0 {
                let prev = CochainSpace::new(self.vars, c.arity - 1, c.weight, c.bound);
                differential_matrix(&prev, &mid).image_basis()
            } else {
                SubspaceBasis::zero(mid.dim())
            };
            self.cache.insert(key, (mid, img));
        }
        let (space, img) = &self.cache[&key];
        Ok(img.contains(&space.coordinates(c)?))
    }
}

fn factorial(n: usize) -> i64 {
    (1..=n as i64).product()
}

/// Diagnostics of [`verify_gerstenhaber_on_cohomology`].
#[derive(Clone, Debug, Serialize)]
pub struct GerstenhaberReport {
    pub ok: bool,
    pub checks: usize,
    pub failure: Option<String>,
}

/// On cohomology representatives: cup commutative and associative, bracket
/// Jacobi and a derivation of cup (`[g∪h, f] = [g,f]∪h + (−1)^{|g|(|f|−1)} g∪[h,f]`,
/// unshifted degrees), all modulo coboundaries; and `hkr_map`
/// carrying (wedge, Schouten) to (cup, bracket) modulo coboundaries:
/// `p! q! · hkr(P∧Q) ≡ (p+q)! · hkr(P) ∪ hkr(Q)` and
/// `p! q! · hkr([P,Q]) ≡ (−1)^{(p−1)(q−1)} (p+q−1)! · [hkr(P), hkr(Q)]` with the Schouten
/// bracket of [`PolyvectorField::schouten`] (i.e. the Gerstenhaber bracket matches `−[Q,P]`).
pub fn verify_gerstenhaber_on_cohomology(a: &TruncatedPolyAlgebra, max_arity: usize, weights: &[i64]) -> Result<GerstenhaberReport> {
    let mut reps: Vec<Cochain> = Vec::new();
    for n in 0..=max_arity {
        for &w in weights {
            let (_, r) = hh_cohomology(a, n, w)?;
            reps.extend(r);
        }
    }
    let mut cob = Coboundaries { vars: a.vars, cache: HashMap::new() };
    let mut checks = 0;
    macro_rules! require {
        ($c:expr, $what:expr) => {{
            checks += 1;
            if !cob.is_coboundary(&$c)? {
                return Ok(GerstenhaberReport { ok: false, checks, failure: Some($what.to_string()) });
            }
        }};
    }
    let deg = |c: &Cochain| c.arity as i64;
    for f in &reps {
        for g in &reps {
            if f.arity + g.arity <= max_arity {
                let c = cup(f, g).add_scaled(&cup(g, f), &-sign(deg(f) * deg(g)));
                require!(c, "cup is not graded commutative");
            }
            for h in &reps {
                if f.arity + g.arity + h.arity <= max_arity {
                    let c = cup(&cup(f, g), h).add_scaled(&cup(f, &cup(g, h)), &-Q::one());
                    require!(c, "cup is not associative");
                }
                let total = f.arity + g.arity + h.arity;
                if total >= 2 && total <= max_arity + 2 {
                    let terms = [jacobi_term(f, g, h), jacobi_term(g, h, f), jacobi_term(h, f, g)];
                    let c = sum_present(terms.into_iter().flatten().flatten());
                    if let Some(c) = c {
                        require!(c, "bracket violates Jacobi");
                    }
                }
                if total >= 1 && total <= max_arity + 1 {
                    // [g∪h, f] = [g,f]∪h + (−1)^{|g|(|f|−1)} g∪[h,f]
                    let s = sign(deg(g) * (deg(f) - 1));
                    let l = bracket_or_zero(&cup(g, h), f)?;
                    let r1 = bracket_or_zero(g, f)?.map(|b| cup(&b, h).scaled(&-Q::one()));
                    let r2 = bracket_or_zero(h, f)?.map(|b| cup(g, &b).scaled(&-s.clone()));
                    if let Some(c) = sum_present([l, r1, r2].into_iter().flatten()) {
                        require!(c, format!("bracket is not a derivation of cup on arities ({}, {}, {}), weights ({}, {}, {})", f.arity, g.arity, h.arity, f.weight, g.weight, h.weight));
                    }
                }
            }
        }
    }
    // HKR compatibility on monomial polyvector fields in the window
    let fields: Vec<PolyvectorField> = polyvector_monomials(a.vars, max_arity, weights);
    for p in &fields {
        let hp = hkr_map(p, a.degree_bound)?;
        checks += 1;
        if !hochschild_differential(&hp)?.is_zero() {
            return Ok(GerstenhaberReport { ok: false, checks, failure: Some(format!("hkr({p}) is not a cocycle")) });
        }
        let pd = p.exterior_degree().unwrap_or(0) as usize;
        for r in &fields {
            let rd = r.exterior_degree().unwrap_or(0) as usize;
            let hr = hkr_map(r, a.degree_bound)?;
            if pd + rd <= max_arity {
                let wedge = p.wedge(r);
                let lhs = hkr_map_typed(&wedge, pd + rd, hp.weight + hr.weight, a.degree_bound)?.scaled(&q(factorial(pd) * factorial(rd)));
                let c = lhs.add_scaled(&cup(&hp, &hr), &-q(factorial(pd + rd)));
                require!(c, format!("hkr does not carry {p} ∧ {r} to the cup product"));
            }
            if pd + rd >= 1 && pd + rd - 1 <= max_arity {
                let Ok(br) = gerst_bracket(&hp, &hr) else { continue };
                let sch = p.schouten(r);
                let lhs = hkr_map_typed(&sch, pd + rd - 1, hp.weight + hr.weight, br.bound)?.scaled(&q(factorial(pd) * factorial(rd)));
                let s = sign((pd as i64 - 1) * (rd as i64 - 1));
                let c = lhs.add_scaled(&br, &-(q(factorial(pd + rd - 1)) * s));
                require!(c, format!("hkr does not carry [{p}, {r}] to the bracket"));
            }
        }
    }
    Ok(GerstenhaberReport { ok: true, checks, failure: None })
}

/// `[f, g]`, or `None` when both are constants (no such cochain).
fn bracket_or_zero(f: &Cochain, g: &Cochain) -> Result<Option<Cochain>> {
    if f.arity + g.arity == 0 {
        return Ok(None);
    }
    gerst_bracket(f, g).map(Some)
}

/// `(−1)^{|f||h|} [f, [g, h]]`, one cyclic term of graded Jacobi.
fn jacobi_term(f: &Cochain, g: &Cochain, h: &Cochain) -> Result<Option<Cochain>> {
    let Some(gh) = bracket_or_zero(g, h)? else { return Ok(None) };
    Ok(bracket_or_zero(f, &gh)?.map(|c| c.scaled(&sign(f.degree() * h.degree()))))
}

fn sum_present(terms: impl IntoIterator<Item = Cochain>) -> Option<Cochain> {
    terms.into_iter().reduce(|a, b| a.add_scaled(&b, &Q::one()))
}

/// Monomials `x^α ξ_I` with `|I| ≤ max_arity` and weight in the window.
pub fn polyvector_monomials(vars: usize, max_arity: usize, weights: &[i64]) -> Vec<PolyvectorField> {
    let mut out = Vec::new();
    for xi in 0u32..(1 << vars) {
        let e = xi.count_ones() as usize;
        if e > max_arity {
            continue;
        }
        for &w in weights {
            for alpha in monomials_of_degree(vars, w + e as i64) {
                out.push(PolyvectorField::monomial(vars, PolyKey::new(alpha, xi), Q::one()));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Alternating Hochschild differential evaluated directly.
    fn direct_d(f: &Cochain) -> Cochain {
        let n = f.arity;
        Cochain::from_fn(f.vars, n + 1, f.weight, f.bound, |t| {
            let mut out = poly_mul(&mono_poly(&t[0]), &f.eval(&t[1..]));
            for i in 0..n {
                let mut inp: Vec<Mono> = t[..i].to_vec();
                inp.push(mono_mul(&t[i], &t[i + 1]));
                inp.extend(t[i + 2..].iter().cloned());
                for (m, c) in f.eval(&inp) {
                    poly_add(&mut out, m, c * sign(i as i64 + 1));
                }
            }
            for (m, c) in poly_mul(&f.eval(&t[..n]), &mono_poly(&t[n])) {
                poly_add(&mut out, m, c * sign(n as i64 + 1));
            }
            out
        })
    }

    #[test]
    fn brace_differential_matches_alternating_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for vars in [1, 2] {
            for n in 0..3 {
                for w in -1..=1 {
                    let f = Cochain::random(&mut rng, vars, n, w, 3, 0.5);
                    assert_eq!(hochschild_differential(&f).unwrap(), direct_d(&f), "vars {vars} n {n} w {w}");
                }
            }
        }
    }

    #[test]
    fn matrix_differential_matches_alternating_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for n in 0..3 {
            let f = Cochain::random(&mut rng, 2, n, 1, 3, 0.5);
            let src = CochainSpace::new(2, n, 1, 3);
            let dst = CochainSpace::new(2, n + 1, 1, 3);
            let m = differential_matrix(&src, &dst);
            let v = m.mul_vec(&src.coordinates(&f).unwrap());
            assert_eq!(dst.cochain(&v), direct_d(&f));
        }
    }

    #[test]
    fn small_examples() {
        let id = Cochain::identity(1, 4);
        let mu = Cochain::mu(1, 4);
        assert_eq!(hochschild_differential(&id).unwrap(), mu);
        let a = Cochain::constant(1, &mono_poly(&[2]));
        assert!(hochschild_differential(&a.restrict(4).unwrap()).unwrap().is_zero());
        assert_eq!(cup(&id, &id), mu);
        assert!(brace(&mu, &[mu.clone()]).unwrap().is_zero());
        assert!(gerst_bracket(&mu, &mu).unwrap().is_zero());
        let f3 = Cochain::random(&mut ChaCha8Rng::seed_from_u64(1), 1, 3, 0, 3, 1.0);
        assert_eq!(choose(f3.arity, 2).len(), 3);
        assert_eq!(choose(2, 1).len(), 2);
    }

    #[test]
    fn validity_bound_refuses() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let f = Cochain::random(&mut rng, 1, 2, 0, 2, 0.5);
        let g = Cochain::random(&mut rng, 1, 1, 3, 2, 0.5);
        assert!(matches!(brace(&f, &[g]), Err(Error::ValidityUnderflow { .. })));
    }

    #[test]
    fn hkr_examples() {
        let a = TruncatedPolyAlgebra::new(1, 6);
        assert_eq!(hh_cohomology(&a, 0, 2).unwrap().0, 1);
        for w in -2..=2 {
            assert_eq!(hh_cohomology(&a, 2, w).unwrap().0, 0);
        }
        let b = TruncatedPolyAlgebra::new(2, 4);
        let (dim, reps) = hh_cohomology(&b, 2, -2).unwrap();
        assert_eq!(dim, 1);
        let dxdy = PolyvectorField::partial(2, 0).wedge(&PolyvectorField::partial(2, 1));
        let h = hkr_map(&dxdy, 4).unwrap();
        assert!(hochschild_differential(&h).unwrap().is_zero());
        // the class of ∂x∧∂y spans H²₋₂
        let mut cob = Coboundaries { vars: 2, cache: HashMap::new() };
        assert!(!cob.is_coboundary(&h).unwrap());
        let space = CochainSpace::new(2, 2, -2, 4);
        let hv = space.coordinates(&h).unwrap();
        let rv = space.coordinates(&reps[0]).unwrap();
        let prev = CochainSpace::new(2, 1, -2, 4);
        let img = differential_matrix(&prev, &space).image_basis();
        let both = img.sum(&SubspaceBasis::from_vectors(space.dim(), [hv]));
        assert!(both.contains(&rv));
        let dx = hkr_map(&PolyvectorField::partial(1, 0), 4).unwrap();
        assert!(hochschild_differential(&dx).unwrap().is_zero());
    }

    #[test]
    fn binfty_small() {
        let mu = Cochain::mu(1, 3);
        assert!(binfty_relations_check(&[mu]).unwrap().ok);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = vec![Cochain::random(&mut rng, 1, 1, 1, 4, 0.6), Cochain::random(&mut rng, 1, 2, 0, 4, 0.6)];
        let r = binfty_relations_check(&s).unwrap();
        assert!(r.ok, "{r:?}");
        let corrupt = |f: &Cochain, gs: &[Cochain]| -> Result<Cochain> {
            let b = brace(f, gs)?;
            Ok(if gs.len() == 2 { b.scaled(&q(-1)) } else { b })
        };
        assert!(!binfty_relations_check_with(&s, &corrupt).unwrap().ok);
    }

    #[test]
    fn gerstenhaber_on_cohomology_small() {
        let a = TruncatedPolyAlgebra::new(1, 4);
        let r = verify_gerstenhaber_on_cohomology(&a, 2, &[-1, 0, 1]).unwrap();
        assert!(r.ok, "{r:?}");
    }
}
