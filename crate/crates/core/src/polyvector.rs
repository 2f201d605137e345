//! Polyvector fields on affine space: `k[x₁..x_N] ⊗ Λ(ξ₁..ξ_N)` with `ξ_i = ∂/∂x_i`
//! in degree 1, wedge product and the Schouten bracket.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::algebra::{BasisElem, FiniteAlgebra};
use crate::linalg::{q, SparseVec, Q};
use crate::operad::gerst;

/// Monomial `x^α ξ_I` (`I` as a bit mask, increasing order).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PolyKey {
    pub alpha: Vec<u32>,
    pub xi: u32,
}

impl PolyKey {
    pub fn new(alpha: Vec<u32>, xi: u32) -> Self {
        PolyKey { alpha, xi }
    }

    pub fn exterior_degree(&self) -> i64 {
        self.xi.count_ones() as i64
    }

    pub fn poly_degree(&self) -> i64 {
        self.alpha.iter().map(|&a| a as i64).sum()
    }

    /// Internal weight: polynomial degree minus exterior degree.
    pub fn weight(&self) -> i64 {
        self.poly_degree() - self.exterior_degree()
    }

    pub fn label(&self) -> String {
        let mut s = String::new();
        for (i, a) in self.alpha.iter().enumerate() {
            match a {
                0 => {}
                1 => s.push_str(&format!("x{}", i + 1)),
                _ => s.push_str(&format!("x{}^{}", i + 1, a)),
            }
        }
        for i in 0..self.alpha.len() {
            if self.xi & (1 << i) != 0 {
                s.push_str(&format!("d{}", i + 1));
            }
        }
        if s.is_empty() {
            s.push('1');
        }
        s
    }
}

/// A finite sum of monomials `c · x^α ξ_I`.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PolyvectorField {
    pub vars: usize,
    pub terms: BTreeMap<PolyKey, Q>,
}

impl fmt::Display for PolyvectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self.terms.iter().map(|(k, v)| format!("{}*{}", v, k.label())).collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// Sign of `ξ_I ∧ ξ_J` relative to `ξ_{I∪J}`; `None` on overlap.
fn wedge_sign(i: u32, j: u32) -> Option<i32> {
    if i & j != 0 {
        return None;
    }
    // inversions: pairs (a ∈ I, b ∈ J) with a > b
    let mut inv = 0;
    let mut jj = j;
    while jj != 0 {
        let b = jj.trailing_zeros();
        inv += (i >> (b + 1)).count_ones();
        jj &= jj - 1;
    }
    Some(if inv % 2 == 0 { 1 } else { -1 })
}

impl PolyvectorField {
    pub fn zero(vars: usize) -> Self {
        PolyvectorField { vars, terms: BTreeMap::new() }
    }

    pub fn monomial(vars: usize, key: PolyKey, c: Q) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(key, c);
        p
    }

    /// The coordinate function `x_i`.
    pub fn x(vars: usize, i: usize) -> Self {
        let mut a = vec![0; vars];
        a[i] = 1;
        Self::monomial(vars, PolyKey::new(a, 0), Q::one())
    }

    /// The coordinate vector field `∂_i`.
    pub fn partial(vars: usize, i: usize) -> Self {
        Self::monomial(vars, PolyKey::new(vec![0; vars], 1 << i), Q::one())
    }

    pub fn one(vars: usize) -> Self {
        Self::monomial(vars, PolyKey::new(vec![0; vars], 0), Q::one())
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, k: PolyKey, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(k.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&k);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (k, v) in &other.terms {
            out.add_term(k.clone(), v.clone());
        }
        out
    }

    pub fn scale(&self, c: &Q) -> Self {
        let mut out = Self::zero(self.vars);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v * c);
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&-Q::one()))
    }

    /// Exterior degree when homogeneous.
    pub fn exterior_degree(&self) -> Option<i64> {
        let mut it = self.terms.keys().map(|k| k.exterior_degree());
        let first = it.next()?;
        it.all(|d| d == first).then_some(first)
    }

    pub fn wedge(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.vars);
        for (a, va) in &self.terms {
            for (b, vb) in &other.terms {
                if let Some(s) = wedge_sign(a.xi, b.xi) {
                    let alpha = a.alpha.iter().zip(&b.alpha).map(|(x, y)| x + y).collect();
                    out.add_term(PolyKey::new(alpha, a.xi | b.xi), va * vb * q(s as i64));
                }
            }
        }
        out
    }

    /// `∂/∂x_i` on coefficients.
    pub fn d_x(&self, i: usize) -> Self {
        let mut out = Self::zero(self.vars);
        for (k, v) in &self.terms {
            if k.alpha[i] > 0 {
                let mut alpha = k.alpha.clone();
                alpha[i] -= 1;
                out.add_term(PolyKey::new(alpha, k.xi), v * q(k.alpha[i] as i64));
            }
        }
        out
    }

    /// Right derivative `· ←∂/∂ξ_i`.
    pub fn d_xi_right(&self, i: usize) -> Self {
        let mut out = Self::zero(self.vars);
        for (k, v) in &self.terms {
            if k.xi & (1 << i) != 0 {
                let after = (k.xi >> (i + 1)).count_ones();
                let s = if after % 2 == 0 { 1 } else { -1 };
                out.add_term(PolyKey::new(k.alpha.clone(), k.xi & !(1 << i)), v * q(s));
            }
        }
        out
    }

    /// Schouten bracket of homogeneous fields,
    /// `[P,Q] = Σ_i (P←∂ξ_i)(∂x_i Q) − (−1)^{(p−1)(q−1)} Σ_i (Q←∂ξ_i)(∂x_i P)`.
    pub fn schouten(&self, other: &Self) -> Self {
        let mut out = Self::zero(self.vars);
        for (ka, va) in &self.terms {
            for (kb, vb) in &other.terms {
                let a = Self::monomial(self.vars, ka.clone(), va.clone());
                let b = Self::monomial(self.vars, kb.clone(), vb.clone());
                let (p, r) = (ka.exterior_degree(), kb.exterior_degree());
                let sign = if ((p - 1) * (r - 1)).rem_euclid(2) == 1 { -Q::one() } else { Q::one() };
                for i in 0..self.vars {
                    out = out.add(&a.d_xi_right(i).wedge(&b.d_x(i)));
                    out = out.add(&b.d_xi_right(i).wedge(&a.d_x(i)).scale(&-sign.clone()));
                }
            }
        }
        out
    }
}

/// Wedge product and Schouten bracket.
pub fn schouten_structure(p: &PolyvectorField, r: &PolyvectorField) -> (PolyvectorField, PolyvectorField) {
    (p.wedge(r), p.schouten(r))
}

/// All monomials `x^α ξ_I` of weight at most `bound`, ordered by (weight, key).
pub fn monomials_up_to_weight(vars: usize, bound: i64) -> Vec<PolyKey> {
    let mut out = Vec::new();
    for xi in 0u32..(1 << vars) {
        let e = xi.count_ones() as i64;
        let max_poly = bound + e;
        if max_poly < 0 {
            continue;
        }
        for alpha in exponents(vars, max_poly as u32) {
            out.push(PolyKey::new(alpha, xi));
        }
    }
    out.sort_by(|a, b| (a.weight(), a).cmp(&(b.weight(), b)));
    out
}

/// Exponent vectors of total degree at most `d`.
pub fn exponents(vars: usize, d: u32) -> Vec<Vec<u32>> {
    fn rec(vars: usize, d: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == vars {
            out.push(cur.clone());
            return;
        }
        for a in 0..=d {
            cur.push(a);
            rec(vars, d - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(vars, d, &mut Vec::new(), &mut out);
    out
}

/// The Gerstenhaber algebra of polyvector fields truncated to weight ≤ `bound`:
/// `m = ∧`, `l(a, b) = (−1)^{|a|}[a, b]`. Filtration is the polynomial degree.
/// Products leaving the truncation are dropped.
pub fn polyvector_algebra(vars: usize, bound: i64) -> FiniteAlgebra {
    let keys = monomials_up_to_weight(vars, bound);
    let index: HashMap<PolyKey, usize> = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
    let basis: Vec<BasisElem> = keys
        .iter()
        .map(|k| BasisElem { label: k.label(), degree: k.exterior_degree(), weight: k.weight(), filt: k.poly_degree() })
        .collect();
    let mut alg = FiniteAlgebra::zero(gerst(), basis);
    let to_vec = |p: &PolyvectorField| -> SparseVec {
        let mut v: SparseVec = p.terms.iter().filter_map(|(k, c)| index.get(k).map(|&i| (i, c.clone()))).collect();
        v.sort_by_key(|(i, _)| *i);
        v
    };
    for (i, a) in keys.iter().enumerate() {
        let pa = PolyvectorField::monomial(vars, a.clone(), Q::one());
        for (j, b) in keys.iter().enumerate() {
            // products preserve weight, so skip pairs that land outside
            if a.weight() + b.weight() > bound {
                continue;
            }
            let pb = PolyvectorField::monomial(vars, b.clone(), Q::one());
            let m = to_vec(&pa.wedge(&pb));
            if !m.is_empty() {
                alg.products[0].insert((i, j), m);
            }
            let mut l = pa.schouten(&pb);
            if a.exterior_degree() % 2 == 1 {
                l = l.scale(&-Q::one());
            }
            let l = to_vec(&l);
            if !l.is_empty() {
                alg.products[1].insert((i, j), l);
            }
        }
    }
    alg
}

/// Vector of a polyvector field in the basis of `polyvector_algebra(vars, bound)`.
pub fn polyvector_coordinates(p: &PolyvectorField, bound: i64) -> SparseVec {
    let keys = monomials_up_to_weight(p.vars, bound);
    let mut v: SparseVec = keys
        .iter()
        .enumerate()
        .filter_map(|(i, k)| p.terms.get(k).map(|c| (i, c.clone())))
        .collect();
    v.sort_by_key(|(i, _)| *i);
    v
}
