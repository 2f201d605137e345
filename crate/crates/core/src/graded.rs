//! Graded vector spaces, the Koszul sign rule, and small symmetric-group
//! representations (n ≤ 6, dense action on explicit bases).

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{q, RationalMatrix, SparseVec, SubspaceBasis, Q};

pub const MAX_SYMMETRIC_N: usize = 6;

/// A permutation in one-line notation, 0-based: `p[i]` is the image of `i`.
pub type Perm = Vec<usize>;

pub fn identity_perm(n: usize) -> Perm {
    (0..n).collect()
}

pub fn is_perm(p: &[usize]) -> bool {
    let mut seen = vec![false; p.len()];
    for &x in p {
        if x >= p.len() || seen[x] {
            return false;
        }
        seen[x] = true;
    }
    true
}

pub fn validate_perm(p: &[usize]) -> Result<()> {
    if is_perm(p) {
        Ok(())
    } else {
        Err(Error::InvalidPermutation(format!("{p:?}")))
    }
}

/// `(a ∘ b)(i) = a(b(i))`.
pub fn compose(a: &[usize], b: &[usize]) -> Perm {
    b.iter().map(|&i| a[i]).collect()
}

pub fn inverse(p: &[usize]) -> Perm {
    let mut inv = vec![0; p.len()];
    for (i, &x) in p.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

/// Adjacent transposition `s_i` swapping `i` and `i+1`.
pub fn transposition(n: usize, i: usize) -> Perm {
    let mut p = identity_perm(n);
    p.swap(i, i + 1);
    p
}

/// All permutations of `0..n` in lexicographic order.
pub fn all_perms(n: usize) -> Vec<Perm> {
    let mut out = Vec::new();
    let mut cur = identity_perm(n);
    loop {
        out.push(cur.clone());
        // next lexicographic permutation
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| cur[i] < cur[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| cur[j] > cur[i]).unwrap();
        cur.swap(i, j);
        cur[i + 1..].reverse();
    }
    out
}

pub fn perm_sign(p: &[usize]) -> i32 {
    let mut s = 1;
    for i in 0..p.len() {
        for j in i + 1..p.len() {
            if p[i] > p[j] {
                s = -s;
            }
        }
    }
    s
}

/// Sign picked up when `perm` moves the factor in slot `i` to slot `perm[i]`.
///
/// Every pair of factors whose relative order is reversed contributes
/// `(-1)^{|a||b|}`.
pub fn koszul_sign(perm: &[usize], degrees: &[i64]) -> i32 {
    assert_eq!(perm.len(), degrees.len(), "one degree per factor");
    let mut s = 1;
    for i in 0..perm.len() {
        for j in i + 1..perm.len() {
            if perm[i] > perm[j] && (degrees[i] * degrees[j]).rem_euclid(2) == 1 {
                s = -s;
            }
        }
    }
    s
}

/// Degrees after applying `perm`: slot `perm[i]` receives `degrees[i]`.
pub fn permute_degrees(perm: &[usize], degrees: &[i64]) -> Vec<i64> {
    let mut out = vec![0; degrees.len()];
    for (i, &d) in degrees.iter().enumerate() {
        out[perm[i]] = d;
    }
    out
}

/// A finite-dimensional ℤ-graded space given by labelled homogeneous basis vectors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct GradedVectorSpace {
    pub basis: Vec<(String, i64)>,
}

impl GradedVectorSpace {
    pub fn new(basis: Vec<(String, i64)>) -> Self {
        GradedVectorSpace { basis }
    }

    /// `n` basis vectors `v1..vn` all in degree `deg`.
    pub fn concentrated(n: usize, deg: i64) -> Self {
        GradedVectorSpace { basis: (1..=n).map(|i| (format!("v{i}"), deg)).collect() }
    }

    pub fn from_dims(dims: &BTreeMap<i64, usize>) -> Self {
        let mut basis = Vec::new();
        for (&d, &n) in dims {
            for i in 0..n {
                basis.push((format!("e{d}_{i}"), d));
            }
        }
        GradedVectorSpace { basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn degrees(&self) -> Vec<i64> {
        self.basis.iter().map(|(_, d)| *d).collect()
    }

    /// degree → dimension, zero components omitted.
    pub fn components(&self) -> BTreeMap<i64, usize> {
        let mut m = BTreeMap::new();
        for (_, d) in &self.basis {
            *m.entry(*d).or_insert(0) += 1;
        }
        m
    }

    /// `V[n]`: degree `d` becomes `d - n`.
    pub fn shift(&self, n: i64) -> Self {
        GradedVectorSpace { basis: self.basis.iter().map(|(l, d)| (l.clone(), d - n)).collect() }
    }

    pub fn dual(&self) -> Self {
        GradedVectorSpace { basis: self.basis.iter().map(|(l, d)| (format!("{l}*"), -d)).collect() }
    }

    pub fn direct_sum(&self, other: &Self) -> Self {
        let mut basis = self.basis.clone();
        basis.extend(other.basis.iter().cloned());
        GradedVectorSpace { basis }
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut basis = Vec::new();
        for (a, da) in &self.basis {
            for (b, db) in &other.basis {
                basis.push((format!("{a}⊗{b}"), da + db));
            }
        }
        GradedVectorSpace { basis }
    }
}

/// Λ_n = k[n−1] with the sign action.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SignRepresentation {
    pub n: usize,
}

impl SignRepresentation {
    pub fn degree(&self) -> i64 {
        -(self.n as i64 - 1)
    }

    pub fn module(&self) -> SnModule {
        SnModule::sign(self.n)
    }
}

/// A representation of S_n given by the matrices of the adjacent transpositions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnModule {
    pub n: usize,
    pub dim: usize,
    pub generators: Vec<RationalMatrix>,
}

impl SnModule {
    pub fn new(n: usize, dim: usize, generators: Vec<RationalMatrix>) -> Result<Self> {
        if n > MAX_SYMMETRIC_N {
            return Err(Error::ArityOverflow { arity: n, bound: MAX_SYMMETRIC_N });
        }
        if generators.len() != n.saturating_sub(1)
            || generators.iter().any(|g| g.nrows() != dim || g.ncols() != dim)
        {
            return Err(Error::DimensionMismatch("generator matrices do not fit the module".into()));
        }
        Ok(SnModule { n, dim, generators })
    }

    /// Module from an action of each `s_i` on basis vectors.
    pub fn from_generator_action(n: usize, dim: usize, act: impl Fn(usize, usize) -> SparseVec) -> Self {
        let generators = (0..n.saturating_sub(1))
            .map(|i| {
                let cols: Vec<SparseVec> = (0..dim).map(|j| act(i, j)).collect();
                RationalMatrix::from_columns(dim, &cols)
            })
            .collect();
        SnModule { n, dim, generators }
    }

    pub fn trivial(n: usize, dim: usize) -> Self {
        Self::from_generator_action(n, dim, |_, j| vec![(j, Q::one())])
    }

    pub fn sign(n: usize) -> Self {
        Self::from_generator_action(n, 1, |_, _| vec![(0, q(-1))])
    }

    /// Left regular representation on the basis `all_perms(n)`.
    pub fn regular(n: usize) -> Self {
        let perms = all_perms(n);
        let index: BTreeMap<Perm, usize> = perms.iter().cloned().enumerate().map(|(i, p)| (p, i)).collect();
        Self::from_generator_action(n, perms.len(), |i, j| {
            let img = compose(&transposition(n, i), &perms[j]);
            vec![(index[&img], Q::one())]
        })
    }

    /// S_n acting on `V^{⊗n}` by permuting factors with Koszul signs.
    /// Basis: tuples of indices into `V`, lexicographic.
    pub fn tensor_power(v: &GradedVectorSpace, n: usize) -> (Self, Vec<Vec<usize>>) {
        let d = v.dim();
        let mut tuples: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..n {
            tuples = tuples
                .into_iter()
                .flat_map(|t| {
                    (0..d).map(move |k| {
                        let mut t2 = t.clone();
                        t2.push(k);
                        t2
                    })
                })
                .collect();
        }
        let index: BTreeMap<Vec<usize>, usize> = tuples.iter().cloned().enumerate().map(|(i, t)| (t, i)).collect();
        let degs = v.degrees();
        let m = Self::from_generator_action(n, tuples.len(), |i, j| {
            let mut t = tuples[j].clone();
            let sign = if (degs[t[i]] * degs[t[i + 1]]).rem_euclid(2) == 1 { -1 } else { 1 };
            t.swap(i, i + 1);
            vec![(index[&t], q(sign))]
        });
        (m, tuples)
    }

    /// Matrix of an arbitrary permutation, via a reduced word.
    pub fn action(&self, p: &[usize]) -> RationalMatrix {
        assert_eq!(p.len(), self.n);
        let mut cur: Perm = p.to_vec();
        let mut word = Vec::new();
        // peel descents: p = (p ∘ s_i) ∘ s_i reduces the length
        while let Some(i) = (0..self.n.saturating_sub(1)).find(|&i| cur[i] > cur[i + 1]) {
            word.push(i);
            cur.swap(i, i + 1);
        }
        // p ∘ s_{w1} ∘ … ∘ s_{wk} = id, so ρ(p) = ρ(s_{wk}) ⋯ ρ(s_{w1})
        let mut m = RationalMatrix::identity(self.dim);
        for &i in &word {
            m = self.generators[i].mul(&m).expect("square");
        }
        m
    }

    pub fn character(&self, p: &[usize]) -> Q {
        let m = self.action(p);
        (0..self.dim).map(|i| m.get(i, i)).fold(Q::zero(), |a, b| a + b)
    }

    /// Character restricted to the basis indices in `block` (an invariant block).
    pub fn block_character(&self, p: &[usize], block: &[usize]) -> Q {
        let m = self.action(p);
        block.iter().map(|&i| m.get(i, i)).fold(Q::zero(), |a, b| a + b)
    }

    pub fn characters(&self) -> Vec<Q> {
        all_perms(self.n).iter().map(|p| self.character(p)).collect()
    }

    /// Checks s_i² = 1, (s_i s_{i+1})³ = 1, (s_i s_j)² = 1 for |i−j| > 1.
    pub fn satisfies_coxeter(&self) -> bool {
        let id = RationalMatrix::identity(self.dim);
        let g = &self.generators;
        let pow = |m: &RationalMatrix, k: usize| {
            let mut r = id.clone();
            for _ in 0..k {
                r = r.mul(m).unwrap();
            }
            r
        };
        for i in 0..g.len() {
            if pow(&g[i], 2) != id {
                return false;
            }
            for j in i + 1..g.len() {
                let prod = g[i].mul(&g[j]).unwrap();
                let order = if j == i + 1 { 3 } else { 2 };
                if pow(&prod, order) != id {
                    return false;
                }
            }
        }
        true
    }

    /// Kronecker product with the diagonal action.
    pub fn tensor(&self, other: &SnModule) -> SnModule {
        assert_eq!(self.n, other.n);
        let (da, db) = (self.dim, other.dim);
        Self::from_generator_action(self.n, da * db, |i, j| {
            let (a, b) = (j / db, j % db);
            let ca: Vec<(usize, Q)> = (0..da).map(|r| (r, self.generators[i].get(r, a))).filter(|(_, v)| !v.is_zero()).collect();
            let cb: Vec<(usize, Q)> = (0..db).map(|r| (r, other.generators[i].get(r, b))).filter(|(_, v)| !v.is_zero()).collect();
            let mut out = Vec::new();
            for (ra, va) in &ca {
                for (rb, vb) in &cb {
                    out.push((ra * db + rb, va * vb));
                }
            }
            out.sort_by_key(|(k, _)| *k);
            out
        })
    }

    pub fn direct_sum(&self, other: &SnModule) -> SnModule {
        assert_eq!(self.n, other.n);
        let da = self.dim;
        Self::from_generator_action(self.n, da + other.dim, |i, j| {
            if j < da {
                self.generators[i].transpose().row(j).clone()
            } else {
                other.generators[i].transpose().row(j - da).iter().map(|(r, v)| (r + da, v.clone())).collect()
            }
        })
    }

    /// Restriction to S_k ⊂ S_n acting on the first k points.
    pub fn restrict(&self, k: usize) -> SnModule {
        assert!(k <= self.n);
        SnModule { n: k, dim: self.dim, generators: self.generators[..k.saturating_sub(1)].to_vec() }
    }

    /// (1/n!) Σ_σ ρ(σ).
    pub fn averaging_projector(&self) -> RationalMatrix {
        let perms = all_perms(self.n);
        let mut acc: BTreeMap<(usize, usize), Q> = BTreeMap::new();
        for p in &perms {
            let m = self.action(p);
            for r in 0..self.dim {
                for (c, v) in m.row(r) {
                    *acc.entry((r, *c)).or_insert_with(Q::zero) += v;
                }
            }
        }
        let nfact = q(perms.len() as i64);
        let mut rows = vec![Vec::new(); self.dim];
        for ((r, c), v) in acc {
            if !v.is_zero() {
                rows[r].push((c, v / &nfact));
            }
        }
        RationalMatrix::from_rows(self.dim, self.dim, rows)
    }

    pub fn invariants_subspace(&self) -> SubspaceBasis {
        self.averaging_projector().image_basis()
    }

    /// dim Hom_{S_n}(self, other) from characters.
    pub fn hom_dim(&self, other: &SnModule) -> usize {
        let perms = all_perms(self.n);
        let total: Q = perms
            .iter()
            .map(|p| self.character(p) * other.character(p))
            .fold(Q::zero(), |a, b| a + b);
        let v = total / q(perms.len() as i64);
        assert!(v.is_integer(), "character inner product must be integral");
        v.to_integer().try_into().expect("nonnegative")
    }

    pub fn isomorphic(&self, other: &SnModule) -> bool {
        self.n == other.n && self.dim == other.dim && self.characters() == other.characters()
    }
}

/// Ind from S_k (first k points) to S_n.
pub fn induce_rep(m: &SnModule, target: usize) -> SnModule {
    let k = m.n;
    let n = target;
    assert!(k <= n && n <= MAX_SYMMETRIC_N);
    let in_sub = |p: &[usize]| (k..n).all(|i| p[i] == i);
    // left coset representatives, smallest lexicographic element of each coset
    let mut reps: Vec<Perm> = Vec::new();
    for g in all_perms(n) {
        let ginv = inverse(&g);
        if !reps.iter().any(|r| in_sub(&compose(&ginv, r))) {
            reps.push(g);
        }
    }
    let d = m.dim;
    SnModule::from_generator_action(n, reps.len() * d, |i, j| {
        let (c, b) = (j / d, j % d);
        let sg = compose(&transposition(n, i), &reps[c]);
        // find l and h with s_i g_c = g_l h
        for (l, r) in reps.iter().enumerate() {
            let h = compose(&inverse(r), &sg);
            if in_sub(&h) {
                let hm = m.action(&h[..k]);
                let col = hm.transpose().row(b).clone();
                return col.into_iter().map(|(r2, v)| (l * d + r2, v)).collect();
            }
        }
        unreachable!("cosets cover the group")
    })
}

pub fn invariants_subspace(m: &SnModule) -> SubspaceBasis {
    m.invariants_subspace()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn koszul_sign_examples() {
        assert_eq!(koszul_sign(&[1, 0], &[1, 1]), -1);
        assert_eq!(koszul_sign(&[0, 1, 2], &[1, 3, 5]), 1);
        assert_eq!(koszul_sign(&[1, 0], &[2, 1]), 1);
    }

    #[test]
    fn shift_moves_degree_down() {
        let v = GradedVectorSpace::concentrated(1, 0);
        assert_eq!(v.shift(1).degrees(), vec![-1]);
        assert_eq!(v.shift(0), v);
        assert_eq!(v.shift(2).shift(-5), v.shift(-3));
    }

    #[test]
    fn action_is_a_homomorphism() {
        let m = SnModule::regular(3);
        assert!(m.satisfies_coxeter());
        for a in all_perms(3) {
            for b in all_perms(3) {
                let lhs = m.action(&compose(&a, &b));
                let rhs = m.action(&a).mul(&m.action(&b)).unwrap();
                assert_eq!(lhs, rhs);
            }
        }
    }

    #[test]
    fn induce_dimensions() {
        assert_eq!(induce_rep(&SnModule::trivial(2, 1), 3).dim, 3);
        let sq = SnModule::tensor_power(&GradedVectorSpace::concentrated(2, 0), 2).0;
        let ind = induce_rep(&sq, 3);
        assert_eq!(ind.dim, 12);
        assert!(ind.satisfies_coxeter());
        // trivial induced is the permutation module on cosets: one invariant
        assert_eq!(induce_rep(&SnModule::trivial(2, 1), 3).invariants_subspace().dim(), 1);
    }

    #[test]
    fn invariants_examples() {
        assert_eq!(SnModule::trivial(3, 4).invariants_subspace().dim(), 4);
        assert_eq!(SnModule::sign(2).invariants_subspace().dim(), 0);
        assert_eq!(SnModule::regular(2).invariants_subspace().dim(), 1);
    }

    #[test]
    fn frobenius_reciprocity_at_three() {
        let m = SnModule::sign(2);
        let ind = induce_rep(&m, 3);
        // Hom_{S2}(M, Res Ind M) ≥ 1
        assert!(m.hom_dim(&ind.restrict(2)) >= 1);
        for w in [SnModule::trivial(3, 1), SnModule::sign(3)] {
            assert_eq!(ind.hom_dim(&w), m.hom_dim(&w.restrict(2)));
        }
    }
}
