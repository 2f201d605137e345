//! Finite-dimensional (possibly truncated) algebras over a quadratic operad,
//! given by structure constants on a homogeneous basis.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{axpy, q, SparseVec, Q};
use crate::operad::QuadraticPresentation;
use crate::tree::{substitution_sign, Expr, OpInfo, Symmetry};

/// A basis vector with cohomological degree, internal weight and a
/// non-negative filtration used for truncation (`filt(ab) ≤ filt(a) + filt(b)`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BasisElem {
    pub label: String,
    pub degree: i64,
    pub weight: i64,
    pub filt: i64,
}

/// Index of the first basis operation of each generator.
pub fn primary_ops(p: &QuadraticPresentation) -> Vec<usize> {
    let mut out = Vec::new();
    let mut k = 0;
    for g in &p.generators {
        out.push(k);
        k += if g.symmetry == Symmetry::Regular { 2 } else { 1 };
    }
    out
}

#[derive(Clone, Debug)]
pub struct FiniteAlgebra {
    pub presentation: QuadraticPresentation,
    pub basis: Vec<BasisElem>,
    /// `d(h)` for each basis element; empty when `d h = 0`
    pub differential: Vec<SparseVec>,
    /// per generator: `(a, b) ↦ g(a, b)`; absent pairs are zero
    pub products: Vec<HashMap<(usize, usize), SparseVec>>,
}

impl FiniteAlgebra {
    /// All operations zero.
    pub fn zero(presentation: QuadraticPresentation, basis: Vec<BasisElem>) -> Self {
        let n = basis.len();
        let g = presentation.generators.len();
        FiniteAlgebra { presentation, basis, differential: vec![Vec::new(); n], products: vec![HashMap::new(); g] }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn ops(&self) -> Vec<OpInfo> {
        self.presentation.ops()
    }

    pub fn has_differential(&self) -> bool {
        self.differential.iter().any(|v| !v.is_empty())
    }

    pub fn product(&self, gen: usize, a: usize, b: usize) -> SparseVec {
        self.products[gen].get(&(a, b)).cloned().unwrap_or_default()
    }

    /// Value of basis operation `op` (expanded index) on basis elements.
    pub fn op_value(&self, op: usize, a: usize, b: usize) -> SparseVec {
        let ops = self.ops();
        let prim = primary_ops(&self.presentation);
        if let Some(g) = prim.iter().position(|&p| p == op) {
            return self.product(g, a, b);
        }
        // second member of a regular pair: op(a,b) = (−1)^{|a||b|} partner(b,a)
        let partner = ops[op].partner;
        let g = prim.iter().position(|&p| p == partner).expect("partner is primary");
        let v = self.product(g, b, a);
        if (self.basis[a].degree * self.basis[b].degree).rem_euclid(2) == 1 {
            v.into_iter().map(|(i, x)| (i, -x)).collect()
        } else {
            v
        }
    }

    fn bilinear(&self, op: usize, x: &SparseVec, y: &SparseVec) -> SparseVec {
        let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
        for (a, va) in x {
            for (b, vb) in y {
                for (c, w) in self.op_value(op, *a, *b) {
                    *acc.entry(c).or_insert_with(Q::zero) += va * vb * w;
                }
            }
        }
        acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
    }

    /// Evaluate a tree with slot `i` replaced by basis element `args[i]`.
    pub fn evaluate(&self, tree: &Expr, args: &[usize]) -> SparseVec {
        match tree {
            Expr::Leaf(i) => vec![(args[*i as usize], Q::one())],
            Expr::Node(op, a, b) => {
                let x = self.evaluate(a, args);
                let y = self.evaluate(b, args);
                self.bilinear(*op as usize, &x, &y)
            }
        }
    }

    /// Check the defining relations on all basis triples whose total filtration
    /// is at most `filt_bound` (the range where truncation is exact).
    pub fn check_relations(&self, filt_bound: i64) -> Result<()> {
        let ops = self.ops();
        let rels = self.presentation.relation_combs();
        let n = self.dim();
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    let f = self.basis[a].filt + self.basis[b].filt + self.basis[c].filt;
                    if f > filt_bound {
                        continue;
                    }
                    let args = [a, b, c];
                    let degs: Vec<i64> = args.iter().map(|&i| self.basis[i].degree).collect();
                    for r in &rels {
                        let mut acc: SparseVec = Vec::new();
                        for (tree, coeff) in r {
                            let s = substitution_sign(tree, &ops, &degs);
                            acc = axpy(&acc, &(coeff * q(s as i64)), &self.evaluate(tree, &args));
                        }
                        if !acc.is_empty() {
                            return Err(Error::InvalidStructure(format!(
                                "relation fails on ({}, {}, {})",
                                self.basis[a].label, self.basis[b].label, self.basis[c].label
                            )));
                        }
                    }
                }
            }
        }
        // d² = 0 and d a derivation of degree +1
        for h in 0..n {
            let mut dd: SparseVec = Vec::new();
            for (k, v) in &self.differential[h] {
                dd = axpy(&dd, v, &self.differential[*k]);
            }
            if !dd.is_empty() {
                return Err(Error::InvalidStructure("d² ≠ 0".into()));
            }
        }
        if self.has_differential() {
            for op in 0..ops.len() {
                for a in 0..n {
                    for b in 0..n {
                        if self.basis[a].filt + self.basis[b].filt > filt_bound {
                            continue;
                        }
                        let ea = vec![(a, Q::one())];
                        let eb = vec![(b, Q::one())];
                        let lhs = self.apply_d(&self.op_value(op, a, b));
                        let s1 = if ops[op].degree.rem_euclid(2) == 1 { -Q::one() } else { Q::one() };
                        let s2 = if (ops[op].degree + self.basis[a].degree).rem_euclid(2) == 1 { -Q::one() } else { Q::one() };
                        let mut rhs = self.bilinear(op, &self.apply_d(&ea), &eb);
                        rhs = crate::linalg::scale(&rhs, &s1);
                        rhs = axpy(&rhs, &s2, &self.bilinear(op, &ea, &self.apply_d(&eb)));
                        if lhs != rhs {
                            return Err(Error::InvalidStructure(format!(
                                "d is not a derivation of {} on ({}, {})",
                                ops[op].name, self.basis[a].label, self.basis[b].label
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_d(&self, x: &SparseVec) -> SparseVec {
        let mut acc: SparseVec = Vec::new();
        for (k, v) in x {
            acc = axpy(&acc, v, &self.differential[*k]);
        }
        acc
    }
}
