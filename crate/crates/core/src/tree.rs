//! Binary trees decorated by generating operations, canonicalized under the
//! generator symmetries with Koszul signs, and free algebras over a quadratic
//! presentation computed by recursive normal forms.
//!
//! The same engine serves operad components (multilinear trees with degree-0
//! leaves `x_0..x_{n-1}`) and free algebras on a graded basis (leaves are
//! basis indices, repetition allowed).
//!
//! Sign discipline: a tree is read in prefix order (operation symbols and
//! leaves interleaved), and swapping the two inputs of a vertex costs
//! `(-1)^{|a||b|}` where `|a|`, `|b|` include operation degrees.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::graded::koszul_sign;
use crate::linalg::{q, SparseVec, SubspaceBasis, Q};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symmetry {
    Symmetric,
    Antisymmetric,
    /// two basis operations `e`, `e'` exchanged by the transposition
    Regular,
}

/// One basis operation of the binary generator space.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OpInfo {
    pub name: String,
    pub degree: i64,
    /// `e ∘ τ = tau_sign · partner`
    pub partner: usize,
    pub tau_sign: i32,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Expr {
    Leaf(u32),
    Node(u16, Box<Expr>, Box<Expr>),
}

pub type Comb = BTreeMap<Expr, Q>;

pub fn add_term(c: &mut Comb, e: Expr, v: Q) {
    if v.is_zero() {
        return;
    }
    let mut remove = false;
    match c.get_mut(&e) {
        Some(x) => {
            *x += v;
            remove = x.is_zero();
        }
        None => {
            c.insert(e.clone(), v);
        }
    }
    if remove {
        c.remove(&e);
    }
}

pub fn add_comb(c: &mut Comb, other: &Comb, scale: &Q) {
    for (e, v) in other {
        add_term(c, e.clone(), v * scale);
    }
}

pub fn scale_comb(c: &Comb, s: &Q) -> Comb {
    if s.is_zero() {
        return Comb::new();
    }
    c.iter().map(|(e, v)| (e.clone(), v * s)).collect()
}

impl Expr {
    pub fn node(op: usize, a: Expr, b: Expr) -> Expr {
        Expr::Node(op as u16, Box::new(a), Box::new(b))
    }

    pub fn leaves(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<u32>) {
        match self {
            Expr::Leaf(i) => out.push(*i),
            Expr::Node(_, a, b) => {
                a.collect_leaves(out);
                b.collect_leaves(out);
            }
        }
    }

    /// Sorted leaf labels.
    pub fn multiset(&self) -> Vec<u32> {
        let mut l = self.leaves();
        l.sort_unstable();
        l
    }

    pub fn min_leaf(&self) -> u32 {
        match self {
            Expr::Leaf(i) => *i,
            Expr::Node(_, a, b) => a.min_leaf().min(b.min_leaf()),
        }
    }

    pub fn num_leaves(&self) -> usize {
        match self {
            Expr::Leaf(_) => 1,
            Expr::Node(_, a, b) => a.num_leaves() + b.num_leaves(),
        }
    }

    pub fn ops(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_ops(&mut out);
        out
    }

    fn collect_ops(&self, out: &mut Vec<usize>) {
        if let Expr::Node(o, a, b) = self {
            out.push(*o as usize);
            a.collect_ops(out);
            b.collect_ops(out);
        }
    }

    pub fn degree(&self, ops: &[OpInfo], leaf_deg: &dyn Fn(u32) -> i64) -> i64 {
        match self {
            Expr::Leaf(i) => leaf_deg(*i),
            Expr::Node(o, a, b) => ops[*o as usize].degree + a.degree(ops, leaf_deg) + b.degree(ops, leaf_deg),
        }
    }

    pub fn map_leaves(&self, f: &dyn Fn(u32) -> u32) -> Expr {
        match self {
            Expr::Leaf(i) => Expr::Leaf(f(*i)),
            Expr::Node(o, a, b) => Expr::Node(*o, Box::new(a.map_leaves(f)), Box::new(b.map_leaves(f))),
        }
    }

    pub fn render(&self, ops: &[OpInfo], leaf: &dyn Fn(u32) -> String) -> String {
        match self {
            Expr::Leaf(i) => leaf(*i),
            Expr::Node(o, a, b) => format!("{}({},{})", ops[*o as usize].name, a.render(ops, leaf), b.render(ops, leaf)),
        }
    }
}

fn odd(x: i64) -> bool {
    x.rem_euclid(2) == 1
}

/// Ordering used to place children: least leaf label first, then the full order.
fn child_less(a: &Expr, b: &Expr) -> std::cmp::Ordering {
    a.min_leaf().cmp(&b.min_leaf()).then_with(|| a.cmp(b))
}

/// Context for canonicalization: operations plus leaf degrees.
pub struct Canon<'a> {
    pub ops: &'a [OpInfo],
    pub leaf_deg: &'a dyn Fn(u32) -> i64,
}

impl<'a> Canon<'a> {
    pub fn deg(&self, e: &Expr) -> i64 {
        e.degree(self.ops, self.leaf_deg)
    }

    /// Canonical form of `op(a, b)` for canonical `a`, `b`; `None` when it vanishes.
    pub fn node(&self, op: usize, a: &Expr, b: &Expr) -> Option<(i32, Expr)> {
        let info = &self.ops[op];
        match child_less(a, b) {
            std::cmp::Ordering::Less => Some((1, Expr::node(op, a.clone(), b.clone()))),
            std::cmp::Ordering::Greater => {
                let mut s = info.tau_sign;
                if odd(self.deg(a)) && odd(self.deg(b)) {
                    s = -s;
                }
                Some((s, Expr::node(info.partner, b.clone(), a.clone())))
            }
            std::cmp::Ordering::Equal => {
                // op(a,a) = (-1)^{|a|} tau · partner(a,a)
                let mut s = info.tau_sign;
                if odd(self.deg(a)) {
                    s = -s;
                }
                if info.partner == op {
                    if s == -1 {
                        None
                    } else {
                        Some((1, Expr::node(op, a.clone(), a.clone())))
                    }
                } else if op < info.partner {
                    Some((1, Expr::node(op, a.clone(), a.clone())))
                } else {
                    Some((s, Expr::node(info.partner, a.clone(), a.clone())))
                }
            }
        }
    }

    pub fn canonicalize(&self, e: &Expr) -> Option<(i32, Expr)> {
        match e {
            Expr::Leaf(_) => Some((1, e.clone())),
            Expr::Node(o, a, b) => {
                let (sa, ca) = self.canonicalize(a)?;
                let (sb, cb) = self.canonicalize(b)?;
                let (s, c) = self.node(*o as usize, &ca, &cb)?;
                Some((sa * sb * s, c))
            }
        }
    }

    pub fn canonicalize_comb(&self, c: &Comb) -> Comb {
        let mut out = Comb::new();
        for (e, v) in c {
            if let Some((s, ce)) = self.canonicalize(e) {
                add_term(&mut out, ce, v * q(s as i64));
            }
        }
        out
    }

    /// Bilinear extension of `op(-, -)` to combinations of canonical trees.
    pub fn node_comb(&self, op: usize, a: &Comb, b: &Comb) -> Comb {
        let mut out = Comb::new();
        for (ea, va) in a {
            for (eb, vb) in b {
                if let Some((s, e)) = self.node(op, ea, eb) {
                    add_term(&mut out, e, va * vb * q(s as i64));
                }
            }
        }
        out
    }

    /// Substitute `args[i]` for slot leaf `i` of `tree`, with the Koszul sign of
    /// moving the arguments from behind all operation symbols into their slots.
    pub fn substitute(&self, tree: &Expr, args: &[Expr]) -> Option<(i32, Expr)> {
        let sign = substitution_sign(tree, self.ops, &args.iter().map(|a| self.deg(a)).collect::<Vec<_>>());
        let raw = plug(tree, args);
        let (s, c) = self.canonicalize(&raw)?;
        Some((sign * s, c))
    }
}

fn plug(tree: &Expr, args: &[Expr]) -> Expr {
    match tree {
        Expr::Leaf(i) => args[*i as usize].clone(),
        Expr::Node(o, a, b) => Expr::Node(*o, Box::new(plug(a, args)), Box::new(plug(b, args))),
    }
}

/// Sign of reordering `(ops in prefix order, arg_0, …, arg_{k-1})` into the prefix reading.
pub fn substitution_sign(tree: &Expr, ops: &[OpInfo], arg_degs: &[i64]) -> i32 {
    enum Item {
        Op(i64),
        Slot(usize),
    }
    fn walk(e: &Expr, ops: &[OpInfo], out: &mut Vec<Item>) {
        match e {
            Expr::Leaf(i) => out.push(Item::Slot(*i as usize)),
            Expr::Node(o, a, b) => {
                out.push(Item::Op(ops[*o as usize].degree));
                walk(a, ops, out);
                walk(b, ops, out);
            }
        }
    }
    let mut seq = Vec::new();
    walk(tree, ops, &mut seq);
    let nops = seq.iter().filter(|x| matches!(x, Item::Op(_))).count();
    // start order: ops (prefix order) then slots by label
    let mut perm = vec![0; seq.len()];
    let mut degs = vec![0; seq.len()];
    let mut op_k = 0;
    for (pos, item) in seq.iter().enumerate() {
        match item {
            Item::Op(d) => {
                perm[op_k] = pos;
                degs[op_k] = *d;
                op_k += 1;
            }
            Item::Slot(i) => {
                perm[nops + i] = pos;
                degs[nops + i] = arg_degs[*i];
            }
        }
    }
    koszul_sign(&perm, &degs)
}

/// Sub-multisets of a sorted multiset, as sorted vectors (including empty and full).
pub fn sub_multisets(m: &[u32]) -> Vec<Vec<u32>> {
    let mut groups: Vec<(u32, usize)> = Vec::new();
    for &x in m {
        match groups.last_mut() {
            Some((y, c)) if *y == x => *c += 1,
            _ => groups.push((x, 1)),
        }
    }
    let mut out = vec![Vec::new()];
    for (x, c) in groups {
        let mut next = Vec::new();
        for base in &out {
            for k in 0..=c {
                let mut v = base.clone();
                v.extend(std::iter::repeat_n(x, k));
                next.push(v);
            }
        }
        out = next;
    }
    out
}

pub fn multiset_minus(m: &[u32], sub: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(m.len() - sub.len());
    let mut j = 0;
    for &x in m {
        if j < sub.len() && sub[j] == x {
            j += 1;
        } else {
            out.push(x);
        }
    }
    out
}

/// One multiset level of a free algebra modulo relations.
#[derive(Clone, Debug)]
pub struct Level {
    /// canonical trees whose two children are normal forms
    pub ambient: Vec<Expr>,
    index: HashMap<Expr, usize>,
    /// relation span inside the ambient space
    pub ideal: SubspaceBasis,
    /// surviving basis (non-pivot ambient trees)
    pub normal_forms: Vec<Expr>,
}

/// Free algebra on labelled graded leaves over binary operations, modulo the
/// ideal generated by arity-3 relations.
#[derive(Clone)]
pub struct FreeAlgebra {
    pub ops: Vec<OpInfo>,
    pub leaf_degrees: Vec<i64>,
    /// relations as combinations of trees on slots 0, 1, 2
    pub relations: Vec<Comb>,
    levels: HashMap<Vec<u32>, Level>,
    reduce_cache: HashMap<Expr, Comb>,
}

impl FreeAlgebra {
    pub fn new(ops: Vec<OpInfo>, leaf_degrees: Vec<i64>, relations: Vec<Comb>) -> Self {
        FreeAlgebra { ops, leaf_degrees, relations, levels: HashMap::new(), reduce_cache: HashMap::new() }
    }

    pub fn leaf_degree(&self, i: u32) -> i64 {
        self.leaf_degrees[i as usize]
    }

    pub fn degree(&self, e: &Expr) -> i64 {
        let ld = |i: u32| self.leaf_degrees[i as usize];
        e.degree(&self.ops, &ld)
    }

    pub fn with_canon<R>(&self, f: impl FnOnce(&Canon) -> R) -> R {
        let ld = |i: u32| self.leaf_degrees[i as usize];
        let c = Canon { ops: &self.ops, leaf_deg: &ld };
        f(&c)
    }

    pub fn level(&mut self, m: &[u32]) -> &Level {
        self.ensure(m);
        &self.levels[m]
    }

    pub fn normal_forms(&mut self, m: &[u32]) -> Vec<Expr> {
        self.ensure(m);
        self.levels[m].normal_forms.clone()
    }

    pub fn ensure(&mut self, m: &[u32]) {
        if self.levels.contains_key(m) {
            return;
        }
        assert!(!m.is_empty(), "no arity-0 components");
        if m.len() == 1 {
            let leaf = Expr::Leaf(m[0]);
            let mut index = HashMap::new();
            index.insert(leaf.clone(), 0);
            self.levels.insert(
                m.to_vec(),
                Level { ambient: vec![leaf.clone()], index, ideal: SubspaceBasis::zero(1), normal_forms: vec![leaf] },
            );
            return;
        }
        // ambient: op(a, b) with a, b normal forms over all splits
        let subs: Vec<Vec<u32>> = sub_multisets(m).into_iter().filter(|s| !s.is_empty() && s.len() < m.len()).collect();
        let mut amb: BTreeSet<Expr> = BTreeSet::new();
        for s1 in &subs {
            let s2 = multiset_minus(m, s1);
            self.ensure(s1);
            self.ensure(&s2);
            let n1 = self.levels[s1].normal_forms.clone();
            let n2 = self.levels[&s2].normal_forms.clone();
            self.with_canon(|c| {
                for op in 0..c.ops.len() {
                    for a in &n1 {
                        for b in &n2 {
                            if let Some((_, e)) = c.node(op, a, b) {
                                amb.insert(e);
                            }
                        }
                    }
                }
            });
        }
        let ambient: Vec<Expr> = amb.into_iter().collect();
        let index: HashMap<Expr, usize> = ambient.iter().cloned().enumerate().map(|(i, e)| (e, i)).collect();
        let mut gens: Vec<SparseVec> = Vec::new();
        if m.len() >= 3 && !self.relations.is_empty() {
            let rels = self.relations.clone();
            let triples = ordered_triples(m);
            for (m1, m2, m3) in triples {
                let (n1, n2, n3) = (self.normal_forms(&m1), self.normal_forms(&m2), self.normal_forms(&m3));
                for t1 in &n1 {
                    for t2 in &n2 {
                        for t3 in &n3 {
                            let args = [t1.clone(), t2.clone(), t3.clone()];
                            for r in &rels {
                                let mut inst = Comb::new();
                                self.with_canon(|c| {
                                    for (tree, coeff) in r {
                                        if let Some((s, e)) = c.substitute(tree, &args) {
                                            add_term(&mut inst, e, coeff * q(s as i64));
                                        }
                                    }
                                });
                                let v = self.top_coordinates(&inst, &index);
                                if !v.is_empty() {
                                    gens.push(v);
                                }
                            }
                        }
                    }
                }
            }
        }
        let ideal = SubspaceBasis::from_vectors(ambient.len(), gens);
        let normal_forms = ideal.non_pivots().into_iter().map(|i| ambient[i].clone()).collect();
        self.levels.insert(m.to_vec(), Level { ambient, index, ideal, normal_forms });
    }

    /// Reduce children to normal forms and express in the ambient basis.
    fn top_coordinates(&mut self, c: &Comb, index: &HashMap<Expr, usize>) -> SparseVec {
        let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
        for (e, v) in c {
            let Expr::Node(op, a, b) = e else { panic!("top level must be a vertex") };
            let ra = self.reduce_expr(a);
            let rb = self.reduce_expr(b);
            let prod = self.with_canon(|cn| cn.node_comb(*op as usize, &ra, &rb));
            for (t, w) in prod {
                let k = index[&t];
                *acc.entry(k).or_insert_with(Q::zero) += v * w;
            }
        }
        acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
    }

    /// Normal form of a canonical tree.
    pub fn reduce_expr(&mut self, e: &Expr) -> Comb {
        if let Expr::Leaf(_) = e {
            let mut c = Comb::new();
            c.insert(e.clone(), Q::one());
            return c;
        }
        if let Some(r) = self.reduce_cache.get(e) {
            return r.clone();
        }
        let m = e.multiset();
        self.ensure(&m);
        let Expr::Node(op, a, b) = e else { unreachable!() };
        let ra = self.reduce_expr(a);
        let rb = self.reduce_expr(b);
        let prod = self.with_canon(|cn| cn.node_comb(*op as usize, &ra, &rb));
        let lvl = &self.levels[&m];
        let v: SparseVec = {
            let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
            for (t, w) in prod {
                *acc.entry(lvl.index[&t]).or_insert_with(Q::zero) += w;
            }
            acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
        };
        let red = lvl.ideal.reduce(&v);
        let out: Comb = red.into_iter().map(|(i, w)| (lvl.ambient[i].clone(), w)).collect();
        self.reduce_cache.insert(e.clone(), out.clone());
        out
    }

    /// Normal form of an arbitrary combination of (not necessarily canonical) trees.
    pub fn reduce(&mut self, c: &Comb) -> Comb {
        let canon = self.with_canon(|cn| cn.canonicalize_comb(c));
        let mut out = Comb::new();
        for (e, v) in canon {
            let r = self.reduce_expr(&e);
            add_comb(&mut out, &r, &v);
        }
        out
    }

    /// `op(a, b)` reduced to normal form.
    pub fn apply(&mut self, op: usize, a: &Comb, b: &Comb) -> Comb {
        let raw = self.with_canon(|cn| cn.node_comb(op, a, b));
        self.reduce(&raw)
    }

    pub fn dim(&mut self, m: &[u32]) -> usize {
        self.level(m).normal_forms.len()
    }
}

/// Ordered triples of nonempty sub-multisets partitioning `m`.
pub fn ordered_triples(m: &[u32]) -> Vec<(Vec<u32>, Vec<u32>, Vec<u32>)> {
    let mut out = Vec::new();
    for s1 in sub_multisets(m) {
        if s1.is_empty() {
            continue;
        }
        let rest = multiset_minus(m, &s1);
        for s2 in sub_multisets(&rest) {
            if s2.is_empty() || s2.len() == rest.len() {
                continue;
            }
            let s3 = multiset_minus(&rest, &s2);
            out.push((s1.clone(), s2, s3));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sym_op(name: &str, degree: i64, tau: i32) -> OpInfo {
        OpInfo { name: name.into(), degree, partner: 0, tau_sign: tau }
    }

    #[test]
    fn antisymmetric_square_vanishes() {
        let ops = vec![sym_op("b", 0, -1)];
        let ld = |_| 0;
        let c = Canon { ops: &ops, leaf_deg: &ld };
        assert!(c.node(0, &Expr::Leaf(0), &Expr::Leaf(0)).is_none());
        let (s, e) = c.node(0, &Expr::Leaf(1), &Expr::Leaf(0)).unwrap();
        assert_eq!(s, -1);
        assert_eq!(e, Expr::node(0, Expr::Leaf(0), Expr::Leaf(1)));
    }

    #[test]
    fn odd_leaves_flip_symmetric_square() {
        let ops = vec![sym_op("m", 0, 1)];
        let ld = |_| 1;
        let c = Canon { ops: &ops, leaf_deg: &ld };
        assert!(c.node(0, &Expr::Leaf(0), &Expr::Leaf(0)).is_none());
    }

    #[test]
    fn free_components_have_expected_sizes() {
        // one symmetric operation: 3 trees on three leaves, 15 on four
        let mut fa = FreeAlgebra::new(vec![sym_op("m", 0, 1)], vec![0; 4], vec![]);
        assert_eq!(fa.dim(&[0, 1, 2]), 3);
        assert_eq!(fa.dim(&[0, 1, 2, 3]), 15);
    }

    #[test]
    fn sub_multiset_counts() {
        assert_eq!(sub_multisets(&[0, 0, 1]).len(), 6);
        assert_eq!(ordered_triples(&[0, 1, 2]).len(), 6);
    }
}
