//! Exact linear algebra over the rationals.
//!
//! Matrices are sparse; every rank, kernel and solve goes through one
//! deterministic reduced row echelon routine (pivots chosen by increasing
//! column), so results are canonical and reproducible bit for bit.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Exact rational scalar.
pub type Q = BigRational;

/// Sparse vector: strictly increasing indices, no explicit zeros.
pub type SparseVec = Vec<(usize, Q)>;

pub fn q(n: i64) -> Q {
    Q::from_integer(BigInt::from(n))
}

pub fn qf(n: i64, d: i64) -> Q {
    Q::new(BigInt::from(n), BigInt::from(d))
}

/// `y += a * x` on sparse vectors.
pub fn axpy(y: &SparseVec, a: &Q, x: &SparseVec) -> SparseVec {
    let mut out = Vec::with_capacity(y.len() + x.len());
    let (mut i, mut j) = (0, 0);
    while i < y.len() || j < x.len() {
        let take_y = j >= x.len() || (i < y.len() && y[i].0 < x[j].0);
        let take_x = i >= y.len() || (j < x.len() && x[j].0 < y[i].0);
        if take_y {
            out.push(y[i].clone());
            i += 1;
        } else if take_x {
            let v = a * &x[j].1;
            if !v.is_zero() {
                out.push((x[j].0, v));
            }
            j += 1;
        } else {
            let v = &y[i].1 + a * &x[j].1;
            if !v.is_zero() {
                out.push((y[i].0, v));
            }
            i += 1;
            j += 1;
        }
    }
    out
}

pub fn scale(x: &SparseVec, a: &Q) -> SparseVec {
    if a.is_zero() {
        return Vec::new();
    }
    x.iter().map(|(i, v)| (*i, v * a)).collect()
}

pub fn sparse_from_dense(v: &[Q]) -> SparseVec {
    v.iter()
        .enumerate()
        .filter(|(_, x)| !x.is_zero())
        .map(|(i, x)| (i, x.clone()))
        .collect()
}

pub fn dense_from_sparse(v: &SparseVec, n: usize) -> Vec<Q> {
    let mut out = vec![Q::zero(); n];
    for (i, x) in v {
        out[*i] = x.clone();
    }
    out
}

/// Sparse rational matrix.
#[derive(Clone, PartialEq, Eq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    // row-major sparse storage
    data: Vec<SparseVec>,
}

impl fmt::Debug for RationalMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "RationalMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self.get(r, c).to_string()).collect();
            writeln!(f, "  {}", row.join(" "))?;
        }
        write!(f, "]")
    }
}

impl RationalMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        RationalMatrix { rows, cols, data: vec![Vec::new(); rows] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i].push((i, Q::one()));
        }
        m
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<SparseVec>) -> Self {
        assert_eq!(data.len(), rows);
        debug_assert!(data.iter().all(|r| r.iter().all(|(c, v)| *c < cols && !v.is_zero())));
        RationalMatrix { rows, cols, data }
    }

    pub fn from_dense(rows: &[Vec<Q>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let data = rows.iter().map(|row| sparse_from_dense(row)).collect();
        RationalMatrix { rows: r, cols: c, data }
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Self {
        let conv: Vec<Vec<Q>> = rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect();
        Self::from_dense(&conv)
    }

    /// Build from column vectors (each of length `rows`).
    pub fn from_columns(rows: usize, columns: &[SparseVec]) -> Self {
        let mut data = vec![Vec::new(); rows];
        for (j, col) in columns.iter().enumerate() {
            for (i, v) in col {
                data[*i].push((j, v.clone()));
            }
        }
        RationalMatrix { rows, cols: columns.len(), data }
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn ncols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &SparseVec {
        &self.data[r]
    }

    pub fn get(&self, r: usize, c: usize) -> Q {
        match self.data[r].binary_search_by_key(&c, |(i, _)| *i) {
            Ok(k) => self.data[r][k].1.clone(),
            Err(_) => Q::zero(),
        }
    }

    pub fn set(&mut self, r: usize, c: usize, v: Q) {
        let row = &mut self.data[r];
        match row.binary_search_by_key(&c, |(i, _)| *i) {
            Ok(k) => {
                if v.is_zero() {
                    row.remove(k);
                } else {
                    row[k].1 = v;
                }
            }
            Err(k) => {
                if !v.is_zero() {
                    row.insert(k, (c, v));
                }
            }
        }
    }

    pub fn nnz(&self) -> usize {
        self.data.iter().map(|r| r.len()).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|r| r.is_empty())
    }

    pub fn to_dense(&self) -> Vec<Vec<Q>> {
        self.data.iter().map(|r| dense_from_sparse(r, self.cols)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = vec![Vec::new(); self.cols];
        for (i, row) in self.data.iter().enumerate() {
            for (j, v) in row {
                data[*j].push((i, v.clone()));
            }
        }
        RationalMatrix { rows: self.cols, cols: self.rows, data }
    }

    pub fn mul(&self, other: &RationalMatrix) -> Result<RationalMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let data = self
            .data
            .iter()
            .map(|row| {
                let mut acc: BTreeMap<usize, Q> = BTreeMap::new();
                for (k, a) in row {
                    for (j, b) in &other.data[*k] {
                        *acc.entry(*j).or_insert_with(Q::zero) += a * b;
                    }
                }
                acc.into_iter().filter(|(_, v)| !v.is_zero()).collect()
            })
            .collect();
        Ok(RationalMatrix { rows: self.rows, cols: other.cols, data })
    }

    pub fn mul_vec(&self, v: &SparseVec) -> SparseVec {
        let mut out = Vec::new();
        for (i, row) in self.data.iter().enumerate() {
            let mut acc = Q::zero();
            let (mut a, mut b) = (0, 0);
            while a < row.len() && b < v.len() {
                match row[a].0.cmp(&v[b].0) {
                    std::cmp::Ordering::Less => a += 1,
                    std::cmp::Ordering::Greater => b += 1,
                    std::cmp::Ordering::Equal => {
                        acc += &row[a].1 * &v[b].1;
                        a += 1;
                        b += 1;
                    }
                }
            }
            if !acc.is_zero() {
                out.push((i, acc));
            }
        }
        out
    }

    pub fn rref(&self) -> Echelon {
        Echelon::from_rows(self.cols, self.data.iter().cloned())
    }

    pub fn rank(&self) -> usize {
        // rank of the smaller side is cheaper to eliminate
        if self.rows > self.cols {
            Echelon::forward(self.rows, self.transpose().data.into_iter()).len()
        } else {
            Echelon::forward(self.cols, self.data.iter().cloned()).len()
        }
    }

    /// Basis of `{x : A x = 0}`, canonical (reduced echelon) form.
    pub fn kernel_basis(&self) -> SubspaceBasis {
        let e = self.rref();
        let pivots: Vec<usize> = e.rows.iter().map(|r| r[0].0).collect();
        let is_pivot: Vec<bool> = {
            let mut v = vec![false; self.cols];
            for &p in &pivots {
                v[p] = true;
            }
            v
        };
        let mut vecs = Vec::new();
        for f in (0..self.cols).filter(|&c| !is_pivot[c]) {
            let mut v: BTreeMap<usize, Q> = BTreeMap::new();
            v.insert(f, Q::one());
            for row in &e.rows {
                if let Ok(k) = row.binary_search_by_key(&f, |(i, _)| *i) {
                    v.insert(row[0].0, -row[k].1.clone());
                }
            }
            vecs.push(v.into_iter().collect());
        }
        SubspaceBasis::from_vectors(self.cols, vecs)
    }

    /// Column space as a canonical subspace of the target.
    pub fn image_basis(&self) -> SubspaceBasis {
        SubspaceBasis::from_vectors(self.rows, self.transpose().data)
    }

    /// Some solution of `A x = b`; free variables are set to zero.
    pub fn solve(&self, b: &SparseVec) -> Option<Vec<Q>> {
        let aug: Vec<SparseVec> = self
            .data
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = row.clone();
                if let Ok(k) = b.binary_search_by_key(&i, |(j, _)| *j) {
                    r.push((self.cols, b[k].1.clone()));
                }
                r
            })
            .collect();
        let e = Echelon::from_rows(self.cols + 1, aug.into_iter());
        let mut x = vec![Q::zero(); self.cols];
        for row in &e.rows {
            let p = row[0].0;
            if p == self.cols {
                return None;
            }
            if let Some((c, v)) = row.last() {
                if *c == self.cols {
                    x[p] = v.clone();
                }
            }
        }
        Some(x)
    }
}

/// Reduced row echelon form: rows with leading coefficient 1, sorted by pivot.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Echelon {
    pub ncols: usize,
    pub rows: Vec<SparseVec>,
}

impl Echelon {
    /// Forward elimination only: pivot rows, leading 1, not back-reduced.
    fn forward(ncols: usize, rows: impl Iterator<Item = SparseVec>) -> BTreeMap<usize, SparseVec> {
        let _ = ncols;
        let mut piv: BTreeMap<usize, SparseVec> = BTreeMap::new();
        for mut r in rows {
            loop {
                let Some((lead, lv)) = r.first().cloned() else { break };
                match piv.get(&lead) {
                    Some(p) => r = axpy(&r, &-lv, p),
                    None => {
                        let inv = lv.recip();
                        r = scale(&r, &inv);
                        piv.insert(lead, r);
                        break;
                    }
                }
            }
        }
        piv
    }

    pub fn from_rows(ncols: usize, rows: impl Iterator<Item = SparseVec>) -> Self {
        let piv = Self::forward(ncols, rows);
        // back-substitute from the last pivot upward
        let keys: Vec<usize> = piv.keys().copied().collect();
        let mut done: BTreeMap<usize, SparseVec> = BTreeMap::new();
        for &k in keys.iter().rev() {
            let mut r = piv[&k].clone();
            let mut idx = 1;
            while idx < r.len() {
                let c = r[idx].0;
                if let Some(p) = done.get(&c) {
                    let v = r[idx].1.clone();
                    r = axpy(&r, &-v, p);
                } else {
                    idx += 1;
                }
            }
            done.insert(k, r);
        }
        Echelon { ncols, rows: done.into_values().collect() }
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r[0].0).collect()
    }
}

/// A linear subspace stored as the reduced echelon basis of its span.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SubspaceBasis {
    ambient: usize,
    ech: Echelon,
}

impl SubspaceBasis {
    pub fn from_vectors(ambient: usize, vecs: impl IntoIterator<Item = SparseVec>) -> Self {
        SubspaceBasis { ambient, ech: Echelon::from_rows(ambient, vecs.into_iter()) }
    }

    pub fn zero(ambient: usize) -> Self {
        SubspaceBasis { ambient, ech: Echelon { ncols: ambient, rows: Vec::new() } }
    }

    pub fn full(ambient: usize) -> Self {
        Self::from_vectors(ambient, (0..ambient).map(|i| vec![(i, Q::one())]))
    }

    pub fn dim(&self) -> usize {
        self.ech.rows.len()
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn vectors(&self) -> &[SparseVec] {
        &self.ech.rows
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.ech.pivots()
    }

    /// Columns not hit by a pivot; they index a complement (quotient) basis.
    pub fn non_pivots(&self) -> Vec<usize> {
        let mut is_p = vec![false; self.ambient];
        for p in self.pivots() {
            is_p[p] = true;
        }
        (0..self.ambient).filter(|&c| !is_p[c]).collect()
    }

    /// Normal form modulo the subspace: the result has no pivot entries.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        let mut r = v.clone();
        for row in &self.ech.rows {
            let p = row[0].0;
            if let Ok(k) = r.binary_search_by_key(&p, |(i, _)| *i) {
                let c = r[k].1.clone();
                r = axpy(&r, &-c, row);
            }
        }
        r
    }

    pub fn contains(&self, v: &SparseVec) -> bool {
        self.reduce(v).is_empty()
    }

    pub fn contains_subspace(&self, other: &SubspaceBasis) -> bool {
        other.vectors().iter().all(|v| self.contains(v))
    }

    pub fn sum(&self, other: &SubspaceBasis) -> SubspaceBasis {
        SubspaceBasis::from_vectors(
            self.ambient,
            self.vectors().iter().chain(other.vectors().iter()).cloned(),
        )
    }

    /// Coordinates of `v` with respect to the stored basis, if `v` lies in the span.
    pub fn coordinates(&self, v: &SparseVec) -> Option<Vec<Q>> {
        if !self.contains(v) {
            return None;
        }
        // in reduced echelon form the coordinate is the pivot entry
        Some(
            self.ech
                .rows
                .iter()
                .map(|row| {
                    let p = row[0].0;
                    v.binary_search_by_key(&p, |(i, _)| *i).map(|k| v[k].1.clone()).unwrap_or_else(|_| Q::zero())
                })
                .collect(),
        )
    }
}

/// `dim ker(d_out) - rank(d_in)` after checking `d_out * d_in = 0`.
///
/// `d_in: C^{k-1} -> C^k` and `d_out: C^k -> C^{k+1}` as matrices acting on columns.
pub fn cohomology_dim(d_in: &RationalMatrix, d_out: &RationalMatrix) -> Result<usize> {
    if d_in.nrows() != d_out.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "d_in maps into dimension {} but d_out starts at dimension {}",
            d_in.nrows(),
            d_out.ncols()
        )));
    }
    if !d_out.mul(d_in)?.is_zero() {
        return Err(Error::CompositionNotZero);
    }
    let ker = d_out.ncols() - d_out.rank();
    Ok(ker - d_in.rank())
}

pub fn is_integral(x: &Q) -> bool {
    x.is_integer()
}

pub fn abs(x: &Q) -> Q {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_small_matrices() {
        assert_eq!(RationalMatrix::from_i64(&[vec![1, 2], vec![2, 4]]).rank(), 1);
        assert_eq!(RationalMatrix::from_i64(&[vec![1, 0], vec![0, 1]]).rank(), 2);
        assert_eq!(RationalMatrix::zeros(3, 4).rank(), 0);
        assert_eq!(RationalMatrix::from_i64(&[vec![0, 0, 3], vec![1, 0, 0], vec![2, 0, 6]]).rank(), 2);
    }

    #[test]
    fn solve_prefers_zero_free_variables() {
        let a = RationalMatrix::from_i64(&[vec![1, 1]]);
        let x = a.solve(&vec![(0, q(2))]).unwrap();
        assert_eq!(x, vec![q(2), q(0)]);
        let bad = RationalMatrix::from_i64(&[vec![1, 1], vec![2, 2]]);
        assert!(bad.solve(&vec![(0, q(1)), (1, q(3))]).is_none());
    }

    #[test]
    fn kernel_is_annihilated() {
        let a = RationalMatrix::from_i64(&[vec![1, 2, 3, 4], vec![2, 4, 6, 8], vec![0, 1, -1, 2]]);
        let k = a.kernel_basis();
        assert_eq!(k.dim(), 2);
        for v in k.vectors() {
            assert!(a.mul_vec(v).is_empty());
        }
    }

    #[test]
    fn cohomology_of_a_short_complex() {
        // d_in: k -> k^2 (x -> (x, x)), d_out: k^2 -> k ((a, b) -> a - b)
        let d_in = RationalMatrix::from_i64(&[vec![1], vec![1]]);
        let d_out = RationalMatrix::from_i64(&[vec![1, -1]]);
        assert_eq!(cohomology_dim(&d_in, &d_out).unwrap(), 0);
        let bad = RationalMatrix::from_i64(&[vec![1, 1]]);
        assert!(matches!(cohomology_dim(&d_in, &bad), Err(Error::CompositionNotZero)));
    }

    #[test]
    fn reduce_lands_on_non_pivots() {
        let s = SubspaceBasis::from_vectors(3, vec![vec![(0, q(1)), (1, q(1))], vec![(1, q(1)), (2, q(1))]]);
        assert_eq!(s.dim(), 2);
        let r = s.reduce(&vec![(0, q(1))]);
        assert!(r.iter().all(|(i, _)| s.non_pivots().contains(i)));
        assert_eq!(r, vec![(2, q(1))]);
    }
}
