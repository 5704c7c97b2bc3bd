use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::{DenseMatrix, C64};

/// Entries with modulus at or below this are dropped on construction.
pub const PRUNE_TOL: f64 = 1e-15;

/// Entrywise tolerance for the Hermiticity flag.
pub const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Hermiticity {
    Yes,
    No,
    Unknown,
}

/// Square complex matrix in compressed sparse row form.
#[derive(Debug, Clone)]
pub struct SparseOperator {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<C64>,
    hermitian: OnceLock<bool>,
}

impl SparseOperator {
    pub fn zeros(dim: usize) -> Self {
        SparseOperator {
            dim,
            row_ptr: vec![0; dim + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            hermitian: OnceLock::new(),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_diagonal(&vec![C64::new(1.0, 0.0); dim])
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut row_ptr = Vec::with_capacity(diag.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for (i, &v) in diag.iter().enumerate() {
            if v.norm() > PRUNE_TOL {
                cols.push(i);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        SparseOperator {
            dim: diag.len(),
            row_ptr,
            cols,
            vals,
            hermitian: OnceLock::new(),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let d: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diagonal(&d)
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    ///
    /// Panics if an index is out of range.
    pub fn from_triplets(dim: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; dim + 1];
        let mut cols = Vec::with_capacity(triplets.len());
        let mut vals: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        let mut rows = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            assert!(r < dim && c < dim, "triplet ({r}, {c}) out of range for dim {dim}");
            if last == Some((r, c)) {
                *vals.last_mut().unwrap() += v;
            } else {
                rows.push(r);
                cols.push(c);
                vals.push(v);
                last = Some((r, c));
            }
        }
        let mut out_cols = Vec::with_capacity(cols.len());
        let mut out_vals = Vec::with_capacity(vals.len());
        for ((r, c), v) in rows.into_iter().zip(cols).zip(vals) {
            if v.norm() > PRUNE_TOL {
                row_ptr[r + 1] += 1;
                out_cols.push(c);
                out_vals.push(v);
            }
        }
        for i in 0..dim {
            row_ptr[i + 1] += row_ptr[i];
        }
        SparseOperator {
            dim,
            row_ptr,
            cols: out_cols,
            vals: out_vals,
            hermitian: OnceLock::new(),
        }
    }

    pub fn from_dense(m: &DenseMatrix) -> Result<Self> {
        check_dim(m.nrows(), m.ncols())?;
        let mut trip = Vec::new();
        for j in 0..m.ncols() {
            for (i, &v) in m.col_as_slice(j).iter().enumerate() {
                if v.norm() > PRUNE_TOL {
                    trip.push((i, j, v));
                }
            }
        }
        Ok(Self::from_triplets(m.nrows(), trip))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Stored entries of row `i` as `(col, value)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.cols[a..b].binary_search(&j) {
            Ok(k) => self.vals[a + k],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.dim).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn is_diagonal(&self) -> bool {
        self.triplets().all(|(i, j, _)| i == j)
    }

    /// Cached Hermiticity state; `Unknown` until [`Self::is_hermitian`] runs.
    pub fn hermiticity(&self) -> Hermiticity {
        match self.hermitian.get() {
            Some(true) => Hermiticity::Yes,
            Some(false) => Hermiticity::No,
            None => Hermiticity::Unknown,
        }
    }

    pub fn is_hermitian(&self) -> bool {
        *self
            .hermitian
            .get_or_init(|| self.hermitian_residual() < HERMITIAN_TOL)
    }

    /// `max |A - A^dag|` entrywise.
    pub fn hermitian_residual(&self) -> f64 {
        let adj = self.adjoint();
        self.max_abs_diff(&adj)
    }

    pub fn require_hermitian(&self) -> Result<()> {
        if self.is_hermitian() {
            Ok(())
        } else {
            Err(Error::NotHermitian {
                residual: self.hermitian_residual(),
            })
        }
    }

    pub fn max_abs_diff(&self, other: &SparseOperator) -> f64 {
        if self.dim != other.dim {
            return f64::INFINITY;
        }
        let d = self.axpby(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0));
        d.vals.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn adjoint(&self) -> SparseOperator {
        let trip = self.triplets().map(|(i, j, v)| (j, i, v.conj())).collect();
        Self::from_triplets(self.dim, trip)
    }

    pub fn transpose(&self) -> SparseOperator {
        let trip = self.triplets().map(|(i, j, v)| (j, i, v)).collect();
        Self::from_triplets(self.dim, trip)
    }

    pub fn scale(&self, s: C64) -> SparseOperator {
        if s.norm() <= PRUNE_TOL {
            return Self::zeros(self.dim);
        }
        SparseOperator {
            dim: self.dim,
            row_ptr: self.row_ptr.clone(),
            cols: self.cols.clone(),
            vals: self.vals.iter().map(|&v| v * s).collect(),
            hermitian: OnceLock::new(),
        }
    }

    pub fn scale_re(&self, s: f64) -> SparseOperator {
        self.scale(C64::new(s, 0.0))
    }

    /// `a * self + b * other`, merged row by row.
    fn axpby(&self, a: C64, other: &SparseOperator, b: C64) -> SparseOperator {
        let mut row_ptr = Vec::with_capacity(self.dim + 1);
        let mut cols = Vec::with_capacity(self.nnz() + other.nnz());
        let mut vals = Vec::with_capacity(self.nnz() + other.nnz());
        row_ptr.push(0);
        for i in 0..self.dim {
            let (mut p, pe) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let (mut q, qe) = (other.row_ptr[i], other.row_ptr[i + 1]);
            while p < pe || q < qe {
                let cp = if p < pe { self.cols[p] } else { usize::MAX };
                let cq = if q < qe { other.cols[q] } else { usize::MAX };
                let (c, v) = if cp == cq {
                    let v = a * self.vals[p] + b * other.vals[q];
                    p += 1;
                    q += 1;
                    (cp, v)
                } else if cp < cq {
                    p += 1;
                    (cp, a * self.vals[p - 1])
                } else {
                    q += 1;
                    (cq, b * other.vals[q - 1])
                };
                if v.norm() > PRUNE_TOL {
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        SparseOperator {
            dim: self.dim,
            row_ptr,
            cols,
            vals,
            hermitian: OnceLock::new(),
        }
    }

    /// `self + c * other`.
    pub fn add_scaled(&self, other: &SparseOperator, c: f64) -> Result<SparseOperator> {
        check_dim(self.dim, other.dim)?;
        Ok(self.axpby(C64::new(1.0, 0.0), other, C64::new(c, 0.0)))
    }

    pub fn checked_add(&self, other: &SparseOperator) -> Result<SparseOperator> {
        check_dim(self.dim, other.dim)?;
        Ok(self.axpby(C64::new(1.0, 0.0), other, C64::new(1.0, 0.0)))
    }

    pub fn checked_sub(&self, other: &SparseOperator) -> Result<SparseOperator> {
        check_dim(self.dim, other.dim)?;
        Ok(self.axpby(C64::new(1.0, 0.0), other, C64::new(-1.0, 0.0)))
    }

    /// Sparse product (Gustavson's row-merge).
    pub fn checked_mul(&self, other: &SparseOperator) -> Result<SparseOperator> {
        check_dim(self.dim, other.dim)?;
        let n = self.dim;
        let mut acc = vec![C64::new(0.0, 0.0); n];
        let mut mark = vec![usize::MAX; n];
        let mut touched: Vec<usize> = Vec::new();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = C64::new(0.0, 0.0);
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            touched.sort_unstable();
            for &j in &touched {
                if acc[j].norm() > PRUNE_TOL {
                    cols.push(j);
                    vals.push(acc[j]);
                }
            }
            row_ptr.push(cols.len());
        }
        Ok(SparseOperator {
            dim: n,
            row_ptr,
            cols,
            vals,
            hermitian: OnceLock::new(),
        })
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.vals.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(self^dag other) / dim`.
    pub fn hs_inner(&self, other: &SparseOperator) -> Result<C64> {
        check_dim(self.dim, other.dim)?;
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..self.dim {
            let (mut p, pe) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let (mut q, qe) = (other.row_ptr[i], other.row_ptr[i + 1]);
            while p < pe && q < qe {
                match self.cols[p].cmp(&other.cols[q]) {
                    std::cmp::Ordering::Equal => {
                        acc += self.vals[p].conj() * other.vals[q];
                        p += 1;
                        q += 1;
                    }
                    std::cmp::Ordering::Less => p += 1,
                    std::cmp::Ordering::Greater => q += 1,
                }
            }
        }
        Ok(acc / self.dim as f64)
    }

    /// Largest `Σ_j |A_ij|` over rows; an upper bound on the spectral norm
    /// of a Hermitian matrix.
    pub fn max_row_sum(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.row(i).map(|(_, v)| v.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut m = DenseMatrix::zeros(self.dim, self.dim);
        for (i, j, v) in self.triplets() {
            m[(i, j)] = v;
        }
        m
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.dim);
        assert_eq!(y.len(), self.dim);
        const CHUNK: usize = 4096;
        y.par_chunks_mut(CHUNK).enumerate().for_each(|(c, ys)| {
            let base = c * CHUNK;
            for (k, yi) in ys.iter_mut().enumerate() {
                let i = base + k;
                let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
                let mut s = C64::new(0.0, 0.0);
                for p in a..b {
                    s += self.vals[p] * x[self.cols[p]];
                }
                *yi = s;
            }
        });
    }

    /// Sparse times dense, column by column.
    pub fn mul_dense(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        check_dim(self.dim, b.nrows())?;
        let mut out = DenseMatrix::zeros(self.dim, b.ncols());
        for j in 0..b.ncols() {
            let y = self.matvec(b.col_as_slice(j));
            out.col_as_slice_mut(j).copy_from_slice(&y);
        }
        Ok(out)
    }
}

impl PartialEq for SparseOperator {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.row_ptr == other.row_ptr
            && self.cols == other.cols
            && self.vals == other.vals
    }
}

impl<'a> Add<&'a SparseOperator> for &'a SparseOperator {
    type Output = SparseOperator;
    fn add(self, rhs: &SparseOperator) -> SparseOperator {
        self.checked_add(rhs).expect("operator dimensions differ")
    }
}

impl<'a> Sub<&'a SparseOperator> for &'a SparseOperator {
    type Output = SparseOperator;
    fn sub(self, rhs: &SparseOperator) -> SparseOperator {
        self.checked_sub(rhs).expect("operator dimensions differ")
    }
}

impl<'a> Mul<&'a SparseOperator> for &'a SparseOperator {
    type Output = SparseOperator;
    fn mul(self, rhs: &SparseOperator) -> SparseOperator {
        self.checked_mul(rhs).expect("operator dimensions differ")
    }
}

impl Mul<f64> for &SparseOperator {
    type Output = SparseOperator;
    fn mul(self, rhs: f64) -> SparseOperator {
        self.scale_re(rhs)
    }
}

impl Mul<C64> for &SparseOperator {
    type Output = SparseOperator;
    fn mul(self, rhs: C64) -> SparseOperator {
        self.scale(rhs)
    }
}

impl Neg for &SparseOperator {
    type Output = SparseOperator;
    fn neg(self) -> SparseOperator {
        self.scale_re(-1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn random_sparse(dim: usize, entries: &[(usize, usize, f64, f64)]) -> SparseOperator {
        let trip = entries
            .iter()
            .map(|&(i, j, re, im)| (i % dim, j % dim, c(re, im)))
            .collect();
        SparseOperator::from_triplets(dim, trip)
    }

    #[test]
    fn duplicates_merge_and_zeros_prune() {
        let op = SparseOperator::from_triplets(
            3,
            vec![(0, 1, c(1.0, 0.0)), (0, 1, c(2.0, 0.0)), (2, 2, c(1e-16, 0.0)), (1, 0, c(0.0, 1.0))],
        );
        assert_eq!(op.nnz(), 2);
        assert_eq!(op.get(0, 1), c(3.0, 0.0));
        assert_eq!(op.get(2, 2), c(0.0, 0.0));
    }

    #[test]
    fn hermiticity_flag_is_lazy() {
        let op = SparseOperator::from_triplets(2, vec![(0, 1, c(0.0, 1.0)), (1, 0, c(0.0, -1.0))]);
        assert_eq!(op.hermiticity(), Hermiticity::Unknown);
        assert!(op.is_hermitian());
        assert_eq!(op.hermiticity(), Hermiticity::Yes);
        let nh = SparseOperator::from_triplets(2, vec![(0, 1, c(1.0, 0.0))]);
        assert!(!nh.is_hermitian());
        assert_eq!(nh.hermiticity(), Hermiticity::No);
        assert!(matches!(nh.require_hermitian(), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let a = SparseOperator::identity(2);
        let b = SparseOperator::identity(3);
        assert!(a.checked_add(&b).is_err());
        assert!(a.checked_mul(&b).is_err());
        assert!(a.hs_inner(&b).is_err());
    }

    proptest! {
        #[test]
        fn product_matches_dense(
            ea in proptest::collection::vec((0usize..6, 0usize..6, -1.0f64..1.0, -1.0f64..1.0), 0..20),
            eb in proptest::collection::vec((0usize..6, 0usize..6, -1.0f64..1.0, -1.0f64..1.0), 0..20),
        ) {
            let a = random_sparse(6, &ea);
            let b = random_sparse(6, &eb);
            let prod = (&a * &b).to_dense();
            let oracle = a.to_dense() * b.to_dense();
            for i in 0..6 {
                for j in 0..6 {
                    prop_assert!((prod[(i, j)] - oracle[(i, j)]).norm() < 1e-12);
                }
            }
            let sum = (&a - &b).to_dense();
            let oracle = a.to_dense() - b.to_dense();
            for i in 0..6 {
                for j in 0..6 {
                    prop_assert!((sum[(i, j)] - oracle[(i, j)]).norm() < 1e-12);
                }
            }
        }

        #[test]
        fn adjoint_and_matvec_agree_with_dense(
            ea in proptest::collection::vec((0usize..5, 0usize..5, -1.0f64..1.0, -1.0f64..1.0), 0..15),
            x in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 5),
        ) {
            let a = random_sparse(5, &ea);
            let ad = a.adjoint().to_dense();
            let d = a.to_dense();
            let xv: Vec<C64> = x.iter().map(|&(r, i)| c(r, i)).collect();
            let y = a.matvec(&xv);
            for i in 0..5 {
                let mut s = c(0.0, 0.0);
                for j in 0..5 {
                    prop_assert_eq!(ad[(i, j)], d[(j, i)].conj());
                    s += d[(i, j)] * xv[j];
                }
                prop_assert!((y[i] - s).norm() < 1e-12);
            }
            let h = &a + &a.adjoint();
            prop_assert!(h.is_hermitian());
        }
    }

    #[test]
    fn dense_round_trip_and_trace() {
        let op = SparseOperator::from_triplets(
            3,
            vec![(0, 0, c(1.0, 0.0)), (1, 2, c(0.0, 2.0)), (2, 2, c(-3.0, 0.5))],
        );
        let back = SparseOperator::from_dense(&op.to_dense()).unwrap();
        assert_eq!(back, op);
        assert_eq!(op.trace(), c(-2.0, 0.5));
        assert!((op.frobenius_norm() - (1.0f64 + 4.0 + 9.25).sqrt()).abs() < 1e-14);
    }
}
