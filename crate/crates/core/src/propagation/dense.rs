use dyn_stack::{MemBuffer, MemStack};
use faer::linalg::evd::{self_adjoint_evd, self_adjoint_evd_scratch, ComputeEigenvectors};
use faer::linalg::matmul::matmul;
use faer::diag::Diag;
use faer::{Accum, Par};

use crate::error::{Error, Result};
use crate::hilbert::SparseOperator;
use crate::{DenseMatrix, C64};

/// Largest dimension accepted by [`dense_eig`].
pub const DENSE_CEILING: usize = 20_000;

/// Column block width for basis changes.
const BLOCK: usize = 256;

/// Full spectrum of a Hermitian operator.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    /// Ascending.
    pub energies: Vec<f64>,
    /// Eigenvectors as columns.
    pub vectors: DenseMatrix,
    pub source_dim: usize,
}

/// `V^T A V` for real `V` and `A`.
fn real_sandwich(v: &faer::Mat<f64>, a: &SparseOperator) -> DenseMatrix {
    let n = v.nrows();
    let mut out = DenseMatrix::zeros(n, n);
    let mut block = faer::Mat::<f64>::zeros(n, BLOCK);
    let mut prod = faer::Mat::<f64>::zeros(n, BLOCK);
    let mut c0 = 0;
    while c0 < n {
        let b = BLOCK.min(n - c0);
        for k in 0..b {
            let col = block.col_as_slice_mut(k);
            col.fill(0.0);
            for i in 0..n {
                let mut acc = 0.0;
                for (j, x) in a.row(i) {
                    acc += x.re * v[(j, c0 + k)];
                }
                col[i] = acc;
            }
        }
        matmul(
            prod.subcols_mut(0, b),
            Accum::Replace,
            v.transpose(),
            block.subcols(0, b),
            1.0,
            par(),
        );
        for k in 0..b {
            for (o, x) in out.col_as_slice_mut(c0 + k).iter_mut().zip(prod.col_as_slice(k)) {
                *o = C64::new(*x, 0.0);
            }
        }
        c0 += b;
    }
    out
}

pub(crate) fn par() -> Par {
    faer::get_global_parallelism()
}

pub fn dense_eig(h: &SparseOperator) -> Result<EigenDecomposition> {
    dense_eig_with_ceiling(h, DENSE_CEILING)
}

pub fn dense_eig_with_ceiling(h: &SparseOperator, ceiling: usize) -> Result<EigenDecomposition> {
    let n = h.dim();
    if n > ceiling {
        return Err(Error::DenseCeiling { dim: n, ceiling });
    }
    h.require_hermitian()?;
    if h.triplets().all(|(_, _, v)| v.im == 0.0) {
        let mut a = faer::Mat::<f64>::zeros(n, n);
        for (i, j, v) in h.triplets() {
            a[(i, j)] = v.re;
        }
        return eig_symmetric_dense(a);
    }
    eig_hermitian_dense(h.to_dense())
}

/// Real symmetric case; the eigenvectors are real.
pub fn eig_symmetric_dense(a: faer::Mat<f64>) -> Result<EigenDecomposition> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    let mut s = Diag::<f64>::zeros(n);
    let mut u = faer::Mat::<f64>::zeros(n, n);
    {
        let p = par();
        let req = self_adjoint_evd_scratch::<f64>(n, ComputeEigenvectors::Yes, p, Default::default());
        let mut buf = MemBuffer::new(req);
        self_adjoint_evd(
            a.as_ref(),
            s.as_mut(),
            Some(u.as_mut()),
            p,
            MemStack::new(&mut buf),
            Default::default(),
        )
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    }
    drop(a);
    let energies = (0..n).map(|k| s[k]).collect();
    let vectors = DenseMatrix::from_fn(n, n, |r, c| C64::new(u[(r, c)], 0.0));
    Ok(EigenDecomposition {
        energies,
        vectors,
        source_dim: n,
    })
}

/// Eigendecomposition of a dense Hermitian matrix (consumed to bound peak
/// memory).
pub fn eig_hermitian_dense(a: DenseMatrix) -> Result<EigenDecomposition> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: a.ncols(),
        });
    }
    let mut s = Diag::<C64>::zeros(n);
    let mut u = DenseMatrix::zeros(n, n);
    {
        let p = par();
        let req = self_adjoint_evd_scratch::<C64>(n, ComputeEigenvectors::Yes, p, Default::default());
        let mut buf = MemBuffer::new(req);
        self_adjoint_evd(
            a.as_ref(),
            s.as_mut(),
            Some(u.as_mut()),
            p,
            MemStack::new(&mut buf),
            Default::default(),
        )
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    }
    drop(a);
    let energies = (0..n).map(|k| s[k].re).collect();
    Ok(EigenDecomposition {
        energies,
        vectors: u,
        source_dim: n,
    })
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `V^dag A V`, built one block of columns at a time.
    pub fn to_eigenbasis(&self, a: &SparseOperator) -> Result<DenseMatrix> {
        let n = self.dim();
        if a.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: a.dim(),
            });
        }
        if a.triplets().all(|(_, _, x)| x.im == 0.0) {
            if let Some(vr) = self.real_vectors() {
                return Ok(real_sandwich(&vr, a));
            }
        }
        let v = &self.vectors;
        let mut out = DenseMatrix::zeros(n, n);
        let mut c0 = 0;
        while c0 < n {
            let b = BLOCK.min(n - c0);
            let vb = v.subcols(c0, b).to_owned();
            let avb = a.mul_dense(&vb)?;
            matmul(
                out.subcols_mut(c0, b),
                Accum::Replace,
                v.adjoint(),
                avb.as_ref(),
                C64::new(1.0, 0.0),
                par(),
            );
            c0 += b;
        }
        Ok(out)
    }

    fn real_vectors(&self) -> Option<faer::Mat<f64>> {
        let v = &self.vectors;
        let n = self.dim();
        for c in 0..n {
            if v.col_as_slice(c).iter().any(|x| x.im != 0.0) {
                return None;
            }
        }
        Some(faer::Mat::from_fn(n, n, |r, c| v[(r, c)].re))
    }

    /// `V M V^dag` for an eigenbasis matrix `M`.
    pub fn from_eigenbasis(&self, m: &DenseMatrix) -> Result<DenseMatrix> {
        let n = self.dim();
        if m.nrows() != n || m.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: m.nrows(),
            });
        }
        let vm = &self.vectors * m;
        Ok(vm * self.vectors.adjoint())
    }

    /// `V^dag x`.
    pub fn coefficients(&self, x: &[C64]) -> Vec<C64> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                self.vectors
                    .col_as_slice(k)
                    .iter()
                    .zip(x)
                    .map(|(v, xi)| v.conj() * xi)
                    .sum()
            })
            .collect()
    }

    /// `e^{-iHt} psi` through the eigenbasis.
    pub fn evolve(&self, psi: &[C64], t: f64) -> Vec<C64> {
        let n = self.dim();
        let c = self.coefficients(psi);
        let mut out = vec![C64::new(0.0, 0.0); n];
        for k in 0..n {
            let ck = c[k] * C64::from_polar(1.0, -self.energies[k] * t);
            for (o, v) in out.iter_mut().zip(self.vectors.col_as_slice(k)) {
                *o += ck * v;
            }
        }
        out
    }

    /// `V diag(f(E_k)) V^dag`.
    pub fn function(&self, f: impl Fn(f64) -> C64) -> DenseMatrix {
        let n = self.dim();
        let mut vf = self.vectors.clone();
        for k in 0..n {
            let fk = f(self.energies[k]);
            for x in vf.col_as_slice_mut(k) {
                *x *= fk;
            }
        }
        vf * self.vectors.adjoint()
    }

    /// `e^{-iHt}`.
    pub fn propagator(&self, t: f64) -> DenseMatrix {
        self.function(|e| C64::from_polar(1.0, -e * t))
    }

    /// `H V - V diag(E)` in Frobenius norm.
    pub fn residual(&self, h: &SparseOperator) -> Result<f64> {
        let hv = h.mul_dense(&self.vectors)?;
        let mut r = 0.0;
        for k in 0..self.dim() {
            let e = self.energies[k];
            for (a, v) in hv.col_as_slice(k).iter().zip(self.vectors.col_as_slice(k)) {
                r += (a - v * e).norm_sqr();
            }
        }
        Ok(r.sqrt())
    }
}

/// `U^dag(t) Q U(t)` with `U = e^{-iHt}`, via `Q̃_mn e^{i(E_m - E_n)t}`.
pub fn heisenberg_op(q: &SparseOperator, eig: &EigenDecomposition, t: f64) -> Result<DenseMatrix> {
    let mut qt = eig.to_eigenbasis(q)?;
    rotate_in_eigenbasis(&mut qt, &eig.energies, t);
    eig.from_eigenbasis(&qt)
}

/// Multiplies `M_mn` by `e^{i(E_m - E_n)t}` in place.
pub fn rotate_in_eigenbasis(m: &mut DenseMatrix, energies: &[f64], t: f64) {
    let n = energies.len();
    let phases: Vec<C64> = energies.iter().map(|&e| C64::from_polar(1.0, e * t)).collect();
    for c in 0..n {
        let pc = phases[c].conj();
        for (r, x) in m.col_as_slice_mut(c).iter_mut().enumerate() {
            *x *= phases[r] * pc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{build_system, ModelParams};
    use crate::hilbert::{spin_op, SpaceSpec, SpinKind};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn max_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
        let mut m = 0.0f64;
        for j in 0..a.ncols() {
            for i in 0..a.nrows() {
                m = m.max((a[(i, j)] - b[(i, j)]).norm());
            }
        }
        m
    }

    pub(crate) fn random_hermitian(n: usize, seed: u64) -> SparseOperator {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for i in 0..n {
            for j in i..n {
                let v = C64::new(rng.random::<f64>() - 0.5, if i == j { 0.0 } else { rng.random::<f64>() - 0.5 });
                trip.push((i, j, v));
                if i != j {
                    trip.push((j, i, v.conj()));
                }
            }
        }
        SparseOperator::from_triplets(n, trip)
    }

    #[test]
    fn single_spin_energies() {
        let spec = SpaceSpec::new(1, 2, 0).unwrap();
        let e = dense_eig(&spin_op(&spec, 1, SpinKind::Sz).unwrap()).unwrap();
        assert_eq!(e.energies, vec![-0.5, 0.5]);
    }

    #[test]
    fn singlet_triplet() {
        let p = ModelParams::new(SpaceSpec::new(2, 2, 0).unwrap());
        let e = dense_eig(&build_system(&p).unwrap()).unwrap();
        for (a, b) in e.energies.iter().zip([-0.75, 0.25, 0.25, 0.25]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn random_round_trip() {
        let h = random_hermitian(50, 7);
        let e = dense_eig(&h).unwrap();
        let rebuilt = e.function(|x| C64::new(x, 0.0));
        assert!(max_diff(&rebuilt, &h.to_dense()) < 1e-10);
        let vv = e.vectors.adjoint() * &e.vectors;
        assert!(max_diff(&vv, &DenseMatrix::identity(50, 50)) < 1e-10);
        assert!(e.residual(&h).unwrap() < 1e-9 * h.frobenius_norm());
    }

    #[test]
    fn real_and_complex_paths_agree() {
        let p = ModelParams::new(SpaceSpec::new(3, 2, 2).unwrap())
            .with_tilt(3.0)
            .with_phonons(3.0, 1.0);
        let h = crate::hamiltonians::build_full(&p).unwrap();
        let real = dense_eig(&h).unwrap();
        let complex = eig_hermitian_dense(h.to_dense()).unwrap();
        for (a, b) in real.energies.iter().zip(&complex.energies) {
            assert!((a - b).abs() < 1e-10);
        }
        assert!(real.residual(&h).unwrap() < 1e-10);
    }

    #[test]
    fn real_eigenbasis_transform_matches_complex() {
        let p = ModelParams::new(SpaceSpec::new(3, 2, 2).unwrap())
            .with_tilt(3.0)
            .with_phonons(3.0, 1.0);
        let h = crate::hamiltonians::build_full(&p).unwrap();
        let eig = dense_eig(&h).unwrap();
        let sx = spin_op(&p.spec, 2, SpinKind::Sx).unwrap();
        let fast = eig.to_eigenbasis(&sx).unwrap();
        let slow = eig.vectors.adjoint() * sx.to_dense() * &eig.vectors;
        let d = (&fast - &slow).norm_max();
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn rejects_non_hermitian_and_oversized() {
        let nh = SparseOperator::from_triplets(2, vec![(0, 1, C64::new(1.0, 0.0))]);
        assert!(matches!(dense_eig(&nh), Err(Error::NotHermitian { .. })));
        let id = SparseOperator::identity(10);
        assert!(matches!(
            dense_eig_with_ceiling(&id, 5),
            Err(Error::DenseCeiling { .. })
        ));
    }

    #[test]
    fn heisenberg_rotation_single_spin() {
        let spec = SpaceSpec::new(1, 2, 0).unwrap();
        let w = 3.0;
        let h = spin_op(&spec, 1, SpinKind::Sz).unwrap().scale_re(w);
        let eig = dense_eig(&h).unwrap();
        let sx = spin_op(&spec, 1, SpinKind::Sx).unwrap();
        let sy = spin_op(&spec, 1, SpinKind::Sy).unwrap();
        for t in [0.0, 0.3, 1.7] {
            let qt = heisenberg_op(&sx, &eig, t).unwrap();
            let expect = sx.to_dense() * faer::Scale(C64::new((w * t).cos(), 0.0))
                - sy.to_dense() * faer::Scale(C64::new((w * t).sin(), 0.0));
            assert!(max_diff(&qt, &expect) < 1e-12);
        }
    }

    #[test]
    fn conserved_charge_is_static() {
        let spec = SpaceSpec::new(4, 2, 0).unwrap();
        let p = ModelParams::new(spec);
        let eig = dense_eig(&build_system(&p).unwrap()).unwrap();
        let mut total = SparseOperator::zeros(spec.dim());
        for j in 1..=4 {
            total = total.checked_add(&spin_op(&spec, j, SpinKind::Sz).unwrap()).unwrap();
        }
        let qt = heisenberg_op(&total, &eig, 2.3).unwrap();
        assert!(max_diff(&qt, &total.to_dense()) < 1e-10);
    }

    #[test]
    fn heisenberg_preserves_spectrum() {
        let h = random_hermitian(24, 3);
        let q = random_hermitian(24, 4);
        let eig = dense_eig(&h).unwrap();
        let qt = heisenberg_op(&q, &eig, 1.3).unwrap();
        let qt_sparse = SparseOperator::from_dense(&qt).unwrap();
        let a = dense_eig(&q).unwrap().energies;
        let b = eig_hermitian_dense(qt_sparse.to_dense()).unwrap().energies;
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-8);
        }
    }
}
