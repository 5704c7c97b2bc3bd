use faer::linalg::matmul::matmul;
use faer::Accum;

use super::LbitSeed;
use crate::correlation::{correlate_weights, CorrelationSeries, Method, SeriesMeta};
use crate::error::{Error, Result};
use crate::hilbert::{SpaceSpec, SparseOperator};
use crate::propagation::{par, EigenDecomposition};
use crate::{DenseMatrix, C64};

/// Numerically dressed l-bit `τ`, stored in the eigenbasis of `H`.
#[derive(Debug, Clone)]
pub struct Tau {
    /// `τ̃_mn`, normalized so that `Tr(τ^dag τ)/dim = 1`.
    pub eigen: DenseMatrix,
    pub omega: f64,
    pub horizon: f64,
    /// Norm of the filtered operator before normalization.
    pub raw_norm: f64,
    /// Norm of the seed.
    pub seed_norm: f64,
}

pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// Multiplies `M_mn` by `sinc((E_m - E_n - ω) T)` in place.
pub fn sinc_filter(m: &mut DenseMatrix, energies: &[f64], omega: f64, horizon: f64) {
    for c in 0..m.ncols() {
        let ec = energies[c];
        for (r, x) in m.col_as_slice_mut(c).iter_mut().enumerate() {
            *x *= sinc((energies[r] - ec - omega) * horizon);
        }
    }
}

fn hs_norm(m: &DenseMatrix) -> f64 {
    let mut s = 0.0;
    for c in 0..m.ncols() {
        s += m.col_as_slice(c).iter().map(|x| x.norm_sqr()).sum::<f64>();
    }
    (s / m.nrows() as f64).sqrt()
}

fn scale_in_place(m: &mut DenseMatrix, s: f64) {
    for c in 0..m.ncols() {
        m.col_as_slice_mut(c).iter_mut().for_each(|x| *x *= s);
    }
}

/// `τ = ∫_{-T}^{T} e^{-iωt} U^dag(t) A U(t) dt`, evaluated in closed form in
/// the eigenbasis and normalized.
pub fn construct_tau(seed: &LbitSeed, eig: &EigenDecomposition, horizon: f64) -> Result<Tau> {
    construct_tau_op(&seed.op, seed.freq, eig, horizon)
}

pub fn construct_tau_op(
    op: &SparseOperator,
    omega: f64,
    eig: &EigenDecomposition,
    horizon: f64,
) -> Result<Tau> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::invalid("filter horizon T must be positive"));
    }
    let seed_norm = (op.hs_inner(op)?.re).sqrt();
    let mut eigen = eig.to_eigenbasis(op)?;
    sinc_filter(&mut eigen, &eig.energies, omega, horizon);
    Tau::normalized(eigen, omega, horizon, seed_norm)
}

impl Tau {
    fn normalized(mut eigen: DenseMatrix, omega: f64, horizon: f64, seed_norm: f64) -> Result<Tau> {
        let raw_norm = hs_norm(&eigen);
        if raw_norm == 0.0 {
            return Err(Error::invalid("filtered operator vanishes"));
        }
        scale_in_place(&mut eigen, 1.0 / raw_norm);
        Ok(Tau {
            eigen,
            omega,
            horizon,
            raw_norm,
            seed_norm,
        })
    }

    pub fn dim(&self) -> usize {
        self.eigen.nrows()
    }

    /// Applies the same filter again and renormalizes.
    pub fn refiltered(&self, energies: &[f64]) -> Result<Tau> {
        let mut m = self.eigen.clone();
        sinc_filter(&mut m, energies, self.omega, self.horizon);
        Tau::normalized(m, self.omega, self.horizon, 1.0)
    }

    /// `τ` in the product basis.
    pub fn to_product_basis(&self, eig: &EigenDecomposition) -> Result<DenseMatrix> {
        eig.from_eigenbasis(&self.eigen)
    }

    /// `Tr_ph(τ) / dim_ph` without forming `τ` in the product basis.
    pub fn spin_reduced(&self, eig: &EigenDecomposition, spec: &SpaceSpec) -> Result<DenseMatrix> {
        let n = self.dim();
        if spec.dim() != n || eig.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: spec.dim(),
            });
        }
        let (ds, db) = (spec.spin_dim(), spec.boson_dim());
        let v = &eig.vectors;
        let mut out = DenseMatrix::zeros(ds, ds);
        let mut vb = DenseMatrix::zeros(ds, n);
        let mut xb = DenseMatrix::zeros(ds, n);
        for b in 0..db {
            for s in 0..ds {
                for k in 0..n {
                    vb[(s, k)] = v[(s * db + b, k)];
                }
            }
            matmul(xb.as_mut(), Accum::Replace, vb.as_ref(), self.eigen.as_ref(), C64::new(1.0, 0.0), par());
            matmul(
                out.as_mut(),
                Accum::Add,
                xb.as_ref(),
                vb.adjoint(),
                C64::new(1.0 / db as f64, 0.0),
                par(),
            );
        }
        Ok(out)
    }

    /// `Tr(τ(t) τ^dag) / dim`, the fluctuation function with `Q = τ`, `B = τ^dag`.
    pub fn autocorrelation(&self, energies: &[f64], times: &[f64]) -> Result<CorrelationSeries> {
        let n = self.dim();
        if energies.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: energies.len(),
            });
        }
        let c = DenseMatrix::from_fn(n, n, |r, k| C64::new(self.eigen[(r, k)].norm_sqr(), 0.0));
        Ok(CorrelationSeries {
            times: times.to_vec(),
            values: correlate_weights(&c, energies, times),
            meta: SeriesMeta {
                method: Method::Exact,
                observable: "tau,tau^dag".into(),
            },
            std_error: None,
            samples: None,
        })
    }

    /// `F(t) = (1/d) Tr(τ(t) B)` for a partner operator `B`.
    pub fn correlation_with(
        &self,
        b: &SparseOperator,
        eig: &EigenDecomposition,
        times: &[f64],
        label: &str,
    ) -> Result<CorrelationSeries> {
        let n = self.dim();
        if b.dim() != n || eig.energies.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.dim(),
            });
        }
        let mut c = eig.to_eigenbasis(b)?;
        // C_mn = τ̃_mn B̃_nm
        for col in 0..n {
            for row in 0..col {
                let x = c[(row, col)];
                c[(row, col)] = c[(col, row)];
                c[(col, row)] = x;
            }
        }
        for col in 0..n {
            for row in 0..n {
                c[(row, col)] *= self.eigen[(row, col)];
            }
        }
        Ok(CorrelationSeries {
            times: times.to_vec(),
            values: correlate_weights(&c, &eig.energies, times),
            meta: SeriesMeta {
                method: Method::Exact,
                observable: label.to_string(),
            },
            std_error: None,
            samples: None,
        })
    }
}
