//! Infinite-temperature fluctuation functions
//! `F_QB(t) = Tr({Q(t), B}) / (2 dim)` and their spectra.

mod spectrum;

pub use spectrum::{
    dominant_frequency, envelope_metric, peak_frequency, spectral_entropy, spectrum,
    SpectrumSeries, Window,
};

use faer::linalg::matmul::matmul;
use faer::Accum;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::SparseOperator;
use crate::propagation::{par, EigenDecomposition, KrylovParams, KrylovPropagator};
use crate::{DenseMatrix, C64};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Method {
    Exact,
    Typicality { samples: usize, seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesMeta {
    pub method: Method,
    /// Free-form description of `Q` and `B`.
    pub observable: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationSeries {
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    pub meta: SeriesMeta,
    /// Standard error of the sample mean (typicality only).
    pub std_error: Option<Vec<f64>>,
    /// Per-sample series (typicality only).
    pub samples: Option<Vec<Vec<C64>>>,
}

impl CorrelationSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn with_observable(mut self, label: impl Into<String>) -> Self {
        self.meta.observable = label.into();
        self
    }

    /// Largest `|Im F|`.
    pub fn max_imag(&self) -> f64 {
        self.values.iter().map(|v| v.im.abs()).fold(0.0, f64::max)
    }
}

/// Uniform grid `0, dt, …` up to and including `t_max` (within rounding).
pub fn uniform_grid(dt: f64, t_max: f64) -> Result<Vec<f64>> {
    if !(dt > 0.0) || !(t_max >= 0.0) || !dt.is_finite() || !t_max.is_finite() {
        return Err(Error::invalid("grid needs dt > 0 and t_max >= 0"));
    }
    let n = (t_max / dt + 1e-9).floor() as usize;
    Ok((0..=n).map(|k| k as f64 * dt).collect())
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("empty time grid"));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("time grid must be strictly increasing"));
    }
    Ok(())
}

/// Exact `F_QB(t)` from the spectral decomposition of `H`.
pub fn fluctuation_exact(
    q: &SparseOperator,
    b: &SparseOperator,
    eig: &EigenDecomposition,
    times: &[f64],
) -> Result<CorrelationSeries> {
    if q.dim() != b.dim() {
        return Err(Error::DimensionMismatch {
            expected: q.dim(),
            found: b.dim(),
        });
    }
    let qt = eig.to_eigenbasis(q)?;
    let bt = if q.triplets().eq(b.triplets()) {
        qt.clone()
    } else {
        eig.to_eigenbasis(b)?
    };
    fluctuation_from_eigenbasis(qt, &bt, &eig.energies, times)
}

/// `F_QB(t)` from eigenbasis matrices `Q̃`, `B̃`.
///
/// Both orderings of the anticommutator have the same trace, so
/// `F(t) = (1/d) Σ_mn Q̃_mn B̃_nm e^{i(E_m - E_n)t}`. `q_tilde` is reused as
/// scratch.
pub fn fluctuation_from_eigenbasis(
    mut q_tilde: DenseMatrix,
    b_tilde: &DenseMatrix,
    energies: &[f64],
    times: &[f64],
) -> Result<CorrelationSeries> {
    check_grid(times)?;
    let n = energies.len();
    if q_tilde.nrows() != n || b_tilde.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: q_tilde.nrows(),
        });
    }
    // C_mn = Q̃_mn B̃_nm
    for c in 0..n {
        for r in 0..n {
            q_tilde[(r, c)] *= b_tilde[(c, r)];
        }
    }
    let values = correlate_weights(&q_tilde, energies, times);
    Ok(CorrelationSeries {
        times: times.to_vec(),
        values,
        meta: SeriesMeta {
            method: Method::Exact,
            observable: String::new(),
        },
        std_error: None,
        samples: None,
    })
}

/// `(1/d) Σ_mn C_mn e^{i(E_m - E_n)t_k}` for every grid time, in blocks of
/// times to bound memory.
pub(crate) fn correlate_weights(c: &DenseMatrix, energies: &[f64], times: &[f64]) -> Vec<C64> {
    let n = energies.len();
    let mut values = Vec::with_capacity(times.len());
    const TBLOCK: usize = 256;
    for chunk in times.chunks(TBLOCK) {
        let phi = DenseMatrix::from_fn(n, chunk.len(), |m, k| C64::from_polar(1.0, -energies[m] * chunk[k]));
        let mut y = DenseMatrix::zeros(n, chunk.len());
        matmul(y.as_mut(), Accum::Replace, c.as_ref(), phi.as_ref(), C64::new(1.0, 0.0), par());
        for k in 0..chunk.len() {
            let col = y.col_as_slice(k);
            let s: C64 = (0..n).map(|m| phi[(m, k)].conj() * col[m]).sum();
            values.push(s / n as f64);
        }
    }
    values
}

/// Normalized complex Gaussian vector for sample `index` of `seed`.
pub fn random_state(dim: usize, seed: u64, index: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let mut v: Vec<C64> = (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            C64::new(re, im)
        })
        .collect();
    let nv = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.iter_mut().for_each(|x| *x /= nv);
    v
}

fn inner_with(a: &[C64], q: &SparseOperator, b: &[C64]) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (i, ai) in a.iter().enumerate() {
        let row: C64 = q.row(i).map(|(j, v)| v * b[j]).sum();
        acc += ai.conj() * row;
    }
    acc
}

/// Typicality estimate of `F_QB(t)` for several `Q` sharing one `B`.
///
/// Sample `r` uses a Haar-random `ψ_r` and contributes
/// `½(⟨Uψ|Q|UBψ⟩ + ⟨UB^dag ψ|Q|Uψ⟩)`.
pub fn fluctuation_typicality_many(
    qs: &[&SparseOperator],
    b: &SparseOperator,
    h: &SparseOperator,
    times: &[f64],
    samples: usize,
    seed: u64,
    kp: &KrylovParams,
) -> Result<Vec<CorrelationSeries>> {
    check_grid(times)?;
    if times[0] < 0.0 {
        return Err(Error::invalid("typicality grid must start at t >= 0"));
    }
    if samples == 0 {
        return Err(Error::invalid("typicality needs at least one sample"));
    }
    let dim = h.dim();
    for q in qs {
        if q.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: q.dim(),
            });
        }
    }
    if b.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: b.dim(),
        });
    }
    let prop = KrylovPropagator::new(h, *kp)?;
    let b_herm = b.is_hermitian();
    let b_adj = if b_herm { None } else { Some(b.adjoint()) };

    let per_sample: Vec<Vec<Vec<C64>>> = (0..samples)
        .into_par_iter()
        .map(|r| -> Result<Vec<Vec<C64>>> {
            let psi = random_state(dim, seed, r as u64);
            let bpsi = b.matvec(&psi);
            let mut starts: Vec<&[C64]> = vec![&psi, &bpsi];
            let bdpsi;
            if let Some(bd) = &b_adj {
                bdpsi = bd.matvec(&psi);
                starts.push(&bdpsi);
            }
            let mut out = vec![vec![C64::new(0.0, 0.0); times.len()]; qs.len()];
            prop.evolve_grid_many(&starts, times, |k, vs| {
                let (u_psi, u_bpsi) = (vs[0], vs[1]);
                let u_bdpsi = if vs.len() > 2 { vs[2] } else { vs[1] };
                for (qi, q) in qs.iter().enumerate() {
                    let first = inner_with(u_psi, q, u_bpsi);
                    let second = inner_with(u_bdpsi, q, u_psi);
                    out[qi][k] = (first + second) * 0.5;
                }
                Ok(())
            })?;
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut result = Vec::with_capacity(qs.len());
    for qi in 0..qs.len() {
        let rows: Vec<Vec<C64>> = per_sample.iter().map(|s| s[qi].clone()).collect();
        let mut mean = vec![C64::new(0.0, 0.0); times.len()];
        for row in &rows {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= samples as f64);
        let std_error: Vec<f64> = (0..times.len())
            .map(|k| {
                if samples < 2 {
                    return 0.0;
                }
                let var = rows.iter().map(|r| (r[k] - mean[k]).norm_sqr()).sum::<f64>()
                    / (samples as f64 - 1.0);
                (var / samples as f64).sqrt()
            })
            .collect();
        result.push(CorrelationSeries {
            times: times.to_vec(),
            values: mean,
            meta: SeriesMeta {
                method: Method::Typicality { samples, seed },
                observable: String::new(),
            },
            std_error: Some(std_error),
            samples: Some(rows),
        });
    }
    Ok(result)
}

pub fn fluctuation_typicality(
    q: &SparseOperator,
    b: &SparseOperator,
    h: &SparseOperator,
    times: &[f64],
    samples: usize,
    seed: u64,
    kp: &KrylovParams,
) -> Result<CorrelationSeries> {
    let mut v = fluctuation_typicality_many(&[q], b, h, times, samples, seed, kp)?;
    Ok(v.remove(0))
}
