use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::SpaceSpec;
use crate::{DenseMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileMethod {
    SpinOnly,
    PhononTraced,
}

/// Per-site operator weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalityProfile {
    /// Index `i` is site `i + 1`; sums to one.
    pub weights: Vec<f64>,
    /// `Σ |c|²` over all non-identity strings.
    pub normalization: f64,
    /// `|c|²` of the identity string.
    pub identity_weight: f64,
    pub method: ProfileMethod,
}

impl LocalityProfile {
    /// 1-based site with the largest weight.
    pub fn peak_site(&self) -> usize {
        let mut best = 0;
        for (i, w) in self.weights.iter().enumerate() {
            if *w > self.weights[best] {
                best = i;
            }
        }
        best + 1
    }

    /// Total weight on sites `lo..=hi` (1-based, clipped to the chain).
    pub fn weight_on(&self, lo: usize, hi: usize) -> f64 {
        (lo.max(1)..=hi.min(self.weights.len())).map(|s| self.weights[s - 1]).sum()
    }
}

/// `Tr_ph(m) / dim_ph` for an operator on the full space.
pub fn trace_out_phonons(m: &DenseMatrix, spec: &SpaceSpec) -> Result<DenseMatrix> {
    let n = spec.dim();
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: m.nrows(),
        });
    }
    let (ds, db) = (spec.spin_dim(), spec.boson_dim());
    Ok(DenseMatrix::from_fn(ds, ds, |r, c| {
        (0..db).map(|b| m[(r * db + b, c * db + b)]).sum::<C64>() / db as f64
    }))
}

/// Coefficients `c_b = Tr(B_b^dag X) / 2^N` over the product basis built
/// from `{I, √2 S+, √2 S-, 2 S^z}`. String index `b = Σ_k b_k 4^{N-k}` with
/// `b_k ∈ {0: I, 1: S+, 2: S-, 3: S^z}` for site `k`.
pub fn product_basis_coefficients(x: &DenseMatrix, n_sites: usize) -> Result<Vec<C64>> {
    let d = 1usize << n_sites;
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x.nrows(),
        });
    }
    // pair p = 2 r + c for the local matrix entry (r, c); row 0 is spin up
    let s2 = std::f64::consts::SQRT_2;
    let m: [[f64; 4]; 4] = [
        [0.5, 0.0, 0.0, 0.5],
        [0.0, s2 / 2.0, 0.0, 0.0],
        [0.0, 0.0, s2 / 2.0, 0.0],
        [0.5, 0.0, 0.0, -0.5],
    ];
    let mut t = vec![C64::new(0.0, 0.0); d * d];
    for c in 0..d {
        for r in 0..d {
            let mut idx = 0;
            for k in 0..n_sites {
                let shift = n_sites - 1 - k;
                let p = 2 * ((r >> shift) & 1) + ((c >> shift) & 1);
                idx = idx * 4 + p;
            }
            t[idx] = x[(r, c)];
        }
    }
    for k in 0..n_sites {
        let stride = 1usize << (2 * (n_sites - 1 - k));
        let block = stride * 4;
        for start in (0..t.len()).step_by(block) {
            for off in 0..stride {
                let base = start + off;
                let v = [t[base], t[base + stride], t[base + 2 * stride], t[base + 3 * stride]];
                for b in 0..4 {
                    t[base + b * stride] = (0..4).map(|p| v[p] * m[b][p]).sum();
                }
            }
        }
    }
    Ok(t)
}

/// Profile of a spin-1/2 chain operator.
pub fn spin_locality_profile(x: &DenseMatrix, n_sites: usize) -> Result<LocalityProfile> {
    let coeffs = product_basis_coefficients(x, n_sites)?;
    let mut weights = vec![0.0; n_sites];
    let mut normalization = 0.0;
    for (b, c) in coeffs.iter().enumerate().skip(1) {
        let w = c.norm_sqr();
        normalization += w;
        for (k, wk) in weights.iter_mut().enumerate() {
            if (b >> (2 * (n_sites - 1 - k))) & 3 != 0 {
                *wk += w;
            }
        }
    }
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter_mut().for_each(|w| *w /= total);
    }
    Ok(LocalityProfile {
        weights,
        normalization,
        identity_weight: coeffs[0].norm_sqr(),
        method: ProfileMethod::SpinOnly,
    })
}

/// Profile of an operator on the full space, phonons traced out with uniform
/// weight.
pub fn locality_profile(tau: &DenseMatrix, spec: &SpaceSpec) -> Result<LocalityProfile> {
    if spec.spin_levels != 2 {
        return Err(Error::invalid("locality profile needs a spin-1/2 chain"));
    }
    let reduced = trace_out_phonons(tau, spec)?;
    let mut p = spin_locality_profile(&reduced, spec.n_sites)?;
    if spec.has_phonons() {
        p.method = ProfileMethod::PhononTraced;
    }
    Ok(p)
}
