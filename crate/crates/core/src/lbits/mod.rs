//! Dynamical l-bits: operators `A` with `[H, A] = ωA`.
//!
//! Four three-site seeds per interior site `j` are exact eigenoperators of
//! `H'_eff` on a spin-1/2 chain:
//!
//! * `A1 = S+_j - 4 S^z_{j-1} S+_j S^z_{j+1}`, `ω = Wj`
//! * `A2 = S^z_{j-1} S+_j - S+_j S^z_{j+1}`, `ω = Wj`
//! * `A3 = S+_j + 2 S^z_{j-1} S+_j + 2 S+_j S^z_{j+1} + 4 S^z_{j-1} S+_j S^z_{j+1}`, `ω = Wj + J`
//! * `A4 = S+_j - 2 S^z_{j-1} S+_j - 2 S+_j S^z_{j+1} + 4 S^z_{j-1} S+_j S^z_{j+1}`, `ω = Wj - J`

mod filter;
mod locality;

pub use filter::{construct_tau, construct_tau_op, sinc, sinc_filter, Tau};
pub use locality::{
    locality_profile, product_basis_coefficients, spin_locality_profile, trace_out_phonons,
    LocalityProfile, ProfileMethod,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonians::{ModelParams, Spin32Sector};
use crate::hilbert::{commutator, spin_op, SpaceSpec, SparseOperator, SpinKind};

#[derive(Debug, Clone)]
pub struct LbitSeed {
    /// 1..=4
    pub k: usize,
    pub site: usize,
    pub op: SparseOperator,
    pub freq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeedLabel {
    pub k: usize,
    pub site: usize,
}

impl LbitSeed {
    pub fn label(&self) -> SeedLabel {
        SeedLabel {
            k: self.k,
            site: self.site,
        }
    }
}

fn check_k(k: usize) -> Result<()> {
    if (1..=4).contains(&k) {
        Ok(())
    } else {
        Err(Error::invalid(format!("seed index k must be in 1..=4, got {k}")))
    }
}

/// The seed operator `A_k(j)` on `spec` (identity on phonons).
pub fn seed_operator(k: usize, j: usize, spec: &SpaceSpec) -> Result<SparseOperator> {
    check_k(k)?;
    if spec.spin_levels != 2 {
        return Err(Error::invalid("l-bit seeds are defined on spin-1/2 chains"));
    }
    spec.check_interior(j)?;
    let sp = spin_op(spec, j, SpinKind::Sp)?;
    let left = spin_op(spec, j - 1, SpinKind::Sz)?.checked_mul(&sp)?;
    let right = sp.checked_mul(&spin_op(spec, j + 1, SpinKind::Sz)?)?;
    let both = left.checked_mul(&spin_op(spec, j + 1, SpinKind::Sz)?)?;
    let terms: [(f64, &SparseOperator); 4] = match k {
        1 => [(1.0, &sp), (0.0, &left), (0.0, &right), (-4.0, &both)],
        2 => [(0.0, &sp), (1.0, &left), (-1.0, &right), (0.0, &both)],
        3 => [(1.0, &sp), (2.0, &left), (2.0, &right), (4.0, &both)],
        _ => [(1.0, &sp), (-2.0, &left), (-2.0, &right), (4.0, &both)],
    };
    let mut acc = SparseOperator::zeros(spec.dim());
    for (c, op) in terms {
        if c != 0.0 {
            acc = acc.add_scaled(op, c)?;
        }
    }
    Ok(acc)
}

/// `ω_k(j)` for the spin-1/2 effective model.
pub fn seed_frequency(k: usize, j: usize, params: &ModelParams) -> Result<f64> {
    check_k(k)?;
    let base = params.w * j as f64;
    Ok(match k {
        1 | 2 => base,
        3 => base + params.j,
        _ => base - params.j,
    })
}

pub fn build_seed(k: usize, j: usize, params: &ModelParams) -> Result<LbitSeed> {
    Ok(LbitSeed {
        k,
        site: j,
        op: seed_operator(k, j, &params.spec)?,
        freq: seed_frequency(k, j, params)?,
    })
}

/// All four seeds of every interior site.
pub fn all_seeds(params: &ModelParams) -> Result<Vec<LbitSeed>> {
    let n = params.spec.n_sites;
    let mut out = Vec::new();
    for j in 2..n {
        for k in 1..=4 {
            out.push(build_seed(k, j, params)?);
        }
    }
    Ok(out)
}

/// `‖[H, A] - ωA‖_F / ‖A‖_F`.
pub fn eigenoperator_residual(h: &SparseOperator, a: &SparseOperator, omega: f64) -> Result<f64> {
    let norm = a.frobenius_norm();
    if norm == 0.0 {
        return Err(Error::invalid("zero operator has no eigenoperator residual"));
    }
    let r = commutator(h, a)?.add_scaled(a, -omega)?;
    Ok(r.frobenius_norm() / norm)
}

/// `Q_k(j) = [A_k(j)^dag, A_k(j)]`.
pub fn lbit_charge(a: &SparseOperator) -> Result<SparseOperator> {
    commutator(&a.adjoint(), a)
}

/// Renormalized frequencies `(Wj - g, Wj - g, Wj - g + J, Wj - g - J)`
/// quoted for the spin-3/2 sector.
pub fn spin32_frequencies(params: &ModelParams, j: usize) -> Result<[f64; 4]> {
    if params.spec.spin_levels != 4 {
        return Err(Error::invalid("spin-3/2 frequencies need spin_levels = 4"));
    }
    params.spec.check_interior(j)?;
    let b = params.w * j as f64 - params.polaron_shift();
    Ok([b, b, b + params.j, b - params.j])
}

/// Frequencies at which the seeds, built on the pseudo-spin chain of the
/// sector, are exact eigenoperators of the sector Hamiltonian.
///
/// With `σ = 2 s^z` the sector Hamiltonian reads
/// `Σ 4J s s' + Σ 2 h_j s_j`, so `A1`, `A2` oscillate at `2 h_j` and
/// `A3`, `A4` at `2 h_j ± 4J`.
pub fn spin32_sector_frequencies(sector: &Spin32Sector, j_coupling: f64, j: usize) -> Result<[f64; 4]> {
    sector.pseudo_spec.check_interior(j)?;
    let b = 2.0 * sector.field[j - 1];
    let c = 4.0 * j_coupling;
    Ok([b, b, b + c, b - c])
}
