//! Model Hamiltonians and the identities that connect them.
//!
//! * `H_s = Σ_j [(J/2)(S+_j S-_{j+1} + h.c.) + Δ S^z_j S^z_{j+1}] + Σ_j jW S^z_j` (open chain)
//! * `H_sb = Σ_j [ω0 n_j + λ⊥(S+_j a_j + S-_j a+_j) + λ∥(a_j + a+_j) S^z_j]`
//! * `H'_eff = Σ_j [J S^z_j S^z_{j+1} - g (S^z_j)² + Wj S^z_j]`, `g = λ∥²/ω0`

mod checks;
mod spin32;

pub use checks::{
    polaron_unitary, verify_polaron_decoupling, verify_tilt_commutators, PolaronReport,
    ResidualReport,
};
pub use spin32::{build_spin32_sector, restrict_to_spin32_sector, Spin32Sector, SPIN32_SECTOR};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{boson_op, spin_op, BosonKind, SpaceSpec, SparseOperator, SpinKind};

/// Physical couplings in units of `J` (hbar = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub j: f64,
    pub delta: f64,
    pub w: f64,
    pub omega0: f64,
    pub lambda_perp: f64,
    pub lambda_par: f64,
    pub spec: SpaceSpec,
}

impl ModelParams {
    /// Isotropic Heisenberg chain (`J = Δ = 1`), no tilt, no coupling.
    pub fn new(spec: SpaceSpec) -> Self {
        ModelParams {
            j: 1.0,
            delta: 1.0,
            w: 0.0,
            omega0: 1.0,
            lambda_perp: 0.0,
            lambda_par: 0.0,
            spec,
        }
    }

    pub fn with_tilt(mut self, w: f64) -> Self {
        self.w = w;
        self
    }

    /// Equal couplings `λ⊥ = λ∥ = λ0` with phonon energy `ω0`.
    pub fn with_phonons(mut self, omega0: f64, lambda0: f64) -> Self {
        self.omega0 = omega0;
        self.lambda_perp = lambda0;
        self.lambda_par = lambda0;
        self
    }

    /// Polaron shift `g = λ∥² / ω0`.
    pub fn polaron_shift(&self) -> f64 {
        if self.lambda_par == 0.0 {
            0.0
        } else {
            self.lambda_par * self.lambda_par / self.omega0
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        let finite = [
            self.j,
            self.delta,
            self.w,
            self.omega0,
            self.lambda_perp,
            self.lambda_par,
        ]
        .iter()
        .all(|x| x.is_finite());
        if !finite {
            return Err(Error::invalid("couplings must be finite"));
        }
        if self.j <= 0.0 {
            return Err(Error::invalid("J must be positive"));
        }
        if self.spec.boson_levels >= 2 && self.omega0 <= 0.0 {
            return Err(Error::invalid("omega0 must be positive with phonons"));
        }
        if self.lambda_par != 0.0 && self.omega0 <= 0.0 {
            return Err(Error::invalid("omega0 must be positive when lambda_par is set"));
        }
        Ok(())
    }
}

/// Sum of `(coefficient, operator)` terms.
pub(crate) fn sum_terms(dim: usize, terms: impl IntoIterator<Item = (f64, SparseOperator)>) -> Result<SparseOperator> {
    let mut acc = SparseOperator::zeros(dim);
    for (c, op) in terms {
        if c != 0.0 {
            acc = acc.add_scaled(&op, c)?;
        }
    }
    Ok(acc)
}

/// Diagonal operator whose entry is `f(m)`, with `m[k]` the `S^z` eigenvalue
/// of site `k + 1`. Acts as the identity on any phonon factor.
pub fn spin_diagonal(spec: &SpaceSpec, f: impl Fn(&[f64]) -> f64) -> SparseOperator {
    let d = spec.spin_levels;
    let s = (d as f64 - 1.0) / 2.0;
    let n = spec.n_sites;
    let bd = spec.boson_dim();
    let mut m = vec![0.0; n];
    let mut diag = Vec::with_capacity(spec.dim());
    for sidx in 0..spec.spin_dim() {
        let mut rest = sidx;
        for k in (0..n).rev() {
            m[k] = s - (rest % d) as f64;
            rest /= d;
        }
        let v = f(&m);
        diag.extend(std::iter::repeat(v).take(bd));
    }
    SparseOperator::from_real_diagonal(&diag)
}

fn require_chain(params: &ModelParams) -> Result<()> {
    params.validate()
}

/// `K = Σ_j (J/2) S+_j S-_{j+1}`.
pub fn build_hopping_k(params: &ModelParams) -> Result<SparseOperator> {
    require_chain(params)?;
    let spec = &params.spec;
    let mut terms = Vec::new();
    for j in 1..spec.n_sites {
        let sp = spin_op(spec, j, SpinKind::Sp)?;
        let sm = spin_op(spec, j + 1, SpinKind::Sm)?;
        terms.push((params.j / 2.0, sp.checked_mul(&sm)?));
    }
    sum_terms(spec.dim(), terms)
}

/// `H_ZZ = Σ_j Δ S^z_j S^z_{j+1}`.
pub fn build_zz(params: &ModelParams) -> Result<SparseOperator> {
    require_chain(params)?;
    let delta = params.delta;
    Ok(spin_diagonal(&params.spec, |m| {
        m.windows(2).map(|w| delta * w[0] * w[1]).sum()
    }))
}

/// Tilt `M = Σ_j jW S^z_j`.
pub fn build_tilt(params: &ModelParams) -> Result<SparseOperator> {
    require_chain(params)?;
    let w = params.w;
    Ok(spin_diagonal(&params.spec, |m| {
        m.iter().enumerate().map(|(k, mk)| (k + 1) as f64 * w * mk).sum()
    }))
}

/// Spin chain `H_s` on the (possibly phonon-padded) space of `params`.
///
/// A single site has no bond, so `H_s = W S^z`.
pub fn build_system(params: &ModelParams) -> Result<SparseOperator> {
    let k = build_hopping_k(params)?;
    let xx = k.checked_add(&k.adjoint())?;
    xx.checked_add(&build_zz(params)?)?
        .checked_add(&build_tilt(params)?)
}

/// `h⊥_j = λ⊥ S+_j a_j`.
pub fn perp_site_term(params: &ModelParams, site: usize) -> Result<SparseOperator> {
    require_phonons(params)?;
    let spec = &params.spec;
    let sp = spin_op(spec, site, SpinKind::Sp)?;
    let a = boson_op(spec, site, BosonKind::A)?;
    Ok(sp.checked_mul(&a)?.scale_re(params.lambda_perp))
}

/// `h∥_j = λ∥ (a_j + a+_j) S^z_j`.
pub fn par_site_term(params: &ModelParams, site: usize) -> Result<SparseOperator> {
    require_phonons(params)?;
    let spec = &params.spec;
    let a = boson_op(spec, site, BosonKind::A)?;
    let x = a.checked_add(&a.adjoint())?;
    let sz = spin_op(spec, site, SpinKind::Sz)?;
    Ok(x.checked_mul(&sz)?.scale_re(params.lambda_par))
}

/// `ω0 Σ_j n_j`.
pub fn build_phonon_energy(params: &ModelParams) -> Result<SparseOperator> {
    require_phonons(params)?;
    let spec = &params.spec;
    let mut terms = Vec::new();
    for j in 1..=spec.n_sites {
        terms.push((params.omega0, boson_op(spec, j, BosonKind::N)?));
    }
    sum_terms(spec.dim(), terms)
}

fn require_phonons(params: &ModelParams) -> Result<()> {
    params.validate()?;
    if params.spec.boson_levels < 2 {
        return Err(Error::invalid(
            "spin-phonon coupling needs boson_levels >= 2",
        ));
    }
    Ok(())
}

/// `H_sb`, including the bare phonon energy.
pub fn build_bath_coupling(params: &ModelParams) -> Result<SparseOperator> {
    require_phonons(params)?;
    let mut h = build_phonon_energy(params)?;
    for j in 1..=params.spec.n_sites {
        let perp = perp_site_term(params, j)?;
        h = h.checked_add(&perp)?.checked_add(&perp.adjoint())?;
        h = h.checked_add(&par_site_term(params, j)?)?;
    }
    Ok(h)
}

/// `H = H_s + H_sb`; phononless specs give `H_s` alone.
pub fn build_full(params: &ModelParams) -> Result<SparseOperator> {
    let hs = build_system(params)?;
    if params.spec.boson_levels < 2 {
        return Ok(hs);
    }
    hs.checked_add(&build_bath_coupling(params)?)
}

/// `H'_eff` on the spin-only space of `params`.
pub fn build_effective(params: &ModelParams) -> Result<SparseOperator> {
    build_effective_on(params, &params.spec.spin_only())
}

/// `H'_eff` on an arbitrary layout of the same chain; any phonon factor is
/// padded with the identity.
pub fn build_effective_on(params: &ModelParams, spec: &SpaceSpec) -> Result<SparseOperator> {
    params.validate()?;
    if spec.n_sites != params.spec.n_sites || spec.spin_levels != params.spec.spin_levels {
        return Err(Error::invalid("layout does not match the model chain"));
    }
    let (j, w, g) = (params.j, params.w, params.polaron_shift());
    Ok(spin_diagonal(spec, |m| {
        let zz: f64 = m.windows(2).map(|p| j * p[0] * p[1]).sum();
        let site: f64 = m
            .iter()
            .enumerate()
            .map(|(k, mk)| -g * mk * mk + (k + 1) as f64 * w * mk)
            .sum();
        zz + site
    }))
}
