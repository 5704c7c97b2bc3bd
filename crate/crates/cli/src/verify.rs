//! The `verify` experiment: every operator identity the model relies on.

use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};
use serde_json::json;
use starkmbl::gates::{gate_ising, verify_su2};
use starkmbl::hamiltonians::{
    build_effective, build_spin32_sector, restrict_to_spin32_sector, verify_polaron_decoupling,
    verify_tilt_commutators, ModelParams,
};
use starkmbl::lbits::{
    all_seeds, eigenoperator_residual, seed_operator, spin32_frequencies, spin32_sector_frequencies,
};
use starkmbl::{SpaceSpec, SparseOperator};

use crate::config::{ExperimentConfig, SCHEMA_VERSION};
use crate::output::write_json;

pub const IDENTITY_TOL: f64 = 1e-10;
pub const SECTOR_TOL: f64 = 1e-12;
/// Both polaron entries are limited by the Fock truncation.
pub const POLARON_TOL: f64 = 1e-6;
/// Fock levels used for the single-site polaron check.
pub const POLARON_FOCK: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckEntry {
    pub check: String,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub checks: Vec<CheckEntry>,
    /// Fitted or derived constants reported alongside the checks.
    pub constants: serde_json::Value,
    pub all_pass: bool,
}

fn entry(check: impl Into<String>, residual: f64, tolerance: f64) -> CheckEntry {
    CheckEntry {
        check: check.into(),
        residual,
        tolerance,
        pass: residual < tolerance,
    }
}

/// Runs the identity battery on the configured chain.
pub fn verify_params(base: &ModelParams) -> Result<VerifyReport> {
    let mut checks = Vec::new();
    let mut constants = serde_json::Map::new();
    let n = base.spec.n_sites;

    for (name, r) in verify_tilt_commutators(base)?.entries {
        checks.push(entry(format!("tilt {name}"), r, IDENTITY_TOL));
    }

    if base.spec.spin_levels == 2 {
        let spin = ModelParams {
            spec: base.spec.spin_only(),
            ..*base
        };
        let mut kappas = Vec::new();
        let mut quoted = Vec::new();
        for j in 2..n {
            let s = verify_su2(j, &spin.spec)?;
            checks.push(entry(format!("su2 [Q2,A2]-kappa A2 @{j}"), s.kappa_residual_minus, IDENTITY_TOL));
            checks.push(entry(format!("su2 [Q2,A2^dag]+kappa A2^dag @{j}"), s.kappa_residual_plus, IDENTITY_TOL));
            kappas.push(s.kappa);
            quoted.push(json!({ "site": j, "residual_minus_8": s.residual_minus, "residual_plus_8": s.residual_plus }));
        }
        constants.insert("su2_kappa".into(), json!(kappas));
        constants.insert("su2_constant_8_residuals".into(), json!(quoted));

        let h = build_effective(&spin)?;
        for seed in all_seeds(&spin)? {
            let r = eigenoperator_residual(&h, &seed.op, seed.freq)?;
            checks.push(entry(format!("eigenoperator A{}({})", seed.k, seed.site), r, IDENTITY_TOL));
        }
        for j in 2..n.saturating_sub(1) {
            let is = gate_ising(&spin, j, 1.0)?;
            checks.push(entry(format!("ising [G,H'_eff] @{j}"), is.commutator_residual, IDENTITY_TOL));
            checks.push(entry(format!("ising [Q2({j}),Q2({})]", j + 1), is.charge_commutator, IDENTITY_TOL));
        }
    }

    if base.lambda_par != 0.0 {
        let single = ModelParams {
            spec: SpaceSpec::new(1, base.spec.spin_levels, POLARON_FOCK)?,
            ..*base
        };
        let p = verify_polaron_decoupling(&single)?;
        checks.push(entry("polaron decoupling (low Fock block)", p.residual_low_fock, POLARON_TOL));
        checks.push(entry(
            "polaron ground-energy shift",
            (p.ground_energy - p.expected_ground_energy).abs(),
            POLARON_TOL,
        ));
        constants.insert("polaron_g".into(), json!(p.g));
        constants.insert("polaron_ground_energy".into(), json!(p.ground_energy));
    }

    // the spin-3/2 sector of the same couplings, when small enough
    if (3..=6).contains(&n) {
        let s32 = ModelParams {
            spec: SpaceSpec::new(n, 4, 0)?,
            ..*base
        };
        let sector = build_spin32_sector(&s32)?;
        let restricted = restrict_to_spin32_sector(&build_effective(&s32)?, &s32.spec)?;
        let mapped = sector
            .hamiltonian
            .checked_add(&SparseOperator::identity(sector.hamiltonian.dim()).scale_re(sector.constant))?;
        checks.push(entry("spin-3/2 sector substitution", restricted.max_abs_diff(&mapped), SECTOR_TOL));
        let mut freqs = Vec::new();
        for j in 2..n {
            let f = spin32_sector_frequencies(&sector, s32.j, j)?;
            for k in 1..=4 {
                let a = seed_operator(k, j, &sector.pseudo_spec)?;
                let r = eigenoperator_residual(&sector.hamiltonian, &a, f[k - 1])?;
                checks.push(entry(format!("spin-3/2 eigenoperator A{k}({j})"), r, IDENTITY_TOL));
            }
            freqs.push(json!({ "site": j, "sector": f, "shifted_by_g": spin32_frequencies(&s32, j)? }));
        }
        constants.insert("spin32_frequencies".into(), json!(freqs));
    }

    let all_pass = checks.iter().all(|c| c.pass);
    Ok(VerifyReport {
        schema_version: SCHEMA_VERSION,
        checks,
        constants: serde_json::Value::Object(constants),
        all_pass,
    })
}

pub(crate) fn verify_run(cfg: &ExperimentConfig, dir: &Path) -> Result<VerifyReport> {
    let report = verify_params(&cfg.params.model()?)?;
    write_json(&dir.join("verify.json"), &report)?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_battery_passes() {
        let cfg = crate::config::preset("verify").unwrap();
        let r = verify_params(&cfg.params.model().unwrap()).unwrap();
        for c in &r.checks {
            assert!(c.pass, "{} = {:e}", c.check, c.residual);
        }
        assert!(r.all_pass);
        assert!(r.checks.iter().any(|c| c.check.starts_with("polaron")));
        assert!(r.checks.iter().any(|c| c.check.starts_with("spin-3/2")));
        assert!(r.checks.iter().any(|c| c.check.starts_with("tilt [M,h_perp_1]")));
    }

    #[test]
    fn failing_entry_flips_all_pass() {
        let e = entry("x", 1.0, 0.5);
        assert!(!e.pass);
    }
}
