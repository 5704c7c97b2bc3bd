use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{build_lbit_charge, exp_i_hermitian, sigma_x, spin_half, unitarity_defect};
use crate::error::{Error, Result};
use crate::hamiltonians::ModelParams;
use crate::hilbert::{SpaceSpec, SparseOperator};
use crate::{DenseMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    RotZ,
    Ising,
    RotX,
    Cnot,
}

/// One step `e^{iφG}` of a schedule. `duration` is the nominal time the
/// step takes on the l-bit hardware (phase accumulation under `H'_eff` for
/// `rot_z`, `e^{itG/2}` for `ising`, multiples of the calibrated quarter
/// turn for `rot_x`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: GateKind,
    pub sites: Vec<usize>,
    pub angle: f64,
    pub duration: f64,
}

/// Textbook CNOT from `Z`, `X` and `ZZ` rotations, in application order.
/// Up to the global phase `e^{-iπ/4}` it equals the CNOT with `|0⟩` the
/// `Σ^z = +1` state.
pub fn cnot_schedule(control: usize, x_duration: f64, w: f64) -> Vec<GateSpec> {
    let target = control + 1;
    let q = PI / 4.0;
    let steps = [
        (GateKind::RotZ, vec![target], q),
        (GateKind::RotX, vec![target], q),
        (GateKind::RotZ, vec![target], -q),
        (GateKind::Ising, vec![control, target], q),
        (GateKind::RotZ, vec![target], q),
        (GateKind::RotX, vec![target], -q),
        (GateKind::RotZ, vec![target], -q),
        (GateKind::RotX, vec![target], -q),
        (GateKind::RotZ, vec![control], -q),
    ];
    steps
        .into_iter()
        .map(|(kind, sites, angle)| {
            let duration = match kind {
                GateKind::RotZ => {
                    let omega = w * sites[0] as f64;
                    if omega > 0.0 {
                        (2.0 * angle).rem_euclid(2.0 * PI) / omega
                    } else {
                        f64::NAN
                    }
                }
                GateKind::Ising => (2.0 * angle).rem_euclid(4.0 * PI),
                _ => angle.rem_euclid(2.0 * PI) / (PI / 4.0) * x_duration,
            };
            GateSpec {
                kind,
                sites,
                angle,
                duration,
            }
        })
        .collect()
}

fn generator(step: &GateSpec, spec: &SpaceSpec) -> Result<SparseOperator> {
    match (step.kind, step.sites.as_slice()) {
        (GateKind::RotZ, [q]) => Ok(build_lbit_charge(*q, spec)?.scale_re(-1.0)),
        (GateKind::RotX, [q]) => sigma_x(*q, spec),
        (GateKind::Ising, [a, b]) => build_lbit_charge(*a, spec)?.checked_mul(&build_lbit_charge(*b, spec)?),
        _ => Err(Error::invalid(format!("malformed gate step {:?}", step.kind))),
    }
}

fn run_sequence(
    dim: usize,
    schedule: &[GateSpec],
    gen: impl Fn(&GateSpec) -> Result<SparseOperator>,
) -> Result<DenseMatrix> {
    let mut u = DenseMatrix::identity(dim, dim);
    for step in schedule {
        if step.angle == 0.0 {
            continue;
        }
        let g = gen(step)?;
        u = exp_i_hermitian(&g, step.angle)? * &u;
    }
    Ok(u)
}

/// Product of the schedule's rotations `e^{iφG}` with `Σ^z = -Q2`,
/// `Σ^x = A2 + A2^dag` and `Σ^zΣ^z = Q2 Q2'`.
pub fn execute_schedule(params: &ModelParams, schedule: &[GateSpec]) -> Result<DenseMatrix> {
    let spec = spin_half(&params.spec)?;
    run_sequence(spec.dim(), schedule, |s| generator(s, &spec))
}

/// Four product states spanning the logical block of the l-bit pair
/// `(j, j+1)`, ordered `|00⟩, |01⟩, |10⟩, |11⟩` (control first).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogicalBasis {
    pub states: [usize; 4],
    /// Dimensions of the joint `(Σ^z_j, Σ^z_{j+1}) = (±1, ±1)` eigenspaces,
    /// same order.
    pub sector_dims: [usize; 4],
}

/// `|c t⟩` has `S_j = c`, `S_{j+1} = t`, `S_{j-1} = ¬t`, `S_{j+2} = ¬c` and
/// every other spin down, so both charges are `±1`.
pub fn logical_basis(params: &ModelParams, j: usize) -> Result<LogicalBasis> {
    let spec = spin_half(&params.spec)?;
    spec.check_interior(j)?;
    spec.check_interior(j + 1)?;
    let n = spec.n_sites;
    let zc: Vec<f64> = build_lbit_charge(j, &spec)?.diagonal().iter().map(|z| -z.re).collect();
    let zt: Vec<f64> = build_lbit_charge(j + 1, &spec)?.diagonal().iter().map(|z| -z.re).collect();
    let mut states = [0usize; 4];
    let mut sector_dims = [0usize; 4];
    for (slot, (c, t)) in [(0usize, 0usize), (0, 1), (1, 0), (1, 1)].into_iter().enumerate() {
        let mut bits = vec![1usize; n];
        bits[j - 1] = c;
        bits[j] = t;
        bits[j - 2] = 1 - t;
        bits[j + 1] = 1 - c;
        states[slot] = bits.iter().fold(0, |acc, b| acc * 2 + b);
        let (a, b) = (1.0 - 2.0 * c as f64, 1.0 - 2.0 * t as f64);
        sector_dims[slot] = (0..spec.dim())
            .filter(|&i| (zc[i] - a).abs() < 1e-12 && (zt[i] - b).abs() < 1e-12)
            .count();
        if (zc[states[slot]] - a).abs() > 1e-12 || (zt[states[slot]] - b).abs() > 1e-12 {
            return Err(Error::invalid("logical state outside its charge sector"));
        }
    }
    Ok(LogicalBasis { states, sector_dims })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CnotReport {
    pub control: usize,
    pub target: usize,
    pub schedule: Vec<GateSpec>,
    pub logical: LogicalBasis,
    /// `⟨a|U|b⟩` on the logical states.
    pub block: Vec<Vec<C64>>,
    /// `|Tr(CNOT^dag B)| / 4`
    pub fidelity: f64,
    /// `arg Tr(CNOT^dag B)`
    pub global_phase: f64,
    /// `1 - ‖B‖_F² / 4`
    pub leakage: f64,
    pub unitarity: f64,
}

const CNOT: [[f64; 4]; 4] = [
    [1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [0.0, 0.0, 1.0, 0.0],
];

fn score(block: &[Vec<C64>]) -> (f64, f64, f64) {
    let mut tr = C64::new(0.0, 0.0);
    let mut frob = 0.0;
    for a in 0..4 {
        for b in 0..4 {
            tr += CNOT[a][b] * block[a][b];
            frob += block[a][b].norm_sqr();
        }
    }
    (tr.norm() / 4.0, tr.arg(), 1.0 - frob / 4.0)
}

pub fn compose_cnot(params: &ModelParams, control: usize, x_duration: Option<f64>) -> Result<CnotReport> {
    let x_duration = match x_duration {
        Some(t) if t > 0.0 && t.is_finite() => t,
        _ => return Err(Error::invalid("uncalibrated X gate: a positive X duration is required")),
    };
    let logical = logical_basis(params, control)?;
    let schedule = cnot_schedule(control, x_duration, params.w);
    let u = execute_schedule(params, &schedule)?;
    let block: Vec<Vec<C64>> = logical
        .states
        .iter()
        .map(|&r| logical.states.iter().map(|&c| u[(r, c)]).collect())
        .collect();
    let (fidelity, global_phase, leakage) = score(&block);
    Ok(CnotReport {
        control,
        target: control + 1,
        schedule,
        logical,
        block,
        fidelity,
        global_phase,
        leakage,
        unitarity: unitarity_defect(&u),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{spin_op, SpinKind};

    fn params(n: usize) -> ModelParams {
        ModelParams::new(SpaceSpec::new(n, 2, 0).unwrap()).with_tilt(10.0)
    }

    #[test]
    fn schedule_is_cnot_for_ideal_qubits() {
        let spec = SpaceSpec::new(2, 2, 0).unwrap();
        let z = |s| spin_op(&spec, s, SpinKind::Sz).unwrap().scale_re(2.0);
        let x = |s| spin_op(&spec, s, SpinKind::Sx).unwrap().scale_re(2.0);
        let sched = cnot_schedule(1, 1.0, 10.0);
        let u = run_sequence(4, &sched, |s| {
            Ok(match s.kind {
                GateKind::RotZ => z(if s.sites[0] == 1 { 1 } else { 2 }),
                GateKind::RotX => x(2),
                _ => z(1).checked_mul(&z(2)).unwrap(),
            })
        })
        .unwrap();
        let block: Vec<Vec<C64>> = (0..4).map(|r| (0..4).map(|c| u[(r, c)]).collect()).collect();
        let (f, phase, leak) = score(&block);
        assert!((f - 1.0).abs() < 1e-12);
        assert!((phase + PI / 4.0).abs() < 1e-12);
        assert!(leak.abs() < 1e-12);
    }

    #[test]
    fn logical_block_has_four_states() {
        let lb = logical_basis(&params(4), 2).unwrap();
        assert_eq!(lb.sector_dims, [1, 1, 1, 1]);
        let mut s = lb.states.to_vec();
        s.sort();
        s.dedup();
        assert_eq!(s.len(), 4);
        let lb6 = logical_basis(&params(6), 3).unwrap();
        assert!(lb6.sector_dims.iter().all(|&d| d == 4));
    }

    #[test]
    fn zero_angles_give_identity() {
        let p = params(4);
        let mut sched = cnot_schedule(2, 1.0, p.w);
        sched.iter_mut().for_each(|s| s.angle = 0.0);
        let u = execute_schedule(&p, &sched).unwrap();
        assert_eq!(unitarity_defect(&u), 0.0);
        for r in 0..16 {
            assert_eq!(u[(r, r)], C64::new(1.0, 0.0));
        }
        assert!(execute_schedule(&p, &[]).is_ok());
    }

    #[test]
    fn composed_cnot_is_unitary() {
        let r = compose_cnot(&params(4), 2, Some(0.8)).unwrap();
        assert!(r.unitarity < 1e-10);
        assert!(r.fidelity >= 0.0 && r.fidelity <= 1.0 + 1e-12);
        assert!(r.leakage >= -1e-12 && r.leakage <= 1.0 + 1e-12);
        assert_eq!(r.schedule.len(), 9);
    }

    #[test]
    fn requires_calibration() {
        assert!(compose_cnot(&params(4), 2, None).is_err());
        assert!(compose_cnot(&params(4), 2, Some(0.0)).is_err());
        assert!(compose_cnot(&params(4), 3, Some(1.0)).is_err());
    }
}
