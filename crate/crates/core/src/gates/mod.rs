//! l-bit charges, their SU(2) structure and gate experiments on the
//! effective model.
//!
//! Conjugations follow the Heisenberg convention `R X R^dag` with
//! `R = e^{iHt}`, i.e. `X(t) = U^dag X U` for `U = e^{-iHt}`.

mod cnot;
mod recovery;

pub use cnot::{
    cnot_schedule, compose_cnot, execute_schedule, logical_basis, CnotReport, GateKind, GateSpec,
    LogicalBasis,
};
pub use recovery::{
    classify_error, run_error_recovery, ErrorClass, ErrorInjection, RecoveryReport,
};

use serde::{Deserialize, Serialize};

use crate::correlation::correlate_weights;
use crate::error::{Error, Result};
use crate::hamiltonians::{build_effective, spin_diagonal, ModelParams};
use crate::hilbert::{commutator, SpaceSpec, SparseOperator};
use crate::lbits::{lbit_charge, seed_frequency, seed_operator};
use crate::propagation::dense_eig;
use crate::{DenseMatrix, C64};

fn spin_half(spec: &SpaceSpec) -> Result<SpaceSpec> {
    if spec.spin_levels != 2 {
        return Err(Error::invalid("gates act on spin-1/2 chains"));
    }
    Ok(spec.spin_only())
}

/// `Q2(j) = [A2(j)^dag, A2(j)]`.
pub fn build_lbit_charge(j: usize, spec: &SpaceSpec) -> Result<SparseOperator> {
    lbit_charge(&seed_operator(2, j, spec)?)
}

/// `Σ^x_j = A2(j) + A2(j)^dag`.
pub fn sigma_x(j: usize, spec: &SpaceSpec) -> Result<SparseOperator> {
    let a = seed_operator(2, j, spec)?;
    a.checked_add(&a.adjoint())
}

/// `Σ^y_j = i(A2(j)^dag - A2(j))`.
pub fn sigma_y(j: usize, spec: &SpaceSpec) -> Result<SparseOperator> {
    let a = seed_operator(2, j, spec)?;
    Ok(a.adjoint().checked_sub(&a)?.scale(C64::new(0.0, 1.0)))
}

/// `e^{itG}` for Hermitian `G`.
pub fn exp_i_hermitian(g: &SparseOperator, t: f64) -> Result<DenseMatrix> {
    if g.is_diagonal() {
        let d = g.diagonal();
        g.require_hermitian()?;
        let n = g.dim();
        let mut u = DenseMatrix::zeros(n, n);
        for (k, e) in d.iter().enumerate() {
            u[(k, k)] = C64::from_polar(1.0, e.re * t);
        }
        return Ok(u);
    }
    let eig = dense_eig(g)?;
    Ok(eig.function(|e| C64::from_polar(1.0, e * t)))
}

/// `max |U^dag U - I|`.
pub fn unitarity_defect(u: &DenseMatrix) -> f64 {
    let n = u.nrows();
    let p = u.adjoint() * u;
    let mut m = 0.0f64;
    for c in 0..n {
        for r in 0..n {
            let id = if r == c { 1.0 } else { 0.0 };
            m = m.max((p[(r, c)] - C64::new(id, 0.0)).norm());
        }
    }
    m
}

/// `R X R^dag` for dense `R` and sparse `X`.
pub fn conjugate(r: &DenseMatrix, x: &SparseOperator) -> Result<DenseMatrix> {
    let xr = x.mul_dense(&r.adjoint().to_owned())?;
    Ok(r * xr)
}

fn max_entry_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    let mut m = 0.0f64;
    for c in 0..a.ncols() {
        for r in 0..a.nrows() {
            m = m.max((a[(r, c)] - b[(r, c)]).norm());
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Su2Report {
    /// `‖[Q2, A2] + 8 A2‖_F`
    pub residual_minus: f64,
    /// `‖[Q2, A2^dag] - 8 A2^dag‖_F`
    pub residual_plus: f64,
    /// Fitted `κ` in `[Q2, A2] = κ A2`.
    pub kappa: f64,
    /// `‖[Q2, A2] - κ A2‖_F`
    pub kappa_residual_minus: f64,
    /// `‖[Q2, A2^dag] + κ A2^dag‖_F`
    pub kappa_residual_plus: f64,
    /// `‖[Q2, A1] + 8 A1‖_F`
    pub a1_residual: f64,
}

/// Checks `[Q2, A2] = -8 A2`, `[Q2, A2^dag] = 8 A2^dag` and fits the actual
/// structure constant.
pub fn verify_su2(j: usize, spec: &SpaceSpec) -> Result<Su2Report> {
    let spec = spin_half(spec)?;
    let a = seed_operator(2, j, &spec)?;
    verify_su2_with(&a, &seed_operator(1, j, &spec)?)
}

fn verify_su2_with(a: &SparseOperator, a1: &SparseOperator) -> Result<Su2Report> {
    let ad = a.adjoint();
    let q = lbit_charge(a)?;
    let qa = commutator(&q, a)?;
    let qad = commutator(&q, &ad)?;
    let kappa_c = a.hs_inner(&qa)? / a.hs_inner(a)?;
    let kappa = kappa_c.re;
    Ok(Su2Report {
        residual_minus: qa.add_scaled(a, 8.0)?.frobenius_norm(),
        residual_plus: qad.add_scaled(&ad, -8.0)?.frobenius_norm(),
        kappa,
        kappa_residual_minus: qa.add_scaled(a, -kappa)?.frobenius_norm(),
        kappa_residual_plus: qad.add_scaled(&ad, kappa)?.frobenius_norm(),
        a1_residual: commutator(&q, a1)?.add_scaled(a1, 8.0)?.frobenius_norm(),
    })
}

#[derive(Debug, Clone)]
pub struct RotZReport {
    pub t: f64,
    pub site: usize,
    pub unitary: DenseMatrix,
    /// `max |R A_k R^dag - e^{iω_k t} A_k|` for `k = 1..4`.
    pub phase_deviation: [f64; 4],
    /// `max |R Q2 R^dag - Q2|`.
    pub charge_deviation: f64,
    pub unitarity: f64,
}

/// `R = e^{iH'_eff t}` on the phononless effective model.
pub fn gate_rot_z(params: &ModelParams, j: usize, t: f64) -> Result<RotZReport> {
    let spec = spin_half(&params.spec)?;
    let p = ModelParams { spec, ..*params };
    let h = build_effective(&p)?;
    let r = exp_i_hermitian(&h, t)?;
    let mut phase_deviation = [0.0; 4];
    for k in 1..=4 {
        let a = seed_operator(k, j, &spec)?;
        let w = seed_frequency(k, j, &p)?;
        let lhs = conjugate(&r, &a)?;
        let rhs = a.to_dense() * faer::Scale(C64::from_polar(1.0, w * t));
        phase_deviation[k - 1] = max_entry_diff(&lhs, &rhs);
    }
    let q = build_lbit_charge(j, &spec)?;
    let charge_deviation = max_entry_diff(&conjugate(&r, &q)?, &q.to_dense());
    let unitarity = unitarity_defect(&r);
    Ok(RotZReport {
        t,
        site: j,
        unitary: r,
        phase_deviation,
        charge_deviation,
        unitarity,
    })
}

#[derive(Debug, Clone)]
pub struct IsingReport {
    pub t: f64,
    pub sites: (usize, usize),
    /// `G = Q2(j) Q2(j+1)`
    pub generator: SparseOperator,
    /// `‖[H'_eff, G]‖_F`
    pub commutator_residual: f64,
    /// `‖[Q2(j), Q2(j+1)]‖_F`; the product order is `Q2(j) Q2(j+1)`.
    pub charge_commutator: f64,
    /// `‖G - G^dag‖_F`
    pub generator_hermiticity: f64,
    /// `e^{itG/2}`
    pub unitary: DenseMatrix,
    pub unitarity: f64,
}

pub fn gate_ising(params: &ModelParams, j: usize, t: f64) -> Result<IsingReport> {
    let spec = spin_half(&params.spec)?;
    spec.check_interior(j)?;
    spec.check_interior(j + 1)?;
    let p = ModelParams { spec, ..*params };
    let q1 = build_lbit_charge(j, &spec)?;
    let q2 = build_lbit_charge(j + 1, &spec)?;
    let g = q1.checked_mul(&q2)?;
    let h = build_effective(&p)?;
    let generator_hermiticity = g.hermitian_residual();
    let unitary = exp_i_hermitian(&g, t / 2.0)?;
    Ok(IsingReport {
        t,
        sites: (j, j + 1),
        commutator_residual: commutator(&h, &g)?.frobenius_norm(),
        charge_commutator: commutator(&q1, &q2)?.frobenius_norm(),
        generator_hermiticity,
        unitarity: unitarity_defect(&unitary),
        unitary,
        generator: g,
    })
}

/// `H_eff(W = 0) = Σ_j J S^z_j S^z_{j+1} + Σ_{interior j} Σ^x_j`.
pub fn x_gate_hamiltonian(params: &ModelParams) -> Result<SparseOperator> {
    let spec = spin_half(&params.spec)?;
    let jc = params.j;
    let mut h = spin_diagonal(&spec, |m| m.windows(2).map(|w| jc * w[0] * w[1]).sum());
    for j in 2..spec.n_sites {
        h = h.checked_add(&sigma_x(j, &spec)?)?;
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RotXReport {
    pub site: usize,
    pub times: Vec<f64>,
    /// `Re ⟨Σ^y, R Q2 R^dag⟩ / (‖Σ^y‖ ‖Q2‖)`
    pub sigma_y_overlap: Vec<f64>,
    /// `Re ⟨Q2, R Q2 R^dag⟩ / ‖Q2‖²`
    pub charge_overlap: Vec<f64>,
    /// `|sigma_y_overlap|`
    pub quality: Vec<f64>,
    /// Time of the largest `quality`.
    pub calibrated_duration: f64,
    pub peak_quality: f64,
    /// Unitarity defect of `e^{iH t}` at the calibrated time.
    pub unitarity: f64,
}

/// Rotation of `Q2(j)` under `H_eff(W = 0)` over a time grid.
pub fn gate_rot_x(params: &ModelParams, j: usize, times: &[f64]) -> Result<RotXReport> {
    if times.is_empty() {
        return Err(Error::invalid("empty time grid"));
    }
    let spec = spin_half(&params.spec)?;
    let h = x_gate_hamiltonian(params)?;
    let eig = dense_eig(&h)?;
    let q = build_lbit_charge(j, &spec)?;
    let y = sigma_y(j, &spec)?;
    let overlap = |a: &SparseOperator| -> Result<Vec<C64>> {
        let at = eig.to_eigenbasis(a)?;
        let mut c = eig.to_eigenbasis(&q)?;
        let n = c.nrows();
        for col in 0..n {
            for row in 0..n {
                c[(row, col)] *= at[(row, col)].conj();
            }
        }
        Ok(correlate_weights(&c, &eig.energies, times))
    };
    let nq = q.hs_inner(&q)?.re.sqrt();
    let ny = y.hs_inner(&y)?.re.sqrt();
    let sigma_y_overlap: Vec<f64> = overlap(&y)?.iter().map(|z| z.re / (nq * ny)).collect();
    let charge_overlap: Vec<f64> = overlap(&q)?.iter().map(|z| z.re / (nq * nq)).collect();
    let quality: Vec<f64> = sigma_y_overlap.iter().map(|x| x.abs()).collect();
    let mut best = 0;
    for (k, v) in quality.iter().enumerate() {
        if *v > quality[best] {
            best = k;
        }
    }
    let u = eig.function(|e| C64::from_polar(1.0, e * times[best]));
    Ok(RotXReport {
        site: j,
        times: times.to_vec(),
        sigma_y_overlap,
        charge_overlap,
        calibrated_duration: times[best],
        peak_quality: quality[best],
        quality,
        unitarity: unitarity_defect(&u),
    })
}
