use serde::{Deserialize, Serialize};

use super::spin_half;
use crate::error::{Error, Result};
use crate::hamiltonians::{build_effective, spin_diagonal, ModelParams};
use crate::hilbert::{commutator, SparseOperator};
use crate::lbits::{seed_frequency, seed_operator};
use crate::propagation::{dense_eig, EigenDecomposition};
use crate::{DenseMatrix, C64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorClass {
    /// `[M, E] ≠ 0`
    Generic,
    /// `[M, E] = 0`
    Resonant,
}

/// Coherent error `ε E` switched on during `[t0, t1]`.
#[derive(Debug, Clone)]
pub struct ErrorInjection {
    pub error_op: SparseOperator,
    pub amplitude: f64,
    pub window: (f64, f64),
}

/// Classifies `E` by `‖[M, E]‖_F` with the tilt shape `M = Σ_j j S^z_j`.
/// Returns the class and the commutator norm.
pub fn classify_error(e: &SparseOperator, params: &ModelParams) -> Result<(ErrorClass, f64)> {
    let spec = spin_half(&params.spec)?;
    let m = spin_diagonal(&spec, |m| m.iter().enumerate().map(|(k, x)| (k + 1) as f64 * x).sum());
    let norm = commutator(&m, e)?.frobenius_norm();
    let class = if norm < 1e-12 * e.frobenius_norm().max(1.0) {
        ErrorClass::Resonant
    } else {
        ErrorClass::Generic
    };
    Ok((class, norm))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub site: usize,
    pub times: Vec<f64>,
    /// `|c(t)|` with `c(t) = ⟨e^{iωt} A2, A2(t)⟩ / ⟨A2, A2⟩`.
    pub abs_c: Vec<f64>,
    pub re_c: Vec<f64>,
    pub class: ErrorClass,
    pub commutator_norm: f64,
    /// Smallest `|c|` inside the window.
    pub window_min: f64,
    /// Mean `|c|` after the window.
    pub plateau: f64,
    /// `(1 - plateau) / (t1 - t0)`.
    pub degradation: f64,
}

fn propagator(eig: &EigenDecomposition, dt: f64) -> DenseMatrix {
    eig.function(|e| C64::from_polar(1.0, -e * dt))
}

/// Heisenberg evolution of `A2(j)` under `H'_eff + ε E 1_[t0,t1](t)`.
pub fn run_error_recovery(
    params: &ModelParams,
    inj: &ErrorInjection,
    j: usize,
    times: &[f64],
) -> Result<RecoveryReport> {
    let spec = spin_half(&params.spec)?;
    let p = ModelParams { spec, ..*params };
    let (t0, t1) = inj.window;
    if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("time grid must be strictly increasing"));
    }
    if !(t1 > t0) || t0 < times[0] || t1 >= *times.last().unwrap() {
        return Err(Error::invalid("error window must lie inside the time grid"));
    }
    if inj.error_op.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: inj.error_op.dim(),
        });
    }
    let (class, commutator_norm) = classify_error(&inj.error_op, &p)?;
    let h0 = build_effective(&p)?;
    let h1 = h0.add_scaled(&inj.error_op, inj.amplitude)?;
    let eig0 = dense_eig(&h0)?;
    let eig1 = dense_eig(&h1)?;
    let a = seed_operator(2, j, &spec)?;
    let omega = seed_frequency(2, j, &p)?;
    let norm = a.hs_inner(&a)?.re;

    let n = spec.dim();
    let mut u = DenseMatrix::identity(n, n);
    let mut now = 0.0;
    let advance = |u: &mut DenseMatrix, from: f64, to: f64| {
        let mut cuts = vec![from];
        for b in [t0, t1] {
            if b > from && b < to {
                cuts.push(b);
            }
        }
        cuts.push(to);
        for w in cuts.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let eig = if mid > t0 && mid < t1 { &eig1 } else { &eig0 };
            *u = propagator(eig, w[1] - w[0]) * &*u;
        }
    };
    let mut abs_c = Vec::with_capacity(times.len());
    let mut re_c = Vec::with_capacity(times.len());
    for &t in times {
        advance(&mut u, now, t);
        now = t;
        // ⟨A, U^dag A U⟩
        let au = a.mul_dense(&u)?;
        let y = u.adjoint() * au;
        let mut s = C64::new(0.0, 0.0);
        for (r, c, v) in a.triplets() {
            s += v.conj() * y[(r, c)];
        }
        let c = C64::from_polar(1.0, -omega * t) * s / (n as f64 * norm);
        abs_c.push(c.norm());
        re_c.push(c.re);
    }
    let window_min = times
        .iter()
        .zip(&abs_c)
        .filter(|(t, _)| **t >= t0 && **t <= t1)
        .map(|(_, c)| *c)
        .fold(f64::INFINITY, f64::min);
    let after: Vec<f64> = times.iter().zip(&abs_c).filter(|(t, _)| **t > t1).map(|(_, c)| *c).collect();
    let plateau = after.iter().sum::<f64>() / after.len() as f64;
    Ok(RecoveryReport {
        site: j,
        times: times.to_vec(),
        abs_c,
        re_c,
        class,
        commutator_norm,
        window_min,
        plateau,
        degradation: (1.0 - plateau) / (t1 - t0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{spin_op, SpaceSpec, SpinKind};

    fn params(w: f64) -> ModelParams {
        ModelParams::new(SpaceSpec::new(5, 2, 0).unwrap()).with_tilt(w)
    }

    fn grid() -> Vec<f64> {
        (0..=200).map(|k| k as f64 * 0.05).collect()
    }

    fn total_sz(p: &ModelParams) -> SparseOperator {
        let mut e = SparseOperator::zeros(p.spec.dim());
        for j in 1..=p.spec.n_sites {
            e = e.checked_add(&spin_op(&p.spec, j, SpinKind::Sz).unwrap()).unwrap();
        }
        e
    }

    #[test]
    fn no_error_keeps_overlap() {
        let p = params(10.0);
        let inj = ErrorInjection {
            error_op: spin_op(&p.spec, 3, SpinKind::Sx).unwrap(),
            amplitude: 0.0,
            window: (5.0, 6.0),
        };
        let r = run_error_recovery(&p, &inj, 3, &grid()).unwrap();
        for c in &r.abs_c {
            assert!((c - 1.0).abs() < 1e-10);
        }
        for x in &r.re_c {
            assert!((x - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn classification_both_branches() {
        let p = params(10.0);
        let (c, n) = classify_error(&total_sz(&p), &p).unwrap();
        assert_eq!(c, ErrorClass::Resonant);
        assert_eq!(n, 0.0);
        let zz = spin_op(&p.spec, 1, SpinKind::Sz).unwrap().checked_mul(&spin_op(&p.spec, 4, SpinKind::Sz).unwrap()).unwrap();
        assert_eq!(classify_error(&zz, &p).unwrap().0, ErrorClass::Resonant);
        for e in [
            spin_op(&p.spec, 3, SpinKind::Sx).unwrap(),
            spin_op(&p.spec, 2, SpinKind::Sp).unwrap(),
            spin_op(&p.spec, 1, SpinKind::Sp).unwrap().checked_mul(&spin_op(&p.spec, 2, SpinKind::Sm).unwrap()).unwrap(),
        ] {
            let (c, n) = classify_error(&e, &p).unwrap();
            assert_eq!(c, ErrorClass::Generic);
            assert!(n > 0.1);
        }
    }

    #[test]
    fn resonant_error_is_a_phase() {
        let p = params(10.0);
        let inj = ErrorInjection {
            error_op: total_sz(&p),
            amplitude: 0.2,
            window: (5.0, 6.0),
        };
        let r = run_error_recovery(&p, &inj, 3, &grid()).unwrap();
        for c in &r.abs_c {
            assert!((c - 1.0).abs() < 1e-10);
        }
        // the phase e^{iε(t1 - t0)} survives the window
        let last = *r.re_c.last().unwrap();
        assert!((last - (0.2f64).cos()).abs() < 1e-9);
        assert!(r.plateau >= r.window_min - 1e-12);
    }

    #[test]
    fn generic_error_protection_grows_with_tilt() {
        let deg: Vec<f64> = [5.0, 10.0, 20.0]
            .iter()
            .map(|&w| {
                let p = params(w);
                let inj = ErrorInjection {
                    error_op: spin_op(&p.spec, 3, SpinKind::Sx).unwrap(),
                    amplitude: 0.2,
                    window: (5.0, 6.0),
                };
                run_error_recovery(&p, &inj, 3, &grid()).unwrap().degradation
            })
            .collect();
        assert!(deg[0] > deg[1] && deg[1] > deg[2], "{deg:?}");
    }

    #[test]
    fn rejects_window_outside_grid() {
        let p = params(10.0);
        let inj = ErrorInjection {
            error_op: total_sz(&p),
            amplitude: 0.1,
            window: (5.0, 20.0),
        };
        assert!(run_error_recovery(&p, &inj, 3, &grid()).is_err());
    }
}
