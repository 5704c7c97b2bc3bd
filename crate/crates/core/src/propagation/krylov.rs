use faer::linalg::matmul::matmul;
use faer::{Accum, Mat, Side};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use super::par;
use crate::hilbert::SparseOperator;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrylovParams {
    pub subspace_dim: usize,
    /// Longest step taken from a single Krylov basis.
    pub dt: f64,
    /// Bound on the local error estimate of every step.
    pub tolerance: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
}

fn default_max_steps() -> usize {
    1_000_000
}

impl Default for KrylovParams {
    fn default() -> Self {
        KrylovParams {
            subspace_dim: 30,
            dt: 0.05,
            tolerance: 1e-9,
            max_steps: default_max_steps(),
        }
    }
}

impl KrylovParams {
    pub fn validate(&self) -> Result<()> {
        if self.subspace_dim < 2 {
            return Err(Error::invalid("Krylov subspace_dim must be at least 2"));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::invalid("Krylov dt must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("Krylov tolerance must be positive"));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("Krylov max_steps must be positive"));
        }
        Ok(())
    }
}

fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn axpy(w: &mut [C64], c: C64, v: &[C64]) {
    for (wi, vi) in w.iter_mut().zip(v) {
        *wi -= c * vi;
    }
}

/// Lanczos basis of one step with the eigensystem of its tridiagonal matrix.
///
/// Three-term recurrence with local reorthogonalization; the matrix
/// exponential it approximates is insensitive to the slow loss of global
/// orthogonality.
struct Lanczos {
    /// Basis vectors as the first `size` columns.
    basis: Mat<C64>,
    size: usize,
    beta0: f64,
    /// Coupling to the first discarded vector; zero after breakdown.
    beta_last: f64,
    eig_vecs: Mat<f64>,
    eig_vals: Vec<f64>,
}

impl Lanczos {
    fn small_eig(alpha: &[f64], beta: &[f64]) -> (Mat<f64>, Vec<f64>) {
        let k = alpha.len();
        let t = Mat::<f64>::from_fn(k, k, |i, j| {
            if i == j {
                alpha[i]
            } else if i + 1 == j || j + 1 == i {
                beta[i.min(j)]
            } else {
                0.0
            }
        });
        let e = t
            .self_adjoint_eigen(Side::Lower)
            .expect("tridiagonal eigendecomposition");
        let vals = (0..k).map(|i| e.S()[i]).collect();
        (e.U().to_owned(), vals)
    }

    /// `exp(-i T tau) e_1` in the Lanczos basis.
    fn coeffs_from(q: &Mat<f64>, lam: &[f64], tau: f64) -> Vec<C64> {
        let k = lam.len();
        let w: Vec<C64> = (0..k)
            .map(|p| C64::from_polar(q[(0, p)], -lam[p] * tau))
            .collect();
        (0..k)
            .map(|i| (0..k).map(|p| w[p] * q[(i, p)]).sum())
            .collect()
    }

    fn error_estimate_from(q: &Mat<f64>, lam: &[f64], beta0: f64, beta_last: f64, tau: f64) -> f64 {
        if beta_last == 0.0 {
            return 0.0;
        }
        let c = Self::coeffs_from(q, lam, tau);
        beta0 * beta_last * c[c.len() - 1].norm()
    }

    fn build(h: &SparseOperator, psi: &[C64], m: usize, tau: f64, tol: f64, breakdown_tol: f64) -> Lanczos {
        let n = psi.len();
        let cap = m.min(n);
        let beta0 = norm(psi);
        let mut basis = Mat::<C64>::zeros(n, cap);
        for (b, p) in basis.col_as_slice_mut(0).iter_mut().zip(psi) {
            *b = p / beta0;
        }
        let mut alpha: Vec<f64> = Vec::with_capacity(cap);
        let mut beta: Vec<f64> = Vec::with_capacity(cap);
        let mut w = vec![C64::new(0.0, 0.0); n];
        loop {
            let k = alpha.len();
            h.matvec_into(basis.col_as_slice(k), &mut w);
            if k > 0 {
                axpy(&mut w, C64::new(beta[k - 1], 0.0), basis.col_as_slice(k - 1));
            }
            let a = dot(basis.col_as_slice(k), &w).re;
            axpy(&mut w, C64::new(a, 0.0), basis.col_as_slice(k));
            alpha.push(a);
            // one local reorthogonalization pass
            for j in k.saturating_sub(1)..=k {
                let c = dot(basis.col_as_slice(j), &w);
                axpy(&mut w, c, basis.col_as_slice(j));
            }
            let b = norm(&w);
            let size = alpha.len();
            if b < breakdown_tol {
                let (q, l) = Self::small_eig(&alpha, &beta);
                return Lanczos {
                    basis,
                    size,
                    beta0,
                    beta_last: 0.0,
                    eig_vecs: q,
                    eig_vals: l,
                };
            }
            let done = size >= cap;
            let check = !done && size >= 4 && size % 4 == 0;
            if done || check {
                let (q, l) = Self::small_eig(&alpha, &beta);
                if done || Self::error_estimate_from(&q, &l, beta0, b, tau) <= tol * 1e-2 {
                    return Lanczos {
                        basis,
                        size,
                        beta0,
                        beta_last: b,
                        eig_vecs: q,
                        eig_vals: l,
                    };
                }
            }
            beta.push(b);
            for (dst, x) in basis.col_as_slice_mut(size).iter_mut().zip(&w) {
                *dst = x / b;
            }
        }
    }

    fn error_estimate(&self, tau: f64) -> f64 {
        Self::error_estimate_from(&self.eig_vecs, &self.eig_vals, self.beta0, self.beta_last, tau)
    }

    /// Columns of `out` become the states at each of `taus`.
    fn states(&self, taus: &[f64], out: &mut Mat<C64>) {
        let k = self.size;
        let coeffs = Mat::<C64>::from_fn(k, taus.len(), |_, _| C64::new(0.0, 0.0));
        let mut coeffs = coeffs;
        for (p, &tau) in taus.iter().enumerate() {
            for (i, c) in Self::coeffs_from(&self.eig_vecs, &self.eig_vals, tau).into_iter().enumerate() {
                coeffs[(i, p)] = c * self.beta0;
            }
        }
        matmul(
            out.subcols_mut(0, taus.len()),
            Accum::Replace,
            self.basis.subcols(0, k),
            coeffs.as_ref(),
            C64::new(1.0, 0.0),
            par(),
        );
    }
}

/// Lanczos propagator for `e^{-iHt}` on a fixed Hamiltonian.
pub struct KrylovPropagator<'a> {
    h: &'a SparseOperator,
    params: KrylovParams,
    breakdown_tol: f64,
}

impl<'a> KrylovPropagator<'a> {
    pub fn new(h: &'a SparseOperator, params: KrylovParams) -> Result<Self> {
        params.validate()?;
        h.require_hermitian()?;
        Ok(KrylovPropagator {
            h,
            params,
            breakdown_tol: 1e-13 * (1.0 + h.max_row_sum()),
        })
    }

    /// Evolves `psi` through the ascending, non-negative `times` and calls
    /// `visit(k, psi(times[k]))` for each.
    pub fn evolve_grid(
        &self,
        psi: &[C64],
        times: &[f64],
        mut visit: impl FnMut(usize, &[C64]) -> Result<()>,
    ) -> Result<()> {
        self.run(&[psi], times, 1.0, &mut |k, vs| visit(k, vs[0]))
    }

    /// Evolves several states in lockstep so that all of them are available
    /// at each grid time.
    pub fn evolve_grid_many(
        &self,
        psis: &[&[C64]],
        times: &[f64],
        mut visit: impl FnMut(usize, &[&[C64]]) -> Result<()>,
    ) -> Result<()> {
        self.run(psis, times, 1.0, &mut visit)
    }

    fn run(
        &self,
        psis: &[&[C64]],
        times: &[f64],
        sign: f64,
        visit: &mut dyn FnMut(usize, &[&[C64]]) -> Result<()>,
    ) -> Result<()> {
        for psi in psis {
            if psi.len() != self.h.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.h.dim(),
                    found: psi.len(),
                });
            }
        }
        if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid("time grid must be ascending and non-negative"));
        }
        let kp = &self.params;
        let n = self.h.dim();
        let mut cur: Vec<Vec<C64>> = psis.iter().map(|p| p.to_vec()).collect();
        let mut t_cur = 0.0;
        let mut idx = 0;
        let mut steps = 0usize;
        let eps = 1e-13;
        let mut block: Vec<Mat<C64>> = Vec::new();
        while idx < times.len() {
            if times[idx] <= t_cur + eps {
                let views: Vec<&[C64]> = cur.iter().map(|v| v.as_slice()).collect();
                visit(idx, &views)?;
                idx += 1;
                continue;
            }
            steps += 1;
            if steps > kp.max_steps {
                return Err(Error::KrylovNonConvergence(format!(
                    "step budget {} exhausted at t = {t_cur}",
                    kp.max_steps
                )));
            }
            let t_end = times[times.len() - 1];
            let mut tau = kp.dt.min(t_end - t_cur);
            let mut bases = Vec::with_capacity(cur.len());
            for v in &cur {
                bases.push(if norm(v) == 0.0 {
                    None
                } else {
                    Some(Lanczos::build(
                        self.h,
                        v,
                        kp.subspace_dim,
                        sign * tau,
                        kp.tolerance,
                        self.breakdown_tol,
                    ))
                });
            }
            let mut halvings = 0;
            while bases
                .iter()
                .flatten()
                .any(|lz| lz.error_estimate(sign * tau) > kp.tolerance)
            {
                tau /= 2.0;
                halvings += 1;
                if halvings > 60 {
                    return Err(Error::KrylovNonConvergence(format!(
                        "error estimate above {} even for tiny steps at t = {t_cur}",
                        kp.tolerance
                    )));
                }
            }
            let t_next = t_cur + tau;
            let first = idx;
            while idx < times.len() && times[idx] <= t_next + eps {
                idx += 1;
            }
            // grid points inside the step, then the step end itself
            let mut taus: Vec<f64> = times[first..idx].iter().map(|t| sign * (t.min(t_next) - t_cur)).collect();
            taus.push(sign * tau);
            let width = taus.len();
            if block.len() != cur.len() || block[0].ncols() < width {
                block = (0..cur.len()).map(|_| Mat::<C64>::zeros(n, width)).collect();
            }
            for (lz, out) in bases.iter().zip(block.iter_mut()) {
                match lz {
                    Some(lz) => lz.states(&taus, out),
                    None => out.fill(C64::new(0.0, 0.0)),
                }
            }
            drop(bases);
            for (p, k) in (first..idx).enumerate() {
                let views: Vec<&[C64]> = block.iter().map(|b| b.col_as_slice(p)).collect();
                visit(k, &views)?;
            }
            for (c, b) in cur.iter_mut().zip(&block) {
                c.copy_from_slice(b.col_as_slice(width - 1));
            }
            t_cur = t_next;
        }
        Ok(())
    }
}

/// `e^{-iHt} psi` by adaptive Lanczos steps; `t` may be negative.
pub fn evolve_state(h: &SparseOperator, psi: &[C64], t: f64, kp: &KrylovParams) -> Result<Vec<C64>> {
    let prop = KrylovPropagator::new(h, *kp)?;
    let mut result = Vec::new();
    let sign = if t < 0.0 { -1.0 } else { 1.0 };
    prop.run(&[psi], &[t.abs()], sign, &mut |_, v| {
        result = v[0].to_vec();
        Ok(())
    })?;
    Ok(result)
}
