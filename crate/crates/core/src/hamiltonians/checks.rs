use faer::Side;
use serde::{Deserialize, Serialize};

use super::{
    build_hopping_k, build_phonon_energy, build_tilt, build_zz, par_site_term, perp_site_term,
    spin_diagonal, ModelParams,
};
use crate::error::{Error, Result};
use crate::hilbert::{boson_matrix, commutator, embed, BosonKind, Factor, SparseOperator};
use crate::{DenseMatrix, C64};

/// Named Frobenius residuals of a family of operator identities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub entries: Vec<(String, f64)>,
}

impl ResidualReport {
    pub fn max(&self) -> f64 {
        self.entries.iter().map(|(_, r)| *r).fold(0.0, f64::max)
    }

    pub fn all_below(&self, tol: f64) -> bool {
        self.entries.iter().all(|(_, r)| *r < tol)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.iter().find(|(n, _)| n == name).map(|(_, r)| *r)
    }
}

/// `‖[M, X] - c X‖_F`.
fn ladder_residual(m: &SparseOperator, x: &SparseOperator, c: f64) -> Result<f64> {
    Ok(commutator(m, x)?.add_scaled(x, -c)?.frobenius_norm())
}

/// Checks how the tilt `M` acts on every other piece of the Hamiltonian:
/// `[M,K] = -WK`, `[M,K+] = WK+`, `[M,H_ZZ] = 0` and, with phonons,
/// `[M,h⊥_j] = jW h⊥_j`, `[M,h⊥_j+] = -jW h⊥_j+`, `[M,h∥_j] = 0`.
pub fn verify_tilt_commutators(params: &ModelParams) -> Result<ResidualReport> {
    let w = params.w;
    let m = build_tilt(params)?;
    let k = build_hopping_k(params)?;
    let kd = k.adjoint();
    let zz = build_zz(params)?;
    let mut entries = vec![
        ("[M,K]+WK".to_string(), ladder_residual(&m, &k, -w)?),
        ("[M,K^dag]-WK^dag".to_string(), ladder_residual(&m, &kd, w)?),
        ("[M,H_ZZ]".to_string(), ladder_residual(&m, &zz, 0.0)?),
    ];
    if params.spec.boson_levels >= 2 {
        for j in 1..=params.spec.n_sites {
            let jw = j as f64 * w;
            let perp = perp_site_term(params, j)?;
            let par = par_site_term(params, j)?;
            entries.push((format!("[M,h_perp_{j}]-jW h_perp_{j}"), ladder_residual(&m, &perp, jw)?));
            entries.push((
                format!("[M,h_perp_{j}^dag]+jW h_perp_{j}^dag"),
                ladder_residual(&m, &perp.adjoint(), -jw)?,
            ));
            entries.push((format!("[M,h_par_{j}]"), ladder_residual(&m, &par, 0.0)?));
        }
    }
    Ok(ResidualReport { entries })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolaronReport {
    pub g: f64,
    /// Frobenius residual restricted to states with every `n_j <= fock_cutoff`.
    pub residual_low_fock: f64,
    pub fock_cutoff: usize,
    /// Residual over the whole truncated space (dominated by the top level).
    pub residual_full: f64,
    /// Lowest eigenvalue of `ω0 Σ n_j + Σ_j h∥_j`.
    pub ground_energy: f64,
    /// `-g Σ_j S²`, the displaced-oscillator value.
    pub expected_ground_energy: f64,
}

fn dense_exp_antihermitian(g: &DenseMatrix) -> DenseMatrix {
    // exp(G) with G anti-Hermitian: iG = V diag(e) V^dag, exp(G) = V e^{-i e} V^dag.
    let i = C64::new(0.0, 1.0);
    let h = g * faer::Scale(i);
    let eig = h
        .self_adjoint_eigen(Side::Lower)
        .expect("small Hermitian eigendecomposition");
    let v = eig.U();
    let e = eig.S();
    let n = g.nrows();
    let mut vd = v.to_owned();
    for k in 0..n {
        let phase = C64::from_polar(1.0, -e[k].re);
        for r in 0..n {
            vd[(r, k)] *= phase;
        }
    }
    vd * v.adjoint()
}

/// Displacement unitary `P = exp[Σ_j (λ∥/ω0)(a+_j - a_j) S^z_j]` on the
/// truncated space.
pub fn polaron_unitary(params: &ModelParams) -> Result<SparseOperator> {
    params.validate()?;
    let spec = &params.spec;
    if spec.boson_levels < 2 {
        return Err(Error::invalid("polaron transformation needs boson_levels >= 2"));
    }
    let d = spec.spin_levels;
    let s = (d as f64 - 1.0) / 2.0;
    let a = boson_matrix(BosonKind::A, spec.boson_levels)?;
    let adag = boson_matrix(BosonKind::Adag, spec.boson_levels)?;
    let gen = &adag - &a;
    let mut p = SparseOperator::identity(spec.dim());
    for site in 1..=spec.n_sites {
        let mut pj = SparseOperator::zeros(spec.dim());
        for level in 0..d {
            let m = s - level as f64;
            let beta = params.lambda_par * m / params.omega0;
            let disp = dense_exp_antihermitian(&(&gen * faer::Scale(C64::new(beta, 0.0))));
            let mut proj = DenseMatrix::zeros(d, d);
            proj[(level, level)] = C64::new(1.0, 0.0);
            let term = embed(site, &proj, Factor::Spin, spec)?
                .checked_mul(&embed(site, &disp, Factor::Boson, spec)?)?;
            pj = pj.checked_add(&term)?;
        }
        p = p.checked_mul(&pj)?;
    }
    Ok(p)
}

/// Applies the polaron transformation to `Σ_j h∥_j + ω0 Σ n_j` and compares
/// with `-g Σ_j (S^z_j)² + ω0 Σ n_j`.
pub fn verify_polaron_decoupling(params: &ModelParams) -> Result<PolaronReport> {
    let spec = params.spec;
    if spec.boson_levels < 2 {
        return Err(Error::invalid("polaron check needs boson_levels >= 2"));
    }
    let g = params.polaron_shift();
    let phonon = build_phonon_energy(params)?;
    let mut h = phonon.clone();
    for j in 1..=spec.n_sites {
        h = h.checked_add(&par_site_term(params, j)?)?;
    }
    let p = polaron_unitary(params)?;
    let transformed = p.checked_mul(&h)?.checked_mul(&p.adjoint())?;
    let target = spin_diagonal(&spec, |m| -g * m.iter().map(|x| x * x).sum::<f64>())
        .checked_add(&phonon)?;
    let resid = transformed.checked_sub(&target)?;

    let cutoff = (spec.boson_levels - 1) / 2;
    let low: Vec<bool> = (0..spec.dim())
        .map(|idx| {
            let (_, bosons) = spec.decompose(idx).expect("index in range");
            bosons.iter().all(|&n| n <= cutoff)
        })
        .collect();
    let residual_low_fock = resid
        .triplets()
        .filter(|&(i, j, _)| low[i] && low[j])
        .map(|(_, _, v)| v.norm_sqr())
        .sum::<f64>()
        .sqrt();

    let s = (spec.spin_levels as f64 - 1.0) / 2.0;
    let ground_energy = crate::propagation::dense_eig(&h)?.energies[0];
    Ok(PolaronReport {
        g,
        residual_low_fock,
        fock_cutoff: cutoff,
        residual_full: resid.frobenius_norm(),
        ground_energy,
        expected_ground_energy: -g * s * s * spec.n_sites as f64,
    })
}
