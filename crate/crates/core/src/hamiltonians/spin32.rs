use super::{spin_diagonal, ModelParams};
use crate::error::{Error, Result};
use crate::hilbert::{SpaceSpec, SparseOperator};

/// Local spin-3/2 levels (in the descending `S^z` basis) that make up the
/// pseudo-spin: `|3/2⟩ -> σ = +1` and `|-1/2⟩ -> σ = -1`.
pub const SPIN32_SECTOR: [usize; 2] = [0, 2];

/// Pseudo-spin-1/2 Hamiltonian of the `(|3/2⟩, |-1/2⟩)` sector.
///
/// `hamiltonian + constant · I` equals `H'_eff` restricted to the sector.
#[derive(Debug, Clone)]
pub struct Spin32Sector {
    /// Acts on `2^N` states; `σ^z` has eigenvalues `±1`.
    pub hamiltonian: SparseOperator,
    pub constant: f64,
    /// Coefficient of `σ^z_j`, index `j - 1`.
    pub field: Vec<f64>,
    pub pseudo_spec: SpaceSpec,
}

/// Substitutes `S^z = σ^z + 1/2` into `H'_eff` for a spin-3/2 chain.
///
/// On an open chain the linear term picks up `J/2` per bond touching the
/// site: `Σ_bonds J σσ' - g Σ σ² + Σ_j (Wj - g + J·b_j/2) σ_j`, with
/// constant `(N-1)J/4 + Σ_j (jW/2 - g/4)`.
pub fn build_spin32_sector(params: &ModelParams) -> Result<Spin32Sector> {
    params.validate()?;
    if params.spec.spin_levels != 4 {
        return Err(Error::invalid(format!(
            "spin-3/2 sector needs spin_levels = 4, got {}",
            params.spec.spin_levels
        )));
    }
    let n = params.spec.n_sites;
    let (j, w, g) = (params.j, params.w, params.polaron_shift());
    let field: Vec<f64> = (1..=n)
        .map(|site| {
            let bonds = (site > 1) as usize + (site < n) as usize;
            w * site as f64 - g + j * bonds as f64 / 2.0
        })
        .collect();
    let constant = (n as f64 - 1.0) * j / 4.0
        + (1..=n).map(|site| site as f64 * w / 2.0 - g / 4.0).sum::<f64>();

    let pseudo_spec = SpaceSpec::new(n, 2, 0)?;
    let hamiltonian = spin_diagonal(&pseudo_spec, |m| {
        // m = ±1/2 on the pseudo-spin chain, σ = 2m.
        let sigma: Vec<f64> = m.iter().map(|x| 2.0 * x).collect();
        let zz: f64 = sigma.windows(2).map(|p| j * p[0] * p[1]).sum();
        let lin: f64 = sigma.iter().zip(&field).map(|(s, h)| h * s).sum();
        let aniso: f64 = sigma.iter().map(|s| -g * s * s).sum();
        zz + lin + aniso
    });
    Ok(Spin32Sector {
        hamiltonian,
        constant,
        field,
        pseudo_spec,
    })
}

/// Restricts an operator on a phononless spin-3/2 chain to the pseudo-spin
/// sector.
pub fn restrict_to_spin32_sector(op: &SparseOperator, spec: &SpaceSpec) -> Result<SparseOperator> {
    if spec.spin_levels != 4 || spec.has_phonons() {
        return Err(Error::invalid("expected a phononless spin-3/2 layout"));
    }
    if op.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: op.dim(),
        });
    }
    let n = spec.n_sites;
    let map = |p: usize| -> usize {
        let mut idx = 0;
        for k in 0..n {
            let bit = (p >> (n - 1 - k)) & 1;
            idx = idx * 4 + SPIN32_SECTOR[bit];
        }
        idx
    };
    let full: Vec<usize> = (0..1usize << n).map(map).collect();
    let mut trip = Vec::new();
    for (r, &fr) in full.iter().enumerate() {
        for (c, &fc) in full.iter().enumerate() {
            let v = op.get(fr, fc);
            if v.norm() > 0.0 {
                trip.push((r, c, v));
            }
        }
    }
    Ok(SparseOperator::from_triplets(1 << n, trip))
}
