//! Operator algebra on the chain Hilbert space.
//!
//! The full space is `spin_1 ⊗ … ⊗ spin_N ⊗ boson_1 ⊗ … ⊗ boson_N`, with the
//! whole spin block more significant than the boson block. Spin factors use
//! the `S^z` eigenbasis ordered from `m = +S` down to `m = -S`; boson factors
//! use the Fock basis `|0⟩ … |N_B - 1⟩`.

mod local;
mod space;
mod sparse;

pub use local::{boson_matrix, spin_matrix, BosonKind, SpinKind};
pub use space::{Factor, SpaceSpec};
pub use sparse::{Hermiticity, SparseOperator, HERMITIAN_TOL, PRUNE_TOL};

use crate::error::{Error, Result};
use crate::{DenseMatrix, C64};

/// Lifts a single-site matrix to the full space: `I ⊗ … ⊗ op ⊗ … ⊗ I`.
///
/// `site` is 1-based.
pub fn embed(
    site: usize,
    local_op: &DenseMatrix,
    factor: Factor,
    spec: &SpaceSpec,
) -> Result<SparseOperator> {
    spec.check_site(site)?;
    let local_dim = match factor {
        Factor::Spin => spec.spin_levels,
        Factor::Boson => {
            if spec.boson_levels == 0 {
                return Err(Error::invalid("space has no boson factor"));
            }
            spec.boson_levels
        }
    };
    if local_op.nrows() != local_dim || local_op.ncols() != local_dim {
        return Err(Error::DimensionMismatch {
            expected: local_dim,
            found: local_op.nrows().max(local_op.ncols()),
        });
    }
    let (left, right) = spec.strides(site, factor);

    let mut local = Vec::new();
    for a in 0..local_dim {
        for b in 0..local_dim {
            let v = local_op[(a, b)];
            if v.norm() > PRUNE_TOL {
                local.push((a, b, v));
            }
        }
    }

    let dim = spec.dim();
    let mut triplets = Vec::with_capacity(left * right * local.len());
    for l in 0..left {
        for &(a, b, v) in &local {
            let row0 = (l * local_dim + a) * right;
            let col0 = (l * local_dim + b) * right;
            for r in 0..right {
                triplets.push((row0 + r, col0 + r, v));
            }
        }
    }
    Ok(SparseOperator::from_triplets(dim, triplets))
}

/// Spin operator of the given kind on `site`, identity elsewhere.
pub fn spin_op(spec: &SpaceSpec, site: usize, kind: SpinKind) -> Result<SparseOperator> {
    embed(site, &spin_matrix(kind, spec.spin_levels)?, Factor::Spin, spec)
}

/// Boson operator of the given kind on `site`, identity elsewhere.
pub fn boson_op(spec: &SpaceSpec, site: usize, kind: BosonKind) -> Result<SparseOperator> {
    embed(site, &boson_matrix(kind, spec.boson_levels)?, Factor::Boson, spec)
}

/// Normalized Hilbert-Schmidt product `Tr(A^dag B) / dim`.
pub fn hs_inner(a: &SparseOperator, b: &SparseOperator) -> Result<C64> {
    a.hs_inner(b)
}

/// `Tr(A^dag B) / dim` for dense operators.
pub fn hs_inner_dense(a: &DenseMatrix, b: &DenseMatrix) -> Result<C64> {
    if a.nrows() != b.nrows() || a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            found: b.nrows(),
        });
    }
    let mut acc = C64::new(0.0, 0.0);
    for j in 0..a.ncols() {
        for (x, y) in a.col_as_slice(j).iter().zip(b.col_as_slice(j)) {
            acc += x.conj() * y;
        }
    }
    Ok(acc / a.nrows() as f64)
}

/// Commutator `[A, B]`.
pub fn commutator(a: &SparseOperator, b: &SparseOperator) -> Result<SparseOperator> {
    Ok(a.checked_mul(b)?.checked_sub(&b.checked_mul(a)?)?)
}

/// Dense Kronecker product, used by the brute-force oracles in the tests.
pub fn kron(a: &DenseMatrix, b: &DenseMatrix) -> DenseMatrix {
    let (ar, ac) = (a.nrows(), a.ncols());
    let (br, bc) = (b.nrows(), b.ncols());
    DenseMatrix::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}
