//! Time evolution: dense eigendecomposition for exact work on small spaces
//! and Lanczos stepping for large ones.

mod dense;
mod krylov;

pub use dense::{
    dense_eig, dense_eig_with_ceiling, eig_hermitian_dense, heisenberg_op, rotate_in_eigenbasis,
    EigenDecomposition, DENSE_CEILING,
};
pub(crate) use dense::par;
pub use krylov::{evolve_state, KrylovParams, KrylovPropagator};
