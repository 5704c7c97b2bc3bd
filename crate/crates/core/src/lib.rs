//! Tilted (Stark) spin chains coupled to local Holstein phonons.
//!
//! The crate is organised bottom-up:
//!
//! * [`hilbert`]: single-site spin and boson matrices, the product space
//!   layout and the sparse operator type everything else is built from.
//! * [`hamiltonians`]: the spin chain, the spin-phonon coupling, the tilt,
//!   the effective Ising model and the identities relating them.
//! * [`propagation`]: dense eigendecomposition and Lanczos time stepping.
//! * [`correlation`]: infinite-temperature fluctuation functions (exact and
//!   by dynamical typicality) and their spectra.
//! * [`lbits`]: analytic dynamical l-bit seeds, the spectral filter that
//!   dresses them with the full Hamiltonian, and locality profiles.
//! * [`gates`]: l-bit charges, the SU(2) structure and the gate experiments.
//!
//! Units: hbar = 1, energies in units of the exchange `J`, times in `1/J`.

pub mod correlation;
pub mod error;
pub mod gates;
pub mod hamiltonians;
pub mod hilbert;
pub mod lbits;
pub mod propagation;

pub use error::{Error, Result};
pub use hilbert::{Factor, Hermiticity, SpaceSpec, SparseOperator};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix.
pub type DenseMatrix = faer::Mat<C64>;
