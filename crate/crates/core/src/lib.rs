//! Statevector emulation toolkit for the Anderson impurity model.
//!
//! The crate covers the full pipeline: exact diagonalization within
//! charge/spin sectors, symmetry-preserving variational ground-state
//! preparation, symmetry-compatible measurement planning, Lanczos and
//! continued-fraction impurity Green's functions, and time-domain m-point
//! correlators built from mid-circuit projections and Hadamard tests.

pub mod ansatz;
pub mod correlator;
pub mod greens;
pub mod measure;
pub mod model;
pub mod sim;
pub mod vqe;

pub use model::pauli::{PauliOp, PauliSum, PauliTerm};
pub use model::{AimParams, Sector};
pub use sim::{Circuit, Gate, State};
