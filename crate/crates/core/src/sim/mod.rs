//! Noiseless statevector engine: unitary gates, mid-circuit
//! measurement/projection, exact time evolution, sampling, and expectation
//! values.

pub mod compiled;
pub mod evolve;
pub mod gate;
pub mod state;

pub use compiled::CompiledSum;
pub use evolve::{evolve, Evolver};
pub use gate::{apply_unitary, compile_gate, Circuit, Gate, RunRecord};
pub use state::{State, ZERO_BRANCH_TOL};

/// Dense-matrix paths (exact evolution, diagonalization oracles) refuse to
/// materialize anything past this register size.
pub const MAX_DENSE_QUBITS: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error("amplitude vector length {0} is not a power of two")]
    BadAmplitudeCount(usize),
    #[error("state register has {state} qubits but operator acts on {operator}")]
    RegisterMismatch { state: usize, operator: usize },
    #[error("qubit operand {index} out of range for {n_qubits} qubits")]
    OperandOutOfRange { index: usize, n_qubits: usize },
    #[error("gate operands must be distinct")]
    DuplicateOperand,
    #[error("both measurement outcomes have probability below 1e-14")]
    CorruptState,
    #[error("projection removed the entire state (zero branch)")]
    ZeroBranch,
    #[error("a Measure gate requires the sampling runner")]
    MeasureNeedsRng,
    #[error("{0} qubits exceeds the dense-path guard of {MAX_DENSE_QUBITS}")]
    TooLargeForDense(usize),
    #[error("operator is not Hermitian")]
    NotHermitian,
    #[error("gate kind {0} has no compilation template")]
    Uncompilable(&'static str),
}
