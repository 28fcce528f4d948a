//! Exact time evolution via cached dense eigendecomposition.

use super::state::State;
use super::{SimError, MAX_DENSE_QUBITS};
use crate::model::pauli::PauliSum;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

/// Cached Hermitian eigendecomposition of an operator, reused across time
/// arguments. Desk-scale only (dense).
pub struct Evolver {
    n_qubits: usize,
    eigenvalues: Vec<f64>,
    /// Columns are eigenvectors.
    vectors: DMatrix<Complex64>,
}

impl Evolver {
    pub fn new(h: &PauliSum) -> Result<Self, SimError> {
        if h.n_qubits() > MAX_DENSE_QUBITS {
            return Err(SimError::TooLargeForDense(h.n_qubits()));
        }
        if !h.is_hermitian() {
            return Err(SimError::NotHermitian);
        }
        let dense = h.to_dense();
        let eig = dense.symmetric_eigen();
        let eigenvalues = eig.eigenvalues.iter().copied().collect();
        Ok(Evolver {
            n_qubits: h.n_qubits(),
            eigenvalues,
            vectors: eig.eigenvectors,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// `exp(-iHt)|psi>`.
    pub fn evolve(&self, state: &State, t: f64) -> Result<State, SimError> {
        if state.n_qubits() != self.n_qubits {
            return Err(SimError::RegisterMismatch {
                state: state.n_qubits(),
                operator: self.n_qubits,
            });
        }
        let v = DVector::from_column_slice(state.amplitudes());
        let out = self.evolve_vector(&v, t);
        State::from_amplitudes(out.as_slice().to_vec())
    }

    fn evolve_vector(&self, v: &DVector<Complex64>, t: f64) -> DVector<Complex64> {
        let mut coeffs = self.vectors.adjoint() * v;
        for (c, &e) in coeffs.iter_mut().zip(self.eigenvalues.iter()) {
            *c *= Complex64::from_polar(1.0, -e * t);
        }
        &self.vectors * coeffs
    }

    /// Evolve only the low `self.n_qubits` subsystem of a larger register.
    /// The big state is a stack of contiguous system blocks, one per ancilla
    /// configuration.
    pub fn evolve_subsystem(&self, state: &State, t: f64) -> Result<State, SimError> {
        if state.n_qubits() < self.n_qubits {
            return Err(SimError::RegisterMismatch {
                state: state.n_qubits(),
                operator: self.n_qubits,
            });
        }
        let block = 1usize << self.n_qubits;
        let mut amps = state.amplitudes().to_vec();
        for chunk in amps.chunks_mut(block) {
            let v = DVector::from_column_slice(chunk);
            let out = self.evolve_vector(&v, t);
            chunk.copy_from_slice(out.as_slice());
        }
        State::from_amplitudes(amps)
    }
}

/// One-shot `exp(-iHt)|psi>`. Builds the eigendecomposition each call; use
/// [`Evolver`] for loops over many times.
pub fn evolve(state: &State, h: &PauliSum, t: f64) -> Result<State, SimError> {
    Evolver::new(h)?.evolve(state, t)
}
