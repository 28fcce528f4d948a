//! Bitmask-compiled Pauli sums for hot expectation/apply loops.

use super::state::State;
use super::SimError;
use crate::model::pauli::{PauliOp, PauliSum};
use num_complex::Complex64;

/// One Pauli string as bitmasks: `P|i> = coeff * i^{#Y} * (-1)^{popcount(i &
/// phase_mask)} |i ^ flip_mask>` with the `i^{#Y}` factor folded into
/// `coeff`.
#[derive(Clone, Copy, Debug)]
struct CompiledTerm {
    coeff: Complex64,
    flip_mask: usize,
    phase_mask: usize,
}

/// A Pauli sum lowered to mask arithmetic. Build once, evaluate many times.
#[derive(Clone, Debug)]
pub struct CompiledSum {
    n_qubits: usize,
    terms: Vec<CompiledTerm>,
}

impl CompiledSum {
    pub fn new(op: &PauliSum) -> Self {
        let i_unit = Complex64::new(0.0, 1.0);
        let terms = op
            .terms()
            .iter()
            .map(|term| {
                let mut flip_mask = 0usize;
                let mut phase_mask = 0usize;
                let mut coeff = term.coeff;
                for (&q, &p) in &term.factors {
                    match p {
                        PauliOp::X => flip_mask |= 1 << q,
                        PauliOp::Y => {
                            flip_mask |= 1 << q;
                            phase_mask |= 1 << q;
                            coeff *= i_unit;
                        }
                        PauliOp::Z => phase_mask |= 1 << q,
                    }
                }
                CompiledTerm {
                    coeff,
                    flip_mask,
                    phase_mask,
                }
            })
            .collect();
        CompiledSum {
            n_qubits: op.n_qubits(),
            terms,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn expectation(&self, state: &State) -> Result<Complex64, SimError> {
        if state.n_qubits() != self.n_qubits {
            return Err(SimError::RegisterMismatch {
                state: state.n_qubits(),
                operator: self.n_qubits,
            });
        }
        let amps = state.amplitudes();
        let mut acc = Complex64::new(0.0, 0.0);
        for t in &self.terms {
            let mut term_acc = Complex64::new(0.0, 0.0);
            for (i, a) in amps.iter().enumerate() {
                let sign = if (i & t.phase_mask).count_ones() & 1 == 1 {
                    -1.0
                } else {
                    1.0
                };
                term_acc += amps[i ^ t.flip_mask].conj() * *a * sign;
            }
            acc += t.coeff * term_acc;
        }
        Ok(acc)
    }

    pub fn apply(&self, state: &State) -> Result<State, SimError> {
        if state.n_qubits() != self.n_qubits {
            return Err(SimError::RegisterMismatch {
                state: state.n_qubits(),
                operator: self.n_qubits,
            });
        }
        let amps = state.amplitudes();
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        for t in &self.terms {
            for (i, a) in amps.iter().enumerate() {
                let sign = if (i & t.phase_mask).count_ones() & 1 == 1 {
                    -1.0
                } else {
                    1.0
                };
                out[i ^ t.flip_mask] += t.coeff * *a * sign;
            }
        }
        State::from_amplitudes(out)
    }
}
