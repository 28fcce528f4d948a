//! Complex amplitude vectors over the computational basis.

use crate::model::pauli::PauliSum;
use num_complex::Complex64;
use rand::Rng;

use super::SimError;

/// Threshold below which a projected branch is reported as empty.
pub const ZERO_BRANCH_TOL: f64 = 1e-8;

/// A pure state over `2^n_qubits` computational basis amplitudes. Qubit `q`
/// is bit `q` of the basis index.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl State {
    /// The all-zeros state `|0...0>`.
    pub fn zero(n_qubits: usize) -> Self {
        State::basis(n_qubits, 0)
    }

    /// A computational basis state.
    pub fn basis(n_qubits: usize, index: usize) -> Self {
        let dim = 1usize << n_qubits;
        assert!(index < dim, "basis index out of range");
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        State { n_qubits, amps }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self, SimError> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(SimError::BadAmplitudeCount(len));
        }
        Ok(State {
            n_qubits: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn normalize(&mut self) {
        let n = self.norm();
        if n > 0.0 {
            for a in &mut self.amps {
                *a /= n;
            }
        }
    }

    pub fn normalized(mut self) -> Self {
        self.normalize();
        self
    }

    /// Inner product `<self|other>`.
    pub fn inner(&self, other: &State) -> Complex64 {
        debug_assert_eq!(self.n_qubits, other.n_qubits);
        self.amps
            .iter()
            .zip(other.amps.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn scale(&mut self, factor: Complex64) {
        for a in &mut self.amps {
            *a *= factor;
        }
    }

    /// `<self|O|self>` without materializing dense matrices.
    pub fn expectation(&self, obs: &PauliSum) -> Result<Complex64, SimError> {
        if obs.n_qubits() != self.n_qubits {
            return Err(SimError::RegisterMismatch {
                state: self.n_qubits,
                operator: obs.n_qubits(),
            });
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for term in obs.terms() {
            for (idx, amp) in self.amps.iter().enumerate() {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let (phase, out) = term.apply_basis(idx);
                acc += self.amps[out].conj() * phase * amp;
            }
        }
        Ok(acc)
    }

    /// `O|self>` as a new (generally unnormalized) vector.
    pub fn apply_sum(&self, op: &PauliSum) -> Result<State, SimError> {
        if op.n_qubits() != self.n_qubits {
            return Err(SimError::RegisterMismatch {
                state: self.n_qubits,
                operator: op.n_qubits(),
            });
        }
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for term in op.terms() {
            for (idx, amp) in self.amps.iter().enumerate() {
                if amp.norm_sqr() == 0.0 {
                    continue;
                }
                let (phase, new_idx) = term.apply_basis(idx);
                out[new_idx] += phase * amp;
            }
        }
        Ok(State {
            n_qubits: self.n_qubits,
            amps: out,
        })
    }

    /// Probability that qubit `q` reads 1.
    pub fn prob_one(&self, q: usize) -> f64 {
        let mask = 1usize << q;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Deterministic projection of qubit `q` onto `outcome`. Returns the
    /// renormalized branch and its pre-normalization amplitude norm, or
    /// `None` when the branch carries less than `ZERO_BRANCH_TOL` norm.
    pub fn project(&self, q: usize, outcome: u8) -> Option<(State, f64)> {
        let mask = 1usize << q;
        let want_one = outcome != 0;
        let mut amps = self.amps.clone();
        let mut kept_sqr = 0.0;
        for (i, a) in amps.iter_mut().enumerate() {
            if ((i & mask) != 0) == want_one {
                kept_sqr += a.norm_sqr();
            } else {
                *a = Complex64::new(0.0, 0.0);
            }
        }
        let norm = kept_sqr.sqrt();
        if norm < ZERO_BRANCH_TOL {
            return None;
        }
        for a in &mut amps {
            *a /= norm;
        }
        Some((
            State {
                n_qubits: self.n_qubits,
                amps,
            },
            norm,
        ))
    }

    /// Born-rule measurement of qubit `q`: samples an outcome, collapses, and
    /// reports the probability of the realized outcome.
    pub fn measure_qubit(
        &self,
        q: usize,
        rng: &mut impl Rng,
    ) -> Result<(u8, State, f64), SimError> {
        let p1 = self.prob_one(q);
        let p0 = 1.0 - p1;
        if p0 < 1e-14 && p1 < 1e-14 {
            return Err(SimError::CorruptState);
        }
        let outcome = if rng.random::<f64>() < p1 { 1u8 } else { 0u8 };
        let prob = if outcome == 1 { p1 } else { p0 };
        // prob >= 1e-14 here, so the branch is never empty
        let (state, _) = self
            .project(q, outcome)
            .expect("sampled branch has weight");
        Ok((outcome, state, prob))
    }

    /// Multinomial sample of basis-state readouts.
    pub fn sample(
        &self,
        shots: usize,
        rng: &mut impl Rng,
    ) -> std::collections::BTreeMap<usize, usize> {
        let mut cdf = Vec::with_capacity(self.amps.len());
        let mut acc = 0.0;
        for a in &self.amps {
            acc += a.norm_sqr();
            cdf.push(acc);
        }
        let total = acc;
        let mut counts = std::collections::BTreeMap::new();
        for _ in 0..shots {
            let u = rng.random::<f64>() * total;
            let idx = cdf.partition_point(|&c| c <= u).min(self.amps.len() - 1);
            *counts.entry(idx).or_insert(0) += 1;
        }
        counts
    }

    /// Extend the register by `extra` qubits initialized to `|0>` at the top
    /// indices.
    pub fn embed(&self, extra: usize) -> State {
        let mut amps = self.amps.clone();
        amps.resize(self.amps.len() << extra, Complex64::new(0.0, 0.0));
        State {
            n_qubits: self.n_qubits + extra,
            amps,
        }
    }

    /// Renormalized ladder-operator action `f|psi> / ||f|psi>||`, realized as
    /// a deterministic projection (onto 0 for creation, 1 for annihilation)
    /// followed by the lower-index Z parity string and a bit flip. Returns
    /// the branch norm, which equals `||f|psi>||` for normalized input;
    /// `None` marks an empty branch.
    pub fn ladder_projected(&self, orbital: usize, dagger: bool) -> Option<(State, f64)> {
        let outcome = if dagger { 0u8 } else { 1u8 };
        let (projected, norm) = self.project(orbital, outcome)?;
        let lower_mask = (1usize << orbital) - 1;
        let flip = 1usize << orbital;
        let mut amps = vec![Complex64::new(0.0, 0.0); projected.amps.len()];
        for (idx, amp) in projected.amps.iter().enumerate() {
            if amp.norm_sqr() == 0.0 {
                continue;
            }
            let sign = if (idx & lower_mask).count_ones() & 1 == 1 {
                -1.0
            } else {
                1.0
            };
            amps[idx ^ flip] = amp * sign;
        }
        Some((
            State {
                n_qubits: self.n_qubits,
                amps,
            },
            norm,
        ))
    }

    /// Amplitude mass outside a basis-index set (for symmetry-leakage checks).
    pub fn mass_outside(&self, kept: &[usize]) -> f64 {
        let mut inside = vec![false; self.amps.len()];
        for &i in kept {
            inside[i] = true;
        }
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| !inside[*i])
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Little-endian binary export: (re, im) f64 pairs per amplitude.
    pub fn to_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.amps.len() * 16);
        for a in &self.amps {
            out.extend_from_slice(&a.re.to_le_bytes());
            out.extend_from_slice(&a.im.to_le_bytes());
        }
        out
    }

    pub fn from_le_bytes(bytes: &[u8]) -> Result<State, SimError> {
        if !bytes.len().is_multiple_of(16) {
            return Err(SimError::BadAmplitudeCount(bytes.len()));
        }
        let amps: Vec<Complex64> = bytes
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[0..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..16].try_into().unwrap());
                Complex64::new(re, im)
            })
            .collect();
        State::from_amplitudes(amps)
    }
}
