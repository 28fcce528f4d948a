//! Gates, circuits, and compilation to an elementary gate set.

use super::state::State;
use super::SimError;
use crate::model::pauli::PauliOp;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Circuit instruction set.
///
/// Conventions: `Rz(phi) = exp(-i phi Z / 2)`; `Zz(theta) = exp(-i theta
/// ZZ / 2)`; `Givens(theta)` is the identity on `|00>`, `|11>` and rotates the
/// one-hot subspace by `[[cos, -sin], [sin, cos]]` in the ordered basis
/// (`|01>`, `|10>`), labels read as `|q_a q_b>`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    X { q: usize },
    H { q: usize },
    Sdg { q: usize },
    Rz { q: usize, phi: f64 },
    Givens { a: usize, b: usize, theta: f64 },
    Zz { a: usize, b: usize, theta: f64 },
    Cnot { control: usize, target: usize },
    Toffoli { c1: usize, c2: usize, target: usize },
    ControlledPauliString {
        control: usize,
        factors: Vec<(usize, PauliOp)>,
    },
    Project { q: usize, outcome: u8 },
    Measure { q: usize },
}

impl Gate {
    pub fn operands(&self) -> Vec<usize> {
        match self {
            Gate::X { q } | Gate::H { q } | Gate::Sdg { q } | Gate::Rz { q, .. } => vec![*q],
            Gate::Givens { a, b, .. } | Gate::Zz { a, b, .. } => vec![*a, *b],
            Gate::Cnot { control, target } => vec![*control, *target],
            Gate::Toffoli { c1, c2, target } => vec![*c1, *c2, *target],
            Gate::ControlledPauliString { control, factors } => {
                let mut ops = vec![*control];
                ops.extend(factors.iter().map(|(q, _)| *q));
                ops
            }
            Gate::Project { q, .. } | Gate::Measure { q } => vec![*q],
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<(), SimError> {
        let ops = self.operands();
        for &q in &ops {
            if q >= n_qubits {
                return Err(SimError::OperandOutOfRange {
                    index: q,
                    n_qubits,
                });
            }
        }
        for (i, &a) in ops.iter().enumerate() {
            if ops[i + 1..].contains(&a) {
                return Err(SimError::DuplicateOperand);
            }
        }
        Ok(())
    }

    /// True for kinds that preserve the norm unconditionally.
    pub fn is_unitary(&self) -> bool {
        !matches!(self, Gate::Project { .. } | Gate::Measure { .. })
    }
}

/// Apply a unitary gate in place. `Project`/`Measure` are rejected here; they
/// carry classical data and go through [`Circuit::run`].
pub fn apply_unitary(state: &mut State, gate: &Gate) -> Result<(), SimError> {
    gate.validate(state.n_qubits())?;
    let dim = state.dim();
    match *gate {
        Gate::X { q } => {
            let mask = 1usize << q;
            let amps = state.amplitudes_mut();
            for i in 0..dim {
                if i & mask == 0 {
                    amps.swap(i, i | mask);
                }
            }
        }
        Gate::H { q } => {
            let mask = 1usize << q;
            let h = std::f64::consts::FRAC_1_SQRT_2;
            let amps = state.amplitudes_mut();
            for i in 0..dim {
                if i & mask == 0 {
                    let j = i | mask;
                    let (a, b) = (amps[i], amps[j]);
                    amps[i] = (a + b) * h;
                    amps[j] = (a - b) * h;
                }
            }
        }
        Gate::Sdg { q } => {
            let mask = 1usize << q;
            let phase = Complex64::new(0.0, -1.0);
            let amps = state.amplitudes_mut();
            for (i, amp) in amps.iter_mut().enumerate() {
                if i & mask != 0 {
                    *amp *= phase;
                }
            }
        }
        Gate::Rz { q, phi } => {
            let mask = 1usize << q;
            let lo = Complex64::from_polar(1.0, -phi / 2.0);
            let hi = Complex64::from_polar(1.0, phi / 2.0);
            let amps = state.amplitudes_mut();
            for (i, amp) in amps.iter_mut().enumerate() {
                *amp *= if i & mask == 0 { lo } else { hi };
            }
        }
        Gate::Givens { a, b, theta } => {
            let (ma, mb) = (1usize << a, 1usize << b);
            let (c, s) = (theta.cos(), theta.sin());
            let amps = state.amplitudes_mut();
            for i in 0..dim {
                // i01: qubit a empty, qubit b occupied
                if i & ma == 0 && i & mb != 0 {
                    let j = (i ^ ma) ^ mb; // qubit a occupied, b empty
                    let (a01, a10) = (amps[i], amps[j]);
                    amps[i] = a01 * c - a10 * s;
                    amps[j] = a01 * s + a10 * c;
                }
            }
        }
        Gate::Zz { a, b, theta } => {
            let (ma, mb) = (1usize << a, 1usize << b);
            let same = Complex64::from_polar(1.0, -theta / 2.0);
            let diff = Complex64::from_polar(1.0, theta / 2.0);
            let amps = state.amplitudes_mut();
            for (i, amp) in amps.iter_mut().enumerate() {
                let parity = ((i & ma != 0) as u8) ^ ((i & mb != 0) as u8);
                *amp *= if parity == 0 { same } else { diff };
            }
        }
        Gate::Cnot { control, target } => {
            let (mc, mt) = (1usize << control, 1usize << target);
            let amps = state.amplitudes_mut();
            for i in 0..dim {
                if i & mc != 0 && i & mt == 0 {
                    amps.swap(i, i | mt);
                }
            }
        }
        Gate::Toffoli { c1, c2, target } => {
            let (m1, m2, mt) = (1usize << c1, 1usize << c2, 1usize << target);
            let amps = state.amplitudes_mut();
            for i in 0..dim {
                if i & m1 != 0 && i & m2 != 0 && i & mt == 0 {
                    amps.swap(i, i | mt);
                }
            }
        }
        Gate::ControlledPauliString {
            control,
            ref factors,
        } => {
            let mc = 1usize << control;
            let mut flip_mask = 0usize;
            for &(q, op) in factors {
                if matches!(op, PauliOp::X | PauliOp::Y) {
                    flip_mask |= 1 << q;
                }
            }
            let phase_of = |i: usize| -> Complex64 {
                let mut phase = Complex64::new(1.0, 0.0);
                for &(q, op) in factors {
                    let bit = i & (1 << q) != 0;
                    phase *= match op {
                        PauliOp::Z => {
                            if bit {
                                Complex64::new(-1.0, 0.0)
                            } else {
                                Complex64::new(1.0, 0.0)
                            }
                        }
                        PauliOp::X => Complex64::new(1.0, 0.0),
                        PauliOp::Y => {
                            if bit {
                                Complex64::new(0.0, -1.0)
                            } else {
                                Complex64::new(0.0, 1.0)
                            }
                        }
                    };
                }
                phase
            };
            let amps = state.amplitudes_mut();
            if flip_mask == 0 {
                for (i, amp) in amps.iter_mut().enumerate() {
                    if i & mc != 0 {
                        *amp *= phase_of(i);
                    }
                }
            } else {
                let anchor = 1usize << flip_mask.trailing_zeros();
                for i in 0..dim {
                    if i & mc != 0 && i & anchor == 0 {
                        let j = i ^ flip_mask;
                        let (ai, aj) = (amps[i], amps[j]);
                        amps[j] = phase_of(i) * ai;
                        amps[i] = phase_of(j) * aj;
                    }
                }
            }
        }
        Gate::Project { .. } | Gate::Measure { .. } => {
            return Err(SimError::MeasureNeedsRng);
        }
    }
    Ok(())
}

/// Classical record produced by a circuit run.
#[derive(Clone, Debug, Default)]
pub struct RunRecord {
    /// `(qubit, outcome, probability)` per Measure gate, in program order.
    pub measurements: Vec<(usize, u8, f64)>,
    /// Pre-normalization branch norm per Project gate, in program order.
    pub projection_norms: Vec<f64>,
}

impl RunRecord {
    /// Product of squared projection norms: the probability that every
    /// projected branch survives.
    pub fn survival_probability(&self) -> f64 {
        self.projection_norms.iter().map(|n| n * n).product()
    }
}

/// An ordered gate program over a fixed register.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) -> &mut Self {
        self.gates.push(gate);
        self
    }

    pub fn extend(&mut self, gates: impl IntoIterator<Item = Gate>) -> &mut Self {
        self.gates.extend(gates);
        self
    }

    /// Run on an initial state without sampling. `Measure` gates are
    /// rejected; `Project` gates record their branch norms and fail on an
    /// empty branch.
    pub fn run(&self, initial: &State) -> Result<(State, RunRecord), SimError> {
        self.run_impl(initial, None::<&mut rand_chacha::ChaCha12Rng>)
    }

    /// Run with Born sampling of `Measure` gates.
    pub fn run_sampled(
        &self,
        initial: &State,
        rng: &mut impl Rng,
    ) -> Result<(State, RunRecord), SimError> {
        self.run_impl(initial, Some(rng))
    }

    fn run_impl(
        &self,
        initial: &State,
        mut rng: Option<&mut impl Rng>,
    ) -> Result<(State, RunRecord), SimError> {
        if initial.n_qubits() != self.n_qubits {
            return Err(SimError::RegisterMismatch {
                state: initial.n_qubits(),
                operator: self.n_qubits,
            });
        }
        let mut state = initial.clone();
        let mut record = RunRecord::default();
        for gate in &self.gates {
            match gate {
                Gate::Project { q, outcome } => {
                    gate.validate(self.n_qubits)?;
                    match state.project(*q, *outcome) {
                        Some((next, norm)) => {
                            record.projection_norms.push(norm);
                            state = next;
                        }
                        None => return Err(SimError::ZeroBranch),
                    }
                }
                Gate::Measure { q } => {
                    gate.validate(self.n_qubits)?;
                    let rng = rng.as_deref_mut().ok_or(SimError::MeasureNeedsRng)?;
                    let (outcome, next, prob) = state.measure_qubit(*q, rng)?;
                    record.measurements.push((*q, outcome, prob));
                    state = next;
                }
                _ => apply_unitary(&mut state, gate)?,
            }
        }
        Ok((state, record))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Compile a two-qubit rotation gate into the elementary set
/// {CNOT, Rz, H, Sdg}. The compiled product equals the original unitary up to
/// global phase.
pub fn compile_gate(gate: &Gate) -> Result<Vec<Gate>, SimError> {
    match *gate {
        Gate::Zz { a, b, theta } => Ok(vec![
            Gate::Cnot {
                control: a,
                target: b,
            },
            Gate::Rz { q: b, phi: theta },
            Gate::Cnot {
                control: a,
                target: b,
            },
        ]),
        Gate::Givens { a, b, theta } => Ok(compile_givens(a, b, theta)),
        Gate::X { .. } => Err(SimError::Uncompilable("X")),
        Gate::H { .. } => Err(SimError::Uncompilable("H")),
        Gate::Sdg { .. } => Err(SimError::Uncompilable("Sdg")),
        Gate::Rz { .. } => Err(SimError::Uncompilable("Rz")),
        Gate::Cnot { .. } => Err(SimError::Uncompilable("Cnot")),
        Gate::Toffoli { .. } => Err(SimError::Uncompilable("Toffoli")),
        Gate::ControlledPauliString { .. } => {
            Err(SimError::Uncompilable("ControlledPauliString"))
        }
        Gate::Project { .. } => Err(SimError::Uncompilable("Project")),
        Gate::Measure { .. } => Err(SimError::Uncompilable("Measure")),
    }
}

/// `Ry(phi)` over {Rz, H}: `Ry(phi) = Rz(pi/2) H Rz(phi) H Rz(-pi/2)`,
/// exact including phase.
fn ry_gates(q: usize, phi: f64) -> [Gate; 5] {
    use std::f64::consts::FRAC_PI_2;
    [
        Gate::Rz { q, phi: -FRAC_PI_2 },
        Gate::H { q },
        Gate::Rz { q, phi },
        Gate::H { q },
        Gate::Rz { q, phi: FRAC_PI_2 },
    ]
}

/// Fixed two-CNOT template for the Givens rotation:
///
/// `G(theta) = Ry(pi/2)_a . CNOT(a,b) . [Ry(theta)_a Ry(-theta)_b] .
/// CNOT(a,b) . Ry(-pi/2)_a`
///
/// verified by matrix equality in the unit tests.
fn compile_givens(a: usize, b: usize, theta: f64) -> Vec<Gate> {
    use std::f64::consts::FRAC_PI_2;
    let mut gates = Vec::new();
    gates.extend(ry_gates(a, -FRAC_PI_2));
    gates.push(Gate::Cnot {
        control: a,
        target: b,
    });
    gates.extend(ry_gates(a, theta));
    gates.extend(ry_gates(b, -theta));
    gates.push(Gate::Cnot {
        control: a,
        target: b,
    });
    gates.extend(ry_gates(a, FRAC_PI_2));
    gates
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::pauli::{PauliSum, PauliTerm};
    use nalgebra::DMatrix;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    /// Dense matrix of a gate sequence on a small register, column by column.
    fn dense_of(gates: &[Gate], n_qubits: usize) -> DMatrix<Complex64> {
        let dim = 1usize << n_qubits;
        let mut m = DMatrix::from_element(dim, dim, Complex64::new(0.0, 0.0));
        for col in 0..dim {
            let mut state = State::basis(n_qubits, col);
            for g in gates {
                apply_unitary(&mut state, g).unwrap();
            }
            for row in 0..dim {
                m[(row, col)] = state.amplitudes()[row];
            }
        }
        m
    }

    /// Max entry distance after aligning global phase.
    fn phase_aligned_distance(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> f64 {
        let mut best = (0, 0);
        let mut mag = 0.0;
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                if a[(r, c)].norm() > mag {
                    mag = a[(r, c)].norm();
                    best = (r, c);
                }
            }
        }
        let phase = b[best] / a[best];
        assert!(
            (phase.norm() - 1.0).abs() < 1e-9,
            "not related by a phase: |{phase}|"
        );
        let mut d: f64 = 0.0;
        for r in 0..a.nrows() {
            for c in 0..a.ncols() {
                d = d.max((a[(r, c)] * phase - b[(r, c)]).norm());
            }
        }
        d
    }

    fn givens_matrix(theta: f64) -> DMatrix<Complex64> {
        dense_of(&[Gate::Givens { a: 0, b: 1, theta }], 2)
    }

    #[test]
    fn x_flips_basis() {
        let mut s = State::zero(1);
        apply_unitary(&mut s, &Gate::X { q: 0 }).unwrap();
        assert_eq!(s, State::basis(1, 1));
    }

    #[test]
    fn givens_rotates_one_hot_subspace() {
        let theta = 0.42;
        // |01> in |q_a q_b> labels: a empty, b occupied -> index 0b10
        let mut s = State::basis(2, 0b10);
        apply_unitary(&mut s, &Gate::Givens { a: 0, b: 1, theta }).unwrap();
        assert!((s.amplitudes()[0b10].re - theta.cos()).abs() < 1e-12);
        assert!((s.amplitudes()[0b01].re - theta.sin()).abs() < 1e-12);
        // |00> and |11> untouched
        let mut s = State::basis(2, 0b11);
        apply_unitary(&mut s, &Gate::Givens { a: 0, b: 1, theta }).unwrap();
        assert_eq!(s, State::basis(2, 0b11));
    }

    #[test]
    fn zz_phases() {
        let theta = 0.9;
        let mut s = State::zero(2);
        apply_unitary(&mut s, &Gate::Zz { a: 0, b: 1, theta }).unwrap();
        let expect = Complex64::from_polar(1.0, -theta / 2.0);
        assert!((s.amplitudes()[0] - expect).norm() < 1e-12);
        let mut s = State::basis(2, 0b01);
        apply_unitary(&mut s, &Gate::Zz { a: 0, b: 1, theta }).unwrap();
        let expect = Complex64::from_polar(1.0, theta / 2.0);
        assert!((s.amplitudes()[0b01] - expect).norm() < 1e-12);
    }

    #[test]
    fn unitary_gates_preserve_norm() {
        let mut rng = ChaCha12Rng::seed_from_u64(8);
        let amps: Vec<Complex64> = (0..8)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let base = State::from_amplitudes(amps).unwrap().normalized();
        let gates = [
            Gate::X { q: 1 },
            Gate::H { q: 2 },
            Gate::Sdg { q: 0 },
            Gate::Rz { q: 1, phi: 0.3 },
            Gate::Givens { a: 0, b: 2, theta: 1.1 },
            Gate::Zz { a: 1, b: 2, theta: -0.7 },
            Gate::Cnot { control: 2, target: 0 },
            Gate::Toffoli { c1: 0, c2: 1, target: 2 },
            Gate::ControlledPauliString {
                control: 2,
                factors: vec![(0, PauliOp::Z), (1, PauliOp::X)],
            },
        ];
        for g in &gates {
            let mut s = base.clone();
            apply_unitary(&mut s, g).unwrap();
            assert!((s.norm() - 1.0).abs() < 1e-12, "{g:?}");
        }
    }

    #[test]
    fn controlled_pauli_string_matches_explicit_matrix() {
        // control on q2, string Z0 X1
        let gate = Gate::ControlledPauliString {
            control: 2,
            factors: vec![(0, PauliOp::Z), (1, PauliOp::X)],
        };
        let dense = dense_of(std::slice::from_ref(&gate), 3);
        let string = PauliSum::new(
            3,
            vec![PauliTerm::new(
                Complex64::new(1.0, 0.0),
                [(0, PauliOp::Z), (1, PauliOp::X)],
            )],
        )
        .unwrap()
        .to_dense();
        for r in 0..8 {
            for c in 0..8 {
                let expect = if r < 4 && c < 4 {
                    if r == c {
                        Complex64::new(1.0, 0.0)
                    } else {
                        Complex64::new(0.0, 0.0)
                    }
                } else if r >= 4 && c >= 4 {
                    string[(r - 4, c - 4)]
                } else {
                    Complex64::new(0.0, 0.0)
                };
                assert!((dense[(r, c)] - expect).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn measurement_basis_change_identity() {
        // Givens(-pi/4)^dag (Z_a - Z_b)/2 Givens(-pi/4) = (X_a X_b + Y_a Y_b)/2
        let g = givens_matrix(-std::f64::consts::FRAC_PI_4);
        let half = Complex64::new(0.5, 0.0);
        let z_diff = PauliSum::new(
            2,
            vec![
                PauliTerm::single(half, 0, PauliOp::Z),
                PauliTerm::single(-half, 1, PauliOp::Z),
            ],
        )
        .unwrap()
        .to_dense();
        let hop = PauliSum::new(
            2,
            vec![
                PauliTerm::new(half, [(0, PauliOp::X), (1, PauliOp::X)]),
                PauliTerm::new(half, [(0, PauliOp::Y), (1, PauliOp::Y)]),
            ],
        )
        .unwrap()
        .to_dense();
        let rotated = g.adjoint() * z_diff * &g;
        assert!((rotated - hop).norm() < 1e-12);
    }

    #[test]
    fn zz_compilation_is_exact() {
        let mut rng = ChaCha12Rng::seed_from_u64(40);
        for _ in 0..100 {
            let theta = rng.random::<f64>() * 8.0 - 4.0;
            let gate = Gate::Zz { a: 0, b: 1, theta };
            let compiled = compile_gate(&gate).unwrap();
            assert_eq!(
                compiled
                    .iter()
                    .filter(|g| matches!(g, Gate::Cnot { .. }))
                    .count(),
                2
            );
            let d = phase_aligned_distance(
                &dense_of(&compiled, 2),
                &dense_of(std::slice::from_ref(&gate), 2),
            );
            assert!(d < 1e-12, "theta {theta}: {d}");
        }
    }

    #[test]
    fn givens_compilation_matches_matrix() {
        let mut rng = ChaCha12Rng::seed_from_u64(41);
        for _ in 0..100 {
            let theta = rng.random::<f64>() * 8.0 - 4.0;
            let gate = Gate::Givens { a: 0, b: 1, theta };
            let compiled = compile_gate(&gate).unwrap();
            assert_eq!(
                compiled
                    .iter()
                    .filter(|g| matches!(g, Gate::Cnot { .. }))
                    .count(),
                2,
                "two-CNOT template"
            );
            assert!(compiled
                .iter()
                .all(|g| matches!(g, Gate::Cnot { .. } | Gate::Rz { .. } | Gate::H { .. })));
            let d = phase_aligned_distance(
                &dense_of(&compiled, 2),
                &dense_of(std::slice::from_ref(&gate), 2),
            );
            assert!(d < 1e-12, "theta {theta}: {d}");
        }
    }

    #[test]
    fn givens_compilation_at_zero_is_identity() {
        let compiled = compile_gate(&Gate::Givens {
            a: 0,
            b: 1,
            theta: 0.0,
        })
        .unwrap();
        let d = phase_aligned_distance(&dense_of(&compiled, 2), &DMatrix::identity(4, 4));
        assert!(d < 1e-12);
    }

    #[test]
    fn compilation_works_on_reversed_operand_order() {
        let gate = Gate::Givens {
            a: 2,
            b: 0,
            theta: 0.77,
        };
        let compiled = compile_gate(&gate).unwrap();
        let d = phase_aligned_distance(
            &dense_of(&compiled, 3),
            &dense_of(std::slice::from_ref(&gate), 3),
        );
        assert!(d < 1e-12);
    }

    #[test]
    fn circuit_run_records_projections() {
        let mut c = Circuit::new(1);
        c.push(Gate::H { q: 0 });
        c.push(Gate::Project { q: 0, outcome: 0 });
        let (state, record) = c.run(&State::zero(1)).unwrap();
        assert!((state.amplitudes()[0].re - 1.0).abs() < 1e-12);
        assert!((record.projection_norms[0] - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        assert!((record.survival_probability() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn circuit_measure_needs_rng() {
        let mut c = Circuit::new(1);
        c.push(Gate::Measure { q: 0 });
        assert!(matches!(
            c.run(&State::zero(1)),
            Err(SimError::MeasureNeedsRng)
        ));
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        let (_, record) = c.run_sampled(&State::zero(1), &mut rng).unwrap();
        assert_eq!(record.measurements, vec![(0, 0, 1.0)]);
    }

    #[test]
    fn operand_validation() {
        let mut s = State::zero(2);
        let err = apply_unitary(&mut s, &Gate::Cnot { control: 0, target: 5 });
        assert!(matches!(err, Err(SimError::OperandOutOfRange { .. })));
        let err = apply_unitary(&mut s, &Gate::Cnot { control: 1, target: 1 });
        assert!(matches!(err, Err(SimError::DuplicateOperand)));
    }

    #[test]
    fn circuit_json_round_trip() {
        let mut c = Circuit::new(3);
        c.push(Gate::X { q: 0 });
        c.push(Gate::Givens { a: 0, b: 2, theta: 0.25 });
        c.push(Gate::Project { q: 1, outcome: 1 });
        let text = c.to_json();
        let back = Circuit::from_json(&text).unwrap();
        assert_eq!(c, back);
    }
}
