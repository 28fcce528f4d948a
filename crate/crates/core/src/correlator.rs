//! Time-domain m-point correlation functions: a norm-chain recursion over
//! renormalized fermion operators plus a modified Hadamard test, in both a
//! fast statevector mode and a literal gate-level mode with ancillas and
//! post-selection.

use crate::model::pauli::PauliOp;
use crate::model::pauli::PauliSum;
use crate::sim::{Circuit, Evolver, Gate, SimError, State};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum CorrelatorError {
    #[error("operator time {0} is not finite")]
    NonFiniteTime(f64),
    #[error("survival probability {0:.3e} below 1e-12")]
    VanishingSurvival(f64),
    #[error("every shot was discarded by ancilla post-selection")]
    AllShotsDiscarded,
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// One Heisenberg-picture ladder operator at a time argument.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FermionOp {
    pub orbital: usize,
    pub dagger: bool,
    pub t: f64,
}

/// Ordered operator list defining an m-point function; index 0 acts first
/// (rightmost in the correlator), `t_0 = 0` implicitly precedes it. Times
/// need not be monotone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorSpec {
    pub ops: Vec<FermionOp>,
}

impl CorrelatorSpec {
    pub fn new(ops: Vec<FermionOp>) -> Result<Self, CorrelatorError> {
        for op in &ops {
            if !op.t.is_finite() {
                return Err(CorrelatorError::NonFiniteTime(op.t));
            }
        }
        Ok(CorrelatorSpec { ops })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Fast,
    GateLevel,
}

/// Factorized correlator output: `value = g_tilde * prod(norms)` unless a
/// vanishing norm aborted the chain, in which case `value = 0`.
#[derive(Clone, Debug)]
pub struct CorrelatorResult {
    pub value: Complex64,
    pub g_tilde: Complex64,
    pub norms: Vec<f64>,
    /// 1-based index of the first vanishing norm.
    pub aborted_at: Option<usize>,
    pub mode: Mode,
}

/// Renormalized ladder action `f|psi>/||f|psi>||` with its norm; `None` on
/// the zero branch.
pub fn renormalized_apply(state: &State, orbital: usize, dagger: bool) -> Option<(State, f64)> {
    state.ladder_projected(orbital, dagger)
}

/// Outcome of the norm-chain recursion.
#[derive(Clone, Debug)]
pub struct NormChain {
    pub norms: Vec<f64>,
    /// Normalized state after the last applied operator (no trailing
    /// evolution).
    pub final_state: State,
    pub aborted_at: Option<usize>,
}

/// Iterate `evolve(t_k - t_{k-1})` then renormalized application, recording
/// each branch norm; stops at the first zero branch.
pub fn norm_chain(gs: &State, spec: &CorrelatorSpec, evolver: &Evolver) -> Result<NormChain, CorrelatorError> {
    let mut state = gs.clone();
    let mut norms = Vec::with_capacity(spec.len());
    let mut prev_t = 0.0;
    for (j, op) in spec.ops.iter().enumerate() {
        state = evolver.evolve(&state, op.t - prev_t)?;
        prev_t = op.t;
        match renormalized_apply(&state, op.orbital, op.dagger) {
            Some((next, norm)) => {
                norms.push(norm);
                state = next;
            }
            None => {
                norms.push(0.0);
                return Ok(NormChain {
                    norms,
                    final_state: state,
                    aborted_at: Some(j + 1),
                });
            }
        }
    }
    Ok(NormChain {
        norms,
        final_state: state,
        aborted_at: None,
    })
}

/// Statevector-algebra evaluation of the factorized m-point function.
pub fn correlator_fast(
    gs: &State,
    spec: &CorrelatorSpec,
    h: &PauliSum,
) -> Result<CorrelatorResult, CorrelatorError> {
    let evolver = Evolver::new(h)?;
    correlator_fast_with(gs, spec, &evolver)
}

/// Same as [`correlator_fast`] against a cached evolver (time grids).
pub fn correlator_fast_with(
    gs: &State,
    spec: &CorrelatorSpec,
    evolver: &Evolver,
) -> Result<CorrelatorResult, CorrelatorError> {
    let chain = norm_chain(gs, spec, evolver)?;
    if chain.aborted_at.is_some() {
        return Ok(CorrelatorResult {
            value: Complex64::new(0.0, 0.0),
            g_tilde: Complex64::new(0.0, 0.0),
            norms: chain.norms,
            aborted_at: chain.aborted_at,
            mode: Mode::Fast,
        });
    }
    let t_final = spec.ops.last().map_or(0.0, |op| op.t);
    // <GS| e^{iH t_m} |chain> written as <e^{-iH t_m} GS | chain>
    let bra = evolver.evolve(gs, t_final)?;
    let g_tilde = bra.inner(&chain.final_state);
    let value = chain.norms.iter().product::<f64>() * g_tilde;
    Ok(CorrelatorResult {
        value,
        g_tilde,
        norms: chain.norms,
        aborted_at: None,
        mode: Mode::Fast,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Part {
    Real,
    Imag,
}

/// One instruction of the gate-level program: an elementary gate on the
/// extended register or a block time evolution of the system qubits.
#[derive(Clone, Debug)]
pub enum ProgramOp {
    Gate(Gate),
    Evolve { t: f64 },
}

/// The controlled Heisenberg fermion string of the modified Hadamard test,
/// on `n_system + 2` qubits (control ancilla, then one reusable projector
/// ancilla).
#[derive(Clone, Debug)]
pub struct HadamardProgram {
    pub n_system: usize,
    pub control: usize,
    pub projector_ancilla: usize,
    /// The controlled string only (no control-basis preparation/readout).
    pub string_ops: Vec<ProgramOp>,
}

/// Gate accounting for one controlled fermion operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FermionGateCost {
    pub orbital: usize,
    /// Doubly-controlled parity legs, one per qubit below the orbital.
    pub toffoli_equivalents: usize,
    pub cnots: usize,
    pub controlled_projectors: usize,
}

/// Build the controlled string for a spec: uncontrolled evolutions
/// interleaved with controlled renormalized fermion operators, closed by the
/// uncontrolled `e^{+iH t_m}`. With the control in `|0>` the evolutions
/// telescope to the identity.
pub fn build_hadamard_program(spec: &CorrelatorSpec, n_system: usize) -> HadamardProgram {
    let control = n_system;
    let ancilla = n_system + 1;
    let mut ops = Vec::new();
    let mut prev_t = 0.0;
    for op in &spec.ops {
        ops.push(ProgramOp::Evolve { t: op.t - prev_t });
        prev_t = op.t;
        // controlled (Z string . X) as one controlled Pauli string
        let mut factors: Vec<(usize, PauliOp)> =
            (0..op.orbital).map(|q| (q, PauliOp::Z)).collect();
        factors.push((op.orbital, PauliOp::X));
        ops.push(ProgramOp::Gate(Gate::ControlledPauliString {
            control,
            factors,
        }));
        // controlled projector via deferred measurement on the reusable
        // ancilla: flag the killed branch and post-select it away
        if op.dagger {
            // creation kills (control = 1, orbital now 0 before X ... after
            // commuting X past the projector: kill (control = 1, orbital = 0)
            ops.push(ProgramOp::Gate(Gate::X { q: op.orbital }));
            ops.push(ProgramOp::Gate(Gate::Toffoli {
                c1: control,
                c2: op.orbital,
                target: ancilla,
            }));
            ops.push(ProgramOp::Gate(Gate::X { q: op.orbital }));
        } else {
            ops.push(ProgramOp::Gate(Gate::Toffoli {
                c1: control,
                c2: op.orbital,
                target: ancilla,
            }));
        }
        ops.push(ProgramOp::Gate(Gate::Project {
            q: ancilla,
            outcome: 0,
        }));
    }
    ops.push(ProgramOp::Evolve { t: -prev_t });
    HadamardProgram {
        n_system,
        control,
        projector_ancilla: ancilla,
        string_ops: ops,
    }
}

impl HadamardProgram {
    /// Per-fermion-operator gate census. Each controlled Pauli string
    /// contributes its Z legs (Toffoli-equivalent under deferred
    /// measurement) and one CNOT for the X; each Toffoli/Project pair is one
    /// controlled projector.
    pub fn fermion_gate_census(&self) -> Vec<FermionGateCost> {
        let mut costs = Vec::new();
        for op in &self.string_ops {
            match op {
                ProgramOp::Gate(Gate::ControlledPauliString { factors, .. }) => {
                    let orbital = factors
                        .iter()
                        .find(|(_, p)| matches!(p, PauliOp::X))
                        .map(|(q, _)| *q)
                        .expect("fermion string carries X");
                    let legs = factors
                        .iter()
                        .filter(|(_, p)| matches!(p, PauliOp::Z))
                        .count();
                    costs.push(FermionGateCost {
                        orbital,
                        toffoli_equivalents: legs,
                        cnots: 1,
                        controlled_projectors: 0,
                    });
                }
                ProgramOp::Gate(Gate::Project { .. }) => {
                    if let Some(last) = costs.last_mut() {
                        last.controlled_projectors += 1;
                    }
                }
                _ => {}
            }
        }
        costs
    }
}

/// Exact-probability evaluation of the modified Hadamard test. Returns the
/// contrast times survival estimate of Re/Im of the unnormalized
/// correlator.
pub fn hadamard_exact(
    gs_prep: &Circuit,
    spec: &CorrelatorSpec,
    h: &PauliSum,
    part: Part,
) -> Result<f64, CorrelatorError> {
    let evolver = Evolver::new(h)?;
    let n = h.n_qubits();
    let program = build_hadamard_program(spec, n);
    let (system, _) = gs_prep.run(&State::zero(n))?;
    let mut state = system.embed(2);
    crate::sim::apply_unitary(&mut state, &Gate::H { q: program.control })?;
    let mut survival = 1.0f64;
    for op in &program.string_ops {
        match op {
            ProgramOp::Evolve { t } => {
                state = evolver.evolve_subsystem(&state, *t)?;
            }
            ProgramOp::Gate(Gate::Project { q, outcome }) => match state.project(*q, *outcome) {
                Some((next, norm)) => {
                    survival *= norm * norm;
                    state = next;
                }
                None => return Err(CorrelatorError::VanishingSurvival(0.0)),
            },
            ProgramOp::Gate(g) => crate::sim::apply_unitary(&mut state, g)?,
        }
    }
    if survival < 1e-12 {
        return Err(CorrelatorError::VanishingSurvival(survival));
    }
    if matches!(part, Part::Imag) {
        crate::sim::apply_unitary(&mut state, &Gate::Sdg { q: program.control })?;
    }
    crate::sim::apply_unitary(&mut state, &Gate::H { q: program.control })?;
    let p1 = state.prob_one(program.control);
    let contrast = 1.0 - 2.0 * p1;
    Ok(contrast * survival)
}

/// Shot-sampled version: ancilla post-selection discards shots, the control
/// contrast is scaled by the measured survival rate.
pub fn hadamard_sampled(
    gs_prep: &Circuit,
    spec: &CorrelatorSpec,
    h: &PauliSum,
    part: Part,
    shots: usize,
    rng: &mut impl Rng,
) -> Result<f64, CorrelatorError> {
    let evolver = Evolver::new(h)?;
    let n = h.n_qubits();
    let program = build_hadamard_program(spec, n);
    let (system, _) = gs_prep.run(&State::zero(n))?;
    let base = system.embed(2);
    let mut kept = 0usize;
    let mut contrast_sum = 0i64;
    for _ in 0..shots {
        let mut state = base.clone();
        crate::sim::apply_unitary(&mut state, &Gate::H { q: program.control })?;
        let mut discarded = false;
        for op in &program.string_ops {
            match op {
                ProgramOp::Evolve { t } => {
                    state = evolver.evolve_subsystem(&state, *t)?;
                }
                ProgramOp::Gate(Gate::Project { q, outcome }) => {
                    let (bit, next, _) = state.measure_qubit(*q, rng)?;
                    if bit != *outcome {
                        discarded = true;
                        break;
                    }
                    state = next;
                }
                ProgramOp::Gate(g) => crate::sim::apply_unitary(&mut state, g)?,
            }
        }
        if discarded {
            continue;
        }
        kept += 1;
        if matches!(part, Part::Imag) {
            crate::sim::apply_unitary(&mut state, &Gate::Sdg { q: program.control })?;
        }
        crate::sim::apply_unitary(&mut state, &Gate::H { q: program.control })?;
        let (bit, _, _) = state.measure_qubit(program.control, rng)?;
        contrast_sum += if bit == 0 { 1 } else { -1 };
    }
    if kept == 0 {
        return Err(CorrelatorError::AllShotsDiscarded);
    }
    let contrast = contrast_sum as f64 / kept as f64;
    let survival = kept as f64 / shots as f64;
    Ok(contrast * survival)
}

/// Gate-level estimate of one part of the correlator; exact probabilities
/// when `shots` is `None`.
pub fn hadamard_gate_level(
    gs_prep: &Circuit,
    spec: &CorrelatorSpec,
    h: &PauliSum,
    part: Part,
    shots: Option<usize>,
    rng: &mut impl Rng,
) -> Result<f64, CorrelatorError> {
    match shots {
        None => hadamard_exact(gs_prep, spec, h, part),
        Some(n) => hadamard_sampled(gs_prep, spec, h, part, n, rng),
    }
}

/// Full correlator via the gate-level pipeline in exact-probability mode.
pub fn correlator_gate_level(
    gs_prep: &Circuit,
    spec: &CorrelatorSpec,
    h: &PauliSum,
) -> Result<CorrelatorResult, CorrelatorError> {
    let evolver = Evolver::new(h)?;
    let (gs, _) = gs_prep.run(&State::zero(h.n_qubits()))?;
    let chain = norm_chain(&gs, spec, &evolver)?;
    if chain.aborted_at.is_some() {
        // zero-norm short-circuit: no Hadamard test runs
        return Ok(CorrelatorResult {
            value: Complex64::new(0.0, 0.0),
            g_tilde: Complex64::new(0.0, 0.0),
            norms: chain.norms,
            aborted_at: chain.aborted_at,
            mode: Mode::GateLevel,
        });
    }
    let re = hadamard_exact(gs_prep, spec, h, Part::Real)?;
    let im = hadamard_exact(gs_prep, spec, h, Part::Imag)?;
    let value = Complex64::new(re, im);
    let norm_product: f64 = chain.norms.iter().product();
    Ok(CorrelatorResult {
        value,
        g_tilde: value / norm_product,
        norms: chain.norms,
        aborted_at: None,
        mode: Mode::GateLevel,
    })
}

/// Greater, lesser, and retarded single-particle functions on a time grid.
#[derive(Clone, Debug)]
pub struct TimeSeries {
    pub t: Vec<f64>,
    pub greater: Vec<Complex64>,
    pub lesser: Vec<Complex64>,
    pub retarded: Vec<Complex64>,
}

/// `(t, re, im)` CSV rows for one series.
pub fn series_csv(t: &[f64], values: &[Complex64]) -> String {
    let mut out = String::from("t,re,im\n");
    for (x, v) in t.iter().zip(values.iter()) {
        out.push_str(&format!("{x},{},{}\n", v.re, v.im));
    }
    out
}

/// `G>(t) = -i <c(t) c^dag(0)>`, `G<(t) = +i <c^dag(0) c(t)>`,
/// `G^R(t) = Theta(t) (G> - G<)` with `Theta(0) = 1`.
pub fn greater_lesser_retarded(
    gs: &State,
    h: &PauliSum,
    orbital: usize,
    ts: &[f64],
) -> Result<TimeSeries, CorrelatorError> {
    let evolver = Evolver::new(h)?;
    let i = Complex64::new(0.0, 1.0);
    let mut greater = Vec::with_capacity(ts.len());
    let mut lesser = Vec::with_capacity(ts.len());
    let mut retarded = Vec::with_capacity(ts.len());
    for &t in ts {
        let spec_g = CorrelatorSpec::new(vec![
            FermionOp {
                orbital,
                dagger: true,
                t: 0.0,
            },
            FermionOp {
                orbital,
                dagger: false,
                t,
            },
        ])?;
        let g_greater = -i * correlator_fast_with(gs, &spec_g, &evolver)?.value;
        // creation acts last here: it carries the later list position
        let spec_l = CorrelatorSpec::new(vec![
            FermionOp {
                orbital,
                dagger: false,
                t,
            },
            FermionOp {
                orbital,
                dagger: true,
                t: 0.0,
            },
        ])?;
        let g_lesser = i * correlator_fast_with(gs, &spec_l, &evolver)?.value;
        greater.push(g_greater);
        lesser.push(g_lesser);
        retarded.push(if t >= 0.0 {
            g_greater - g_lesser
        } else {
            Complex64::new(0.0, 0.0)
        });
    }
    Ok(TimeSeries {
        t: ts.to_vec(),
        greater,
        lesser,
        retarded,
    })
}
