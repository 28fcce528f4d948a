//! Symmetry-preserving measurement planning and shot-based energy
//! estimation.
//!
//! Every Hamiltonian term is read out from one of two circuit shapes: the
//! bare Z-basis circuit (diagonal terms), or a hopping circuit that applies
//! `Givens(-pi/4)` on disjoint pairs before the full Z-basis readout. Both
//! shapes measure operators commuting with the charge and spin symmetries,
//! so post-selection on register Hamming weights discards nothing on a
//! noiseless symmetric state.

use crate::model::pauli::{PauliOp, PauliSum, PauliTerm};
use crate::model::{build_hamiltonian, AimParams, ModelError};
use crate::sim::{apply_unitary, Circuit, Gate, SimError, State};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum MeasureError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("term '{0}' does not fit the Z-basis / hopping readout shapes")]
    UnsupportedTerm(String),
    #[error("hopping pair ({0}, {1}) is not covered by any plan circuit")]
    UncoveredPair(usize, usize),
    #[error("post-selection discarded every shot")]
    AllShotsDiscarded,
}

/// One measurement circuit: Givens(-pi/4) on each listed pair, then full
/// Z-basis readout.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasCircuit {
    pub rotated_pairs: Vec<(usize, usize)>,
}

/// Per-shot estimator shape for one Hamiltonian term.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Estimator {
    /// Parity of the Z support: `(-1)^{popcount(bits & support)}`.
    ZParity { support: Vec<usize> },
    /// `((-1)^{b_mu} - (-1)^{b_nu})/2` times the parity of the J-W string.
    Hopping {
        mu: usize,
        nu: usize,
        string: Vec<usize>,
    },
}

/// Mapping of one term to its circuit and estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub label: String,
    pub coeff: f64,
    pub circuit: usize,
    pub estimator: Estimator,
}

/// Full measurement plan for an AIM Hamiltonian.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasPlan {
    pub n_qubits: usize,
    pub n_imp: usize,
    pub n_bath: usize,
    pub parallel: bool,
    pub circuits: Vec<MeasCircuit>,
    pub assignments: Vec<Assignment>,
}

impl MeasPlan {
    pub fn n_circuits(&self) -> usize {
        self.circuits.len()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plan serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// Structural invariants: disjoint rotated pairs per circuit, every
    /// assignment pointing at a live circuit.
    pub fn validate(&self) -> Result<(), String> {
        for (k, c) in self.circuits.iter().enumerate() {
            let mut seen = std::collections::HashSet::new();
            for &(a, b) in &c.rotated_pairs {
                if a >= b {
                    return Err(format!("circuit {k}: pair ({a},{b}) not ordered"));
                }
                if !seen.insert(a) || !seen.insert(b) {
                    return Err(format!("circuit {k}: overlapping rotated pairs"));
                }
            }
        }
        for a in &self.assignments {
            if a.circuit >= self.circuits.len() {
                return Err(format!("assignment '{}' points past circuit list", a.label));
            }
        }
        Ok(())
    }
}

/// The operator realized by reading all qubits after `Givens(-pi/4)` on
/// `(mu, nu)`: `(1/2)(X X + Y Y)` on the pair times `Z` on every other qubit.
pub fn rotated_operator(pair: (usize, usize), n_qubits: usize) -> PauliSum {
    let (mu, nu) = pair;
    assert!(mu < nu, "pair must be ordered");
    let half = Complex64::new(0.5, 0.0);
    let mut xx: Vec<(usize, PauliOp)> = vec![(mu, PauliOp::X), (nu, PauliOp::X)];
    let mut yy: Vec<(usize, PauliOp)> = vec![(mu, PauliOp::Y), (nu, PauliOp::Y)];
    for q in 0..n_qubits {
        if q != mu && q != nu {
            xx.push((q, PauliOp::Z));
            yy.push((q, PauliOp::Z));
        }
    }
    PauliSum::new(
        n_qubits,
        vec![PauliTerm::new(half, xx), PauliTerm::new(half, yy)],
    )
    .expect("well-formed")
}

/// Round-robin proper edge coloring of the complete bipartite graph
/// `K_{n_left, n_right}`: `color(i, b) = (i + b) mod max(n_left, n_right)`.
pub fn bipartite_color(i: usize, b: usize, n_left: usize, n_right: usize) -> usize {
    (i + b) % n_left.max(n_right)
}

/// Circle-method rounds for the complete graph `K_n`: `n` rounds when `n`
/// is odd, `n - 1` when even. Each round is a perfect or near-perfect
/// matching.
pub fn complete_graph_rounds(n: usize) -> Vec<Vec<(usize, usize)>> {
    if n < 2 {
        return Vec::new();
    }
    if n % 2 == 1 {
        // odd: vertex k sits out in the round with 2k = r (mod n)
        (0..n)
            .map(|r| {
                let mut round = Vec::new();
                for i in 0..n {
                    for j in (i + 1)..n {
                        if (i + j) % n == r {
                            round.push((i, j));
                        }
                    }
                }
                round
            })
            .collect()
    } else {
        // even: fix the last vertex, rotate the rest
        let m = n - 1;
        (0..m)
            .map(|r| {
                let mut round = vec![(r, m)];
                for i in 0..m {
                    for j in (i + 1)..m {
                        if (i + j) % m == (2 * r) % m {
                            round.push((i, j));
                        }
                    }
                }
                round
                    .into_iter()
                    .map(|(a, b)| (a.min(b), a.max(b)))
                    .collect()
            })
            .collect()
    }
}

/// Build the measurement plan. Circuits come from the model structure
/// (dimensions), assignments from the actual nonzero Hamiltonian terms.
pub fn plan_measurements(params: &AimParams, parallel: bool) -> Result<MeasPlan, MeasureError> {
    let nq = params.n_qubits();
    let m = params.n_sites();
    let (ni, nb) = (params.n_imp, params.n_bath);
    let mut circuits = vec![MeasCircuit {
        rotated_pairs: Vec::new(),
    }];
    // pair (mu, nu) -> circuit index
    let mut pair_circuit = std::collections::HashMap::new();

    if parallel {
        if nb > 0 {
            let chi = ni.max(nb);
            for color in 0..chi {
                let mut pairs = Vec::new();
                for i in 0..ni {
                    for b in 0..nb {
                        if bipartite_color(i, b, ni, nb) == color {
                            for offset in [0, m] {
                                let pair = (offset + i, offset + ni + b);
                                pairs.push(pair);
                                pair_circuit.insert(pair, circuits.len());
                            }
                        }
                    }
                }
                pairs.sort();
                circuits.push(MeasCircuit {
                    rotated_pairs: pairs,
                });
            }
        }
        for round in complete_graph_rounds(ni) {
            let mut pairs = Vec::new();
            for (i, j) in round {
                for offset in [0, m] {
                    let pair = (offset + i, offset + j);
                    pairs.push(pair);
                    pair_circuit.insert(pair, circuits.len());
                }
            }
            pairs.sort();
            circuits.push(MeasCircuit {
                rotated_pairs: pairs,
            });
        }
    } else {
        for offset in [0, m] {
            for i in 0..ni {
                for b in 0..nb {
                    let pair = (offset + i, offset + ni + b);
                    pair_circuit.insert(pair, circuits.len());
                    circuits.push(MeasCircuit {
                        rotated_pairs: vec![pair],
                    });
                }
            }
            for i in 0..ni {
                for j in (i + 1)..ni {
                    let pair = (offset + i, offset + j);
                    pair_circuit.insert(pair, circuits.len());
                    circuits.push(MeasCircuit {
                        rotated_pairs: vec![pair],
                    });
                }
            }
        }
    }

    let hamiltonian = build_hamiltonian(params)?;
    let mut assignments = Vec::new();
    for (label, term) in hamiltonian
        .term_labels()
        .into_iter()
        .zip(hamiltonian.terms())
    {
        debug_assert!(term.coeff.im.abs() < 1e-12);
        let coeff = term.coeff.re;
        let xy: Vec<(usize, PauliOp)> = term
            .factors
            .iter()
            .filter(|(_, op)| matches!(op, PauliOp::X | PauliOp::Y))
            .map(|(&q, &op)| (q, op))
            .collect();
        if xy.is_empty() {
            let support: Vec<usize> = term.factors.keys().copied().collect();
            assignments.push(Assignment {
                label,
                coeff,
                circuit: 0,
                estimator: Estimator::ZParity { support },
            });
            continue;
        }
        if xy.len() == 2 && xy[0].1 == xy[1].1 {
            let (mu, nu) = (xy[0].0, xy[1].0);
            let string: Vec<usize> = term
                .factors
                .iter()
                .filter(|(_, op)| matches!(op, PauliOp::Z))
                .map(|(&q, _)| q)
                .collect();
            let circuit = *pair_circuit
                .get(&(mu, nu))
                .ok_or(MeasureError::UncoveredPair(mu, nu))?;
            assignments.push(Assignment {
                label,
                coeff,
                circuit,
                estimator: Estimator::Hopping { mu, nu, string },
            });
            continue;
        }
        return Err(MeasureError::UnsupportedTerm(label));
    }

    let plan = MeasPlan {
        n_qubits: nq,
        n_imp: ni,
        n_bath: nb,
        parallel,
        circuits,
        assignments,
    };
    debug_assert!(plan.validate().is_ok());
    Ok(plan)
}

fn mask_of(qubits: &[usize]) -> usize {
    qubits.iter().fold(0usize, |m, &q| m | (1 << q))
}

impl Estimator {
    /// Value contributed by one readout bitstring.
    pub fn value(&self, bits: usize) -> f64 {
        match self {
            Estimator::ZParity { support } => parity_sign(bits & mask_of(support)),
            Estimator::Hopping { mu, nu, string } => {
                let z_mu = if bits & (1 << mu) != 0 { -1.0 } else { 1.0 };
                let z_nu = if bits & (1 << nu) != 0 { -1.0 } else { 1.0 };
                0.5 * (z_mu - z_nu) * parity_sign(bits & mask_of(string))
            }
        }
    }
}

fn parity_sign(masked: usize) -> f64 {
    if masked.count_ones() & 1 == 1 {
        -1.0
    } else {
        1.0
    }
}

fn rotated_state(prep_state: &State, circuit: &MeasCircuit) -> Result<State, SimError> {
    let mut state = prep_state.clone();
    for &(a, b) in &circuit.rotated_pairs {
        apply_unitary(
            &mut state,
            &Gate::Givens {
                a,
                b,
                theta: -std::f64::consts::FRAC_PI_4,
            },
        )?;
    }
    Ok(state)
}

/// Register occupations `(N_up, N_down)` of a sector state, rounded from
/// expectation values.
fn register_weights(state: &State) -> (u32, u32) {
    let m = state.n_qubits() / 2;
    let mut up = 0.0;
    let mut down = 0.0;
    for (idx, amp) in state.amplitudes().iter().enumerate() {
        let p = amp.norm_sqr();
        up += p * ((idx & ((1 << m) - 1)).count_ones() as f64);
        down += p * ((idx >> m).count_ones() as f64);
    }
    (up.round() as u32, down.round() as u32)
}

fn bits_match_sector(bits: usize, m: usize, weights: (u32, u32)) -> bool {
    let up = (bits & ((1 << m) - 1)).count_ones();
    let down = (bits >> m).count_ones();
    (up, down) == weights
}

/// Per-term detail row of an estimation run.
#[derive(Clone, Debug, Serialize)]
pub struct TermEstimate {
    pub label: String,
    pub coeff: f64,
    pub circuit: usize,
    pub estimate: f64,
    /// Per-shot variance of this term's estimator (exact mode: analytic).
    pub variance: f64,
}

/// Full estimation output.
#[derive(Clone, Debug)]
pub struct EnergyEstimate {
    pub energy: f64,
    pub kept_fraction: f64,
    pub terms: Vec<TermEstimate>,
    /// Analytic per-shot variance of the summed estimator, by circuit.
    pub circuit_variance: Vec<f64>,
}

impl EnergyEstimate {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("term,coefficient,estimate,variance,kept_fraction\n");
        for t in &self.terms {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                t.label, t.coeff, t.estimate, t.variance, self.kept_fraction
            ));
        }
        out
    }
}

/// Infinite-shot limit: exact rotated-state probabilities instead of
/// sampling.
pub fn estimate_energy_exact(
    prep: &Circuit,
    plan: &MeasPlan,
    post_select: bool,
) -> Result<EnergyEstimate, MeasureError> {
    let (prep_state, _) = prep.run(&State::zero(plan.n_qubits))?;
    estimate_energy_exact_from(&prep_state, plan, post_select)
}

pub fn estimate_energy_exact_from(
    prep_state: &State,
    plan: &MeasPlan,
    post_select: bool,
) -> Result<EnergyEstimate, MeasureError> {
    let m = plan.n_qubits / 2;
    let weights = register_weights(prep_state);
    let mut terms = Vec::with_capacity(plan.assignments.len());
    let mut circuit_variance = vec![0.0; plan.circuits.len()];
    let mut energy = 0.0;
    let mut kept_min: f64 = 1.0;
    for (cidx, circuit) in plan.circuits.iter().enumerate() {
        let rotated = rotated_state(prep_state, circuit)?;
        let mut kept = 0.0;
        let mut sum_mean = 0.0;
        let mut sum_sq = 0.0;
        let members: Vec<&Assignment> = plan
            .assignments
            .iter()
            .filter(|a| a.circuit == cidx)
            .collect();
        let mut member_means = vec![0.0; members.len()];
        let mut member_sq = vec![0.0; members.len()];
        for (bits, amp) in rotated.amplitudes().iter().enumerate() {
            let p = amp.norm_sqr();
            if p == 0.0 {
                continue;
            }
            if post_select && !bits_match_sector(bits, m, weights) {
                continue;
            }
            kept += p;
            let mut shot_total = 0.0;
            for (k, a) in members.iter().enumerate() {
                let v = a.coeff * a.estimator.value(bits);
                member_means[k] += p * v;
                member_sq[k] += p * v * v;
                shot_total += v;
            }
            sum_mean += p * shot_total;
            sum_sq += p * shot_total * shot_total;
        }
        if kept <= 0.0 {
            return Err(MeasureError::AllShotsDiscarded);
        }
        kept_min = kept_min.min(kept);
        // conditional expectations given the kept branch
        let mean = sum_mean / kept;
        energy += mean;
        circuit_variance[cidx] = (sum_sq / kept - mean * mean).max(0.0);
        for (k, a) in members.iter().enumerate() {
            let em = member_means[k] / kept;
            terms.push(TermEstimate {
                label: a.label.clone(),
                coeff: a.coeff,
                circuit: cidx,
                estimate: em,
                variance: (member_sq[k] / kept - em * em).max(0.0),
            });
        }
    }
    Ok(EnergyEstimate {
        energy,
        kept_fraction: kept_min,
        terms,
        circuit_variance,
    })
}

/// Shot-sampled energy estimate: `shots` readouts per plan circuit, with
/// optional symmetry post-selection.
pub fn estimate_energy(
    prep: &Circuit,
    plan: &MeasPlan,
    shots: usize,
    post_select: bool,
    rng: &mut impl Rng,
) -> Result<(f64, f64), MeasureError> {
    let (prep_state, _) = prep.run(&State::zero(plan.n_qubits))?;
    let m = plan.n_qubits / 2;
    let weights = register_weights(&prep_state);
    let mut energy = 0.0;
    let mut total = 0usize;
    let mut kept_total = 0usize;
    for (cidx, circuit) in plan.circuits.iter().enumerate() {
        let rotated = rotated_state(&prep_state, circuit)?;
        let counts = rotated.sample(shots, rng);
        let members: Vec<&Assignment> = plan
            .assignments
            .iter()
            .filter(|a| a.circuit == cidx)
            .collect();
        let mut kept = 0usize;
        let mut acc = 0.0;
        for (&bits, &n) in &counts {
            total += n;
            if post_select && !bits_match_sector(bits, m, weights) {
                continue;
            }
            kept += n;
            let mut shot_total = 0.0;
            for a in &members {
                shot_total += a.coeff * a.estimator.value(bits);
            }
            acc += shot_total * n as f64;
        }
        if kept == 0 {
            return Err(MeasureError::AllShotsDiscarded);
        }
        kept_total += kept;
        energy += acc / kept as f64;
    }
    Ok((energy, kept_total as f64 / total as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::{build_spa, build_topology, Connectivity};
    use crate::model::ed::sector_ground;
    use crate::model::{sample_params, symmetry_ops, Sector};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn sector_prep(params: &AimParams, sector: &Sector, seed: u64) -> Circuit {
        let topo = build_topology(params.n_imp, params.n_bath, Connectivity::SquareNn).unwrap();
        let spa = build_spa(&topo, 2, sector).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let theta: Vec<f64> = (0..spa.parameter_count())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        spa.bind(&theta).unwrap()
    }

    #[test]
    fn circuit_count_formulas() {
        let p13 = sample_params(0, 1, 3);
        assert_eq!(plan_measurements(&p13, false).unwrap().n_circuits(), 7);
        assert_eq!(plan_measurements(&p13, true).unwrap().n_circuits(), 4);
        let p10 = AimParams::new(1, 0, vec![vec![1.0]], vec![2.0], vec![vec![]], vec![]).unwrap();
        assert_eq!(plan_measurements(&p10, false).unwrap().n_circuits(), 1);
        assert_eq!(plan_measurements(&p10, true).unwrap().n_circuits(), 1);
        let p22 = sample_params(1, 2, 2);
        let unpar = plan_measurements(&p22, false).unwrap();
        assert_eq!(unpar.n_circuits(), 11); // 1 + 2*2*2 hopping + 2 imp-imp
        let par = plan_measurements(&p22, true).unwrap();
        assert!(par.n_circuits() <= unpar.n_circuits());
        assert!(par.n_circuits() >= 3);
        // chi'(K_{2,2}) = 2 plus chi'(K_2) = 1 plus the Z circuit
        assert_eq!(par.n_circuits(), 4);
    }

    #[test]
    fn every_term_covered_exactly_once() {
        for parallel in [false, true] {
            let params = sample_params(3, 1, 2);
            let plan = plan_measurements(&params, parallel).unwrap();
            plan.validate().unwrap();
            let h = build_hamiltonian(&params).unwrap();
            assert_eq!(plan.assignments.len(), h.terms().len());
        }
    }

    #[test]
    fn rotated_operator_identity_and_symmetry() {
        let op = rotated_operator((0, 1), 4);
        let (n_plus, n_minus) = symmetry_ops(4).unwrap();
        let dense = op.to_dense();
        for sym in [n_plus.to_dense(), n_minus.to_dense()] {
            assert!((&dense * &sym - &sym * &dense).norm() < 1e-12);
        }
        // acting on the empty pair annihilates it
        let vac = State::zero(4);
        let out = vac.apply_sum(&op).unwrap();
        assert!(out.norm() < 1e-14);
    }

    #[test]
    fn plan_operators_commute_with_symmetries() {
        let params = sample_params(8, 1, 2);
        let nq = params.n_qubits();
        let (n_plus, n_minus) = symmetry_ops(nq).unwrap();
        let (np_d, nm_d) = (n_plus.to_dense(), n_minus.to_dense());
        for plan in [
            plan_measurements(&params, false).unwrap(),
            plan_measurements(&params, true).unwrap(),
        ] {
            for circuit in &plan.circuits {
                for &pair in &circuit.rotated_pairs {
                    let dense = rotated_operator(pair, nq).to_dense();
                    assert!((&dense * &np_d - &np_d * &dense).norm() < 1e-12);
                    assert!((&dense * &nm_d - &nm_d * &dense).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn exact_estimate_reproduces_expectation() {
        for (seed, nb) in [(0u64, 1), (1, 2), (7, 3)] {
            let params = sample_params(seed, 1, nb);
            let h = build_hamiltonian(&params).unwrap();
            let sector = Sector { n_total: 2, s_z: 0 };
            let prep = sector_prep(&params, &sector, seed);
            let (state, _) = prep.run(&State::zero(params.n_qubits())).unwrap();
            let exact = state.expectation(&h).unwrap().re;
            for parallel in [false, true] {
                let plan = plan_measurements(&params, parallel).unwrap();
                for post_select in [false, true] {
                    let est = estimate_energy_exact(&prep, &plan, post_select).unwrap();
                    assert!(
                        (est.energy - exact).abs() < 1e-10,
                        "seed {seed} nb {nb} parallel {parallel}: {} vs {exact}",
                        est.energy
                    );
                    assert!((est.kept_fraction - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn noiseless_post_selection_keeps_everything() {
        let params = sample_params(5, 1, 2);
        let prep = sector_prep(&params, &Sector { n_total: 3, s_z: 1 }, 11);
        let plan = plan_measurements(&params, true).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        let (_, kept) = estimate_energy(&prep, &plan, 2000, true, &mut rng).unwrap();
        assert!((kept - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sampled_estimate_within_five_sigma() {
        let params = sample_params(4, 1, 1);
        let sector = Sector { n_total: 2, s_z: 0 };
        let prep = sector_prep(&params, &sector, 3);
        let (state, _) = prep.run(&State::zero(4)).unwrap();
        let h = build_hamiltonian(&params).unwrap();
        let exact = state.expectation(&h).unwrap().re;
        let plan = plan_measurements(&params, false).unwrap();
        let detail = estimate_energy_exact(&prep, &plan, true).unwrap();
        let shots = 10_000usize;
        let sigma = (detail
            .circuit_variance
            .iter()
            .map(|v| v / shots as f64)
            .sum::<f64>())
        .sqrt();
        let mut rng = ChaCha12Rng::seed_from_u64(99);
        let (energy, _) = estimate_energy(&prep, &plan, shots, true, &mut rng).unwrap();
        assert!(
            (energy - exact).abs() < 5.0 * sigma,
            "estimate {energy} vs {exact}, sigma {sigma}"
        );
    }

    #[test]
    fn ground_state_energy_via_plan() {
        // end to end on the exact sector ground state
        let params = sample_params(6, 1, 1);
        let sector = Sector { n_total: 2, s_z: 0 };
        let (e0, gs) = sector_ground(&params, &sector).unwrap();
        let plan = plan_measurements(&params, true).unwrap();
        let est = estimate_energy_exact_from(&gs, &plan, true).unwrap();
        assert!((est.energy - e0).abs() < 1e-10);
    }

    #[test]
    fn complete_graph_round_properties() {
        for n in 2..7 {
            let rounds = complete_graph_rounds(n);
            assert_eq!(rounds.len(), if n % 2 == 0 { n - 1 } else { n });
            let mut all: Vec<(usize, usize)> = rounds.iter().flatten().copied().collect();
            all.sort();
            let mut expect = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    expect.push((i, j));
                }
            }
            assert_eq!(all, expect, "K_{n} edges covered exactly once");
            for round in &rounds {
                let mut seen = std::collections::HashSet::new();
                for &(a, b) in round {
                    assert!(seen.insert(a) && seen.insert(b), "matching violated");
                }
            }
        }
    }

    #[test]
    fn plan_json_round_trip() {
        let params = sample_params(2, 1, 2);
        let plan = plan_measurements(&params, true).unwrap();
        let back = MeasPlan::from_json(&plan.to_json()).unwrap();
        assert_eq!(plan, back);
    }

    #[test]
    fn estimation_csv_has_header_and_rows() {
        let params = sample_params(2, 1, 1);
        let prep = sector_prep(&params, &Sector { n_total: 2, s_z: 0 }, 1);
        let plan = plan_measurements(&params, false).unwrap();
        let est = estimate_energy_exact(&prep, &plan, true).unwrap();
        let csv = est.to_csv();
        assert!(csv.starts_with("term,coefficient,estimate,variance,kept_fraction\n"));
        assert_eq!(csv.lines().count(), 1 + plan.assignments.len());
    }
}
