//! Sector-constrained variational ground-state search: per-sector energy
//! minimization, the global minimum over sectors, depth sweeps, and the
//! trainability metrics.

pub mod bfgs;

use crate::ansatz::{build_spa, build_topology, AnsatzError, Connectivity, SpaCircuit};
use crate::model::ed::{exact_diagonalize, sector_ground, EdError, EdResult};
use crate::model::{AimParams, ModelError, Sector};
use crate::sim::{CompiledSum, SimError, State};
use bfgs::BfgsOptions;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum VqeError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ed(#[from] EdError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Outcome of one sector minimization.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VqeResult {
    pub sector: Sector,
    pub depth: usize,
    pub theta_star: Vec<f64>,
    /// Best variational energy (eV).
    pub energy: f64,
    /// Optimizer iterations, summed over restarts.
    pub nit: usize,
    /// Objective evaluations, summed over restarts.
    pub n_fev: usize,
    /// `1 - |<candidate|sector ED ground>|`.
    pub overlap_error: f64,
    pub restarts_used: usize,
}

/// Per-depth progress entry of a ground search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DepthTrace {
    pub depth: usize,
    pub delta: f64,
    pub energy: f64,
    pub sector: Sector,
}

/// Result of the sector-swept ground-state search.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroundSearchReport {
    /// Final per-sector results (deepest depth reached), sector-sorted.
    pub per_sector: Vec<VqeResult>,
    pub winning_sector: Sector,
    pub global_energy: f64,
    /// Overlap error of the winning candidate against the ED ground state.
    pub delta: f64,
    /// Smallest depth that met the target, when converged.
    pub d_star: Option<usize>,
    pub converged: bool,
    pub nit_total: usize,
    pub n_fev_total: usize,
    /// `nit_total / (2 (sites + 1)^2)`.
    pub nit_normalized: f64,
    /// ED ground state is (near-)degenerate; sweep statistics should skip
    /// this seed.
    pub degenerate: bool,
    pub delta_trace: Vec<DepthTrace>,
}

#[derive(Clone, Debug)]
pub struct GroundSearchOptions {
    pub restarts: usize,
    /// Initial parameters are drawn uniformly from `[-init_scale, init_scale]`.
    pub init_scale: f64,
    pub bfgs: BfgsOptions,
    pub connectivity: Option<Connectivity>,
    /// Seed for all restart randomness; combined with sector/depth/restart
    /// indices so results are schedule-independent.
    pub base_seed: u64,
}

impl Default for GroundSearchOptions {
    fn default() -> Self {
        GroundSearchOptions {
            restarts: 5,
            init_scale: 0.1,
            bfgs: BfgsOptions::default(),
            connectivity: None,
            base_seed: 0,
        }
    }
}

/// Overlap error `delta = 1 - |<candidate|reference>|`.
pub fn overlap_error(candidate: &State, reference: &State) -> f64 {
    1.0 - candidate.inner(reference).norm()
}

/// The paper-style normalization of total iteration count by the sector
/// count `2 (sites + 1)^2`.
pub fn normalized_iterations(report: &GroundSearchReport, n_sites: usize) -> f64 {
    report.nit_total as f64 / sector_normalization(n_sites)
}

pub fn sector_normalization(n_sites: usize) -> f64 {
    2.0 * ((n_sites + 1) as f64).powi(2)
}

pub fn default_connectivity(n_imp: usize) -> Connectivity {
    if n_imp <= 1 {
        Connectivity::SquareNn
    } else {
        Connectivity::SquareNnn
    }
}

/// splitmix64 chain over a tag list; deterministic stream derivation.
pub fn stream_seed(parts: &[u64]) -> u64 {
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        state ^= p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        state = z ^ (z >> 31);
    }
    state
}

/// Statevector objective for one bound ansatz.
pub(crate) struct SpaObjective<'a> {
    spa: &'a SpaCircuit,
    h: &'a CompiledSum,
    init: State,
    pub n_fev: usize,
}

impl<'a> SpaObjective<'a> {
    pub fn new(spa: &'a SpaCircuit, h: &'a CompiledSum) -> Self {
        SpaObjective {
            spa,
            h,
            init: State::zero(spa.topology.n_qubits()),
            n_fev: 0,
        }
    }

    pub fn state(&self, theta: &[f64]) -> State {
        let circuit = self.spa.bind(theta).expect("matching parameter count");
        let (state, _) = circuit.run(&self.init).expect("unitary circuit");
        state
    }

    pub fn energy(&mut self, theta: &[f64]) -> f64 {
        self.n_fev += 1;
        let state = self.state(theta);
        self.h.expectation(&state).expect("register match").re
    }
}

struct CandidateOutcome {
    theta: Vec<f64>,
    energy: f64,
    nit: usize,
    n_fev: usize,
}

/// Minimize one sector over a list of starting points; best energy wins.
fn minimize_over_starts(
    spa: &SpaCircuit,
    h: &CompiledSum,
    starts: &[Vec<f64>],
    bfgs_opts: &BfgsOptions,
) -> CandidateOutcome {
    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut nit = 0;
    let mut n_fev = 0;
    for x0 in starts {
        let mut obj = SpaObjective::new(spa, h);
        let outcome = {
            let objective = |theta: &[f64]| obj.energy(theta);
            // the closure borrows obj mutably for the duration of the run
            let mut obj_ref = objective;
            bfgs::minimize(&mut obj_ref, x0, bfgs_opts)
        };
        nit += outcome.iterations;
        n_fev += obj.n_fev;
        if best.as_ref().is_none_or(|(_, e)| outcome.f < *e) {
            best = Some((outcome.x, outcome.f));
        }
    }
    let (theta, energy) = best.expect("at least one start");
    CandidateOutcome {
        theta,
        energy,
        nit,
        n_fev,
    }
}

fn random_start(len: usize, scale: f64, rng: &mut impl Rng) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-scale..scale)).collect()
}

/// Inner-loop minimization of `<H>` within one sector at fixed depth.
/// Starts are `restarts` random initializations near the identity.
pub fn minimize_sector(
    params: &AimParams,
    sector: &Sector,
    depth: usize,
    restarts: usize,
    rng: &mut impl Rng,
) -> Result<VqeResult, VqeError> {
    let topology = build_topology(
        params.n_imp,
        params.n_bath,
        default_connectivity(params.n_imp),
    )?;
    let h = CompiledSum::new(&crate::model::build_hamiltonian(params)?);
    let opts = GroundSearchOptions::default();
    let spa = build_spa(&topology, depth, sector)?;
    let starts: Vec<Vec<f64>> = (0..restarts.max(1))
        .map(|_| random_start(spa.parameter_count(), opts.init_scale, rng))
        .collect();
    let outcome = minimize_over_starts(&spa, &h, &starts, &opts.bfgs);
    let (_, reference) = sector_ground(params, sector)?;
    let candidate = SpaObjective::new(&spa, &h).state(&outcome.theta);
    Ok(VqeResult {
        sector: *sector,
        depth,
        overlap_error: overlap_error(&candidate, &reference),
        energy: outcome.energy,
        theta_star: outcome.theta,
        nit: outcome.nit,
        n_fev: outcome.n_fev,
        restarts_used: restarts.max(1),
    })
}

/// Sectors scored by the ground search: the unique non-trivial sectors plus
/// the two one-dimensional trivial ones, whose energies are exact single
/// determinants but still candidates for the global minimum.
pub fn search_sectors(n_qubits: usize) -> Result<Vec<Sector>, ModelError> {
    let mut sectors = vec![Sector::new(0, 0, n_qubits)?];
    sectors.extend(crate::model::enumerate_sectors(n_qubits, true)?);
    sectors.push(Sector::new(n_qubits, 0, n_qubits)?);
    Ok(sectors)
}

/// Depth-swept, sector-swept variational ground-state search with warm
/// starts. Converges when the candidate overlap error drops to
/// `delta_target`; otherwise reports the best achieved depth trace.
pub fn ground_search(
    params: &AimParams,
    delta_target: f64,
    d_max: usize,
) -> Result<GroundSearchReport, VqeError> {
    ground_search_with(params, delta_target, d_max, &GroundSearchOptions::default())
}

pub fn ground_search_with(
    params: &AimParams,
    delta_target: f64,
    d_max: usize,
    opts: &GroundSearchOptions,
) -> Result<GroundSearchReport, VqeError> {
    let nq = params.n_qubits();
    let ed = exact_diagonalize(params)?;
    let connectivity = opts
        .connectivity
        .unwrap_or_else(|| default_connectivity(params.n_imp));
    let topology = build_topology(params.n_imp, params.n_bath, connectivity)?;
    let h = CompiledSum::new(&crate::model::build_hamiltonian(params)?);
    let sectors = search_sectors(nq)?;
    let param_seed = params.seed.unwrap_or(0);

    let mut warm: Vec<Option<Vec<f64>>> = vec![None; sectors.len()];
    let mut latest: Vec<Option<VqeResult>> = vec![None; sectors.len()];
    let mut nit_total = 0usize;
    let mut n_fev_total = 0usize;
    let mut delta_trace = Vec::new();
    let mut d_star = None;

    for depth in 1..=d_max {
        for (k, sector) in sectors.iter().enumerate() {
            let spa = build_spa(&topology, depth, sector)?;
            let p = spa.parameter_count();
            let mut starts = Vec::with_capacity(opts.restarts);
            if let Some(prev) = &warm[k] {
                // previous depth's parameters extended by an identity layer
                let mut padded = prev.clone();
                padded.resize(p, 0.0);
                starts.push(padded);
            }
            while starts.len() < opts.restarts.max(1) {
                let mut rng = ChaCha12Rng::seed_from_u64(stream_seed(&[
                    opts.base_seed,
                    param_seed,
                    sector.n_total as u64,
                    sector.s_z as u64,
                    depth as u64,
                    starts.len() as u64,
                ]));
                starts.push(random_start(p, opts.init_scale, &mut rng));
            }
            let outcome = minimize_over_starts(&spa, &h, &starts, &opts.bfgs);
            nit_total += outcome.nit;
            n_fev_total += outcome.n_fev;
            warm[k] = Some(outcome.theta.clone());
            let (_, reference) = sector_ground(params, sector)?;
            let candidate = SpaObjective::new(&spa, &h).state(&outcome.theta);
            latest[k] = Some(VqeResult {
                sector: *sector,
                depth,
                overlap_error: overlap_error(&candidate, &reference),
                energy: outcome.energy,
                theta_star: outcome.theta,
                nit: outcome.nit,
                n_fev: outcome.n_fev,
                restarts_used: opts.restarts.max(1),
            });
        }
        let (winner_idx, winner) = pick_winner(&latest);
        let spa = build_spa(&topology, depth, &sectors[winner_idx])?;
        let candidate = SpaObjective::new(&spa, &h).state(&winner.theta_star);
        let delta = overlap_error(&candidate, &ed.ground_state);
        delta_trace.push(DepthTrace {
            depth,
            delta,
            energy: winner.energy,
            sector: winner.sector,
        });
        if delta <= delta_target {
            d_star = Some(depth);
            break;
        }
    }

    let (_, winner) = pick_winner(&latest);
    let per_sector: Vec<VqeResult> = latest.into_iter().map(|r| r.expect("ran")).collect();
    let last = delta_trace.last().expect("d_max >= 1");
    Ok(GroundSearchReport {
        winning_sector: winner.sector,
        global_energy: winner.energy,
        delta: last.delta,
        converged: d_star.is_some(),
        d_star,
        nit_total,
        n_fev_total,
        nit_normalized: nit_total as f64 / sector_normalization(params.n_sites()),
        degenerate: ed.degenerate,
        delta_trace,
        per_sector,
    })
}

/// Lowest energy wins; ties within 1e-10 break toward the lexicographically
/// smallest `(N, |Sz|)`.
fn pick_winner(results: &[Option<VqeResult>]) -> (usize, VqeResult) {
    let mut best: Option<(usize, &VqeResult)> = None;
    for (idx, r) in results.iter().enumerate() {
        let Some(r) = r else { continue };
        match best {
            None => best = Some((idx, r)),
            Some((_, b)) => {
                let key = |v: &VqeResult| (v.sector.n_total, v.sector.s_z.unsigned_abs());
                if r.energy < b.energy - 1e-10
                    || ((r.energy - b.energy).abs() <= 1e-10 && key(r) < key(b))
                {
                    best = Some((idx, r));
                }
            }
        }
    }
    let (idx, r) = best.expect("nonempty");
    (idx, r.clone())
}

/// Convenience: global ED-versus-VQE ground state pair used by the Green's
/// function pipeline.
#[derive(Clone, Debug)]
pub struct VariationalGround {
    pub state: State,
    pub sector: Sector,
    pub energy: f64,
    pub depth: usize,
    pub theta: Vec<f64>,
    pub report: GroundSearchReport,
    pub ed: EdResult,
}

/// Run a ground search at fixed depth (no sweep) and hand back the prepared
/// state alongside the ED oracle data.
pub fn prepare_ground(
    params: &AimParams,
    depth: usize,
    opts: &GroundSearchOptions,
) -> Result<VariationalGround, VqeError> {
    // delta target 0 never triggers early exit below d_max = depth
    let report = ground_search_with(params, 0.0, depth, opts)?;
    let ed = exact_diagonalize(params)?;
    let connectivity = opts
        .connectivity
        .unwrap_or_else(|| default_connectivity(params.n_imp));
    let topology = build_topology(params.n_imp, params.n_bath, connectivity)?;
    let winner = report
        .per_sector
        .iter()
        .find(|r| r.sector == report.winning_sector)
        .expect("winner present");
    let spa = build_spa(&topology, winner.depth, &winner.sector)?;
    let h = CompiledSum::new(&crate::model::build_hamiltonian(params)?);
    let state = SpaObjective::new(&spa, &h).state(&winner.theta_star);
    Ok(VariationalGround {
        state,
        sector: winner.sector,
        energy: winner.energy,
        depth: winner.depth,
        theta: winner.theta_star.clone(),
        report,
        ed,
    })
}
