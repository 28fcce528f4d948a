//! Frequency-domain impurity Green's functions: classical Lanczos chains,
//! variational Lanczos with the symmetry-preserving ansatz, continued
//! fractions, and retarded Green's function assembly.

use crate::ansatz::{build_spa, build_topology, AnsatzError};
use crate::model::ed::{exact_diagonalize, EdError};
use crate::model::pauli::PauliSum;
use crate::model::{basis_sector, build_hamiltonian, AimParams, ModelError, Sector};
use crate::sim::{CompiledSum, SimError, State, ZERO_BRANCH_TOL};
use crate::vqe::bfgs::{self, BfgsOptions};
use crate::vqe::{stream_seed, VariationalGround, VqeError};
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

/// Default line-broadening parameter (eV).
pub const DEFAULT_ETA: f64 = 0.1;

/// Default Lanczos termination threshold on `b_n`.
pub const DEFAULT_B_TOL: f64 = 1e-8;

#[derive(Debug, thiserror::Error)]
pub enum GreensError {
    #[error("Lanczos breakdown: b^2 = {0:.3e} is negative beyond tolerance")]
    NumericalBreakdown(f64),
    #[error("continued fraction hit a pole (denominator magnitude {0:.3e})")]
    PoleHit(f64),
    #[error("frequency grids or broadenings differ between the two samples")]
    GridMismatch,
    #[error("initial vector is not normalized (norm {0})")]
    UnnormalizedInput(f64),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Ed(#[from] EdError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Ansatz(#[from] AnsatzError),
    #[error(transparent)]
    Vqe(#[from] VqeError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// `b_n` fell below tolerance: the Krylov space closed.
    BTolerance,
    /// The subspace dimension bound was reached.
    MaxDim,
    /// The iteration budget ran out.
    MaxIter,
}

/// Tridiagonal Lanczos coefficients `(a_n, b_n)` with `b_0 = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LanczosChain {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub termination: Termination,
}

impl LanczosChain {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// Three-term Lanczos recursion with full reorthogonalization against all
/// stored vectors. `h_tilde` must be Hermitian; `phi` normalized.
pub fn classical_lanczos(
    h_tilde: &PauliSum,
    phi: &State,
    max_n: usize,
    b_tol: f64,
) -> Result<LanczosChain, GreensError> {
    let norm = phi.norm();
    if (norm - 1.0).abs() > 1e-10 {
        return Err(GreensError::UnnormalizedInput(norm));
    }
    let h = CompiledSum::new(h_tilde);
    let dim_bound = 1usize << phi.n_qubits();
    let mut vectors: Vec<State> = vec![phi.clone()];
    let mut a: Vec<f64> = Vec::new();
    let mut b: Vec<f64> = vec![0.0];
    let mut h_chi = h.apply(phi)?;
    a.push(phi.inner(&h_chi).re);

    loop {
        let n = a.len();
        if n >= max_n {
            return Ok(LanczosChain {
                a,
                b,
                termination: Termination::MaxIter,
            });
        }
        if n >= dim_bound {
            return Ok(LanczosChain {
                a,
                b,
                termination: Termination::MaxDim,
            });
        }
        let chi_prev = &vectors[n - 1];
        // Eq.-6 diagnostic form of b_n^2; large negative values signal a bug
        let h2 = h_chi.inner(&h_chi).re;
        let b2_check = h2 - a[n - 1] * a[n - 1] - b[n - 1] * b[n - 1];
        if b2_check < -1e-10 {
            return Err(GreensError::NumericalBreakdown(b2_check));
        }
        // residual w = (H - a_{n-1}) chi_{n-1} - b_{n-1} chi_{n-2}
        let mut w = h_chi.clone();
        {
            let amps = w.amplitudes_mut();
            for (i, amp) in amps.iter_mut().enumerate() {
                *amp -= a[n - 1] * chi_prev.amplitudes()[i];
                if n >= 2 {
                    *amp -= b[n - 1] * vectors[n - 2].amplitudes()[i];
                }
            }
        }
        // full reorthogonalization
        for v in &vectors {
            let overlap = v.inner(&w);
            let amps = w.amplitudes_mut();
            for (i, amp) in amps.iter_mut().enumerate() {
                *amp -= overlap * v.amplitudes()[i];
            }
        }
        let b_n = w.norm();
        if b_n < b_tol {
            return Ok(LanczosChain {
                a,
                b,
                termination: Termination::BTolerance,
            });
        }
        w.normalize();
        h_chi = h.apply(&w)?;
        a.push(w.inner(&h_chi).re);
        b.push(b_n);
        vectors.push(w);
    }
}

/// Continued fraction of Eq.-5 form, evaluated bottom-up from the deepest
/// level.
pub fn continued_fraction(chain: &LanczosChain, z: Complex64) -> Result<Complex64, GreensError> {
    assert!(!chain.is_empty(), "chain must be nonempty");
    let last = chain.len() - 1;
    let mut f = z - chain.a[last];
    for k in (0..last).rev() {
        if f.norm() < 1e-300 {
            return Err(GreensError::PoleHit(f.norm()));
        }
        let b2 = chain.b[k + 1] * chain.b[k + 1];
        f = z - chain.a[k] - b2 / f;
    }
    if f.norm() < 1e-300 {
        return Err(GreensError::PoleHit(f.norm()));
    }
    Ok(Complex64::new(1.0, 0.0) / f)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Particle addition, `c^dag |GS>`.
    Plus,
    /// Particle removal, `c |GS>`.
    Minus,
}

/// A prepared initial Krylov vector: the normalized `|phi+->` and its
/// squared unrenormalized modulus. `state` is `None` on the zero branch.
#[derive(Clone, Debug)]
pub struct KrylovBranch {
    pub state: Option<State>,
    pub norm_sq: f64,
}

/// Prepare `|phi+->` by deterministic projection and report the branch
/// weight `(1 +- <Z_orbital>)/2` computed independently from the ground
/// state.
pub fn initial_krylov(gs: &State, orbital: usize, branch: Branch) -> KrylovBranch {
    let z_orb = 1.0 - 2.0 * gs.prob_one(orbital);
    let norm_sq = match branch {
        Branch::Plus => (1.0 + z_orb) / 2.0,
        Branch::Minus => (1.0 - z_orb) / 2.0,
    };
    if norm_sq < ZERO_BRANCH_TOL * ZERO_BRANCH_TOL {
        return KrylovBranch {
            state: None,
            norm_sq: norm_sq.max(0.0),
        };
    }
    let dagger = matches!(branch, Branch::Plus);
    match gs.ladder_projected(orbital, dagger) {
        Some((state, _)) => KrylovBranch {
            state: Some(state),
            norm_sq,
        },
        None => KrylovBranch {
            state: None,
            norm_sq: norm_sq.max(0.0),
        },
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Exact,
    Variational,
}

/// Retarded Green's function samples over a frequency grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GfSamples {
    pub omega: Vec<f64>,
    pub eta: f64,
    #[serde(skip)]
    pub values: Vec<Complex64>,
    pub norm_plus_sq: f64,
    pub norm_minus_sq: f64,
    pub chain_plus: Option<LanczosChain>,
    pub chain_minus: Option<LanczosChain>,
    pub provenance: Provenance,
}

impl GfSamples {
    /// CSV rows `omega,re,im`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("omega,re,im\n");
        for (w, v) in self.omega.iter().zip(self.values.iter()) {
            out.push_str(&format!("{w},{},{}\n", v.re, v.im));
        }
        out
    }

    /// JSON header carrying everything except the bulk samples.
    pub fn header_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("header serializes")
    }

    /// Side-by-side CSV for an exact/variational overlay.
    pub fn combined_csv(exact: &GfSamples, variational: &GfSamples) -> Result<String, GreensError> {
        check_grids(exact, variational)?;
        let mut out = String::from("omega,re_exact,im_exact,re_var,im_var\n");
        for ((w, e), v) in exact
            .omega
            .iter()
            .zip(exact.values.iter())
            .zip(variational.values.iter())
        {
            out.push_str(&format!("{w},{},{},{},{}\n", e.re, e.im, v.re, v.im));
        }
        Ok(out)
    }
}

/// Uniform grid `[lo, hi]` with step `dw` (inclusive of the right edge up to
/// rounding).
pub fn omega_grid(lo: f64, hi: f64, dw: f64) -> Vec<f64> {
    let n = ((hi - lo) / dw).round() as usize;
    (0..=n).map(|k| lo + k as f64 * dw).collect()
}

/// Default reporting grid: [-20, 20] eV at 0.05 eV spacing.
pub fn default_omega_grid() -> Vec<f64> {
    omega_grid(-20.0, 20.0, 0.05)
}

/// Assemble the two-branch retarded function from chains and branch weights:
/// `G(z) = n+ g+(z) - n- g-(-z)` at `z = omega + i eta`.
fn assemble_gf(
    omega: &[f64],
    eta: f64,
    plus: (&Option<LanczosChain>, f64),
    minus: (&Option<LanczosChain>, f64),
) -> Result<Vec<Complex64>, GreensError> {
    let mut values = Vec::with_capacity(omega.len());
    for &w in omega {
        let z = Complex64::new(w, eta);
        let mut g = Complex64::new(0.0, 0.0);
        if let Some(chain) = plus.0 {
            g += plus.1 * continued_fraction(chain, z)?;
        }
        if let Some(chain) = minus.0 {
            g -= minus.1 * continued_fraction(chain, -z)?;
        }
        values.push(g);
    }
    Ok(values)
}

/// Exact-pipeline retarded impurity Green's function: ED ground state,
/// classical Lanczos on both branches, continued-fraction evaluation.
pub fn retarded_gf_exact(
    params: &AimParams,
    orbital: usize,
    omega: &[f64],
    eta: f64,
) -> Result<GfSamples, GreensError> {
    let ed = exact_diagonalize(params)?;
    let h_tilde = build_hamiltonian(params)?
        .add_identity(Complex64::new(-ed.ground_energy, 0.0));
    let max_n = 1usize << params.n_qubits();
    let mut chains: [Option<LanczosChain>; 2] = [None, None];
    let mut norms = [0.0f64; 2];
    for (k, branch) in [Branch::Plus, Branch::Minus].into_iter().enumerate() {
        let kb = initial_krylov(&ed.ground_state, orbital, branch);
        norms[k] = kb.norm_sq;
        if let Some(phi) = kb.state {
            chains[k] = Some(classical_lanczos(&h_tilde, &phi, max_n, DEFAULT_B_TOL)?);
        }
    }
    let values = assemble_gf(
        omega,
        eta,
        (&chains[0], norms[0]),
        (&chains[1], norms[1]),
    )?;
    Ok(GfSamples {
        omega: omega.to_vec(),
        eta,
        values,
        norm_plus_sq: norms[0],
        norm_minus_sq: norms[1],
        chain_plus: chains[0].take(),
        chain_minus: chains[1].take(),
        provenance: Provenance::Exact,
    })
}

#[derive(Clone, Debug)]
pub struct VarLanczosOptions {
    /// Lagrange weights of the three cost terms.
    pub lambdas: (f64, f64, f64),
    pub b_tol: f64,
    pub max_n: usize,
    /// Random restarts tried when the warm start stagnates.
    pub restarts: usize,
    /// A final cost above this marks the iteration as failed.
    pub cost_tol: f64,
    pub bfgs: BfgsOptions,
    pub init_scale: f64,
    pub base_seed: u64,
}

impl Default for VarLanczosOptions {
    fn default() -> Self {
        VarLanczosOptions {
            lambdas: (1.0, 1.0, 1.0),
            b_tol: DEFAULT_B_TOL,
            max_n: 64,
            restarts: 3,
            cost_tol: 1e-6,
            bfgs: BfgsOptions::default(),
            init_scale: 0.1,
            base_seed: 0,
        }
    }
}

/// Outcome of one variational Lanczos run.
#[derive(Clone, Debug)]
pub struct VarLanczosOutcome {
    pub chain: LanczosChain,
    /// `chi_0` (the projected Krylov vector) followed by the variational
    /// states.
    pub states: Vec<State>,
    /// Final cost per variational iteration.
    pub costs: Vec<f64>,
    /// Iterations whose cost stayed above `cost_tol`.
    pub failed_iterations: Vec<usize>,
    /// Largest overlap against vectors older than the two the cost enforces.
    pub max_drift: f64,
    pub norm_sq: f64,
    pub sector: Option<Sector>,
}

/// Variational Lanczos: each new Krylov vector is an SPA state in the
/// particle-shifted sector, found by minimizing the matrix-element/
/// orthogonality cost; `a_n` comes from the shifted Hamiltonian on the
/// variational state and `|b_n|` from the exact recursion evaluated on the
/// previous state.
pub fn variational_lanczos(
    params: &AimParams,
    gs: &VariationalGround,
    orbital: usize,
    branch: Branch,
    depth: usize,
    opts: &VarLanczosOptions,
) -> Result<VarLanczosOutcome, GreensError> {
    let kb = initial_krylov(&gs.state, orbital, branch);
    let Some(chi0) = kb.state else {
        return Ok(VarLanczosOutcome {
            chain: LanczosChain {
                a: vec![],
                b: vec![],
                termination: Termination::BTolerance,
            },
            states: vec![],
            costs: vec![],
            failed_iterations: vec![],
            max_drift: 0.0,
            norm_sq: kb.norm_sq,
            sector: None,
        });
    };
    let nq = params.n_qubits();
    // the projected vector lives in one sector; read it off the support
    let support = chi0
        .amplitudes()
        .iter()
        .position(|a| a.norm_sqr() > 1e-20)
        .expect("nonzero branch");
    let sector = basis_sector(support, nq);
    let dim = crate::model::sector_dimension(&sector, nq)?;

    let h = build_hamiltonian(params)?;
    let h_c = CompiledSum::new(&h);
    let h_tilde = h.add_identity(Complex64::new(-gs.energy, 0.0));
    let ht_c = CompiledSum::new(&h_tilde);

    let topology = build_topology(
        params.n_imp,
        params.n_bath,
        crate::vqe::default_connectivity(params.n_imp),
    )?;
    let spa = build_spa(&topology, depth, &sector)?;
    let p = spa.parameter_count();

    let mut states = vec![chi0];
    let mut a = vec![states[0]
        .inner(&ht_c.apply(&states[0])?)
        .re];
    let mut b = vec![0.0];
    let mut costs = Vec::new();
    let mut failed = Vec::new();
    let mut theta_prev: Vec<f64> = vec![0.0; p];
    let (l1, l2, l3) = opts.lambdas;

    let termination = loop {
        let n = a.len();
        if n >= dim {
            break Termination::MaxDim;
        }
        if n >= opts.max_n {
            break Termination::MaxIter;
        }
        let chi_prev = states[n - 1].clone();
        let ht_chi = ht_c.apply(&chi_prev)?;
        let h2 = ht_chi.inner(&ht_chi).re;
        let b2 = h2 - a[n - 1] * a[n - 1] - b[n - 1] * b[n - 1];
        if b2 < opts.b_tol * opts.b_tol {
            break Termination::BTolerance;
        }
        let b_target = b2.sqrt();
        // fixed vectors entering the cost
        let h_chi = h_c.apply(&chi_prev)?;
        let chi_older = if n >= 2 {
            Some(states[n - 2].clone())
        } else {
            None
        };
        let mut best: Option<(f64, Vec<f64>)> = None;
        for restart in 0..opts.restarts.max(1) {
            let x0 = if restart == 0 {
                theta_prev.clone()
            } else {
                let mut rng = ChaCha12Rng::seed_from_u64(stream_seed(&[
                    opts.base_seed,
                    params.seed.unwrap_or(0),
                    orbital as u64,
                    matches!(branch, Branch::Plus) as u64,
                    n as u64,
                    restart as u64,
                ]));
                (0..p)
                    .map(|_| rng.random_range(-opts.init_scale..opts.init_scale))
                    .collect()
            };
            let cost = |theta: &[f64]| -> f64 {
                let state = {
                    let circuit = spa.bind(theta).expect("parameter count");
                    let (s, _) = circuit.run(&State::zero(nq)).expect("unitary");
                    s
                };
                let me = state.inner(&h_chi).norm();
                let overlap_prev = state.inner(&chi_prev).norm_sqr();
                let mut f = l1 * (me - b_target) * (me - b_target) + l2 * overlap_prev;
                if let Some(older) = &chi_older {
                    f += l3 * state.inner(older).norm_sqr();
                }
                f
            };
            let outcome = bfgs::minimize(cost, &x0, &opts.bfgs);
            if best.as_ref().is_none_or(|(f, _)| outcome.f < *f) {
                best = Some((outcome.f, outcome.x));
            }
            if best.as_ref().is_some_and(|(f, _)| *f <= opts.cost_tol) {
                break;
            }
        }
        let (final_cost, theta_star) = best.expect("at least one restart");
        costs.push(final_cost);
        if final_cost > opts.cost_tol {
            failed.push(n);
        }
        let circuit = spa.bind(&theta_star)?;
        let (chi_n, _) = circuit.run(&State::zero(nq))?;
        a.push(chi_n.inner(&ht_c.apply(&chi_n)?).re);
        b.push(b_target);
        states.push(chi_n);
        theta_prev = theta_star;
    };

    // orthogonality drift against vectors older than the enforced two
    let mut max_drift: f64 = 0.0;
    for n in 0..states.len() {
        for k in 0..n.saturating_sub(2) {
            max_drift = max_drift.max(states[n].inner(&states[k]).norm());
        }
    }

    Ok(VarLanczosOutcome {
        chain: LanczosChain {
            a,
            b,
            termination,
        },
        states,
        costs,
        failed_iterations: failed,
        max_drift,
        norm_sq: kb.norm_sq,
        sector: Some(sector),
    })
}

/// Variational-pipeline retarded Green's function built from a VQE-prepared
/// ground state.
pub fn retarded_gf_variational(
    params: &AimParams,
    gs: &VariationalGround,
    orbital: usize,
    omega: &[f64],
    eta: f64,
    depth: usize,
    opts: &VarLanczosOptions,
) -> Result<(GfSamples, VarLanczosOutcome, VarLanczosOutcome), GreensError> {
    let plus = variational_lanczos(params, gs, orbital, Branch::Plus, depth, opts)?;
    let minus = variational_lanczos(params, gs, orbital, Branch::Minus, depth, opts)?;
    let chain_plus = (!plus.chain.is_empty()).then(|| plus.chain.clone());
    let chain_minus = (!minus.chain.is_empty()).then(|| minus.chain.clone());
    let values = assemble_gf(
        omega,
        eta,
        (&chain_plus, plus.norm_sq),
        (&chain_minus, minus.norm_sq),
    )?;
    Ok((
        GfSamples {
            omega: omega.to_vec(),
            eta,
            values,
            norm_plus_sq: plus.norm_sq,
            norm_minus_sq: minus.norm_sq,
            chain_plus,
            chain_minus,
            provenance: Provenance::Variational,
        },
        plus,
        minus,
    ))
}

fn check_grids(a: &GfSamples, b: &GfSamples) -> Result<(), GreensError> {
    let same = a.omega.len() == b.omega.len()
        && (a.eta - b.eta).abs() < 1e-12
        && a.omega
            .iter()
            .zip(b.omega.iter())
            .all(|(x, y)| (x - y).abs() < 1e-12);
    if same {
        Ok(())
    } else {
        Err(GreensError::GridMismatch)
    }
}

/// Discrete L2 relative error between two sample sets on the same grid.
pub fn relative_error(g_var: &GfSamples, g_exact: &GfSamples) -> Result<f64, GreensError> {
    check_grids(g_var, g_exact)?;
    let mut num = 0.0;
    let mut den = 0.0;
    for (v, e) in g_var.values.iter().zip(g_exact.values.iter()) {
        num += (v - e).norm_sqr();
        den += e.norm_sqr();
    }
    Ok((num / den).sqrt())
}
