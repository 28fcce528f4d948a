//! Per-seed experiment tasks and the parallel runner.
//!
//! All randomness derives from `(master_seed, seed, tag)` streams, so reruns
//! are byte-identical regardless of the worker count. Each seed writes its
//! own files; one seed's failure cannot touch another's output.

use crate::aggregate::{self, SweepRow};
use crate::config::{DepthPolicy, ExperimentConfig, Task};
use aim_core::ansatz::{build_spa, build_topology};
use aim_core::correlator::{greater_lesser_retarded, series_csv};
use aim_core::greens::{
    relative_error, retarded_gf_exact, retarded_gf_variational, GfSamples, VarLanczosOptions,
};
use aim_core::measure::{estimate_energy, estimate_energy_exact_from, plan_measurements};
use aim_core::model::ed::exact_diagonalize;
use aim_core::model::{build_hamiltonian, sample_params, AimParams};
use aim_core::vqe::{
    default_connectivity, ground_search_with, prepare_ground, stream_seed, GroundSearchOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::Serialize;
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

/// Outcome of an experiment run.
#[derive(Debug)]
pub struct RunReport {
    pub seeds_run: usize,
    pub failures: Vec<(u64, String)>,
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.failures.is_empty() {
            0
        } else {
            2
        }
    }
}

struct SeedOutput {
    rows: Vec<String>,
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(path, contents)?;
    Ok(())
}

fn pretty<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("serializable")
}

fn ground_opts(config: &ExperimentConfig, seed: u64, tag: u64) -> GroundSearchOptions {
    GroundSearchOptions {
        restarts: config.restarts,
        base_seed: stream_seed(&[config.master_seed, seed, tag]),
        ..GroundSearchOptions::default()
    }
}

/// Depth used by fixed-depth tasks: the policy's value, with sweep policies
/// falling back to linear depth in the site count.
fn fixed_depth(config: &ExperimentConfig) -> usize {
    match config.depth {
        DepthPolicy::Fixed { d } => d,
        DepthPolicy::Sweep { .. } => config.sites.total(),
    }
}

fn params_for(config: &ExperimentConfig, seed: u64) -> AimParams {
    sample_params(seed, config.sites.n_imp, config.sites.n_bath)
}

fn run_gen(config: &ExperimentConfig, seed: u64) -> anyhow::Result<SeedOutput> {
    let params = params_for(config, seed);
    write_file(&config.seed_file(seed), &params.to_json())?;
    Ok(SeedOutput {
        rows: vec![format!(
            "{},{},{},{}",
            config.sites.total(),
            seed,
            config.sites.n_imp,
            config.sites.n_bath
        )],
    })
}

#[derive(Serialize)]
struct EdRecord {
    seed: u64,
    ground_energy: f64,
    n_total: usize,
    s_z: i64,
    gap: f64,
    degenerate: bool,
}

fn run_ed(config: &ExperimentConfig, seed: u64) -> anyhow::Result<SeedOutput> {
    let params = params_for(config, seed);
    let ed = exact_diagonalize(&params)?;
    let record = EdRecord {
        seed,
        ground_energy: ed.ground_energy,
        n_total: ed.ground_sector.n_total,
        s_z: ed.ground_sector.s_z,
        gap: ed.gap,
        degenerate: ed.degenerate,
    };
    write_file(&config.seed_file(seed), &pretty(&record))?;
    Ok(SeedOutput {
        rows: vec![format!(
            "{},{},{},{},{},{},{}",
            config.sites.total(),
            seed,
            record.ground_energy,
            record.n_total,
            record.s_z,
            record.gap,
            record.degenerate
        )],
    })
}

fn run_vqe(config: &ExperimentConfig, seed: u64) -> anyhow::Result<SeedOutput> {
    let params = params_for(config, seed);
    let delta = config.delta_targets.first().copied().unwrap_or(1e-3);
    let report = ground_search_with(
        &params,
        delta,
        config.depth.max_depth(),
        &ground_opts(config, seed, 1),
    )?;
    write_file(&config.seed_file(seed), &pretty(&report))?;
    Ok(SeedOutput {
        rows: vec![format!(
            "{},{},{},{},{},{},{},{},{}",
            config.sites.total(),
            seed,
            report.global_energy,
            report.delta,
            report.d_star.map_or(String::new(), |d| d.to_string()),
            report.nit_total,
            report.nit_normalized,
            report.degenerate,
            report.converged
        )],
    })
}

fn run_sweep(config: &ExperimentConfig, seed: u64) -> anyhow::Result<SeedOutput> {
    let params = params_for(config, seed);
    let topology = build_topology(
        config.sites.n_imp,
        config.sites.n_bath,
        default_connectivity(config.sites.n_imp),
    )?;
    let per_layer = topology.n_edges() + topology.n_qubits();
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (k, &delta) in config.delta_targets.iter().enumerate() {
        let report = ground_search_with(
            &params,
            delta,
            config.depth.max_depth(),
            &ground_opts(config, seed, 100 + k as u64),
        )?;
        let row = SweepRow {
            sites: config.sites.total(),
            seed,
            delta,
            d_star: report.d_star,
            nit: report.nit_total,
            nit_normalized: report.nit_normalized,
            degenerate: report.degenerate,
            params_len: report.d_star.unwrap_or(0) * per_layer,
        };
        rows.push(row.to_csv());
        reports.push((delta, report));
    }
    #[derive(Serialize)]
    struct SweepRecord<'a> {
        seed: u64,
        targets: Vec<f64>,
        reports: Vec<&'a aim_core::vqe::GroundSearchReport>,
    }
    let record = SweepRecord {
        seed,
        targets: reports.iter().map(|(d, _)| *d).collect(),
        reports: reports.iter().map(|(_, r)| r).collect(),
    };
    write_file(&config.seed_file(seed), &pretty(&record))?;
    Ok(SeedOutput { rows })
}

#[derive(Serialize)]
struct GreensRecord {
    seed: u64,
    orbital: usize,
    depth: usize,
    eps_rel: f64,
    degenerate: bool,
    exact_header: serde_json::Value,
    variational_header: serde_json::Value,
}

fn run_greens(config: &ExperimentConfig, seed: u64) -> anyhow::Result<SeedOutput> {
    let params = params_for(config, seed);
    let depth = fixed_depth(config);
    let omega = config.omega.points();
    let orbital = 0; // impurity, spin up
    let exact = retarded_gf_exact(&params, orbital, &omega, config.eta)?;
    let gs = prepare_ground(&params, depth, &ground_opts(config, seed, 2))?;
    let var_opts = VarLanczosOptions {
        base_seed: stream_seed(&[config.master_seed, seed, 3]),
        ..VarLanczosOptions::default()
    };
    let (var, _, _) =
        retarded_gf_variational(&params, &gs, orbital, &omega, config.eta, depth, &var_opts)?;
    let eps_rel = relative_error(&var, &exact)?;
    let record = GreensRecord {
        seed,
        orbital,
        depth,
        eps_rel,
        degenerate: gs.ed.degenerate,
        exact_header: serde_json::from_str(&exact.header_json())?,
        variational_header: serde_json::from_str(&var.header_json())?,
    };
    write_file(&config.seed_file(seed), &pretty(&record))?;
    let csv_path = config.seed_file(seed).with_extension("gf.csv");
    write_file(&csv_path, &GfSamples::combined_csv(&exact, &var)?)?;
    Ok(SeedOutput {
        rows: vec![format!(
            "{},{},{},{},{},{}",
            config.sites.total(),
            seed,
            depth,
            eps_rel,
            var.norm_plus_sq,
            record.degenerate
        )],
    })
}

#[derive(Serialize)]
struct CorrelatorRecord {
    seed: u64,
    orbital: usize,
    points: usize,
    equal_time_jump_re: f64,
    equal_time_jump_im: f64,
}

fn run_correlator(config: &ExperimentConfig, seed: u64) -> anyhow::Result<SeedOutput> {
    let params = params_for(config, seed);
    let ed = exact_diagonalize(&params)?;
    let h = build_hamiltonian(&params)?;
    let ts = config.time.points();
    let orbital = 0;
    let series = greater_lesser_retarded(&ed.ground_state, &h, orbital, &ts)?;
    let jump = series.greater[0] - series.lesser[0];
    let record = CorrelatorRecord {
        seed,
        orbital,
        points: ts.len(),
        equal_time_jump_re: jump.re,
        equal_time_jump_im: jump.im,
    };
    write_file(&config.seed_file(seed), &pretty(&record))?;
    let base = config.seed_file(seed);
    write_file(
        &base.with_extension("greater.csv"),
        &series_csv(&series.t, &series.greater),
    )?;
    write_file(
        &base.with_extension("lesser.csv"),
        &series_csv(&series.t, &series.lesser),
    )?;
    write_file(
        &base.with_extension("retarded.csv"),
        &series_csv(&series.t, &series.retarded),
    )?;
    Ok(SeedOutput {
        rows: vec![format!(
            "{},{},{},{},{}",
            config.sites.total(),
            seed,
            record.points,
            record.equal_time_jump_re,
            record.equal_time_jump_im
        )],
    })
}

fn run_measure_plan(config: &ExperimentConfig, seed: u64) -> anyhow::Result<SeedOutput> {
    let params = params_for(config, seed);
    let unparallel = plan_measurements(&params, false)?;
    let parallel = plan_measurements(&params, true)?;
    let base = config.seed_file(seed);
    write_file(&base.with_extension("unparallel.json"), &unparallel.to_json())?;
    write_file(&base.with_extension("parallel.json"), &parallel.to_json())?;
    // sanity estimate on the ED ground state
    let ed = exact_diagonalize(&params)?;
    let est = estimate_energy_exact_from(&ed.ground_state, &parallel, config.post_select)?;
    write_file(&base.with_extension("estimate.csv"), &est.to_csv())?;
    let sampled = if config.shots > 0 {
        // the gate realization of the same state feeds the sampler
        let gs = prepare_ground(&params, fixed_depth(config), &ground_opts(config, seed, 4))?;
        let topo = build_topology(
            params.n_imp,
            params.n_bath,
            default_connectivity(params.n_imp),
        )?;
        let spa = build_spa(&topo, gs.depth, &gs.sector)?;
        let prep = spa.bind(&gs.theta)?;
        let mut rng = ChaCha12Rng::seed_from_u64(stream_seed(&[config.master_seed, seed, 5]));
        let (energy, kept) = estimate_energy(
            &prep,
            &parallel,
            config.shots,
            config.post_select,
            &mut rng,
        )?;
        Some((energy, kept))
    } else {
        None
    };
    #[derive(Serialize)]
    struct PlanRecord {
        seed: u64,
        circuits_unparallel: usize,
        circuits_parallel: usize,
        exact_energy: f64,
        exact_kept: f64,
        sampled_energy: Option<f64>,
        sampled_kept: Option<f64>,
    }
    let record = PlanRecord {
        seed,
        circuits_unparallel: unparallel.n_circuits(),
        circuits_parallel: parallel.n_circuits(),
        exact_energy: est.energy,
        exact_kept: est.kept_fraction,
        sampled_energy: sampled.map(|s| s.0),
        sampled_kept: sampled.map(|s| s.1),
    };
    write_file(&base, &pretty(&record))?;
    Ok(SeedOutput {
        rows: vec![format!(
            "{},{},{},{},{},{}",
            config.sites.total(),
            seed,
            record.circuits_unparallel,
            record.circuits_parallel,
            record.exact_energy,
            record.exact_kept
        )],
    })
}

fn summary_header(task: Task) -> &'static str {
    match task {
        Task::Gen => "sites,seed,n_imp,n_bath",
        Task::Ed => "sites,seed,ground_energy,n_total,s_z,gap,degenerate",
        Task::Vqe => "sites,seed,energy,delta,d_star,nit,nit_normalized,degenerate,converged",
        Task::Sweep => SweepRow::csv_header(),
        Task::Greens => "sites,seed,depth,eps_rel,norm_plus_sq,degenerate",
        Task::Correlator => "sites,seed,points,jump_re,jump_im",
        Task::MeasurePlan => {
            "sites,seed,circuits_unparallel,circuits_parallel,exact_energy,exact_kept"
        }
    }
}

fn run_seed(config: &ExperimentConfig, seed: u64) -> anyhow::Result<SeedOutput> {
    match config.task {
        Task::Gen => run_gen(config, seed),
        Task::Ed => run_ed(config, seed),
        Task::Vqe => run_vqe(config, seed),
        Task::Sweep => run_sweep(config, seed),
        Task::Greens => run_greens(config, seed),
        Task::Correlator => run_correlator(config, seed),
        Task::MeasurePlan => run_measure_plan(config, seed),
    }
}

/// Execute the configured task across all seeds with seed-level parallelism.
pub fn run(config: &ExperimentConfig) -> anyhow::Result<RunReport> {
    fs::create_dir_all(config.task_dir())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()?;
    let results: Vec<(u64, Result<SeedOutput, String>)> = pool.install(|| {
        use rayon::prelude::*;
        config
            .seeds
            .par_iter()
            .map(|&seed| {
                let outcome = catch_unwind(AssertUnwindSafe(|| run_seed(config, seed)));
                let flattened = match outcome {
                    Ok(Ok(out)) => Ok(out),
                    Ok(Err(e)) => Err(e.to_string()),
                    Err(panic) => Err(match panic.downcast_ref::<String>() {
                        Some(msg) => format!("panic: {msg}"),
                        None => "panic".to_string(),
                    }),
                };
                (seed, flattened)
            })
            .collect()
    });
    // deterministic reduction: summary rows ordered by seed position
    let mut rows = vec![summary_header(config.task).to_string()];
    let mut failures = Vec::new();
    let mut ordered = results;
    ordered.sort_by_key(|(seed, _)| {
        config
            .seeds
            .iter()
            .position(|s| s == seed)
            .expect("known seed")
    });
    for (seed, result) in ordered {
        match result {
            Ok(out) => rows.extend(out.rows),
            Err(msg) => {
                eprintln!("seed {seed} failed: {msg}");
                failures.push((seed, msg));
            }
        }
    }
    let mut summary = rows.join("\n");
    summary.push('\n');
    write_file(&config.task_dir().join("summary.csv"), &summary)?;
    if config.task == Task::Sweep && failures.is_empty() {
        let tables = aggregate::aggregate_dir(&config.task_dir())?;
        write_file(
            &config.task_dir().join("aggregate.csv"),
            &aggregate::tables_csv(&tables),
        )?;
        write_file(&config.task_dir().join("fit.json"), &pretty(&tables))?;
    }
    Ok(RunReport {
        seeds_run: config.seeds.len(),
        failures,
    })
}
