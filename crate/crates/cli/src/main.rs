use aim_cli::config::{ConfigFile, DepthPolicy, ExperimentConfig, Sites, Task};
use aim_cli::tasks;
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "aim",
    about = "Anderson impurity model emulation: sector-constrained VQE, measurement plans, Green's functions, and time-domain correlators",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Replace the seed list with a single seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Site counts as "N_IMP,N_BATH".
    #[arg(long, value_parser = parse_sites)]
    sites: Option<Sites>,
    /// Fixed ansatz depth (overrides any sweep policy).
    #[arg(long)]
    depth: Option<usize>,
    /// Single overlap-error target.
    #[arg(long)]
    delta: Option<f64>,
    /// Line broadening in eV.
    #[arg(long)]
    eta: Option<f64>,
    /// Shots per measurement circuit (0 = exact probabilities).
    #[arg(long)]
    shots: Option<usize>,
    /// Discard readouts violating the register Hamming weights.
    #[arg(long)]
    post_select: bool,
    /// Worker count for seed-level parallelism.
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optimizer restarts per sector.
    #[arg(long)]
    restarts: Option<usize>,
    /// Master seed for optimizer randomness streams.
    #[arg(long)]
    master_seed: Option<u64>,
}

#[derive(Subcommand, Clone)]
enum Command {
    /// Draw Hamiltonian parameter sets and write them as JSON.
    Gen(Common),
    /// Exact diagonalization summary per seed.
    Ed(Common),
    /// Sector-swept variational ground-state search.
    Vqe(Common),
    /// Depth sweeps over overlap-error targets with aggregation.
    Sweep(Common),
    /// Exact and variational retarded Green's functions.
    Greens(Common),
    /// Time-domain greater/lesser/retarded functions.
    Correlator(Common),
    /// Symmetry-preserving measurement plans and energy estimates.
    MeasurePlan(Common),
}

fn parse_sites(text: &str) -> Result<Sites, String> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err("expected N_IMP,N_BATH".to_string());
    }
    let n_imp = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let n_bath = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok(Sites { n_imp, n_bath })
}

fn assemble(task: Task, common: &Common) -> anyhow::Result<ExperimentConfig> {
    let mut file: ConfigFile = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)?
        }
        None => serde_json::from_str("{}")?,
    };
    if let Some(sites) = common.sites {
        file.sites = Some(sites);
    }
    let mut config = ExperimentConfig::from_parts(task, Some(file))?;
    if let Some(seed) = common.seed {
        config.seeds = vec![seed];
    }
    if let Some(d) = common.depth {
        config.depth = DepthPolicy::Fixed { d };
    }
    if let Some(delta) = common.delta {
        config.delta_targets = vec![delta];
    }
    if let Some(eta) = common.eta {
        config.eta = eta;
    }
    if let Some(shots) = common.shots {
        config.shots = shots;
    }
    if common.post_select {
        config.post_select = true;
    }
    if let Some(jobs) = common.jobs {
        config.jobs = jobs;
    }
    if let Some(out) = &common.out {
        config.out = out.clone();
    }
    if let Some(restarts) = common.restarts {
        config.restarts = restarts;
    }
    if let Some(master) = common.master_seed {
        config.master_seed = master;
    }
    Ok(config)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, common) = match &cli.command {
        Command::Gen(c) => (Task::Gen, c),
        Command::Ed(c) => (Task::Ed, c),
        Command::Vqe(c) => (Task::Vqe, c),
        Command::Sweep(c) => (Task::Sweep, c),
        Command::Greens(c) => (Task::Greens, c),
        Command::Correlator(c) => (Task::Correlator, c),
        Command::MeasurePlan(c) => (Task::MeasurePlan, c),
    };
    let config = match assemble(task, common).and_then(|c| {
        c.validate()?;
        Ok(c)
    }) {
        Ok(config) => config,
        Err(err) => {
            eprintln!("configuration error: {err}");
            return ExitCode::from(1);
        }
    };
    match tasks::run(&config) {
        Ok(report) => {
            if report.failures.is_empty() {
                println!(
                    "{} complete: {} seeds -> {}",
                    config.task.dir_name(),
                    report.seeds_run,
                    config.task_dir().display()
                );
            } else {
                eprintln!(
                    "{} finished with {}/{} failed seeds",
                    config.task.dir_name(),
                    report.failures.len(),
                    report.seeds_run
                );
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(err) => {
            eprintln!("run error: {err}");
            ExitCode::from(1)
        }
    }
}
