//! Experiment configuration: JSON schema, defaults, flag overrides, and
//! validation.

use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Gen,
    Ed,
    Vqe,
    Sweep,
    Greens,
    Correlator,
    MeasurePlan,
}

impl Task {
    pub fn dir_name(&self) -> &'static str {
        match self {
            Task::Gen => "gen",
            Task::Ed => "ed",
            Task::Vqe => "vqe",
            Task::Sweep => "sweep",
            Task::Greens => "greens",
            Task::Correlator => "correlator",
            Task::MeasurePlan => "measure-plan",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sites {
    pub n_imp: usize,
    pub n_bath: usize,
}

impl Sites {
    pub fn label(&self) -> String {
        format!("i{}b{}", self.n_imp, self.n_bath)
    }

    pub fn total(&self) -> usize {
        self.n_imp + self.n_bath
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum DepthPolicy {
    Fixed { d: usize },
    Sweep { d_max: usize },
}

impl DepthPolicy {
    pub fn max_depth(&self) -> usize {
        match *self {
            DepthPolicy::Fixed { d } => d,
            DepthPolicy::Sweep { d_max } => d_max,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let n = ((self.max - self.min) / self.step).round() as usize;
        (0..=n).map(|k| self.min + k as f64 * self.step).collect()
    }
}

fn default_depth() -> DepthPolicy {
    DepthPolicy::Sweep { d_max: 6 }
}

fn default_delta_targets() -> Vec<f64> {
    vec![1e-2, 1e-3]
}

fn default_omega() -> Grid {
    Grid {
        min: -20.0,
        max: 20.0,
        step: 0.05,
    }
}

fn default_time() -> Grid {
    Grid {
        min: 0.0,
        max: 40.0,
        step: 0.02,
    }
}

fn default_eta() -> f64 {
    0.1
}

fn default_jobs() -> usize {
    1
}

fn default_out() -> PathBuf {
    PathBuf::from("results")
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

fn default_restarts() -> usize {
    5
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub sites: Sites,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_depth")]
    pub depth: DepthPolicy,
    #[serde(default = "default_delta_targets")]
    pub delta_targets: Vec<f64>,
    #[serde(default = "default_omega")]
    pub omega: Grid,
    #[serde(default = "default_time")]
    pub time: Grid,
    #[serde(default = "default_eta")]
    pub eta: f64,
    #[serde(default)]
    pub shots: usize,
    #[serde(default)]
    pub post_select: bool,
    #[serde(default = "default_jobs")]
    pub jobs: usize,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default)]
    pub master_seed: u64,
}

/// Partial config carried by a JSON file: task and sites may come from the
/// command line instead.
#[derive(Clone, Debug, Deserialize)]
pub struct ConfigFile {
    pub task: Option<Task>,
    pub sites: Option<Sites>,
    pub seeds: Option<Vec<u64>>,
    pub depth: Option<DepthPolicy>,
    pub delta_targets: Option<Vec<f64>>,
    pub omega: Option<Grid>,
    pub time: Option<Grid>,
    pub eta: Option<f64>,
    pub shots: Option<usize>,
    pub post_select: Option<bool>,
    pub jobs: Option<usize>,
    pub out: Option<PathBuf>,
    pub restarts: Option<usize>,
    pub master_seed: Option<u64>,
}

impl ExperimentConfig {
    /// Assemble from file values and defaults; the caller then applies flag
    /// overrides.
    pub fn from_parts(task: Task, file: Option<ConfigFile>) -> anyhow::Result<Self> {
        let f = file.unwrap_or(ConfigFile {
            task: None,
            sites: None,
            seeds: None,
            depth: None,
            delta_targets: None,
            omega: None,
            time: None,
            eta: None,
            shots: None,
            post_select: None,
            jobs: None,
            out: None,
            restarts: None,
            master_seed: None,
        });
        let sites = f
            .sites
            .ok_or_else(|| anyhow::anyhow!("sites must come from the config file or --sites"))?;
        Ok(ExperimentConfig {
            task,
            sites,
            seeds: f.seeds.unwrap_or_else(default_seeds),
            depth: f.depth.unwrap_or_else(default_depth),
            delta_targets: f.delta_targets.unwrap_or_else(default_delta_targets),
            omega: f.omega.unwrap_or_else(default_omega),
            time: f.time.unwrap_or_else(default_time),
            eta: f.eta.unwrap_or_else(default_eta),
            shots: f.shots.unwrap_or(0),
            post_select: f.post_select.unwrap_or(false),
            jobs: f.jobs.unwrap_or_else(default_jobs),
            out: f.out.unwrap_or_else(default_out),
            restarts: f.restarts.unwrap_or_else(default_restarts),
            master_seed: f.master_seed.unwrap_or(0),
        })
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.sites.n_imp == 0 {
            anyhow::bail!("n_imp must be >= 1");
        }
        if self.seeds.is_empty() {
            anyhow::bail!("seed list is empty");
        }
        let mut sorted = self.seeds.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.seeds.len() {
            anyhow::bail!("duplicate seeds in config");
        }
        for grid in [&self.omega, &self.time] {
            if !(grid.step > 0.0 && grid.max > grid.min) {
                anyhow::bail!("grids must be monotone (step > 0, max > min)");
            }
        }
        for &t in &self.delta_targets {
            if !(t > 0.0 && t < 1.0) {
                anyhow::bail!("delta targets must lie in (0, 1)");
            }
        }
        if self.depth.max_depth() == 0 {
            anyhow::bail!("depth must be >= 1");
        }
        if self.jobs == 0 {
            anyhow::bail!("jobs must be >= 1");
        }
        Ok(())
    }

    pub fn task_dir(&self) -> PathBuf {
        self.out.join(self.task.dir_name())
    }

    pub fn seed_file(&self, seed: u64) -> PathBuf {
        self.task_dir()
            .join(self.sites.label())
            .join(format!("{seed}.json"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> ExperimentConfig {
        ExperimentConfig::from_parts(
            Task::Gen,
            Some(
                serde_json::from_str(r#"{"sites": {"n_imp": 1, "n_bath": 2}}"#).unwrap(),
            ),
        )
        .unwrap()
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = base();
        assert_eq!(cfg.seeds, vec![0]);
        assert_eq!(cfg.eta, 0.1);
        assert_eq!(cfg.depth, DepthPolicy::Sweep { d_max: 6 });
        cfg.validate().unwrap();
    }

    #[test]
    fn duplicate_seeds_rejected() {
        let mut cfg = base();
        cfg.seeds = vec![1, 2, 1];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn bad_grid_rejected() {
        let mut cfg = base();
        cfg.omega.step = -0.1;
        assert!(cfg.validate().is_err());
        let mut cfg = base();
        cfg.delta_targets = vec![1.5];
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn grid_points_inclusive() {
        let g = Grid {
            min: -1.0,
            max: 1.0,
            step: 0.5,
        };
        assert_eq!(g.points(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn file_paths_follow_layout() {
        let cfg = base();
        assert_eq!(
            cfg.seed_file(7),
            PathBuf::from("results/gen/i1b2/7.json")
        );
    }
}
