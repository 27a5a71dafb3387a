//! Resolving an [`ExperimentConfig`] from an optional JSON file plus flags.

use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use distbandit_core::experiment::{ExperimentConfig, ModeSelection};
use distbandit_core::{ArmKind, ArmLaw, PriorConfig, ScenarioId, ScenarioSpec, Schedule, UtilitySpec};
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UtilityName {
    Variance,
    Wasserstein,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
pub enum ModeName {
    #[value(name = "ExactIF", alias = "exact")]
    #[serde(rename = "ExactIF")]
    ExactIf,
    #[value(name = "EstimatedIF", alias = "estimated")]
    #[serde(rename = "EstimatedIF")]
    EstimatedIf,
    #[value(name = "both")]
    #[serde(rename = "both")]
    Both,
}

impl From<ModeName> for ModeSelection {
    fn from(m: ModeName) -> Self {
        match m {
            ModeName::ExactIf => ModeSelection::ExactIf,
            ModeName::EstimatedIf => ModeSelection::EstimatedIf,
            ModeName::Both => ModeSelection::Both,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleName {
    Constant,
    InvSqrt,
}

impl From<ScheduleName> for Schedule {
    fn from(s: ScheduleName) -> Self {
        match s {
            ScheduleName::Constant => Schedule::Constant,
            ScheduleName::InvSqrt => Schedule::InvSqrt,
        }
    }
}

/// Keys accepted in a `--config` file. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub scenario: Option<String>,
    /// Arm laws of a custom scenario.
    pub arms: Option<Vec<ArmKind>>,
    pub utility: Option<UtilityName>,
    /// Wasserstein reference law; Uniform(0, 1) when absent.
    pub reference: Option<ArmKind>,
    pub mode: Option<ModeName>,
    #[serde(rename = "T")]
    pub horizon: Option<usize>,
    pub episodes: Option<usize>,
    pub gamma: Option<f64>,
    pub eta0: Option<f64>,
    pub schedule: Option<ScheduleName>,
    pub alpha0: Option<f64>,
    pub m0: Option<f64>,
    pub s0: Option<f64>,
    pub bias_every: Option<usize>,
    pub n_mc: Option<usize>,
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub grid: Option<usize>,
    pub jobs: Option<usize>,
    pub plots: Option<bool>,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Flag values win over file values.
    pub fn overlay(self, top: ConfigFile) -> ConfigFile {
        macro_rules! pick {
            ($($f:ident),*) => { ConfigFile { $($f: top.$f.or(self.$f)),* } };
        }
        pick!(scenario, arms, utility, reference, mode, horizon, episodes, gamma, eta0, schedule, alpha0, m0, s0, bias_every, n_mc, seed, output_dir, grid, jobs, plots)
    }
}

/// Experiment flags shared by `run` and `oracle`.
#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentFlags {
    /// JSON config file; flags given on the command line override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// S1, S2, S3, S4 (custom scenarios need a config file).
    #[arg(long)]
    pub scenario: Option<String>,
    #[arg(long, value_enum)]
    pub utility: Option<UtilityName>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Quadrature intervals.
    #[arg(long)]
    pub grid: Option<usize>,
}

/// Flags of `run` beyond the shared ones.
#[derive(Debug, Clone, Default, Args)]
pub struct RunFlags {
    #[arg(long, value_enum)]
    pub mode: Option<ModeName>,
    /// Horizon.
    #[arg(long = "T", alias = "horizon")]
    pub horizon: Option<usize>,
    #[arg(long)]
    pub episodes: Option<usize>,
    #[arg(long)]
    pub eta0: Option<f64>,
    #[arg(long, value_enum)]
    pub schedule: Option<ScheduleName>,
    #[arg(long)]
    pub alpha0: Option<f64>,
    #[arg(long)]
    pub m0: Option<f64>,
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long = "bias-every")]
    pub bias_every: Option<usize>,
    #[arg(long = "n-mc")]
    pub n_mc: Option<usize>,
    #[arg(long = "out")]
    pub output_dir: Option<PathBuf>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Also write SVG plots of the mean curves.
    #[arg(long)]
    pub plots: bool,
}

impl ExperimentFlags {
    fn as_file(&self) -> ConfigFile {
        ConfigFile {
            scenario: self.scenario.clone(),
            utility: self.utility,
            gamma: self.gamma,
            seed: self.seed,
            grid: self.grid,
            ..Default::default()
        }
    }
}

impl RunFlags {
    fn as_file(&self) -> ConfigFile {
        ConfigFile {
            mode: self.mode,
            horizon: self.horizon,
            episodes: self.episodes,
            eta0: self.eta0,
            schedule: self.schedule,
            alpha0: self.alpha0,
            m0: self.m0,
            s0: self.s0,
            bias_every: self.bias_every,
            n_mc: self.n_mc,
            output_dir: self.output_dir.clone(),
            jobs: self.jobs,
            plots: self.plots.then_some(true),
            ..Default::default()
        }
    }
}

/// A resolved config plus the execution-only settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub experiment: ExperimentConfig,
    pub jobs: Option<usize>,
    pub plots: bool,
}

/// Merges the config file (if any) with the flags.
pub fn merge_sources(shared: &ExperimentFlags, run: Option<&RunFlags>) -> Result<ConfigFile, CliError> {
    let file = match &shared.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    let mut flags = shared.as_file();
    if let Some(run) = run {
        flags = run.as_file().overlay(flags);
    }
    Ok(file.overlay(flags))
}

/// Fills every default and validates.
pub fn parse_config(raw: ConfigFile) -> Result<Resolved, CliError> {
    let err = |e: distbandit_core::Error| CliError::Config(e.to_string());
    let seed = raw.seed.unwrap_or(0);
    let id: ScenarioId = raw.scenario.as_deref().unwrap_or("S1").parse().map_err(err)?;
    let scenario = match (id, raw.arms) {
        (ScenarioId::Custom, Some(kinds)) => {
            let arms = kinds.into_iter().map(ArmLaw::new).collect::<Result<_, _>>().map_err(err)?;
            ScenarioSpec::custom(arms, "custom arms from the config file").map_err(err)?
        }
        (ScenarioId::Custom, None) => return Err(CliError::Config("scenario 'custom' needs an 'arms' list".into())),
        (_, Some(_)) => return Err(CliError::Config("'arms' is only allowed with scenario 'custom'".into())),
        (id, None) => ScenarioSpec::builtin(id, seed).map_err(err)?,
    };
    let utility = match raw.utility.unwrap_or(UtilityName::Variance) {
        UtilityName::Variance => {
            if raw.reference.is_some() {
                return Err(CliError::Config("'reference' is only used by the wasserstein utility".into()));
            }
            UtilitySpec::Variance
        }
        UtilityName::Wasserstein => {
            let reference = match raw.reference {
                Some(kind) => ArmLaw::new(kind).map_err(err)?,
                None => ArmLaw::uniform(0.0, 1.0).map_err(err)?,
            };
            UtilitySpec::Wasserstein { reference }
        }
    };
    let mut cfg = ExperimentConfig::new(scenario, utility).map_err(err)?;
    cfg.seed = seed;
    if let Some(m) = raw.mode {
        cfg.mode = m.into();
    }
    macro_rules! set {
        ($($f:ident),*) => { $(if let Some(v) = raw.$f { cfg.$f = v; })* };
    }
    set!(horizon, episodes, gamma, eta0, bias_every, n_mc, output_dir, grid);
    if let Some(s) = raw.schedule {
        cfg.schedule = s.into();
    }
    let d = cfg.prior;
    cfg.prior = PriorConfig::new(raw.alpha0.unwrap_or(d.alpha0), raw.m0.unwrap_or(d.m0), raw.s0.unwrap_or(d.s0)).map_err(err)?;
    if raw.jobs == Some(0) {
        return Err(CliError::Config("jobs must be at least 1".into()));
    }
    cfg.validate().map_err(err)?;
    Ok(Resolved { experiment: cfg, jobs: raw.jobs, plots: raw.plots.unwrap_or(false) })
}
