//! Replicated experiments: configuration, the parallel episode runner and
//! aggregation of the per-episode curves.

use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ascent::{run_episode, AscentConfig, Mode, Schedule};
use crate::distributions::{ArmLaw, Grid, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::oracle::{regret_accumulate, solve_offline, OracleOptions, OracleResult};
use crate::plugin::PriorConfig;
use crate::scenario::{ScenarioId, ScenarioSpec};
use crate::simplex::{FloorParams, Weights};
use crate::stats::mean_se;
use crate::utility::{BanditInstance, UtilitySpec};

/// Points of the distribution diagnostic grid.
pub const DIAG_POINTS: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModeSelection {
    #[serde(rename = "ExactIF")]
    ExactIf,
    #[serde(rename = "EstimatedIF")]
    EstimatedIf,
    #[serde(rename = "both")]
    Both,
}

impl ModeSelection {
    pub fn modes(&self) -> Vec<Mode> {
        match self {
            Self::ExactIf => vec![Mode::ExactIf],
            Self::EstimatedIf => vec![Mode::EstimatedIf],
            Self::Both => vec![Mode::ExactIf, Mode::EstimatedIf],
        }
    }
}

/// A fully resolved experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: ScenarioSpec,
    pub utility: UtilitySpec,
    pub mode: ModeSelection,
    #[serde(rename = "T")]
    pub horizon: usize,
    pub episodes: usize,
    pub gamma: f64,
    pub eta0: f64,
    pub schedule: Schedule,
    pub prior: PriorConfig,
    pub bias_every: usize,
    pub n_mc: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    pub grid: usize,
}

impl ExperimentConfig {
    /// Defaults for `scenario` and `utility`; the prior is the uninformative
    /// one on the scenario's support.
    pub fn new(scenario: ScenarioSpec, utility: UtilitySpec) -> Result<Self> {
        let (lo, hi) = scenario.support;
        Ok(Self {
            prior: PriorConfig::uniform_on(lo, hi, 1.0)?,
            scenario,
            utility,
            mode: ModeSelection::Both,
            horizon: 2000,
            episodes: 500,
            gamma: 0.03,
            eta0: 0.5,
            schedule: Schedule::InvSqrt,
            bias_every: 25,
            n_mc: 1000,
            seed: 0,
            output_dir: PathBuf::from("out"),
            grid: DEFAULT_GRID,
        })
    }

    /// Built-in scenario by id, with the Wasserstein reference Uniform(0, 1).
    pub fn builtin(id: ScenarioId, wasserstein: bool, seed: u64) -> Result<Self> {
        let utility = if wasserstein {
            UtilitySpec::Wasserstein { reference: ArmLaw::uniform(0.0, 1.0)? }
        } else {
            UtilitySpec::Variance
        };
        let mut cfg = Self::new(ScenarioSpec::builtin(id, seed)?, utility)?;
        cfg.seed = seed;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.scenario.k();
        if k < 2 {
            return Err(Error::InvalidConfig(format!("need at least 2 arms, scenario has {k}")));
        }
        if self.episodes < 1 {
            return Err(Error::InvalidConfig("episodes must be at least 1".into()));
        }
        if self.grid < 2 {
            return Err(Error::InvalidConfig("grid must have at least 2 intervals".into()));
        }
        for mode in self.mode.modes() {
            self.ascent(mode).validate(k)?;
        }
        Ok(())
    }

    pub fn ascent(&self, mode: Mode) -> AscentConfig {
        AscentConfig {
            horizon: self.horizon,
            gamma: self.gamma,
            eta0: self.eta0,
            schedule: self.schedule,
            mode,
            prior: self.prior,
            bias_every: self.bias_every,
            n_mc: self.n_mc,
        }
    }

    pub fn instance(&self) -> Result<BanditInstance> {
        BanditInstance::new(self.scenario.arms.clone(), self.utility, self.grid)
    }

    pub fn oracle_options(&self) -> OracleOptions {
        OracleOptions { seed: self.seed, ..Default::default() }
    }
}

/// One bias checkpoint of one episode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiasPoint {
    pub t: usize,
    /// `‖b‖_∞`.
    pub sup: f64,
    pub max_se: f64,
}

/// What the runner keeps from one episode.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeSummary {
    pub index: u64,
    /// `U* - U(wbar_t)` for `t = 1..=T`.
    pub gaps: Vec<f64>,
    /// `Reg(t) = Σ_{s <= t} (U* - U(w_s))`.
    pub cum_regret: Vec<f64>,
    pub bias: Vec<BiasPoint>,
    pub final_wbar: Weights,
    pub pulls: Vec<usize>,
    /// Every reward observed, sorted.
    pub rewards: Vec<f64>,
}

impl EpisodeSummary {
    pub fn regret_rate(&self, t: usize) -> f64 {
        self.cum_regret[t - 1] / t as f64
    }
}

/// Mean and standard error over episodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Aggregate {
    pub fn of(xs: &[f64]) -> Self {
        let (mean, se) = mean_se(xs);
        Self { mean, se, n: xs.len() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeResult {
    pub mode: Mode,
    /// In episode-index order.
    pub episodes: Vec<EpisodeSummary>,
    /// Indexed by `t - 1`.
    pub gap: Vec<Aggregate>,
    pub bias: Vec<(usize, Aggregate)>,
    pub wbar: Vec<Aggregate>,
}

impl ModeResult {
    /// Aggregates episodes given in any order; they are sorted by index first.
    pub fn from_episodes(mode: Mode, mut episodes: Vec<EpisodeSummary>) -> Self {
        episodes.sort_by_key(|e| e.index);
        let horizon = episodes.first().map_or(0, |e| e.gaps.len());
        let gap = (0..horizon)
            .map(|i| Aggregate::of(&episodes.iter().map(|e| e.gaps[i]).collect::<Vec<_>>()))
            .collect();
        let checkpoints: Vec<usize> = episodes.first().map_or(Vec::new(), |e| e.bias.iter().map(|b| b.t).collect());
        let bias = checkpoints
            .iter()
            .enumerate()
            .map(|(j, &t)| (t, Aggregate::of(&episodes.iter().map(|e| e.bias[j].sup).collect::<Vec<_>>())))
            .collect();
        let k = episodes.first().map_or(0, |e| e.final_wbar.len());
        let wbar = (0..k)
            .map(|j| Aggregate::of(&episodes.iter().map(|e| e.final_wbar[j]).collect::<Vec<_>>()))
            .collect();
        Self { mode, episodes, gap, bias, wbar }
    }

    pub fn final_gap(&self) -> Aggregate {
        *self.gap.last().expect("at least one round")
    }

    /// Episode-averaged `Reg(t)/t`.
    pub fn regret_rate(&self, t: usize) -> Aggregate {
        Aggregate::of(&self.episodes.iter().map(|e| e.regret_rate(t)).collect::<Vec<_>>())
    }

    /// Episode-averaged final weights.
    pub fn mean_wbar(&self) -> Result<Weights> {
        Weights::from_unnormalized(self.wbar.iter().map(|a| a.mean.max(0.0)).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub oracle: OracleResult,
    pub modes: Vec<ModeResult>,
}

impl ExperimentOutput {
    pub fn mode(&self, mode: Mode) -> Option<&ModeResult> {
        self.modes.iter().find(|m| m.mode == mode)
    }
}

/// Runs the listed episodes of one mode; the output follows `indices`.
pub fn run_episodes(cfg: &ExperimentConfig, instance: &BanditInstance, ustar: f64, mode: Mode, indices: &[u64]) -> Result<Vec<EpisodeSummary>> {
    let acfg = cfg.ascent(mode);
    indices
        .par_iter()
        .map(|&index| {
            let trace = run_episode(&acfg, instance, ustar, cfg.seed, index)?;
            let (_, gaps) = regret_accumulate(&trace, ustar);
            let cum_regret = trace
                .steps
                .iter()
                .scan(0.0, |acc, s| {
                    *acc += ustar - s.utility_w;
                    Some(*acc)
                })
                .collect();
            let bias = trace
                .steps
                .iter()
                .filter_map(|s| Some(BiasPoint { t: s.t, sup: s.bias_inf?, max_se: s.bias_max_se? }))
                .collect();
            let mut rewards: Vec<f64> = trace.observed().iter().flatten().copied().collect();
            rewards.sort_by(f64::total_cmp);
            Ok(EpisodeSummary {
                index,
                gaps,
                cum_regret,
                bias,
                final_wbar: trace.final_wbar().clone(),
                pulls: trace.pulls.clone(),
                rewards,
            })
        })
        .collect()
}

/// Solves the oracle and runs every episode of every selected mode.
///
/// Episode `i` always uses the substreams of `(seed, i)`, so the output does
/// not depend on scheduling or on `jobs`.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<ExperimentOutput> {
    cfg.validate()?;
    let body = || -> Result<ExperimentOutput> {
        let instance = cfg.instance()?;
        let oracle = solve_offline(&instance, cfg.gamma, &cfg.oracle_options())?;
        let indices: Vec<u64> = (0..cfg.episodes as u64).collect();
        let modes = cfg
            .mode
            .modes()
            .into_iter()
            .map(|mode| Ok(ModeResult::from_episodes(mode, run_episodes(cfg, &instance, oracle.ustar, mode, &indices)?)))
            .collect::<Result<_>>()?;
        Ok(ExperimentOutput { config: cfg.clone(), oracle, modes })
    };
    match jobs {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::InvalidConfig(format!("cannot start {n} workers: {e}")))?
            .install(body),
        None => body(),
    }
}

/// One row of the distribution diagnostic.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagRow {
    pub x: f64,
    pub oracle: f64,
    pub learned: f64,
    pub empirical: f64,
}

/// Cdfs of the oracle mixture `P^{w*}`, the learned mixture `P^{w̄}` (episode
/// mean of the final averaged weights) and the pooled empirical reward law,
/// on `DIAG_POINTS` points spanning the scenario support.
pub fn distribution_diagnostic(instance: &BanditInstance, wstar: &Weights, result: &ModeResult) -> Result<Vec<DiagRow>> {
    let (lo, hi) = instance.arms().iter().map(ArmLaw::support).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (a, b)| (l.min(a), h.max(b)));
    let grid = Grid::new(lo, hi, DIAG_POINTS - 1)?;
    let wbar = result.mean_wbar()?;
    let mix = |w: &Weights, x: f64| -> f64 { w.as_slice().iter().zip(instance.arms()).map(|(wk, a)| wk * a.cdf(x)).sum::<f64>().clamp(0.0, 1.0) };
    let n_eps = result.episodes.len() as f64;
    Ok(grid
        .nodes()
        .map(|x| {
            let empirical = result
                .episodes
                .iter()
                .map(|e| {
                    if e.rewards.is_empty() {
                        0.0
                    } else {
                        e.rewards.partition_point(|r| *r <= x) as f64 / e.rewards.len() as f64
                    }
                })
                .sum::<f64>()
                / n_eps;
            DiagRow { x, oracle: mix(wstar, x), learned: mix(&wbar, x), empirical }
        })
        .collect())
}

/// Uniform-weight sanity bound: floor parameters for `cfg`.
pub fn floor_params(cfg: &ExperimentConfig) -> Result<FloorParams> {
    FloorParams::new(cfg.gamma, cfg.scenario.k())
}
