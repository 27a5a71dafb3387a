//! One episode of influence-function mirror ascent on the truncated simplex.
//!
//! Round `t`: build the score snapshot from data up to `t - 1`, draw an arm
//! from `w_t` and a reward from that arm, form the importance-weighted
//! gradient, take a multiplicative-weights step, project onto the floor
//! constraint, and only then record the new observation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::oracle::bias_mc;
use crate::plugin::{build_plugin_snapshot, score_gradient, PluginState, PriorConfig};
use crate::rng::{substream, Lane};
use crate::simplex::{kl_project_floor, mw_update, FloorParams, Weights};
use crate::utility::{BanditInstance, ScoreSnapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Schedule {
    Constant,
    InvSqrt,
}

/// Where the per-round score comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    /// Influence function of the true mixture (needs the arm laws).
    #[serde(rename = "ExactIF")]
    ExactIf,
    /// Plug-in influence function of the regularized empirical mixture.
    #[serde(rename = "EstimatedIF")]
    EstimatedIf,
}

impl Mode {
    pub fn label(&self) -> &'static str {
        match self {
            Mode::ExactIf => "ExactIF",
            Mode::EstimatedIf => "EstimatedIF",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentConfig {
    pub horizon: usize,
    pub gamma: f64,
    pub eta0: f64,
    pub schedule: Schedule,
    pub mode: Mode,
    pub prior: PriorConfig,
    /// Bias diagnostic cadence in rounds; 0 disables it.
    pub bias_every: usize,
    pub n_mc: usize,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            horizon: 2000,
            gamma: 0.03,
            eta0: 0.5,
            schedule: Schedule::InvSqrt,
            mode: Mode::ExactIf,
            prior: PriorConfig::default(),
            bias_every: 25,
            n_mc: 1000,
        }
    }
}

impl AscentConfig {
    /// Checks the config against `k` arms and returns the floor.
    pub fn validate(&self, k: usize) -> Result<FloorParams> {
        if self.horizon < 1 {
            return Err(Error::InvalidConfig("horizon T must be at least 1".into()));
        }
        if !(self.eta0 > 0.0 && self.eta0.is_finite()) {
            return Err(Error::InvalidConfig(format!("eta0 must be positive, got {}", self.eta0)));
        }
        if self.bias_every > 0 && self.n_mc < 2 {
            return Err(Error::InvalidConfig("bias Monte Carlo needs n_mc >= 2".into()));
        }
        if self.mode == Mode::EstimatedIf && !(self.prior.alpha0 > 0.0) {
            return Err(Error::InvalidConfig("plug-in scores need alpha0 > 0 before every arm is observed".into()));
        }
        FloorParams::new(self.gamma, k)
    }
}

/// `η_t`: `eta0` or `eta0 / √t`.
pub fn step_size(t: usize, cfg: &AscentConfig) -> f64 {
    debug_assert!(t >= 1);
    match cfg.schedule {
        Schedule::Constant => cfg.eta0,
        Schedule::InvSqrt => cfg.eta0 / (t as f64).sqrt(),
    }
}

/// What one round did.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub next: Weights,
    pub action: usize,
    pub reward: f64,
    pub ghat: Vec<f64>,
    pub snapshot: ScoreSnapshot,
}

/// The score the learner uses at round `t` under `mode`.
pub fn round_snapshot(mode: Mode, w: &Weights, instance: &BanditInstance, state: &PluginState, t: usize) -> Result<ScoreSnapshot> {
    match mode {
        Mode::ExactIf => instance.exact_snapshot(w, t),
        Mode::EstimatedIf => build_plugin_snapshot(state, w, instance, t),
    }
}

/// Draws an index from the categorical law `w`.
pub fn draw_arm<R: Rng + ?Sized>(w: &Weights, rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &wk) in w.as_slice().iter().enumerate() {
        acc += wk;
        if u < acc {
            return k;
        }
    }
    w.len() - 1
}

/// One round at time `t`, given a snapshot already built from data up to `t - 1`.
#[allow(clippy::too_many_arguments)]
pub fn step_with_snapshot<R: Rng + ?Sized>(
    w: &Weights,
    t: usize,
    cfg: &AscentConfig,
    floor: &FloorParams,
    instance: &BanditInstance,
    state: &mut PluginState,
    snapshot: ScoreSnapshot,
    rng: &mut R,
) -> Result<StepOutcome> {
    let action = draw_arm(w, rng);
    let reward = instance.arms()[action].sample(rng);
    let ghat = score_gradient(w, action, reward, &snapshot);
    let next = kl_project_floor(&mw_update(w, &ghat, step_size(t, cfg))?, floor)?;
    state.record(action, reward);
    Ok(StepOutcome { next, action, reward, ghat, snapshot })
}

/// One full round at time `t`: snapshot, draw, update, project, record.
pub fn step<R: Rng + ?Sized>(
    w: &Weights,
    t: usize,
    cfg: &AscentConfig,
    floor: &FloorParams,
    instance: &BanditInstance,
    state: &mut PluginState,
    rng: &mut R,
) -> Result<StepOutcome> {
    let snapshot = round_snapshot(cfg.mode, w, instance, state, t)?;
    step_with_snapshot(w, t, cfg, floor, instance, state, snapshot, rng)
}

/// Per-round record; `wbar` is the running average of `w_1..w_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub w: Weights,
    pub wbar: Weights,
    pub utility_w: f64,
    pub utility_wbar: f64,
    /// `U* - U(wbar_t)`.
    pub gap: f64,
    /// `‖b‖_∞` of the bias Monte Carlo at this round, if it ran.
    pub bias_inf: Option<f64>,
    /// Largest componentwise standard error of that estimate.
    pub bias_max_se: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub mode: Mode,
    pub ustar: f64,
    pub steps: Vec<StepRecord>,
    pub pulls: Vec<usize>,
    /// Plug-in state after the last round.
    pub final_state_pulls: usize,
    empirical: Vec<Vec<f64>>,
}

impl EpisodeTrace {
    pub fn final_wbar(&self) -> &Weights {
        &self.steps.last().expect("episodes have at least one round").wbar
    }

    pub fn final_utility(&self) -> f64 {
        self.steps.last().expect("episodes have at least one round").utility_wbar
    }

    /// Sorted rewards observed per arm over the episode.
    pub fn observed(&self) -> &[Vec<f64>] {
        &self.empirical
    }
}

/// Runs one episode of `cfg.horizon` rounds from the uniform start.
///
/// Randomness comes from substreams `(seed, episode)`: one lane drives the
/// learner, another the bias Monte Carlo, so the diagnostic never perturbs
/// the trajectory.
pub fn run_episode(cfg: &AscentConfig, instance: &BanditInstance, ustar: f64, seed: u64, episode: u64) -> Result<EpisodeTrace> {
    let k = instance.k();
    if k < 2 {
        return Err(Error::InvalidConfig("an episode needs K >= 2 arms".into()));
    }
    let floor = cfg.validate(k)?;
    let mut rng = substream(seed, episode, Lane::Episode);
    let mut bias_rng = substream(seed, episode, Lane::Bias);
    let mut state = PluginState::new(k, cfg.prior);
    let mut w = kl_project_floor(&Weights::uniform(k), &floor)?;
    let mut running = vec![0.0; k];
    let mut steps = Vec::with_capacity(cfg.horizon);

    for t in 1..=cfg.horizon {
        running.iter_mut().zip(w.as_slice()).for_each(|(s, x)| *s += x);
        let wbar = Weights::from_unnormalized(running.iter().map(|s| s / t as f64).collect())?;
        let utility_w = instance.utility(&w)?;
        let utility_wbar = instance.utility(&wbar)?;

        let snapshot = round_snapshot(cfg.mode, &w, instance, &state, t)?;
        let bias = if cfg.bias_every > 0 && t % cfg.bias_every == 0 {
            Some(bias_mc(&snapshot, instance, &w, cfg.n_mc, &mut bias_rng)?)
        } else {
            None
        };
        let outcome = step_with_snapshot(&w, t, cfg, &floor, instance, &mut state, snapshot, &mut rng)?;

        steps.push(StepRecord {
            t,
            w,
            wbar,
            utility_w,
            utility_wbar,
            gap: ustar - utility_wbar,
            bias_inf: bias.as_ref().map(|b| b.sup_norm()),
            bias_max_se: bias.as_ref().map(|b| b.max_se()),
        });
        w = outcome.next;
    }
    Ok(EpisodeTrace {
        mode: cfg.mode,
        ustar,
        pulls: state.pulls(),
        final_state_pulls: state.total_pulls(),
        empirical: state.arms().iter().map(|a| a.samples().to_vec()).collect(),
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::ArmLaw;
    use crate::plugin::PriorConfig;
    use crate::utility::{ScoreKernel, ScoreSource, UtilitySpec};

    fn s1(spec: UtilitySpec) -> BanditInstance {
        BanditInstance::new(vec![ArmLaw::beta(2.0, 2.0).unwrap(), ArmLaw::beta(4.0, 2.0).unwrap()], spec, 512).unwrap()
    }

    #[test]
    fn step_size_examples() {
        let mut cfg = AscentConfig { eta0: 0.5, ..Default::default() };
        assert_eq!(step_size(1, &cfg), 0.5);
        assert_eq!(step_size(4, &cfg), 0.25);
        cfg.schedule = Schedule::Constant;
        assert_eq!(step_size(1, &cfg), 0.5);
        assert_eq!(step_size(977, &cfg), 0.5);
    }

    #[test]
    fn config_validation() {
        let cfg = AscentConfig::default();
        assert!(cfg.validate(2).is_ok());
        assert!(AscentConfig { gamma: 0.5, ..cfg }.validate(4).is_err());
        assert!(AscentConfig { horizon: 0, ..cfg }.validate(2).is_err());
        assert!(AscentConfig { eta0: 0.0, ..cfg }.validate(2).is_err());
        let no_prior = PriorConfig::new(0.0, 0.5, 0.3).unwrap();
        assert!(AscentConfig { mode: Mode::EstimatedIf, prior: no_prior, ..cfg }.validate(2).is_err());
    }

    #[test]
    fn zero_score_is_a_fixed_point() {
        let q = ArmLaw::uniform(0.0, 1.0).unwrap();
        let inst = BanditInstance::new(vec![q; 3], UtilitySpec::Wasserstein { reference: q }, 256).unwrap();
        let cfg = AscentConfig { mode: Mode::EstimatedIf, ..Default::default() };
        let floor = cfg.validate(3).unwrap();
        let mut state = PluginState::new(3, cfg.prior);
        let w = Weights::new(vec![0.2, 0.3, 0.5]).unwrap();
        let mut rng = substream(0, 0, Lane::Episode);
        // The first snapshot has no data: P̂ = Q, score ≡ 0.
        let out = step(&w, 1, &cfg, &floor, &inst, &mut state, &mut rng).unwrap();
        assert!(out.next.as_slice().iter().zip(w.as_slice()).all(|(a, b)| (a - b).abs() < 1e-15));
        let cfg = AscentConfig { mode: Mode::ExactIf, ..cfg };
        let out = step(&w, 2, &cfg, &floor, &inst, &mut state, &mut rng).unwrap();
        assert!(out.next.as_slice().iter().zip(w.as_slice()).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn hand_composed_step() {
        // A variance kernel centred on the drawn reward scores exactly 2 there, so
        // Ĝ is ±2 and the step multiplies the odds of the drawn arm by exp(4η).
        let inst = s1(UtilitySpec::Variance);
        for (eta, drawn) in [(2f64.ln() / 2.0, 0.8), (2f64.ln() / 4.0, 2.0 / 3.0)] {
            let cfg = AscentConfig { eta0: eta, schedule: Schedule::Constant, ..Default::default() };
            let floor = cfg.validate(2).unwrap();
            let w = Weights::uniform(2);
            let mut rng = substream(3, 0, Lane::Episode);
            let mut state = PluginState::new(2, cfg.prior);
            let mut probe = rng.clone();
            let action = draw_arm(&w, &mut probe);
            let reward = inst.arms()[action].sample(&mut probe);
            let snap = ScoreSnapshot {
                kernel: ScoreKernel::Variance { mean: reward, variance: -2.0 },
                source: ScoreSource::Exact,
                round: 1,
            };
            let out = step_with_snapshot(&w, 1, &cfg, &floor, &inst, &mut state, snap, &mut rng).unwrap();
            assert_eq!((out.action, out.reward), (action, reward));
            assert_eq!(out.ghat[action], 2.0);
            assert_eq!(out.ghat[1 - action], -2.0);
            assert!((out.next[action] - drawn).abs() < 1e-12, "{:?}", out.next);
            assert_eq!(state.total_pulls(), 1);
        }
    }

    #[test]
    fn iterates_stay_feasible() {
        let inst = s1(UtilitySpec::Variance);
        let cfg = AscentConfig { horizon: 1000, bias_every: 0, ..Default::default() };
        let trace = run_episode(&cfg, &inst, 0.0, 5, 0).unwrap();
        assert_eq!(trace.steps.len(), 1000);
        assert!(trace.steps.iter().all(|s| s.w.min() >= 0.03 - 1e-12));
        assert_eq!(trace.pulls.iter().sum::<usize>(), 1000);
    }

    #[test]
    fn running_average_is_exact() {
        let inst = s1(UtilitySpec::Variance);
        let cfg = AscentConfig { horizon: 300, mode: Mode::EstimatedIf, bias_every: 0, ..Default::default() };
        let trace = run_episode(&cfg, &inst, 0.0, 6, 2).unwrap();
        let mut sum = [0.0; 2];
        for s in &trace.steps {
            sum[0] += s.w[0];
            sum[1] += s.w[1];
            let t = s.t as f64;
            assert!((s.wbar[0] - sum[0] / t).abs() < 1e-10 && (s.wbar[1] - sum[1] / t).abs() < 1e-10);
        }
    }

    #[test]
    fn episodes_are_deterministic() {
        let inst = s1(UtilitySpec::Wasserstein { reference: ArmLaw::uniform(0.0, 1.0).unwrap() });
        let cfg = AscentConfig { horizon: 120, mode: Mode::EstimatedIf, bias_every: 40, n_mc: 50, ..Default::default() };
        let a = run_episode(&cfg, &inst, 0.0, 9, 4).unwrap();
        let b = run_episode(&cfg, &inst, 0.0, 9, 4).unwrap();
        assert_eq!(a, b);
        let c = run_episode(&cfg, &inst, 0.0, 9, 5).unwrap();
        assert_ne!(a, c);
        // The bias lane does not perturb the trajectory.
        let quiet = run_episode(&AscentConfig { bias_every: 0, ..cfg }, &inst, 0.0, 9, 4).unwrap();
        assert!(a.steps.iter().zip(&quiet.steps).all(|(x, y)| x.w == y.w));
        assert_eq!(a.steps.iter().filter(|s| s.bias_inf.is_some()).count(), 3);
    }

    #[test]
    fn snapshot_excludes_current_round() {
        let inst = s1(UtilitySpec::Variance);
        let cfg = AscentConfig { mode: Mode::EstimatedIf, ..Default::default() };
        let floor = cfg.validate(2).unwrap();
        let mut state = PluginState::new(2, cfg.prior);
        let mut rng = substream(12, 0, Lane::Episode);
        let mut w = Weights::uniform(2);
        for t in 1..=30 {
            let before = state.clone();
            let out = step(&w, t, &cfg, &floor, &inst, &mut state, &mut rng).unwrap();
            // Replaying with the round-t observation withheld reproduces the snapshot.
            let replay = build_plugin_snapshot(&before, &w, &inst, t).unwrap();
            let after = build_plugin_snapshot(&state, &w, &inst, t).unwrap();
            for r in [0.1, 0.5, 0.9] {
                assert_eq!(out.snapshot.eval(r), replay.eval(r));
                assert_ne!(out.snapshot.eval(r), after.eval(r));
            }
            w = out.next;
        }
    }

    #[test]
    fn identical_arms_have_zero_gap() {
        let b = ArmLaw::beta(2.0, 5.0).unwrap();
        let inst = BanditInstance::new(vec![b; 3], UtilitySpec::Variance, 64).unwrap();
        let ustar = inst.utility(&Weights::uniform(3)).unwrap();
        let cfg = AscentConfig { horizon: 200, bias_every: 0, ..Default::default() };
        let trace = run_episode(&cfg, &inst, ustar, 1, 0).unwrap();
        assert!(trace.steps.iter().all(|s| s.gap.abs() < 1e-15));
    }

    #[test]
    fn single_arm_is_rejected() {
        let inst = BanditInstance::new(vec![ArmLaw::beta(2.0, 2.0).unwrap()], UtilitySpec::Variance, 64).unwrap();
        assert!(run_episode(&AscentConfig::default(), &inst, 0.0, 0, 0).is_err());
    }
}
