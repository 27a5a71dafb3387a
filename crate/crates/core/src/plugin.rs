//! Plug-in influence-function scores built from the rewards observed so far.
//!
//! Each arm's data is shrunk toward a prior of `alpha0` pseudo-observations:
//! moments toward `(m0, s0)` for the variance utility, and the empirical cdf
//! toward the reference law `Q` for the Wasserstein utility. The score is then
//! the influence function of the estimated mixture.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distributions::{ArmLaw, Cdf, EmpiricalArm};
use crate::error::{Error, Result};
use crate::simplex::Weights;
use crate::utility::{BanditInstance, PotentialGrid, ScoreKernel, ScoreSnapshot, ScoreSource, UtilitySpec, W2_SCORE_SCALE};

/// Count prior used to regularize the plug-in estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub alpha0: f64,
    pub m0: f64,
    pub s0: f64,
}

impl PriorConfig {
    pub fn new(alpha0: f64, m0: f64, s0: f64) -> Result<Self> {
        if !(alpha0 >= 0.0 && alpha0.is_finite()) {
            return Err(Error::InvalidConfig(format!("alpha0 must be a nonnegative number, got {alpha0}")));
        }
        if !(m0.is_finite() && s0.is_finite()) || s0 < m0 * m0 {
            return Err(Error::InvalidConfig(format!("prior moments m0={m0}, s0={s0} need s0 >= m0²")));
        }
        Ok(Self { alpha0, m0, s0 })
    }

    /// Uniform-law moments on `[lo, hi]` with `alpha0` pseudo-counts.
    pub fn uniform_on(lo: f64, hi: f64, alpha0: f64) -> Result<Self> {
        let m0 = 0.5 * (lo + hi);
        let s0 = (hi.powi(3) - lo.powi(3)) / (3.0 * (hi - lo));
        Self::new(alpha0, m0, s0.max(m0 * m0))
    }
}

impl Default for PriorConfig {
    fn default() -> Self {
        Self { alpha0: 1.0, m0: 0.5, s0: 1.0 / 3.0 }
    }
}

/// `((S + α₀ m₀)/(N + α₀), (S⁽²⁾ + α₀ s₀)/(N + α₀))`.
pub fn shrunk_moments(arm: &EmpiricalArm, prior: &PriorConfig) -> Result<(f64, f64)> {
    let denom = arm.count() as f64 + prior.alpha0;
    if denom <= 0.0 {
        return Err(Error::Undefined("no observations and alpha0 = 0".into()));
    }
    Ok(((arm.sum() + prior.alpha0 * prior.m0) / denom, (arm.sum_sq() + prior.alpha0 * prior.s0) / denom))
}

/// `(N F_N(x) + α₀ Q(x)) / (N + α₀)`.
pub fn regularized_cdf(arm: &EmpiricalArm, reference: &ArmLaw, alpha0: f64, x: f64) -> Result<f64> {
    let n = arm.count() as f64;
    if n + alpha0 <= 0.0 {
        return Err(Error::Undefined("no observations and alpha0 = 0".into()));
    }
    let empirical = arm.ecdf().map_or(0.0, |f| f.cdf(x));
    Ok((n * empirical + alpha0 * reference.cdf(x)) / (n + alpha0))
}

/// Data the learner has seen: one empirical record per arm.
#[derive(Debug, Clone)]
pub struct PluginState {
    arms: Vec<EmpiricalArm>,
    prior: PriorConfig,
}

impl PluginState {
    pub fn new(k: usize, prior: PriorConfig) -> Self {
        Self { arms: vec![EmpiricalArm::new(); k], prior }
    }

    pub fn prior(&self) -> &PriorConfig {
        &self.prior
    }

    pub fn arm(&self, k: usize) -> &EmpiricalArm {
        &self.arms[k]
    }

    pub fn arms(&self) -> &[EmpiricalArm] {
        &self.arms
    }

    pub fn record(&mut self, arm: usize, reward: f64) {
        self.arms[arm].push(reward);
    }

    pub fn total_pulls(&self) -> usize {
        self.arms.iter().map(EmpiricalArm::count).sum()
    }

    pub fn pulls(&self) -> Vec<usize> {
        self.arms.iter().map(EmpiricalArm::count).collect()
    }

    /// Regularized per-arm cdf at the grid nodes of `instance`.
    pub fn regularized_cdf_table(&self, k: usize, instance: &BanditInstance) -> Result<Vec<f64>> {
        let arm = &self.arms[k];
        let n = arm.count() as f64;
        let alpha0 = self.prior.alpha0;
        if n + alpha0 <= 0.0 {
            return Err(Error::Undefined(format!("arm {k} has no observations and alpha0 = 0")));
        }
        let q = instance.reference_cdf();
        Ok(match arm.ecdf() {
            None => q.to_vec(),
            Some(f) => f
                .on_grid(instance.grid())
                .iter()
                .zip(q)
                .map(|(e, q)| (n * e + alpha0 * q) / (n + alpha0))
                .collect(),
        })
    }
}

/// Plug-in score `IF[P̂^w]` at round `round`.
pub fn build_plugin_snapshot(state: &PluginState, w: &Weights, instance: &BanditInstance, round: usize) -> Result<ScoreSnapshot> {
    if w.len() != state.arms.len() || w.len() != instance.k() {
        return Err(Error::DimensionMismatch { expected: instance.k(), got: w.len() });
    }
    let prior = &state.prior;
    let kernel = match instance.spec() {
        UtilitySpec::Variance => {
            let (mut mean, mut m2) = (0.0, 0.0);
            for (arm, &wk) in state.arms.iter().zip(w.as_slice()) {
                let (mu, s) = shrunk_moments(arm, prior)?;
                mean += wk * mu;
                m2 += wk * s;
            }
            let variance = m2 - mean * mean;
            debug_assert!(variance >= -1e-12, "plug-in variance {variance} < 0");
            ScoreKernel::Variance { mean, variance: variance.max(0.0) }
        }
        UtilitySpec::Wasserstein { reference } => {
            let grid = instance.grid();
            let mut mix = vec![0.0; grid.intervals() + 1];
            for (k, &wk) in w.as_slice().iter().enumerate() {
                let table = state.regularized_cdf_table(k, instance)?;
                mix.iter_mut().zip(&table).for_each(|(m, f)| *m += wk * f);
            }
            mix.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
            let pg = PotentialGrid::from_cdf_values(&mix, reference, grid);
            // E[φ] under the regularized empirical mixture: sample averages plus
            // the prior's share integrated against Q.
            let phi_q = pg.mean_under_cdf(instance.reference_cdf());
            let mean_phi = state
                .arms
                .iter()
                .zip(w.as_slice())
                .map(|(arm, &wk)| {
                    let n = arm.count() as f64;
                    let data: f64 = arm.samples().iter().map(|&r| pg.phi_at(r)).sum();
                    wk * (data + prior.alpha0 * phi_q) / (n + prior.alpha0)
                })
                .sum();
            ScoreKernel::Potential { potential: Arc::new(pg), mean_phi, scale: W2_SCORE_SCALE }
        }
    };
    Ok(ScoreSnapshot { kernel, source: ScoreSource::Plugin, round })
}

/// Simplex-coordinate estimator `Ĝ_k = (1{a = k}/w_k - 1) · score(r)`.
pub fn score_gradient(w: &Weights, action: usize, reward: f64, snap: &ScoreSnapshot) -> Vec<f64> {
    let s = snap.eval(reward);
    w.as_slice()
        .iter()
        .enumerate()
        .map(|(k, &wk)| if k == action { (1.0 / wk - 1.0) * s } else { -s })
        .collect()
}

/// Logit-space estimator `Ĥ = diag(w) Ĝ`.
pub fn logit_gradient(w: &Weights, ghat: &[f64]) -> Vec<f64> {
    w.as_slice().iter().zip(ghat).map(|(w, g)| w * g).collect()
}
