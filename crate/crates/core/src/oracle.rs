//! Offline reference optimum, Monte Carlo bias estimation and regret bookkeeping.

use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ascent::{draw_arm, EpisodeTrace};
use crate::error::{Error, Result};
use crate::rng::{substream, Lane};
use crate::simplex::{kl_project_floor, mw_update, FloorParams, Weights};
use crate::utility::{BanditInstance, ScoreSnapshot};

/// Coordinates above `gamma + ACTIVE_SLACK` count as active in the certificate.
pub const ACTIVE_SLACK: f64 = 1e-6;

/// Certificates above this are flagged as non-converged.
pub const FLAG_THRESHOLD: f64 = 1e-4;

// Iterations over which the decaying-step phase must halve its certificate.
const STALL_WINDOW: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleMethod {
    DeterministicAscent,
    Grid2,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Iteration cap of the `eta0 / √t` phase.
    pub iterations: usize,
    pub eta0: f64,
    /// Random interior starts in addition to the uniform start.
    pub starts: usize,
    pub seed: u64,
    /// The `eta0 / √t` phase hands over to the adaptive phase at this certificate.
    pub handoff: f64,
    /// Iteration cap and target certificate of the adaptive phase.
    pub polish_iterations: usize,
    pub polish_target: f64,
    /// Tolerance in U for the K = 2 segment search.
    pub segment_tol: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            iterations: 200_000,
            eta0: 0.5,
            starts: 8,
            seed: 0,
            handoff: 1e-6,
            polish_iterations: 20_000,
            polish_target: 1e-11,
            segment_tol: 1e-5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub wstar: Weights,
    pub ustar: f64,
    pub method: OracleMethod,
    pub iterations: usize,
    pub certificate: f64,
    /// Set when the certificate exceeds [`FLAG_THRESHOLD`], or when the K = 2
    /// segment search disagrees with the ascent by more than the tolerance.
    pub flagged: bool,
}

/// First-order optimality residual on the truncated simplex.
///
/// Active coordinates (`w_k > gamma + ACTIVE_SLACK`) must share one gradient
/// level; floored coordinates must not exceed the lowest active level.
pub fn kkt_certificate(w: &Weights, g: &[f64], gamma: f64) -> f64 {
    let (mut lo, mut hi, mut floor_max) = (f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (&wk, &gk) in w.as_slice().iter().zip(g) {
        if wk > gamma + ACTIVE_SLACK {
            lo = lo.min(gk);
            hi = hi.max(gk);
        } else {
            floor_max = floor_max.max(gk);
        }
    }
    if lo > hi {
        return 0.0;
    }
    (hi - lo).max(floor_max - lo).max(0.0)
}

struct Candidate {
    w: Weights,
    u: f64,
    iterations: usize,
    certificate: f64,
}

fn ascend(instance: &BanditInstance, floor: &FloorParams, start: Weights, opts: &OracleOptions) -> Result<Candidate> {
    let gamma = floor.gamma();
    let mut w = kl_project_floor(&start, floor)?;
    let mut g = instance.exact_gc(&w)?;
    let mut cert = kkt_certificate(&w, &g, gamma);
    let mut iterations = 0;

    // The phase also ends once the certificate stops halving over a window,
    // since the decaying step then makes little further progress.
    let mut window_start = cert;
    while iterations < opts.iterations && cert > opts.handoff {
        iterations += 1;
        let eta = opts.eta0 / (iterations as f64).sqrt();
        w = kl_project_floor(&mw_update(&w, &g, eta)?, floor)?;
        g = instance.exact_gc(&w)?;
        cert = kkt_certificate(&w, &g, gamma);
        if iterations % STALL_WINDOW == 0 {
            if cert > 0.5 * window_start {
                break;
            }
            window_start = cert;
        }
    }

    // Adaptive phase: same mirror step, grown after an accepted step and halved
    // otherwise. A step is accepted when U still ascends at the candidate along
    // the segment from w, which by concavity implies U(cand) >= U(w). Gradients
    // resolve this near the optimum where differences in U are at round-off.
    let mut eta = opts.eta0;
    let mut polish = 0;
    while polish < opts.polish_iterations && cert > opts.polish_target && eta > 1e-12 {
        polish += 1;
        let cand = kl_project_floor(&mw_update(&w, &g, eta)?, floor)?;
        if cand == w {
            break;
        }
        let gc = instance.exact_gc(&cand)?;
        let slope: f64 = gc.iter().zip(cand.as_slice().iter().zip(w.as_slice())).map(|(g, (c, w))| g * (c - w)).sum();
        if slope >= 0.0 {
            w = cand;
            g = gc;
            cert = kkt_certificate(&w, &g, gamma);
            eta = (eta * 2.0).min(1e6);
        } else {
            eta *= 0.5;
        }
    }
    Ok(Candidate { u: instance.utility(&w)?, w, iterations: iterations + polish, certificate: cert })
}

fn random_start(k: usize, seed: u64, index: u64) -> Result<Weights> {
    let mut rng = substream(seed, index, Lane::Oracle);
    Weights::from_unnormalized((0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect())
}

// Golden-section search for the concave map a ↦ U(a, 1 - a) on [gamma, 1 - gamma].
fn segment_search(instance: &BanditInstance, gamma: f64) -> Result<(Weights, usize)> {
    let at = |a: f64| Weights::new(vec![a, 1.0 - a]);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (gamma, 1.0 - gamma);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let mut f1 = instance.utility(&at(x1)?)?;
    let mut f2 = instance.utility(&at(x2)?)?;
    let mut evals = 2;
    while hi - lo > 1e-9 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = instance.utility(&at(x2)?)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = instance.utility(&at(x1)?)?;
        }
        evals += 1;
    }
    // The maximum may sit on a floor.
    let mut best = (0.5 * (lo + hi), instance.utility(&at(0.5 * (lo + hi))?)?);
    for a in [gamma, 1.0 - gamma] {
        let u = instance.utility(&at(a)?)?;
        if u > best.1 {
            best = (a, u);
        }
    }
    Ok((at(best.0)?, evals + 3))
}

/// The maximizer of `U` over the truncated simplex `Δ_gamma`.
///
/// Mirror ascent with exact gradients from the uniform start and
/// `opts.starts` random interior starts (run in parallel); the best point
/// wins. For two arms a golden-section search on the segment cross-checks
/// the answer.
pub fn solve_offline(instance: &BanditInstance, gamma: f64, opts: &OracleOptions) -> Result<OracleResult> {
    let k = instance.k();
    let floor = FloorParams::new(gamma, k)?;
    let starts: Vec<Weights> = std::iter::once(Ok(Weights::uniform(k)))
        .chain((0..opts.starts as u64).map(|i| random_start(k, opts.seed, i)))
        .collect::<Result<_>>()?;
    let candidates: Vec<Candidate> = starts
        .into_par_iter()
        .map(|s| ascend(instance, &floor, s, opts))
        .collect::<Result<_>>()?;
    // Earlier starts win ties, so degenerate instances return the uniform start.
    let mut best = 0;
    for (i, c) in candidates.iter().enumerate().skip(1) {
        if c.u > candidates[best].u + 1e-14 {
            best = i;
        }
    }
    let best = &candidates[best];
    let iterations = candidates.iter().map(|c| c.iterations).sum();
    let mut result = OracleResult {
        wstar: best.w.clone(),
        ustar: best.u,
        method: OracleMethod::DeterministicAscent,
        iterations,
        certificate: best.certificate,
        flagged: best.certificate > FLAG_THRESHOLD,
    };

    if k == 2 {
        let (w2, evals) = segment_search(instance, gamma)?;
        let u2 = instance.utility(&w2)?;
        if (u2 - result.ustar).abs() > opts.segment_tol {
            result.flagged = true;
        }
        // Below this margin the two points differ by round-off in the tabulated
        // utility, and the ascent point has the smaller gradient residual.
        if u2 > result.ustar + 1e-12 * (1.0 + result.ustar.abs()) {
            let g = instance.exact_gc(&w2)?;
            result.certificate = kkt_certificate(&w2, &g, gamma);
            result.flagged |= result.certificate > FLAG_THRESHOLD;
            result.wstar = w2;
            result.ustar = u2;
            result.method = OracleMethod::Grid2;
        }
        result.iterations += evals;
    }
    Ok(result)
}

/// Number of coordinates strictly above the floor by more than `tol`.
pub fn active_support(w: &Weights, gamma: f64, tol: f64) -> usize {
    w.as_slice().iter().filter(|&&x| x > gamma + tol).count()
}

/// Componentwise Monte Carlo mean with standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasEstimate {
    pub b: Vec<f64>,
    pub se: Vec<f64>,
    pub n_mc: usize,
}

impl BiasEstimate {
    /// `‖b‖_∞`.
    pub fn sup_norm(&self) -> f64 {
        self.b.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn max_se(&self) -> f64 {
        self.se.iter().fold(0.0, |m, x| m.max(*x))
    }

    /// Whether every `|b_k| <= z se_k`.
    pub fn within(&self, z: f64) -> bool {
        self.b.iter().zip(&self.se).all(|(b, s)| b.abs() <= z * s)
    }
}

// Running per-component sums for mean and standard error.
struct Accumulator {
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    n: usize,
}

impl Accumulator {
    fn new(k: usize) -> Self {
        Self { sum: vec![0.0; k], sum_sq: vec![0.0; k], n: 0 }
    }

    fn push(&mut self, x: impl Iterator<Item = f64>) {
        for ((s, q), v) in self.sum.iter_mut().zip(&mut self.sum_sq).zip(x) {
            *s += v;
            *q += v * v;
        }
        self.n += 1;
    }

    fn finish(self) -> BiasEstimate {
        let n = self.n as f64;
        let b: Vec<f64> = self.sum.iter().map(|s| s / n).collect();
        let se = self
            .sum_sq
            .iter()
            .zip(&b)
            .map(|(q, m)| ((q - n * m * m).max(0.0) / (n - 1.0) / n).sqrt())
            .collect();
        BiasEstimate { b, se, n_mc: self.n }
    }
}

/// Monte Carlo estimate of the bias `E[Ĝ] - g_C(w)` of the learner's score.
///
/// Each draw `(A, R)` from `w` and the true arms feeds both the learner's
/// estimator and the exact one built from `IF[P^w]`, so the per-draw
/// difference is `(1{A = k}/w_k - 1) (ŝ(R) - s(R))`.
pub fn bias_mc<R: Rng + ?Sized>(
    learner: &ScoreSnapshot,
    instance: &BanditInstance,
    w: &Weights,
    n_mc: usize,
    rng: &mut R,
) -> Result<BiasEstimate> {
    if n_mc < 2 {
        return Err(Error::InvalidConfig("n_mc must be at least 2".into()));
    }
    let exact = instance.exact_snapshot(w, learner.round)?;
    let k = w.len();
    let mut acc = Accumulator::new(k);
    for _ in 0..n_mc {
        let a = draw_arm(w, rng);
        let r = instance.arms()[a].sample(rng);
        let d = learner.eval(r) - exact.eval(r);
        acc.push((0..k).map(|j| if j == a { (1.0 / w[j] - 1.0) * d } else { -d }));
    }
    Ok(acc.finish())
}

/// Monte Carlo mean of the logit-space estimator `diag(w) Ĝ` under `snapshot`.
pub fn logit_gradient_mc<R: Rng + ?Sized>(
    snapshot: &ScoreSnapshot,
    instance: &BanditInstance,
    w: &Weights,
    n: usize,
    rng: &mut R,
) -> Result<BiasEstimate> {
    if n < 2 {
        return Err(Error::InvalidConfig("need at least 2 draws".into()));
    }
    let k = w.len();
    let mut acc = Accumulator::new(k);
    for _ in 0..n {
        let a = draw_arm(w, rng);
        let s = snapshot.eval(instance.arms()[a].sample(rng));
        acc.push((0..k).map(|j| if j == a { (1.0 - w[j]) * s } else { -w[j] * s }));
    }
    Ok(acc.finish())
}

/// Cumulative regret `Σ_t (ustar - U(w_t))` and the gap curve `ustar - U(wbar_t)`.
pub fn regret_accumulate(trace: &EpisodeTrace, ustar: f64) -> (f64, Vec<f64>) {
    let reg = trace.steps.iter().map(|s| ustar - s.utility_w).sum();
    let gaps = trace.steps.iter().map(|s| ustar - s.utility_wbar).collect();
    (reg, gaps)
}
