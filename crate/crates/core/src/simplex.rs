//! Probability-simplex primitives.
//!
//! Weights live on the simplex; the learner additionally keeps them on the
//! floor-truncated simplex `{w : w_k >= gamma, sum w = 1}`. The update is the
//! entropic mirror step (multiplicative weights) followed by the KL projection
//! onto the truncated set, which has a clip-and-rescale closed form.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weights are clamped to this before taking logs.
pub const LOG_FLOOR: f64 = 1e-300;

const SUM_TOL: f64 = 1e-9;

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Weights(Vec<f64>);

impl Weights {
    /// Validates nonnegativity and unit mass, then renormalizes exactly.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidWeights(format!("entry {bad} is negative or not finite")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidWeights(format!("entries sum to {sum}")));
        }
        Ok(Self::normalized_unchecked(w, sum))
    }

    /// Normalizes a nonnegative vector with positive mass.
    pub fn from_unnormalized(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidWeights("empty weight vector".into()));
        }
        if let Some(bad) = w.iter().find(|x| !x.is_finite() || **x < 0.0) {
            return Err(Error::InvalidWeights(format!("entry {bad} is negative or not finite")));
        }
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidWeights("zero total mass".into()));
        }
        Ok(Self::normalized_unchecked(w, sum))
    }

    fn normalized_unchecked(mut w: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            w.iter_mut().for_each(|x| *x /= sum);
        }
        Weights(w)
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform weights need at least one coordinate");
        Weights(vec![1.0 / k as f64; k])
    }

    /// The vertex `e_index` of the K-simplex.
    pub fn vertex(k: usize, index: usize) -> Self {
        let mut w = vec![0.0; k];
        w[index] = 1.0;
        Weights(w)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(a, b)| a * b).sum()
    }

    /// `(1 - t) * self + t * other`.
    pub fn lerp(&self, other: &Weights, t: f64) -> Weights {
        let w = self.0.iter().zip(&other.0).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        Weights(w)
    }
}

impl std::ops::Index<usize> for Weights {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl TryFrom<Vec<f64>> for Weights {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Weights::new(v)
    }
}

impl From<Weights> for Vec<f64> {
    fn from(w: Weights) -> Vec<f64> {
        w.0
    }
}

/// The floor constraint defining the truncated simplex.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FloorParams {
    gamma: f64,
    k: usize,
}

impl FloorParams {
    pub fn new(gamma: f64, k: usize) -> Result<Self> {
        if k < 2 || !(gamma > 0.0) || gamma * k as f64 >= 1.0 {
            return Err(Error::InfeasibleFloor { gamma, k });
        }
        Ok(Self { gamma, k })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Whether every coordinate is at least `gamma - tol`.
    pub fn contains(&self, w: &Weights, tol: f64) -> bool {
        w.len() == self.k && w.as_slice().iter().all(|&x| x >= self.gamma - tol)
    }

    /// Upper bound on `KL(u || w)` over pairs of points of the truncated simplex.
    pub fn kl_diameter(&self) -> f64 {
        (1.0 / self.gamma - (self.k as f64 - 1.0)).ln()
    }
}

/// Softmax with max-subtraction.
pub fn softmax(h: &[f64]) -> Weights {
    assert!(!h.is_empty(), "softmax of an empty vector");
    let max = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = h.iter().map(|x| (x - max).exp()).collect();
    let sum: f64 = e.iter().sum();
    Weights(e.into_iter().map(|x| x / sum).collect())
}

/// Jacobian `diag(w) - w wᵀ` of the softmax at `h`, row-major.
pub fn softmax_jacobian(h: &[f64]) -> Vec<Vec<f64>> {
    let w = softmax(h);
    let w = w.as_slice();
    (0..w.len())
        .map(|i| {
            (0..w.len())
                .map(|j| if i == j { w[i] - w[i] * w[j] } else { -w[i] * w[j] })
                .collect()
        })
        .collect()
}

/// `KL(u || w) = Σ u_k ln(u_k / w_k)`, with `0 ln 0 = 0`; `+∞` when `u` puts
/// mass where `w` has none.
pub fn kl_divergence(u: &Weights, w: &Weights) -> f64 {
    assert_eq!(u.len(), w.len(), "KL of vectors with different lengths");
    let mut acc = 0.0;
    for (&a, &b) in u.as_slice().iter().zip(w.as_slice()) {
        if a == 0.0 {
            continue;
        }
        if b <= 0.0 {
            return f64::INFINITY;
        }
        acc += a * (a / b).ln();
    }
    acc.max(0.0)
}

/// Multiplicative-weights step `w_k exp(eta g_k) / Σ_j w_j exp(eta g_j)`.
pub fn mw_update(w: &Weights, g: &[f64], eta: f64) -> Result<Weights> {
    if g.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: g.len() });
    }
    if let Some(i) = g.iter().position(|x| !x.is_finite()) {
        return Err(Error::NonFiniteGradient(i));
    }
    let logits: Vec<f64> = w
        .as_slice()
        .iter()
        .zip(g)
        .map(|(&wk, &gk)| wk.max(LOG_FLOOR).ln() + eta * gk)
        .collect();
    Ok(softmax(&logits))
}

/// KL projection onto the truncated simplex.
///
/// The minimizer clips a set `S` of coordinates to `gamma` and rescales the
/// rest by a common factor `c = (1 - |S| gamma) / Σ_{k∉S} w_k`. Starting from
/// `S = ∅`, every coordinate with `c w_k < gamma` joins `S` until nothing
/// changes; `c` only decreases along the way, so at most K passes are needed.
pub fn kl_project_floor(w: &Weights, fp: &FloorParams) -> Result<Weights> {
    project_with_clipped_set(w, fp).map(|(p, _)| p)
}

/// The projection together with its clipped set `S` (`true` = held at the floor).
pub fn project_with_clipped_set(w: &Weights, fp: &FloorParams) -> Result<(Weights, Vec<bool>)> {
    if w.len() != fp.k {
        return Err(Error::DimensionMismatch { expected: fp.k, got: w.len() });
    }
    let gamma = fp.gamma;
    let ws = w.as_slice();
    let mut clipped = vec![false; ws.len()];
    let mut n_clipped = 0usize;
    let mut scale;
    loop {
        let free_mass: f64 = ws
            .iter()
            .zip(&clipped)
            .filter(|(_, &c)| !c)
            .map(|(x, _)| x.max(LOG_FLOOR))
            .sum();
        scale = (1.0 - n_clipped as f64 * gamma) / free_mass;
        let mut changed = false;
        for (k, &x) in ws.iter().enumerate() {
            // Ties stay unclipped.
            if !clipped[k] && scale * x.max(LOG_FLOOR) < gamma {
                clipped[k] = true;
                n_clipped += 1;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let out = ws
        .iter()
        .zip(&clipped)
        .map(|(&x, &c)| if c { gamma } else { scale * x.max(LOG_FLOOR) })
        .collect();
    Ok((Weights(out), clipped))
}
