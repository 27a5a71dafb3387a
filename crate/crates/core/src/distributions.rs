//! Arm reward laws, empirical arms and mixtures on a bounded interval.
//!
//! All laws have compact support. Quantiles are obtained by bisection on the
//! cdf (closed form for the uniform law), which also works for the step cdfs
//! of empirical arms.

use rand::Rng;
use rand_distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simplex::Weights;
use crate::special::{betainc, ln_beta, normal_cdf, normal_pdf, normal_quantile, normal_sf};

/// Absolute tolerance of every bisection quantile.
pub const QUANTILE_TOL: f64 = 1e-10;

/// Default number of quadrature intervals.
pub const DEFAULT_GRID: usize = 4096;

/// Something with a cdf and a bounded support.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;
    fn support(&self) -> (f64, f64);
}

/// Something with a quantile map on `[0, 1]`.
pub trait Quantile {
    fn quantile(&self, p: f64) -> f64;
}

/// Smallest `x` in `[lo, hi]` with `cdf(x) >= p`, to [`QUANTILE_TOL`].
pub fn bisect_quantile(cdf: impl Fn(f64) -> f64, lo: f64, hi: f64, p: f64) -> f64 {
    if p <= 0.0 {
        return lo;
    }
    if p >= 1.0 {
        return hi;
    }
    let (mut a, mut b) = (lo, hi);
    while b - a > QUANTILE_TOL {
        let mid = 0.5 * (a + b);
        if cdf(mid) >= p {
            b = mid;
        } else {
            a = mid;
        }
    }
    b
}

/// Parametric family of an arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ArmKind {
    Beta { alpha: f64, beta: f64 },
    TruncGauss { mu: f64, sigma2: f64, lo: f64, hi: f64 },
    Uniform { lo: f64, hi: f64 },
}

/// First two moments of a law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
}

/// A validated reward law with compact support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArmKind", into = "ArmKind")]
pub struct ArmLaw {
    kind: ArmKind,
    // Beta: ln B(a, b). TruncGauss: normalizing mass Φ(β) - Φ(α).
    norm: f64,
}

impl ArmLaw {
    pub fn new(kind: ArmKind) -> Result<Self> {
        let norm = match kind {
            ArmKind::Beta { alpha, beta } => {
                if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                    return Err(Error::InvalidLaw(format!("Beta({alpha}, {beta}) needs positive finite parameters")));
                }
                ln_beta(alpha, beta)
            }
            ArmKind::TruncGauss { mu, sigma2, lo, hi } => {
                if !(sigma2 > 0.0 && sigma2.is_finite() && mu.is_finite()) {
                    return Err(Error::InvalidLaw(format!("truncated Gaussian needs sigma2 > 0, got {sigma2}")));
                }
                check_interval(lo, hi)?;
                let sigma = sigma2.sqrt();
                let (a, b) = ((lo - mu) / sigma, (hi - mu) / sigma);
                let mass = if a > 0.0 { normal_sf(a) - normal_sf(b) } else { normal_cdf(b) - normal_cdf(a) };
                if !(mass > 0.0) {
                    return Err(Error::InvalidLaw(format!("N({mu}, {sigma2}) has no mass on [{lo}, {hi}]")));
                }
                mass
            }
            ArmKind::Uniform { lo, hi } => {
                check_interval(lo, hi)?;
                0.0
            }
        };
        Ok(Self { kind, norm })
    }

    pub fn beta(alpha: f64, beta: f64) -> Result<Self> {
        Self::new(ArmKind::Beta { alpha, beta })
    }

    pub fn trunc_gauss(mu: f64, sigma2: f64, lo: f64, hi: f64) -> Result<Self> {
        Self::new(ArmKind::TruncGauss { mu, sigma2, lo, hi })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(ArmKind::Uniform { lo, hi })
    }

    pub fn kind(&self) -> ArmKind {
        self.kind
    }

    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            ArmKind::Beta { .. } => (0.0, 1.0),
            ArmKind::TruncGauss { lo, hi, .. } | ArmKind::Uniform { lo, hi } => (lo, hi),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        match self.kind {
            ArmKind::Beta { alpha, beta } => betainc(alpha, beta, x),
            ArmKind::TruncGauss { mu, sigma2, .. } => {
                let sigma = sigma2.sqrt();
                let (a, z) = ((lo - mu) / sigma, (x - mu) / sigma);
                let v = if a > 0.0 {
                    (normal_sf(a) - normal_sf(z)) / self.norm
                } else {
                    (normal_cdf(z) - normal_cdf(a)) / self.norm
                };
                v.clamp(0.0, 1.0)
            }
            ArmKind::Uniform { .. } => (x - lo) / (hi - lo),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        match self.kind {
            ArmKind::Beta { alpha, beta } => {
                if x == 0.0 || x == 1.0 {
                    // Endpoint limits of x^(a-1) (1-x)^(b-1).
                    let e = if x == 0.0 { alpha } else { beta };
                    return if e > 1.0 {
                        0.0
                    } else if e == 1.0 {
                        (-self.norm).exp()
                    } else {
                        f64::INFINITY
                    };
                }
                ((alpha - 1.0) * x.ln() + (beta - 1.0) * (1.0 - x).ln() - self.norm).exp()
            }
            ArmKind::TruncGauss { mu, sigma2, .. } => {
                let sigma = sigma2.sqrt();
                normal_pdf((x - mu) / sigma) / (sigma * self.norm)
            }
            ArmKind::Uniform { .. } => 1.0 / (hi - lo),
        }
    }

    /// Smallest `x` with `cdf(x) >= p`; endpoints for `p` outside `(0, 1)`.
    pub fn quantile(&self, p: f64) -> f64 {
        let (lo, hi) = self.support();
        match self.kind {
            ArmKind::Uniform { .. } => lo + p.clamp(0.0, 1.0) * (hi - lo),
            _ => bisect_quantile(|x| self.cdf(x), lo, hi, p),
        }
    }

    pub fn moments(&self) -> Moments {
        let (mean, second_moment) = match self.kind {
            ArmKind::Beta { alpha: a, beta: b } => {
                let s = a + b;
                (a / s, a * (a + 1.0) / (s * (s + 1.0)))
            }
            ArmKind::Uniform { lo, hi } => ((lo + hi) / 2.0, (hi.powi(3) - lo.powi(3)) / (3.0 * (hi - lo))),
            ArmKind::TruncGauss { mu, sigma2, lo, hi } => {
                let sigma = sigma2.sqrt();
                let (a, b) = ((lo - mu) / sigma, (hi - mu) / sigma);
                let (pa, pb) = (normal_pdf(a), normal_pdf(b));
                let z = self.norm;
                let shift = (pa - pb) / z;
                // a·φ(a) with the 0·∞ limit taken as 0.
                let apa = if pa == 0.0 { 0.0 } else { a * pa };
                let bpb = if pb == 0.0 { 0.0 } else { b * pb };
                let mean = mu + sigma * shift;
                let var = sigma2 * (1.0 + (apa - bpb) / z - shift * shift);
                (mean, var.max(0.0) + mean * mean)
            }
        };
        Moments { mean, second_moment, variance: (second_moment - mean * mean).max(0.0) }
    }

    /// Inverse-cdf transform of a uniform variate `u ∈ [0, 1)`.
    pub fn from_uniform(&self, u: f64) -> f64 {
        let (lo, hi) = self.support();
        match self.kind {
            ArmKind::Uniform { .. } => lo + u * (hi - lo),
            ArmKind::TruncGauss { mu, sigma2, .. } => {
                let sigma = sigma2.sqrt();
                let (a, b) = ((lo - mu) / sigma, (hi - mu) / sigma);
                let z = if a > 0.0 {
                    let q = normal_sf(a) - u * self.norm;
                    -normal_quantile(q.clamp(f64::MIN_POSITIVE, 1.0))
                } else {
                    let p = normal_cdf(a) + u * self.norm;
                    normal_quantile(p.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON))
                };
                (mu + sigma * z.clamp(a, b)).clamp(lo, hi)
            }
            ArmKind::Beta { .. } => self.quantile(u),
        }
    }

    /// One reward draw. Beta uses a gamma-ratio sampler, the others invert the cdf.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self.kind {
            ArmKind::Beta { alpha, beta } => {
                let d = rand_distr::Beta::new(alpha, beta).expect("validated at construction");
                d.sample(rng)
            }
            _ => self.from_uniform(rng.random::<f64>()),
        }
    }
}

fn check_interval(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(Error::InvalidLaw(format!("support [{lo}, {hi}] is empty or unbounded")));
    }
    Ok(())
}

impl TryFrom<ArmKind> for ArmLaw {
    type Error = Error;
    fn try_from(kind: ArmKind) -> Result<Self> {
        ArmLaw::new(kind)
    }
}

impl From<ArmLaw> for ArmKind {
    fn from(a: ArmLaw) -> ArmKind {
        a.kind
    }
}

impl Cdf for ArmLaw {
    fn cdf(&self, x: f64) -> f64 {
        ArmLaw::cdf(self, x)
    }
    fn support(&self) -> (f64, f64) {
        ArmLaw::support(self)
    }
}

impl Quantile for ArmLaw {
    fn quantile(&self, p: f64) -> f64 {
        ArmLaw::quantile(self, p)
    }
}

/// Uniform quadrature grid with `m` intervals on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    lo: f64,
    hi: f64,
    m: usize,
}

impl Grid {
    pub fn new(lo: f64, hi: f64, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidConfig("quadrature grid needs at least one interval".into()));
        }
        check_interval(lo, hi).map_err(|_| Error::InvalidConfig(format!("grid interval [{lo}, {hi}] is invalid")))?;
        Ok(Self { lo, hi, m })
    }

    /// Grid spanning the union of the given supports.
    pub fn covering<'a>(laws: impl IntoIterator<Item = &'a ArmLaw>, m: usize) -> Result<Self> {
        let (lo, hi) = laws
            .into_iter()
            .map(|a| a.support())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (a, b)| (l.min(a), h.max(b)));
        Self::new(lo, hi, m)
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.m
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.m as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.m {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.m).map(move |i| self.node(i))
    }

    pub fn tabulate(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.nodes().map(f).collect()
    }

    pub fn contains_interval(&self, lo: f64, hi: f64) -> bool {
        let slack = 1e-12 * (self.hi - self.lo);
        lo >= self.lo - slack && hi <= self.hi + slack
    }

    /// Composite trapezoid rule over node values.
    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.m + 1);
        let inner: f64 = values[1..self.m].iter().sum();
        self.step() * (inner + 0.5 * (values[0] + values[self.m]))
    }

    /// Running trapezoid integral from the left endpoint, one value per node.
    pub fn cumulative_trapezoid(&self, values: &[f64]) -> Vec<f64> {
        debug_assert_eq!(values.len(), self.m + 1);
        let h = self.step();
        let mut out = Vec::with_capacity(values.len());
        let mut acc = 0.0;
        out.push(0.0);
        for w in values.windows(2) {
            acc += 0.5 * h * (w[0] + w[1]);
            out.push(acc);
        }
        out
    }

    /// Piecewise-linear interpolation of node values; clamped outside the grid.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        if x <= self.lo {
            return values[0];
        }
        if x >= self.hi {
            return values[self.m];
        }
        let s = (x - self.lo) / self.step();
        let i = (s.floor() as usize).min(self.m - 1);
        let t = s - i as f64;
        values[i] + t * (values[i + 1] - values[i])
    }
}

/// Per-arm record of observed rewards.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmpiricalArm {
    sum: f64,
    sum_sq: f64,
    samples: Vec<f64>,
}

impl EmpiricalArm {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_samples(samples: impl IntoIterator<Item = f64>) -> Self {
        let mut arm = Self::new();
        for r in samples {
            arm.push(r);
        }
        arm
    }

    /// Records one reward, keeping the samples sorted.
    pub fn push(&mut self, r: f64) {
        self.sum += r;
        self.sum_sq += r * r;
        let at = self.samples.partition_point(|&s| s <= r);
        self.samples.insert(at, r);
    }

    pub fn count(&self) -> usize {
        self.samples.len()
    }

    pub fn sum(&self) -> f64 {
        self.sum
    }

    pub fn sum_sq(&self) -> f64 {
        self.sum_sq
    }

    /// Observed rewards in ascending order.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Step cdf of the samples; `None` before the first observation.
    pub fn ecdf(&self) -> Option<EmpiricalCdf<'_>> {
        if self.samples.is_empty() {
            None
        } else {
            Some(EmpiricalCdf { samples: &self.samples })
        }
    }
}

/// Right-continuous step cdf with jumps of `1/n` at the sorted samples.
#[derive(Debug, Clone, Copy)]
pub struct EmpiricalCdf<'a> {
    samples: &'a [f64],
}

impl EmpiricalCdf<'_> {
    /// Cdf values at every grid node in one sweep.
    pub fn on_grid(&self, grid: &Grid) -> Vec<f64> {
        let n = self.samples.len() as f64;
        let mut j = 0;
        grid.nodes()
            .map(|x| {
                while j < self.samples.len() && self.samples[j] <= x {
                    j += 1;
                }
                j as f64 / n
            })
            .collect()
    }
}

impl Cdf for EmpiricalCdf<'_> {
    fn cdf(&self, x: f64) -> f64 {
        self.samples.partition_point(|&s| s <= x) as f64 / self.samples.len() as f64
    }
    fn support(&self) -> (f64, f64) {
        (self.samples[0], self.samples[self.samples.len() - 1])
    }
}

impl Quantile for EmpiricalCdf<'_> {
    fn quantile(&self, p: f64) -> f64 {
        let n = self.samples.len();
        let idx = ((p * n as f64).ceil() as usize).clamp(1, n);
        self.samples[idx - 1]
    }
}

/// Mixture `Σ_k w_k P^k` of arm laws.
#[derive(Debug, Clone, Copy)]
pub struct MixtureView<'a> {
    arms: &'a [ArmLaw],
    weights: &'a Weights,
}

impl<'a> MixtureView<'a> {
    pub fn new(arms: &'a [ArmLaw], weights: &'a Weights) -> Result<Self> {
        if arms.len() != weights.len() {
            return Err(Error::DimensionMismatch { expected: arms.len(), got: weights.len() });
        }
        Ok(Self { arms, weights })
    }

    pub fn arms(&self) -> &'a [ArmLaw] {
        self.arms
    }

    pub fn weights(&self) -> &'a Weights {
        self.weights
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.arms.iter().zip(self.weights.as_slice()).map(|(a, w)| w * a.cdf(x)).sum::<f64>().clamp(0.0, 1.0)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.arms.iter().zip(self.weights.as_slice()).map(|(a, w)| w * a.pdf(x)).sum()
    }

    pub fn support(&self) -> (f64, f64) {
        self.arms
            .iter()
            .map(|a| a.support())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (a, b)| (l.min(a), h.max(b)))
    }

    /// Mixture quantile by bisection on the mixture cdf.
    pub fn quantile(&self, p: f64) -> f64 {
        let (lo, hi) = self.support();
        bisect_quantile(|x| self.cdf(x), lo, hi, p)
    }
}

impl Cdf for MixtureView<'_> {
    fn cdf(&self, x: f64) -> f64 {
        MixtureView::cdf(self, x)
    }
    fn support(&self) -> (f64, f64) {
        MixtureView::support(self)
    }
}

impl Quantile for MixtureView<'_> {
    fn quantile(&self, p: f64) -> f64 {
        MixtureView::quantile(self, p)
    }
}

/// `W1(F, G) = ∫ |F - G|` by the trapezoid rule on `grid`, which must cover both supports.
pub fn w1_distance(f: &impl Cdf, g: &impl Cdf, grid: &Grid) -> Result<f64> {
    for (lo, hi) in [f.support(), g.support()] {
        if !grid.contains_interval(lo, hi) {
            return Err(Error::SupportMismatch { lo, hi, grid_lo: grid.lo(), grid_hi: grid.hi() });
        }
    }
    let diff = grid.tabulate(|x| (f.cdf(x) - g.cdf(x)).abs());
    Ok(grid.trapezoid(&diff))
}

/// `W2(F, G)` from the quantile representation, midpoint rule on `u = (i + ½)/m`.
pub fn w2_distance(f: &impl Quantile, g: &impl Quantile, m: usize) -> f64 {
    w2_squared(f, g, m).sqrt()
}

pub(crate) fn w2_squared(f: &impl Quantile, g: &impl Quantile, m: usize) -> f64 {
    let m = m.max(1);
    let sum: f64 = (0..m)
        .map(|i| {
            let u = (i as f64 + 0.5) / m as f64;
            let d = f.quantile(u) - g.quantile(u);
            d * d
        })
        .sum();
    sum / m as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Lane};
    use proptest::prelude::*;
    use rand::Rng;

    fn laws() -> Vec<ArmLaw> {
        vec![
            ArmLaw::beta(2.0, 2.0).unwrap(),
            ArmLaw::beta(4.0, 2.0).unwrap(),
            ArmLaw::beta(2.0, 8.0).unwrap(),
            ArmLaw::beta(20.0, 20.0).unwrap(),
            ArmLaw::beta(2.0, 1.0).unwrap(),
            ArmLaw::trunc_gauss(0.0, 1.0, -2.0, 2.0).unwrap(),
            ArmLaw::trunc_gauss(1.2, 0.1, -2.0, 3.0).unwrap(),
            ArmLaw::trunc_gauss(2.5, 0.04, 0.0, 1.0).unwrap(),
            ArmLaw::uniform(0.0, 1.0).unwrap(),
            ArmLaw::uniform(-0.5, 1.5).unwrap(),
        ]
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn construction_rejects_bad_parameters() {
        assert!(ArmLaw::beta(0.0, 1.0).is_err());
        assert!(ArmLaw::beta(1.0, -2.0).is_err());
        assert!(ArmLaw::trunc_gauss(0.0, 0.0, -1.0, 1.0).is_err());
        assert!(ArmLaw::trunc_gauss(0.0, 1.0, 1.0, 1.0).is_err());
        assert!(ArmLaw::uniform(2.0, 1.0).is_err());
        assert!(ArmLaw::uniform(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn cdf_examples() {
        let u = ArmLaw::uniform(0.0, 1.0).unwrap();
        assert_eq!(u.cdf(0.25), 0.25);
        assert_eq!(u.cdf(-3.0), 0.0);
        assert_eq!(u.cdf(3.0), 1.0);
        let b = ArmLaw::beta(2.0, 2.0).unwrap();
        assert!((b.cdf(0.5) - 0.5).abs() < 1e-12);
        let quad = simpson(|x| 6.0 * x * (1.0 - x), 0.0, 0.25, 1000);
        assert!((b.cdf(0.25) - quad).abs() < 1e-10);
    }

    #[test]
    fn cdf_matches_quadrature_of_pdf() {
        for law in laws() {
            let (lo, hi) = law.support();
            for &t in &[0.2, 0.5, 0.9] {
                let x = lo + t * (hi - lo);
                let quad = simpson(|s| law.pdf(s), lo, x, 4000);
                assert!((law.cdf(x) - quad).abs() < 1e-9, "{law:?} at {x}");
            }
        }
    }

    #[test]
    fn quantile_examples() {
        assert!((ArmLaw::uniform(0.0, 1.0).unwrap().quantile(0.7) - 0.7).abs() < 1e-15);
        assert!((ArmLaw::beta(2.0, 2.0).unwrap().quantile(0.5) - 0.5).abs() < 1e-10);
        assert!(ArmLaw::trunc_gauss(0.0, 1.0, -2.0, 2.0).unwrap().quantile(0.5).abs() < 1e-10);
        let b = ArmLaw::beta(4.0, 2.0).unwrap();
        assert_eq!(b.quantile(0.0), 0.0);
        assert_eq!(b.quantile(1.0), 1.0);
    }

    #[test]
    fn cdf_monotone_and_quantile_inverts() {
        for law in laws() {
            let (lo, hi) = law.support();
            let mut prev = 0.0;
            for i in 0..=1000 {
                let x = lo + (hi - lo) * i as f64 / 1000.0;
                let c = law.cdf(x);
                assert!(c >= prev, "{law:?} not monotone at {x}");
                prev = c;
            }
            assert_eq!(law.cdf(lo), 0.0);
            assert_eq!(law.cdf(hi), 1.0);
            for i in 1..100 {
                let x = lo + (hi - lo) * i as f64 / 100.0;
                let c = law.cdf(x);
                // Skip points where the cdf saturates in double precision.
                if !(1e-12..=1.0 - 1e-12).contains(&c) {
                    continue;
                }
                // Where the density is tiny the inverse is ill-conditioned; then
                // only the cdf round trip is meaningful.
                let q = law.quantile(c);
                assert!((q - x).abs() <= 1e-8 || (law.cdf(q) - c).abs() <= 1e-12, "{law:?} at {x}");
            }
        }
    }

    #[test]
    fn moments_examples() {
        let m = ArmLaw::beta(2.0, 2.0).unwrap().moments();
        assert!((m.mean - 0.5).abs() < 1e-15 && (m.variance - 0.05).abs() < 1e-15 && (m.second_moment - 0.3).abs() < 1e-15);
        let m = ArmLaw::beta(4.0, 2.0).unwrap().moments();
        assert!((m.mean - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.variance - 8.0 / 252.0).abs() < 1e-15);
        assert!((m.second_moment - 0.476_190_476_190_476).abs() < 1e-12);
        let m = ArmLaw::uniform(0.0, 1.0).unwrap().moments();
        assert!((m.mean - 0.5).abs() < 1e-15 && (m.second_moment - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn moments_match_quadrature_for_truncated_gaussians() {
        for law in laws().into_iter().filter(|l| matches!(l.kind(), ArmKind::TruncGauss { .. })) {
            let (lo, hi) = law.support();
            let mean = simpson(|x| x * law.pdf(x), lo, hi, 20_000);
            let m2 = simpson(|x| x * x * law.pdf(x), lo, hi, 20_000);
            let m = law.moments();
            assert!((m.mean - mean).abs() < 1e-9 && (m.second_moment - m2).abs() < 1e-9, "{law:?}");
        }
        // Degenerate width: behaves like a point mass.
        let m = ArmLaw::trunc_gauss(1.0, 1e-12, -2.0, 3.0).unwrap().moments();
        assert!((m.mean - 1.0).abs() < 1e-9 && m.variance < 1e-11);
    }

    #[test]
    fn moments_match_monte_carlo() {
        let n = 1_000_000;
        for (i, law) in laws().into_iter().enumerate() {
            let mut rng = substream(11, i as u64, Lane::Episode);
            let (mut s, mut s2, mut s4) = (0.0, 0.0, 0.0);
            for _ in 0..n {
                let x = law.sample(&mut rng);
                s += x;
                s2 += x * x;
                s4 += x * x * x * x;
            }
            let m = law.moments();
            let nf = n as f64;
            let se_mean = (m.variance / nf).sqrt();
            let se_m2 = ((s4 / nf - (s2 / nf).powi(2)) / nf).sqrt();
            assert!((s / nf - m.mean).abs() < 4.0 * se_mean, "{law:?} mean");
            assert!((s2 / nf - m.second_moment).abs() < 4.0 * se_m2, "{law:?} m2");
        }
    }

    #[test]
    fn sampling_examples() {
        assert_eq!(ArmLaw::uniform(0.0, 1.0).unwrap().from_uniform(0.42), 0.42);
        let tg = ArmLaw::trunc_gauss(0.0, 1.0, -2.0, 2.0).unwrap();
        let mut rng = substream(3, 0, Lane::Episode);
        assert!((0..100_000).all(|_| (-2.0..=2.0).contains(&tg.sample(&mut rng))));
        let b = ArmLaw::beta(2.0, 2.0).unwrap();
        let n = 100_000;
        let mean = (0..n).map(|_| b.sample(&mut rng)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 4.0 * (0.05 / n as f64).sqrt());
        // Same stream state, same draws.
        let a: Vec<f64> = (0..5).map(|_| b.sample(&mut substream(9, 1, Lane::Episode))).collect();
        let c: Vec<f64> = (0..5).map(|_| b.sample(&mut substream(9, 1, Lane::Episode))).collect();
        assert_eq!(a, c);
    }

    #[test]
    fn empirical_arm_bookkeeping() {
        let arm = EmpiricalArm::from_samples([0.6, 0.2, 0.9, 0.2]);
        assert_eq!(arm.count(), 4);
        assert_eq!(arm.samples(), &[0.2, 0.2, 0.6, 0.9]);
        assert!((arm.sum() - 1.9).abs() < 1e-15);
        assert!((arm.sum_sq() - (0.36 + 0.04 + 0.81 + 0.04)).abs() < 1e-15);
        let f = arm.ecdf().unwrap();
        assert_eq!(f.cdf(0.1), 0.0);
        assert_eq!(f.cdf(0.2), 0.5);
        assert_eq!(f.cdf(0.59), 0.5);
        assert_eq!(f.cdf(0.6), 0.75);
        assert_eq!(f.cdf(1.0), 1.0);
        let grid = Grid::new(0.0, 1.0, 10).unwrap();
        let tab = f.on_grid(&grid);
        for (i, x) in grid.nodes().enumerate() {
            assert_eq!(tab[i], f.cdf(x));
        }
        assert!(EmpiricalArm::new().ecdf().is_none());
    }

    #[test]
    fn grid_quadrature() {
        let g = Grid::new(0.0, 2.0, 400).unwrap();
        let v = g.tabulate(|x| x * x);
        assert!((g.trapezoid(&v) - 8.0 / 3.0).abs() < 1e-4);
        let c = g.cumulative_trapezoid(&v);
        assert!((c[200] - 1.0 / 3.0).abs() < 1e-5);
        assert!((g.interpolate(&v, 1.0) - 1.0).abs() < 1e-12);
        assert_eq!(g.interpolate(&v, -5.0), 0.0);
        assert_eq!(g.interpolate(&v, 5.0), 4.0);
        assert!(Grid::new(0.0, 1.0, 0).is_err());
    }

    #[test]
    fn w1_examples() {
        let u01 = ArmLaw::uniform(0.0, 1.0).unwrap();
        let shifted = ArmLaw::uniform(0.5, 1.5).unwrap();
        let grid = Grid::new(0.0, 1.5, DEFAULT_GRID).unwrap();
        assert_eq!(w1_distance(&u01, &u01, &grid).unwrap(), 0.0);
        assert!((w1_distance(&u01, &shifted, &grid).unwrap() - 0.5).abs() < 1e-3);
        let narrow = Grid::new(0.0, 1.0, 100).unwrap();
        assert!(matches!(w1_distance(&u01, &shifted, &narrow), Err(Error::SupportMismatch { .. })));

        // Oracle: Simpson on 10^6 intervals.
        let b = ArmLaw::beta(2.0, 2.0).unwrap();
        let grid = Grid::new(0.0, 1.0, DEFAULT_GRID).unwrap();
        let oracle = simpson(|x| (b.cdf(x) - x).abs(), 0.0, 1.0, 1_000_000);
        assert!((oracle - 0.0625).abs() < 1e-9);
        assert!((w1_distance(&b, &u01, &grid).unwrap() - oracle).abs() < 1e-4);
    }

    #[test]
    fn w2_examples() {
        let u01 = ArmLaw::uniform(0.0, 1.0).unwrap();
        let half = ArmLaw::uniform(0.0, 0.5).unwrap();
        let shifted = ArmLaw::uniform(0.5, 1.5).unwrap();
        assert_eq!(w2_distance(&u01, &u01, DEFAULT_GRID), 0.0);
        assert!((w2_distance(&u01, &half, DEFAULT_GRID).powi(2) - 1.0 / 12.0).abs() < 1e-5);
        assert!((w2_distance(&u01, &shifted, DEFAULT_GRID) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn w2_agrees_with_monte_carlo_coupling() {
        // Comonotone coupling: push a common uniform through both quantile maps.
        let pairs = [
            (ArmLaw::beta(2.0, 2.0).unwrap(), ArmLaw::beta(4.0, 2.0).unwrap()),
            (ArmLaw::beta(2.0, 8.0).unwrap(), ArmLaw::uniform(0.0, 1.0).unwrap()),
            (ArmLaw::trunc_gauss(0.3, 0.2, -1.0, 2.0).unwrap(), ArmLaw::beta(20.0, 20.0).unwrap()),
        ];
        for (i, (p, q)) in pairs.iter().enumerate() {
            let mut rng = substream(5, i as u64, Lane::Episode);
            let n = 20_000;
            let d: Vec<f64> = (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    (p.quantile(u) - q.quantile(u)).powi(2)
                })
                .collect();
            let mean = d.iter().sum::<f64>() / n as f64;
            let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se = (var / n as f64).sqrt();
            let w2sq = w2_distance(p, q, DEFAULT_GRID).powi(2);
            assert!((w2sq - mean).abs() < 3.0 * se, "pair {i}: {w2sq} vs {mean} ± {se}");
        }
    }

    #[test]
    fn mixture_quantile_examples() {
        let arms = vec![ArmLaw::beta(2.0, 2.0).unwrap(), ArmLaw::beta(4.0, 2.0).unwrap()];
        let e1 = Weights::vertex(2, 1);
        let mix = MixtureView::new(&arms, &e1).unwrap();
        for &p in &[0.1, 0.5, 0.9] {
            assert!((mix.quantile(p) - arms[1].quantile(p)).abs() < 1e-10);
        }
        let same = vec![ArmLaw::uniform(0.0, 1.0).unwrap(); 2];
        let half = Weights::uniform(2);
        let mix = MixtureView::new(&same, &half).unwrap();
        assert!((mix.quantile(0.3) - 0.3).abs() < 1e-10);

        // Dense-grid inversion oracle on 10^6 nodes.
        let mix = MixtureView::new(&arms, &half).unwrap();
        let n = 1_000_000;
        let idx = (0..=n).position(|i| mix.cdf(i as f64 / n as f64) >= 0.5).unwrap();
        let oracle = idx as f64 / n as f64;
        assert!((mix.quantile(0.5) - oracle).abs() < 1e-6);
        assert!(matches!(MixtureView::new(&arms, &Weights::uniform(3)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn empirical_w1_rate() {
        let u01 = ArmLaw::uniform(0.0, 1.0).unwrap();
        let grid = Grid::new(0.0, 1.0, DEFAULT_GRID).unwrap();
        let mut means = Vec::new();
        for (j, &n) in [100usize, 400, 1600].iter().enumerate() {
            let mut total = 0.0;
            for rep in 0..200u64 {
                let mut rng = substream(21, rep * 3 + j as u64, Lane::Episode);
                let arm = EmpiricalArm::from_samples((0..n).map(|_| u01.sample(&mut rng)));
                total += w1_distance(&arm.ecdf().unwrap(), &u01, &grid).unwrap();
            }
            means.push(total / 200.0);
        }
        assert!(means[0] / means[1] >= 1.8 && means[1] / means[2] >= 1.8, "{means:?}");
    }

    fn arm_strategy() -> impl Strategy<Value = ArmLaw> {
        prop_oneof![
            (0.5f64..10.0, 0.5f64..10.0).prop_map(|(a, b)| ArmLaw::beta(a, b).unwrap()),
            (-0.5f64..1.5, 0.01f64..0.5).prop_map(|(m, s)| ArmLaw::trunc_gauss(m, s, 0.0, 1.0).unwrap()),
            (0.0f64..0.4, 0.6f64..1.0).prop_map(|(l, h)| ArmLaw::uniform(l, h).unwrap()),
        ]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn w1_is_symmetric_and_satisfies_triangle(a in arm_strategy(), b in arm_strategy(), c in arm_strategy()) {
            let grid = Grid::new(0.0, 1.0, 1024).unwrap();
            let ab = w1_distance(&a, &b, &grid).unwrap();
            let ba = w1_distance(&b, &a, &grid).unwrap();
            let bc = w1_distance(&b, &c, &grid).unwrap();
            let ac = w1_distance(&a, &c, &grid).unwrap();
            prop_assert!((ab - ba).abs() <= 2e-3);
            prop_assert!(ac <= ab + bc + 2e-3);
        }

        #[test]
        fn mixture_cdf_is_convex_combination(
            a in arm_strategy(), b in arm_strategy(), t in 0.0f64..1.0, x in -0.1f64..1.1,
        ) {
            let arms = [a, b];
            let w = Weights::new(vec![t, 1.0 - t]).unwrap();
            let mix = MixtureView::new(&arms, &w).unwrap();
            let direct = t * a.cdf(x) + (1.0 - t) * b.cdf(x);
            prop_assert!((mix.cdf(x) - direct).abs() <= 1e-15);
            prop_assert!((0.0..=1.0).contains(&mix.cdf(x)));
        }
    }
}
