//! Exact utilities, influence functions and centered simplex gradients.
//!
//! Two utilities are supported: the variance of the mixture reward, and the
//! negative squared Wasserstein-2 distance of the mixture to a reference law
//! `Q`. For both, the centered gradient has components
//! `g_k = E_{P^k}[IF[P^w](R)]`, which satisfy `<w, g> = 0`.
//!
//! The Wasserstein influence function is built from the monotone transport map
//! `T = Q⁻¹ ∘ P` and the potential `φ(r) = ∫₀^r (s - T(s)) ds`. The kernel
//! `-φ(r) + E_P[φ]` is the first variation of `-½ W₂²(·, Q)`; the score of
//! `-W₂²` is twice that, see [`W2_SCORE_SCALE`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::distributions::{w2_squared, ArmLaw, Grid, MixtureView, Moments, DEFAULT_GRID};
use crate::error::{Error, Result};
use crate::simplex::Weights;

/// Ratio between the score of `-W₂²(·, Q)` and the kernel `-φ + E φ`.
pub const W2_SCORE_SCALE: f64 = 2.0;

/// Which distributional utility is maximized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum UtilitySpec {
    Variance,
    Wasserstein { reference: ArmLaw },
}

impl UtilitySpec {
    pub fn reference(&self) -> Option<&ArmLaw> {
        match self {
            UtilitySpec::Variance => None,
            UtilitySpec::Wasserstein { reference } => Some(reference),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            UtilitySpec::Variance => "variance",
            UtilitySpec::Wasserstein { .. } => "wasserstein",
        }
    }
}

/// Transport map and potential tabulated on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialGrid {
    grid: Grid,
    phi: Vec<f64>,
    transport: Vec<f64>,
}

impl PotentialGrid {
    /// Builds `T = Q⁻¹ ∘ F` and `φ` from mixture cdf values at the grid nodes.
    ///
    /// `φ` is anchored so that `φ(0) = 0` when 0 lies in the grid, and at the
    /// left endpoint otherwise (the influence function ignores the constant).
    pub fn from_cdf_values(cdf: &[f64], reference: &ArmLaw, grid: &Grid) -> Self {
        assert_eq!(cdf.len(), grid.intervals() + 1, "cdf table does not match the grid");
        let transport: Vec<f64> = cdf.iter().map(|&p| reference.quantile(p)).collect();
        let integrand: Vec<f64> = grid.nodes().zip(&transport).map(|(s, t)| s - t).collect();
        let mut phi = grid.cumulative_trapezoid(&integrand);
        if grid.lo() < 0.0 && grid.hi() > 0.0 {
            let at_zero = grid.interpolate(&phi, 0.0);
            phi.iter_mut().for_each(|v| *v -= at_zero);
        }
        Self { grid: *grid, phi, transport }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Potential values at the nodes.
    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    /// Transport map values at the nodes.
    pub fn transport(&self) -> &[f64] {
        &self.transport
    }

    /// `φ(r)` by linear interpolation, clamped to the grid.
    pub fn phi_at(&self, r: f64) -> f64 {
        self.grid.interpolate(&self.phi, r)
    }

    /// `∫ φ dF` for a law given by its cdf at the nodes, by parts:
    /// `φ(hi) - ∫ (s - T(s)) F(s) ds`.
    pub fn mean_under_cdf(&self, cdf: &[f64]) -> f64 {
        let prod: Vec<f64> = self
            .grid
            .nodes()
            .zip(&self.transport)
            .zip(cdf)
            .map(|((s, t), f)| (s - t) * f)
            .collect();
        self.phi[self.grid.intervals()] - self.grid.trapezoid(&prod)
    }
}

/// Builds the potential for the mixture cdf `mix_cdf` against `reference`.
pub fn build_potential(mix_cdf: impl Fn(f64) -> f64, reference: &ArmLaw, grid: &Grid) -> PotentialGrid {
    PotentialGrid::from_cdf_values(&grid.tabulate(mix_cdf), reference, grid)
}

/// `-φ(r) + E_P[φ]`, with `r` clamped to the grid.
pub fn wasserstein_if(pg: &PotentialGrid, mix_mean_phi: f64, r: f64) -> f64 {
    mix_mean_phi - pg.phi_at(r)
}

/// `(r - μ)² - σ²`.
pub fn variance_if(mu_w: f64, var_w: f64, r: f64) -> f64 {
    (r - mu_w).powi(2) - var_w
}

/// Mixture mean and variance from per-arm moments.
fn mixture_mean_var(w: &[f64], moments: &[Moments]) -> (f64, f64) {
    let mean: f64 = w.iter().zip(moments).map(|(w, m)| w * m.mean).sum();
    let m2: f64 = w.iter().zip(moments).map(|(w, m)| w * m.second_moment).sum();
    (mean, m2 - mean * mean)
}

fn variance_gc_from_moments(w: &[f64], moments: &[Moments]) -> Vec<f64> {
    let (mean, var) = mixture_mean_var(w, moments);
    moments.iter().map(|m| m.second_moment - 2.0 * mean * m.mean + mean * mean - var).collect()
}

/// `U(w) = m₂ᵀw - (μᵀw)²`.
pub fn variance_utility(w: &Weights, arms: &[ArmLaw]) -> f64 {
    let moments: Vec<Moments> = arms.iter().map(|a| a.moments()).collect();
    mixture_mean_var(w.as_slice(), &moments).1
}

/// Centered gradient of the variance utility, `g_k = m₂ₖ - 2μ_w μ_k + μ_w² - σ_w²`.
pub fn variance_gc(w: &Weights, arms: &[ArmLaw]) -> Vec<f64> {
    let moments: Vec<Moments> = arms.iter().map(|a| a.moments()).collect();
    variance_gc_from_moments(w.as_slice(), &moments)
}

/// `-W₂²(P^w, Q)` with the mixture quantile inverted by bisection.
pub fn wasserstein_utility(w: &Weights, arms: &[ArmLaw], reference: &ArmLaw, m: usize) -> Result<f64> {
    let mix = MixtureView::new(arms, w)?;
    Ok(-w2_squared(&mix, reference, m))
}

/// Centered gradient for either utility.
pub fn exact_gc(w: &Weights, arms: &[ArmLaw], spec: &UtilitySpec, m: usize) -> Result<Vec<f64>> {
    BanditInstance::new(arms.to_vec(), *spec, m)?.exact_gc(w)
}

/// The function a score snapshot evaluates.
#[derive(Debug, Clone)]
pub enum ScoreKernel {
    /// `(r - mean)² - variance`.
    Variance { mean: f64, variance: f64 },
    /// `scale · (mean_phi - φ(r))`.
    Potential { potential: Arc<PotentialGrid>, mean_phi: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScoreSource {
    Exact,
    Plugin,
}

/// Influence-function score frozen for one round.
#[derive(Debug, Clone)]
pub struct ScoreSnapshot {
    pub kernel: ScoreKernel,
    pub source: ScoreSource,
    pub round: usize,
}

impl ScoreSnapshot {
    pub fn eval(&self, r: f64) -> f64 {
        match &self.kernel {
            ScoreKernel::Variance { mean, variance } => variance_if(*mean, *variance, r),
            ScoreKernel::Potential { potential, mean_phi, scale } => scale * wasserstein_if(potential, *mean_phi, r),
        }
    }

    /// Largest `|score|` over the nodes of `grid`.
    pub fn sup_abs(&self, grid: &Grid) -> f64 {
        grid.nodes().map(|r| self.eval(r).abs()).fold(0.0, f64::max)
    }
}

/// A bandit problem: arm laws, the utility, and quadrature tables.
#[derive(Debug, Clone)]
pub struct BanditInstance {
    arms: Vec<ArmLaw>,
    spec: UtilitySpec,
    grid: Grid,
    moments: Vec<Moments>,
    // Wasserstein only: per-arm cdfs and Q's cdf at the nodes, and Q's quantiles
    // at the midpoints (i + ½)/M.
    arm_cdfs: Vec<Vec<f64>>,
    reference_cdf: Vec<f64>,
    reference_quantiles: Vec<f64>,
}

impl BanditInstance {
    /// `m` is the number of quadrature intervals over the union of all supports.
    pub fn new(arms: Vec<ArmLaw>, spec: UtilitySpec, m: usize) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::InvalidConfig("a bandit needs at least one arm".into()));
        }
        let grid = Grid::covering(arms.iter().chain(spec.reference()), m)?;
        let moments = arms.iter().map(|a| a.moments()).collect();
        let (arm_cdfs, reference_cdf, reference_quantiles) = match &spec {
            UtilitySpec::Variance => (Vec::new(), Vec::new(), Vec::new()),
            UtilitySpec::Wasserstein { reference } => (
                arms.iter().map(|a| grid.tabulate(|x| a.cdf(x))).collect(),
                grid.tabulate(|x| reference.cdf(x)),
                (0..m).map(|i| reference.quantile((i as f64 + 0.5) / m as f64)).collect(),
            ),
        };
        Ok(Self { arms, spec, grid, moments, arm_cdfs, reference_cdf, reference_quantiles })
    }

    /// Same instance with the default grid resolution.
    pub fn with_default_grid(arms: Vec<ArmLaw>, spec: UtilitySpec) -> Result<Self> {
        Self::new(arms, spec, DEFAULT_GRID)
    }

    pub fn arms(&self) -> &[ArmLaw] {
        &self.arms
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }

    pub fn spec(&self) -> &UtilitySpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn moments(&self) -> &[Moments] {
        &self.moments
    }

    /// Q's cdf at the grid nodes (Wasserstein only).
    pub fn reference_cdf(&self) -> &[f64] {
        &self.reference_cdf
    }

    fn check(&self, w: &Weights) -> Result<()> {
        if w.len() != self.k() {
            return Err(Error::DimensionMismatch { expected: self.k(), got: w.len() });
        }
        Ok(())
    }

    /// Mixture cdf at the grid nodes, for either utility.
    pub fn mixture_cdf_table(&self, w: &Weights) -> Vec<f64> {
        let n = self.grid.intervals() + 1;
        if self.arm_cdfs.is_empty() {
            let mix = MixtureView::new(&self.arms, w).expect("weights checked against K");
            return self.grid.tabulate(|x| mix.cdf(x));
        }
        let mut out = vec![0.0; n];
        for (wk, table) in w.as_slice().iter().zip(&self.arm_cdfs) {
            for (o, f) in out.iter_mut().zip(table) {
                *o += wk * f;
            }
        }
        out.iter_mut().for_each(|v| *v = v.clamp(0.0, 1.0));
        out
    }

    /// `U(w)`.
    pub fn utility(&self, w: &Weights) -> Result<f64> {
        self.check(w)?;
        Ok(match &self.spec {
            UtilitySpec::Variance => mixture_mean_var(w.as_slice(), &self.moments).1,
            UtilitySpec::Wasserstein { .. } => -self.w2_squared_tabulated(&self.mixture_cdf_table(w)),
        })
    }

    // Midpoint rule over u, inverting the piecewise-linear interpolant of the
    // tabulated mixture cdf in a single sweep.
    fn w2_squared_tabulated(&self, cdf: &[f64]) -> f64 {
        let m = self.grid.intervals();
        let h = self.grid.step();
        let mut j = 0usize;
        let mut acc = 0.0;
        for (i, q) in self.reference_quantiles.iter().enumerate() {
            let u = (i as f64 + 0.5) / m as f64;
            while j < m && cdf[j] < u {
                j += 1;
            }
            let x = if j == 0 {
                self.grid.lo()
            } else {
                let (f0, f1) = (cdf[j - 1], cdf[j]);
                let t = if f1 > f0 { (u - f0) / (f1 - f0) } else { 1.0 };
                self.grid.node(j - 1) + t.clamp(0.0, 1.0) * h
            };
            acc += (x - q).powi(2);
        }
        acc / m as f64
    }

    /// Centered gradient `g_C(w)`.
    pub fn exact_gc(&self, w: &Weights) -> Result<Vec<f64>> {
        self.check(w)?;
        Ok(match &self.spec {
            UtilitySpec::Variance => variance_gc_from_moments(w.as_slice(), &self.moments),
            UtilitySpec::Wasserstein { reference } => {
                // g_k = scale · ∫ (s - T(s)) (F_k(s) - F(s)) ds, the by-parts form of
                // E_{P^k}[-φ] - E_{P^w}[-φ].
                let mix = self.mixture_cdf_table(w);
                let pg = PotentialGrid::from_cdf_values(&mix, reference, &self.grid);
                let slope: Vec<f64> = self.grid.nodes().zip(pg.transport()).map(|(s, t)| s - t).collect();
                self.arm_cdfs
                    .iter()
                    .map(|fk| {
                        let prod: Vec<f64> = slope.iter().zip(fk).zip(&mix).map(|((g, a), b)| g * (a - b)).collect();
                        W2_SCORE_SCALE * self.grid.trapezoid(&prod)
                    })
                    .collect()
            }
        })
    }

    /// The exact influence function `IF[P^w]` as a snapshot.
    pub fn exact_snapshot(&self, w: &Weights, round: usize) -> Result<ScoreSnapshot> {
        self.check(w)?;
        let kernel = match &self.spec {
            UtilitySpec::Variance => {
                let (mean, variance) = mixture_mean_var(w.as_slice(), &self.moments);
                ScoreKernel::Variance { mean, variance }
            }
            UtilitySpec::Wasserstein { reference } => {
                let mix = self.mixture_cdf_table(w);
                let pg = PotentialGrid::from_cdf_values(&mix, reference, &self.grid);
                let mean_phi = pg.mean_under_cdf(&mix);
                ScoreKernel::Potential { potential: Arc::new(pg), mean_phi, scale: W2_SCORE_SCALE }
            }
        };
        Ok(ScoreSnapshot { kernel, source: ScoreSource::Exact, round })
    }
}
