//! The synthetic benchmark instances.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::ArmLaw;
use crate::error::{Error, Result};
use crate::rng::{substream, Lane};

/// Truncation interval of the scenario-4 Gaussians.
pub const S4_SUPPORT: (f64, f64) = (-2.0, 3.0);
pub const S4_ARMS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    S1,
    S2,
    S3,
    S4,
    #[serde(rename = "custom")]
    Custom,
}

impl FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "s1" | "1" => Ok(Self::S1),
            "s2" | "2" => Ok(Self::S2),
            "s3" | "3" => Ok(Self::S3),
            "s4" | "4" => Ok(Self::S4),
            "custom" => Ok(Self::Custom),
            _ => Err(Error::InvalidConfig(format!("unknown scenario '{s}' (expected S1, S2, S3, S4 or custom)"))),
        }
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::S1 => "S1",
            Self::S2 => "S2",
            Self::S3 => "S3",
            Self::S4 => "S4",
            Self::Custom => "custom",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: ScenarioId,
    pub arms: Vec<ArmLaw>,
    pub support: (f64, f64),
    pub notes: String,
}

impl ScenarioSpec {
    /// A built-in scenario. Only S4 depends on `seed`: its arm parameters are
    /// drawn once per seed and shared by every episode.
    pub fn builtin(id: ScenarioId, seed: u64) -> Result<Self> {
        let beta = |a: f64, b: f64| ArmLaw::beta(a, b);
        let (arms, notes) = match id {
            ScenarioId::S1 => (vec![beta(2.0, 2.0)?, beta(4.0, 2.0)?], "two Beta arms".to_string()),
            ScenarioId::S2 => (
                vec![beta(2.0, 8.0)?, beta(8.0, 2.0)?, beta(2.0, 2.0)?, beta(20.0, 20.0)?],
                "four Beta arms".to_string(),
            ),
            ScenarioId::S3 => (
                (0..8).map(|k| beta(2.0, 1.0 + 3.0 * k as f64)).collect::<Result<_>>()?,
                "eight Beta(2, 1 + 3k) arms".to_string(),
            ),
            ScenarioId::S4 => {
                let mut rng = substream(seed, 0, Lane::Scenario);
                let (lo, hi) = S4_SUPPORT;
                let arms = (0..S4_ARMS)
                    .map(|_| {
                        let mu = rng.random_range(-0.5..1.5);
                        let sigma2 = rng.random_range(0.08..0.35);
                        ArmLaw::trunc_gauss(mu, sigma2, lo, hi)
                    })
                    .collect::<Result<_>>()?;
                (arms, format!("{S4_ARMS} Gaussians truncated to [{lo}, {hi}], parameters drawn from seed {seed}"))
            }
            ScenarioId::Custom => {
                return Err(Error::InvalidConfig("custom scenarios need explicit arms".into()));
            }
        };
        Self::with_id(id, arms, notes)
    }

    /// A scenario with caller-supplied arms.
    pub fn custom(arms: Vec<ArmLaw>, notes: impl Into<String>) -> Result<Self> {
        Self::with_id(ScenarioId::Custom, arms, notes.into())
    }

    fn with_id(id: ScenarioId, arms: Vec<ArmLaw>, notes: String) -> Result<Self> {
        if arms.is_empty() {
            return Err(Error::InvalidConfig("a scenario needs at least one arm".into()));
        }
        let support = arms.iter().map(ArmLaw::support).fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (a, b)| (l.min(a), h.max(b)));
        Ok(Self { id, arms, support, notes })
    }

    pub fn k(&self) -> usize {
        self.arms.len()
    }
}
