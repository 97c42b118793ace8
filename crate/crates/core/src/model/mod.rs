//! Per-category linear models for the two problem variants.

mod file;
mod grid;
mod predict;
mod sgd;
mod targets;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureConfig;

pub use file::{read_model, write_model};
pub use grid::{grid_search, GridOutcome, GridPoint, ETA0_GRID, LAMBDA_GRID};
pub use predict::{clamp_nonnegative, predict_known, predict_unknown};
pub use sgd::{fit_sgd, learning_rate, Weights};
pub use targets::{default_denominator, make_targets};

pub const DEFAULT_EPOCHS: usize = 10;
pub const DEFAULT_RHO: f64 = 0.25;
pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// Regress category counts directly.
    #[serde(alias = "population-unknown")]
    Unknown,
    /// Regress log count ratios against a denominator category and rebuild
    /// counts from the known population.
    #[serde(alias = "population-known")]
    Known,
}

impl Variant {
    pub fn name(self) -> &'static str {
        match self {
            Variant::Unknown => "unknown",
            Variant::Known => "known",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "unknown" | "population-unknown" => Ok(Variant::Unknown),
            "known" | "population-known" => Ok(Variant::Known),
            _ => Err(Error::Config(format!("unknown variant {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub lambda: f64,
    pub eta0: f64,
    pub rho: f64,
    pub epochs: usize,
    pub seed: u64,
    pub variant: Variant,
    /// Denominator category index for the population-known variant.
    pub denominator: Option<usize>,
    /// Additive smoothing inside the log ratio.
    pub alpha: f64,
    pub intercept: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lambda: 1e-4,
            eta0: 0.01,
            rho: DEFAULT_RHO,
            epochs: DEFAULT_EPOCHS,
            seed: 0,
            variant: Variant::Unknown,
            denominator: None,
            alpha: DEFAULT_ALPHA,
            intercept: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("train config: {what}")));
        if !(self.lambda >= 0.0) {
            return bad("lambda must be >= 0");
        }
        if !(self.eta0 > 0.0) || !self.eta0.is_finite() {
            return bad("eta0 must be > 0");
        }
        if !(self.rho >= 0.0) {
            return bad("rho must be >= 0");
        }
        if self.epochs == 0 {
            return bad("epochs must be >= 1");
        }
        if !(self.alpha >= 0.0) {
            return bad("alpha must be >= 0");
        }
        Ok(())
    }
}

/// Fitted weights plus everything needed to check that prediction inputs
/// came from the same feature pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionModel {
    pub variant: Variant,
    pub variable: String,
    /// All `k` category names in order.
    pub categories: Vec<String>,
    /// Denominator category index (population-known only).
    pub denominator: Option<usize>,
    /// One entry per modeled category: all `k` for population-unknown, the
    /// `k - 1` non-denominator categories (in order) for population-known.
    pub weights: Vec<Weights>,
    pub dim: usize,
    pub features: FeatureConfig,
    pub vocab_fingerprint: String,
    pub train: TrainConfig,
}

impl RegressionModel {
    pub fn k(&self) -> usize {
        self.categories.len()
    }

    /// Names of the categories that own a weight vector.
    pub fn modeled_categories(&self) -> Vec<&str> {
        self.categories
            .iter()
            .enumerate()
            .filter(|(j, _)| Some(*j) != self.denominator)
            .map(|(_, c)| c.as_str())
            .collect()
    }

    pub fn check(&self) -> Result<()> {
        let expected = match self.variant {
            Variant::Unknown => self.k(),
            Variant::Known => {
                let q = self.denominator.ok_or_else(|| {
                    Error::Config("population-known model without denominator".into())
                })?;
                if q >= self.k() {
                    return Err(Error::Config(format!("denominator {q} out of range")));
                }
                self.k() - 1
            }
        };
        if self.weights.len() != expected {
            return Err(Error::Config(format!(
                "{} weight vectors for {} modeled categories",
                self.weights.len(),
                expected
            )));
        }
        if let Some(w) = self.weights.iter().find(|w| w.coef.len() != self.dim) {
            return Err(Error::Dimension {
                expected: self.dim,
                found: w.coef.len(),
            });
        }
        Ok(())
    }
}
