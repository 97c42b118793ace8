//! Per-unit bags of words and their feature vectors.

mod bag;
mod featurize;
mod transform;
mod vector;
mod vocab;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use bag::{build_bags, read_bags, write_bags, BagStats, UnitBag, WordStat};
pub use featurize::featurize;
pub use transform::{anscombe, apply_transform, gaussian, logistic};
pub use vector::{read_features, vectorize, write_features, FeatureRow, FeatureSet, SparseVector};
pub use vocab::{
    build_vocabulary, compute_idf, read_vocab_tsv, vocab_fingerprint, write_vocab_tsv, IdfTable,
    Vocabulary,
};

/// How word occurrences become raw feature values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    RawWord,
    NormalizedWord,
    RawUser,
    NormalizedUser,
}

/// Element-wise map applied to the stored entries of a vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Transform {
    None,
    Tfidf,
    Anscombe,
    Logistic,
    Gaussian,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::RawWord,
        Scheme::NormalizedWord,
        Scheme::RawUser,
        Scheme::NormalizedUser,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::RawWord => "raw-word",
            Scheme::NormalizedWord => "normalized-word",
            Scheme::RawUser => "raw-user",
            Scheme::NormalizedUser => "normalized-user",
        }
    }

    pub fn is_normalized(self) -> bool {
        matches!(self, Scheme::NormalizedWord | Scheme::NormalizedUser)
    }
}

impl Transform {
    pub const ALL: [Transform; 5] = [
        Transform::None,
        Transform::Tfidf,
        Transform::Anscombe,
        Transform::Logistic,
        Transform::Gaussian,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Transform::None => "none",
            Transform::Tfidf => "tfidf",
            Transform::Anscombe => "anscombe",
            Transform::Logistic => "logistic",
            Transform::Gaussian => "gaussian",
        }
    }
}

macro_rules! name_parsing {
    ($ty:ty, $what:literal) => {
        impl fmt::Display for $ty {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.name())
            }
        }

        impl FromStr for $ty {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                let norm = s.to_ascii_lowercase().replace('_', "-");
                <$ty>::ALL
                    .into_iter()
                    .find(|v| v.name() == norm || v.name().replace('-', "") == norm)
                    .ok_or_else(|| Error::Config(format!(concat!("unknown ", $what, " {:?}"), s)))
            }
        }
    };
}

name_parsing!(Scheme, "scheme");
name_parsing!(Transform, "transform");

/// A validated scheme/transform pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawFeatureConfig")]
pub struct FeatureConfig {
    scheme: Scheme,
    transform: Transform,
}

#[derive(Deserialize)]
struct RawFeatureConfig {
    scheme: Scheme,
    transform: Transform,
}

impl TryFrom<RawFeatureConfig> for FeatureConfig {
    type Error = Error;

    fn try_from(raw: RawFeatureConfig) -> Result<Self> {
        FeatureConfig::new(raw.scheme, raw.transform)
    }
}

impl FeatureConfig {
    /// TFIDF goes with the raw schemes; Anscombe, Logistic and Gaussian with
    /// the normalized ones. `None` pairs with anything.
    pub fn new(scheme: Scheme, transform: Transform) -> Result<Self> {
        let ok = match transform {
            Transform::None => true,
            Transform::Tfidf => !scheme.is_normalized(),
            Transform::Anscombe | Transform::Logistic | Transform::Gaussian => {
                scheme.is_normalized()
            }
        };
        if !ok {
            return Err(Error::InvalidPairing {
                scheme: scheme.name(),
                transform: transform.name(),
            });
        }
        Ok(FeatureConfig { scheme, transform })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn transform(&self) -> Transform {
        self.transform
    }

    /// Every valid pairing.
    pub fn all() -> Vec<FeatureConfig> {
        Scheme::ALL
            .into_iter()
            .flat_map(|s| {
                Transform::ALL
                    .into_iter()
                    .filter_map(move |t| FeatureConfig::new(s, t).ok())
            })
            .collect()
    }
}

impl fmt::Display for FeatureConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}+{}", self.scheme, self.transform)
    }
}

impl FromStr for FeatureConfig {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (scheme, transform) = s.split_once('+').unwrap_or((s, "none"));
        FeatureConfig::new(scheme.parse()?, transform.parse()?)
    }
}
