use std::io::BufRead;

use super::bag::BagStats;
use super::vocab::Vocabulary;
use super::{FeatureConfig, Scheme};
use crate::error::{Error, Result};
use crate::eval::Split;

/// Sorted `(index, value)` pairs over a `dim`-dimensional space.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    dim: usize,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseVector {
    /// Build from pairs; zero values are dropped. Indices must be strictly
    /// increasing and below `dim`.
    pub fn new(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for (i, v) in pairs {
            if i >= dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: i + 1,
                });
            }
            if indices.last().is_some_and(|&last| last >= i) {
                return Err(Error::Config(format!("sparse index {i} out of order")));
            }
            if v != 0.0 {
                indices.push(i);
                values.push(v);
            }
        }
        Ok(SparseVector {
            dim,
            indices,
            values,
        })
    }

    pub fn empty(dim: usize) -> Self {
        SparseVector {
            dim,
            indices: vec![],
            values: vec![],
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices
            .iter()
            .copied()
            .zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.indices
            .binary_search(&index)
            .ok()
            .map(|p| self.values[p])
    }

    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    /// Replace every stored value, keeping the support as is.
    pub(crate) fn map_values(mut self, f: impl Fn(usize, f64) -> Result<f64>) -> Result<Self> {
        for (k, &i) in self.indices.iter().enumerate() {
            self.values[k] = f(i, self.values[k])?;
        }
        Ok(self)
    }
}

/// Raw feature values of a bag under `scheme`. Words outside the vocabulary
/// are dropped.
pub fn vectorize(bag: &BagStats, vocab: &Vocabulary, scheme: Scheme) -> Result<SparseVector> {
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let denom = match scheme {
        Scheme::NormalizedWord if bag.total_words == 0 => {
            return Err(Error::ZeroTotal {
                geoid: bag.geoid.clone(),
                what: "total words",
            })
        }
        Scheme::NormalizedUser if bag.total_users == 0 => {
            return Err(Error::ZeroTotal {
                geoid: bag.geoid.clone(),
                what: "users",
            })
        }
        Scheme::NormalizedWord => bag.total_words as f64,
        Scheme::NormalizedUser => bag.total_users as f64,
        Scheme::RawWord | Scheme::RawUser => 1.0,
    };
    let mut pairs: Vec<(usize, f64)> = bag
        .words
        .iter()
        .filter_map(|w| {
            let i = vocab.index_of(&w.word)?;
            let raw = match scheme {
                Scheme::RawWord | Scheme::NormalizedWord => w.count,
                Scheme::RawUser | Scheme::NormalizedUser => w.users,
            };
            Some((i, raw as f64 / denom))
        })
        .collect();
    pairs.sort_by_key(|p| p.0);
    SparseVector::new(vocab.len(), pairs)
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureRow {
    pub geoid: String,
    pub split: Split,
    pub vector: SparseVector,
}

/// Transformed vectors for a set of units plus the provenance needed to
/// check them against a model.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSet {
    pub config: FeatureConfig,
    pub dim: usize,
    pub vocab_fingerprint: String,
    pub rows: Vec<FeatureRow>,
}

const FEATURES_MAGIC: &str = "#geodemo-features";

/// Header line, then `geoid \t split \t index:value ...` per unit.
pub fn write_features(set: &FeatureSet) -> String {
    let mut out = format!(
        "{FEATURES_MAGIC} scheme={} transform={} dim={} vocab={}\n",
        set.config.scheme(),
        set.config.transform(),
        set.dim,
        set.vocab_fingerprint
    );
    for row in &set.rows {
        out.push_str(&row.geoid);
        out.push('\t');
        out.push_str(row.split.name());
        out.push('\t');
        let entries: Vec<String> = row.vector.iter().map(|(i, v)| format!("{i}:{v}")).collect();
        out.push_str(&entries.join(" "));
        out.push('\n');
    }
    out
}

pub fn read_features<R: BufRead>(input: R) -> Result<FeatureSet> {
    let mut lines = input.lines().enumerate();
    let mut header = None;
    for (n, line) in lines.by_ref() {
        let line = line.map_err(|e| Error::io("<features>", e))?;
        if let Some(rest) = line.strip_prefix(FEATURES_MAGIC) {
            header = Some(rest.to_string());
            break;
        }
        if !line.starts_with('#') {
            return Err(Error::parse(n + 1, "missing features header"));
        }
    }
    let header = header.ok_or_else(|| Error::parse(1, "missing features header"))?;
    let field = |key: &str| -> Result<&str> {
        header
            .split_whitespace()
            .find_map(|kv| kv.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
            .ok_or_else(|| Error::parse(1, format!("header lacks {key}")))
    };
    let config = FeatureConfig::new(field("scheme")?.parse()?, field("transform")?.parse()?)?;
    let dim: usize = field("dim")?
        .parse()
        .map_err(|_| Error::parse(1, "bad dim"))?;
    let vocab_fingerprint = field("vocab")?.to_string();
    let mut rows = Vec::new();
    for (n, line) in lines {
        let line = line.map_err(|e| Error::io("<features>", e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.splitn(3, '\t');
        let (Some(geoid), Some(split), entries) = (cols.next(), cols.next(), cols.next()) else {
            return Err(Error::parse(n + 1, "expected geoid<TAB>split<TAB>entries"));
        };
        let pairs = entries
            .unwrap_or("")
            .split_whitespace()
            .map(|e| {
                let (i, v) = e.split_once(':')?;
                Some((i.parse::<usize>().ok()?, v.parse::<f64>().ok()?))
            })
            .collect::<Option<Vec<_>>>()
            .ok_or_else(|| Error::parse(n + 1, "bad index:value entry"))?;
        rows.push(FeatureRow {
            geoid: geoid.to_string(),
            split: split.parse()?,
            vector: SparseVector::new(dim, pairs)?,
        });
    }
    Ok(FeatureSet {
        config,
        dim,
        vocab_fingerprint,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::bag::UnitBag;
    use crate::features::{build_vocabulary, Transform};

    fn example_bag() -> BagStats {
        let mut bag = UnitBag::new("15001");
        let t = |w: &[&str]| w.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        bag.accumulate("15001", 1, &t(&["a", "a", "b"])).unwrap();
        bag.accumulate("15001", 1, &t(&["b", "c"])).unwrap();
        bag.accumulate("15001", 2, &t(&["a"])).unwrap();
        bag.finalize()
    }

    #[test]
    fn normalized_schemes() {
        let bag = example_bag();
        let vocab = build_vocabulary(std::slice::from_ref(&bag)).unwrap();
        let w = vectorize(&bag, &vocab, Scheme::NormalizedWord).unwrap();
        assert_eq!(w.values(), [3.0 / 6.0, 2.0 / 6.0, 1.0 / 6.0]);
        assert!((w.values().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let u = vectorize(&bag, &vocab, Scheme::NormalizedUser).unwrap();
        assert_eq!(u.values(), [1.0, 0.5, 0.5]);
        let raw = vectorize(&bag, &vocab, Scheme::RawWord).unwrap();
        assert_eq!(raw.values(), [3.0, 2.0, 1.0]);
        let ru = vectorize(&bag, &vocab, Scheme::RawUser).unwrap();
        assert_eq!(ru.values(), [2.0, 1.0, 1.0]);
    }

    #[test]
    fn out_of_vocabulary_dropped() {
        let vocab = Vocabulary::from_words(["zzz".to_string()]);
        let v = vectorize(&example_bag(), &vocab, Scheme::RawWord).unwrap();
        assert!(v.is_empty());
        assert_eq!(v.dim(), 1);
    }

    #[test]
    fn degenerate_inputs() {
        let bag = example_bag();
        assert!(matches!(
            vectorize(&bag, &Vocabulary::default(), Scheme::RawWord),
            Err(Error::EmptyVocabulary)
        ));
        let mut empty = UnitBag::new("15002");
        empty.accumulate("15002", 9, &[]).unwrap();
        let empty = empty.finalize();
        let vocab = Vocabulary::from_words(["a".to_string()]);
        assert!(matches!(
            vectorize(&empty, &vocab, Scheme::NormalizedWord),
            Err(Error::ZeroTotal { .. })
        ));
        assert!(vectorize(&empty, &vocab, Scheme::NormalizedUser)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn sparse_vector_invariants() {
        assert!(SparseVector::new(3, [(1, 1.0), (1, 2.0)]).is_err());
        assert!(SparseVector::new(3, [(3, 1.0)]).is_err());
        let v = SparseVector::new(3, [(0, 0.0), (2, 4.0)]).unwrap();
        assert_eq!(v.nnz(), 1);
        assert_eq!(v.get(2), Some(4.0));
        assert_eq!(v.dot(&[1.0, 1.0, 0.5]), 2.0);
    }

    #[test]
    fn features_file_round_trip() {
        let set = FeatureSet {
            config: FeatureConfig::new(Scheme::NormalizedUser, Transform::Gaussian).unwrap(),
            dim: 4,
            vocab_fingerprint: "abcd".into(),
            rows: vec![
                FeatureRow {
                    geoid: "15001".into(),
                    split: Split::Train,
                    vector: SparseVector::new(4, [(0, 0.1), (3, 1.0 / 3.0)]).unwrap(),
                },
                FeatureRow {
                    geoid: "15002".into(),
                    split: Split::Test,
                    vector: SparseVector::empty(4),
                },
            ],
        };
        let text = write_features(&set);
        assert_eq!(read_features(text.as_bytes()).unwrap(), set);
    }
}
