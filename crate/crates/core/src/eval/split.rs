use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Read;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MIN_UNITS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    /// Train and validation together form the training split.
    pub fn is_training(self) -> bool {
        self != Split::Test
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            _ => Err(Error::Config(format!("unknown split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitAssignment {
    pub seed: u64,
    assignments: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn get(&self, geoid: &str) -> Option<Split> {
        self.assignments.get(geoid).copied()
    }

    pub fn from_map(seed: u64, assignments: BTreeMap<String, Split>) -> Self {
        SplitAssignment { seed, assignments }
    }

    pub fn as_map(&self) -> &BTreeMap<String, Split> {
        &self.assignments
    }

    pub fn len(&self) -> usize {
        self.assignments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assignments.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Split)> {
        self.assignments.iter().map(|(g, s)| (g.as_str(), *s))
    }

    pub fn count(&self, split: Split) -> usize {
        self.assignments.values().filter(|s| **s == split).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("# seed={}\ngeoid,split\n", self.seed);
        for (g, s) in &self.assignments {
            out.push_str(&format!("{g},{s}\n"));
        }
        out
    }

    pub fn parse_csv<R: Read>(reader: R) -> Result<Self> {
        let mut text = String::new();
        let mut reader = reader;
        reader
            .read_to_string(&mut text)
            .map_err(|e| Error::io("<splits>", e))?;
        let seed = text
            .lines()
            .find_map(|l| l.strip_prefix("# seed="))
            .and_then(|s| s.trim().parse().ok())
            .unwrap_or(0);
        let mut rdr = csv::ReaderBuilder::new()
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut assignments = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 2 {
                return Err(Error::parse(0, "expected geoid,split"));
            }
            assignments.insert(rec[0].to_string(), rec[1].parse()?);
        }
        Ok(SplitAssignment { seed, assignments })
    }
}

/// `(test, validation, train)` sizes for `n` units.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let n_test = n.div_ceil(10);
    let n_val = ((n - n_test) as f64 / 10.0).round() as usize;
    (n_test, n_val, n - n_test - n_val)
}

/// Seeded random split: the first tenth (rounded up) of a shuffled order is
/// test, the next tenth of the remainder (rounded) is validation, the rest
/// is train. Input order does not matter.
pub fn split_units(geoids: &[String], seed: u64) -> Result<SplitAssignment> {
    let unique: BTreeSet<&String> = geoids.iter().collect();
    if unique.len() != geoids.len() {
        return Err(Error::Config("split_units needs unique geoids".into()));
    }
    let n = geoids.len();
    if n < MIN_UNITS {
        return Err(Error::TooFewUnits {
            needed: MIN_UNITS,
            found: n,
        });
    }
    let mut order: Vec<&String> = unique.into_iter().collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (n_test, n_val, _) = split_sizes(n);
    let assignments = order
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let s = if i < n_test {
                Split::Test
            } else if i < n_test + n_val {
                Split::Validation
            } else {
                Split::Train
            };
            (g.clone(), s)
        })
        .collect();
    Ok(SplitAssignment { seed, assignments })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("15001{i:010}")).collect()
    }

    #[test]
    fn hundred_units() {
        let s = split_units(&ids(100), 3).unwrap();
        assert_eq!(
            (
                s.count(Split::Test),
                s.count(Split::Validation),
                s.count(Split::Train)
            ),
            (10, 9, 81)
        );
    }

    #[test]
    fn deterministic_and_order_free() {
        let a = split_units(&ids(57), 11).unwrap();
        let mut rev = ids(57);
        rev.reverse();
        assert_eq!(a, split_units(&ids(57), 11).unwrap());
        assert_eq!(a, split_units(&rev, 11).unwrap());
        assert_ne!(a, split_units(&ids(57), 12).unwrap());
    }

    #[test]
    fn sizes_near_exact_fractions() {
        for n in [10, 11, 19, 99, 101, 1234, 99_999] {
            let s = split_units(&ids(n), 0).unwrap();
            let test = s.count(Split::Test) as f64;
            let val = s.count(Split::Validation) as f64;
            assert!((test - n as f64 * 0.1).abs() <= 1.0, "n={n}");
            assert!((val - n as f64 * 0.09).abs() <= 1.0, "n={n}");
        }
    }

    #[test]
    fn block_level_test_size() {
        let (test, val, train) = split_sizes(5_765_121);
        assert_eq!(test, 576_513);
        assert_eq!(val + train, 5_188_608);
        assert_eq!(split_sizes(100), (10, 9, 81));
    }

    #[test]
    fn errors() {
        assert!(matches!(
            split_units(&ids(9), 0),
            Err(Error::TooFewUnits { .. })
        ));
        let mut dup = ids(12);
        dup[1] = dup[0].clone();
        assert!(split_units(&dup, 0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let s = split_units(&ids(20), 5).unwrap();
        assert_eq!(
            SplitAssignment::parse_csv(s.to_csv().as_bytes()).unwrap(),
            s
        );
    }
}
