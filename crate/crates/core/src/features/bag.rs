use std::collections::{BTreeMap, BTreeSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bijective 64-bit mix; distinct ids stay distinct.
fn user_hash(user_id: u64) -> u64 {
    let mut z = user_id.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Accumulator for one unit. User sets are exact until [`UnitBag::finalize`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct UnitBag {
    pub geoid: String,
    pub word_counts: BTreeMap<String, u64>,
    pub user_sets: BTreeMap<String, BTreeSet<u64>>,
    pub total_words: u64,
    pub unit_users: BTreeSet<u64>,
}

impl UnitBag {
    pub fn new(geoid: impl Into<String>) -> Self {
        UnitBag {
            geoid: geoid.into(),
            ..Default::default()
        }
    }

    /// Add one record. A user whose record has no tokens still counts as a
    /// user of the unit.
    pub fn accumulate(&mut self, geoid: &str, user_id: u64, tokens: &[String]) -> Result<()> {
        if geoid != self.geoid {
            return Err(Error::GeoidMismatch {
                bag: self.geoid.clone(),
                record: geoid.to_string(),
            });
        }
        let user = user_hash(user_id);
        self.unit_users.insert(user);
        for tok in tokens {
            *self.word_counts.entry(tok.clone()).or_insert(0) += 1;
            self.user_sets.entry(tok.clone()).or_default().insert(user);
            self.total_words += 1;
        }
        Ok(())
    }

    /// Associative merge of two partial bags for the same unit.
    pub fn merge(&mut self, other: UnitBag) -> Result<()> {
        if other.geoid != self.geoid {
            return Err(Error::GeoidMismatch {
                bag: self.geoid.clone(),
                record: other.geoid,
            });
        }
        for (w, c) in other.word_counts {
            *self.word_counts.entry(w).or_insert(0) += c;
        }
        for (w, users) in other.user_sets {
            self.user_sets.entry(w).or_default().extend(users);
        }
        self.total_words += other.total_words;
        self.unit_users.extend(other.unit_users);
        Ok(())
    }

    pub fn finalize(&self) -> BagStats {
        BagStats {
            geoid: self.geoid.clone(),
            total_words: self.total_words,
            total_users: self.unit_users.len() as u64,
            words: self
                .word_counts
                .iter()
                .map(|(w, &c)| WordStat {
                    word: w.clone(),
                    count: c,
                    users: self.user_sets.get(w).map_or(0, |s| s.len() as u64),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordStat {
    pub word: String,
    /// Occurrences of the word in the unit.
    pub count: u64,
    /// Distinct users who used the word in the unit.
    pub users: u64,
}

/// Finalized bag: `C`, `U` and per-word `(c, u)`, words sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BagStats {
    pub geoid: String,
    pub total_words: u64,
    pub total_users: u64,
    pub words: Vec<WordStat>,
}

#[derive(Serialize, Deserialize)]
struct WireBag {
    geoid: String,
    #[serde(rename = "C")]
    total_words: u64,
    #[serde(rename = "U")]
    total_users: u64,
    words: Vec<(String, u64, u64)>,
}

/// Group `(geoid, user_id, tokens)` records into finalized bags sorted by geoid.
pub fn build_bags<I>(records: I) -> Result<Vec<BagStats>>
where
    I: IntoIterator<Item = (String, u64, Vec<String>)>,
{
    let mut bags: BTreeMap<String, UnitBag> = BTreeMap::new();
    for (geoid, user, tokens) in records {
        bags.entry(geoid.clone())
            .or_insert_with(|| UnitBag::new(geoid.clone()))
            .accumulate(&geoid, user, &tokens)?;
    }
    Ok(bags.values().map(UnitBag::finalize).collect())
}

pub fn write_bags<W: Write + ?Sized>(out: &mut W, bags: &[BagStats]) -> std::io::Result<()> {
    for b in bags {
        let wire = WireBag {
            geoid: b.geoid.clone(),
            total_words: b.total_words,
            total_users: b.total_users,
            words: b
                .words
                .iter()
                .map(|w| (w.word.clone(), w.count, w.users))
                .collect(),
        };
        writeln!(
            out,
            "{}",
            serde_json::to_string(&wire).map_err(std::io::Error::other)?
        )?;
    }
    Ok(())
}

pub fn read_bags<R: BufRead>(input: R) -> Result<Vec<BagStats>> {
    let mut out = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<bags>", e))?;
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let wire: WireBag =
            serde_json::from_str(&line).map_err(|e| Error::parse(i + 1, e.to_string()))?;
        let mut words: Vec<WordStat> = wire
            .words
            .into_iter()
            .map(|(word, count, users)| WordStat { word, count, users })
            .collect();
        words.sort_by(|a, b| a.word.cmp(&b.word));
        out.push(BagStats {
            geoid: wire.geoid,
            total_words: wire.total_words,
            total_users: wire.total_users,
            words,
        });
    }
    Ok(out)
}
