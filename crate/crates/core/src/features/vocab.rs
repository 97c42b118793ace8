use std::collections::{BTreeMap, BTreeSet};
use std::io::BufRead;

use sha2::{Digest, Sha256};

use super::bag::BagStats;
use crate::error::{Error, Result};

/// Training words in lexicographic order; a word's index is its rank.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    pub fn from_words<I: IntoIterator<Item = String>>(words: I) -> Self {
        let words: Vec<String> = words
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        Vocabulary { words, index }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn index_of(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, index: usize) -> Option<&str> {
        self.words.get(index).map(String::as_str)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

/// Union of the words of the training bags.
pub fn build_vocabulary(train_bags: &[BagStats]) -> Result<Vocabulary> {
    if train_bags.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    Ok(Vocabulary::from_words(
        train_bags
            .iter()
            .flat_map(|b| b.words.iter().map(|w| w.word.clone())),
    ))
}

/// Natural-log inverse document frequency per vocabulary index.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable(Vec<f64>);

impl IdfTable {
    pub fn from_values(values: Vec<f64>) -> Self {
        IdfTable(values)
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.0.get(index).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// `idf(w) = ln(n / (1 + df(w)))` over the `n` training bags. Words present
/// in every bag get a negative idf.
pub fn compute_idf(train_bags: &[BagStats], vocab: &Vocabulary) -> Result<IdfTable> {
    if train_bags.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let mut df = vec![0u64; vocab.len()];
    for bag in train_bags {
        for w in &bag.words {
            if let Some(i) = vocab.index_of(&w.word) {
                df[i] += 1;
            }
        }
    }
    let n = train_bags.len() as f64;
    Ok(IdfTable(
        df.into_iter()
            .map(|d| (n / (1.0 + d as f64)).ln())
            .collect(),
    ))
}

/// `word \t index \t idf` per line, in index order.
pub fn write_vocab_tsv(vocab: &Vocabulary, idf: &IdfTable) -> String {
    let mut out = String::new();
    for (i, w) in vocab.words().iter().enumerate() {
        out.push_str(&format!("{w}\t{i}\t{}\n", idf.0[i]));
    }
    out
}

pub fn read_vocab_tsv<R: BufRead>(input: R) -> Result<(Vocabulary, IdfTable)> {
    let mut words = Vec::new();
    let mut idf = Vec::new();
    for (n, line) in input.lines().enumerate() {
        let line = line.map_err(|e| Error::io("<vocab>", e))?;
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split('\t');
        let (Some(w), Some(i), Some(v), None) =
            (cols.next(), cols.next(), cols.next(), cols.next())
        else {
            return Err(Error::parse(n + 1, "expected word<TAB>index<TAB>idf"));
        };
        let i: usize = i.parse().map_err(|_| Error::parse(n + 1, "bad index"))?;
        if i != words.len() {
            return Err(Error::parse(n + 1, format!("index {i} out of order")));
        }
        if words.last().is_some_and(|prev: &String| prev.as_str() >= w) {
            return Err(Error::parse(n + 1, "words not strictly sorted"));
        }
        words.push(w.to_string());
        idf.push(
            v.parse::<f64>()
                .map_err(|_| Error::parse(n + 1, "bad idf"))?,
        );
    }
    Ok((Vocabulary::from_words(words), IdfTable(idf)))
}

/// Short content hash tying vectors and models to the vocabulary they used.
pub fn vocab_fingerprint(vocab: &Vocabulary, idf: &IdfTable) -> String {
    let digest = Sha256::digest(write_vocab_tsv(vocab, idf).as_bytes());
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
#[allow(clippy::approx_constant)]
mod tests {
    use super::*;
    use crate::features::bag::WordStat;

    fn bag(geoid: &str, words: &[&str]) -> BagStats {
        BagStats {
            geoid: geoid.into(),
            total_words: words.len() as u64,
            total_users: 1,
            words: words
                .iter()
                .map(|w| WordStat {
                    word: w.to_string(),
                    count: 1,
                    users: 1,
                })
                .collect(),
        }
    }

    #[test]
    fn union_in_lexicographic_order() {
        let v = build_vocabulary(&[bag("1", &["b", "a"]), bag("2", &["c", "b"])]).unwrap();
        assert_eq!(v.words(), ["a", "b", "c"]);
        assert_eq!(v.index_of("c"), Some(2));
        assert_eq!(v.index_of("zzz"), None);
    }

    #[test]
    fn empty_inputs() {
        assert!(matches!(
            build_vocabulary(&[]),
            Err(Error::EmptyTrainingSet)
        ));
        let v = build_vocabulary(&[bag("1", &[])]).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn idf_formula() {
        let bags = [
            bag("1", &["all", "one"]),
            bag("2", &["all"]),
            bag("3", &["all"]),
            bag("4", &["all"]),
        ];
        let v = build_vocabulary(&bags).unwrap();
        let idf = compute_idf(&bags, &v).unwrap();
        assert!((idf.get(v.index_of("one").unwrap()).unwrap() - 0.693147).abs() < 1e-6);
        assert!((idf.get(v.index_of("all").unwrap()).unwrap() + 0.223144).abs() < 1e-6);

        let single = [bag("1", &["w"])];
        let v = build_vocabulary(&single).unwrap();
        assert!((compute_idf(&single, &v).unwrap().get(0).unwrap() + 0.693147).abs() < 1e-6);
    }

    #[test]
    fn tsv_round_trip() {
        let bags = [bag("1", &["x", "y"]), bag("2", &["y"])];
        let v = build_vocabulary(&bags).unwrap();
        let idf = compute_idf(&bags, &v).unwrap();
        let text = write_vocab_tsv(&v, &idf);
        let (v2, idf2) = read_vocab_tsv(text.as_bytes()).unwrap();
        assert_eq!(v2, v);
        assert_eq!(idf2, idf);
        assert_eq!(vocab_fingerprint(&v, &idf), vocab_fingerprint(&v2, &idf2));
    }
}
