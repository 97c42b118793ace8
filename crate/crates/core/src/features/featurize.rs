use std::collections::BTreeMap;

use super::{
    apply_transform, build_vocabulary, compute_idf, vectorize, vocab_fingerprint, BagStats,
    FeatureConfig, FeatureRow, FeatureSet, IdfTable, Scheme, SparseVector, Transform, Vocabulary,
};
use crate::error::{Error, Result};
use crate::eval::Split;

/// Vocabulary, idf and transformed vectors for every bag with a split.
///
/// Vocabulary and idf come from training and validation bags only, so test
/// units cannot influence them. Bags without a split assignment are skipped.
/// Under `NormalizedWord` a bag with no words gets an empty vector.
pub fn featurize(
    bags: &[BagStats],
    splits: &BTreeMap<String, Split>,
    config: FeatureConfig,
) -> Result<(Vocabulary, IdfTable, FeatureSet)> {
    let training: Vec<BagStats> = bags
        .iter()
        .filter(|b| splits.get(&b.geoid).is_some_and(|s| s.is_training()))
        .cloned()
        .collect();
    if training.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let vocab = build_vocabulary(&training)?;
    let idf = compute_idf(&training, &vocab)?;
    let idf_arg = (config.transform() == Transform::Tfidf).then_some(&idf);
    let mut rows = Vec::with_capacity(bags.len());
    for bag in bags {
        let Some(&split) = splits.get(&bag.geoid) else {
            log::warn!("bag {} has no split assignment; skipped", bag.geoid);
            continue;
        };
        let raw = match vectorize(bag, &vocab, config.scheme()) {
            Err(Error::ZeroTotal { geoid, what }) if config.scheme() == Scheme::NormalizedWord => {
                log::warn!("unit {geoid} has zero {what}; using an empty vector");
                SparseVector::empty(vocab.len())
            }
            other => other?,
        };
        let vector = apply_transform(raw, &config, idf_arg)?;
        rows.push(FeatureRow {
            geoid: bag.geoid.clone(),
            split,
            vector,
        });
    }
    let set = FeatureSet {
        config,
        dim: vocab.len(),
        vocab_fingerprint: vocab_fingerprint(&vocab, &idf),
        rows,
    };
    Ok((vocab, idf, set))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::UnitBag;

    fn bag(geoid: &str, words: &[&str]) -> BagStats {
        let mut b = UnitBag::new(geoid);
        let toks: Vec<String> = words.iter().map(|w| w.to_string()).collect();
        b.accumulate(geoid, 1, &toks).unwrap();
        b.finalize()
    }

    #[test]
    fn test_only_words_are_invisible() {
        let bags = vec![
            bag("01001", &["a", "b"]),
            bag("01002", &["b"]),
            bag("01003", &["a", "secret"]),
        ];
        let splits: BTreeMap<String, Split> = [
            ("01001".to_string(), Split::Train),
            ("01002".to_string(), Split::Validation),
            ("01003".to_string(), Split::Test),
        ]
        .into();
        let cfg = FeatureConfig::new(Scheme::RawWord, Transform::Tfidf).unwrap();
        let (vocab, idf, set) = featurize(&bags, &splits, cfg).unwrap();
        assert_eq!(vocab.words(), ["a", "b"]);
        assert_eq!(idf.len(), 2);
        assert_eq!(set.rows.len(), 3);
        assert_eq!(set.rows[2].vector.indices(), [0]);
    }

    #[test]
    fn empty_bag_under_normalized_word() {
        let mut empty = UnitBag::new("01003");
        empty.accumulate("01003", 9, &[]).unwrap();
        let bags = vec![bag("01001", &["a"]), empty.finalize()];
        let splits: BTreeMap<String, Split> = [
            ("01001".to_string(), Split::Train),
            ("01003".to_string(), Split::Test),
        ]
        .into();
        let cfg = FeatureConfig::new(Scheme::NormalizedWord, Transform::None).unwrap();
        let (_, _, set) = featurize(&bags, &splits, cfg).unwrap();
        assert!(set.rows[1].vector.is_empty());
    }

    #[test]
    fn needs_training_bags() {
        let splits: BTreeMap<String, Split> = [("01001".to_string(), Split::Test)].into();
        let cfg = FeatureConfig::new(Scheme::RawWord, Transform::None).unwrap();
        assert!(matches!(
            featurize(&[bag("01001", &["a"])], &splits, cfg),
            Err(Error::EmptyTrainingSet)
        ));
    }
}
