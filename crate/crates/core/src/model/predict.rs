use super::{RegressionModel, Variant};
use crate::error::{Error, Result};
use crate::features::SparseVector;

fn check_input(model: &RegressionModel, x: &SparseVector, want: Variant) -> Result<()> {
    if model.variant != want {
        return Err(Error::VariantMismatch {
            expected: want.name(),
            found: model.variant.name(),
        });
    }
    if x.dim() != model.dim {
        return Err(Error::Dimension {
            expected: model.dim,
            found: x.dim(),
        });
    }
    Ok(())
}

/// `y_j = w_j . x` for every category. Values may be negative.
pub fn predict_unknown(model: &RegressionModel, x: &SparseVector) -> Result<Vec<f64>> {
    check_input(model, x, Variant::Unknown)?;
    Ok(model.weights.iter().map(|w| w.score(x)).collect())
}

/// Split population `p` across categories with the denominator's score
/// fixed at zero: `y_j = p * exp(s_j) / sum_m exp(s_m)`. Scores are shifted
/// by their maximum before exponentiating.
pub fn predict_known(model: &RegressionModel, x: &SparseVector, p: f64) -> Result<Vec<f64>> {
    check_input(model, x, Variant::Known)?;
    if !(p >= 0.0) {
        return Err(Error::Config(format!(
            "population {p} must be non-negative"
        )));
    }
    let q = model.denominator.expect("checked population-known model");
    let mut modeled = model.weights.iter();
    let scores: Vec<f64> = (0..model.k())
        .map(|j| {
            if j == q {
                0.0
            } else {
                modeled.next().expect("k - 1 weights").score(x)
            }
        })
        .collect();
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| p * e / total).collect())
}

/// Copy with negative counts raised to zero, for exported predictions.
pub fn clamp_nonnegative(pred: &[f64]) -> Vec<f64> {
    pred.iter().map(|v| v.max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{FeatureConfig, Scheme, Transform};
    use crate::model::{TrainConfig, Weights};
    use proptest::prelude::*;

    fn model(variant: Variant, weights: Vec<Vec<f64>>, k: usize) -> RegressionModel {
        let dim = weights.first().map_or(1, Vec::len);
        RegressionModel {
            variant,
            variable: "v".into(),
            categories: (0..k).map(|j| format!("c{j}")).collect(),
            denominator: (variant == Variant::Known).then_some(0),
            weights: weights
                .into_iter()
                .map(|coef| Weights {
                    coef,
                    intercept: 0.0,
                })
                .collect(),
            dim,
            features: FeatureConfig::new(Scheme::RawWord, Transform::None).unwrap(),
            vocab_fingerprint: String::new(),
            train: TrainConfig::default(),
        }
    }

    #[test]
    fn unknown_basics() {
        let zero = model(Variant::Unknown, vec![vec![0.0; 3]; 2], 2);
        let x = SparseVector::new(3, [(0, 2.5), (2, 1.0)]).unwrap();
        assert_eq!(predict_unknown(&zero, &x).unwrap(), vec![0.0, 0.0]);
        let m = model(
            Variant::Unknown,
            vec![vec![1.0, 0.0, 0.0], vec![0.0, -1.0, 0.0]],
            2,
        );
        let x = SparseVector::new(3, [(0, 2.5)]).unwrap();
        assert_eq!(predict_unknown(&m, &x).unwrap()[0], 2.5);
        assert_eq!(
            predict_unknown(&m, &SparseVector::empty(3)).unwrap(),
            vec![0.0, 0.0]
        );
        assert!(predict_known(&m, &x, 10.0).is_err());
    }

    #[test]
    fn known_closed_forms() {
        let x = SparseVector::new(1, [(0, 1.0)]).unwrap();
        let m = model(Variant::Known, vec![vec![0.0]], 2);
        assert_eq!(predict_known(&m, &x, 100.0).unwrap(), vec![50.0, 50.0]);
        let m = model(Variant::Known, vec![vec![3f64.ln()]], 2);
        let y = predict_known(&m, &x, 100.0).unwrap();
        assert!((y[0] - 25.0).abs() < 1e-12 && (y[1] - 75.0).abs() < 1e-12);
        let m = model(Variant::Known, vec![vec![0.0], vec![0.0]], 3);
        let y = predict_known(&m, &x, 90.0).unwrap();
        assert!(y.iter().all(|v| (v - 30.0).abs() < 1e-12));
        assert!(predict_unknown(&m, &x).is_err());
    }

    #[test]
    fn clamping() {
        assert_eq!(clamp_nonnegative(&[-1.0, 2.0]), vec![0.0, 2.0]);
    }

    proptest! {
        #[test]
        fn known_sums_to_population(
            scores in proptest::collection::vec(-700.0f64..700.0, 1..6),
            p in 0.0f64..1e7,
        ) {
            let k = scores.len() + 1;
            let m = model(Variant::Known, scores.iter().map(|&s| vec![s]).collect(), k);
            let x = SparseVector::new(1, [(0, 1.0)]).unwrap();
            let y = predict_known(&m, &x, p).unwrap();
            prop_assert!(y.iter().all(|v| v.is_finite() && *v >= 0.0));
            prop_assert!((y.iter().sum::<f64>() - p).abs() <= 1e-9 * p);
        }
    }
}
