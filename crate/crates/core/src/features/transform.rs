use super::vector::SparseVector;
use super::vocab::IdfTable;
use super::{FeatureConfig, Transform};
use crate::error::{Error, Result};

/// `2 * sqrt(v + 3/8)`
pub fn anscombe(v: f64) -> f64 {
    2.0 * (v + 0.375).sqrt()
}

pub fn logistic(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

/// `exp(-v^2)`
pub fn gaussian(v: f64) -> f64 {
    (-v * v).exp()
}

/// Transform the stored entries of `v`; absent entries stay absent.
/// TFIDF scales each entry by `idf + 1` and needs `idf`; the other
/// transforms must not be given one.
pub fn apply_transform(
    v: SparseVector,
    config: &FeatureConfig,
    idf: Option<&IdfTable>,
) -> Result<SparseVector> {
    match (config.transform(), idf) {
        (Transform::Tfidf, None) => Err(Error::Config(
            "tfidf transform requires an idf table".into(),
        )),
        (Transform::Tfidf, Some(idf)) => {
            v.map_values(|i, x| Ok(x * (idf.get(i).ok_or(Error::MissingIdf(i))? + 1.0)))
        }
        (t, Some(_)) => Err(Error::Config(format!("{t} transform takes no idf table"))),
        (Transform::None, None) => Ok(v),
        (Transform::Anscombe, None) => v.map_values(|_, x| Ok(anscombe(x))),
        (Transform::Logistic, None) => v.map_values(|_, x| Ok(logistic(x))),
        (Transform::Gaussian, None) => v.map_values(|_, x| Ok(gaussian(x))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Scheme;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        assert_eq!(anscombe(0.625), 2.0);
        assert!((gaussian(1.0) - 0.367879).abs() < 1e-6);
        assert!((logistic(0.5) - 0.622459).abs() < 1e-6);
    }

    #[test]
    fn tfidf_scales_by_idf_plus_one() {
        let cfg = FeatureConfig::new(Scheme::RawWord, Transform::Tfidf).unwrap();
        let idf = IdfTable::from_values(vec![(4.0f64 / 2.0).ln()]);
        let v = SparseVector::new(1, [(0, 3.0)]).unwrap();
        let x = apply_transform(v, &cfg, Some(&idf)).unwrap();
        assert!((x.values()[0] - 5.079442).abs() < 1e-6);
    }

    #[test]
    fn idf_presence_must_match_transform() {
        let tfidf = FeatureConfig::new(Scheme::RawUser, Transform::Tfidf).unwrap();
        let gauss = FeatureConfig::new(Scheme::NormalizedUser, Transform::Gaussian).unwrap();
        let v = SparseVector::new(2, [(1, 1.0)]).unwrap();
        assert!(apply_transform(v.clone(), &tfidf, None).is_err());
        let idf = IdfTable::from_values(vec![0.0, 0.0]);
        assert!(apply_transform(v.clone(), &gauss, Some(&idf)).is_err());
        let short = IdfTable::from_values(vec![0.0]);
        assert!(matches!(
            apply_transform(v, &tfidf, Some(&short)),
            Err(Error::MissingIdf(1))
        ));
    }

    proptest! {
        #[test]
        fn monotonicity(a in 1e-6f64..1.0, b in 1e-6f64..1.0) {
            prop_assume!(b - a > 1e-9);
            prop_assert!(anscombe(a) < anscombe(b));
            prop_assert!(logistic(a) < logistic(b));
            prop_assert!(gaussian(a) > gaussian(b));
        }
    }
}
