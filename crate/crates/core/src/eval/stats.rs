use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

/// National shares in per-mille, in canonical category order.
const GENDER_SHARES: [u32; 2] = [492, 508];
const RACE_SHARES: [u32; 5] = [616, 124, 54, 176, 30];

fn check_aligned(pred: &[f64], truth: &[f64], min: usize) -> Result<()> {
    if pred.len() != truth.len() {
        return Err(Error::Statistic(format!(
            "length mismatch: {} predictions, {} truths",
            pred.len(),
            truth.len()
        )));
    }
    if pred.len() < min {
        return Err(Error::Statistic(format!(
            "need at least {min} values, found {}",
            pred.len()
        )));
    }
    if pred.iter().chain(truth).any(|v| !v.is_finite()) {
        return Err(Error::Statistic("non-finite value".into()));
    }
    Ok(())
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn two_tailed(t: f64, dof: f64) -> Result<f64> {
    if t.is_infinite() {
        return Ok(0.0);
    }
    let dist = StudentsT::new(0.0, 1.0, dof).map_err(|e| Error::Statistic(e.to_string()))?;
    Ok((2.0 * dist.sf(t.abs())).min(1.0))
}

/// Sample Pearson correlation and its two-tailed p-value.
pub fn pearson_r(pred: &[f64], truth: &[f64]) -> Result<(f64, f64)> {
    check_aligned(pred, truth, 3)?;
    let (mp, mt) = (mean(pred), mean(truth));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        let (dp, dt) = (p - mp, t - mt);
        sxy += dp * dt;
        sxx += dp * dp;
        syy += dt * dt;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(Error::Statistic(
            "correlation undefined for constant input".into(),
        ));
    }
    let r = (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0);
    let dof = (pred.len() - 2) as f64;
    let t = if r.abs() == 1.0 {
        f64::INFINITY.copysign(r)
    } else {
        r * (dof / (1.0 - r * r)).sqrt()
    };
    Ok((r, two_tailed(t, dof)?))
}

/// `1 - SS_res / SS_tot`, with `SS_tot` taken about the mean of `truth`.
pub fn r_squared(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_aligned(pred, truth, 2)?;
    let m = mean(truth);
    let ss_tot: f64 = truth.iter().map(|t| (t - m) * (t - m)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Statistic("R^2 undefined for constant truth".into()));
    }
    let ss_res: f64 = pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedTTest {
    pub t: f64,
    pub p_value: f64,
}

/// Two-tailed paired t-test of `mean(a - b) = 0` with `n - 1` degrees of
/// freedom. Zero-variance differences give `p = 1` when the mean is zero and
/// the smallest positive normal `f64` otherwise.
pub fn paired_t_test(errors_a: &[f64], errors_b: &[f64]) -> Result<PairedTTest> {
    check_aligned(errors_a, errors_b, 2)?;
    let d: Vec<f64> = errors_a.iter().zip(errors_b).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let m = mean(&d);
    let var = d.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Ok(if m == 0.0 {
            PairedTTest {
                t: 0.0,
                p_value: 1.0,
            }
        } else {
            PairedTTest {
                t: f64::INFINITY.copysign(m),
                p_value: f64::MIN_POSITIVE,
            }
        });
    }
    let t = m / (var / n).sqrt();
    let p_value = two_tailed(t, n - 1.0)?.max(f64::MIN_POSITIVE);
    Ok(PairedTTest { t, p_value })
}

/// Fixed national shares times population, in canonical category order.
pub fn baseline_national(p: f64, variable: &str) -> Result<Vec<f64>> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::Config(format!(
            "population {p} must be finite and non-negative"
        )));
    }
    let shares: &[u32] = match variable {
        "gender" => &GENDER_SHARES,
        "race" => &RACE_SHARES,
        _ => return Err(Error::UnknownVariable(variable.to_string())),
    };
    Ok(shares.iter().map(|&s| s as f64 * p / 1000.0).collect())
}

/// Mean over categories of `|pred - truth| / max(truth, 1)`.
pub fn unit_relative_error(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_aligned(pred, truth, 1)?;
    let total: f64 = pred
        .iter()
        .zip(truth)
        .map(|(p, t)| (p - t).abs() / t.max(1.0))
        .sum();
    Ok(total / pred.len() as f64)
}

/// Linearly interpolated quantile of sorted data (the common "type 7" rule).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    Some(sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub threshold: u64,
    pub n_units: usize,
    /// `None` when no unit reaches the threshold.
    pub value: Option<f64>,
}

/// Quantile of per-unit relative error over units with at least `t` users,
/// for each threshold `t`.
pub fn relative_error_report(
    preds: &[Vec<f64>],
    truths: &[Vec<f64>],
    users: &[u64],
    thresholds: &[u64],
    quantile: f64,
) -> Result<Vec<ErrorRow>> {
    if !(quantile > 0.0 && quantile < 1.0) {
        return Err(Error::Config(format!(
            "quantile {quantile} must lie in (0, 1)"
        )));
    }
    if preds.len() != truths.len() || preds.len() != users.len() {
        return Err(Error::Statistic(
            "prediction, truth and user lists differ in length".into(),
        ));
    }
    let errors: Vec<f64> = preds
        .iter()
        .zip(truths)
        .map(|(p, t)| unit_relative_error(p, t))
        .collect::<Result<_>>()?;
    Ok(thresholds
        .iter()
        .map(|&threshold| {
            let mut kept: Vec<f64> = errors
                .iter()
                .zip(users)
                .filter(|(_, &u)| u >= threshold)
                .map(|(e, _)| *e)
                .collect();
            kept.sort_by(f64::total_cmp);
            ErrorRow {
                threshold,
                n_units: kept.len(),
                value: quantile_sorted(&kept, quantile),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        let truth = [1.0, 3.0, 2.0, 7.0];
        assert_abs_diff_eq!(pearson_r(&truth, &truth).unwrap().0, 1.0, epsilon = 1e-15);
        let neg: Vec<f64> = truth.iter().map(|v| -v).collect();
        assert_abs_diff_eq!(pearson_r(&neg, &truth).unwrap().0, -1.0, epsilon = 1e-15);
        let (r, _) = pearson_r(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        assert_abs_diff_eq!(r, 0.6, epsilon = 1e-12);
        assert!(pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(pearson_r(&[1.0, 2.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn pearson_p_value() {
        // n = 4, r = 0.6: t = 0.6 * sqrt(2 / 0.64) = 1.06066, dof 2.
        // Two-tailed p for t on 2 dof is 1 - t / sqrt(t^2 + 2).
        let (_, p) = pearson_r(&[1.0, 2.0, 3.0, 4.0], &[2.0, 1.0, 4.0, 3.0]).unwrap();
        let t: f64 = 0.6 * (2.0f64 / 0.64).sqrt();
        assert_abs_diff_eq!(p, 1.0 - t / (t * t + 2.0).sqrt(), epsilon = 1e-9);
    }

    #[test]
    fn r_squared_examples() {
        let truth = [1.0, -1.0];
        assert_eq!(r_squared(&truth, &truth).unwrap(), 1.0);
        assert_eq!(r_squared(&[0.0, 0.0], &truth).unwrap(), 0.0);
        assert_eq!(r_squared(&[-1.0, 1.0], &truth).unwrap(), -3.0);
        assert_eq!(r_squared(&[2.0, -2.0], &truth).unwrap(), 0.0);
        assert!(r_squared(&[1.0, 2.0], &[3.0, 3.0]).is_err());
    }

    #[test]
    fn t_test_degenerate_cases() {
        let a = [1.0, 2.0, 5.0];
        assert_eq!(paired_t_test(&a, &a).unwrap().p_value, 1.0);
        let b: Vec<f64> = a.iter().map(|v| v - 1.0).collect();
        assert_eq!(paired_t_test(&a, &b).unwrap().p_value, f64::MIN_POSITIVE);
    }

    #[test]
    fn t_test_near_five_percent() {
        // 30 differences 1 +/- c with mean 1 and sample sd c * sqrt(30/29),
        // so t = sqrt(29) / c = 2.045, the 0.975 quantile of t(29).
        let c = 29f64.sqrt() / 2.045;
        let d: Vec<f64> = (0..30)
            .map(|i| if i % 2 == 0 { 1.0 + c } else { 1.0 - c })
            .collect();
        let zeros = vec![0.0; 30];
        let res = paired_t_test(&d, &zeros).unwrap();
        assert_abs_diff_eq!(res.t, 2.045, epsilon = 1e-9);
        assert_abs_diff_eq!(res.p_value, 0.05, epsilon = 1e-3);
    }

    #[test]
    fn baselines() {
        assert_eq!(
            baseline_national(1000.0, "gender").unwrap(),
            vec![492.0, 508.0]
        );
        assert_eq!(
            baseline_national(1000.0, "race").unwrap(),
            vec![616.0, 124.0, 54.0, 176.0, 30.0]
        );
        assert_eq!(baseline_national(0.0, "race").unwrap(), vec![0.0; 5]);
        assert!(matches!(
            baseline_national(10.0, "age"),
            Err(Error::UnknownVariable(_))
        ));
        assert!(baseline_national(-1.0, "gender").is_err());
    }

    #[test]
    fn relative_error_examples() {
        assert_eq!(
            unit_relative_error(&[15.0, 5.0], &[10.0, 10.0]).unwrap(),
            0.5
        );
        assert_eq!(unit_relative_error(&[0.5], &[0.0]).unwrap(), 0.5);
        let truths = vec![vec![3.0, 4.0], vec![10.0, 0.0]];
        let rows = relative_error_report(&truths, &truths, &[5, 50], &[1, 10, 100], 0.95).unwrap();
        assert_eq!(
            rows[0],
            ErrorRow {
                threshold: 1,
                n_units: 2,
                value: Some(0.0)
            }
        );
        assert_eq!(
            rows[1],
            ErrorRow {
                threshold: 10,
                n_units: 1,
                value: Some(0.0)
            }
        );
        assert_eq!(
            rows[2],
            ErrorRow {
                threshold: 100,
                n_units: 0,
                value: None
            }
        );
        assert!(relative_error_report(&truths, &truths, &[5, 50], &[1], 1.0).is_err());
    }

    #[test]
    fn quantile_interpolates() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&xs, 0.5), Some(3.0));
        assert_eq!(quantile_sorted(&xs, 0.95), Some(4.8));
        assert_eq!(quantile_sorted(&[7.0], 0.3), Some(7.0));
        assert_eq!(quantile_sorted(&[], 0.3), None);
    }

    fn non_constant(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-100.0f64..100.0, len).prop_filter("non-constant", |v| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            v.iter().map(|x| (x - m).powi(2)).sum::<f64>() > 1e-3
        })
    }

    proptest! {
        #[test]
        fn pearson_affine_invariant(
            pair in (3usize..30).prop_flat_map(|n| (non_constant(n..n + 1), non_constant(n..n + 1))),
            a in 0.01f64..100.0,
            b in -100.0f64..100.0,
        ) {
            let (pred, truth) = pair;
            let (r, _) = pearson_r(&pred, &truth).unwrap();
            let moved: Vec<f64> = pred.iter().map(|v| a * v + b).collect();
            let (r2, _) = pearson_r(&moved, &truth).unwrap();
            prop_assert!((-1.0..=1.0).contains(&r));
            prop_assert!((r - r2).abs() < 1e-12);
        }

        #[test]
        fn r_squared_bounds(truth in non_constant(2..30)) {
            let m = truth.iter().sum::<f64>() / truth.len() as f64;
            prop_assert_eq!(r_squared(&truth, &truth).unwrap(), 1.0);
            prop_assert_eq!(r_squared(&vec![m; truth.len()], &truth).unwrap(), 0.0);
        }

        #[test]
        fn t_test_swap(
            pair in (2usize..30).prop_flat_map(|n| (
                proptest::collection::vec(0.0f64..10.0, n),
                proptest::collection::vec(0.0f64..10.0, n),
            )),
        ) {
            let (a, b) = pair;
            let ab = paired_t_test(&a, &b).unwrap();
            let ba = paired_t_test(&b, &a).unwrap();
            prop_assert_eq!(ab.t, -ba.t);
            prop_assert_eq!(ab.p_value, ba.p_value);
            prop_assert!(ab.p_value > 0.0 && ab.p_value <= 1.0);
        }

        #[test]
        fn baseline_sums_to_population(p in 0.0f64..1e9) {
            for var in ["gender", "race"] {
                let y = baseline_national(p, var).unwrap();
                prop_assert!((y.iter().sum::<f64>() - p).abs() <= 1e-9 * p);
            }
        }
    }
}
