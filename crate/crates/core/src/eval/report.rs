use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Read;

use super::stats::{
    baseline_national, paired_t_test, pearson_r, r_squared, relative_error_report, ErrorRow,
};
use crate::error::{Error, Result};
use crate::geomap::Resolution;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub metric: String,
    pub variable: String,
    pub category: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub comparison: String,
    pub config_a: String,
    pub config_b: String,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub metrics: Vec<MetricRow>,
    pub comparisons: Vec<ComparisonRow>,
    pub quantile: f64,
    pub errors: Vec<ErrorRow>,
}

impl EvalReport {
    /// Three CSV blocks separated by blank lines, optionally preceded by a
    /// `# config <fingerprint>` line.
    pub fn to_csv(&self, stamp: Option<&str>) -> String {
        let mut out = String::new();
        if let Some(fp) = stamp {
            let _ = writeln!(out, "# config {fp}");
        }
        out.push_str("metric,variable,category,value\n");
        for m in &self.metrics {
            let _ = writeln!(
                out,
                "{},{},{},{:?}",
                m.metric, m.variable, m.category, m.value
            );
        }
        out.push_str("\ncomparison,config_a,config_b,p_value\n");
        for c in &self.comparisons {
            let _ = writeln!(
                out,
                "{},{},{},{:?}",
                c.comparison, c.config_a, c.config_b, c.p_value
            );
        }
        out.push_str("\nthreshold,n_units,quantile,rel_error\n");
        for e in &self.errors {
            let value = e.value.map_or(String::new(), |v| format!("{v:?}"));
            let _ = writeln!(
                out,
                "{},{},{:?},{}",
                e.threshold, e.n_units, self.quantile, value
            );
        }
        out
    }

    pub fn metric(&self, metric: &str, category: &str) -> Option<f64> {
        self.metrics
            .iter()
            .find(|m| m.metric == metric && m.category == category)
            .map(|m| m.value)
    }
}

/// Plot data: quantile error against threshold, one series per resolution.
pub fn write_plot_data(series: &[(Resolution, &[ErrorRow])]) -> String {
    let mut out = String::from("resolution,threshold,quantile_error\n");
    for (res, rows) in series {
        for r in rows.iter() {
            let value = r.value.map_or(String::new(), |v| format!("{v:?}"));
            let _ = writeln!(out, "{},{},{}", res.name(), r.threshold, value);
        }
    }
    out
}

/// One exported prediction. `count` is clamped at zero; `raw` is the model
/// output and is what evaluation uses.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRow {
    pub geoid: String,
    pub variable: String,
    pub category: String,
    pub count: f64,
    pub raw: f64,
}

pub fn write_predictions(rows: &[PredictionRow], stamp: Option<&str>) -> String {
    let mut out = String::new();
    if let Some(fp) = stamp {
        let _ = writeln!(out, "# config {fp}");
    }
    out.push_str("geoid,variable,category,count,raw\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{:?},{:?}",
            r.geoid, r.variable, r.category, r.count, r.raw
        );
    }
    out
}

pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<PredictionRow>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        if rec.len() != 5 {
            return Err(Error::parse(
                line,
                "expected geoid,variable,category,count,raw",
            ));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::parse(line, format!("bad number {s:?}")))
        };
        rows.push(PredictionRow {
            geoid: rec[0].to_string(),
            variable: rec[1].to_string(),
            category: rec[2].to_string(),
            count: num(&rec[3])?,
            raw: num(&rec[4])?,
        });
    }
    Ok(rows)
}

/// Raw predictions of `variable` per geoid, in the order of `categories`.
pub fn predictions_by_unit(
    rows: &[PredictionRow],
    variable: &str,
    categories: &[String],
) -> Result<BTreeMap<String, Vec<f64>>> {
    let mut out: BTreeMap<String, Vec<Option<f64>>> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.variable == variable) {
        let j = categories
            .iter()
            .position(|c| *c == r.category)
            .ok_or_else(|| Error::InvalidTruth {
                geoid: r.geoid.clone(),
                reason: format!("unknown category {:?}", r.category),
            })?;
        out.entry(r.geoid.clone())
            .or_insert_with(|| vec![None; categories.len()])[j] = Some(r.raw);
    }
    out.into_iter()
        .map(|(g, v)| {
            let v: Option<Vec<f64>> = v.into_iter().collect();
            match v {
                Some(v) => Ok((g, v)),
                None => Err(Error::MissingTruth {
                    geoid: g,
                    what: "prediction".into(),
                }),
            }
        })
        .collect()
}

/// Everything evaluation needs for one test unit.
#[derive(Debug, Clone)]
pub struct UnitOutcome {
    pub geoid: String,
    pub pred: Vec<f64>,
    pub truth: Vec<f64>,
    pub users: u64,
    pub population: Option<f64>,
}

fn squared_errors(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter().zip(truth).map(|(p, t)| (p - t) * (p - t)).sum()
}

fn push_fit_metrics(
    metrics: &mut Vec<MetricRow>,
    prefix: &str,
    variable: &str,
    category: &str,
    pred: &[f64],
    truth: &[f64],
) {
    let (r, p) = match pearson_r(pred, truth) {
        Ok(v) => v,
        Err(e) => {
            log::warn!("{prefix}pearson_r for {variable}/{category}: {e}");
            (f64::NAN, f64::NAN)
        }
    };
    let r2 = r_squared(pred, truth).unwrap_or_else(|e| {
        log::warn!("{prefix}r_squared for {variable}/{category}: {e}");
        f64::NAN
    });
    for (metric, value) in [("pearson_r", r), ("pearson_p", p), ("r_squared", r2)] {
        metrics.push(MetricRow {
            metric: format!("{prefix}{metric}"),
            variable: variable.to_string(),
            category: category.to_string(),
            value,
        });
    }
}

/// Per-category fit metrics, the relative-error table, and, when every unit
/// has a population and the variable has national shares, the same metrics
/// for the national baseline plus a paired t-test of model against baseline.
pub fn evaluate(
    variable: &str,
    categories: &[String],
    config_name: &str,
    units: &[UnitOutcome],
    thresholds: &[u64],
    quantile: f64,
) -> Result<EvalReport> {
    let k = categories.len();
    if let Some(u) = units
        .iter()
        .find(|u| u.pred.len() != k || u.truth.len() != k)
    {
        return Err(Error::Dimension {
            expected: k,
            found: u.pred.len().min(u.truth.len()),
        });
    }
    let column = |f: &dyn Fn(&UnitOutcome) -> &[f64], j: usize| -> Vec<f64> {
        units.iter().map(|u| f(u)[j]).collect()
    };
    let mut metrics = Vec::new();
    for (j, cat) in categories.iter().enumerate() {
        let pred = column(&|u| &u.pred, j);
        let truth = column(&|u| &u.truth, j);
        push_fit_metrics(&mut metrics, "", variable, cat, &pred, &truth);
    }

    let mut comparisons = Vec::new();
    let populations: Option<Vec<f64>> = units.iter().map(|u| u.population).collect();
    if let Some(pops) = populations.filter(|_| baseline_national(0.0, variable).is_ok()) {
        let base: Vec<Vec<f64>> = pops
            .iter()
            .map(|&p| baseline_national(p, variable))
            .collect::<Result<_>>()?;
        if base.first().is_some_and(|b| b.len() == k) {
            for (j, cat) in categories.iter().enumerate() {
                let pred: Vec<f64> = base.iter().map(|b| b[j]).collect();
                let truth = column(&|u| &u.truth, j);
                push_fit_metrics(&mut metrics, "baseline_", variable, cat, &pred, &truth);
            }
            let model_err: Vec<f64> = units
                .iter()
                .map(|u| squared_errors(&u.pred, &u.truth))
                .collect();
            let base_err: Vec<f64> = units
                .iter()
                .zip(&base)
                .map(|(u, b)| squared_errors(b, &u.truth))
                .collect();
            match paired_t_test(&model_err, &base_err) {
                Ok(t) => comparisons.push(ComparisonRow {
                    comparison: format!("paired_t_{variable}"),
                    config_a: config_name.to_string(),
                    config_b: "national-baseline".into(),
                    p_value: t.p_value,
                }),
                Err(e) => log::warn!("paired t-test skipped: {e}"),
            }
        }
    }

    let preds: Vec<Vec<f64>> = units.iter().map(|u| u.pred.clone()).collect();
    let truths: Vec<Vec<f64>> = units.iter().map(|u| u.truth.clone()).collect();
    let users: Vec<u64> = units.iter().map(|u| u.users).collect();
    let errors = relative_error_report(&preds, &truths, &users, thresholds, quantile)?;
    Ok(EvalReport {
        metrics,
        comparisons,
        quantile,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cats() -> Vec<String> {
        vec!["male".into(), "female".into()]
    }

    fn outcome(i: u64, pred: [f64; 2], truth: [f64; 2]) -> UnitOutcome {
        UnitOutcome {
            geoid: format!("{i:05}"),
            pred: pred.to_vec(),
            truth: truth.to_vec(),
            users: i * 10,
            population: Some(truth.iter().sum()),
        }
    }

    #[test]
    fn perfect_predictions() {
        let units: Vec<UnitOutcome> = (1..=6)
            .map(|i| {
                let t = [i as f64 * 3.0, i as f64 * i as f64];
                outcome(i, t, t)
            })
            .collect();
        let rep = evaluate(
            "gender",
            &cats(),
            "raw-word+none",
            &units,
            &[1, 10, 1000],
            0.95,
        )
        .unwrap();
        assert_eq!(rep.metric("pearson_r", "male"), Some(1.0));
        assert_eq!(rep.metric("r_squared", "female"), Some(1.0));
        assert!(rep.metric("baseline_pearson_r", "male").is_some());
        assert_eq!(rep.comparisons.len(), 1);
        assert_eq!(rep.errors[0].value, Some(0.0));
        assert_eq!(rep.errors[2].value, None);
        let csv = rep.to_csv(Some("abc"));
        assert!(csv.starts_with("# config abc\nmetric,variable,category,value\n"));
        assert!(csv.contains("\ncomparison,config_a,config_b,p_value\npaired_t_gender,raw-word+none,national-baseline,"));
        assert!(csv.ends_with("1000,0,0.95,\n"));
    }

    #[test]
    fn no_baseline_for_other_variables() {
        let units: Vec<UnitOutcome> = (1..=4)
            .map(|i| outcome(i, [i as f64, 1.0], [i as f64 + 1.0, 2.0 * i as f64]))
            .collect();
        let rep = evaluate("income", &cats(), "c", &units, &[1], 0.5).unwrap();
        assert!(rep.comparisons.is_empty());
        assert!(rep.metric("baseline_pearson_r", "male").is_none());
    }

    #[test]
    fn predictions_round_trip() {
        let rows = vec![
            PredictionRow {
                geoid: "01001".into(),
                variable: "gender".into(),
                category: "female".into(),
                count: 0.0,
                raw: -0.25,
            },
            PredictionRow {
                geoid: "01001".into(),
                variable: "gender".into(),
                category: "male".into(),
                count: 3.5,
                raw: 3.5,
            },
        ];
        let text = write_predictions(&rows, Some("fp"));
        let back = read_predictions(text.as_bytes()).unwrap();
        assert_eq!(back, rows);
        let by_unit = predictions_by_unit(&back, "gender", &cats()).unwrap();
        assert_eq!(by_unit["01001"], vec![3.5, -0.25]);
        assert!(predictions_by_unit(&back[..1], "gender", &cats()).is_err());
    }

    #[test]
    fn plot_data() {
        let rows = [ErrorRow {
            threshold: 10,
            n_units: 3,
            value: Some(0.5),
        }];
        assert_eq!(
            write_plot_data(&[(Resolution::Tract, &rows)]),
            "resolution,threshold,quantile_error\ntract,10,0.5\n"
        );
    }
}
