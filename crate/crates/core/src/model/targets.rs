use super::Variant;
use crate::error::{Error, Result};
use crate::geomap::GeoUnit;

/// Denominator used when none is configured: female for gender, white for
/// race, otherwise the first category.
pub fn default_denominator(variable: &str, categories: &[String]) -> usize {
    let preferred = match variable {
        "gender" => "female",
        "race" => "white",
        _ => return 0,
    };
    categories.iter().position(|c| c == preferred).unwrap_or(0)
}

/// Regression targets, one list per modeled category, each aligned with
/// `units`.
///
/// Population-unknown targets are the counts themselves. Population-known
/// targets are `ln((y_j + alpha) / (y_q + alpha))` for every `j != q`.
pub fn make_targets(
    units: &[GeoUnit],
    variant: Variant,
    variable: &str,
    q: usize,
    alpha: f64,
) -> Result<Vec<Vec<f64>>> {
    let counts: Vec<&Vec<u64>> = units
        .iter()
        .map(|u| {
            u.demographics
                .get(variable)
                .ok_or_else(|| Error::MissingTruth {
                    geoid: u.geoid.clone(),
                    what: variable.to_string(),
                })
        })
        .collect::<Result<_>>()?;
    let Some(k) = counts.first().map(|c| c.len()) else {
        return Ok(vec![]);
    };
    if let Some((u, c)) = units.iter().zip(&counts).find(|(_, c)| c.len() != k) {
        return Err(Error::InvalidTruth {
            geoid: u.geoid.clone(),
            reason: format!("{} categories, expected {k}", c.len()),
        });
    }
    match variant {
        Variant::Unknown => Ok((0..k)
            .map(|j| counts.iter().map(|c| c[j] as f64).collect())
            .collect()),
        Variant::Known => {
            if q >= k {
                return Err(Error::Config(format!(
                    "denominator {q} out of range for {k} categories"
                )));
            }
            for u in units {
                if u.population.is_none() {
                    return Err(Error::MissingTruth {
                        geoid: u.geoid.clone(),
                        what: "population".into(),
                    });
                }
            }
            if alpha == 0.0 {
                if let Some((u, _)) = units.iter().zip(&counts).find(|(_, c)| c.contains(&0)) {
                    return Err(Error::DegenerateTarget {
                        geoid: u.geoid.clone(),
                        reason: "zero count with alpha = 0".into(),
                    });
                }
            }
            Ok((0..k)
                .filter(|&j| j != q)
                .map(|j| {
                    counts
                        .iter()
                        .map(|c| ((c[j] as f64 + alpha) / (c[q] as f64 + alpha)).ln())
                        .collect()
                })
                .collect())
        }
    }
}
