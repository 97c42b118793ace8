use rayon::prelude::*;

use super::sgd::{fit_sgd, Weights};
use super::TrainConfig;
use crate::error::{Error, Result};
use crate::eval::r_squared;
use crate::features::SparseVector;

pub const LAMBDA_GRID: [f64; 6] = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1];
pub const ETA0_GRID: [f64; 8] = [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0];

/// Validation score of one `(lambda, eta0)` combination. Diverged fits score
/// negative infinity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridPoint {
    pub lambda: f64,
    pub eta0: f64,
    pub score: f64,
}

#[derive(Debug, Clone)]
pub struct GridOutcome {
    /// Winning configuration.
    pub config: TrainConfig,
    /// Winner refit on training plus validation examples, one per target list.
    pub weights: Vec<Weights>,
    /// Every evaluated combination, lambda-major in grid order.
    pub evaluations: Vec<GridPoint>,
}

fn fit_all(xs: &[SparseVector], ys: &[Vec<f64>], cfg: &TrainConfig) -> Result<Vec<Weights>> {
    ys.iter().map(|y| fit_sgd(xs, y, cfg)).collect()
}

fn validation_score(weights: &[Weights], val_x: &[SparseVector], val_y: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    for (w, truth) in weights.iter().zip(val_y) {
        let pred: Vec<f64> = val_x.iter().map(|x| w.score(x)).collect();
        match r_squared(&pred, truth) {
            Ok(r2) if r2.is_finite() => total += r2,
            _ => return f64::NEG_INFINITY,
        }
    }
    total / weights.len() as f64
}

/// Exhaustive search over `lambdas x etas`, scored by validation R^2 averaged
/// over the target lists. The first best combination in grid order wins and
/// is refit on the union of training and validation examples.
pub fn grid_search(
    train_x: &[SparseVector],
    train_y: &[Vec<f64>],
    val_x: &[SparseVector],
    val_y: &[Vec<f64>],
    lambdas: &[f64],
    etas: &[f64],
    template: &TrainConfig,
) -> Result<GridOutcome> {
    if lambdas.is_empty() || etas.is_empty() {
        return Err(Error::Config("grid search needs non-empty grids".into()));
    }
    if train_y.is_empty() || train_y.len() != val_y.len() {
        return Err(Error::Config(
            "train and validation target lists differ".into(),
        ));
    }
    let combos: Vec<(f64, f64)> = lambdas
        .iter()
        .flat_map(|&l| etas.iter().map(move |&e| (l, e)))
        .collect();
    let evaluations: Vec<GridPoint> = combos
        .par_iter()
        .map(|&(lambda, eta0)| {
            let cfg = TrainConfig {
                lambda,
                eta0,
                ..template.clone()
            };
            let score = match fit_all(train_x, train_y, &cfg) {
                Ok(ws) => validation_score(&ws, val_x, val_y),
                Err(Error::Diverged { .. }) => f64::NEG_INFINITY,
                Err(e) => return Err(e),
            };
            log::debug!("lambda={lambda} eta0={eta0} score={score}");
            Ok(GridPoint {
                lambda,
                eta0,
                score,
            })
        })
        .collect::<Result<_>>()?;

    let best = evaluations
        .iter()
        .filter(|p| p.score > f64::NEG_INFINITY)
        .fold(None::<&GridPoint>, |best, p| match best {
            Some(b) if b.score >= p.score => Some(b),
            _ => Some(p),
        })
        .ok_or(Error::AllDiverged)?;
    let config = TrainConfig {
        lambda: best.lambda,
        eta0: best.eta0,
        ..template.clone()
    };

    let all_x: Vec<SparseVector> = train_x.iter().chain(val_x).cloned().collect();
    let all_y: Vec<Vec<f64>> = train_y
        .iter()
        .zip(val_y)
        .map(|(t, v)| t.iter().chain(v).copied().collect())
        .collect();
    let weights = fit_all(&all_x, &all_y, &config)?;
    Ok(GridOutcome {
        config,
        weights,
        evaluations,
    })
}
