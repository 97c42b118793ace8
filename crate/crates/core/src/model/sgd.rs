//! Plain SGD for l2-regularized least squares.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TrainConfig;
use crate::error::{Error, Result};
use crate::features::SparseVector;

/// Inverse scaling schedule `eta0 / tau^rho`, with `tau` counted from 1.
pub fn learning_rate(eta0: f64, tau: u64, rho: f64) -> Result<f64> {
    if tau == 0 {
        return Err(Error::Config(
            "learning-rate step counter starts at 1".into(),
        ));
    }
    if rho == 0.0 {
        return Ok(eta0);
    }
    Ok(eta0 / (tau as f64).powf(rho))
}

/// Dense weights of one linear model. `intercept` stays 0 unless enabled.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Weights {
    pub coef: Vec<f64>,
    pub intercept: f64,
}

impl Weights {
    pub fn zeros(dim: usize) -> Self {
        Weights {
            coef: vec![0.0; dim],
            intercept: 0.0,
        }
    }

    pub fn score(&self, x: &SparseVector) -> f64 {
        x.dot(&self.coef) + self.intercept
    }

    pub fn norm(&self) -> f64 {
        self.coef.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

/// Fit one weight vector to `(xs[i], ys[i])`.
///
/// Each step applies `w <- w - eta * ((w.x - y) x + 2 lambda w)`. The example
/// order is reshuffled from a generator seeded with `cfg.seed` at the start
/// of every epoch, and `tau` runs across epochs.
pub fn fit_sgd(xs: &[SparseVector], ys: &[f64], cfg: &TrainConfig) -> Result<Weights> {
    cfg.validate()?;
    let Some(first) = xs.first() else {
        return Err(Error::EmptyTrainingSet);
    };
    if xs.len() != ys.len() {
        return Err(Error::Dimension {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    let dim = first.dim();
    if let Some(bad) = xs.iter().find(|x| x.dim() != dim) {
        return Err(Error::Dimension {
            expected: dim,
            found: bad.dim(),
        });
    }

    let mut w = Weights::zeros(dim);
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut tau: u64 = 0;
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            tau += 1;
            let eta = learning_rate(cfg.eta0, tau, cfg.rho)?;
            let x = &xs[i];
            let resid = w.score(x) - ys[i];
            if !resid.is_finite() {
                return Err(Error::Diverged { epoch, step: tau });
            }
            if cfg.lambda != 0.0 {
                let decay = 1.0 - 2.0 * eta * cfg.lambda;
                w.coef.iter_mut().for_each(|c| *c *= decay);
            }
            let g = eta * resid;
            for (j, v) in x.iter() {
                let c = &mut w.coef[j];
                *c -= g * v;
                if !c.is_finite() {
                    return Err(Error::Diverged { epoch, step: tau });
                }
            }
            if cfg.intercept {
                w.intercept -= g;
            }
        }
    }
    Ok(w)
}
