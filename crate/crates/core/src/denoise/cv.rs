//! Node-holdout cross-validation for the penalty level.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::admm::{self, WarmStart};
use super::{check_len, validate_mask, DenoiseError, DenoiseProblem, Result, SolverConfig};
use crate::graph::Graph;
use crate::rng;

/// Relative slack under which two mean losses count as tied.
const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvConfig {
    /// Strictly increasing, nonnegative.
    pub lambda_grid: Vec<f64>,
    pub holdout_fraction: f64,
    pub folds: usize,
    pub seed: u64,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            lambda_grid: default_lambda_grid(),
            holdout_fraction: 0.2,
            folds: 5,
            seed: 0,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(DenoiseError::InvalidConfig(msg.into()));
        if self.lambda_grid.is_empty() {
            return bad("lambda grid is empty");
        }
        if self.lambda_grid.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
            return bad("lambda grid entries must be finite and nonnegative");
        }
        if self.lambda_grid.windows(2).any(|w| w[1] <= w[0]) {
            return bad("lambda grid must be strictly increasing");
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return bad("holdout fraction must lie in (0, 1)");
        }
        if self.folds == 0 {
            return bad("folds must be at least 1");
        }
        Ok(())
    }
}

/// 20 log-spaced points from 1e-4 to 1.
pub fn default_lambda_grid() -> Vec<f64> {
    let k = 20;
    (0..k)
        .map(|i| 10f64.powf(-4.0 + 4.0 * i as f64 / (k - 1) as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub lambda: f64,
    pub mean_loss: f64,
    pub fold_losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub lambda_star: f64,
    pub table: Vec<CvRow>,
}

/// Picks the grid value with the smallest mean held-out squared error; ties go
/// to the larger value.
///
/// Each fold hides `max(1, round(fraction * |O|))` observed nodes, taken as
/// consecutive blocks of one seeded shuffle of the observed set `O`, trains the
/// masked denoiser on the remaining observed nodes and scores the clamped
/// prediction on the hidden ones.
pub fn cross_validate_lambda(
    y: &[f64],
    mask: Option<&[f64]>,
    g: &Graph,
    cv: &CvConfig,
    solver: &SolverConfig,
) -> Result<CvOutcome> {
    cv.validate()?;
    solver.validate()?;
    let n = g.n();
    check_len("y", y.len(), n)?;
    let observed: Vec<usize> = match mask {
        Some(m) => {
            check_len("mask", m.len(), n)?;
            validate_mask(m)?;
            (0..n).filter(|&i| m[i] == 1.0).collect()
        }
        None => (0..n).collect(),
    };

    let mut order = observed.clone();
    order.shuffle(&mut rng::seeded(cv.seed));
    let count = order.len();
    let hide = ((cv.holdout_fraction * count as f64).round() as usize).max(1);

    let mut losses = vec![vec![0.0; cv.folds]; cv.lambda_grid.len()];
    for fold in 0..cv.folds {
        let hidden: Vec<usize> = if hide >= count {
            Vec::new()
        } else {
            (0..hide).map(|k| order[(fold * hide + k) % count]).collect()
        };
        if hidden.is_empty() {
            return Err(DenoiseError::EmptyFold {
                fold,
                which: if count == 0 { "held-out" } else { "training" },
            });
        }
        let mut train = vec![0.0; n];
        for &i in &observed {
            train[i] = 1.0;
        }
        for &i in &hidden {
            train[i] = 0.0;
        }

        let mut warm: Option<WarmStart> = None;
        for (k, &lambda) in cv.lambda_grid.iter().enumerate() {
            let problem = DenoiseProblem::masked(g, y, &train, lambda);
            let (res, state) = admm::solve(&problem, solver, warm.as_ref())?;
            warm = Some(state);
            let sq: f64 = hidden.iter().map(|&i| (y[i] - res.p_hat[i]).powi(2)).sum();
            losses[k][fold] = sq / hidden.len() as f64;
        }
    }

    let table: Vec<CvRow> = cv
        .lambda_grid
        .iter()
        .zip(losses)
        .map(|(&lambda, fold_losses)| CvRow {
            lambda,
            mean_loss: fold_losses.iter().sum::<f64>() / fold_losses.len() as f64,
            fold_losses,
        })
        .collect();
    let best = table.iter().map(|r| r.mean_loss).fold(f64::INFINITY, f64::min);
    let slack = TIE_TOL * best.max(1.0);
    let lambda_star = table
        .iter()
        .rev()
        .find(|r| r.mean_loss <= best + slack)
        .map(|r| r.lambda)
        .expect("grid is non-empty");
    Ok(CvOutcome { lambda_star, table })
}
