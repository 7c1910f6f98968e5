//! Recovery of scalar infection and healing rates from a window of states.
//!
//! Each transition `p^t -> p^{t+1}` of the SIS recursion is linear in
//! `(beta, gamma)`:
//!
//! ```text
//! p^{t+1}_i - p^t_i = beta (1 - p^t_i) (Omega p^t)_i - gamma p^t_i
//! ```
//!
//! Stacking every node and transition gives an overdetermined two-column
//! system solved by a truncated pseudoinverse.

mod io;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sprs::CsMat;
use thiserror::Error;

use crate::denoise::{
    cross_validate_lambda, tv_denoise_masked, CvConfig, DenoiseError, SolverConfig,
};
use crate::epidemic::ObservationSet;
use crate::graph::{spmv, Graph};

pub use io::{write_estimates_csv, EstimateRow, Method};

/// Singular values below this fraction of the largest are treated as zero.
pub const PINV_CUTOFF: f64 = 1e-10;

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("need at least two states, got {0}")]
    TooFewStates(usize),
    #[error("state {index} has length {got}, expected {expected}")]
    DimensionMismatch {
        index: usize,
        got: usize,
        expected: usize,
    },
    #[error("the linear system has no rows")]
    EmptySystem,
    #[error("reproductive number needs a positive healing rate, got {0}")]
    NonPositiveGamma(f64),
    #[error(transparent)]
    Denoise(#[from] DenoiseError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = EstimationError> = std::result::Result<T, E>;

/// Stacked design matrix (columns: infection, healing) and state differences.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiSystem {
    pub phi: DMatrix<f64>,
    pub delta_p: DVector<f64>,
    /// Index `t` of every transition `t -> t+1` in row-block order.
    pub times_used: Vec<usize>,
}

/// Builds the system from consecutive states `p^k, ..., p^K`.
pub fn build_phi(trajectory: &[Vec<f64>], omega: &CsMat<f64>) -> Result<PhiSystem> {
    if trajectory.len() < 2 {
        return Err(EstimationError::TooFewStates(trajectory.len()));
    }
    let n = omega.rows();
    for (index, p) in trajectory.iter().enumerate() {
        if p.len() != n {
            return Err(EstimationError::DimensionMismatch { index, got: p.len(), expected: n });
        }
    }
    let omega = if omega.is_csr() { omega.clone() } else { omega.to_csr() };
    let transitions = trajectory.len() - 1;
    let rows = n * transitions;
    let mut phi = DMatrix::zeros(rows, 2);
    let mut delta_p = DVector::zeros(rows);
    for t in 0..transitions {
        let (p, next) = (&trajectory[t], &trajectory[t + 1]);
        let contact = spmv(&omega, p);
        for i in 0..n {
            let row = t * n + i;
            phi[(row, 0)] = (1.0 - p[i]) * contact[i];
            phi[(row, 1)] = -p[i];
            delta_p[row] = next[i] - p[i];
        }
    }
    Ok(PhiSystem { phi, delta_p, times_used: (0..transitions).collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankFlag {
    Full,
    Degenerate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub beta_hat: f64,
    pub gamma_hat: f64,
    /// Present only when `gamma_hat > 0` and the system has full rank.
    pub r0_hat: Option<f64>,
    pub residual_norm: f64,
    pub rank_flag: RankFlag,
}

/// Least-squares `(beta, gamma)` via the pseudoinverse of `phi`.
pub fn estimate_params(system: &PhiSystem) -> Result<ParamEstimate> {
    if system.phi.nrows() == 0 {
        return Err(EstimationError::EmptySystem);
    }
    let svd = system.phi.clone().svd(true, true);
    let sigma_max = svd.singular_values.max();
    let cutoff = PINV_CUTOFF * sigma_max;
    let rank = svd.singular_values.iter().filter(|&&s| s > cutoff && s > 0.0).count();
    let theta = if rank == 0 {
        DVector::zeros(2)
    } else {
        svd.solve(&system.delta_p, cutoff)
            .expect("both factors were computed")
    };
    let residual_norm = (&system.phi * &theta - &system.delta_p).norm();
    let rank_flag = if rank < 2 { RankFlag::Degenerate } else { RankFlag::Full };
    let (beta_hat, gamma_hat) = (theta[0], theta[1]);
    let r0_hat = match rank_flag {
        RankFlag::Full if gamma_hat > 0.0 => Some(beta_hat / gamma_hat),
        _ => None,
    };
    Ok(ParamEstimate { beta_hat, gamma_hat, r0_hat, residual_norm, rank_flag })
}

/// `beta / gamma`.
pub fn reproductive_number(beta_hat: f64, gamma_hat: f64) -> Result<f64> {
    if gamma_hat > 0.0 {
        Ok(beta_hat / gamma_hat)
    } else {
        Err(EstimationError::NonPositiveGamma(gamma_hat))
    }
}

/// How the penalty is chosen for each snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "snake_case")]
pub enum LambdaPolicy {
    Fixed { lambda: f64 },
    /// Cross-validate every snapshot separately.
    CrossValidateEach { cv: CvConfig },
    /// Cross-validate the last snapshot and reuse its value for the window.
    CrossValidateLast { cv: CvConfig },
}

/// Estimates from denoised snapshots next to the raw-observation baseline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationEstimate {
    pub tv: ParamEstimate,
    pub naive: ParamEstimate,
    /// Penalty used per snapshot.
    pub lambdas: Vec<f64>,
}

/// Denoises every snapshot (masked when the mask has zeros) and estimates
/// from the denoised window; the naive estimate plugs in the raw bits.
pub fn estimate_params_from_observations(
    observations: &[ObservationSet],
    g: &Graph,
    omega: &CsMat<f64>,
    policy: &LambdaPolicy,
    solver: &SolverConfig,
) -> Result<ObservationEstimate> {
    if observations.len() < 2 {
        return Err(EstimationError::TooFewStates(observations.len()));
    }
    let cv_lambda = |obs: &ObservationSet, cv: &CvConfig| -> Result<f64> {
        let mask = mask_of(obs);
        Ok(cross_validate_lambda(&obs.y, mask, g, cv, solver)?.lambda_star)
    };
    let shared = match policy {
        LambdaPolicy::Fixed { lambda } => Some(*lambda),
        LambdaPolicy::CrossValidateLast { cv } => {
            Some(cv_lambda(observations.last().expect("checked length"), cv)?)
        }
        LambdaPolicy::CrossValidateEach { .. } => None,
    };

    let mut denoised = Vec::with_capacity(observations.len());
    let mut lambdas = Vec::with_capacity(observations.len());
    for obs in observations {
        let lambda = match (shared, policy) {
            (Some(l), _) => l,
            (None, LambdaPolicy::CrossValidateEach { cv }) => cv_lambda(obs, cv)?,
            (None, _) => unreachable!("only per-snapshot CV leaves lambda unset"),
        };
        let r = tv_denoise_masked(&obs.y, &obs.mask, g, lambda, solver)?;
        denoised.push(r.p_hat);
        lambdas.push(lambda);
    }
    let raw: Vec<Vec<f64>> = observations.iter().map(|o| o.y.clone()).collect();
    Ok(ObservationEstimate {
        tv: estimate_params(&build_phi(&denoised, omega)?)?,
        naive: estimate_params(&build_phi(&raw, omega)?)?,
        lambdas,
    })
}

fn mask_of(obs: &ObservationSet) -> Option<&[f64]> {
    if obs.mask.iter().all(|&m| m == 1.0) {
        None
    } else {
        Some(&obs.mask)
    }
}
