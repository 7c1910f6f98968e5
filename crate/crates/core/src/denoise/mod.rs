//! One-bit total-variation denoising.
//!
//! Every variant reduces to the weighted generalized-lasso problem
//!
//! ```text
//! minimize  sum_i a_i (t_i - p_i)^2  +  lambda * sum_e b_e |(D p)_e|
//! ```
//!
//! with `D` the signed incidence matrix of the graph. The full-observation
//! denoiser uses `a_i = 1/n`, the masked one `a_i = m_i/n`, and the county
//! smoother population weights. Solutions are clamped to `[0, 1]`, which never
//! increases the objective when the targets lie in `[0, 1]`.

mod admm;
pub mod bounds;
mod cv;
mod lambda;
pub mod oracle;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{Graph, GraphError};

pub use cv::{cross_validate_lambda, default_lambda_grid, CvConfig, CvOutcome, CvRow};
pub use lambda::{theoretical_lambda, theoretical_lambda_missing};
pub use oracle::oracle_denoise;

#[derive(Debug, Error)]
pub enum DenoiseError {
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("{0} must be finite and nonnegative")]
    NegativeWeight(&'static str),
    #[error("no node carries positive fidelity weight (all-zero mask?)")]
    NoObservedNodes,
    #[error("mask entries must be 0 or 1, found {0}")]
    BadMask(f64),
    #[error("lambda must be finite and nonnegative, got {0}")]
    BadLambda(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("oracle limited to n <= 8 and m <= 12 (got n = {n}, m = {m})")]
    OracleTooLarge { n: usize, m: usize },
    #[error("oracle requires strictly positive node weights")]
    OracleZeroWeight,
    #[error("cross-validation fold {fold} has no {which} nodes")]
    EmptyFold { fold: usize, which: &'static str },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T, E = DenoiseError> = std::result::Result<T, E>;

/// Weighted denoising problem over a borrowed graph.
#[derive(Debug, Clone, Serialize)]
pub struct DenoiseProblem<'g> {
    #[serde(skip)]
    pub graph: &'g Graph,
    pub targets: Vec<f64>,
    pub node_weights: Vec<f64>,
    pub edge_weights: Vec<f64>,
    pub lambda: f64,
}

impl<'g> DenoiseProblem<'g> {
    /// Full observation: node weights `1/n`, unit edge weights.
    pub fn uniform(graph: &'g Graph, y: &[f64], lambda: f64) -> Self {
        let n = graph.n();
        DenoiseProblem {
            graph,
            targets: y.to_vec(),
            node_weights: vec![1.0 / n as f64; n],
            edge_weights: vec![1.0; graph.m()],
            lambda,
        }
    }

    /// Partial observation: node weights `m_i / n`.
    pub fn masked(graph: &'g Graph, y: &[f64], mask: &[f64], lambda: f64) -> Self {
        let n = graph.n();
        DenoiseProblem {
            graph,
            targets: y.to_vec(),
            node_weights: mask.iter().map(|&m| m / n as f64).collect(),
            edge_weights: vec![1.0; graph.m()],
            lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.graph.n(), self.graph.m());
        check_len("targets", self.targets.len(), n)?;
        check_len("node weights", self.node_weights.len(), n)?;
        check_len("edge weights", self.edge_weights.len(), m)?;
        if self.targets.iter().any(|t| !t.is_finite()) {
            return Err(DenoiseError::InvalidArgument("targets must be finite".into()));
        }
        if self.node_weights.iter().any(|&a| !(a.is_finite() && a >= 0.0)) {
            return Err(DenoiseError::NegativeWeight("node weights"));
        }
        if self.edge_weights.iter().any(|&b| !(b.is_finite() && b >= 0.0)) {
            return Err(DenoiseError::NegativeWeight("edge weights"));
        }
        if !self.node_weights.iter().any(|&a| a > 0.0) {
            return Err(DenoiseError::NoObservedNodes);
        }
        if !(self.lambda.is_finite() && self.lambda >= 0.0) {
            return Err(DenoiseError::BadLambda(self.lambda));
        }
        Ok(())
    }

    /// Owned, serializable copy including the graph.
    pub fn to_record(&self) -> ProblemRecord {
        ProblemRecord {
            graph: self.graph.clone(),
            targets: self.targets.clone(),
            node_weights: self.node_weights.clone(),
            edge_weights: self.edge_weights.clone(),
            lambda: self.lambda,
        }
    }
}

/// Self-contained form of a [`DenoiseProblem`] for JSON storage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemRecord {
    pub graph: Graph,
    pub targets: Vec<f64>,
    pub node_weights: Vec<f64>,
    pub edge_weights: Vec<f64>,
    pub lambda: f64,
}

impl ProblemRecord {
    pub fn problem(&self) -> DenoiseProblem<'_> {
        DenoiseProblem {
            graph: &self.graph,
            targets: self.targets.clone(),
            node_weights: self.node_weights.clone(),
            edge_weights: self.edge_weights.clone(),
            lambda: self.lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseResult {
    pub p_hat: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Primal residual `||Dp - z||` normalized by `sqrt(m) + max(||Dp||, ||z||)`.
    pub primal_residual: f64,
    /// Dual residual normalized by `sqrt(n) + ||D^T y||`.
    pub dual_residual: f64,
    pub converged: bool,
    pub lambda_used: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub max_iter: usize,
    /// Initial ADMM penalty (in units of the largest node weight).
    pub admm_penalty: f64,
    pub adaptive_penalty: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_primal: 1e-8,
            tol_dual: 1e-8,
            max_iter: 50_000,
            admm_penalty: 1.0,
            adaptive_penalty: true,
        }
    }
}

impl SolverConfig {
    pub fn with_tol(tol: f64) -> Self {
        SolverConfig {
            tol_primal: tol,
            tol_dual: tol,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol_primal > 0.0 && self.tol_dual > 0.0) {
            return Err(DenoiseError::InvalidConfig("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(DenoiseError::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.admm_penalty.is_finite() && self.admm_penalty > 0.0) {
            return Err(DenoiseError::InvalidConfig("admm_penalty must be positive".into()));
        }
        Ok(())
    }
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(DenoiseError::DimensionMismatch {
            what,
            got,
            expected,
        })
    }
}

/// Full-observation denoiser: `(1/n) sum (y_i - p_i)^2 + lambda ||Dp||_1`.
pub fn tv_denoise(y: &[f64], g: &Graph, lambda: f64, cfg: &SolverConfig) -> Result<DenoiseResult> {
    check_len("y", y.len(), g.n())?;
    tv_denoise_weighted(&DenoiseProblem::uniform(g, y, lambda), cfg)
}

/// Masked denoiser: `(1/n) sum m_i (y_i - p_i)^2 + lambda ||Dp||_1`.
pub fn tv_denoise_masked(
    y: &[f64],
    mask: &[f64],
    g: &Graph,
    lambda: f64,
    cfg: &SolverConfig,
) -> Result<DenoiseResult> {
    check_len("y", y.len(), g.n())?;
    check_len("mask", mask.len(), g.n())?;
    validate_mask(mask)?;
    tv_denoise_weighted(&DenoiseProblem::masked(g, y, mask, lambda), cfg)
}

pub(crate) fn validate_mask(mask: &[f64]) -> Result<()> {
    if let Some(&bad) = mask.iter().find(|&&m| m != 0.0 && m != 1.0) {
        return Err(DenoiseError::BadMask(bad));
    }
    if mask.iter().all(|&m| m == 0.0) {
        return Err(DenoiseError::NoObservedNodes);
    }
    Ok(())
}

/// General weighted denoiser.
pub fn tv_denoise_weighted(problem: &DenoiseProblem<'_>, cfg: &SolverConfig) -> Result<DenoiseResult> {
    problem.validate()?;
    cfg.validate()?;
    admm::solve(problem, cfg, None).map(|(r, _)| r)
}

/// Entrywise clamp to `[0, 1]`.
pub fn clamp_unit(p: &[f64]) -> Vec<f64> {
    p.iter().map(|&x| x.clamp(0.0, 1.0)).collect()
}

/// `sum_i a_i (t_i - p_i)^2 + lambda sum_e b_e |(Dp)_e|`.
pub fn objective_value(p: &[f64], problem: &DenoiseProblem<'_>) -> f64 {
    let fit: f64 = p
        .iter()
        .zip(&problem.targets)
        .zip(&problem.node_weights)
        .map(|((p, t), a)| a * (t - p) * (t - p))
        .sum();
    let tv: f64 = problem
        .graph
        .edges()
        .iter()
        .zip(&problem.edge_weights)
        .map(|(&(i, j), b)| b * (p[i] - p[j]).abs())
        .sum();
    fit + problem.lambda * tv
}

/// Zeroes every entry `<= alpha`. With `rescale`, surviving entries are mapped
/// through `(x - alpha) / (1 - alpha)`.
pub fn correct_false_positives(rho_hat: &[f64], alpha: f64, rescale: bool) -> Result<Vec<f64>> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(DenoiseError::InvalidArgument(format!(
            "false-positive rate must lie in [0, 1), got {alpha}"
        )));
    }
    Ok(rho_hat
        .iter()
        .map(|&x| {
            if x <= alpha {
                0.0
            } else if rescale {
                (x - alpha) / (1.0 - alpha)
            } else {
                x
            }
        })
        .collect())
}
