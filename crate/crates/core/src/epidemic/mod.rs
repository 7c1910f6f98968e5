//! Discrete-time networked SIS and SIR dynamics.
//!
//! One SIS step is
//!
//! ```text
//! p_i' = p_i + (1 - p_i) beta_i sum_j omega_ij p_j - gamma_i p_i
//! ```
//!
//! evaluated as `p_i (1 - gamma_i) + (1 - p_i) x_i` with `x_i = beta_i (Omega p)_i`.
//! Under valid parameters `x_i < 1`, so both terms are nonnegative and the sum
//! cannot exceed one even after rounding.

mod io;
mod observe;

use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};
use thiserror::Error;

use crate::denoise::bounds::{l1_risk_bound, RiskInputs};
use crate::denoise::DenoiseError;
use crate::graph::{spmv, Graph};

pub use io::{read_trajectory_csv, write_observations_csv, write_trajectory_csv};
pub use observe::{patient_zero_state, sample_mask, sample_observations, ObservationSet, PatientZero};

#[derive(Debug, Error)]
pub enum EpidemicError {
    #[error("{what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model is not well defined: {0}")]
    NotWellDefined(ValidationReport),
    #[error("state entry {index} = {value} outside the allowed range")]
    StateOutOfRange { index: usize, value: f64 },
    #[error("node index {index} out of range for n = {n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error(transparent)]
    Bound(#[from] DenoiseError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EpidemicError> = std::result::Result<T, E>;

/// Per-node rates and the symmetric contact matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicParams {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    /// CSR, symmetric, nonnegative, zero diagonal.
    pub omega: CsMat<f64>,
}

impl EpidemicParams {
    /// Contact matrix from the graph's edge weights (1 when unweighted) with
    /// scalar rates broadcast to every node. Checks shapes only.
    pub fn from_graph(g: &Graph, beta: f64, gamma: f64) -> Result<Self> {
        Self::new(vec![beta; g.n()], vec![gamma; g.n()], omega_matrix(g))
    }

    pub fn new(beta: Vec<f64>, gamma: Vec<f64>, omega: CsMat<f64>) -> Result<Self> {
        let n = omega.rows();
        if omega.cols() != n {
            return Err(EpidemicError::InvalidParameter(format!(
                "omega must be square, got {}x{}",
                n,
                omega.cols()
            )));
        }
        check_len("beta", beta.len(), n)?;
        check_len("gamma", gamma.len(), n)?;
        let omega = if omega.is_csr() { omega } else { omega.to_csr() };
        for (v, (i, j)) in omega.iter() {
            if !(v.is_finite() && *v >= 0.0) {
                return Err(EpidemicError::InvalidParameter(format!(
                    "omega[{i}][{j}] = {v} is negative or not finite"
                )));
            }
            if i == j && *v != 0.0 {
                return Err(EpidemicError::InvalidParameter(format!("omega[{i}][{i}] must be 0")));
            }
            if omega.get(j, i).copied().unwrap_or(0.0) != *v {
                return Err(EpidemicError::InvalidParameter(format!(
                    "omega is not symmetric at ({i}, {j})"
                )));
            }
        }
        Ok(EpidemicParams { beta, gamma, omega })
    }

    pub fn n(&self) -> usize {
        self.beta.len()
    }

    /// `sum_j omega_ij` for every node.
    pub fn row_sums(&self) -> Vec<f64> {
        self.omega.outer_iterator().map(|r| r.data().iter().sum()).collect()
    }

    /// Fails with [`EpidemicError::NotWellDefined`] unless [`validate_params`] is clean.
    pub fn checked(self) -> Result<Self> {
        let report = validate_params(&self);
        if report.is_ok() {
            Ok(self)
        } else {
            Err(EpidemicError::NotWellDefined(report))
        }
    }
}

/// Symmetric CSR contact matrix with `omega_ij = omega_ji = w_e` per edge.
pub fn omega_matrix(g: &Graph) -> CsMat<f64> {
    let n = g.n();
    let mut tri = TriMat::with_capacity((n, n), 2 * g.m());
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        let w = g.weight(e);
        tri.add_triplet(i, j, w);
        tri.add_triplet(j, i, w);
    }
    tri.to_csr()
}

fn check_len(what: &'static str, got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(EpidemicError::DimensionMismatch { what, got, expected })
    }
}

/// Which well-posedness condition a node breaks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    /// `gamma_i` outside `(0, 1)`.
    Healing,
    /// `beta_i` outside `[0, 1)`.
    Infection,
    /// `beta_i * sum_j omega_ij >= 1`.
    Pressure,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub node: usize,
    pub kind: ViolationKind,
    pub value: f64,
}

/// Offending nodes, worst first within each kind.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl std::fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.is_ok() {
            return write!(f, "no violations");
        }
        write!(f, "{} violation(s)", self.violations.len())?;
        for v in self.violations.iter().take(5) {
            let what = match v.kind {
                ViolationKind::Healing => "gamma",
                ViolationKind::Infection => "beta",
                ViolationKind::Pressure => "beta * row sum",
            };
            write!(f, "; node {}: {} = {}", v.node, what, v.value)?;
        }
        Ok(())
    }
}

/// Checks `0 < gamma_i < 1`, `0 <= beta_i < 1` and `beta_i sum_j omega_ij < 1`.
pub fn validate_params(params: &EpidemicParams) -> ValidationReport {
    let mut by_kind: [Vec<Violation>; 3] = Default::default();
    for (i, &g) in params.gamma.iter().enumerate() {
        if !(g > 0.0 && g < 1.0) {
            by_kind[0].push(Violation { node: i, kind: ViolationKind::Healing, value: g });
        }
    }
    for (i, &b) in params.beta.iter().enumerate() {
        if !(0.0..1.0).contains(&b) {
            by_kind[1].push(Violation { node: i, kind: ViolationKind::Infection, value: b });
        }
    }
    for (i, s) in params.row_sums().into_iter().enumerate() {
        let pressure = params.beta[i] * s;
        if !(pressure < 1.0) {
            by_kind[2].push(Violation { node: i, kind: ViolationKind::Pressure, value: pressure });
        }
    }
    let mut violations = Vec::new();
    for mut group in by_kind {
        group.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()));
        violations.extend(group);
    }
    ValidationReport { violations }
}

/// Infection probabilities and, for SIR, recovered probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpidemicState {
    pub p: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r: Option<Vec<f64>>,
}

impl EpidemicState {
    pub fn sis(p: Vec<f64>) -> Self {
        EpidemicState { p, r: None }
    }

    pub fn sir(p: Vec<f64>, r: Vec<f64>) -> Self {
        EpidemicState { p, r: Some(r) }
    }

    pub fn n(&self) -> usize {
        self.p.len()
    }

    /// Entries in `[0, 1]` and, for SIR, `p + r <= 1`.
    pub fn validate(&self) -> Result<()> {
        in_unit(&self.p)?;
        if let Some(r) = &self.r {
            check_len("r", r.len(), self.p.len())?;
            in_unit(r)?;
            for (i, (p, r)) in self.p.iter().zip(r).enumerate() {
                if p + r > 1.0 {
                    return Err(EpidemicError::StateOutOfRange { index: i, value: p + r });
                }
            }
        }
        Ok(())
    }
}

fn in_unit(v: &[f64]) -> Result<()> {
    match v.iter().position(|x| !(0.0..=1.0).contains(x)) {
        Some(index) => Err(EpidemicError::StateOutOfRange { index, value: v[index] }),
        None => Ok(()),
    }
}

/// New infection pressure `beta_i (Omega p)_i`, capped at 1.
fn pressure(p: &[f64], params: &EpidemicParams) -> Vec<f64> {
    spmv(&params.omega, p)
        .into_iter()
        .zip(&params.beta)
        .map(|(s, b)| (b * s).min(1.0))
        .collect()
}

fn sis_update(p: &[f64], params: &EpidemicParams) -> Vec<f64> {
    let x = pressure(p, params);
    p.iter()
        .zip(&x)
        .zip(&params.gamma)
        .map(|((&p, &x), &g)| (p * (1.0 - g) + (1.0 - p) * x).clamp(0.0, 1.0))
        .collect()
}

/// One SIS step. The `r` component, if any, is ignored and dropped.
pub fn sis_step(state: &EpidemicState, params: &EpidemicParams) -> Result<EpidemicState> {
    check_len("state", state.n(), params.n())?;
    Ok(EpidemicState::sis(sis_update(&state.p, params)))
}

/// `O(p) = I + (I - diag(p)) B Omega - Gamma`, so that `O(p) p` is the next state.
pub fn evolution_operator(p: &[f64], params: &EpidemicParams) -> Result<CsMat<f64>> {
    let n = params.n();
    check_len("p", p.len(), n)?;
    let mut tri = TriMat::with_capacity((n, n), n + params.omega.nnz());
    for i in 0..n {
        tri.add_triplet(i, i, 1.0 - params.gamma[i]);
    }
    for (row, vec) in params.omega.outer_iterator().enumerate() {
        let scale = (1.0 - p[row]) * params.beta[row];
        for (col, &w) in vec.iter() {
            tri.add_triplet(row, col, scale * w);
        }
    }
    Ok(tri.to_csr())
}

/// One SIR step: `p' = p + (1 - p - r) beta Omega p - gamma p`, `r' = r + gamma p`.
pub fn sir_step(state: &EpidemicState, params: &EpidemicParams) -> Result<EpidemicState> {
    check_len("state", state.n(), params.n())?;
    let r = state
        .r
        .as_ref()
        .ok_or_else(|| EpidemicError::InvalidParameter("SIR step needs a recovered vector".into()))?;
    state.validate()?;
    let x = pressure(&state.p, params);
    let mut p_next = Vec::with_capacity(state.n());
    let mut r_next = Vec::with_capacity(state.n());
    for i in 0..state.n() {
        let (p, r, g) = (state.p[i], r[i], params.gamma[i]);
        let s = (1.0 - p - r).max(0.0);
        let rn = (r + g * p).min(1.0);
        let pn = (p * (1.0 - g) + s * x[i]).clamp(0.0, 1.0 - rn);
        p_next.push(pn);
        r_next.push(rn);
    }
    Ok(EpidemicState::sir(p_next, r_next))
}

/// States `0..=steps`, advancing with SIR when `p0` carries `r`, else SIS.
pub fn simulate(p0: &EpidemicState, params: &EpidemicParams, steps: usize) -> Result<Vec<EpidemicState>> {
    check_len("state", p0.n(), params.n())?;
    p0.validate()?;
    let mut out = Vec::with_capacity(steps + 1);
    out.push(p0.clone());
    for _ in 0..steps {
        let last = out.last().expect("trajectory starts non-empty");
        let next = if last.r.is_some() {
            sir_step(last, params)?
        } else {
            sis_step(last, params)?
        };
        out.push(next);
    }
    Ok(out)
}

/// `h` SIS steps from `p_hat`, clamped to `[0, 1]` at every step.
pub fn forecast(p_hat: &[f64], params: &EpidemicParams, horizon: usize) -> Result<Vec<f64>> {
    check_len("p_hat", p_hat.len(), params.n())?;
    let mut p: Vec<f64> = p_hat.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    for _ in 0..horizon {
        p = sis_update(&p, params);
    }
    Ok(p)
}

/// Expected number of infected nodes, `sum_i p_i`.
pub fn expected_infections(p: &[f64]) -> f64 {
    p.iter().sum()
}

/// `1 - min gamma + max beta * max_i sum_j omega_ij`, an l1 Lipschitz constant of one SIS step.
pub fn lipschitz_constant(params: &EpidemicParams) -> f64 {
    let gamma_min = params.gamma.iter().copied().fold(f64::INFINITY, f64::min);
    let beta_max = params.beta.iter().copied().fold(0.0, f64::max);
    let row_max = params.row_sums().into_iter().fold(0.0, f64::max);
    1.0 - gamma_min + beta_max * row_max
}

/// l1 denoising bound at the nowcast time propagated `horizon` steps ahead by
/// the Lipschitz constant.
pub fn forecast_error_bound(inputs: &RiskInputs, params: &EpidemicParams, horizon: usize) -> Result<f64> {
    let base = l1_risk_bound(inputs)?;
    Ok(lipschitz_constant(params).powi(horizon as i32) * base)
}
