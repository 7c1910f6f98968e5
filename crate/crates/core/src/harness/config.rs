//! Experiment configuration: flat `key = value` text or a JSON object.
//!
//! Values on the right of `=` are read as JSON when they parse as JSON
//! (numbers, booleans, arrays) and as bare strings otherwise. `beta`, `k0`,
//! `missing_fraction` and `alpha` accept a scalar or a list; lists span a
//! grid of groups.

use std::path::{Path, PathBuf};

use serde::de::Deserializer;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{HarnessError, Result};
use crate::denoise::{default_lambda_grid, CvConfig, SolverConfig};
use crate::graph::{GraphModel, RhoMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    Denoise,
    Forecast,
    Params,
    Missing,
    #[serde(alias = "fp")]
    FalsePositive,
    #[serde(alias = "county")]
    CountySmooth,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Denoise => "denoise",
            Scenario::Forecast => "forecast",
            Scenario::Params => "params",
            Scenario::Missing => "missing",
            Scenario::FalsePositive => "false_positive",
            Scenario::CountySmooth => "county_smooth",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphKind {
    Knn,
    ErdosRenyi,
    SmallWorld,
    PreferentialAttachment,
    Sbm,
    Grid2d,
    Star,
    Complete,
    EdgeList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaChoice {
    /// Cross-validated per replicate (or once per group with `shared_lambda`).
    Cv,
    Fixed,
    /// Full-observation closed-form rate from the inverse scaling factor.
    #[serde(alias = "theoretical")]
    Theory,
    /// Partial-observation closed-form rate.
    #[serde(alias = "theory-missing")]
    TheoryMissing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    JsonLines,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scenario: Option<Scenario>,

    pub graph: GraphKind,
    pub n: usize,
    /// Neighbors per node (knn).
    pub k: usize,
    /// Edge probability (erdos_renyi).
    pub p: f64,
    /// Lattice degree (small_world) or edges per arrival (preferential_attachment).
    pub m: usize,
    /// Rewiring probability (small_world).
    pub rewire: f64,
    pub rows: Option<usize>,
    pub cols: Option<usize>,
    pub sizes: Vec<usize>,
    pub probs: Vec<Vec<f64>>,
    pub edge_list: Option<PathBuf>,
    pub one_based: bool,

    #[serde(deserialize_with = "one_or_many")]
    pub beta: Vec<f64>,
    pub gamma: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub k0: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Skip the well-posedness check on the epidemic parameters.
    pub unchecked: bool,

    pub lambda_policy: LambdaChoice,
    pub lambda: f64,
    pub shared_lambda: bool,
    pub cv_folds: usize,
    pub cv_holdout: f64,
    pub cv_grid: Option<Vec<f64>>,
    pub rho_mode: RhoMode,
    pub delta: f64,

    #[serde(deserialize_with = "one_or_many")]
    pub missing_fraction: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub alpha: Vec<f64>,
    pub rescale: bool,
    pub horizon: usize,
    /// Transitions in the estimation window ending at `k0`.
    pub window: usize,
    /// Estimate from the exact states instead of observations.
    pub noiseless: bool,

    pub tol: f64,
    pub max_iter: usize,

    pub cases: Option<PathBuf>,
    pub adjacency: Option<PathBuf>,

    pub out: Option<PathBuf>,
    pub format: OutputFormat,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            scenario: None,
            graph: GraphKind::Knn,
            n: 1000,
            k: 5,
            p: 0.01,
            m: 4,
            rewire: 0.1,
            rows: None,
            cols: None,
            sizes: Vec::new(),
            probs: Vec::new(),
            edge_list: None,
            one_based: false,
            beta: vec![0.5],
            gamma: 0.1,
            k0: vec![30],
            replicates: 100,
            seed: 0,
            unchecked: false,
            lambda_policy: LambdaChoice::Cv,
            lambda: 0.0,
            shared_lambda: false,
            cv_folds: 5,
            cv_holdout: 0.2,
            cv_grid: None,
            rho_mode: RhoMode::Exact,
            delta: 0.05,
            missing_fraction: vec![0.0],
            alpha: vec![0.0],
            rescale: false,
            horizon: 2,
            window: 20,
            noiseless: false,
            tol: 1e-6,
            max_iter: 50_000,
            cases: None,
            adjacency: None,
            out: None,
            format: OutputFormat::Csv,
            threads: None,
        }
    }
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(x) => vec![x],
        OneOrMany::Many(v) => v,
    })
}

impl ExperimentConfig {
    /// Parses JSON when the text starts with `{`, else `key = value` lines
    /// (`#` starts a comment line).
    pub fn parse(text: &str) -> Result<Self> {
        let trimmed = text.trim_start();
        let value = if trimmed.starts_with('{') {
            serde_json::from_str::<Value>(trimmed).map_err(|e| HarnessError::Config(e.to_string()))?
        } else {
            Value::Object(parse_key_values(text)?)
        };
        serde_json::from_value(value).map_err(|e| HarnessError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn scenario(&self) -> Result<Scenario> {
        self.scenario
            .ok_or_else(|| HarnessError::Config("no scenario given".into()))
    }

    pub fn validate(&self) -> Result<()> {
        let scenario = self.scenario()?;
        let bad = |msg: String| Err(HarnessError::Config(msg));
        if self.replicates == 0 {
            return bad("replicates must be at least 1".into());
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return bad("tol must be positive and max_iter at least 1".into());
        }
        if scenario == Scenario::CountySmooth {
            if self.cases.is_none() || self.adjacency.is_none() {
                return bad("county_smooth needs `cases` and `adjacency` paths".into());
            }
            if !(self.lambda.is_finite() && self.lambda >= 0.0) {
                return bad(format!("lambda must be nonnegative, got {}", self.lambda));
            }
            return Ok(());
        }
        if self.graph == GraphKind::EdgeList && self.edge_list.is_none() {
            return bad("graph = edge_list needs an `edge_list` path".into());
        }
        if self.beta.is_empty() || self.k0.is_empty() || self.missing_fraction.is_empty() || self.alpha.is_empty() {
            return bad("beta, k0, missing_fraction and alpha need at least one value".into());
        }
        if let Some(b) = self.beta.iter().find(|b| !(**b >= 0.0 && **b < 1.0)) {
            return bad(format!("beta must lie in [0, 1), got {b}"));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return bad(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if let Some(f) = self.missing_fraction.iter().find(|f| !(**f >= 0.0 && **f < 1.0)) {
            return bad(format!(
                "missing fraction must lie in [0, 1) so some node is observed, got {f}"
            ));
        }
        if let Some(a) = self.alpha.iter().find(|a| !(**a >= 0.0 && **a < 1.0)) {
            return bad(format!("alpha must lie in [0, 1), got {a}"));
        }
        match self.lambda_policy {
            LambdaChoice::Fixed if !(self.lambda.is_finite() && self.lambda >= 0.0) => {
                return bad(format!("lambda must be nonnegative, got {}", self.lambda));
            }
            LambdaChoice::Theory if !(self.delta > 0.0 && self.delta <= 1.0) => {
                return bad(format!("delta must lie in (0, 1], got {}", self.delta));
            }
            _ => {}
        }
        if self.lambda_policy == LambdaChoice::Cv {
            self.cv_config(0).validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        }
        if scenario == Scenario::Params {
            if self.window == 0 {
                return bad("window must be at least 1 transition".into());
            }
            if let Some(k0) = self.k0.iter().find(|&&k| k < self.window) {
                return bad(format!("k0 = {k0} is shorter than the window {}", self.window));
            }
        }
        self.graph_model().map(|_| ())
    }

    /// Generator for the configured family (`None` for edge lists).
    pub fn graph_model(&self) -> Result<Option<GraphModel>> {
        Ok(Some(match self.graph {
            GraphKind::Knn => GraphModel::Knn { k: self.k },
            GraphKind::ErdosRenyi => GraphModel::ErdosRenyi { p: self.p },
            GraphKind::SmallWorld => GraphModel::SmallWorld { m: self.m, p: self.rewire },
            GraphKind::PreferentialAttachment => GraphModel::PreferentialAttachment { m: self.m },
            GraphKind::Sbm => GraphModel::Sbm {
                sizes: self.sizes.clone(),
                probs: self.probs.clone(),
            },
            GraphKind::Grid2d => match (self.rows, self.cols) {
                (Some(rows), Some(cols)) => GraphModel::Grid2d { rows, cols },
                _ => return Err(HarnessError::Config("grid2d needs `rows` and `cols`".into())),
            },
            GraphKind::Star => GraphModel::Star,
            GraphKind::Complete => GraphModel::Complete,
            GraphKind::EdgeList => return Ok(None),
        }))
    }

    /// Node count the generator is called with.
    pub fn node_count(&self) -> usize {
        match (self.graph, self.rows, self.cols) {
            (GraphKind::Grid2d, Some(r), Some(c)) => r * c,
            (GraphKind::Sbm, ..) if !self.sizes.is_empty() => self.sizes.iter().sum(),
            _ => self.n,
        }
    }

    pub fn solver(&self) -> SolverConfig {
        SolverConfig {
            max_iter: self.max_iter,
            ..SolverConfig::with_tol(self.tol)
        }
    }

    pub fn cv_config(&self, seed: u64) -> CvConfig {
        CvConfig {
            lambda_grid: self.cv_grid.clone().unwrap_or_else(default_lambda_grid),
            holdout_fraction: self.cv_holdout,
            folds: self.cv_folds,
            seed,
        }
    }
}

fn parse_key_values(text: &str) -> Result<Map<String, Value>> {
    let mut map = Map::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, raw) = line.split_once('=').ok_or_else(|| {
            HarnessError::Config(format!("line {}: expected `key = value`", lineno + 1))
        })?;
        let key = key.trim().replace('-', "_");
        let raw = raw.trim();
        let value = serde_json::from_str::<Value>(raw)
            .unwrap_or_else(|_| Value::String(raw.trim_matches(|c| c == '"' || c == '\'').to_string()));
        if map.insert(key.clone(), value).is_some() {
            return Err(HarnessError::Config(format!(
                "line {}: duplicate key `{key}`",
                lineno + 1
            )));
        }
    }
    Ok(map)
}
