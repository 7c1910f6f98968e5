//! Replicated simulation studies.
//!
//! Every replicate draws its own graph, patient zero and observations from
//! streams derived from `(seed, replicate)`, so the groups of a grid share
//! graphs and seeds and the output does not depend on thread scheduling.

use rayon::prelude::*;

use super::config::{ExperimentConfig, LambdaChoice, Scenario};
use super::county::ingest_county_data;
use super::report::{Report, ReportRow};
use super::{l1_error, l2_error_sq, HarnessError, Result};
use crate::denoise::{
    correct_false_positives, cross_validate_lambda, theoretical_lambda, theoretical_lambda_missing,
    tv_denoise, tv_denoise_masked, tv_denoise_weighted, DenoiseResult,
};
use crate::epidemic::{
    forecast, patient_zero_state, simulate, EpidemicParams, EpidemicState, ObservationSet, PatientZero,
};
use crate::estimation::{
    build_phi, estimate_params, estimate_params_from_observations, EstimateRow, LambdaPolicy, Method,
    ParamEstimate, RankFlag,
};
use crate::graph::{contact_weights, generate_graph, inverse_scaling_factor, load_edge_list, Graph};
use crate::rng::{derive_seed, Purpose};

/// One cell of the scenario grid.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Group {
    beta: f64,
    k0: usize,
    /// Missing fraction or false-positive rate, depending on the scenario.
    extra: f64,
}

impl Group {
    fn label(&self, scenario: Scenario) -> String {
        let base = format!("beta={};k0={}", self.beta, self.k0);
        match scenario {
            Scenario::Missing => format!("{base};missing={}", self.extra),
            Scenario::FalsePositive => format!("{base};alpha={}", self.extra),
            _ => base,
        }
    }
}

fn groups(cfg: &ExperimentConfig, scenario: Scenario) -> Vec<Group> {
    let extras = match scenario {
        Scenario::Missing => cfg.missing_fraction.clone(),
        Scenario::FalsePositive => cfg.alpha.clone(),
        _ => vec![0.0],
    };
    let mut out = Vec::new();
    for &beta in &cfg.beta {
        for &k0 in &cfg.k0 {
            for &extra in &extras {
                out.push(Group { beta, k0, extra });
            }
        }
    }
    out
}

/// Graph, parameters and exact trajectory of one replicate.
struct World {
    graph: Graph,
    params: EpidemicParams,
    traj: Vec<EpidemicState>,
}

struct Seeds {
    graph: u64,
    patient_zero: u64,
    observation: u64,
    cv: u64,
}

impl Seeds {
    fn new(seed: u64, replicate: u64) -> Self {
        Seeds {
            graph: derive_seed(seed, replicate, Purpose::Graph),
            patient_zero: derive_seed(seed, replicate, Purpose::PatientZero),
            observation: derive_seed(seed, replicate, Purpose::Observation),
            cv: derive_seed(seed, replicate, Purpose::CrossValidation),
        }
    }

    /// Observation seed of the snapshot at time `t`.
    fn snapshot(&self, t: usize) -> u64 {
        self.observation.wrapping_add(t as u64)
    }
}

fn build_world(
    cfg: &ExperimentConfig,
    fixed: Option<&Graph>,
    beta: f64,
    steps: usize,
    seeds: &Seeds,
) -> Result<World> {
    let base = match (fixed, cfg.graph_model()?) {
        (Some(g), _) => g.clone(),
        (None, Some(model)) => generate_graph(&model, cfg.node_count(), seeds.graph)?,
        (None, None) => return Err(HarnessError::Config("no graph source".into())),
    };
    let graph = contact_weights(&base);
    let mut params = EpidemicParams::from_graph(&graph, beta, cfg.gamma)?;
    if !cfg.unchecked {
        params = params.checked()?;
    }
    let p0 = patient_zero_state(graph.n(), PatientZero::Seeded(seeds.patient_zero))?;
    let traj = simulate(&p0, &params, steps)?;
    Ok(World { graph, params, traj })
}

fn fixed_graph(cfg: &ExperimentConfig) -> Result<Option<Graph>> {
    match (&cfg.edge_list, cfg.graph_model()?) {
        (Some(path), None) => Ok(Some(load_edge_list(path, cfg.one_based)?)),
        _ => Ok(None),
    }
}

fn full_mask(obs: &ObservationSet) -> bool {
    obs.mask.iter().all(|&m| m == 1.0)
}

/// Penalty for one snapshot under the configured policy.
fn choose_lambda(cfg: &ExperimentConfig, g: &Graph, obs: &ObservationSet, cv_seed: u64) -> Result<f64> {
    match cfg.lambda_policy {
        LambdaChoice::Fixed => Ok(cfg.lambda),
        LambdaChoice::Cv => {
            let mask = (!full_mask(obs)).then_some(&obs.mask[..]);
            Ok(cross_validate_lambda(&obs.y, mask, g, &cfg.cv_config(cv_seed), &cfg.solver())?.lambda_star)
        }
        LambdaChoice::Theory => Ok(theoretical_lambda(g.n(), inverse_scaling_factor(g, cfg.rho_mode)?, cfg.delta)?),
        LambdaChoice::TheoryMissing => {
            Ok(theoretical_lambda_missing(g.n(), inverse_scaling_factor(g, cfg.rho_mode)?)?)
        }
    }
}

fn denoise_snapshot(cfg: &ExperimentConfig, g: &Graph, obs: &ObservationSet, lambda: f64) -> Result<DenoiseResult> {
    Ok(if full_mask(obs) {
        tv_denoise(&obs.y, g, lambda, &cfg.solver())?
    } else {
        tv_denoise_masked(&obs.y, &obs.mask, g, lambda, &cfg.solver())?
    })
}

/// Metric row plus the number of solves that missed tolerance.
struct Outcome {
    values: Vec<f64>,
    non_converged: usize,
}

/// Runs `body` for every (group, replicate), in parallel, and assembles the
/// sorted report.
fn run_grid<F>(cfg: &ExperimentConfig, scenario: Scenario, columns: &[&str], body: F) -> Result<Report>
where
    F: Fn(&Group, &Seeds, Option<f64>, Option<&Graph>) -> Result<Outcome> + Sync,
{
    cfg.validate()?;
    if cfg.scenario.is_some_and(|s| s != scenario) {
        return Err(HarnessError::Config(format!(
            "config is for {}, not {}",
            cfg.scenario().map(Scenario::name).unwrap_or("?"),
            scenario.name()
        )));
    }
    let fixed = fixed_graph(cfg)?;
    let grid = groups(cfg, scenario);
    let job = || -> Result<Report> {
        let mut rows = Vec::new();
        let mut non_converged = 0;
        for group in &grid {
            let shared = if cfg.shared_lambda && cfg.lambda_policy != LambdaChoice::Fixed {
                Some(shared_lambda(cfg, scenario, group, fixed.as_ref())?)
            } else {
                None
            };
            let outcomes: Vec<Result<(u64, u64, Outcome)>> = (0..cfg.replicates as u64)
                .into_par_iter()
                .map(|r| {
                    let seeds = Seeds::new(cfg.seed, r);
                    let out = body(group, &seeds, shared, fixed.as_ref())?;
                    Ok((r, seeds.graph, out))
                })
                .collect();
            let label = group.label(scenario);
            for res in outcomes {
                let (replicate, seed, out) = res?;
                non_converged += out.non_converged;
                rows.push(ReportRow { replicate, seed, group: label.clone(), values: out.values });
            }
        }
        Ok(Report {
            scenario: scenario.name().to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
            non_converged,
        })
    };
    match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| HarnessError::Config(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    }
}

/// Penalty fitted once on replicate 0's nowcast snapshot.
fn shared_lambda(cfg: &ExperimentConfig, scenario: Scenario, group: &Group, fixed: Option<&Graph>) -> Result<f64> {
    let seeds = Seeds::new(cfg.seed, 0);
    let world = build_world(cfg, fixed, group.beta, group.k0, &seeds)?;
    let truth = &world.traj[group.k0].p;
    let obs = observe(scenario, group, truth, &seeds, group.k0)?;
    choose_lambda(cfg, &world.graph, &obs, seeds.cv)
}

fn observe(scenario: Scenario, group: &Group, truth: &[f64], seeds: &Seeds, t: usize) -> Result<ObservationSet> {
    let n = truth.len();
    Ok(match scenario {
        Scenario::Missing => {
            let pi = vec![1.0 - group.extra; n];
            ObservationSet::draw(truth, 0.0, Some(&pi), seeds.snapshot(t))?
        }
        Scenario::FalsePositive => ObservationSet::draw(truth, group.extra, None, seeds.snapshot(t))?,
        _ => ObservationSet::draw(truth, 0.0, None, seeds.snapshot(t))?,
    })
}

/// Nowcast at `k0` for the denoise, missing and false-positive scenarios.
fn nowcast(
    cfg: &ExperimentConfig,
    scenario: Scenario,
    group: &Group,
    seeds: &Seeds,
    shared: Option<f64>,
    fixed: Option<&Graph>,
    extra_steps: usize,
) -> Result<(World, ObservationSet, DenoiseResult, f64)> {
    let world = build_world(cfg, fixed, group.beta, group.k0 + extra_steps, seeds)?;
    let obs = observe(scenario, group, &world.traj[group.k0].p, seeds, group.k0)?;
    let lambda = match shared {
        Some(l) => l,
        None => choose_lambda(cfg, &world.graph, &obs, seeds.cv)?,
    };
    let res = denoise_snapshot(cfg, &world.graph, &obs, lambda)?;
    Ok((world, obs, res, lambda))
}

pub const DENOISE_COLUMNS: [&str; 6] = ["lambda", "infected", "l1_tv", "l1_naive", "l2sq_tv", "l2sq_naive"];

/// Nowcasting error of the denoiser against the raw bits at `k0`.
pub fn run_denoise_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let scenario = Scenario::Denoise;
    run_grid(cfg, scenario, &DENOISE_COLUMNS, |group, seeds, shared, fixed| {
        let (world, obs, res, lambda) = nowcast(cfg, scenario, group, seeds, shared, fixed, 0)?;
        let truth = &world.traj[group.k0].p;
        Ok(Outcome {
            values: vec![
                lambda,
                truth.iter().sum(),
                l1_error(&res.p_hat, truth)?,
                l1_error(&obs.y, truth)?,
                l2_error_sq(&res.p_hat, truth)?,
                l2_error_sq(&obs.y, truth)?,
            ],
            non_converged: usize::from(!res.converged),
        })
    })
}

pub const FORECAST_COLUMNS: [&str; 6] = ["lambda", "infected", "l2sq_tv", "l2sq_naive", "l1_tv", "l1_naive"];

/// Error at `k0 + horizon` of forecasts started from the denoised and the raw state.
pub fn run_forecast_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let scenario = Scenario::Forecast;
    let h = cfg.horizon;
    run_grid(cfg, scenario, &FORECAST_COLUMNS, |group, seeds, shared, fixed| {
        let (world, obs, res, lambda) = nowcast(cfg, scenario, group, seeds, shared, fixed, h)?;
        let truth = &world.traj[group.k0 + h].p;
        let tv = forecast(&res.p_hat, &world.params, h)?;
        let naive = forecast(&obs.y, &world.params, h)?;
        Ok(Outcome {
            values: vec![
                lambda,
                truth.iter().sum(),
                l2_error_sq(&tv, truth)?,
                l2_error_sq(&naive, truth)?,
                l1_error(&tv, truth)?,
                l1_error(&naive, truth)?,
            ],
            non_converged: usize::from(!res.converged),
        })
    })
}

pub const MISSING_COLUMNS: [&str; 6] = ["lambda", "observed", "l1_tv", "l1_naive", "l2sq_tv", "l2sq_naive"];

/// Masked denoiser against the fill-with-zero baseline.
pub fn run_missing_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let scenario = Scenario::Missing;
    run_grid(cfg, scenario, &MISSING_COLUMNS, |group, seeds, shared, fixed| {
        let (world, obs, res, lambda) = nowcast(cfg, scenario, group, seeds, shared, fixed, 0)?;
        let truth = &world.traj[group.k0].p;
        Ok(Outcome {
            values: vec![
                lambda,
                obs.observed_count() as f64,
                l1_error(&res.p_hat, truth)?,
                l1_error(&obs.y, truth)?,
                l2_error_sq(&res.p_hat, truth)?,
                l2_error_sq(&obs.y, truth)?,
            ],
            non_converged: usize::from(!res.converged),
        })
    })
}

pub const FALSE_POSITIVE_COLUMNS: [&str; 6] =
    ["lambda", "l1_tv", "l1_tv_uncorrected", "l1_naive", "l2sq_tv", "l2sq_naive"];

/// Denoising with a known false-positive rate followed by thresholding.
pub fn run_false_positive_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let scenario = Scenario::FalsePositive;
    run_grid(cfg, scenario, &FALSE_POSITIVE_COLUMNS, |group, seeds, shared, fixed| {
        let (world, obs, res, lambda) = nowcast(cfg, scenario, group, seeds, shared, fixed, 0)?;
        let truth = &world.traj[group.k0].p;
        let corrected = correct_false_positives(&res.p_hat, group.extra, cfg.rescale)?;
        Ok(Outcome {
            values: vec![
                lambda,
                l1_error(&corrected, truth)?,
                l1_error(&res.p_hat, truth)?,
                l1_error(&obs.y, truth)?,
                l2_error_sq(&corrected, truth)?,
                l2_error_sq(&obs.y, truth)?,
            ],
            non_converged: usize::from(!res.converged),
        })
    })
}

pub const PARAM_COLUMNS: [&str; 10] = [
    "lambda",
    "beta_tv",
    "gamma_tv",
    "r0_tv",
    "beta_naive",
    "gamma_naive",
    "r0_naive",
    "residual_tv",
    "residual_naive",
    "full_rank_tv",
];

/// Rate recovery over the `window` transitions ending at `k0`.
///
/// Under cross-validation the penalty is chosen on the last snapshot and
/// reused across the window. With `noiseless` both estimates use the exact
/// states.
pub fn run_param_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let scenario = Scenario::Params;
    run_grid(cfg, scenario, &PARAM_COLUMNS, |group, seeds, shared, fixed| {
        let world = build_world(cfg, fixed, group.beta, group.k0, seeds)?;
        let start = group.k0 - cfg.window;
        let (tv, naive, lambda) = if cfg.noiseless {
            let states: Vec<Vec<f64>> = world.traj[start..].iter().map(|s| s.p.clone()).collect();
            let est = estimate_params(&build_phi(&states, &world.params.omega)?)?;
            (est, est, 0.0)
        } else {
            let obs: Vec<ObservationSet> = (start..=group.k0)
                .map(|t| observe(scenario, group, &world.traj[t].p, seeds, t))
                .collect::<Result<_>>()?;
            let policy = match (shared, cfg.lambda_policy) {
                (Some(lambda), _) => LambdaPolicy::Fixed { lambda },
                (None, LambdaChoice::Fixed) => LambdaPolicy::Fixed { lambda: cfg.lambda },
                (None, LambdaChoice::Cv) => LambdaPolicy::CrossValidateLast { cv: cfg.cv_config(seeds.cv) },
                (None, LambdaChoice::Theory | LambdaChoice::TheoryMissing) => LambdaPolicy::Fixed {
                    lambda: choose_lambda(cfg, &world.graph, obs.last().expect("window is non-empty"), seeds.cv)?,
                },
            };
            let est = estimate_params_from_observations(&obs, &world.graph, &world.params.omega, &policy, &cfg.solver())?;
            (est.tv, est.naive, est.lambdas[0])
        };
        let r0 = |e: &ParamEstimate| e.r0_hat.unwrap_or(f64::NAN);
        Ok(Outcome {
            values: vec![
                lambda,
                tv.beta_hat,
                tv.gamma_hat,
                r0(&tv),
                naive.beta_hat,
                naive.gamma_hat,
                r0(&naive),
                tv.residual_norm,
                naive.residual_norm,
                f64::from(u8::from(tv.rank_flag == RankFlag::Full)),
            ],
            non_converged: 0,
        })
    })
}

/// One TV and one naive estimate row per replicate of a params report.
pub fn estimate_rows(report: &Report) -> Vec<EstimateRow> {
    let col = |name: &str| report.column_index(name);
    let (Some(b), Some(g), Some(r), Some(res)) = (col("beta_tv"), col("gamma_tv"), col("r0_tv"), col("residual_tv"))
    else {
        return Vec::new();
    };
    let (nb, ng, nr, nres) = (b + 3, g + 3, r + 3, res + 1);
    let opt = |x: f64| x.is_finite().then_some(x);
    let mut out = Vec::new();
    for row in &report.rows {
        let v = &row.values;
        out.push(EstimateRow {
            seed: row.seed,
            beta_hat: v[b],
            gamma_hat: v[g],
            r0_hat: opt(v[r]),
            residual: v[res],
            method: Method::Tv,
        });
        out.push(EstimateRow {
            seed: row.seed,
            beta_hat: v[nb],
            gamma_hat: v[ng],
            r0_hat: opt(v[nr]),
            residual: v[nres],
            method: Method::Naive,
        });
    }
    out
}

pub const COUNTY_COLUMNS: [&str; 4] = ["population", "cases", "target", "p_hat"];

/// Smoothed prevalence per county at the configured `lambda`.
pub fn run_county_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    cfg.validate()?;
    let (Some(cases), Some(adjacency)) = (&cfg.cases, &cfg.adjacency) else {
        return Err(HarnessError::Config("county_smooth needs `cases` and `adjacency`".into()));
    };
    let data = ingest_county_data(cases, adjacency)?;
    let res = tv_denoise_weighted(&data.problem(cfg.lambda), &cfg.solver())?;
    let targets = data.targets();
    let rows = (0..data.ids.len())
        .map(|c| ReportRow {
            replicate: 0,
            seed: cfg.seed,
            group: data.ids[c].clone(),
            values: vec![data.population[c], data.cases[c], targets[c], res.p_hat[c]],
        })
        .collect();
    Ok(Report {
        scenario: Scenario::CountySmooth.name().to_string(),
        columns: COUNTY_COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows,
        non_converged: usize::from(!res.converged),
    })
}

/// Dispatches on `cfg.scenario`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    match cfg.scenario()? {
        Scenario::Denoise => run_denoise_experiment(cfg),
        Scenario::Forecast => run_forecast_experiment(cfg),
        Scenario::Params => run_param_experiment(cfg),
        Scenario::Missing => run_missing_experiment(cfg),
        Scenario::FalsePositive => run_false_positive_experiment(cfg),
        Scenario::CountySmooth => run_county_experiment(cfg),
    }
}
