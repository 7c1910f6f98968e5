//! ADMM for the weighted generalized lasso with `z = D p`.
//!
//! The p-update solves `(2 diag(a) + rho L) p = 2 a.t + rho D^T (z - u)` with a
//! sparse LDL^T factorization that is reused until the penalty changes. The
//! z-update is entrywise soft-thresholding. The problem is rescaled so the
//! largest node weight is 1 and disconnected graphs are solved per component.

use sprs::{CsMat, FillInReduction, TriMat};
use sprs_ldl::{Ldl, LdlNumeric};

use super::{clamp_unit, objective_value, DenoiseError, DenoiseProblem, DenoiseResult, Result, SolverConfig};
use crate::graph::Graph;

const RELAXATION: f64 = 1.6;
const ADAPT_EVERY: usize = 10;
const ADAPT_RATIO: f64 = 10.0;
const ADAPT_FACTOR: f64 = 2.0;
const PENALTY_MIN: f64 = 1e-8;
const PENALTY_MAX: f64 = 1e8;

/// Solver state in the rescaled problem, reusable as a warm start.
#[derive(Debug, Clone)]
pub(crate) struct WarmStart {
    pub p: Vec<f64>,
    pub z: Vec<f64>,
    /// Unscaled dual variable, one per edge.
    pub y: Vec<f64>,
    /// Penalty per connected component.
    pub penalty: Vec<f64>,
    /// Thresholds `lambda b_e / scale` the dual was computed for.
    pub thresholds: Vec<f64>,
}

struct Outcome {
    p: Vec<f64>,
    z: Vec<f64>,
    y: Vec<f64>,
    penalty: f64,
    iterations: usize,
    primal: f64,
    dual: f64,
    converged: bool,
}

pub(crate) fn solve(
    problem: &DenoiseProblem<'_>,
    cfg: &SolverConfig,
    warm: Option<&WarmStart>,
) -> Result<(DenoiseResult, WarmStart)> {
    let g = problem.graph;
    let scale = problem.node_weights.iter().copied().fold(0.0, f64::max);
    let a: Vec<f64> = problem.node_weights.iter().map(|w| w / scale).collect();
    let thresholds: Vec<f64> = problem
        .edge_weights
        .iter()
        .map(|b| problem.lambda * b / scale)
        .collect();

    let total: f64 = a.iter().sum();
    let p0 = a.iter().zip(&problem.targets).map(|(a, t)| a * t).sum::<f64>() / total;

    let (count, labels) = g.components();
    let mut p = vec![p0; g.n()];
    let mut z = vec![0.0; g.m()];
    let mut y = vec![0.0; g.m()];
    let mut penalties = vec![cfg.admm_penalty; count];
    let mut iterations = 0;
    let mut primal: f64 = 0.0;
    let mut dual: f64 = 0.0;
    let mut converged = true;

    let mut members: Vec<Vec<usize>> = vec![Vec::new(); count];
    for (v, &c) in labels.iter().enumerate() {
        members[c].push(v);
    }
    let warm = warm.filter(|w| w.p.len() == g.n() && w.z.len() == g.m() && w.penalty.len() == count);

    for (c, nodes) in members.iter().enumerate() {
        let (sub, edge_ids) = if count == 1 {
            (None, (0..g.m()).collect::<Vec<_>>())
        } else {
            let (s, ids) = g.induced(nodes);
            (Some(s), ids)
        };
        let sub_graph = sub.as_ref().unwrap_or(g);
        let pick = |v: &[f64]| nodes.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        let pick_e = |v: &[f64]| edge_ids.iter().map(|&e| v[e]).collect::<Vec<f64>>();
        let ca = pick(&a);
        let ct = pick(&problem.targets);
        let cc = pick_e(&thresholds);

        let init = match warm {
            Some(w) => {
                // keep y / threshold fixed when lambda moves
                let wy: Vec<f64> = edge_ids
                    .iter()
                    .map(|&e| {
                        let old = w.thresholds[e];
                        if old > 0.0 {
                            w.y[e] * thresholds[e] / old
                        } else {
                            0.0
                        }
                    })
                    .collect();
                Some((pick(&w.p), pick_e(&w.z), wy, w.penalty[c]))
            }
            None => None,
        };

        let mut out = solve_component(sub_graph, &ca, &ct, &cc, p0, cfg, init)?;
        prefer_fused(sub_graph, &ca, &ct, &cc, &mut out);
        for (k, &v) in nodes.iter().enumerate() {
            p[v] = out.p[k];
        }
        for (k, &e) in edge_ids.iter().enumerate() {
            z[e] = out.z[k];
            y[e] = out.y[k];
        }
        penalties[c] = out.penalty;
        iterations = iterations.max(out.iterations);
        primal = primal.max(out.primal);
        dual = dual.max(out.dual);
        converged &= out.converged;
    }

    let p_hat = clamp_unit(&p);
    let result = DenoiseResult {
        objective: objective_value(&p_hat, problem),
        p_hat,
        iterations,
        primal_residual: primal,
        dual_residual: dual,
        converged,
        lambda_used: problem.lambda,
    };
    let state = WarmStart {
        p,
        z,
        y,
        penalty: penalties,
        thresholds,
    };
    Ok((result, state))
}

/// Replaces the iterate by the component's fused constant when that scores at
/// least as well.
fn prefer_fused(g: &Graph, a: &[f64], t: &[f64], thresholds: &[f64], out: &mut Outcome) {
    let total: f64 = a.iter().sum();
    if total == 0.0 || g.m() == 0 {
        return;
    }
    let c = (a.iter().zip(t).map(|(a, t)| a * t).sum::<f64>() / total).clamp(0.0, 1.0);
    let score = |p: &[f64]| -> f64 {
        let fit: f64 = a.iter().zip(t).zip(p).map(|((a, t), p)| a * (t - p) * (t - p)).sum();
        let tv: f64 = g
            .edges()
            .iter()
            .zip(thresholds)
            .map(|(&(i, j), c)| c * (p[i] - p[j]).abs())
            .sum();
        fit + tv
    };
    let fused = vec![c; g.n()];
    if score(&fused) <= score(&clamp_unit(&out.p)) {
        out.p = fused;
        out.z.iter_mut().for_each(|z| *z = 0.0);
    }
}

fn trivial(p: Vec<f64>, m: usize, z: Vec<f64>, penalty: f64) -> Outcome {
    Outcome {
        p,
        z,
        y: vec![0.0; m],
        penalty,
        iterations: 0,
        primal: 0.0,
        dual: 0.0,
        converged: true,
    }
}

fn solve_component(
    g: &Graph,
    a: &[f64],
    t: &[f64],
    thresholds: &[f64],
    p0: f64,
    cfg: &SolverConfig,
    init: Option<(Vec<f64>, Vec<f64>, Vec<f64>, f64)>,
) -> Result<Outcome> {
    let (n, m) = (g.n(), g.m());
    let penalty0 = init.as_ref().map_or(cfg.admm_penalty, |i| i.3);

    // no fidelity anywhere in this component: any constant is optimal
    if a.iter().all(|&w| w == 0.0) {
        return Ok(trivial(vec![p0; n], m, vec![0.0; m], penalty0));
    }
    // no penalty: observed nodes equal their targets, the rest sit at p0
    if thresholds.iter().all(|&c| c == 0.0) {
        let p: Vec<f64> = a
            .iter()
            .zip(t)
            .map(|(&w, &t)| if w > 0.0 { t } else { p0 })
            .collect();
        let z = crate::graph::edge_differences(g, &p);
        return Ok(trivial(p, m, z, penalty0));
    }

    let (mut p, mut z, y0, mut penalty) = match init {
        Some(i) => i,
        None => {
            let p = vec![p0; n];
            (p, vec![0.0; m], vec![0.0; m], cfg.admm_penalty)
        }
    };
    let mut u: Vec<f64> = y0.iter().map(|y| y / penalty).collect();

    let mut factor = Factor::new(g, a, penalty)?;
    let fit: Vec<f64> = a.iter().zip(t).map(|(a, t)| 2.0 * a * t).collect();
    let sqrt_m = (m as f64).sqrt();
    let sqrt_n = (n as f64).sqrt();
    let mut rhs = vec![0.0; n];
    let mut diff = vec![0.0; m];
    let mut primal = f64::INFINITY;
    let mut dual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iter {
        iterations += 1;
        for (k, v) in diff.iter_mut().enumerate() {
            *v = z[k] - u[k];
        }
        let div = crate::graph::edge_divergence(g, &diff);
        for i in 0..n {
            rhs[i] = fit[i] + penalty * div[i];
        }
        p = factor.solve(&rhs);

        let dp = crate::graph::edge_differences(g, &p);
        let mut z_change = vec![0.0; m];
        for k in 0..m {
            let relaxed = RELAXATION * dp[k] + (1.0 - RELAXATION) * z[k];
            let v = relaxed + u[k];
            let thr = thresholds[k] / penalty;
            let z_new = v.signum() * (v.abs() - thr).max(0.0);
            z_change[k] = z_new - z[k];
            z[k] = z_new;
            u[k] += relaxed - z_new;
        }

        let r_norm = dp.iter().zip(&z).map(|(d, z)| (d - z).powi(2)).sum::<f64>().sqrt();
        let dp_norm = norm(&dp);
        let z_norm = norm(&z);
        let s_norm = penalty * norm(&crate::graph::edge_divergence(g, &z_change));
        let y_div = penalty * norm(&crate::graph::edge_divergence(g, &u));
        primal = r_norm / (sqrt_m + dp_norm.max(z_norm));
        dual = s_norm / (sqrt_n + y_div);
        if primal <= cfg.tol_primal && dual <= cfg.tol_dual {
            converged = true;
            break;
        }

        if cfg.adaptive_penalty && iterations % ADAPT_EVERY == 0 {
            let factor_change = if primal > ADAPT_RATIO * dual && penalty < PENALTY_MAX {
                ADAPT_FACTOR
            } else if dual > ADAPT_RATIO * primal && penalty > PENALTY_MIN {
                1.0 / ADAPT_FACTOR
            } else {
                1.0
            };
            if factor_change != 1.0 {
                penalty *= factor_change;
                u.iter_mut().for_each(|v| *v /= factor_change);
                factor.refactor(a, penalty)?;
            }
        }
    }

    let y = u.iter().map(|u| u * penalty).collect();
    Ok(Outcome {
        p,
        z,
        y,
        penalty,
        iterations,
        primal,
        dual,
        converged,
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Cached LDL^T of `2 diag(a) + penalty * L`.
struct Factor<'g> {
    graph: &'g Graph,
    ldl: LdlNumeric<f64, usize>,
}

impl<'g> Factor<'g> {
    fn new(graph: &'g Graph, a: &[f64], penalty: f64) -> Result<Self> {
        let mat = system_matrix(graph, a, penalty);
        let ldl = Ldl::new()
            .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
            .check_symmetry(sprs::SymmetryCheck::DontCheckSymmetry)
            .numeric(mat.view())
            .map_err(|e| DenoiseError::Factorization(e.to_string()))?;
        Ok(Factor { graph, ldl })
    }

    fn refactor(&mut self, a: &[f64], penalty: f64) -> Result<()> {
        let mat = system_matrix(self.graph, a, penalty);
        self.ldl
            .update(mat.view())
            .map_err(|e| DenoiseError::Factorization(e.to_string()))
    }

    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.ldl.solve(rhs)
    }
}

fn system_matrix(g: &Graph, a: &[f64], penalty: f64) -> CsMat<f64> {
    let n = g.n();
    let mut tri = TriMat::with_capacity((n, n), n + 2 * g.m());
    for i in 0..n {
        tri.add_triplet(i, i, 2.0 * a[i] + penalty * g.degree(i) as f64);
    }
    for &(i, j) in g.edges() {
        tri.add_triplet(i, j, -penalty);
        tri.add_triplet(j, i, -penalty);
    }
    tri.to_csc()
}
