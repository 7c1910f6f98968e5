//! Reference minimizer for small denoising problems.
//!
//! Works on the dual
//!
//! ```text
//! maximize  v^T D t - sum_i (D^T v)_i^2 / (4 a_i)   subject to |v_e| <= lambda b_e
//! ```
//!
//! by exact cyclic coordinate ascent (each edge update is a clipped scalar
//! quadratic), then recovers `p = t - D^T v / (2a)`. This shares no code with
//! the ADMM solver and needs no step sizes.

use super::{clamp_unit, DenoiseError, DenoiseProblem, Result};

pub const ORACLE_MAX_NODES: usize = 8;
pub const ORACLE_MAX_EDGES: usize = 12;

const MAX_SWEEPS: usize = 2_000_000;
const STEP_TOL: f64 = 1e-15;

/// Minimizer of the weighted objective, clamped to `[0, 1]`.
pub fn oracle_denoise(problem: &DenoiseProblem<'_>) -> Result<Vec<f64>> {
    let g = problem.graph;
    let (n, m) = (g.n(), g.m());
    if n > ORACLE_MAX_NODES || m > ORACLE_MAX_EDGES {
        return Err(DenoiseError::OracleTooLarge { n, m });
    }
    problem.validate()?;
    let a = &problem.node_weights;
    if a.iter().any(|&w| w <= 0.0) {
        return Err(DenoiseError::OracleZeroWeight);
    }
    let t = &problem.targets;
    let bound: Vec<f64> = problem.edge_weights.iter().map(|b| problem.lambda * b).collect();

    // w = D^T v, kept in sync with v
    let mut v = vec![0.0; m];
    let mut w = vec![0.0; n];
    for _ in 0..MAX_SWEEPS {
        let mut largest = 0.0f64;
        for (e, &(i, j)) in g.edges().iter().enumerate() {
            let (hi, hj) = (0.5 / a[i], 0.5 / a[j]);
            // w without edge e's contribution
            let wi = w[i] - v[e];
            let wj = w[j] + v[e];
            let unclipped = ((t[i] - t[j]) - wi * hi + wj * hj) / (hi + hj);
            let new = unclipped.clamp(-bound[e], bound[e]);
            let step = new - v[e];
            if step != 0.0 {
                v[e] = new;
                w[i] += step;
                w[j] -= step;
                largest = largest.max(step.abs());
            }
        }
        if largest <= STEP_TOL {
            break;
        }
    }
    let p: Vec<f64> = (0..n).map(|i| t[i] - w[i] / (2.0 * a[i])).collect();
    Ok(clamp_unit(&p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::denoise::objective_value;
    use crate::graph::Graph;

    fn path(n: usize) -> Graph {
        Graph::new(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
    }

    #[test]
    fn two_node_closed_form() {
        let g = path(2);
        let p = oracle_denoise(&DenoiseProblem::uniform(&g, &[1.0, 0.0], 0.2)).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-12 && (p[1] - 0.2).abs() < 1e-12);
    }

    #[test]
    fn zero_lambda_returns_clamped_targets() {
        let g = path(3);
        let p = oracle_denoise(&DenoiseProblem::uniform(&g, &[0.3, 1.0, 0.0], 0.0)).unwrap();
        assert_eq!(p, vec![0.3, 1.0, 0.0]);
    }

    /// Enumerates every fusion pattern of a 3-path and keeps the best
    /// stationary point of each piece.
    fn path3_enumeration(y: [f64; 3], lambda: f64) -> f64 {
        let g = path(3);
        let prob = DenoiseProblem::uniform(&g, &y, lambda);
        let mut best = f64::INFINITY;
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        // all fused
        let c = mean(&y);
        best = best.min(objective_value(&[c; 3], &prob));
        // fusions {0,1},{2} and {0},{1,2}, plus none; signs of jumps enumerated
        let shift = 1.5 * lambda; // n * lambda / 2 with n = 3
        for s1 in [-1.0, 1.0] {
            let c01 = mean(&y[..2]) - s1 * shift / 2.0;
            let c2 = y[2] + s1 * shift;
            best = best.min(objective_value(&[c01, c01, c2], &prob));
            let c0 = y[0] - s1 * shift;
            let c12 = mean(&y[1..]) + s1 * shift / 2.0;
            best = best.min(objective_value(&[c0, c12, c12], &prob));
            for s2 in [-1.0, 1.0] {
                let p = [y[0] - s1 * shift, y[1] + (s1 - s2) * shift, y[2] + s2 * shift];
                best = best.min(objective_value(&p, &prob));
            }
        }
        best
    }

    #[test]
    fn path3_matches_fusion_enumeration() {
        let g = path(3);
        let y = [1.0, 1.0, 0.0];
        let lambda = 1.0 / 6.0;
        let prob = DenoiseProblem::uniform(&g, &y, lambda);
        let p = oracle_denoise(&prob).unwrap();
        let got = objective_value(&p, &prob);
        assert!((got - path3_enumeration(y, lambda)).abs() < 1e-12, "{p:?}");
    }

    #[test]
    fn size_cap_and_zero_weight() {
        let big = path(9);
        assert!(matches!(
            oracle_denoise(&DenoiseProblem::uniform(&big, &[0.0; 9], 0.1)),
            Err(DenoiseError::OracleTooLarge { .. })
        ));
        let g = path(2);
        let prob = DenoiseProblem::masked(&g, &[1.0, 0.0], &[1.0, 0.0], 0.1);
        assert!(matches!(oracle_denoise(&prob), Err(DenoiseError::OracleZeroWeight)));
    }
}
