mod common;

use common::*;
use epitv::denoise::{
    clamp_unit, objective_value, oracle_denoise, tv_denoise, tv_denoise_masked, tv_denoise_weighted,
    DenoiseProblem, SolverConfig,
};
use epitv::graph::{edge_differences, random_permutation, Graph};
use proptest::prelude::*;

fn solver() -> SolverConfig {
    SolverConfig::default()
}

fn graph_and_signal(n_max: usize, extra: usize) -> impl Strategy<Value = (Graph, Vec<f64>)> {
    connected_graph(n_max, extra).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), unit_vector(n))
    })
}

fn graph_and_bits(n_max: usize, extra: usize) -> impl Strategy<Value = (Graph, Vec<f64>)> {
    connected_graph(n_max, extra).prop_flat_map(|g| {
        let n = g.n();
        (Just(g), bits(n))
    })
}

fn tv(g: &Graph, p: &[f64]) -> f64 {
    edge_differences(g, p).iter().map(|d| d.abs()).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn output_lies_in_unit_interval((g, y) in graph_and_bits(40, 20), lambda in 0.0..0.5f64) {
        let r = tv_denoise(&y, &g, lambda, &solver()).unwrap();
        prop_assert!(r.p_hat.iter().all(|&p| (0.0..=1.0).contains(&p)));
    }

    #[test]
    fn zero_lambda_returns_clamped_signal((g, y) in graph_and_signal(60, 30)) {
        let r = tv_denoise(&y, &g, 0.0, &solver()).unwrap();
        prop_assert!(max_abs_diff(&r.p_hat, &clamp_unit(&y)) <= 1e-8);
    }

    #[test]
    fn huge_lambda_fuses_to_mean((g, y) in graph_and_bits(60, 30)) {
        let r = tv_denoise(&y, &g, 1e6, &solver()).unwrap();
        let mean = y.iter().sum::<f64>() / y.len() as f64;
        prop_assert!(r.p_hat.iter().all(|p| (p - mean).abs() <= 1e-4), "{:?} vs {mean}", r.p_hat);
    }

    #[test]
    fn matches_oracle_on_small_graphs((g, y) in graph_and_signal(6, 3), lambda in prop::sample::select(vec![0.01, 0.1, 0.5])) {
        prop_assume!(g.m() <= 12);
        let prob = DenoiseProblem::uniform(&g, &y, lambda);
        let oracle = oracle_denoise(&prob).unwrap();
        let r = tv_denoise(&y, &g, lambda, &solver()).unwrap();
        prop_assert!((objective_value(&r.p_hat, &prob) - objective_value(&oracle, &prob)).abs() <= 1e-6);
        // positive node weights make the objective strictly convex
        prop_assert!(max_abs_diff(&r.p_hat, &oracle) <= 1e-3);
    }

    #[test]
    fn relabeling_commutes((g, y) in graph_and_signal(40, 20), lambda in 0.001..0.3f64, seed in any::<u64>()) {
        let perm = random_permutation(g.n(), seed);
        let gp = g.permuted(&perm).unwrap();
        let mut yp = vec![0.0; g.n()];
        for (i, &pi) in perm.iter().enumerate() {
            yp[pi] = y[i];
        }
        let a = tv_denoise(&y, &g, lambda, &solver()).unwrap();
        let b = tv_denoise(&yp, &gp, lambda, &solver()).unwrap();
        let mapped: Vec<f64> = (0..g.n()).map(|i| b.p_hat[perm[i]]).collect();
        prop_assert!(max_abs_diff(&a.p_hat, &mapped) <= 1e-8, "{}", max_abs_diff(&a.p_hat, &mapped));
    }

    #[test]
    fn full_mask_and_uniform_weights_reduce((g, y) in graph_and_bits(40, 20), lambda in 0.0..0.3f64) {
        let plain = tv_denoise(&y, &g, lambda, &solver()).unwrap();
        let masked = tv_denoise_masked(&y, &vec![1.0; g.n()], &g, lambda, &solver()).unwrap();
        let n = g.n() as f64;
        let prob = DenoiseProblem {
            graph: &g,
            targets: y.clone(),
            node_weights: vec![1.0 / n; g.n()],
            edge_weights: vec![1.0; g.m()],
            lambda,
        };
        let weighted = tv_denoise_weighted(&prob, &solver()).unwrap();
        prop_assert!(max_abs_diff(&plain.p_hat, &masked.p_hat) <= 1e-8);
        prop_assert!(max_abs_diff(&plain.p_hat, &weighted.p_hat) <= 1e-8);
    }

    #[test]
    fn total_variation_shrinks_with_lambda((g, y) in graph_and_bits(40, 20), a in 0.0..0.2f64, b in 0.0..0.2f64) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi > lo);
        let p_lo = tv_denoise(&y, &g, lo, &solver()).unwrap().p_hat;
        let p_hi = tv_denoise(&y, &g, hi, &solver()).unwrap().p_hat;
        prop_assert!(tv(&g, &p_hi) <= tv(&g, &p_lo) + 1e-6);
    }

    #[test]
    fn masked_solutions_are_optimal((g, y) in graph_and_bits(6, 3), mask in bits(6), lambda in 0.01..0.5f64) {
        // hidden nodes make the minimizer non-unique, so only the objective is compared
        let mask = &mask[..g.n()];
        prop_assume!(mask.contains(&1.0) && g.m() <= 12);
        let prob = DenoiseProblem::masked(&g, &y, mask, lambda);
        let r = tv_denoise_masked(&y, mask, &g, lambda, &solver()).unwrap();
        // the oracle needs positive weights; give hidden nodes a vanishing one
        let eps = DenoiseProblem {
            node_weights: prob.node_weights.iter().map(|&w| w.max(1e-12)).collect(),
            ..prob.clone()
        };
        let oracle = oracle_denoise(&eps).unwrap();
        prop_assert!(objective_value(&r.p_hat, &prob) <= objective_value(&oracle, &prob) + 1e-6);
    }
}

#[test]
fn path_example_fuses_two_ones() {
    // stationarity with weights 1/3: fused pair at 1 - 3 lambda / 4, last node at 3 lambda / 2
    let g = path(3);
    let r = tv_denoise(&[1.0, 1.0, 0.0], &g, 1.0 / 6.0, &solver()).unwrap();
    assert!(max_abs_diff(&r.p_hat, &[0.875, 0.875, 0.25]) < 1e-6, "{:?}", r.p_hat);
}
