//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). Set `ACCEPTANCE_ONLY=5,9` to
//! run a subset. Criteria listed in `EXPECTED_FAILURES` are reported as FAIL
//! but do not fail the process.

use std::time::Instant;

use epitv::denoise::{objective_value, oracle_denoise, tv_denoise, DenoiseProblem, SolverConfig};
use epitv::epidemic::{
    forecast, lipschitz_constant, omega_matrix, patient_zero_state, simulate, sis_step, EpidemicParams,
    EpidemicState, ObservationSet, PatientZero,
};
use epitv::estimation::{build_phi, estimate_params, RankFlag};
use epitv::graph::{
    contact_weights, fiedler_value, generate_graph, inverse_scaling_factor, load_edge_list, write_edge_list, Graph,
    GraphModel, RhoMode,
};
use epitv::harness::{median, run_experiment, ExperimentConfig, Report};
use epitv::rng;
use rand::Rng;

const EXPECTED_FAILURES: &[u32] = &[7];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn random_connected(r: &mut rng::Rng, n: usize, extra: usize) -> Graph {
    let mut edges: Vec<(usize, usize)> = (1..n).map(|i| (r.random_range(0..i), i)).collect();
    for _ in 0..extra {
        let (a, b) = (r.random_range(0..n), r.random_range(0..n));
        if a != b {
            edges.push((a, b));
        }
    }
    Graph::new(n, edges).unwrap()
}

fn experiment(text: &str) -> Report {
    let cfg = ExperimentConfig::parse(text).unwrap();
    run_experiment(&cfg).unwrap()
}

fn med(report: &Report, column: &str) -> f64 {
    median(&report.column(column, None))
}

fn criterion_1() -> Outcome {
    let mut r = rng::seeded(101);
    let solver = SolverConfig::default();
    let (mut worst_obj, mut worst_coord, mut unique) = (0.0f64, 0.0f64, 0);
    for k in 0..50 {
        let g = match k % 3 {
            0 => {
                let n = r.random_range(2..=6);
                Graph::new(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
            }
            1 => {
                let n = r.random_range(2..=6);
                Graph::new(n, (1..n).map(|i| (0, i))).unwrap()
            }
            _ => Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap(),
        };
        let lambda = [0.01, 0.1, 0.5][r.random_range(0..3)];
        let y: Vec<f64> = (0..g.n()).map(|_| f64::from(u8::from(r.random_bool(0.5)))).collect();
        let prob = DenoiseProblem::uniform(&g, &y, lambda);
        let oracle = oracle_denoise(&prob).unwrap();
        let p = tv_denoise(&y, &g, lambda, &solver).unwrap().p_hat;
        worst_obj = worst_obj.max((objective_value(&p, &prob) - objective_value(&oracle, &prob)).abs());
        // stable under a tiny target perturbation means the minimizer is unique
        let nudged: Vec<f64> = y.iter().map(|v| (v + r.random_range(-1e-7..1e-7)).clamp(0.0, 1.0)).collect();
        let moved = max_abs_diff(&oracle_denoise(&DenoiseProblem::uniform(&g, &nudged, lambda)).unwrap(), &oracle);
        if moved <= 1e-5 {
            unique += 1;
            worst_coord = worst_coord.max(max_abs_diff(&p, &oracle));
        }
    }
    outcome(
        worst_obj <= 1e-6 && worst_coord <= 1e-3,
        format!("max objective gap {worst_obj:.2e}, max coordinate gap {worst_coord:.2e} over {unique} unique instances"),
    )
}

fn criterion_2() -> Outcome {
    let mut r = rng::seeded(202);
    let solver = SolverConfig::default();
    let (mut identity, mut saturation) = (0.0f64, 0.0f64);
    for _ in 0..100 {
        let n = r.random_range(2..=200);
        let extra = r.random_range(0..n);
        let g = random_connected(&mut r, n, extra);
        let y: Vec<f64> = (0..n).map(|_| f64::from(u8::from(r.random_bool(0.3)))).collect();
        let p0 = tv_denoise(&y, &g, 0.0, &solver).unwrap().p_hat;
        identity = identity.max(max_abs_diff(&p0, &y));
        let mean = y.iter().sum::<f64>() / n as f64;
        let pinf = tv_denoise(&y, &g, 1e6, &solver).unwrap().p_hat;
        saturation = saturation.max(pinf.iter().map(|p| (p - mean).abs()).fold(0.0, f64::max));
    }
    outcome(
        identity <= 1e-8 && saturation <= 1e-4,
        format!("lambda=0 max deviation {identity:.2e}, lambda=1e6 max deviation {saturation:.2e}"),
    )
}

fn criterion_3() -> Outcome {
    let mut r = rng::seeded(303);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..100 {
        let n = r.random_range(2..=50);
        let extra = r.random_range(0..2 * n);
        let g = random_connected(&mut r, n, extra);
        let rho = inverse_scaling_factor(&g, RhoMode::Exact).unwrap();
        let bound = std::f64::consts::SQRT_2 / fiedler_value(&g).unwrap().value;
        worst = worst.max(rho - bound);
    }
    outcome(worst <= 1e-9, format!("max (rho - sqrt2/lambda2) = {worst:.3e}"))
}

fn criterion_4() -> Outcome {
    let mut r = rng::seeded(404);
    let mut escaped = 0usize;
    let mut worst_slack = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let n = r.random_range(2..=30);
        let extra = r.random_range(0..n);
        let g = random_connected(&mut r, n, extra);
        let weighted = Graph::with_weights(n, g.edges().iter().map(|&(i, j)| (i, j, r.random_range(0.01..2.0)))).unwrap();
        let omega = omega_matrix(&weighted);
        let rows: Vec<f64> = omega.outer_iterator().map(|row| row.data().iter().sum()).collect();
        let beta: Vec<f64> = rows.iter().map(|s| r.random_range(0.0..0.999) / s.max(1.0)).collect();
        let gamma: Vec<f64> = (0..n).map(|_| r.random_range(0.001..0.999)).collect();
        let params = EpidemicParams::new(beta, gamma, omega).unwrap().checked().unwrap();
        let p0: Vec<f64> = (0..n).map(|_| r.random_range(0.0..=1.0)).collect();
        for s in simulate(&EpidemicState::sis(p0.clone()), &params, 100).unwrap() {
            escaped += s.p.iter().filter(|&&x| !(0.0..=1.0).contains(&x)).count();
        }
        let q: Vec<f64> = (0..n).map(|_| r.random_range(0.0..=1.0)).collect();
        let fp = sis_step(&EpidemicState::sis(p0.clone()), &params).unwrap().p;
        let fq = sis_step(&EpidemicState::sis(q.clone()), &params).unwrap().p;
        let l1 = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
        let slack = l1(&fp, &fq) - lipschitz_constant(&params) * l1(&p0, &q);
        worst_slack = worst_slack.max(slack);
    }
    outcome(
        escaped == 0 && worst_slack <= 1e-10,
        format!("{escaped} entries left [0,1]; max contraction slack {worst_slack:.3e}"),
    )
}

fn nowcast_config(scenario: &str, k: usize, beta: f64, k0: usize, extra: &str) -> String {
    format!(
        "scenario = {scenario}\ngraph = knn\nk = {k}\nn = 1000\nbeta = {beta}\ngamma = 0.1\nk0 = {k0}\nreplicates = 100\nseed = 2024\n{extra}"
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let report = experiment(&nowcast_config("denoise", 5, 0.5, 30, ""));
    let (tv, naive) = (med(&report, "l1_tv"), med(&report, "l1_naive"));
    let secs = start.elapsed().as_secs_f64();
    outcome(
        tv <= 0.65 * naive,
        format!("median l1 TV {tv:.3} vs naive {naive:.3} (ratio {:.3}), {secs:.0} s", tv / naive),
    )
}

fn criterion_6() -> Outcome {
    let report = experiment(&nowcast_config("denoise", 2, 0.25, 10, ""));
    let (tv, naive) = (med(&report, "l1_tv"), med(&report, "l1_naive"));
    outcome(
        (1.5..=2.5).contains(&tv) && tv <= naive,
        format!("median l1 TV {tv:.3} vs naive {naive:.3} at beta = 0.25"),
    )
}

fn criterion_7() -> Outcome {
    let report = experiment(&nowcast_config("params", 5, 0.8, 30, "window = 20\n"));
    let (b, g, r0) = (med(&report, "beta_tv"), med(&report, "gamma_tv"), med(&report, "r0_tv"));
    let (bn, gn) = (med(&report, "beta_naive"), med(&report, "gamma_naive"));
    let pass = (0.72..=0.98).contains(&b)
        && (0.09..=0.14).contains(&g)
        && (6.5..=8.5).contains(&r0)
        && (b - 0.8).abs() <= (bn - 0.8).abs();
    outcome(
        pass,
        format!("median TV beta {b:.3}, gamma {g:.3}, R0 {r0:.2}; naive beta {bn:.3}, gamma {gn:.3}"),
    )
}

fn criterion_8() -> Outcome {
    let mut r = rng::seeded(808);
    let (mut full, mut worst) = (0, 0.0f64);
    for k in 0..100 {
        let n = r.random_range(10..=200);
        let g = contact_weights(&generate_graph(&GraphModel::Knn { k: r.random_range(2..=6) }, n, k).unwrap());
        let beta = r.random_range(0.05..0.99);
        let gamma = r.random_range(0.01..0.9);
        let params = EpidemicParams::from_graph(&g, beta, gamma).unwrap().checked().unwrap();
        let p0 = patient_zero_state(n, PatientZero::Seeded(k)).unwrap();
        let states: Vec<Vec<f64>> = simulate(&p0, &params, r.random_range(2..=30)).unwrap().into_iter().map(|s| s.p).collect();
        let est = estimate_params(&build_phi(&states, &params.omega).unwrap()).unwrap();
        if est.rank_flag == RankFlag::Full {
            full += 1;
            worst = worst.max((est.beta_hat - beta).abs()).max((est.gamma_hat - gamma).abs());
        }
    }
    outcome(full > 0 && worst <= 1e-8, format!("max rate error {worst:.2e} over {full} full-rank trajectories"))
}

fn criterion_9() -> Outcome {
    let report = experiment(&nowcast_config("missing", 5, 0.5, 20, "missing_fraction = 0.3\n"));
    let (tv, naive) = (med(&report, "l1_tv"), med(&report, "l1_naive"));
    outcome(tv < naive, format!("median l1 masked TV {tv:.3} vs fill-zero {naive:.3}"))
}

fn criterion_10() -> Outcome {
    let mut r = rng::seeded(1010);
    let mut worst = 0.0f64;
    for k in 0..20 {
        let g = contact_weights(&generate_graph(&GraphModel::Knn { k: 5 }, 300, k).unwrap());
        let params = EpidemicParams::from_graph(&g, r.random_range(0.1..0.9), r.random_range(0.05..0.5)).unwrap();
        let traj = simulate(&patient_zero_state(300, PatientZero::Seeded(k)).unwrap(), &params, 25).unwrap();
        for h in 0..5 {
            let f = forecast(&traj[20].p, &params, h).unwrap();
            worst = worst.max(max_abs_diff(&f, &traj[20 + h].p));
        }
    }
    let report = experiment(&nowcast_config("forecast", 5, 0.5, 30, "horizon = 2\n"));
    let (tv, naive) = (med(&report, "l2sq_tv"), med(&report, "l2sq_naive"));
    outcome(
        worst <= 1e-12 && tv < naive,
        format!("exact-state forecast deviation {worst:.1e}; h=2 median l2^2 TV {tv:.3} vs naive {naive:.3}"),
    )
}

fn criterion_11() -> Outcome {
    let n = 10_000;
    let g = contact_weights(&generate_graph(&GraphModel::Knn { k: 5 }, n, 11).unwrap());
    let params = EpidemicParams::from_graph(&g, 0.5, 0.1).unwrap();
    let traj = simulate(&patient_zero_state(n, PatientZero::Seeded(11)).unwrap(), &params, 30).unwrap();
    let obs = ObservationSet::draw(&traj[30].p, 0.0, None, 11).unwrap();
    let start = Instant::now();
    let res = tv_denoise(&obs.y, &g, 1e-3, &SolverConfig::with_tol(1e-6)).unwrap();
    let secs = start.elapsed().as_secs_f64();

    // edge-list path at the size of the large real-world network (informational)
    let big = generate_graph(&GraphModel::Knn { k: 5 }, 22_900, 12).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("big.txt");
    write_edge_list(&big, std::fs::File::create(&path).unwrap(), false).unwrap();
    let loaded = load_edge_list(&path, false).unwrap();
    let y: Vec<f64> = {
        let mut r = rng::seeded(13);
        (0..loaded.n()).map(|_| f64::from(u8::from(r.random_bool(0.1)))).collect()
    };
    let big_start = Instant::now();
    let big_res = tv_denoise(&y, &loaded, 1e-4, &SolverConfig::with_tol(1e-6)).unwrap();
    let big_secs = big_start.elapsed().as_secs_f64();
    outcome(
        secs < 60.0 && res.converged,
        format!(
            "n=10000 solve {secs:.1} s, {} iterations, converged {}; edge-list n={} m={} solve {big_secs:.1} s, converged {}",
            res.iterations,
            res.converged,
            loaded.n(),
            loaded.m(),
            big_res.converged
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 11] = [
        (1, "oracle equivalence", criterion_1),
        (2, "identity and saturation", criterion_2),
        (3, "inverse scaling factor bound", criterion_3),
        (4, "state invariance and contraction", criterion_4),
        (5, "denoising improvement", criterion_5),
        (6, "small-epidemic regime", criterion_6),
        (7, "parameter recovery", criterion_7),
        (8, "exact noiseless recovery", criterion_8),
        (9, "missing data", criterion_9),
        (10, "forecast consistency", criterion_10),
        (11, "performance", criterion_11),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|t| t.trim().parse().ok()).collect());
    // `cargo test -- --list` and filters from other targets must not run the suite
    let args: Vec<String> = std::env::args().skip(1).collect();
    if args.iter().any(|a| a == "--list") {
        return;
    }
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let status = if out.pass { "PASS" } else { "FAIL" };
        let note = match (out.pass, EXPECTED_FAILURES.contains(&id)) {
            (false, true) => " [expected failure]",
            (true, true) => " [expected failure passed]",
            _ => "",
        };
        println!(
            "criterion {id:>2} {status} {name}: {} ({:.1} s){note}",
            out.detail,
            start.elapsed().as_secs_f64()
        );
        if !out.pass && !EXPECTED_FAILURES.contains(&id) {
            unexpected.push(id);
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}
