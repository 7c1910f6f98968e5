use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{laplacian_dense, Graph, GraphError, Result};
use crate::rng::seeded;

/// Default size cap for the dense pseudoinverse behind the exact `rho`.
pub const DEFAULT_EXACT_RHO_CAP: usize = 2000;

/// Largest `n` handled by the dense eigen-solver in [`fiedler_value`].
const DENSE_EIGEN_MAX_N: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhoMode {
    /// Maximum column norm of the pseudoinverse of the incidence matrix.
    Exact,
    /// `sqrt(2) / lambda_2`.
    Bound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FiedlerValue {
    pub value: f64,
    pub connected: bool,
    /// Lanczos steps taken (0 for the dense path).
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub lambda2: f64,
    pub rho: f64,
    pub rho_mode: RhoMode,
    pub d_max: usize,
}

/// Second-smallest eigenvalue of the unweighted Laplacian.
///
/// Disconnected graphs report `0` with `connected = false`. Small graphs use a
/// dense symmetric eigendecomposition; larger ones run shift-invert Lanczos on
/// the complement of the constant vector, with the inner solves done by
/// Jacobi-preconditioned conjugate gradients.
pub fn fiedler_value(g: &Graph) -> Result<FiedlerValue> {
    let n = g.n();
    if n < 2 {
        return Err(GraphError::TooFewNodes { n, min: 2 });
    }
    if !g.is_connected() {
        return Ok(FiedlerValue {
            value: 0.0,
            connected: false,
            iterations: 0,
        });
    }
    if n <= DENSE_EIGEN_MAX_N {
        let mut ev: Vec<f64> = SymmetricEigen::new(laplacian_dense(g)).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        return Ok(FiedlerValue {
            value: ev[1],
            connected: true,
            iterations: 0,
        });
    }
    let (value, iterations) = lanczos_fiedler(g, 1e-11, 400)?;
    Ok(FiedlerValue {
        value,
        connected: true,
        iterations,
    })
}

fn laplacian_apply(g: &Graph, x: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = g.degree(i) as f64 * x[i];
        for &(j, _) in g.neighbors(i) {
            acc -= x[j];
        }
        *o = acc;
    }
}

fn project_out_mean(x: &mut [f64]) {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter_mut().for_each(|v| *v -= mean);
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves `L y = b` for `b` orthogonal to the constant vector (connected graph).
fn solve_laplacian(g: &Graph, b: &[f64], rel_tol: f64) -> Vec<f64> {
    let n = b.len();
    let inv_diag: Vec<f64> = (0..n).map(|i| 1.0 / g.degree(i) as f64).collect();
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&inv_diag).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut ap = vec![0.0; n];
    let mut rz = dot(&r, &z);
    let target = rel_tol * dot(b, b).sqrt();
    for _ in 0..10 * n {
        if dot(&r, &r).sqrt() <= target {
            break;
        }
        laplacian_apply(g, &p, &mut ap);
        let alpha = rz / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] * inv_diag[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    project_out_mean(&mut x);
    x
}

fn lanczos_fiedler(g: &Graph, tol: f64, max_steps: usize) -> Result<(f64, usize)> {
    let n = g.n();
    let max_steps = max_steps.min(n - 1);
    let mut rng = seeded(0x5eed_f1ed);
    let mut q: Vec<f64> = (0..n).map(|_| rng.random::<f64>() - 0.5).collect();
    project_out_mean(&mut q);
    let norm = dot(&q, &q).sqrt();
    q.iter_mut().for_each(|v| *v /= norm);

    let mut basis: Vec<Vec<f64>> = vec![q];
    let mut alphas = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut last_residual = f64::INFINITY;
    for step in 0..max_steps {
        let mut w = solve_laplacian(g, &basis[step], 1e-13);
        let a = dot(&w, &basis[step]);
        alphas.push(a);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for v in &basis {
                let c = dot(&w, v);
                w.iter_mut().zip(v).for_each(|(x, y)| *x -= c * y);
            }
            project_out_mean(&mut w);
        }
        let b = dot(&w, &w).sqrt();

        let k = alphas.len();
        if k >= 2 && (k % 4 == 0 || b < 1e-14 || k == max_steps) {
            let t = DMatrix::from_fn(k, k, |i, j| {
                if i == j {
                    alphas[i]
                } else if i + 1 == j {
                    betas[i]
                } else if j + 1 == i {
                    betas[j]
                } else {
                    0.0
                }
            });
            let eig = SymmetricEigen::new(t);
            let (idx, theta) = eig
                .eigenvalues
                .iter()
                .copied()
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .expect("non-empty tridiagonal");
            let residual = (b * eig.eigenvectors[(k - 1, idx)]).abs();
            last_residual = residual / theta;
            if residual <= tol * theta || b < 1e-14 {
                return Ok((1.0 / theta, k));
            }
        }
        if b < 1e-14 {
            break;
        }
        betas.push(b);
        w.iter_mut().for_each(|v| *v /= b);
        basis.push(w);
    }
    Err(GraphError::EigenNoConvergence {
        iterations: alphas.len(),
        residual: last_residual,
    })
}

/// Dense Moore-Penrose pseudoinverse of the Laplacian of a connected graph.
fn laplacian_pinv(g: &Graph) -> Result<DMatrix<f64>> {
    let n = g.n();
    let shift = 1.0 / n as f64;
    let shifted = laplacian_dense(g).add_scalar(shift);
    let chol = shifted.cholesky().ok_or(GraphError::Disconnected { components: 2 })?;
    Ok(chol.inverse().add_scalar(-shift))
}

/// Inverse scaling factor `rho` with the default exact-mode size cap.
pub fn inverse_scaling_factor(g: &Graph, mode: RhoMode) -> Result<f64> {
    inverse_scaling_factor_capped(g, mode, DEFAULT_EXACT_RHO_CAP)
}

/// Inverse scaling factor `rho`.
///
/// Exact mode uses `D^+ = L^+ D^T`, so the column of `D^+` for edge `(i, j)` is
/// `L^+ e_i - L^+ e_j`.
pub fn inverse_scaling_factor_capped(g: &Graph, mode: RhoMode, cap: usize) -> Result<f64> {
    let (components, _) = g.components();
    if components != 1 {
        return Err(GraphError::Disconnected { components });
    }
    if g.n() < 2 {
        return Err(GraphError::TooFewNodes { n: g.n(), min: 2 });
    }
    match mode {
        RhoMode::Bound => Ok(std::f64::consts::SQRT_2 / fiedler_value(g)?.value),
        RhoMode::Exact => {
            if g.n() > cap {
                return Err(GraphError::TooLargeForExact { n: g.n(), cap });
            }
            let pinv = laplacian_pinv(g)?;
            let rho = g
                .edges()
                .iter()
                .map(|&(i, j)| (pinv.column(i) - pinv.column(j)).norm())
                .fold(0.0, f64::max);
            Ok(rho)
        }
    }
}

/// Lower bound `1 / (2 min(sqrt(d_max), sqrt(|T|)))` on the compatibility factor.
pub fn compatibility_factor_bound(d_max: usize, t_size: usize) -> Result<f64> {
    if t_size == 0 {
        return Err(GraphError::InvalidParameter("|T| must be at least 1".into()));
    }
    let m = (d_max as f64).sqrt().min((t_size as f64).sqrt());
    Ok(1.0 / (2.0 * m))
}

pub fn spectral_summary(g: &Graph, mode: RhoMode) -> Result<SpectralSummary> {
    let lambda2 = fiedler_value(g)?.value;
    Ok(SpectralSummary {
        lambda2,
        rho: inverse_scaling_factor(g, mode)?,
        rho_mode: mode,
        d_max: g.max_degree(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_graph, GraphModel};

    fn path(n: usize) -> Graph {
        Graph::new(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
    }

    #[test]
    fn fiedler_examples() {
        assert!((fiedler_value(&path(2)).unwrap().value - 2.0).abs() < 1e-12);
        let k3 = generate_graph(&GraphModel::Complete, 3, 0).unwrap();
        assert!((fiedler_value(&k3).unwrap().value - 3.0).abs() < 1e-12);
        let star = generate_graph(&GraphModel::Star, 5, 0).unwrap();
        assert!((fiedler_value(&star).unwrap().value - 1.0).abs() < 1e-12);
        let split = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        let f = fiedler_value(&split).unwrap();
        assert!(!f.connected);
        assert_eq!(f.value, 0.0);
    }

    #[test]
    fn lanczos_matches_dense() {
        for (model, n) in [
            (GraphModel::Knn { k: 5 }, 300),
            (GraphModel::SmallWorld { m: 4, p: 0.2 }, 250),
            (GraphModel::PreferentialAttachment { m: 2 }, 200),
        ] {
            let g = generate_graph(&model, n, 11).unwrap();
            if !g.is_connected() {
                continue;
            }
            let dense = fiedler_value(&g).unwrap().value;
            let (iter, _) = lanczos_fiedler(&g, 1e-11, 400).unwrap();
            assert!(
                ((iter - dense) / dense).abs() < 1e-8,
                "{model:?}: lanczos {iter} dense {dense}"
            );
        }
    }

    #[test]
    fn path_cycle_closed_forms_large() {
        // path on n nodes: lambda_2 = 2 - 2 cos(pi / n)
        let n = 800;
        let g = path(n);
        let exact = 2.0 - 2.0 * (std::f64::consts::PI / n as f64).cos();
        let got = fiedler_value(&g).unwrap().value;
        assert!(((got - exact) / exact).abs() < 1e-8, "{got} vs {exact}");
    }

    #[test]
    fn rho_examples() {
        let r = inverse_scaling_factor(&path(2), RhoMode::Exact).unwrap();
        assert!((r - 0.5f64.sqrt()).abs() < 1e-12);
        let r = inverse_scaling_factor(&path(2), RhoMode::Bound).unwrap();
        assert!((r - std::f64::consts::SQRT_2 / 2.0).abs() < 1e-12);
        let k3 = generate_graph(&GraphModel::Complete, 3, 0).unwrap();
        let r = inverse_scaling_factor(&k3, RhoMode::Bound).unwrap();
        assert!((r - 0.4714045).abs() < 1e-7);
        let split = Graph::new(4, [(0, 1), (2, 3)]).unwrap();
        assert!(matches!(
            inverse_scaling_factor(&split, RhoMode::Exact),
            Err(GraphError::Disconnected { components: 2 })
        ));
        assert!(matches!(
            inverse_scaling_factor_capped(&path(10), RhoMode::Exact, 5),
            Err(GraphError::TooLargeForExact { .. })
        ));
    }

    #[test]
    fn kappa_examples() {
        assert!((compatibility_factor_bound(3, 2).unwrap() - 0.3535534).abs() < 1e-7);
        assert_eq!(compatibility_factor_bound(1, 5).unwrap(), 0.5);
        assert_eq!(compatibility_factor_bound(9, 4).unwrap(), 0.25);
        assert!(compatibility_factor_bound(3, 0).is_err());
    }
}
