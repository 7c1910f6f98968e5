use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Graph, GraphError, Result};
use crate::rng::seeded;

/// Random and deterministic graph families used in the experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum GraphModel {
    /// Each pair independently with probability `p`.
    ErdosRenyi { p: f64 },
    /// Symmetrized k-nearest-neighbour graph on uniform points in the unit square.
    Knn { k: usize },
    /// Watts-Strogatz: ring lattice of degree `m` (m/2 each side), each edge
    /// rewired with probability `p`.
    SmallWorld { m: usize, p: f64 },
    /// Barabasi-Albert: `m` degree-proportional edges per arriving node.
    PreferentialAttachment { m: usize },
    /// Stochastic block model with block `sizes` and symmetric probability matrix.
    Sbm { sizes: Vec<usize>, probs: Vec<Vec<f64>> },
    Grid2d { rows: usize, cols: usize },
    Star,
    Complete,
}

fn check_prob(name: &str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(GraphError::InvalidParameter(format!("{name} = {p} outside [0, 1]")))
    }
}

/// Samples a graph of the requested family. Deterministic in `(model, n, seed)`.
pub fn generate_graph(model: &GraphModel, n: usize, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(GraphError::TooFewNodes { n, min: 2 });
    }
    let mut rng = seeded(seed);
    match *model {
        GraphModel::ErdosRenyi { p } => {
            check_prob("p", p)?;
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            Graph::new(n, edges)
        }
        GraphModel::Knn { k } => {
            if k == 0 || k >= n {
                return Err(GraphError::InvalidParameter(format!(
                    "knn requires 1 <= k < n, got k = {k}, n = {n}"
                )));
            }
            let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
            Graph::new(n, knn_edges(&pts, k))
        }
        GraphModel::SmallWorld { m, p } => {
            check_prob("p", p)?;
            if m < 2 || m >= n {
                return Err(GraphError::InvalidParameter(format!(
                    "small world requires 2 <= m < n, got m = {m}, n = {n}"
                )));
            }
            Ok(watts_strogatz(n, m / 2, p, &mut rng)?)
        }
        GraphModel::PreferentialAttachment { m } => {
            if m == 0 || m >= n {
                return Err(GraphError::InvalidParameter(format!(
                    "preferential attachment requires 1 <= m < n, got m = {m}, n = {n}"
                )));
            }
            barabasi_albert(n, m, &mut rng)
        }
        GraphModel::Sbm {
            ref sizes,
            ref probs,
        } => {
            if sizes.iter().sum::<usize>() != n {
                return Err(GraphError::InvalidParameter(format!(
                    "block sizes sum to {}, expected n = {n}",
                    sizes.iter().sum::<usize>()
                )));
            }
            let b = sizes.len();
            if probs.len() != b || probs.iter().any(|r| r.len() != b) {
                return Err(GraphError::InvalidParameter(
                    "block probability matrix must be square with one row per block".into(),
                ));
            }
            for r in 0..b {
                for s in 0..b {
                    check_prob("block probability", probs[r][s])?;
                    if probs[r][s] != probs[s][r] {
                        return Err(GraphError::InvalidParameter(
                            "block probability matrix must be symmetric".into(),
                        ));
                    }
                }
            }
            let block: Vec<usize> = sizes
                .iter()
                .enumerate()
                .flat_map(|(b, &s)| std::iter::repeat_n(b, s))
                .collect();
            let mut edges = Vec::new();
            for i in 0..n {
                for j in i + 1..n {
                    if rng.random::<f64>() < probs[block[i]][block[j]] {
                        edges.push((i, j));
                    }
                }
            }
            Graph::new(n, edges)
        }
        GraphModel::Grid2d { rows, cols } => {
            if rows * cols != n {
                return Err(GraphError::InvalidParameter(format!(
                    "grid {rows}x{cols} does not have n = {n} nodes"
                )));
            }
            let id = |r: usize, c: usize| r * cols + c;
            let mut edges = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        edges.push((id(r, c), id(r, c + 1)));
                    }
                    if r + 1 < rows {
                        edges.push((id(r, c), id(r + 1, c)));
                    }
                }
            }
            Graph::new(n, edges)
        }
        GraphModel::Star => Graph::new(n, (1..n).map(|i| (0, i))),
        GraphModel::Complete => Graph::new(n, (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)))),
    }
}

/// Edge `(i, j)` whenever `j` is among the `k` nearest points of `i` or vice versa.
fn knn_edges(pts: &[(f64, f64)], k: usize) -> Vec<(usize, usize)> {
    let n = pts.len();
    let mut edges = Vec::with_capacity(n * k);
    let mut cand: Vec<(f64, usize)> = Vec::with_capacity(n);
    for (i, &(xi, yi)) in pts.iter().enumerate() {
        cand.clear();
        cand.extend(
            pts.iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(j, &(xj, yj))| ((xi - xj).powi(2) + (yi - yj).powi(2), j)),
        );
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        cand.select_nth_unstable_by(k - 1, cmp);
        let nearest = &mut cand[..k];
        nearest.sort_unstable_by(cmp);
        edges.extend(nearest.iter().map(|&(_, j)| (i, j)));
    }
    edges
}

fn watts_strogatz(n: usize, half: usize, p: f64, rng: &mut impl Rng) -> Result<Graph> {
    let mut adj: Vec<HashSet<usize>> = vec![HashSet::new(); n];
    let mut order = Vec::new();
    for j in 1..=half {
        for i in 0..n {
            let t = (i + j) % n;
            adj[i].insert(t);
            adj[t].insert(i);
            order.push((i, t));
        }
    }
    let mut edges = Vec::with_capacity(order.len());
    for (u, v) in order {
        if !adj[u].contains(&v) {
            continue;
        }
        let mut target = v;
        if rng.random::<f64>() < p && adj[u].len() < n - 1 {
            loop {
                let w = rng.random_range(0..n);
                if w != u && !adj[u].contains(&w) {
                    target = w;
                    break;
                }
            }
            adj[u].remove(&v);
            adj[v].remove(&u);
            adj[u].insert(target);
            adj[target].insert(u);
        }
        edges.push((u, target));
    }
    // rewiring may have removed an edge pushed earlier; keep only live ones
    Graph::new(n, edges.into_iter().filter(|&(u, v)| adj[u].contains(&v)))
}

fn barabasi_albert(n: usize, m: usize, rng: &mut impl Rng) -> Result<Graph> {
    // seed: star on m + 1 nodes
    let mut edges: Vec<(usize, usize)> = (1..=m).map(|i| (0, i)).collect();
    let mut repeated: Vec<usize> = edges.iter().flat_map(|&(a, b)| [a, b]).collect();
    let mut targets = HashSet::with_capacity(m);
    for source in m + 1..n {
        targets.clear();
        while targets.len() < m {
            targets.insert(repeated[rng.random_range(0..repeated.len())]);
        }
        let mut chosen: Vec<usize> = targets.iter().copied().collect();
        chosen.sort_unstable();
        for t in chosen {
            edges.push((t, source));
            repeated.push(t);
            repeated.push(source);
        }
    }
    Graph::new(n, edges)
}

/// Shuffled copy of `0..n`, used by tests and the permutation checks.
pub fn random_permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(&mut seeded(seed));
    v
}
