//! Contact graphs: construction, random generators, incidence/Laplacian
//! structure and the spectral quantities that drive the denoiser bounds.

mod generate;
mod io;
mod spectral;

use std::collections::HashMap;
use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};
use thiserror::Error;

pub use generate::{generate_graph, random_permutation, GraphModel};
pub use io::{load_edge_list, parse_edge_list, write_edge_list};
pub use spectral::{
    compatibility_factor_bound, fiedler_value, inverse_scaling_factor,
    inverse_scaling_factor_capped, spectral_summary, FiedlerValue, RhoMode, SpectralSummary,
    DEFAULT_EXACT_RHO_CAP,
};

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph needs at least {min} nodes, got {n}")]
    TooFewNodes { n: usize, min: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("edge ({0}, {1}) references a node outside 0..{2}")]
    NodeOutOfRange(usize, usize, usize),
    #[error("edge weight {weight} on ({i}, {j}) must be finite and positive")]
    BadWeight { i: usize, j: usize, weight: f64 },
    #[error("edge ({i}, {j}) listed with inconsistent weights {first} and {second}")]
    InconsistentWeight {
        i: usize,
        j: usize,
        first: f64,
        second: f64,
    },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("graph is disconnected ({components} components)")]
    Disconnected { components: usize },
    #[error("exact inverse scaling factor limited to n <= {cap}, got n = {n}")]
    TooLargeForExact { n: usize, cap: usize },
    #[error("eigen-solver did not converge after {iterations} iterations (residual {residual:e})")]
    EigenNoConvergence { iterations: usize, residual: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = GraphError> = std::result::Result<T, E>;

/// Undirected simple graph on nodes `0..n`.
///
/// Edges are stored as `(min, max)` pairs in insertion order; that order is the
/// row order of the incidence matrix. Optional weights are aligned with the
/// edge list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GraphRecord", into = "GraphRecord")]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    weights: Option<Vec<f64>>,
    adjacency: Vec<Vec<(usize, usize)>>,
}

#[derive(Serialize, Deserialize)]
struct GraphRecord {
    n: usize,
    edges: Vec<(usize, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    weights: Option<Vec<f64>>,
}

impl TryFrom<GraphRecord> for Graph {
    type Error = GraphError;

    fn try_from(r: GraphRecord) -> Result<Self> {
        match r.weights {
            Some(w) => Graph::with_weights(r.n, r.edges.into_iter().zip(w).map(|((i, j), w)| (i, j, w))),
            None => Graph::new(r.n, r.edges),
        }
    }
}

impl From<Graph> for GraphRecord {
    fn from(g: Graph) -> Self {
        GraphRecord {
            n: g.n,
            edges: g.edges,
            weights: g.weights,
        }
    }
}

impl Graph {
    /// Builds an unweighted graph. Duplicate edges (in either orientation) are
    /// collapsed; self-loops and out-of-range endpoints are rejected.
    pub fn new(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut seen = HashMap::new();
        let mut list = Vec::new();
        for (i, j) in edges {
            let e = normalize(n, i, j)?;
            if let std::collections::hash_map::Entry::Vacant(v) = seen.entry(e) {
                v.insert(list.len());
                list.push(e);
            }
        }
        Ok(Self::from_parts(n, list, None))
    }

    /// Builds a weighted graph. A duplicate edge must repeat the same weight.
    pub fn with_weights(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Result<Self> {
        let mut seen: HashMap<(usize, usize), usize> = HashMap::new();
        let mut list = Vec::new();
        let mut weights = Vec::new();
        for (i, j, w) in edges {
            let e = normalize(n, i, j)?;
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::BadWeight { i, j, weight: w });
            }
            match seen.get(&e) {
                Some(&k) if weights[k] != w => {
                    return Err(GraphError::InconsistentWeight {
                        i: e.0,
                        j: e.1,
                        first: weights[k],
                        second: w,
                    })
                }
                Some(_) => {}
                None => {
                    seen.insert(e, list.len());
                    list.push(e);
                    weights.push(w);
                }
            }
        }
        Ok(Self::from_parts(n, list, Some(weights)))
    }

    fn from_parts(n: usize, edges: Vec<(usize, usize)>, weights: Option<Vec<f64>>) -> Self {
        let mut adjacency = vec![Vec::new(); n];
        for (e, &(i, j)) in edges.iter().enumerate() {
            adjacency[i].push((j, e));
            adjacency[j].push((i, e));
        }
        Graph {
            n,
            edges,
            weights,
            adjacency,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_deref()
    }

    /// Weight of edge `e`, 1 for unweighted graphs.
    pub fn weight(&self, e: usize) -> f64 {
        self.weights.as_ref().map_or(1.0, |w| w[e])
    }

    /// `(neighbor, edge index)` pairs of node `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.adjacency.iter().map(Vec::len).collect()
    }

    pub fn max_degree(&self) -> usize {
        self.adjacency.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Same edges with the given weights attached.
    pub fn reweighted(&self, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != self.m() {
            return Err(GraphError::InvalidParameter(format!(
                "expected {} weights, got {}",
                self.m(),
                weights.len()
            )));
        }
        for (&(i, j), &w) in self.edges.iter().zip(&weights) {
            if !(w.is_finite() && w > 0.0) {
                return Err(GraphError::BadWeight { i, j, weight: w });
            }
        }
        Ok(Self::from_parts(self.n, self.edges.clone(), Some(weights)))
    }

    /// Drops edge weights.
    pub fn unweighted(&self) -> Self {
        Self::from_parts(self.n, self.edges.clone(), None)
    }

    /// Component label per node, labels numbered in order of first appearance.
    pub fn components(&self) -> (usize, Vec<usize>) {
        let mut label = vec![usize::MAX; self.n];
        let mut count = 0;
        let mut queue = VecDeque::new();
        for s in 0..self.n {
            if label[s] != usize::MAX {
                continue;
            }
            label[s] = count;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                for &(v, _) in &self.adjacency[u] {
                    if label[v] == usize::MAX {
                        label[v] = count;
                        queue.push_back(v);
                    }
                }
            }
            count += 1;
        }
        (count, label)
    }

    pub fn is_connected(&self) -> bool {
        self.n > 0 && self.components().0 == 1
    }

    /// Relabels node `i` as `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(GraphError::InvalidParameter("permutation length".into()));
        }
        let edges = self.edges.iter().map(|&(i, j)| (perm[i], perm[j]));
        match &self.weights {
            Some(w) => Self::with_weights(
                self.n,
                edges.zip(w.iter().copied()).map(|((i, j), w)| (i, j, w)),
            ),
            None => Self::new(self.n, edges),
        }
    }

    /// Induced subgraph on `nodes` (relabelled `0..nodes.len()` in the given order).
    pub fn induced(&self, nodes: &[usize]) -> (Self, Vec<usize>) {
        let mut local = vec![usize::MAX; self.n];
        for (k, &v) in nodes.iter().enumerate() {
            local[v] = k;
        }
        let mut edges = Vec::new();
        let mut edge_ids = Vec::new();
        let mut weights = Vec::new();
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            if local[i] != usize::MAX && local[j] != usize::MAX {
                let (a, b) = (local[i], local[j]);
                edges.push((a.min(b), a.max(b)));
                edge_ids.push(e);
                weights.push(self.weight(e));
            }
        }
        let weights = self.weights.as_ref().map(|_| weights);
        (Self::from_parts(nodes.len(), edges, weights), edge_ids)
    }
}

fn normalize(n: usize, i: usize, j: usize) -> Result<(usize, usize)> {
    if i >= n || j >= n {
        return Err(GraphError::NodeOutOfRange(i, j, n));
    }
    if i == j {
        return Err(GraphError::SelfLoop(i));
    }
    Ok((i.min(j), i.max(j)))
}

/// Signed edge-node incidence matrix `D` (m x n, CSR): row `e = (i, j)` has
/// `+1` at `min(i, j)` and `-1` at `max(i, j)`.
pub fn incidence_matrix(g: &Graph) -> CsMat<f64> {
    let mut tri = TriMat::with_capacity((g.m(), g.n()), 2 * g.m());
    for (e, &(i, j)) in g.edges().iter().enumerate() {
        tri.add_triplet(e, i, 1.0);
        tri.add_triplet(e, j, -1.0);
    }
    tri.to_csr()
}

/// Unnormalized Laplacian `diag(A 1) - A` of the unweighted graph.
pub fn laplacian(g: &Graph) -> CsMat<f64> {
    let mut tri = TriMat::with_capacity((g.n(), g.n()), g.n() + 2 * g.m());
    for i in 0..g.n() {
        tri.add_triplet(i, i, g.degree(i) as f64);
    }
    for &(i, j) in g.edges() {
        tri.add_triplet(i, j, -1.0);
        tri.add_triplet(j, i, -1.0);
    }
    tri.to_csr()
}

/// Dense copy of the unweighted Laplacian.
pub fn laplacian_dense(g: &Graph) -> nalgebra::DMatrix<f64> {
    let mut l = nalgebra::DMatrix::zeros(g.n(), g.n());
    for &(i, j) in g.edges() {
        l[(i, j)] -= 1.0;
        l[(j, i)] -= 1.0;
        l[(i, i)] += 1.0;
        l[(j, j)] += 1.0;
    }
    l
}

/// `D x` for the incidence matrix of `g`.
pub fn edge_differences(g: &Graph, x: &[f64]) -> Vec<f64> {
    g.edges().iter().map(|&(i, j)| x[i] - x[j]).collect()
}

/// `D^T z` for the incidence matrix of `g`.
pub fn edge_divergence(g: &Graph, z: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.n()];
    for (&(i, j), &v) in g.edges().iter().zip(z) {
        out[i] += v;
        out[j] -= v;
    }
    out
}

/// Degree-based contact weights `w_ij = 1 / max(d_i, d_j)`.
pub fn contact_weights(g: &Graph) -> Graph {
    let w = g
        .edges()
        .iter()
        .map(|&(i, j)| 1.0 / g.degree(i).max(g.degree(j)) as f64)
        .collect();
    g.reweighted(w).expect("degree weights are positive")
}

/// Sparse `y = A x` for a CSR matrix.
pub fn spmv(a: &CsMat<f64>, x: &[f64]) -> Vec<f64> {
    debug_assert!(a.is_csr());
    a.outer_iterator()
        .map(|row| row.iter().map(|(j, &v)| v * x[j]).sum())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::new(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
    }

    #[test]
    fn incidence_sign_convention() {
        let d = incidence_matrix(&path(2)).to_dense();
        assert_eq!(d.row(0).to_vec(), vec![1.0, -1.0]);
        let d = incidence_matrix(&path(3)).to_dense();
        assert_eq!(d.row(0).to_vec(), vec![1.0, -1.0, 0.0]);
        assert_eq!(d.row(1).to_vec(), vec![0.0, 1.0, -1.0]);
        // reversed orientation in input still puts +1 on the smaller index
        let g = Graph::new(3, [(2, 1)]).unwrap();
        assert_eq!(incidence_matrix(&g).to_dense().row(0).to_vec(), vec![0.0, 1.0, -1.0]);
    }

    #[test]
    fn laplacian_examples() {
        let l = laplacian(&path(2)).to_dense();
        assert_eq!(l.row(0).to_vec(), vec![1.0, -1.0]);
        assert_eq!(l.row(1).to_vec(), vec![-1.0, 1.0]);
        let star = Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        let l = laplacian(&star).to_dense();
        assert_eq!(l[[0, 0]], 3.0);
        for i in 1..4 {
            assert_eq!(l[[i, i]], 1.0);
            assert_eq!(l[[0, i]], -1.0);
        }
        let tri = Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap();
        let l = laplacian(&tri).to_dense();
        for i in 0..3 {
            assert_eq!(l.row(i).sum(), 0.0);
            assert_eq!(l[[i, i]], 2.0);
        }
    }

    #[test]
    fn contact_weight_examples() {
        let g = contact_weights(&path(3));
        assert_eq!(g.weights().unwrap(), &[0.5, 0.5]);
        let g = contact_weights(&path(2));
        assert_eq!(g.weights().unwrap(), &[1.0]);
        let star = Graph::new(4, [(0, 1), (0, 2), (0, 3)]).unwrap();
        assert!(contact_weights(&star)
            .weights()
            .unwrap()
            .iter()
            .all(|&w| (w - 1.0 / 3.0).abs() < 1e-15));
    }

    #[test]
    fn rejects_self_loops_and_dedups() {
        assert!(matches!(Graph::new(2, [(1, 1)]), Err(GraphError::SelfLoop(1))));
        let g = Graph::new(3, [(0, 1), (1, 0), (1, 2)]).unwrap();
        assert_eq!(g.m(), 2);
        assert!(matches!(
            Graph::with_weights(2, [(0, 1, 0.5), (1, 0, 0.25)]),
            Err(GraphError::InconsistentWeight { .. })
        ));
        assert!(Graph::new(2, [(0, 2)]).is_err());
    }

    #[test]
    fn components_and_induced() {
        let g = Graph::new(5, [(0, 1), (3, 4)]).unwrap();
        let (count, label) = g.components();
        assert_eq!(count, 3);
        assert_eq!(label, vec![0, 0, 1, 2, 2]);
        let (sub, ids) = g.induced(&[3, 4]);
        assert_eq!(sub.edges(), &[(0, 1)]);
        assert_eq!(ids, vec![1]);
    }

    #[test]
    fn serde_round_trip() {
        let g = contact_weights(&path(4));
        let s = serde_json::to_string(&g).unwrap();
        let back: Graph = serde_json::from_str(&s).unwrap();
        assert_eq!(g, back);
    }
}
