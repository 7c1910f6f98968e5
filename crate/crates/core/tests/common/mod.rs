#![allow(dead_code)]

use epitv::graph::Graph;
use proptest::prelude::*;

/// Connected graph: a random tree plus up to `extra` random chords.
pub fn connected_graph(n_max: usize, extra: usize) -> impl Strategy<Value = Graph> {
    (2..=n_max).prop_flat_map(move |n| {
        let parents: Vec<BoxedStrategy<usize>> = (1..n).map(|i| (0..i).boxed()).collect();
        let chords = prop::collection::vec((0..n, 0..n), 0..=extra);
        (Just(n), parents, chords).prop_map(|(n, parents, chords)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &p)| (p, i + 1)).collect();
            edges.extend(chords.into_iter().filter(|(a, b)| a != b));
            Graph::new(n, edges).unwrap()
        })
    })
}

pub fn unit_vector(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..=1.0f64, n)
}

pub fn bits(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::bool::ANY.prop_map(|b| f64::from(u8::from(b))), n)
}

pub fn path(n: usize) -> Graph {
    Graph::new(n, (0..n - 1).map(|i| (i, i + 1))).unwrap()
}

pub fn star(n: usize) -> Graph {
    Graph::new(n, (1..n).map(|i| (0, i))).unwrap()
}

pub fn triangle() -> Graph {
    Graph::new(3, [(0, 1), (1, 2), (0, 2)]).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}
