#![allow(dead_code)]

use credal_core::graph::{Dag, NodeId};
use credal_core::local::CredalSet;
use credal_core::network::{CredalNetwork, Factor};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn binary_states(n: usize) -> Vec<Vec<String>> {
    vec![vec!["h".to_string(), "t".to_string()]; n]
}

/// Two unconnected binary nodes, each with `p(h) ∈ [1/4, 3/4]`.
pub fn two_coins() -> CredalNetwork {
    let dag = Dag::new(&["1", "2"], &[]).unwrap();
    let i = CredalSet::interval(0.25, 0.75).unwrap();
    CredalNetwork::new(dag, binary_states(2), vec![vec![i.clone()], vec![i]]).unwrap()
}

/// A binary network where every local set is an interval on the first state.
pub fn interval_net(n: usize, edges: &[(usize, usize)], bounds: impl Fn(usize, usize) -> (f64, f64)) -> CredalNetwork {
    let names: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let dag = Dag::from_indices(names, edges).unwrap();
    let locals = (0..n)
        .map(|s| {
            let k = 1usize << dag.parents(s).len();
            (0..k)
                .map(|c| {
                    let (lo, hi) = bounds(s, c);
                    CredalSet::interval(lo, hi).unwrap()
                })
                .collect()
        })
        .collect();
    CredalNetwork::new(dag, binary_states(n), locals).unwrap()
}

/// The ten-node example graph.
pub fn ten_node_dag() -> Dag {
    let names: Vec<String> = (1..=10).map(|i| i.to_string()).collect();
    let e = [(1, 3), (2, 3), (3, 4), (3, 5), (6, 8), (5, 8), (4, 7), (7, 10), (5, 7), (7, 9)];
    let edges: Vec<(String, String)> = e.iter().map(|(a, b)| (a.to_string(), b.to_string())).collect();
    Dag::new(&names, &edges).unwrap()
}

/// A random binary network on at most `max_nodes` nodes. Each local set has
/// `vertices` distinct extreme points (one gives precise locals).
pub fn random_net(rng: &mut ChaCha8Rng, max_nodes: usize, vertices: usize) -> CredalNetwork {
    let n = rng.gen_range(1..=max_nodes);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.gen_bool(0.5) {
                edges.push((a, b));
            }
        }
    }
    random_net_on(rng, n, &edges, vertices)
}

pub fn random_net_on(rng: &mut ChaCha8Rng, n: usize, edges: &[(usize, usize)], vertices: usize) -> CredalNetwork {
    let names: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let dag = Dag::from_indices(names, edges).unwrap();
    let locals = (0..n)
        .map(|s| (0..1usize << dag.parents(s).len()).map(|_| random_binary_set(rng, vertices)).collect())
        .collect();
    CredalNetwork::new(dag, binary_states(n), locals).unwrap()
}

pub fn random_binary_set(rng: &mut ChaCha8Rng, vertices: usize) -> CredalSet {
    if vertices == 1 {
        let p: f64 = rng.gen_range(0.05..0.95);
        return CredalSet::singleton(vec![p, 1.0 - p]).unwrap();
    }
    let a: f64 = rng.gen_range(0.05..0.95);
    let mut b: f64 = rng.gen_range(0.05..0.95);
    while (a - b).abs() < 0.05 {
        b = rng.gen_range(0.05..0.95);
    }
    CredalSet::from_vertices(vec![vec![a, 1.0 - a], vec![b, 1.0 - b]]).unwrap()
}

pub fn random_factor(rng: &mut ChaCha8Rng, net: &CredalNetwork, scope: Vec<NodeId>) -> Factor {
    let cards = net.cards(&scope);
    let n: usize = cards.iter().product();
    let values = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Factor::new(scope, cards, values).unwrap()
}

/// A random non-empty subset of the nodes, as a sorted scope.
pub fn random_scope(rng: &mut ChaCha8Rng, n: usize) -> Vec<NodeId> {
    loop {
        let s: Vec<NodeId> = (0..n).filter(|_| rng.gen_bool(0.5)).collect();
        if !s.is_empty() {
            return s;
        }
    }
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// A random factor on a random non-empty scope.
pub fn random_function(rng: &mut ChaCha8Rng, net: &CredalNetwork) -> Factor {
    let scope = random_scope(rng, net.len());
    random_factor(rng, net, scope)
}

/// Like [`random_net`], but about half the local sets reach zero probability
/// on the first state.
pub fn random_net_with_zeros(rng: &mut ChaCha8Rng, max_nodes: usize) -> CredalNetwork {
    let n = rng.gen_range(2..=max_nodes);
    let edges: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|_| rng.gen_bool(0.5)).collect();
    let names: Vec<String> = (1..=n).map(|i| i.to_string()).collect();
    let dag = Dag::from_indices(names, &edges).unwrap();
    let locals = (0..n)
        .map(|s| {
            (0..1usize << dag.parents(s).len())
                .map(|_| {
                    if rng.gen_bool(0.5) {
                        let q: f64 = rng.gen_range(0.2..0.9);
                        CredalSet::from_vertices(vec![vec![0.0, 1.0], vec![q, 1.0 - q]]).unwrap()
                    } else {
                        random_binary_set(rng, 2)
                    }
                })
                .collect()
        })
        .collect();
    CredalNetwork::new(dag, binary_states(n), locals).unwrap()
}
