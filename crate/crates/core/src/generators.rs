//! Standard graph families and seeded random graphs.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::num::{check_unit_interval, Rational};

fn uniform(n: usize, w: Rational, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<WeightedGraph> {
    check_unit_interval(&w)?;
    WeightedGraph::new(n, edges.into_iter().map(|(u, v)| (u, v, w)))
}

pub fn path(n: usize, w: Rational) -> Result<WeightedGraph> {
    uniform(n, w, (1..n).map(|i| (i - 1, i)))
}

pub fn cycle(n: usize, w: Rational) -> Result<WeightedGraph> {
    if n < 3 {
        return Err(Error::domain(format!("a cycle needs at least 3 nodes, got {n}")));
    }
    uniform(n, w, (0..n).map(|i| (i, (i + 1) % n)))
}

/// Node 0 is the center.
pub fn star(n: usize, w: Rational) -> Result<WeightedGraph> {
    uniform(n, w, (1..n).map(|i| (0, i)))
}

pub fn complete(n: usize, w: Rational) -> Result<WeightedGraph> {
    uniform(n, w, (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))))
}

fn pick_weight(rng: &mut ChaCha8Rng, weights: &[Rational]) -> Result<Rational> {
    weights
        .choose(rng)
        .copied()
        .ok_or_else(|| Error::domain("need at least one weight"))
}

/// `G(n, p)` with each edge's weight drawn uniformly from `weights`.
pub fn erdos_renyi(n: usize, p: f64, weights: &[Rational], seed: u64) -> Result<WeightedGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("edge probability {p} outside [0, 1]")));
    }
    weights.iter().try_for_each(check_unit_interval)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random::<f64>() < p {
                edges.push((u, v, pick_weight(&mut rng, weights)?));
            }
        }
    }
    WeightedGraph::new(n, edges)
}

/// A random spanning tree plus `G(n, p)` edges on top, so the result is
/// always connected.
pub fn random_connected(n: usize, p: f64, weights: &[Rational], rng: &mut ChaCha8Rng) -> Result<WeightedGraph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain(format!("edge probability {p} outside [0, 1]")));
    }
    weights.iter().try_for_each(check_unit_interval)?;
    let mut present = vec![false; n * n];
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        present[u * n + v] = true;
        edges.push((u, v, pick_weight(rng, weights)?));
    }
    for u in 0..n {
        for v in u + 1..n {
            if !present[u * n + v] && rng.random::<f64>() < p {
                edges.push((u, v, pick_weight(rng, weights)?));
            }
        }
    }
    WeightedGraph::new(n, edges)
}
