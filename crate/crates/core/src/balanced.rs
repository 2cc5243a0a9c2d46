//! Balanced bisection of a bag, with cuts measured inside `G[A]`.
//!
//! `Exact` enumerates every split meeting the balance bound. `Spectral` sweeps
//! the Fiedler ordering of the subgraph Laplacian and then applies balance
//! preserving single-node moves and pair swaps until no move lowers the cut.
//! The spectral path carries no approximation guarantee.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Bag, WeightedGraph};
use crate::graph::exact::LocalBag as InnerBag;
use crate::num::Rational;

pub const DEFAULT_EXACT_LIMIT: usize = 20;
const POWER_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CutStrategy {
    Exact,
    Spectral,
    /// Exact up to the given bag size, spectral above it.
    Auto(usize),
}

impl Default for CutStrategy {
    fn default() -> Self {
        CutStrategy::Auto(DEFAULT_EXACT_LIMIT)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StrategyUsed {
    Exact,
    SpectralRefined,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BalancedCutResult {
    pub side_one: Bag,
    pub side_two: Bag,
    pub cut_value: Rational,
    pub strategy_used: StrategyUsed,
}

/// Smallest side size allowed for a bag of `k` nodes: `⌈k/3⌉`, at least one.
pub fn min_side(k: usize) -> usize {
    k.div_ceil(3).max(1)
}

pub fn balanced_cut(g: &WeightedGraph, a: &Bag, strategy: CutStrategy) -> Result<BalancedCutResult> {
    if a.len() < 2 {
        return Err(Error::domain(format!("balanced cut needs at least 2 nodes, got {}", a.len())));
    }
    let inner = InnerBag::inner(g, a)?;
    let (mask, value, used) = match strategy {
        CutStrategy::Exact => {
            let (m, v) = exact(&inner, DEFAULT_EXACT_LIMIT)?;
            (m, v, StrategyUsed::Exact)
        }
        CutStrategy::Auto(limit) if a.len() <= limit.min(30) => {
            let (m, v) = exact(&inner, limit)?;
            (m, v, StrategyUsed::Exact)
        }
        CutStrategy::Spectral | CutStrategy::Auto(_) => {
            let (m, v) = spectral(&inner);
            (m, v, StrategyUsed::SpectralRefined)
        }
    };
    let (side_one, side_two) = inner.split(&mask);
    Ok(BalancedCutResult {
        side_one,
        side_two,
        cut_value: Rational::new(value, inner.denom),
        strategy_used: used,
    })
}

fn exact(inner: &InnerBag, limit: usize) -> Result<(Vec<bool>, i64)> {
    let k = inner.len();
    if k > limit || k > 30 {
        return Err(Error::Capacity { size: k, limit: limit.min(30) });
    }
    let lo = min_side(k);
    let hi = k - lo;
    let (mut mask, mut cut) = (0u64, 0i64);
    let mut best: Option<(i64, u64)> = None;
    for i in 1u64..(1 << k) {
        let u = i.trailing_zeros() as usize;
        if mask >> u & 1 == 1 {
            mask &= !(1 << u);
            cut -= inner.join_delta(mask, u);
        } else {
            cut += inner.join_delta(mask, u);
            mask |= 1 << u;
        }
        let size = mask.count_ones() as usize;
        if size < lo || size > hi {
            continue;
        }
        best = match best {
            None => Some((cut, mask)),
            Some((bc, bm)) if cut < bc || (cut == bc && lex_less(mask, bm, k)) => Some((cut, mask)),
            keep => keep,
        };
    }
    let (value, m) = best.expect("k >= 2 always admits a balanced split");
    Ok(((0..k).map(|i| m >> i & 1 == 1).collect(), value))
}

/// Lexicographic order on the sorted member lists of two masks.
fn lex_less(a: u64, b: u64, k: usize) -> bool {
    let la = (0..k).filter(|&i| a >> i & 1 == 1);
    let lb = (0..k).filter(|&i| b >> i & 1 == 1);
    la.lt(lb)
}

/// Fiedler vector by power iteration on `σI − L` with the constant vector
/// projected out, iteration cap `10·k`.
pub(crate) fn fiedler(inner: &InnerBag) -> Vec<f64> {
    let k = inner.len();
    let weights: Vec<Vec<(usize, f64)>> = inner
        .adj
        .iter()
        .map(|row| row.iter().map(|&(j, w)| (j, w as f64 / inner.denom as f64)).collect())
        .collect();
    let deg: Vec<f64> = weights.iter().map(|r| r.iter().map(|&(_, w)| w).sum()).collect();
    let sigma = 2.0 * deg.iter().cloned().fold(0.0, f64::max) + 1.0;
    // deterministic, non-symmetric start
    let mut x: Vec<f64> = (0..k).map(|i| (i as f64 + 1.0).sqrt() + 0.1 * ((i * 7 % 5) as f64)).collect();
    let normalize = |x: &mut Vec<f64>| {
        let mean = x.iter().sum::<f64>() / k as f64;
        x.iter_mut().for_each(|v| *v -= mean);
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            x.iter_mut().for_each(|v| *v /= norm);
        }
    };
    normalize(&mut x);
    for _ in 0..10 * k {
        let mut y = vec![0.0; k];
        for i in 0..k {
            let mut lx = deg[i] * x[i];
            for &(j, w) in &weights[i] {
                lx -= w * x[j];
            }
            y[i] = sigma * x[i] - lx;
        }
        normalize(&mut y);
        let diff = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = y;
        if diff < POWER_TOL {
            break;
        }
    }
    x
}

fn spectral(inner: &InnerBag) -> (Vec<bool>, i64) {
    let k = inner.len();
    let f = fiedler(inner);
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| f[a].total_cmp(&f[b]).then(a.cmp(&b)));
    let lo = min_side(k);
    let hi = k - lo;

    // prefix sweep
    let mut side = vec![false; k];
    let mut cut = 0i64;
    let mut best = (i64::MAX, 0usize);
    for (taken, &u) in order.iter().enumerate() {
        cut += inner.join_delta_bool(&side, u);
        side[u] = true;
        let size = taken + 1;
        if (lo..=hi).contains(&size) && cut < best.0 {
            best = (cut, size);
        }
    }
    let mut side = vec![false; k];
    for &u in &order[..best.1] {
        side[u] = true;
    }
    let mut cut = best.0;

    // local refinement
    let mut size = best.1;
    loop {
        // gain[u] = change in cut if u switches side
        let gain: Vec<i64> = (0..k).map(|u| inner.switch_delta(&side, u)).collect();
        let mut best_move: Option<(i64, usize, Option<usize>)> = None;
        let consider = |d: i64, u: usize, v: Option<usize>, best_move: &mut Option<(i64, usize, Option<usize>)>| {
            if d < 0 && best_move.is_none_or(|(bd, _, _)| d < bd) {
                *best_move = Some((d, u, v));
            }
        };
        for u in 0..k {
            let new_size = if side[u] { size - 1 } else { size + 1 };
            if (lo..=hi).contains(&new_size) {
                consider(gain[u], u, None, &mut best_move);
            }
        }
        for u in 0..k {
            if !side[u] {
                continue;
            }
            for v in 0..k {
                if side[v] {
                    continue;
                }
                let d = gain[u] + gain[v] + 2 * inner.weight_between(u, v);
                consider(d, u.min(v), Some(u.max(v)), &mut best_move);
            }
        }
        let Some((d, u, v)) = best_move else { break };
        side[u] = !side[u];
        size = if side[u] { size + 1 } else { size - 1 };
        if let Some(v) = v {
            side[v] = !side[v];
            size = if side[v] { size + 1 } else { size - 1 };
        }
        cut += d;
    }
    debug_assert_eq!(cut, inner.cut_of(&side));
    (side, cut)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::int;

    fn unit(n: usize, edges: &[(usize, usize)]) -> WeightedGraph {
        WeightedGraph::new(n, edges.iter().map(|&(u, v)| (u, v, int(1)))).unwrap()
    }

    #[test]
    fn exact_examples() {
        let g = unit(4, &[(0, 1), (2, 3)]);
        let r = balanced_cut(&g, &Bag::full(4), CutStrategy::Exact).unwrap();
        assert_eq!(r.cut_value, int(0));
        assert_eq!(r.side_one, Bag::from(vec![0, 1]));
        assert_eq!(r.side_two.len(), 2);

        let p3 = unit(3, &[(0, 1), (1, 2)]);
        assert_eq!(balanced_cut(&p3, &Bag::full(3), CutStrategy::Exact).unwrap().cut_value, int(1));

        let k4 = unit(4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)]);
        let r = balanced_cut(&k4, &Bag::full(4), CutStrategy::Exact).unwrap();
        assert_eq!(r.cut_value, int(4));
        assert_eq!((r.side_one.len(), r.side_two.len()), (2, 2));
        assert_eq!(r.side_one, Bag::from(vec![0, 1]));
    }

    #[test]
    fn cut_is_inside_the_bag() {
        // node 3 is outside the bag; its edges must not count
        let g = unit(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]);
        let r = balanced_cut(&g, &Bag::from(vec![0, 1, 2]), CutStrategy::Exact).unwrap();
        assert_eq!(r.cut_value, int(1));
    }

    #[test]
    fn domain_and_capacity_errors() {
        let g = unit(3, &[(0, 1)]);
        assert!(matches!(
            balanced_cut(&g, &Bag::singleton(0), CutStrategy::Exact),
            Err(Error::Domain(_))
        ));
        let big = WeightedGraph::new(22, []).unwrap();
        assert!(matches!(
            balanced_cut(&big, &Bag::full(22), CutStrategy::Exact),
            Err(Error::Capacity { .. })
        ));
        let r = balanced_cut(&big, &Bag::full(22), CutStrategy::default()).unwrap();
        assert_eq!(r.strategy_used, StrategyUsed::SpectralRefined);
    }

    #[test]
    fn spectral_finds_the_obvious_cuts() {
        // two 4-cliques joined by one edge
        let mut edges = Vec::new();
        for base in [0, 4] {
            for i in 0..4 {
                for j in i + 1..4 {
                    edges.push((base + i, base + j));
                }
            }
        }
        edges.push((3, 4));
        let g = unit(8, &edges);
        let r = balanced_cut(&g, &Bag::full(8), CutStrategy::Spectral).unwrap();
        assert_eq!(r.cut_value, int(1));
        assert_eq!(r.strategy_used, StrategyUsed::SpectralRefined);

        let path = unit(9, &(0..8).map(|i| (i, i + 1)).collect::<Vec<_>>());
        let r = balanced_cut(&path, &Bag::full(9), CutStrategy::Spectral).unwrap();
        assert_eq!(r.cut_value, int(1));
    }
}
