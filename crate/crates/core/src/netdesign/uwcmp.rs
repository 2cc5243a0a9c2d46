use super::{PlanMode, ReductionPlan};
use crate::error::{Error, Result};
use crate::graph::{Bag, Crusade, WeightedGraph};
use crate::num::int;

/// Fewest unit-edge deletions keeping every cut of `p` at most `b`.
///
/// With removal positions `1..=k`, an edge between `v_i` and `v_j` (`i < j`)
/// crosses exactly the bags `p_t` with `t ∈ [i, j)`, and an edge from `v_i`
/// to the outside crosses `p_t` for `t ∈ [0, i)`. Kept edges are then a
/// maximum set of intervals with depth at most `b`: greedy by finishing
/// time, each interval going to the machine that frees up last before it.
pub fn uwcmp_solve(g: &WeightedGraph, a: &Bag, p: &Crusade, b: u64) -> Result<ReductionPlan> {
    if !g.is_unit_weight() {
        return Err(Error::domain("uwcmp_solve needs unit edge weights"));
    }
    a.validate(g.node_count())?;
    if p.start() != a || !p.is_full() {
        return Err(Error::Contract("crusade must run from the bag to the empty set".into()));
    }
    let mut pos = vec![0usize; g.node_count()];
    for (i, &v) in p.removal_order().iter().enumerate() {
        pos[v] = i + 1;
    }
    // (start, end, edge)
    let mut intervals = Vec::new();
    for (idx, e) in g.edges().iter().enumerate() {
        let (i, j) = (pos[e.u].min(pos[e.v]), pos[e.u].max(pos[e.v]));
        match (i, j) {
            (0, 0) => {}
            (0, j) => intervals.push((0, j, idx)),
            (i, j) => intervals.push((i, j, idx)),
        }
    }
    intervals.sort_by_key(|&(s, f, idx)| (f, std::cmp::Reverse(s), idx));
    let machines = b.min(intervals.len() as u64) as usize;
    // last finishing time per machine, kept sorted ascending
    let mut free: Vec<usize> = vec![0; machines];
    let mut deltas = vec![int(0); g.edge_count()];
    for &(s, f, idx) in &intervals {
        let fit = free.partition_point(|&t| t <= s);
        if fit == 0 {
            deltas[idx] = int(1);
            continue;
        }
        free.remove(fit - 1);
        let at = free.partition_point(|&t| t <= f);
        free.insert(at, f);
    }
    Ok(ReductionPlan::new(deltas, int(b as i64), PlanMode::Unweighted))
}
