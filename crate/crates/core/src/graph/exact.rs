//! Exponential-time ground truth: exhaustive restricted max-cut and the
//! subset dynamic programs for plain and fair impedance.

use std::collections::HashMap;

use super::fairness::GroupQuota;
use super::{Bag, Crusade, FairnessSpec, NodeId, WeightedGraph};
use crate::error::{Error, Result};
use crate::num::Rational;

pub const DEFAULT_SUBSET_LIMIT: usize = 20;
pub const DEFAULT_FAIR_LIMIT: usize = 14;

/// A bag relabelled to bit positions, with integer-scaled weights.
pub(crate) struct LocalBag {
    pub nodes: Vec<NodeId>,
    /// (local neighbor, scaled weight) inside the bag
    pub adj: Vec<Vec<(usize, i64)>>,
    /// scaled weight from each member to nodes outside the bag
    pub ext: Vec<i64>,
    pub denom: i64,
}

impl LocalBag {
    pub fn new(g: &WeightedGraph, a: &Bag) -> Result<Self> {
        a.validate(g.node_count())?;
        let scaled = g.scaled();
        let mut local = vec![usize::MAX; g.node_count()];
        for (i, u) in a.iter().enumerate() {
            local[u] = i;
        }
        let k = a.len();
        let mut adj = vec![Vec::new(); k];
        let mut ext = vec![0i64; k];
        for (i, u) in a.iter().enumerate() {
            for &(x, e) in g.neighbors(u) {
                let w = scaled.w[e];
                if local[x] == usize::MAX {
                    ext[i] += w;
                } else {
                    adj[i].push((local[x], w));
                }
            }
        }
        Ok(LocalBag {
            nodes: a.members().to_vec(),
            adj,
            ext,
            denom: scaled.denom,
        })
    }

    /// Same relabelling with edges leaving the bag ignored, so cuts are
    /// measured inside `G[A]`.
    pub fn inner(g: &WeightedGraph, a: &Bag) -> Result<Self> {
        let mut lb = LocalBag::new(g, a)?;
        lb.ext.iter_mut().for_each(|x| *x = 0);
        Ok(lb)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// `join_delta` for bags too large for a bitmask.
    pub fn join_delta_bool(&self, side: &[bool], u: usize) -> i64 {
        let mut d = self.ext[u];
        for &(j, w) in &self.adj[u] {
            d += if side[j] { -w } else { w };
        }
        d
    }

    /// Change of the cut when `u` switches side.
    pub fn switch_delta(&self, side: &[bool], u: usize) -> i64 {
        let mut d = if side[u] { -self.ext[u] } else { self.ext[u] };
        for &(j, w) in &self.adj[u] {
            d += if side[j] == side[u] { w } else { -w };
        }
        d
    }

    pub fn weight_between(&self, u: usize, v: usize) -> i64 {
        self.adj[u].iter().filter(|&&(j, _)| j == v).map(|&(_, w)| w).sum()
    }

    pub fn cut_of(&self, side: &[bool]) -> i64 {
        let mut c = 0;
        for u in 0..self.len() {
            if side[u] {
                c += self.ext[u];
                c += self.adj[u].iter().filter(|&&(j, _)| !side[j]).map(|&(_, w)| w).sum::<i64>();
            }
        }
        c
    }

    pub fn split(&self, side: &[bool]) -> (Bag, Bag) {
        let one = (0..self.len()).filter(|&i| side[i]).map(|i| self.nodes[i]).collect();
        let two = (0..self.len()).filter(|&i| !side[i]).map(|i| self.nodes[i]).collect();
        (one, two)
    }

    /// Change of `c(S)` when local node `u ∉ S` joins `S`.
    #[inline]
    pub fn join_delta(&self, mask: u64, u: usize) -> i64 {
        let mut d = self.ext[u];
        for &(j, w) in &self.adj[u] {
            if mask >> j & 1 == 1 {
                d -= w;
            } else {
                d += w;
            }
        }
        d
    }

    /// `c(S)` for every `S ⊆ bag`, indexed by bitmask.
    pub fn all_cuts(&self) -> Vec<i64> {
        let k = self.len();
        let mut cut = vec![0i64; 1 << k];
        for s in 1usize..(1 << k) {
            let u = s.trailing_zeros() as usize;
            let rest = s & (s - 1);
            cut[s] = cut[rest] + self.join_delta(rest as u64, u);
        }
        cut
    }

    pub fn to_bag(&self, mask: u64) -> Bag {
        (0..self.len())
            .filter(|&i| mask >> i & 1 == 1)
            .map(|i| self.nodes[i])
            .collect()
    }
}

fn check_capacity(size: usize, limit: usize) -> Result<()> {
    if size > limit || size > 30 {
        return Err(Error::Capacity { size, limit: limit.min(30) });
    }
    Ok(())
}

/// `φ(A) = max_{Q ⊆ A} c(Q)` by exhaustive Gray-code enumeration.
pub fn restricted_max_cut_exact(g: &WeightedGraph, a: &Bag) -> Result<(Rational, Bag)> {
    restricted_max_cut_exact_with_limit(g, a, DEFAULT_SUBSET_LIMIT)
}

pub fn restricted_max_cut_exact_with_limit(
    g: &WeightedGraph,
    a: &Bag,
    limit: usize,
) -> Result<(Rational, Bag)> {
    check_capacity(a.len(), limit)?;
    let lb = LocalBag::new(g, a)?;
    let k = lb.len();
    let (mut mask, mut cut) = (0u64, 0i64);
    let (mut best, mut best_mask) = (0i64, 0u64);
    for i in 1u64..(1 << k) {
        let u = i.trailing_zeros() as usize;
        if mask >> u & 1 == 1 {
            mask &= !(1 << u);
            cut -= lb.join_delta(mask, u);
        } else {
            cut += lb.join_delta(mask, u);
            mask |= 1 << u;
        }
        if cut > best {
            best = cut;
            best_mask = mask;
        }
    }
    Ok((Rational::new(best, lb.denom), lb.to_bag(best_mask)))
}

/// `δ(A)` and an optimal crusade via `δ(S) = max(c(S), min_u δ(S − u))`.
pub fn impedance_exact(g: &WeightedGraph, a: &Bag) -> Result<(Rational, Crusade)> {
    impedance_exact_with_limit(g, a, DEFAULT_SUBSET_LIMIT)
}

pub fn impedance_exact_with_limit(
    g: &WeightedGraph,
    a: &Bag,
    limit: usize,
) -> Result<(Rational, Crusade)> {
    check_capacity(a.len(), limit)?;
    let lb = LocalBag::new(g, a)?;
    let k = lb.len();
    let cut = lb.all_cuts();
    let mut delta = vec![0i64; 1 << k];
    for s in 1usize..(1 << k) {
        let mut best = i64::MAX;
        let mut bits = s;
        while bits != 0 {
            let u = bits.trailing_zeros();
            bits &= bits - 1;
            best = best.min(delta[s & !(1 << u)]);
        }
        delta[s] = cut[s].max(best);
    }
    let full = (1usize << k) - 1;
    let mut order = Vec::with_capacity(k);
    let mut s = full;
    while s != 0 {
        let mut pick = None;
        let mut bits = s;
        while bits != 0 {
            let u = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let v = delta[s & !(1 << u)];
            if pick.is_none_or(|(_, bv)| v < bv) {
                pick = Some((u, v));
            }
        }
        let (u, _) = pick.unwrap();
        order.push(lb.nodes[u]);
        s &= !(1 << u);
    }
    Ok((
        Rational::new(delta[full], lb.denom),
        Crusade::from_parts_unchecked(a.clone(), order),
    ))
}

/// Minimum width over γ-fair crusades from `a` to ∅; `None` when no fair
/// crusade exists.
pub fn fair_impedance_exact(
    g: &WeightedGraph,
    a: &Bag,
    spec: &FairnessSpec,
) -> Result<Option<(Rational, Crusade)>> {
    fair_impedance_exact_with_limit(g, a, spec, DEFAULT_FAIR_LIMIT)
}

pub fn fair_impedance_exact_with_limit(
    g: &WeightedGraph,
    a: &Bag,
    spec: &FairnessSpec,
    limit: usize,
) -> Result<Option<(Rational, Crusade)>> {
    check_capacity(a.len(), limit.min(DEFAULT_SUBSET_LIMIT))?;
    spec.check_covers(a)?;
    let k = a.len();
    spec.check_checkpoints(k)?;
    if spec.group_count() > 16 {
        return Err(Error::domain("at most 16 groups supported by the exact fair oracle"));
    }
    let lb = LocalBag::new(g, a)?;
    let mut group_masks = vec![0u64; spec.group_count()];
    for (i, &u) in lb.nodes.iter().enumerate() {
        group_masks[spec.group_of(u)] |= 1 << i;
    }
    let quota = GroupQuota::new(spec.counts(a.iter()), spec.gamma());
    let mut is_checkpoint = vec![false; k + 1];
    let mut last_checkpoint = vec![0usize; k + 1];
    for &t in spec.checkpoints() {
        is_checkpoint[t] = true;
    }
    for j in 1..=k {
        last_checkpoint[j] = if is_checkpoint[j] { j } else { last_checkpoint[j - 1] };
    }
    let mut solver = FairDp {
        cut: lb.all_cuts(),
        group_masks,
        quota,
        is_checkpoint,
        last_checkpoint,
        check_final: spec.check_final_segment && !spec.checkpoints().is_empty(),
        k,
        memo: HashMap::new(),
    };
    let full = if k == 0 { 0 } else { (1u64 << k) - 1 };
    let start = solver.pack(full);
    let value = solver.solve(full, start);
    if value == INF {
        return Ok(None);
    }
    let mut order = Vec::with_capacity(k);
    let (mut s, mut c) = (full, start);
    while s != 0 {
        let (_, u) = solver.memo[&(s, c)];
        let next = s & !(1 << u);
        if solver.is_checkpoint[k - next.count_ones() as usize] {
            c = solver.pack(next);
        }
        order.push(lb.nodes[u]);
        s = next;
    }
    Ok(Some((
        Rational::new(value, lb.denom),
        Crusade::from_parts_unchecked(a.clone(), order),
    )))
}

const INF: i64 = i64::MAX;

struct FairDp {
    cut: Vec<i64>,
    group_masks: Vec<u64>,
    quota: GroupQuota,
    is_checkpoint: Vec<bool>,
    last_checkpoint: Vec<usize>,
    check_final: bool,
    k: usize,
    // (bag, packed counts of the bag at the last checkpoint) -> (value, choice)
    memo: HashMap<(u64, u64), (i64, usize)>,
}

impl FairDp {
    fn counts(&self, mask: u64) -> Vec<usize> {
        self.group_masks
            .iter()
            .map(|gm| (gm & mask).count_ones() as usize)
            .collect()
    }

    fn pack(&self, mask: u64) -> u64 {
        self.counts(mask)
            .iter()
            .enumerate()
            .fold(0u64, |acc, (h, &c)| acc | (c as u64) << (4 * h))
    }

    fn unpack(&self, packed: u64) -> Vec<usize> {
        (0..self.group_masks.len())
            .map(|h| (packed >> (4 * h) & 0xf) as usize)
            .collect()
    }

    fn segment_fair(&self, at_checkpoint: u64, remaining: u64, len: usize) -> bool {
        let before = self.unpack(at_checkpoint);
        let after = self.counts(remaining);
        let removed: Vec<usize> = before.iter().zip(&after).map(|(b, a)| b - a).collect();
        self.quota.allows(&removed, len)
    }

    fn solve(&mut self, s: u64, c: u64) -> i64 {
        if s == 0 {
            let j = self.k;
            if self.check_final && !self.segment_fair(c, 0, j - self.last_checkpoint[j]) {
                return INF;
            }
            return 0;
        }
        if let Some(&(v, _)) = self.memo.get(&(s, c)) {
            return v;
        }
        let j = self.k - s.count_ones() as usize;
        let mut best = (INF, usize::MAX);
        let mut bits = s;
        while bits != 0 {
            let u = bits.trailing_zeros() as usize;
            bits &= bits - 1;
            let next = s & !(1 << u);
            let next_c = if self.is_checkpoint[j + 1] {
                if !self.segment_fair(c, next, j + 1 - self.last_checkpoint[j]) {
                    continue;
                }
                self.pack(next)
            } else {
                c
            };
            let v = self.solve(next, next_c);
            if v < best.0 {
                best = (v, u);
            }
        }
        let value = if best.0 == INF {
            INF
        } else {
            self.cut[s as usize].max(best.0)
        };
        self.memo.insert((s, c), (value, best.1));
        value
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{crusade_width, is_gamma_fair};
    use crate::num::{int, rat};

    fn path(n: usize) -> WeightedGraph {
        WeightedGraph::new(n, (0..n - 1).map(|i| (i, i + 1, int(1)))).unwrap()
    }

    fn star(leaves: usize) -> WeightedGraph {
        WeightedGraph::new(leaves + 1, (1..=leaves).map(|i| (0, i, int(1)))).unwrap()
    }

    #[test]
    fn max_cut_examples() {
        let tri = WeightedGraph::new(3, [(0, 1, int(1)), (1, 2, int(1)), (0, 2, int(1))]).unwrap();
        let (phi, q) = restricted_max_cut_exact(&tri, &Bag::full(3)).unwrap();
        assert_eq!(phi, int(2));
        assert!(q.len() == 1 || q.len() == 2);
        assert_eq!(restricted_max_cut_exact(&tri, &Bag::empty()).unwrap().0, int(0));
        let (phi, _) = restricted_max_cut_exact(&path(3), &Bag::singleton(1)).unwrap();
        assert_eq!(phi, int(2));
    }

    #[test]
    fn impedance_examples() {
        let (d, p) = impedance_exact(&path(3), &Bag::full(3)).unwrap();
        assert_eq!(d, int(1));
        assert_eq!(crusade_width(&path(3), &p).unwrap(), int(1));
        let (d, p) = impedance_exact(&star(3), &Bag::full(4)).unwrap();
        assert_eq!(d, int(2));
        assert_eq!(crusade_width(&star(3), &p).unwrap(), int(2));
        let (d, p) = impedance_exact(&path(3), &Bag::singleton(1)).unwrap();
        assert_eq!(d, int(2));
        assert_eq!(p.removal_order(), &[1]);
    }

    #[test]
    fn capacity_errors() {
        let g = path(25);
        assert!(matches!(
            impedance_exact(&g, &Bag::full(25)),
            Err(Error::Capacity { size: 25, .. })
        ));
        assert!(restricted_max_cut_exact_with_limit(&g, &Bag::full(5), 4).is_err());
        let spec = FairnessSpec::new(vec![0; 25], vec![], int(1)).unwrap();
        assert!(fair_impedance_exact(&g, &Bag::full(15), &spec).is_err());
    }

    #[test]
    fn fair_without_checkpoints_equals_plain() {
        let g = WeightedGraph::new(
            5,
            [(0, 1, rat(1, 2)), (1, 2, int(1)), (2, 3, rat(1, 4)), (3, 4, int(1)), (0, 4, rat(3, 4))],
        )
        .unwrap();
        let spec = FairnessSpec::new(vec![0, 1, 0, 1, 0], vec![], int(1)).unwrap();
        let plain = impedance_exact(&g, &Bag::full(5)).unwrap();
        let fair = fair_impedance_exact(&g, &Bag::full(5), &spec).unwrap().unwrap();
        assert_eq!(plain, fair);
    }

    /// Every ordering of the bag, checked with the fairness predicate.
    fn brute_fair(g: &WeightedGraph, a: &Bag, spec: &FairnessSpec) -> Option<Rational> {
        fn rec(
            g: &WeightedGraph,
            a: &Bag,
            spec: &FairnessSpec,
            rest: &mut Vec<usize>,
            order: &mut Vec<usize>,
            best: &mut Option<Rational>,
        ) {
            if rest.is_empty() {
                let p = Crusade::full(a.clone(), order.clone()).unwrap();
                if is_gamma_fair(&p, spec).unwrap() {
                    let w = crusade_width(g, &p).unwrap();
                    if best.is_none_or(|b| w < b) {
                        *best = Some(w);
                    }
                }
                return;
            }
            for i in 0..rest.len() {
                let u = rest.remove(i);
                order.push(u);
                rec(g, a, spec, rest, order, best);
                order.pop();
                rest.insert(i, u);
            }
        }
        let mut best = None;
        rec(g, a, spec, &mut a.members().to_vec(), &mut Vec::new(), &mut best);
        best
    }

    #[test]
    fn fair_path_against_orderings() {
        let g = path(4);
        let spec = FairnessSpec::new(vec![0, 0, 1, 1], vec![2], int(1)).unwrap();
        let (w, p) = fair_impedance_exact(&g, &Bag::full(4), &spec).unwrap().unwrap();
        assert_eq!(Some(w), brute_fair(&g, &Bag::full(4), &spec));
        assert!(is_gamma_fair(&p, &spec).unwrap());
        assert_eq!(crusade_width(&g, &p).unwrap(), w);
        // fairness costs something here: the plain optimum clears a path end-to-end
        assert_eq!(w, int(2));
        assert_eq!(impedance_exact(&g, &Bag::full(4)).unwrap().0, int(1));
    }

    #[test]
    fn infeasible_spec_gives_sentinel() {
        // two groups of four, gamma 1/2: a segment of four may hold at most one
        // node per group, so no split exists.
        let g = path(8);
        let spec = FairnessSpec::new(vec![0, 0, 0, 0, 1, 1, 1, 1], vec![4], rat(1, 2)).unwrap();
        assert!(fair_impedance_exact(&g, &Bag::full(8), &spec).unwrap().is_none());
        assert!(brute_fair(&g, &Bag::full(8), &spec).is_none());
    }

    #[test]
    fn fair_multi_checkpoint_against_orderings() {
        let g = WeightedGraph::new(
            6,
            [
                (0, 1, int(1)),
                (1, 2, rat(1, 2)),
                (2, 3, int(1)),
                (3, 4, rat(1, 4)),
                (4, 5, int(1)),
                (0, 5, rat(3, 4)),
                (1, 4, rat(1, 2)),
            ],
        )
        .unwrap();
        for groups in [vec![0, 1, 0, 1, 0, 1], vec![0, 0, 0, 1, 1, 2], vec![1, 1, 1, 1, 0, 0]] {
            for cps in [vec![1, 2, 4], vec![3], vec![2, 5]] {
                for gamma in [int(1), rat(3, 2)] {
                    let spec = FairnessSpec::new(groups.clone(), cps.clone(), gamma).unwrap();
                    let got = fair_impedance_exact(&g, &Bag::full(6), &spec).unwrap();
                    assert_eq!(got.as_ref().map(|r| r.0), brute_fair(&g, &Bag::full(6), &spec));
                    if let Some((w, p)) = got {
                        assert!(is_gamma_fair(&p, &spec).unwrap());
                        assert_eq!(crusade_width(&g, &p).unwrap(), w);
                    }
                }
            }
        }
    }
}
