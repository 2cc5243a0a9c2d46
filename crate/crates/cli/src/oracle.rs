//! Approximation-versus-oracle comparisons on random small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use sisctl::balanced::CutStrategy;
use sisctl::crusade::{appr_impe, fair_appr_impe};
use sisctl::generators::random_connected;
use sisctl::graph::{
    crusade_width, cut_profile, fair_impedance_exact, impedance_exact, is_gamma_fair, restricted_max_cut_exact, Bag,
    Crusade, FairnessSpec, WeightedGraph,
};
use sisctl::netdesign::{minimax_exact, minimax_sdp, solve_width_lp, uwcmp_solve, width_opt_rounding};
use sisctl::num::{common_denominator, int, rat, scale, to_f64, Rational};
use sisctl::Result;

/// Factor allowed between the semidefinite design and the exact minimax.
pub const SDP_FACTOR: f64 = 1.14;
pub const SDP_SLACK: f64 = 1e-4;
pub const SDP_GAP: f64 = 1e-6;
/// Largest number of bag-touching edges the exhaustive deletion oracle takes.
pub const EXHAUSTIVE_EDGE_LIMIT: usize = 18;

pub fn quarter_weights() -> Vec<Rational> {
    vec![rat(1, 4), rat(1, 2), rat(3, 4), int(1)]
}

/// Impedance as the best width over every removal order of `a`, enumerated
/// depth first with incremental integer cuts. Independent of the subset
/// recursion.
pub fn impedance_by_orderings(g: &WeightedGraph, a: &Bag) -> Rational {
    let n = g.node_count();
    let denom = common_denominator(g.edges().iter().map(|e| &e.w));
    let mut adj = vec![Vec::new(); n];
    for e in g.edges() {
        let w = scale(&e.w, denom);
        adj[e.u].push((e.v, w));
        adj[e.v].push((e.u, w));
    }
    let mut inside = a.mask(n);
    let cut: i64 = g
        .edges()
        .iter()
        .filter(|e| inside[e.u] != inside[e.v])
        .map(|e| scale(&e.w, denom))
        .sum();
    let mut left = a.members().to_vec();
    let best = orderings(&adj, &mut inside, &mut left, cut, cut, i64::MAX);
    Rational::new(best, denom)
}

fn orderings(adj: &[Vec<(usize, i64)>], inside: &mut [bool], left: &mut Vec<usize>, cut: i64, worst: i64, best: i64) -> i64 {
    if left.is_empty() {
        return best.min(worst);
    }
    let mut best = best;
    for i in 0..left.len() {
        let u = left.swap_remove(i);
        let delta: i64 = adj[u].iter().map(|&(v, w)| if inside[v] { w } else { -w }).sum();
        inside[u] = false;
        let next = cut + delta;
        best = orderings(adj, inside, left, next, worst.max(next), best);
        inside[u] = true;
        left.push(u);
        let last = left.len() - 1;
        left.swap(i, last);
    }
    best
}

/// Cheapest whole-edge deletion set keeping every cut of `p` at most `b`,
/// by enumeration over edges touching the crusade's start bag. `None` above
/// the edge limit.
pub fn integral_width_optimum(g: &WeightedGraph, p: &Crusade, b: Rational) -> Option<Rational> {
    let a = p.start();
    let touching: Vec<usize> = (0..g.edge_count())
        .filter(|&i| {
            let e = &g.edges()[i];
            a.contains(e.u) || a.contains(e.v)
        })
        .collect();
    if touching.len() > EXHAUSTIVE_EDGE_LIMIT {
        return None;
    }
    let denom = common_denominator(g.edges().iter().map(|e| &e.w).chain([&b]));
    let w: Vec<i64> = touching.iter().map(|&i| scale(&g.edges()[i].w, denom)).collect();
    let bound = scale(&b, denom);
    let cuts: Vec<(i64, u32)> = p
        .bags()
        .iter()
        .map(|bag| {
            let mut mask = 0u32;
            let mut c = 0;
            for (j, &i) in touching.iter().enumerate() {
                let e = &g.edges()[i];
                if bag.contains(e.u) != bag.contains(e.v) {
                    mask |= 1 << j;
                    c += w[j];
                }
            }
            (c, mask)
        })
        .collect();
    let weight_of = |set: u32| -> i64 {
        let mut s = 0;
        let mut bits = set;
        while bits != 0 {
            s += w[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        s
    };
    (0u32..1 << touching.len())
        .filter(|&del| cuts.iter().all(|&(c, mask)| c - weight_of(del & mask) <= bound))
        .map(weight_of)
        .min()
        .map(|v| Rational::new(v, denom))
}

/// `num / den`, reading `0/0` as one.
pub fn ratio(num: Rational, den: Rational) -> f64 {
    if den == int(0) {
        if num == int(0) {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        to_f64(&(num / den))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub pair: String,
    pub instances: usize,
    pub worst_ratio: f64,
    pub hard_pass: usize,
    pub hard_fail: usize,
    /// Instances above an oracle's capacity.
    pub skipped: usize,
}

impl PairReport {
    fn new(pair: &str) -> Self {
        PairReport {
            pair: pair.into(),
            instances: 0,
            worst_ratio: 1.0,
            hard_pass: 0,
            hard_fail: 0,
            skipped: 0,
        }
    }

    fn record(&mut self, ratio: Option<f64>, ok: bool) {
        self.instances += 1;
        if let Some(r) = ratio {
            self.worst_ratio = self.worst_ratio.max(r);
        }
        if ok {
            self.hard_pass += 1;
        } else {
            self.hard_fail += 1;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub size_limit: usize,
    pub seed: u64,
    pub pairs: Vec<PairReport>,
}

impl OracleReport {
    pub fn failures(&self) -> usize {
        self.pairs.iter().map(|p| p.hard_fail).sum()
    }
}

fn random_bag(rng: &mut ChaCha8Rng, n: usize) -> Bag {
    let bag: Bag = (0..n).filter(|_| rng.random_bool(0.7)).collect();
    if bag.is_empty() {
        Bag::singleton(rng.random_range(0..n))
    } else {
        bag
    }
}

pub fn oracle_suite(size_limit: usize, seed: u64) -> Result<OracleReport> {
    oracle_suite_with(size_limit, seed, 12)
}

/// `per_size` instances for every `n` in `1..=size_limit`.
pub fn oracle_suite_with(size_limit: usize, seed: u64, per_size: usize) -> Result<OracleReport> {
    if size_limit == 0 || size_limit > 14 {
        return Err(sisctl::Error::Domain(format!("size limit must be in 1..=14, got {size_limit}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut imp = PairReport::new("appr_impe/impedance_exact");
    let mut fair = PairReport::new("fair_appr_impe/fair_impedance_exact");
    let mut round = PairReport::new("width_opt_rounding/integral_optimum");
    let mut uw = PairReport::new("uwcmp_solve/integral_optimum");
    let mut sdp = PairReport::new("minimax_sdp/minimax_exact");
    let strategy = CutStrategy::default();
    for n in 1..=size_limit {
        for _ in 0..per_size {
            let p = rng.random_range(0.1..0.7);
            let g = random_connected(n, p, &quarter_weights(), &mut rng)?;
            let a = random_bag(&mut rng, n);

            let crusade = appr_impe(&g, &a, strategy)?;
            let z = crusade_width(&g, &crusade)?;
            let (delta, _) = impedance_exact(&g, &a)?;
            let valid = crusade.start() == &a && crusade.is_full();
            imp.record(Some(ratio(z, delta)), valid && z >= delta);

            let groups: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
            let checkpoints = if n >= 2 { vec![rng.random_range(1..n)] } else { vec![] };
            let spec = FairnessSpec::new(groups, checkpoints, int(1))?;
            let full = Bag::full(n);
            let exact = fair_impedance_exact(&g, &full, &spec)?;
            let got = fair_appr_impe(&g, &full, &spec, strategy)?;
            let fair_ok = match &got {
                Some(fc) => is_gamma_fair(&fc.crusade, &spec.with_gamma(fc.gamma))?,
                None => exact.is_none(),
            };
            let r = match (&got, &exact) {
                (Some(fc), Some((w, _))) => Some(ratio(crusade_width(&g, &fc.crusade)?, *w)),
                _ => None,
            };
            fair.record(r, fair_ok);

            let quarters = (to_f64(&z) * 4.0).round() as i64;
            let b = rat(rng.random_range(0..=quarters), 4);
            match integral_width_optimum(&g, &crusade, b) {
                Some(opt) => {
                    let lp = solve_width_lp(&g, &a, &crusade, b)?;
                    let rounded = width_opt_rounding(&g, &a, &crusade, &lp)?;
                    let after = crusade_width(&rounded.apply(&g)?, &crusade)?;
                    let k = int(a.len() as i64);
                    let ok = after <= b
                        && lp.total_cost <= opt
                        && rounded.total_cost <= lp.total_cost + k
                        && rounded.total_cost <= opt + k;
                    round.record(Some(ratio(rounded.total_cost, opt)), ok);
                }
                None => round.skipped += 1,
            }

            let unit = g.reweighted(&vec![int(1); g.edge_count()])?;
            let zu = cut_profile(&unit, &crusade)?.into_iter().max().unwrap_or(int(0));
            let bu = rng.random_range(0..=*zu.numer()) as u64;
            match integral_width_optimum(&unit, &crusade, int(bu as i64)) {
                Some(opt) => {
                    let plan = uwcmp_solve(&unit, &a, &crusade, bu)?;
                    let after = crusade_width(&plan.apply(&unit)?, &crusade)?;
                    uw.record(Some(ratio(plan.total_cost, opt)), plan.total_cost == opt && after <= int(bu as i64));
                }
                None => uw.skipped += 1,
            }

            if a.len() <= 10 {
                let touching: Rational = g
                    .edges()
                    .iter()
                    .filter(|e| a.contains(e.u) || a.contains(e.v))
                    .map(|e| e.w)
                    .sum();
                let max_q = (to_f64(&touching) * 2.0).floor() as i64;
                let budget = rat(rng.random_range(0..=max_q), 4);
                let (r, ok) = sdp_pair(&g, &a, budget)?;
                sdp.record(Some(r), ok);
            } else {
                sdp.skipped += 1;
            }
        }
    }
    Ok(OracleReport {
        size_limit,
        seed,
        pairs: vec![imp, fair, round, uw, sdp],
    })
}

/// `(φ(G'_sdp) / minimax_exact, within factor and gap)`.
pub fn sdp_pair(g: &WeightedGraph, a: &Bag, budget: Rational) -> Result<(f64, bool)> {
    let plan = minimax_sdp(g, a, budget)?;
    let (phi, _) = restricted_max_cut_exact(&plan.apply(g)?, a)?;
    let exact = minimax_exact(g, a, budget)?.certified_bound;
    let gap = plan.diagnostics.as_ref().map_or(0.0, |d| d.duality_gap);
    let ok = to_f64(&phi) <= SDP_FACTOR * to_f64(&exact) + SDP_SLACK
        && gap <= SDP_GAP
        && phi <= plan.certified_bound
        && plan.total_cost <= budget;
    let r = if exact == int(0) {
        if to_f64(&phi) <= SDP_SLACK {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        to_f64(&phi) / to_f64(&exact)
    };
    Ok((r, ok))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orderings_on_k4() {
        let g = sisctl::generators::complete(4, int(1)).unwrap();
        assert_eq!(impedance_by_orderings(&g, &Bag::full(4)), int(4));
    }

    #[test]
    fn integral_optimum_on_path() {
        let g = sisctl::generators::path(4, int(1)).unwrap();
        let p = Crusade::full(Bag::full(4), vec![0, 1, 2, 3]).unwrap();
        assert_eq!(integral_width_optimum(&g, &p, int(1)), Some(int(0)));
        assert_eq!(integral_width_optimum(&g, &p, int(0)), Some(int(3)));
    }

    #[test]
    fn singletons_give_unit_ratios() {
        let r = oracle_suite(1, 3).unwrap();
        assert_eq!(r.failures(), 0);
        assert!(r.pairs.iter().all(|p| p.worst_ratio == 1.0));
    }
}
