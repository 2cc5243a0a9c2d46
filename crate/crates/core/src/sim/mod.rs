//! Exact event-driven simulation of the SIS chain and the curing policies
//! built on top of it.
//!
//! A susceptible node `v` becomes infected at rate `Σ_{u ∈ I} w_uv` and an
//! infected node `u` is cured at rate `ρ_u`. Every run owns a ChaCha8
//! generator seeded from `(seed, stream)`, so identical configurations give
//! bit-identical trajectories.

mod policy;
mod summary;

pub use policy::{
    run_baseline_policy, run_cure_policy, run_design_cure_policy, run_fair_cure_policy, run_maxcut_policy,
    run_policy, Adversary, FairnessConfig, PolicyConfig, PolicyKind,
};
pub use summary::{estimate_extinction, estimate_extinction_with_mode, ExtinctionSummary};
pub use policy::DEFAULT_ALPHA;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Bag, NodeId, WeightedGraph};
use crate::netdesign::PlanMode;
use crate::num::{to_f64, Rational};

/// Edge rates of a graph in floating point, as used by the simulator.
#[derive(Debug, Clone)]
pub struct RateGraph {
    n: usize,
    edges: Vec<(NodeId, NodeId, f64)>,
    adj: Vec<Vec<(NodeId, f64)>>,
}

impl RateGraph {
    pub fn new(g: &WeightedGraph) -> Self {
        let n = g.node_count();
        let edges: Vec<_> = g
            .edges()
            .iter()
            .filter(|e| *e.w.numer() != 0)
            .map(|e| (e.u, e.v, to_f64(&e.w)))
            .collect();
        let mut adj = vec![Vec::new(); n];
        for &(u, v, w) in &edges {
            adj[u].push((v, w));
            adj[v].push((u, w));
        }
        RateGraph { n, edges, adj }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    /// Total infection rate out of `infected`, i.e. its cut.
    pub fn cut(&self, infected: &[bool]) -> f64 {
        self.edges
            .iter()
            .filter(|&&(u, v, _)| infected[u] != infected[v])
            .map(|&(_, _, w)| w)
            .fold(0.0, |a, w| a + w)
    }

    /// Change of the cut when `u` flips state.
    pub fn flip_delta(&self, infected: &[bool], u: NodeId) -> f64 {
        self.adj[u]
            .iter()
            .map(|&(x, w)| if infected[x] == infected[u] { w } else { -w })
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EventKind {
    Infection,
    Cure,
    SegmentStart,
    WaitingStart,
    DesignApplied,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<NodeId>,
    /// Index into `SimTrajectory::plans` for design events.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub plan: Option<usize>,
}

/// Infected set, clock and curing allocation of a running chain.
#[derive(Debug, Clone)]
pub struct SisState {
    infected: Vec<bool>,
    count: usize,
    pub clock: f64,
    pub seed: u64,
    /// `(u, ρ_u)`; every `u` must be infected.
    pub cure_allocation: Vec<(NodeId, f64)>,
    rng: ChaCha8Rng,
}

impl SisState {
    pub fn new(n: usize, init: &Bag, seed: u64, stream: u64) -> Result<Self> {
        init.validate(n)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(SisState {
            infected: init.mask(n),
            count: init.len(),
            clock: 0.0,
            seed,
            cure_allocation: Vec::new(),
            rng,
        })
    }

    pub fn infected_mask(&self) -> &[bool] {
        &self.infected
    }

    pub fn infected(&self) -> Bag {
        (0..self.infected.len()).filter(|&u| self.infected[u]).collect()
    }

    pub fn infected_count(&self) -> usize {
        self.count
    }

    pub fn is_extinct(&self) -> bool {
        self.count == 0
    }

    /// Next transition and its time, without applying it.
    fn sample(&mut self, g: &RateGraph) -> Result<(f64, EventKind, NodeId)> {
        for &(u, rho) in &self.cure_allocation {
            if !self.infected[u] || rho < 0.0 || !rho.is_finite() {
                return Err(Error::Contract(format!("invalid cure allocation {rho} on node {u}")));
            }
        }
        let infection = g.cut(&self.infected);
        let curing: f64 = self.cure_allocation.iter().map(|&(_, r)| r).sum();
        let total = infection + curing;
        if total <= 0.0 {
            return Err(Error::Stalled { time: self.clock });
        }
        let u: f64 = self.rng.random();
        let dt = -(1.0 - u).ln() / total;
        let mut x = self.rng.random::<f64>() * total;
        if x < infection {
            let mut last = None;
            for &(a, b, w) in &g.edges {
                if self.infected[a] == self.infected[b] {
                    continue;
                }
                let target = if self.infected[a] { b } else { a };
                last = Some(target);
                if x < w {
                    return Ok((dt, EventKind::Infection, target));
                }
                x -= w;
            }
            // only reachable through rounding at the upper end
            if let Some(t) = last {
                return Ok((dt, EventKind::Infection, t));
            }
        }
        x -= infection;
        let mut pick = None;
        for &(u, rho) in &self.cure_allocation {
            if rho <= 0.0 {
                continue;
            }
            pick = Some(u);
            if x < rho {
                break;
            }
            x -= rho;
        }
        match pick {
            Some(u) => Ok((dt, EventKind::Cure, u)),
            None => Err(Error::Stalled { time: self.clock }),
        }
    }

    fn apply(&mut self, kind: EventKind, u: NodeId) {
        match kind {
            EventKind::Infection => {
                self.infected[u] = true;
                self.count += 1;
            }
            EventKind::Cure => {
                self.infected[u] = false;
                self.count -= 1;
                self.cure_allocation.retain(|&(x, _)| x != u);
            }
            _ => {}
        }
    }

    /// One exact Gillespie transition under the current allocation.
    pub fn step(&mut self, g: &RateGraph) -> Result<Event> {
        if self.is_extinct() {
            return Err(Error::Contract("step on an extinct state".into()));
        }
        let (dt, kind, u) = self.sample(g)?;
        self.clock += dt;
        self.apply(kind, u);
        Ok(Event {
            time: self.clock,
            kind,
            node: Some(u),
            plan: None,
        })
    }

    /// Like `step`, but stops at `cap` without firing when the next event
    /// would come later.
    pub fn step_until(&mut self, g: &RateGraph, cap: f64) -> Result<Option<Event>> {
        if self.is_extinct() {
            return Err(Error::Contract("step on an extinct state".into()));
        }
        let (dt, kind, u) = self.sample(g)?;
        if self.clock + dt > cap {
            self.clock = cap;
            return Ok(None);
        }
        self.clock += dt;
        self.apply(kind, u);
        Ok(Some(Event {
            time: self.clock,
            kind,
            node: Some(u),
            plan: None,
        }))
    }
}

/// One exact transition of `s` on `g`.
pub fn step(g: &WeightedGraph, s: &mut SisState) -> Result<Event> {
    s.step(&RateGraph::new(g))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentRecord {
    pub start: f64,
    pub end: f64,
    pub bag_size: usize,
    /// Width of the segment's crusade, or the certified max-cut bound for
    /// design periods of the max-cut policy.
    pub width: Rational,
    pub max_cut: f64,
    /// Fairness factor the crusade was built for, fair policy only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Rational>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub time: f64,
    pub bag_size: usize,
    pub cost: Rational,
    pub certified_bound: Rational,
    pub mode: PlanMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrajectory {
    pub policy: PolicyKind,
    pub seed: u64,
    pub stream: u64,
    pub events: Vec<Event>,
    pub extinction_time: Option<f64>,
    pub censored: bool,
    /// Time the run stopped: extinction or the cap.
    pub end_time: f64,
    pub segments: Vec<SegmentRecord>,
    pub plans: Vec<PlanRecord>,
    /// Sum of all plan costs.
    pub total_reduction: Rational,
    /// Set when some segment had no fair crusade and used a plain one.
    pub fair_fallback: bool,
    /// Largest observed ratio of infection rate to curing rate, for the
    /// policies that assert a drift condition.
    pub max_rate_ratio: f64,
}

impl SimTrajectory {
    fn new(policy: PolicyKind, seed: u64, stream: u64) -> Self {
        SimTrajectory {
            policy,
            seed,
            stream,
            events: Vec::new(),
            extinction_time: None,
            censored: false,
            end_time: 0.0,
            segments: Vec::new(),
            plans: Vec::new(),
            total_reduction: Rational::from_integer(0),
            fair_fallback: false,
            max_rate_ratio: 0.0,
        }
    }

    pub fn infection_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::Infection).count()
    }

    pub fn cure_count(&self) -> usize {
        self.events.iter().filter(|e| e.kind == EventKind::Cure).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::int;

    #[test]
    fn isolated_node_is_cured() {
        let g = WeightedGraph::new(1, []).unwrap();
        let mut s = SisState::new(1, &Bag::singleton(0), 3, 0).unwrap();
        s.cure_allocation = vec![(0, 2.0)];
        let e = step(&g, &mut s).unwrap();
        assert_eq!(e.kind, EventKind::Cure);
        assert!(s.is_extinct());
    }

    #[test]
    fn edge_without_curing_infects() {
        let g = WeightedGraph::new(2, [(0, 1, int(1))]).unwrap();
        let mut s = SisState::new(2, &Bag::singleton(0), 3, 0).unwrap();
        let e = step(&g, &mut s).unwrap();
        assert_eq!((e.kind, e.node), (EventKind::Infection, Some(1)));
        assert_eq!(s.infected_count(), 2);
    }

    #[test]
    fn zero_rate_stalls() {
        let g = WeightedGraph::new(2, []).unwrap();
        let mut s = SisState::new(2, &Bag::singleton(0), 3, 0).unwrap();
        assert!(matches!(step(&g, &mut s), Err(Error::Stalled { .. })));
    }

    #[test]
    fn allocation_must_target_infected() {
        let g = WeightedGraph::new(2, []).unwrap();
        let mut s = SisState::new(2, &Bag::singleton(0), 3, 0).unwrap();
        s.cure_allocation = vec![(1, 1.0)];
        assert!(matches!(step(&g, &mut s), Err(Error::Contract(_))));
    }
}
