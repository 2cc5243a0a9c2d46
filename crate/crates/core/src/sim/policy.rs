use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::{Event, EventKind, PlanRecord, RateGraph, SegmentRecord, SimTrajectory, SisState};
use crate::balanced::CutStrategy;
use crate::crusade::{appr_impe, fair_appr_impe};
use crate::error::{Error, Result};
use crate::graph::{crusade_width, is_gamma_fair, max_degree, Bag, Crusade, FairnessSpec, NodeId, WeightedGraph};
use crate::netdesign::{budget_search, solve_width_lp, uwcmp_solve, width_opt_rounding, ReductionPlan};
use crate::num::{floor_to_grid, int, rat, to_f64, Rational};

/// Width and max-cut targets are floored onto this grid.
const TARGET_GRID: i64 = 10_000;
const TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    Cure,
    FairCure,
    DesignCure,
    MaxCutAdversarial,
    Baseline,
}

/// How the environment spreads the curing budget in the max-cut scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Adversary {
    /// `r′ / |I|` on every infected node.
    Uniform,
    /// Everything on the infected node whose cure raises the cut the most.
    AntiGreedy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessConfig {
    pub groups: Vec<usize>,
    /// Checkpoints at or beyond a segment's bag size are dropped for it.
    pub checkpoints: Vec<usize>,
    pub gamma: Rational,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    /// Curing budget `r` (or `r′` for the max-cut policy).
    pub r: f64,
    pub alpha: f64,
    pub seed: u64,
    pub stream: u64,
    /// Defaults to `10³·n/r`.
    pub time_cap: Option<f64>,
    pub fairness: Option<FairnessConfig>,
    pub adversary: Option<Adversary>,
    /// Leave waiting periods idle instead of curing the lowest infected id.
    pub idle_waiting: bool,
    /// The design policy restarts once `|D| ≥ r / (restart_divisor · d_max)`.
    pub restart_divisor: f64,
    pub strategy: CutStrategy,
}

/// Largest appr_impe / impedance ratio seen on the regression corpus.
pub const DEFAULT_ALPHA: f64 = 2.0;

impl PolicyConfig {
    fn base(kind: PolicyKind, r: f64, seed: u64) -> Self {
        PolicyConfig {
            kind,
            r,
            alpha: DEFAULT_ALPHA,
            seed,
            stream: 0,
            time_cap: None,
            fairness: None,
            adversary: None,
            idle_waiting: false,
            restart_divisor: 4.0,
            strategy: CutStrategy::Auto(12),
        }
    }

    pub fn cure(r: f64, seed: u64) -> Self {
        Self::base(PolicyKind::Cure, r, seed)
    }

    pub fn fair(r: f64, seed: u64, fairness: FairnessConfig) -> Self {
        PolicyConfig {
            fairness: Some(fairness),
            ..Self::base(PolicyKind::FairCure, r, seed)
        }
    }

    pub fn design(r: f64, seed: u64) -> Self {
        Self::base(PolicyKind::DesignCure, r, seed)
    }

    pub fn maxcut(r: f64, seed: u64, adversary: Adversary) -> Self {
        PolicyConfig {
            adversary: Some(adversary),
            ..Self::base(PolicyKind::MaxCutAdversarial, r, seed)
        }
    }

    pub fn baseline(r: f64, seed: u64) -> Self {
        Self::base(PolicyKind::Baseline, r, seed)
    }

    pub fn with_stream(&self, stream: u64) -> Self {
        PolicyConfig { stream, ..self.clone() }
    }

    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        if !(self.r > 0.0) || !self.r.is_finite() {
            return Err(Error::domain(format!("budget r must be positive, got {}", self.r)));
        }
        if !(self.alpha > 0.0) || !self.alpha.is_finite() {
            return Err(Error::domain(format!("alpha must be positive, got {}", self.alpha)));
        }
        if !(self.restart_divisor > 0.0) {
            return Err(Error::domain("restart divisor must be positive"));
        }
        if let Some(cap) = self.time_cap {
            if !(cap >= 0.0) {
                return Err(Error::domain(format!("time cap must be nonnegative, got {cap}")));
            }
        }
        let fair = self.kind == PolicyKind::FairCure;
        if fair != self.fairness.is_some() {
            return Err(Error::domain("fairness settings are required by, and only by, the fair policy"));
        }
        if (self.kind == PolicyKind::MaxCutAdversarial) != self.adversary.is_some() {
            return Err(Error::domain("an adversary is required by, and only by, the max-cut policy"));
        }
        if let Some(f) = &self.fairness {
            FairnessSpec::new(f.groups.clone(), Vec::new(), f.gamma)?.check_covers(&Bag::full(g.node_count()))?;
        }
        Ok(())
    }

    fn cap(&self, n: usize) -> f64 {
        self.time_cap.unwrap_or(1e3 * n.max(1) as f64 / self.r)
    }
}

/// Dispatches on `cfg.kind`.
pub fn run_policy(g: &WeightedGraph, init: &Bag, cfg: &PolicyConfig) -> Result<SimTrajectory> {
    match cfg.kind {
        PolicyKind::Cure => run_cure_policy(g, init, cfg),
        PolicyKind::FairCure => run_fair_cure_policy(g, init, cfg),
        PolicyKind::DesignCure => run_design_cure_policy(g, init, cfg),
        PolicyKind::MaxCutAdversarial => run_maxcut_policy(g, init, cfg),
        PolicyKind::Baseline => run_baseline_policy(g, init, cfg),
    }
}

struct Engine {
    state: SisState,
    traj: SimTrajectory,
    cap: f64,
}

impl Engine {
    fn new(g: &WeightedGraph, init: &Bag, cfg: &PolicyConfig, kind: PolicyKind) -> Result<Self> {
        if cfg.kind != kind {
            return Err(Error::domain(format!("config is for {:?}, not {:?}", cfg.kind, kind)));
        }
        cfg.validate(g)?;
        Ok(Engine {
            state: SisState::new(g.node_count(), init, cfg.seed, cfg.stream)?,
            traj: SimTrajectory::new(kind, cfg.seed, cfg.stream),
            cap: cfg.cap(g.node_count()),
        })
    }

    /// `false` once the run is over, by extinction or by the time cap.
    fn running(&mut self) -> bool {
        if self.state.is_extinct() {
            self.traj.extinction_time = Some(self.state.clock);
            return false;
        }
        !self.traj.censored
    }

    fn mark(&mut self, kind: EventKind, plan: Option<usize>) {
        self.traj.events.push(Event {
            time: self.state.clock,
            kind,
            node: None,
            plan,
        });
    }

    fn violation(&self, message: String) -> Error {
        Error::InvariantViolation {
            time: self.state.clock,
            message,
        }
    }

    /// Fires one transition with the full budget on `target` (or on the
    /// given allocation).
    fn advance(&mut self, g: &RateGraph, allocation: Vec<(NodeId, f64)>) -> Result<()> {
        self.state.cure_allocation = allocation;
        match self.state.step_until(g, self.cap)? {
            Some(e) => self.traj.events.push(e),
            None => self.traj.censored = true,
        }
        Ok(())
    }

    fn finish(mut self) -> SimTrajectory {
        self.traj.end_time = self.state.clock;
        if let Some(s) = self.traj.segments.last_mut() {
            s.end = self.state.clock;
        }
        self.traj
    }

    fn open_segment(&mut self, bag_size: usize, width: Rational, gamma: Option<Rational>) {
        if let Some(s) = self.traj.segments.last_mut() {
            s.end = self.state.clock;
        }
        self.traj.segments.push(SegmentRecord {
            start: self.state.clock,
            end: self.state.clock,
            bag_size,
            width,
            max_cut: 0.0,
            gamma,
        });
        self.mark(EventKind::SegmentStart, None);
    }

    fn observe_cut(&mut self, cut: f64) {
        if let Some(s) = self.traj.segments.last_mut() {
            s.max_cut = s.max_cut.max(cut);
        }
    }

    fn push_plan(&mut self, bag_size: usize, plan: &ReductionPlan) {
        self.traj.total_reduction += plan.total_cost;
        self.traj.plans.push(PlanRecord {
            time: self.state.clock,
            bag_size,
            cost: plan.total_cost,
            certified_bound: plan.certified_bound,
            mode: plan.mode,
        });
        let idx = self.traj.plans.len() - 1;
        self.mark(EventKind::DesignApplied, Some(idx));
    }
}

fn lowest(mask: &[bool], exclude: Option<&[bool]>) -> Option<NodeId> {
    (0..mask.len()).find(|&u| mask[u] && !exclude.is_some_and(|c| c[u]))
}

fn log2n_sq(n: usize) -> f64 {
    let l = (n as f64).log2().max(1.0);
    l * l
}

/// `x / d_max`, infinite on graphs without edges.
fn per_degree(x: f64, d_max: f64) -> f64 {
    if d_max > 0.0 {
        x / d_max
    } else {
        f64::INFINITY
    }
}

/// Curing order of a segment: the crusade and, for the fair policy, the
/// fairness factor it satisfies.
type CrusadeSource<'a> = dyn FnMut(&Bag, &mut SimTrajectory) -> Result<(Crusade, Option<Rational>)> + 'a;

/// The modified CURE policy: waiting periods until `c(I) ≤ r/(2α log₂²n)`,
/// then segments that spend the budget on `D(t) = I(t) \ C`.
pub fn run_cure_policy(g: &WeightedGraph, init: &Bag, cfg: &PolicyConfig) -> Result<SimTrajectory> {
    let strategy = cfg.strategy;
    run_segmented(g, init, cfg, PolicyKind::Cure, &mut |bag, _| {
        Ok((appr_impe(g, bag, strategy)?, None))
    })
}

/// CURE with γ-fair crusades; segments without one fall back to the plain
/// crusade and flag the trajectory.
pub fn run_fair_cure_policy(g: &WeightedGraph, init: &Bag, cfg: &PolicyConfig) -> Result<SimTrajectory> {
    let fair = cfg
        .fairness
        .clone()
        .ok_or_else(|| Error::domain("fair policy needs fairness settings"))?;
    let strategy = cfg.strategy;
    run_segmented(g, init, cfg, PolicyKind::FairCure, &mut |bag, traj| {
        let checkpoints: Vec<usize> = fair.checkpoints.iter().copied().filter(|&c| c > 0 && c < bag.len()).collect();
        let spec = FairnessSpec::new(fair.groups.clone(), checkpoints, fair.gamma)?;
        match fair_appr_impe(g, bag, &spec, strategy)? {
            Some(fc) => {
                if !is_gamma_fair(&fc.crusade, &spec.with_gamma(fc.gamma))? {
                    return Err(Error::InvariantViolation {
                        time: f64::NAN,
                        message: format!("crusade from a bag of {} nodes is not {}-fair", bag.len(), fc.gamma),
                    });
                }
                Ok((fc.crusade, Some(fc.gamma)))
            }
            None => {
                traj.fair_fallback = true;
                Ok((appr_impe(g, bag, strategy)?, None))
            }
        }
    })
}

fn run_segmented(
    g: &WeightedGraph,
    init: &Bag,
    cfg: &PolicyConfig,
    kind: PolicyKind,
    source: &mut CrusadeSource<'_>,
) -> Result<SimTrajectory> {
    let mut en = Engine::new(g, init, cfg, kind)?;
    let rates = RateGraph::new(g);
    let n = g.node_count();
    let r = cfg.r;
    let wait_threshold = r / (2.0 * cfg.alpha * log2n_sq(n));
    let d_threshold = per_degree(r / 8.0, to_f64(&max_degree(g)));
    // `Some(C)` inside a segment, with the number of events seen in it
    let mut segment: Option<(Vec<bool>, usize)> = None;
    let mut waiting = false;
    while en.running() {
        let infected = en.state.infected_mask().to_vec();
        let cut = rates.cut(&infected);
        let mut start = false;
        if let Some((c, seen)) = &segment {
            let d = (0..n).filter(|&u| infected[u] && !c[u]).count();
            if d == 0 {
                start = true;
            } else if *seen > 0 && d as f64 >= d_threshold {
                segment = None;
            }
        }
        if segment.is_none() && cut <= wait_threshold + TOL {
            start = true;
        }
        if start {
            let bag = en.state.infected();
            let (p, gamma) = source(&bag, &mut en.traj).map_err(|e| match e {
                Error::InvariantViolation { message, .. } => en.violation(message),
                e => e,
            })?;
            let width = crusade_width(g, &p)?;
            let mut c = infected.clone();
            c[p.removal_order()[0]] = false;
            segment = Some((c, 0));
            waiting = false;
            en.open_segment(bag.len(), width, gamma);
        } else if segment.is_none() && !waiting {
            waiting = true;
            en.mark(EventKind::WaitingStart, None);
        }
        let target = match &mut segment {
            Some((c, seen)) => {
                if cut > r / 2.0 + TOL {
                    return Err(en.violation(format!("cut {cut} of the infected set exceeds r/2 = {}", r / 2.0)));
                }
                en.observe_cut(cut);
                *seen += 1;
                lowest(&infected, Some(c))
            }
            None if cfg.idle_waiting => None,
            None => lowest(&infected, None),
        };
        let allocation = target.map(|u| vec![(u, r)]).unwrap_or_default();
        en.advance(&rates, allocation)?;
    }
    Ok(en.finish())
}

/// Full budget on the lowest infected id, no crusades.
pub fn run_baseline_policy(g: &WeightedGraph, init: &Bag, cfg: &PolicyConfig) -> Result<SimTrajectory> {
    let mut en = Engine::new(g, init, cfg, PolicyKind::Baseline)?;
    let rates = RateGraph::new(g);
    while en.running() {
        let u = lowest(en.state.infected_mask(), None).expect("nonempty");
        en.advance(&rates, vec![(u, cfg.r)])?;
    }
    Ok(en.finish())
}

/// Whole-edge reductions bringing the width of `p` down to `r/4`.
fn width_plan(g: &WeightedGraph, bag: &Bag, p: &Crusade, r: f64) -> Result<ReductionPlan> {
    if g.is_unit_weight() {
        return uwcmp_solve(g, bag, p, (r / 4.0).floor() as u64);
    }
    let b = floor_to_grid(r / 4.0, TARGET_GRID);
    let lp = solve_width_lp(g, bag, p, b)?;
    width_opt_rounding(g, bag, p, &lp)
}

/// CURE without waiting periods: each segment first deletes edges so the
/// crusade's width is at most `r/4`, then runs on the modified graph.
pub fn run_design_cure_policy(g: &WeightedGraph, init: &Bag, cfg: &PolicyConfig) -> Result<SimTrajectory> {
    let mut en = Engine::new(g, init, cfg, PolicyKind::DesignCure)?;
    let n = g.node_count();
    let r = cfg.r;
    let d_max = to_f64(&max_degree(g));
    let restart = per_degree(r / cfg.restart_divisor, d_max);
    let mut segment: Option<(Vec<bool>, RateGraph, usize)> = None;
    while en.running() {
        let infected = en.state.infected_mask().to_vec();
        let d = |c: &[bool]| (0..n).filter(|&u| infected[u] && !c[u]).count();
        let restart_now = match &segment {
            None => true,
            Some((c, _, seen)) => {
                let dc = d(c);
                dc == 0 || (*seen > 0 && dc as f64 >= restart)
            }
        };
        if restart_now {
            let bag = en.state.infected();
            let p = appr_impe(g, &bag, cfg.strategy)?;
            let plan = width_plan(g, &bag, &p, r)?;
            let modified = plan.apply(g)?;
            let width = crusade_width(&modified, &p)?;
            let mut c = infected.clone();
            c[p.removal_order()[0]] = false;
            en.open_segment(bag.len(), width, None);
            en.push_plan(bag.len(), &plan);
            segment = Some((c, RateGraph::new(&modified), 0));
        }
        let (c, rates, seen) = segment.as_mut().expect("segment open");
        let cut = rates.cut(&infected);
        let bound = r / 4.0 + d_max * d(c) as f64;
        if cut > bound + TOL {
            return Err(en.violation(format!("cut {cut} exceeds r/4 + d_max|D| = {bound}")));
        }
        en.observe_cut(cut);
        *seen += 1;
        let u = lowest(&infected, Some(c)).expect("D nonempty");
        let rates = rates.clone();
        en.advance(&rates, vec![(u, r)])?;
    }
    Ok(en.finish())
}

fn adversary_allocation(adv: Adversary, rates: &RateGraph, infected: &[bool], r: f64) -> Vec<(NodeId, f64)> {
    let members: Vec<NodeId> = (0..infected.len()).filter(|&u| infected[u]).collect();
    match adv {
        Adversary::Uniform => {
            let share = r / members.len() as f64;
            members.into_iter().map(|u| (u, share)).collect()
        }
        Adversary::AntiGreedy => {
            let mut best = members[0];
            let mut best_delta = f64::NEG_INFINITY;
            for &u in &members {
                let delta = rates.flip_delta(infected, u);
                if delta > best_delta {
                    best = u;
                    best_delta = delta;
                }
            }
            vec![(best, r)]
        }
    }
}

/// Adversarial curing with network design: each design period reduces edge
/// weights until the restricted max-cut of the infected bag is at most
/// `r′/4`; a period ends once `|D| ≥ r′/(4 d_max) − 1`. At every event the
/// curing rate `r′` must be at least twice the infection rate.
pub fn run_maxcut_policy(g: &WeightedGraph, init: &Bag, cfg: &PolicyConfig) -> Result<SimTrajectory> {
    let mut en = Engine::new(g, init, cfg, PolicyKind::MaxCutAdversarial)?;
    let adv = cfg.adversary.expect("validated");
    let n = g.node_count();
    let r = cfg.r;
    let d_max = to_f64(&max_degree(g));
    let end_threshold = per_degree(r / 4.0, d_max) - 1.0;
    let target = floor_to_grid(r / 4.0, TARGET_GRID);
    let eps = rat(1, 1000);
    let mut memo: HashMap<Bag, (ReductionPlan, RateGraph)> = HashMap::new();
    let mut period: Option<(Vec<bool>, RateGraph, usize)> = None;
    while en.running() {
        let infected = en.state.infected_mask().to_vec();
        let d = |a: &[bool]| (0..n).filter(|&u| infected[u] && !a[u]).count();
        let redesign = match &period {
            None => true,
            Some((a, _, seen)) => *seen > 0 && d(a) as f64 >= end_threshold,
        };
        if redesign {
            let bag = en.state.infected();
            if !memo.contains_key(&bag) {
                let plan = budget_search(g, &bag, target.max(int(0)), eps)?;
                let modified = RateGraph::new(&plan.apply(g)?);
                memo.insert(bag.clone(), (plan, modified));
            }
            let (plan, modified) = memo[&bag].clone();
            en.open_segment(bag.len(), plan.certified_bound, None);
            en.push_plan(bag.len(), &plan);
            period = Some((infected.clone(), modified, 0));
        }
        let (_, rates, seen) = period.as_mut().expect("period open");
        let cut = rates.cut(&infected);
        let ratio = cut / r;
        en.traj.max_rate_ratio = en.traj.max_rate_ratio.max(ratio);
        if 2.0 * cut > r + TOL {
            return Err(en.violation(format!("infection rate {cut} exceeds half the curing rate {r}")));
        }
        en.observe_cut(cut);
        *seen += 1;
        let allocation = adversary_allocation(adv, rates, &infected, r);
        let rates = rates.clone();
        en.advance(&rates, allocation)?;
    }
    Ok(en.finish())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> WeightedGraph {
        WeightedGraph::new(n, (1..n).map(|i| (i - 1, i, int(1)))).unwrap()
    }

    fn complete(n: usize) -> WeightedGraph {
        let mut e = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                e.push((u, v, int(1)));
            }
        }
        WeightedGraph::new(n, e).unwrap()
    }

    #[test]
    fn empty_start_is_extinct_at_zero() {
        let g = path(4);
        for cfg in [
            PolicyConfig::cure(10.0, 1),
            PolicyConfig::design(10.0, 1),
            PolicyConfig::maxcut(10.0, 1, Adversary::Uniform),
            PolicyConfig::baseline(10.0, 1),
        ] {
            let t = run_policy(&g, &Bag::empty(), &cfg).unwrap();
            assert_eq!(t.extinction_time, Some(0.0));
            assert!(t.events.is_empty());
        }
    }

    #[test]
    fn cure_runs_are_reproducible() {
        let g = path(12);
        let cfg = PolicyConfig::cure(60.0, 7);
        let a = run_cure_policy(&g, &Bag::full(12), &cfg).unwrap();
        let b = run_cure_policy(&g, &Bag::full(12), &cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.extinction_time.is_some());
        assert!(a.segments.iter().all(|s| s.max_cut <= 30.0));
    }

    #[test]
    fn fair_without_checkpoints_matches_cure() {
        let g = path(10);
        let fair = FairnessConfig {
            groups: (0..10).map(|u| u % 2).collect(),
            checkpoints: vec![],
            gamma: int(2),
        };
        let mut plain = run_cure_policy(&g, &Bag::full(10), &PolicyConfig::cure(50.0, 3)).unwrap();
        let fair = run_fair_cure_policy(&g, &Bag::full(10), &PolicyConfig::fair(50.0, 3, fair)).unwrap();
        plain.policy = PolicyKind::FairCure;
        for s in &mut plain.segments {
            s.gamma = Some(int(2));
        }
        assert_eq!(plain, fair);
    }

    #[test]
    fn infeasible_gamma_sets_fallback() {
        let g = path(8);
        let fair = FairnessConfig {
            groups: vec![0, 0, 0, 0, 1, 1, 1, 1],
            checkpoints: vec![4],
            gamma: rat(1, 4),
        };
        let t = run_fair_cure_policy(&g, &Bag::full(8), &PolicyConfig::fair(40.0, 1, fair)).unwrap();
        assert!(t.fair_fallback);
    }

    #[test]
    fn design_small_budget_deletes_edges() {
        let g = path(20);
        let t = run_design_cure_policy(&g, &Bag::full(20), &PolicyConfig::design(2.0, 5)).unwrap();
        assert!(t.total_reduction > int(0));
        let sum: Rational = t.plans.iter().map(|p| p.cost).sum();
        assert_eq!(sum, t.total_reduction);
    }

    #[test]
    fn maxcut_drift_on_k6() {
        let g = complete(6);
        let r = 2.0 * 6f64.log2();
        for seed in 0..5 {
            for adv in [Adversary::Uniform, Adversary::AntiGreedy] {
                let t = run_maxcut_policy(&g, &Bag::full(6), &PolicyConfig::maxcut(r, seed, adv)).unwrap();
                assert!(t.max_rate_ratio <= 0.5 + 1e-9);
                assert!(t.extinction_time.is_some());
            }
        }
    }

    #[test]
    fn kind_must_match_runner() {
        let g = path(3);
        assert!(run_cure_policy(&g, &Bag::full(3), &PolicyConfig::baseline(1.0, 0)).is_err());
        let mut cfg = PolicyConfig::cure(1.0, 0);
        cfg.adversary = Some(Adversary::Uniform);
        assert!(cfg.validate(&g).is_err());
    }
}
