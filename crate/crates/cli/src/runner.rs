//! Executes manifest runs and single CLI tasks.

use std::path::Path;

use serde::Serialize;

use sisctl::crusade::appr_impe;
use sisctl::graph::{crusade_width, cut_profile, impedance_exact, restricted_max_cut_exact, Bag, Crusade, WeightedGraph};
use sisctl::netdesign::{budget_search, minimax_sdp, solve_width_lp, uwcmp_solve, width_opt_rounding, ReductionPlan};
use sisctl::num::{format_rational, int, Rational};
use sisctl::sim::{estimate_extinction, Adversary, FairnessConfig, PolicyConfig, PolicyKind};
use sisctl::{Error, Result};

use crate::manifest::{ExperimentManifest, RunSpec, Task, WidthMode};
use crate::oracle::ratio;
use crate::output::{render, Format, Sink};
use crate::svg::{line_chart, Series};
use crate::{CliError, EXIT_INVARIANT, EXIT_OK};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub run: String,
    pub graph: String,
    pub n: usize,
    pub policy: String,
    pub r: f64,
    pub replicas: usize,
    pub mean: f64,
    pub std_err: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    pub censored: usize,
    pub violations: usize,
    pub fallbacks: usize,
    pub mean_reduction: f64,
    pub max_rate_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignRow {
    pub run: String,
    pub task: String,
    pub graph: String,
    pub n: usize,
    pub bag_size: usize,
    /// Crusade width, or the restricted max-cut, before reduction.
    pub before: String,
    pub target: String,
    pub lp_cost: String,
    pub cost: String,
    pub ratio: f64,
    pub certified_bound: String,
    pub after: String,
    pub mode: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImpedanceRow {
    pub run: String,
    pub graph: String,
    pub n: usize,
    pub bag_size: usize,
    pub width: String,
    pub exact: String,
    pub ratio: f64,
    pub order: String,
}

/// One bag of a crusade: `removed` left the previous bag.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileRow {
    pub step: usize,
    pub removed: Option<usize>,
    pub bag_size: usize,
    pub cut: String,
}

pub fn profile_rows(g: &WeightedGraph, p: &Crusade) -> Result<Vec<ProfileRow>> {
    let cuts = cut_profile(g, p)?;
    Ok(cuts
        .iter()
        .enumerate()
        .map(|(i, c)| ProfileRow {
            step: i,
            removed: i.checked_sub(1).map(|j| p.removal_order()[j]),
            bag_size: p.start().len() - i,
            cut: format_rational(c),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Default)]
pub struct Results {
    pub name: String,
    pub summary: Vec<SummaryRow>,
    pub design: Vec<DesignRow>,
    pub impedance: Vec<ImpedanceRow>,
}

fn policy_name(k: PolicyKind) -> &'static str {
    match k {
        PolicyKind::Cure => "cure",
        PolicyKind::FairCure => "fair",
        PolicyKind::DesignCure => "design",
        PolicyKind::MaxCutAdversarial => "maxcut",
        PolicyKind::Baseline => "baseline",
    }
}

pub fn policy_config(run: &RunSpec, g: &WeightedGraph, r: f64) -> Result<PolicyConfig> {
    let n = g.node_count();
    let mut cfg = match run.policy {
        PolicyKind::Cure => PolicyConfig::cure(r, run.seed),
        PolicyKind::FairCure => {
            let groups = run
                .groups
                .as_ref()
                .ok_or_else(|| Error::Domain("the fair policy needs groups".into()))?
                .assign(n);
            PolicyConfig::fair(
                r,
                run.seed,
                FairnessConfig {
                    groups,
                    checkpoints: run.checkpoints.clone(),
                    gamma: run.gamma.unwrap_or(int(1)),
                },
            )
        }
        PolicyKind::DesignCure => PolicyConfig::design(r, run.seed),
        PolicyKind::MaxCutAdversarial => PolicyConfig::maxcut(r, run.seed, run.adversary.unwrap_or(Adversary::Uniform)),
        PolicyKind::Baseline => PolicyConfig::baseline(r, run.seed),
    };
    if let Some(a) = run.alpha {
        cfg.alpha = a;
    }
    if let Some(d) = run.restart_divisor {
        cfg.restart_divisor = d;
    }
    cfg.idle_waiting = run.idle_waiting;
    cfg.strategy = run.strategy;
    cfg.time_cap = run.time_cap;
    cfg.validate(g)?;
    Ok(cfg)
}

pub fn simulate_rows(run: &RunSpec, g: &WeightedGraph) -> Result<Vec<SummaryRow>> {
    let init = run.init.bag(g.node_count())?;
    run.budgets
        .iter()
        .map(|&r| {
            let cfg = policy_config(run, g, r)?;
            let s = estimate_extinction(g, &init, &cfg, run.replicas, None)?;
            Ok(SummaryRow {
                run: run.id.clone(),
                graph: run.graph.describe(),
                n: g.node_count(),
                policy: policy_name(run.policy).into(),
                r,
                replicas: s.replicas,
                mean: s.mean,
                std_err: s.std_err,
                median: s.median,
                q10: s.q10,
                q90: s.q90,
                censored: s.censored,
                violations: s.violation_count,
                fallbacks: s.fallback_count,
                mean_reduction: s.mean_reduction,
                max_rate_ratio: s.max_rate_ratio,
            })
        })
        .collect()
}

fn nonempty_bag(run: &RunSpec, g: &WeightedGraph) -> Result<Bag> {
    let a = run.init.bag(g.node_count())?;
    if a.is_empty() {
        return Err(Error::Domain(format!("run {} has an empty bag", run.id)));
    }
    Ok(a)
}

pub fn crusade_for(run: &RunSpec, g: &WeightedGraph, a: &Bag) -> Result<Crusade> {
    if run.identity_order {
        Crusade::full(a.clone(), a.members().to_vec())
    } else {
        appr_impe(g, a, run.strategy)
    }
}

/// `Ok(None)` when the bag exceeds the exact solver's capacity.
fn within_capacity<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::Capacity { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn opt_str(v: &Option<Rational>) -> String {
    v.as_ref().map(format_rational).unwrap_or_default()
}

/// With `use_exact`, the returned crusade is the exact optimum.
pub fn impedance_row(run: &RunSpec, g: &WeightedGraph, use_exact: bool) -> Result<(ImpedanceRow, Crusade)> {
    let a = nonempty_bag(run, g)?;
    let optimum = if use_exact {
        Some(impedance_exact(g, &a)?)
    } else {
        within_capacity(impedance_exact(g, &a))?
    };
    let p = match (&optimum, use_exact) {
        (Some((_, q)), true) => q.clone(),
        _ => crusade_for(run, g, &a)?,
    };
    let z = crusade_width(g, &p)?;
    let exact = optimum.map(|(d, _)| d);
    let row = ImpedanceRow {
        run: run.id.clone(),
        graph: run.graph.describe(),
        n: g.node_count(),
        bag_size: a.len(),
        width: format_rational(&z),
        exact: opt_str(&exact),
        ratio: exact.map_or(f64::NAN, |d| ratio(z, d)),
        order: crate::output::join(p.removal_order()),
    };
    Ok((row, p))
}

pub fn design_width_row(run: &RunSpec, g: &WeightedGraph) -> Result<(DesignRow, ReductionPlan)> {
    let a = nonempty_bag(run, g)?;
    let b = run.width.ok_or_else(|| Error::Domain("design-width needs a target width".into()))?;
    let p = crusade_for(run, g, &a)?;
    let before = crusade_width(g, &p)?;
    let (lp_cost, plan) = match run.width_mode {
        WidthMode::Uwcmp => {
            if !g.is_unit_weight() {
                return Err(Error::Domain("uwcmp mode needs a unit-weight graph".into()));
            }
            if !b.is_integer() || b < int(0) {
                return Err(Error::Domain(format!("uwcmp mode needs a nonnegative integer width, got {b}")));
            }
            (None, uwcmp_solve(g, &a, &p, b.to_integer() as u64)?)
        }
        mode => {
            let lp = solve_width_lp(g, &a, &p, b)?;
            let cost = lp.total_cost;
            let plan = if mode == WidthMode::Lp {
                lp
            } else {
                width_opt_rounding(g, &a, &p, &lp)?
            };
            (Some(cost), plan)
        }
    };
    let after = crusade_width(&plan.apply(g)?, &p)?;
    let row = DesignRow {
        run: run.id.clone(),
        task: "design-width".into(),
        graph: run.graph.describe(),
        n: g.node_count(),
        bag_size: a.len(),
        before: format_rational(&before),
        target: format_rational(&b),
        lp_cost: opt_str(&lp_cost),
        cost: format_rational(&plan.total_cost),
        ratio: lp_cost.map_or(f64::NAN, |c| ratio(plan.total_cost, c)),
        certified_bound: format_rational(&plan.certified_bound),
        after: format_rational(&after),
        mode: mode_name(&plan),
    };
    Ok((row, plan))
}

fn mode_name(plan: &ReductionPlan) -> String {
    match plan.mode {
        sisctl::netdesign::PlanMode::Fractional => "fractional",
        sisctl::netdesign::PlanMode::Integral => "integral",
        sisctl::netdesign::PlanMode::Unweighted => "unweighted",
        sisctl::netdesign::PlanMode::SdpMinimax => "sdp-minimax",
    }
    .into()
}

pub fn design_maxcut_row(run: &RunSpec, g: &WeightedGraph) -> Result<(DesignRow, ReductionPlan)> {
    let a = nonempty_bag(run, g)?;
    let plan = match (run.budget, run.target) {
        (Some(budget), None) => minimax_sdp(g, &a, budget)?,
        (None, Some(target)) => budget_search(g, &a, target, run.eps)?,
        _ => return Err(Error::Domain("design-maxcut needs exactly one of budget and target".into())),
    };
    let before = within_capacity(restricted_max_cut_exact(g, &a))?.map(|(c, _)| c);
    let after = within_capacity(restricted_max_cut_exact(&plan.apply(g)?, &a))?.map(|(c, _)| c);
    let row = DesignRow {
        run: run.id.clone(),
        task: "design-maxcut".into(),
        graph: run.graph.describe(),
        n: g.node_count(),
        bag_size: a.len(),
        before: opt_str(&before),
        target: opt_str(&run.budget.or(run.target)),
        lp_cost: String::new(),
        cost: format_rational(&plan.total_cost),
        ratio: match (after, before) {
            (Some(x), Some(y)) => ratio(x, y),
            _ => f64::NAN,
        },
        certified_bound: format_rational(&plan.certified_bound),
        after: opt_str(&after),
        mode: mode_name(&plan),
    };
    Ok((row, plan))
}

fn execute(manifest: &ExperimentManifest) -> Result<Results> {
    let mut res = Results {
        name: manifest.name.clone(),
        ..Results::default()
    };
    for run in &manifest.runs {
        let g = run.graph.build(run.seed)?;
        match run.task {
            Task::Simulate => res.summary.extend(simulate_rows(run, &g)?),
            Task::Impedance => res.impedance.push(impedance_row(run, &g, false)?.0),
            Task::DesignWidth => res.design.push(design_width_row(run, &g)?.0),
            Task::DesignMaxcut => res.design.push(design_maxcut_row(run, &g)?.0),
        }
    }
    Ok(res)
}

pub fn extinction_chart(rows: &[SummaryRow]) -> String {
    let mut series: Vec<Series> = Vec::new();
    for row in rows {
        let label = format!("{} ({})", row.run, row.policy);
        match series.iter_mut().find(|s| s.label == label) {
            Some(s) => s.points.push((row.r, row.mean)),
            None => series.push(Series {
                label,
                points: vec![(row.r, row.mean)],
            }),
        }
    }
    line_chart("Mean extinction time", "curing budget r", "mean extinction time", &series)
}

/// Runs every entry and writes the tables, the JSON bundle and the chart.
/// Returns the exit code: nonzero iff an invariant assertion fired.
pub fn run_manifest(manifest: &ExperimentManifest, out_dir: Option<&Path>) -> std::result::Result<i32, CliError> {
    let res = execute(manifest)?;
    let sink = Sink::new(out_dir.or(manifest.out.as_deref()))?;
    let mut json = serde_json::to_string_pretty(&res).map_err(|e| CliError::internal(e.to_string()))?;
    json.push('\n');
    if out_dir.or(manifest.out.as_deref()).is_some() {
        sink.emit("summary.csv", &render(&res.summary, Format::Csv)?)?;
        sink.emit("design.csv", &render(&res.design, Format::Csv)?)?;
        sink.emit("impedance.csv", &render(&res.impedance, Format::Csv)?)?;
        sink.emit("extinction.svg", &extinction_chart(&res.summary))?;
    }
    sink.emit("results.json", &json)?;
    let violated = res.summary.iter().any(|r| r.violations > 0);
    Ok(if violated { EXIT_INVARIANT } else { EXIT_OK })
}
