use serde::{Deserialize, Serialize};

use super::{run_policy, PolicyConfig};
use crate::error::{Error, Result};
use crate::graph::{Bag, WeightedGraph};
use crate::par::{self, ExecMode};

/// Extinction-time statistics over independent replicas. Censored replicas
/// enter the statistics at their cap time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtinctionSummary {
    pub replicas: usize,
    pub mean: f64,
    pub std_err: f64,
    pub median: f64,
    pub q10: f64,
    pub q90: f64,
    pub max: f64,
    pub censored: usize,
    /// Per replica: did an invariant assertion fire?
    pub violations: Vec<bool>,
    pub violation_count: usize,
    pub fallback_count: usize,
    pub mean_reduction: f64,
    pub max_rate_ratio: f64,
    pub times: Vec<f64>,
}

pub fn estimate_extinction(
    g: &WeightedGraph,
    init: &Bag,
    cfg: &PolicyConfig,
    replicas: usize,
    time_cap: Option<f64>,
) -> Result<ExtinctionSummary> {
    estimate_extinction_with_mode(g, init, cfg, replicas, time_cap, ExecMode::default())
}

/// Replica `i` runs on stream `cfg.stream + i` of the configured seed.
pub fn estimate_extinction_with_mode(
    g: &WeightedGraph,
    init: &Bag,
    cfg: &PolicyConfig,
    replicas: usize,
    time_cap: Option<f64>,
    mode: ExecMode,
) -> Result<ExtinctionSummary> {
    if replicas == 0 {
        return Err(Error::domain("need at least one replica"));
    }
    let mut cfg = cfg.clone();
    if time_cap.is_some() {
        cfg.time_cap = time_cap;
    }
    cfg.validate(g)?;
    let runs = par::map_range(mode, 0..replicas, |i| {
        match run_policy(g, init, &cfg.with_stream(cfg.stream + i as u64)) {
            Ok(t) => Ok(Some(t)),
            Err(Error::InvariantViolation { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    });
    let mut times = Vec::with_capacity(replicas);
    let mut violations = Vec::with_capacity(replicas);
    let (mut censored, mut fallback, mut reduction, mut ratio) = (0, 0, 0.0, 0.0f64);
    for run in runs {
        match run? {
            Some(t) => {
                violations.push(false);
                censored += t.censored as usize;
                fallback += t.fair_fallback as usize;
                reduction += crate::num::to_f64(&t.total_reduction);
                ratio = ratio.max(t.max_rate_ratio);
                times.push(t.end_time);
            }
            None => violations.push(true),
        }
    }
    let k = times.len() as f64;
    let mean = if times.is_empty() { f64::NAN } else { times.iter().sum::<f64>() / k };
    let std_err = if times.len() > 1 {
        let var = times.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (k - 1.0);
        (var / k).sqrt()
    } else {
        0.0
    };
    let mut sorted = times.clone();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| quantile(&sorted, p);
    Ok(ExtinctionSummary {
        replicas,
        mean,
        std_err,
        median: q(0.5),
        q10: q(0.1),
        q90: q(0.9),
        max: sorted.last().copied().unwrap_or(f64::NAN),
        censored,
        violation_count: violations.iter().filter(|&&v| v).count(),
        violations,
        fallback_count: fallback,
        mean_reduction: if times.is_empty() { 0.0 } else { reduction / k },
        max_rate_ratio: ratio,
        times,
    })
}

/// Linear interpolation between order statistics.
fn quantile(sorted: &[f64], p: f64) -> f64 {
    match sorted.len() {
        0 => f64::NAN,
        1 => sorted[0],
        n => {
            let x = p * (n - 1) as f64;
            let lo = x.floor() as usize;
            let hi = (lo + 1).min(n - 1);
            sorted[lo] + (x - lo as f64) * (sorted[hi] - sorted[lo])
        }
    }
}
