//! Edge-weight reduction: crusade-width covering LP and its rounding, the
//! unit-weight interval-scheduling solver, and the max-cut minimax.

mod maxcut;
mod sdp;
pub(crate) mod simplex;
mod uwcmp;
mod width;

pub use maxcut::minimax_exact;
pub use sdp::{budget_search, minimax_sdp, SdpOptions};
pub use uwcmp::uwcmp_solve;
pub use width::{solve_width_lp, width_opt_rounding};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::WeightedGraph;
use crate::num::{int, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PlanMode {
    Fractional,
    Integral,
    Unweighted,
    SdpMinimax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverDiagnostics {
    pub iterations: usize,
    /// Largest constraint violation of the returned point (zero when exact).
    pub residual: f64,
    pub duality_gap: f64,
    pub exact: bool,
}

/// Per-edge reductions, indexed like `g.edges()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionPlan {
    pub deltas: Vec<Rational>,
    pub total_cost: Rational,
    pub certified_bound: Rational,
    pub mode: PlanMode,
    pub diagnostics: Option<SolverDiagnostics>,
}

impl ReductionPlan {
    pub(crate) fn new(deltas: Vec<Rational>, certified_bound: Rational, mode: PlanMode) -> Self {
        let total_cost = deltas.iter().sum();
        ReductionPlan {
            deltas,
            total_cost,
            certified_bound,
            mode,
            diagnostics: None,
        }
    }

    pub fn zero(g: &WeightedGraph, certified_bound: Rational, mode: PlanMode) -> Self {
        ReductionPlan::new(vec![int(0); g.edge_count()], certified_bound, mode)
    }

    /// Checks `0 ≤ Δ ≤ w` per edge, and `Δ ∈ {0, w}` for integral modes.
    pub fn validate(&self, g: &WeightedGraph) -> Result<()> {
        if self.deltas.len() != g.edge_count() {
            return Err(Error::Contract(format!(
                "plan has {} deltas for {} edges",
                self.deltas.len(),
                g.edge_count()
            )));
        }
        let integral = matches!(self.mode, PlanMode::Integral | PlanMode::Unweighted);
        for (e, d) in g.edges().iter().zip(&self.deltas) {
            if *d < int(0) || *d > e.w {
                return Err(Error::Contract(format!("delta {d} outside [0, {}] on ({}, {})", e.w, e.u, e.v)));
            }
            if integral && *d != int(0) && *d != e.w {
                return Err(Error::Contract(format!("fractional delta {d} on ({}, {})", e.u, e.v)));
            }
        }
        Ok(())
    }

    /// The modified graph `w − Δ`.
    pub fn apply(&self, g: &WeightedGraph) -> Result<WeightedGraph> {
        self.validate(g)?;
        let w: Vec<Rational> = g.edges().iter().zip(&self.deltas).map(|(e, d)| e.w - d).collect();
        g.reweighted(&w)
    }
}
