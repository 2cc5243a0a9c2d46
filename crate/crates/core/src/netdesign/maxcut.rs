use num_rational::BigRational;
use num_traits::{One, Zero};

use super::simplex::{self, Lp, Row, Sense};
use super::{PlanMode, ReductionPlan, SolverDiagnostics};
use crate::error::{Error, Result};
use crate::graph::exact::restricted_max_cut_exact_with_limit;
use crate::graph::{Bag, WeightedGraph};
use crate::num::{from_big, int, to_big, Rational};

pub const MINIMAX_EXACT_LIMIT: usize = 12;
const MAX_ROUNDS: usize = 10_000;

/// `min_Δ max_{Q ⊆ A} c_{G'}(Q)` over `0 ≤ Δ ≤ w`, `ΣΔ ≤ budget`, as an
/// epigraph LP over subset constraints. Subsets are added lazily: after each
/// solve the most violated one is found by exhaustive max-cut and appended
/// until none remains, so the final value is exact.
pub fn minimax_exact(g: &WeightedGraph, a: &Bag, budget: Rational) -> Result<ReductionPlan> {
    if a.len() > MINIMAX_EXACT_LIMIT {
        return Err(Error::Capacity {
            size: a.len(),
            limit: MINIMAX_EXACT_LIMIT,
        });
    }
    a.validate(g.node_count())?;
    if budget < int(0) {
        return Err(Error::domain(format!("budget must be nonnegative, got {budget}")));
    }
    let vars: Vec<usize> = (0..g.edge_count())
        .filter(|&i| {
            let e = &g.edges()[i];
            (a.contains(e.u) || a.contains(e.v)) && e.w > int(0)
        })
        .collect();
    let m = vars.len();
    let t = m;
    let mut lp = Lp {
        cost: (0..=m)
            .map(|j| if j == t { BigRational::one() } else { BigRational::zero() })
            .collect(),
        upper: vars
            .iter()
            .map(|&i| Some(to_big(&g.edges()[i].w)))
            .chain([None])
            .collect(),
        rows: vec![Row {
            coeffs: (0..m).map(|j| (j, BigRational::one())).collect(),
            sense: Sense::Le,
            rhs: to_big(&budget),
        }],
    };
    let mut deltas = vec![int(0); g.edge_count()];
    // epigraph value of the last LP solve
    let mut level: Option<Rational> = None;
    let mut iterations = 0;
    for _ in 0..MAX_ROUNDS {
        let reduced: Vec<Rational> = g.edges().iter().zip(&deltas).map(|(e, d)| e.w - d).collect();
        let (phi, q) = restricted_max_cut_exact_with_limit(&g.reweighted(&reduced)?, a, MINIMAX_EXACT_LIMIT)?;
        if level.is_some_and(|v| phi <= v) {
            let mut plan = ReductionPlan::new(deltas, phi, PlanMode::Fractional);
            plan.diagnostics = Some(SolverDiagnostics {
                iterations,
                residual: 0.0,
                duality_gap: 0.0,
                exact: true,
            });
            return Ok(plan);
        }
        // t + Σ_{e ∈ δ(Q)} Δ_e ≥ c(Q)
        let crossing = (0..m).filter(|&j| {
            let e = &g.edges()[vars[j]];
            q.contains(e.u) != q.contains(e.v)
        });
        let c: Rational = g
            .edges()
            .iter()
            .filter(|e| q.contains(e.u) != q.contains(e.v))
            .map(|e| e.w)
            .sum();
        lp.rows.push(Row {
            coeffs: crossing
                .map(|j| (j, BigRational::one()))
                .chain([(t, BigRational::one())])
                .collect(),
            sense: Sense::Ge,
            rhs: to_big(&c),
        });
        let sol = simplex::solve(&lp)?;
        iterations += sol.iterations;
        let numeric = || Error::Numeric {
            iterations,
            gap: f64::NAN,
            decrement: f64::NAN,
        };
        for (j, &i) in vars.iter().enumerate() {
            deltas[i] = from_big(&sol.x[j]).ok_or_else(numeric)?;
        }
        level = Some(from_big(&sol.objective).ok_or_else(numeric)?);
    }
    Err(Error::Numeric {
        iterations,
        gap: f64::NAN,
        decrement: f64::NAN,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::restricted_max_cut_exact;
    use crate::num::rat;

    fn unit(n: usize, edges: &[(usize, usize)]) -> WeightedGraph {
        WeightedGraph::new(n, edges.iter().map(|&(u, v)| (u, v, int(1)))).unwrap()
    }

    #[test]
    fn single_edge() {
        let g = unit(2, &[(0, 1)]);
        let plan = minimax_exact(&g, &Bag::full(2), rat(1, 2)).unwrap();
        assert_eq!(plan.certified_bound, rat(1, 2));
        assert_eq!(plan.total_cost, rat(1, 2));
    }

    #[test]
    fn zero_budget_is_phi() {
        let g = unit(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (0, 2)]);
        let a = Bag::from(vec![0, 1, 2, 4]);
        let (phi, _) = restricted_max_cut_exact(&g, &a).unwrap();
        assert_eq!(minimax_exact(&g, &a, int(0)).unwrap().certified_bound, phi);
    }

    #[test]
    fn triangle_matches_grid_search() {
        let g = unit(3, &[(0, 1), (1, 2), (0, 2)]);
        let a = Bag::full(3);
        let value = minimax_exact(&g, &a, rat(3, 2)).unwrap().certified_bound;
        // φ of a triangle is its largest vertex degree; spend the rest of the
        // budget on the third edge
        let mut best = int(10);
        for x in 0..=100 {
            for y in 0..=(150 - x).min(100) {
                let z = (150 - x - y).min(100);
                let w = [int(1) - rat(x, 100), int(1) - rat(y, 100), int(1) - rat(z, 100)];
                let phi = (w[0] + w[2]).max(w[0] + w[1]).max(w[1] + w[2]);
                best = best.min(phi);
            }
        }
        assert_eq!(value, best);
        assert_eq!(value, int(1));
    }

    #[test]
    fn capacity_limit() {
        let g = WeightedGraph::new(13, []).unwrap();
        assert!(matches!(minimax_exact(&g, &Bag::full(13), int(0)), Err(Error::Capacity { .. })));
    }
}
