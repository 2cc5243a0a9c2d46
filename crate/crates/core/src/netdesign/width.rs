use num_rational::BigRational;
use num_traits::ToPrimitive;

use super::simplex::{self, Lp, Row, Sense};
use super::{PlanMode, ReductionPlan, SolverDiagnostics};
use crate::error::{Error, Result};
use crate::graph::{Bag, Crusade, WeightedGraph};
use crate::num::{from_big, int, to_big, Rational};

/// Largest denominator solved in exact arithmetic; above it the LP runs in
/// floating point and the solution is rounded up onto a `1e-9` grid.
pub const EXACT_DENOMINATOR_LIMIT: i64 = 10_000;
const FLOAT_GRID: i64 = 1_000_000_000;

/// `(c(p_i), edges crossing p_i)` for every bag of the crusade.
pub(crate) fn crusade_cuts(g: &WeightedGraph, p: &Crusade) -> Vec<(Rational, Vec<usize>)> {
    let mut inside = p.start().mask(g.node_count());
    let mut out = Vec::with_capacity(p.len() + 1);
    let push = |inside: &[bool], out: &mut Vec<(Rational, Vec<usize>)>| {
        let crossing: Vec<usize> = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| inside[e.u] != inside[e.v])
            .map(|(i, _)| i)
            .collect();
        let c = crossing.iter().map(|&i| g.edges()[i].w).sum();
        out.push((c, crossing));
    };
    push(&inside, &mut out);
    for &v in p.removal_order() {
        inside[v] = false;
        push(&inside, &mut out);
    }
    out
}

fn check_inputs(g: &WeightedGraph, a: &Bag, p: &Crusade, b: &Rational) -> Result<()> {
    a.validate(g.node_count())?;
    if p.start() != a || !p.is_full() {
        return Err(Error::Contract("crusade must run from the bag to the empty set".into()));
    }
    if *b < int(0) {
        return Err(Error::domain(format!("width bound must be nonnegative, got {b}")));
    }
    Ok(())
}

/// Cheapest fractional reduction bringing every cut of `p` down to `b`.
pub fn solve_width_lp(g: &WeightedGraph, a: &Bag, p: &Crusade, b: Rational) -> Result<ReductionPlan> {
    check_inputs(g, a, p, &b)?;
    let active: Vec<(Rational, Vec<usize>)> = crusade_cuts(g, p)
        .into_iter()
        .filter(|(c, _)| *c > b)
        .map(|(c, edges)| (c - b, edges.into_iter().filter(|&e| g.edges()[e].w > int(0)).collect()))
        .collect();
    let mut plan = ReductionPlan::zero(g, b, PlanMode::Fractional);
    if active.is_empty() {
        plan.diagnostics = Some(SolverDiagnostics {
            iterations: 0,
            residual: 0.0,
            duality_gap: 0.0,
            exact: true,
        });
        return Ok(plan);
    }
    let mut vars: Vec<usize> = active.iter().flat_map(|(_, e)| e.iter().copied()).collect();
    vars.sort_unstable();
    vars.dedup();
    let mut col = vec![usize::MAX; g.edge_count()];
    for (j, &e) in vars.iter().enumerate() {
        col[e] = j;
    }
    let max_denom = vars
        .iter()
        .map(|&e| *g.edges()[e].w.denom())
        .chain([*b.denom()])
        .max()
        .unwrap_or(1);

    let build = |conv: &dyn Fn(&Rational) -> BigRational| -> Lp<BigRational> {
        Lp {
            cost: vars.iter().map(|_| conv(&int(1))).collect(),
            upper: vars.iter().map(|&e| Some(conv(&g.edges()[e].w))).collect(),
            rows: active
                .iter()
                .map(|(r, edges)| Row {
                    coeffs: edges.iter().map(|&e| (col[e], conv(&int(1)))).collect(),
                    sense: Sense::Ge,
                    rhs: conv(r),
                })
                .collect(),
        }
    };

    let mut exact = false;
    let mut iterations = 0;
    let mut x: Option<Vec<Rational>> = None;
    if max_denom <= EXACT_DENOMINATOR_LIMIT {
        let sol = simplex::solve(&build(&to_big))?;
        iterations = sol.iterations;
        x = sol.x.iter().map(from_big).collect();
        exact = x.is_some();
    }
    let x = match x {
        Some(x) => x,
        None => {
            let lp = build(&to_big);
            let f = |v: &BigRational| v.to_f64().unwrap_or(f64::NAN);
            let flp = Lp {
                cost: lp.cost.iter().map(f).collect(),
                upper: lp.upper.iter().map(|u| u.as_ref().map(f)).collect(),
                rows: lp
                    .rows
                    .iter()
                    .map(|r| Row {
                        coeffs: r.coeffs.iter().map(|(j, v)| (*j, f(v))).collect(),
                        sense: r.sense,
                        rhs: f(&r.rhs),
                    })
                    .collect(),
            };
            let sol = simplex::solve(&flp)?;
            iterations = sol.iterations;
            let mut x: Vec<Rational> = sol
                .x
                .iter()
                .zip(&vars)
                .map(|(v, &e)| ceil_to_grid(v.max(0.0), FLOAT_GRID).min(g.edges()[e].w))
                .collect();
            repair(&mut x, &active, &col, g, &vars);
            x
        }
    };
    for (j, &e) in vars.iter().enumerate() {
        plan.deltas[e] = x[j];
    }
    plan.total_cost = plan.deltas.iter().sum();
    let residual = active
        .iter()
        .map(|(r, edges)| {
            let got: Rational = edges.iter().map(|&e| plan.deltas[e]).sum();
            crate::num::to_f64(&(*r - got)).max(0.0)
        })
        .fold(0.0, f64::max);
    plan.diagnostics = Some(SolverDiagnostics {
        iterations,
        residual,
        duality_gap: 0.0,
        exact,
    });
    Ok(plan)
}

fn ceil_to_grid(x: f64, denom: i64) -> Rational {
    Rational::new((x * denom as f64).ceil() as i64, denom)
}

/// Tops up rows left short by float rounding, lowest edge index first.
fn repair(x: &mut [Rational], active: &[(Rational, Vec<usize>)], col: &[usize], g: &WeightedGraph, _vars: &[usize]) {
    for (r, edges) in active {
        let mut got: Rational = edges.iter().map(|&e| x[col[e]]).sum();
        for &e in edges {
            if got >= *r {
                break;
            }
            let room = g.edges()[e].w - x[col[e]];
            let add = room.min(*r - got);
            x[col[e]] += add;
            got += add;
        }
    }
}

/// Rounds a fractional plan to whole-edge deletions.
///
/// Nodes outside the bag act as one node placed before the crusade, so the
/// edges leaving the bag form one list and each removed node `v_i` owns the
/// list of its edges to later nodes. Each list is sorted farthest endpoint
/// first and deleted from the front until the deleted weight reaches the
/// fractional reduction on the list. Every cut of `p` meets every list in a
/// prefix, which keeps all cuts within the bound; the last node's list is
/// empty, so at most `k` lists overshoot, each by less than one.
pub fn width_opt_rounding(g: &WeightedGraph, a: &Bag, p: &Crusade, lp: &ReductionPlan) -> Result<ReductionPlan> {
    if lp.mode != PlanMode::Fractional {
        return Err(Error::Contract(format!("rounding needs a fractional plan, got {:?}", lp.mode)));
    }
    check_inputs(g, a, p, &lp.certified_bound)?;
    lp.validate(g)?;
    // position 0 is the outside, crusade nodes are 1..=k
    let mut pos = vec![0usize; g.node_count()];
    for (i, &v) in p.removal_order().iter().enumerate() {
        pos[v] = i + 1;
    }
    let k = p.len();
    let mut lists: Vec<Vec<usize>> = vec![Vec::new(); k + 1];
    for (idx, e) in g.edges().iter().enumerate() {
        let (i, j) = (pos[e.u].min(pos[e.v]), pos[e.u].max(pos[e.v]));
        if j > 0 {
            lists[i].push(idx);
        }
    }
    let far = |idx: usize| pos[g.edges()[idx].u].max(pos[g.edges()[idx].v]);
    let mut deltas = vec![int(0); g.edge_count()];
    for list in &mut lists {
        list.sort_by_key(|&idx| (std::cmp::Reverse(far(idx)), idx));
        let target: Rational = list.iter().map(|&idx| lp.deltas[idx]).sum();
        let mut x = int(0);
        for &idx in list.iter() {
            if x >= target {
                break;
            }
            x += g.edges()[idx].w;
            deltas[idx] = g.edges()[idx].w;
        }
    }
    let plan = ReductionPlan::new(deltas, lp.certified_bound, PlanMode::Integral);
    for (i, (c, edges)) in crusade_cuts(g, p).iter().enumerate() {
        let after = *c - edges.iter().map(|&e| plan.deltas[e]).sum::<Rational>();
        if after > plan.certified_bound {
            return Err(Error::Contract(format!(
                "rounded plan leaves cut {after} at step {i}, above {}",
                plan.certified_bound
            )));
        }
    }
    Ok(plan)
}
