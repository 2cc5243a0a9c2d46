//! Minimax over edge reductions of the max-cut semidefinite bound.
//!
//! Nodes outside the bag are contracted into one super-node `s`; every edge
//! touching the bag keeps its own reduction variable (edges to the outside
//! become parallel edges to `s`). The program
//!
//! ```text
//! minimize   ¼ Σ y_i
//! subject to Diag(y) − L(w − Δ) ⪰ 0,  0 ≤ Δ ≤ w,  Σ Δ ≤ budget
//! ```
//!
//! is solved by a log-det barrier method with damped Newton steps.

use serde::{Deserialize, Serialize};

use super::{PlanMode, ReductionPlan, SolverDiagnostics};
use crate::error::{Error, Result};
use crate::graph::exact::restricted_max_cut_exact_with_limit;
use crate::graph::{Bag, WeightedGraph};
use crate::num::{floor_to_grid, int, to_f64, Rational};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdpOptions {
    /// Stop once the barrier duality-gap bound falls below this.
    pub gap_tol: f64,
    pub max_newton: usize,
    /// Reductions are floored onto the grid `1/grid`.
    pub grid: i64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            gap_tol: 1e-6,
            max_newton: 2000,
            grid: 1_000_000,
        }
    }
}

const CERT_GRID: i64 = 1_000_000_000;
/// Bags up to this size also get an exact max-cut certificate in
/// `budget_search`.
const EXACT_CERT_LIMIT: usize = 16;

struct Instance {
    n: usize,
    // (u, v) in local ids (`s` = n − 1), weight, index in the graph
    edges: Vec<(usize, usize, f64, usize)>,
}

impl Instance {
    fn new(g: &WeightedGraph, a: &Bag) -> Self {
        let k = a.len();
        let mut local = vec![k; g.node_count()];
        for (i, u) in a.iter().enumerate() {
            local[u] = i;
        }
        let edges = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(_, e)| (local[e.u] < k || local[e.v] < k) && e.w > int(0))
            .map(|(idx, e)| (local[e.u], local[e.v], to_f64(&e.w), idx))
            .collect();
        Instance { n: k + 1, edges }
    }

    /// `Diag(y) − L(w − Δ)` in row-major order.
    fn matrix(&self, y: &[f64], delta: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = y[i];
        }
        for (e, &(u, v, w, _)) in self.edges.iter().enumerate() {
            let we = w - delta.get(e).copied().unwrap_or(0.0);
            m[u * n + u] -= we;
            m[v * n + v] -= we;
            m[u * n + v] += we;
            m[v * n + u] += we;
        }
        m
    }
}

/// In-place lower Cholesky factor; `false` when not positive definite.
fn cholesky(a: &mut [f64], n: usize) -> bool {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) || !d.is_finite() {
            return false;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
        for k in j + 1..n {
            a[j * n + k] = 0.0;
        }
    }
    true
}

fn cholesky_solve(l: &[f64], n: usize, b: &mut [f64]) {
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i * n + k] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = b[i];
        for k in i + 1..n {
            s -= l[k * n + i] * b[k];
        }
        b[i] = s / l[i * n + i];
    }
}

/// Cholesky factor of `h + λI` for the smallest `λ` in `{0, 1e-14·s, 1e-13·s, …}`
/// that succeeds, `s` being the largest diagonal entry.
fn factor_with_ridge(h: Vec<f64>, n: usize) -> Option<Vec<f64>> {
    let scale = (0..n).map(|i| h[i * n + i].abs()).fold(1.0, f64::max);
    let mut ridge = 0.0;
    while ridge <= 1e-4 * scale {
        let mut a = h.clone();
        for i in 0..n {
            a[i * n + i] += ridge;
        }
        if cholesky(&mut a, n) {
            return Some(a);
        }
        ridge = if ridge == 0.0 { 1e-14 * scale } else { ridge * 10.0 };
    }
    None
}

fn log_det(l: &[f64], n: usize) -> f64 {
    (0..n).map(|i| 2.0 * l[i * n + i].ln()).sum()
}

struct Barrier<'a> {
    inst: &'a Instance,
    budget: f64,
    has_delta: bool,
}

impl Barrier<'_> {
    fn split<'z>(&self, z: &'z [f64]) -> (&'z [f64], &'z [f64]) {
        z.split_at(self.inst.n)
    }

    /// Barrier value, or `None` outside the domain.
    fn value(&self, z: &[f64], t: f64) -> Option<f64> {
        let (y, delta) = self.split(z);
        let n = self.inst.n;
        let mut m = self.inst.matrix(y, delta);
        if !cholesky(&mut m, n) {
            return None;
        }
        let mut f = t * 0.25 * y.iter().sum::<f64>() - log_det(&m, n);
        if self.has_delta {
            let mut used = 0.0;
            for (e, &d) in delta.iter().enumerate() {
                let w = self.inst.edges[e].2;
                if d <= 0.0 || d >= w {
                    return None;
                }
                f -= d.ln() + (w - d).ln();
                used += d;
            }
            let slack = self.budget - used;
            if slack <= 0.0 {
                return None;
            }
            f -= slack.ln();
        }
        Some(f)
    }

    fn grad_hess(&self, z: &[f64], t: f64) -> (Vec<f64>, Vec<f64>) {
        let (y, delta) = self.split(z);
        let n = self.inst.n;
        let dim = z.len();
        let mut l = self.inst.matrix(y, delta);
        cholesky(&mut l, n);
        let mut s = vec![0.0; n * n];
        for i in 0..n {
            let mut col = vec![0.0; n];
            col[i] = 1.0;
            cholesky_solve(&l, n, &mut col);
            for j in 0..n {
                s[j * n + i] = col[j];
            }
        }
        let mut grad = vec![0.0; dim];
        let mut hess = vec![0.0; dim * dim];
        for i in 0..n {
            grad[i] = 0.25 * t - s[i * n + i];
            for j in 0..n {
                hess[i * dim + j] = s[i * n + j] * s[i * n + j];
            }
        }
        if self.has_delta {
            let edges = &self.inst.edges;
            let m = edges.len();
            // S b_e for every edge
            let sb: Vec<Vec<f64>> = edges
                .iter()
                .map(|&(u, v, _, _)| (0..n).map(|i| s[i * n + u] - s[i * n + v]).collect())
                .collect();
            let used: f64 = delta.iter().sum();
            let slack = self.budget - used;
            for e in 0..m {
                let (u, v, w, _) = edges[e];
                let d = delta[e];
                let r = n + e;
                grad[r] = -(sb[e][u] - sb[e][v]) - 1.0 / d + 1.0 / (w - d) + 1.0 / slack;
                for i in 0..n {
                    let h = sb[e][i] * sb[e][i];
                    hess[r * dim + i] = h;
                    hess[i * dim + r] = h;
                }
                for f in 0..m {
                    let (p, q, _, _) = edges[f];
                    let x = sb[e][p] - sb[e][q];
                    hess[r * dim + n + f] = x * x + 1.0 / (slack * slack);
                }
                hess[r * dim + r] += 1.0 / (d * d) + 1.0 / ((w - d) * (w - d));
            }
        }
        (grad, hess)
    }
}

/// Reductions within `budget` minimizing the semidefinite upper bound on
/// `φ_{G'}(A)`; `certified_bound` is that bound for the returned reductions.
pub fn minimax_sdp(g: &WeightedGraph, a: &Bag, budget: Rational) -> Result<ReductionPlan> {
    minimax_sdp_with(g, a, budget, &SdpOptions::default())
}

pub fn minimax_sdp_with(g: &WeightedGraph, a: &Bag, budget: Rational, opts: &SdpOptions) -> Result<ReductionPlan> {
    a.validate(g.node_count())?;
    if budget < int(0) {
        return Err(Error::domain(format!("budget must be nonnegative, got {budget}")));
    }
    let inst = Instance::new(g, a);
    let touching: Rational = inst.edges.iter().map(|e| g.edges()[e.3].w).sum();
    if a.is_empty() || budget >= touching {
        let mut plan = ReductionPlan::zero(g, int(0), PlanMode::SdpMinimax);
        for e in &inst.edges {
            plan.deltas[e.3] = g.edges()[e.3].w;
        }
        plan.total_cost = plan.deltas.iter().sum();
        plan.diagnostics = Some(SolverDiagnostics {
            iterations: 0,
            residual: 0.0,
            duality_gap: 0.0,
            exact: true,
        });
        return Ok(plan);
    }

    let n = inst.n;
    let m = inst.edges.len();
    let has_delta = budget > int(0) && m > 0;
    let budget_f = to_f64(&budget);
    let total_f: f64 = inst.edges.iter().map(|e| e.2).sum();
    let frac = if has_delta { (0.5 * budget_f / total_f).min(0.5) } else { 0.0 };
    let delta0: Vec<f64> = if has_delta {
        inst.edges.iter().map(|e| e.2 * frac).collect()
    } else {
        Vec::new()
    };
    let mut deg = vec![0.0; n];
    for (e, &(u, v, w, _)) in inst.edges.iter().enumerate() {
        let we = w - delta0.get(e).copied().unwrap_or(0.0);
        deg[u] += we;
        deg[v] += we;
    }
    let mut z: Vec<f64> = deg.iter().map(|d| 2.0 * d + 1.0).collect();
    z.extend(&delta0);

    let barrier = Barrier {
        inst: &inst,
        budget: budget_f,
        has_delta,
    };
    let theta = (n + if has_delta { 2 * m + 1 } else { 0 }) as f64;
    let mut t = 1.0;
    let mut iterations = 0;
    let mut last_decrement = f64::INFINITY;
    loop {
        // centering
        let mut inner = 0;
        loop {
            if iterations >= opts.max_newton {
                return Err(Error::Numeric {
                    iterations,
                    gap: theta / t,
                    decrement: last_decrement,
                });
            }
            iterations += 1;
            inner += 1;
            let (grad, hess) = barrier.grad_hess(&z, t);
            let dim = z.len();
            let Some(hess) = factor_with_ridge(hess, dim) else {
                return Err(Error::Numeric {
                    iterations,
                    gap: theta / t,
                    decrement: f64::NAN,
                });
            };
            let mut dx: Vec<f64> = grad.iter().map(|g| -g).collect();
            cholesky_solve(&hess, dim, &mut dx);
            let slope: f64 = grad.iter().zip(&dx).map(|(g, d)| g * d).sum();
            last_decrement = -slope;
            if last_decrement / 2.0 <= 1e-10 || (inner > 50 && last_decrement / 2.0 <= 1e-6) {
                break;
            }
            let f0 = barrier.value(&z, t).expect("iterate stays interior");
            let mut step = 1.0;
            let mut moved = false;
            while step > 1e-14 {
                let trial: Vec<f64> = z.iter().zip(&dx).map(|(a, d)| a + step * d).collect();
                if let Some(f1) = barrier.value(&trial, t) {
                    if f1 <= f0 + 0.25 * step * slope {
                        z = trial;
                        moved = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if !moved {
                // no further progress representable in floating point
                break;
            }
        }
        if theta / t <= opts.gap_tol {
            break;
        }
        t = (t * 10.0).min(theta / opts.gap_tol);
    }

    let (y, delta) = z.split_at(n);
    let mut plan = ReductionPlan::zero(g, int(0), PlanMode::SdpMinimax);
    let mut delta_grid = Vec::with_capacity(m);
    for (e, &(_, _, _, idx)) in inst.edges.iter().enumerate() {
        let d = if has_delta {
            floor_to_grid(delta[e], opts.grid).max(int(0)).min(g.edges()[idx].w)
        } else {
            int(0)
        };
        plan.deltas[idx] = d;
        delta_grid.push(to_f64(&d));
    }
    plan.total_cost = plan.deltas.iter().sum();

    // smallest diagonal shift that makes the rounded point feasible
    let base = inst.matrix(y, &delta_grid);
    let scale = y.iter().cloned().fold(1.0, f64::max);
    let mut shift = 0.0;
    loop {
        let mut trial = base.clone();
        for i in 0..n {
            trial[i * n + i] += shift;
        }
        if cholesky(&mut trial, n) {
            break;
        }
        shift = if shift == 0.0 { 1e-12 * scale } else { shift * 4.0 };
    }
    let bound = 0.25 * (y.iter().sum::<f64>() + n as f64 * shift);
    let bound = bound * (1.0 + 1e-12) + 1e-12;
    plan.certified_bound = Rational::new((bound * CERT_GRID as f64).ceil() as i64, CERT_GRID);
    plan.diagnostics = Some(SolverDiagnostics {
        iterations,
        residual: shift,
        duality_gap: theta / t,
        exact: false,
    });
    Ok(plan)
}

/// Smallest budget, to within `eps`, whose reductions bring the certified
/// restricted max-cut bound down to `target`. For bags of at most 16 nodes
/// the certificate is the smaller of the semidefinite bound and the exact
/// restricted max-cut of the modified graph.
pub fn budget_search(g: &WeightedGraph, a: &Bag, target: Rational, eps: Rational) -> Result<ReductionPlan> {
    if target < int(0) {
        return Err(Error::domain(format!("target must be nonnegative, got {target}")));
    }
    if eps <= int(0) {
        return Err(Error::domain(format!("eps must be positive, got {eps}")));
    }
    a.validate(g.node_count())?;
    let certify = |budget: Rational| -> Result<ReductionPlan> {
        let mut plan = minimax_sdp(g, a, budget)?;
        if a.len() <= EXACT_CERT_LIMIT {
            let modified = plan.apply(g)?;
            let (phi, _) = restricted_max_cut_exact_with_limit(&modified, a, EXACT_CERT_LIMIT)?;
            plan.certified_bound = plan.certified_bound.min(phi);
        }
        Ok(plan)
    };
    let zero = certify(int(0))?;
    if zero.certified_bound <= target {
        return Ok(zero);
    }
    let touching: Rational = g
        .edges()
        .iter()
        .filter(|e| a.contains(e.u) || a.contains(e.v))
        .map(|e| e.w)
        .sum();
    let (mut lo, mut hi) = (int(0), touching);
    let mut best = certify(hi)?;
    while hi - lo > eps {
        let mid = (lo + hi) / int(2);
        let plan = certify(mid)?;
        if plan.certified_bound <= target {
            hi = mid;
            best = plan;
        } else {
            lo = mid;
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::restricted_max_cut_exact;
    use crate::num::rat;

    fn unit(n: usize, edges: &[(usize, usize)]) -> WeightedGraph {
        WeightedGraph::new(n, edges.iter().map(|&(u, v)| (u, v, int(1)))).unwrap()
    }

    fn close(a: Rational, b: f64, tol: f64) -> bool {
        (to_f64(&a) - b).abs() <= tol
    }

    #[test]
    fn single_edge_half_budget() {
        let g = unit(2, &[(0, 1)]);
        let plan = minimax_sdp(&g, &Bag::full(2), rat(1, 2)).unwrap();
        assert!(close(plan.deltas[0], 0.5, 1e-4), "{:?}", plan.deltas);
        assert!(close(plan.certified_bound, 0.5, 1e-4));
        assert!(plan.diagnostics.unwrap().duality_gap <= 1e-6);
    }

    #[test]
    fn zero_budget_bounds_max_cut() {
        let g = unit(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (1, 3)]);
        let a = Bag::from(vec![0, 1, 2, 3]);
        let plan = minimax_sdp(&g, &a, int(0)).unwrap();
        let (phi, _) = restricted_max_cut_exact(&g, &a).unwrap();
        assert_eq!(plan.total_cost, int(0));
        assert!(plan.certified_bound >= phi);
        assert!(to_f64(&plan.certified_bound) <= 1.14 * to_f64(&phi) + 1e-4);
    }

    #[test]
    fn full_budget_deletes_everything() {
        let g = unit(4, &[(0, 1), (1, 2), (2, 3)]);
        let a = Bag::from(vec![1]);
        let plan = minimax_sdp(&g, &a, int(2)).unwrap();
        assert_eq!(plan.certified_bound, int(0));
        assert_eq!(plan.deltas, vec![int(1), int(1), int(0)]);
    }

    #[test]
    fn cycle_bound_is_above_phi_after_reduction() {
        let g = unit(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)]);
        let a = Bag::full(5);
        let plan = minimax_sdp(&g, &a, int(1)).unwrap();
        assert!(plan.total_cost <= int(1));
        let (phi, _) = restricted_max_cut_exact(&plan.apply(&g).unwrap(), &a).unwrap();
        assert!(plan.certified_bound >= phi);
    }

    #[test]
    fn budget_search_examples() {
        let g = unit(2, &[(0, 1)]);
        let a = Bag::full(2);
        let eps = rat(1, 1000);
        let b = budget_search(&g, &a, rat(1, 4), eps).unwrap().total_cost;
        assert!((to_f64(&b) - 0.75).abs() <= 2.0 * to_f64(&eps), "{b}");
        assert_eq!(budget_search(&g, &a, int(1), eps).unwrap().total_cost, int(0));

        let tri = unit(3, &[(0, 1), (1, 2), (0, 2)]);
        let a = Bag::full(3);
        let costs: Vec<Rational> = [rat(1, 4), rat(1, 2), int(1), int(2)]
            .into_iter()
            .map(|t| budget_search(&tri, &a, t, rat(1, 100)).unwrap().total_cost)
            .collect();
        assert!(costs.windows(2).all(|w| w[0] >= w[1]), "{costs:?}");
        assert_eq!(costs[3], int(0));
    }
}
