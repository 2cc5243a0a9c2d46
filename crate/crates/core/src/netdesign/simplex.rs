//! Dense bounded-variable primal simplex with Bland's rule.
//!
//! Minimizes `cᵀx` subject to rows `aᵀx ≥ r` or `aᵀx ≤ r` and
//! `0 ≤ x_j ≤ u_j` (`u_j` possibly infinite). Each row gets a slack and an
//! artificial; phase one drives the artificials to zero from `x = 0`.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

pub(crate) trait Scalar:
    Clone
    + Debug
    + PartialOrd
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_pos(&self) -> bool;
    fn is_neg(&self) -> bool;
    fn is_zero(&self) -> bool {
        !self.is_pos() && !self.is_neg()
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        num_traits::One::one()
    }
    fn is_pos(&self) -> bool {
        self.is_positive()
    }
    fn is_neg(&self) -> bool {
        self.is_negative()
    }
}

const F64_EPS: f64 = 1e-10;

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn is_pos(&self) -> bool {
        *self > F64_EPS
    }
    fn is_neg(&self) -> bool {
        *self < -F64_EPS
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Sense {
    Ge,
    Le,
}

#[derive(Debug, Clone)]
pub(crate) struct Row<T> {
    pub coeffs: Vec<(usize, T)>,
    pub sense: Sense,
    pub rhs: T,
}

#[derive(Debug, Clone)]
pub(crate) struct Lp<T> {
    pub cost: Vec<T>,
    pub upper: Vec<Option<T>>,
    pub rows: Vec<Row<T>>,
}

#[derive(Debug, Clone)]
pub(crate) struct LpSolution<T> {
    pub x: Vec<T>,
    pub objective: T,
    pub iterations: usize,
}

const MAX_PIVOTS: usize = 100_000;

struct Tableau<T> {
    // rows × cols, B⁻¹A
    t: Vec<Vec<T>>,
    beta: Vec<T>,
    basis: Vec<usize>,
    at_upper: Vec<bool>,
    upper: Vec<Option<T>>,
    iterations: usize,
}

impl<T: Scalar> Tableau<T> {
    fn is_basic(&self, j: usize) -> Option<usize> {
        self.basis.iter().position(|&b| b == j)
    }

    fn reduced_costs(&self, cost: &[T]) -> Vec<T> {
        let cols = cost.len();
        let mut d = cost.to_vec();
        for (i, &b) in self.basis.iter().enumerate() {
            if cost[b].is_zero() {
                continue;
            }
            for j in 0..cols {
                if !self.t[i][j].is_zero() {
                    d[j] = d[j].clone() - cost[b].clone() * self.t[i][j].clone();
                }
            }
        }
        d
    }

    fn optimize(&mut self, cost: &[T]) -> Result<()> {
        loop {
            if self.iterations >= MAX_PIVOTS {
                return Err(Error::Numeric {
                    iterations: self.iterations,
                    gap: f64::NAN,
                    decrement: f64::NAN,
                });
            }
            let d = self.reduced_costs(cost);
            let entering = (0..cost.len()).find(|&j| {
                self.is_basic(j).is_none()
                    && ((!self.at_upper[j] && d[j].is_neg()) || (self.at_upper[j] && d[j].is_pos()))
            });
            let Some(j) = entering else { return Ok(()) };
            self.iterations += 1;
            let increasing = !self.at_upper[j];

            // ratio test; candidates keyed by variable index for Bland ties
            let mut best: Option<(T, usize, Option<usize>)> = self.upper[j].clone().map(|u| (u, j, None));
            for i in 0..self.basis.len() {
                let a = if increasing {
                    self.t[i][j].clone()
                } else {
                    -self.t[i][j].clone()
                };
                let limit = if a.is_pos() {
                    Some(self.beta[i].clone() / a)
                } else if a.is_neg() {
                    self.upper[self.basis[i]]
                        .clone()
                        .map(|u| (u - self.beta[i].clone()) / (-a))
                } else {
                    None
                };
                let Some(theta) = limit else { continue };
                let var = self.basis[i];
                let replace = match &best {
                    None => true,
                    Some((bt, bv, _)) => theta < *bt || (!(theta > *bt) && var < *bv),
                };
                if replace {
                    best = Some((theta, var, Some(i)));
                }
            }
            let Some((theta, _, row)) = best else {
                return Err(Error::Contract("linear program is unbounded".into()));
            };
            let theta = if theta.is_neg() { T::zero() } else { theta };
            let signed = if increasing { theta.clone() } else { -theta.clone() };
            for i in 0..self.basis.len() {
                if !self.t[i][j].is_zero() {
                    self.beta[i] = self.beta[i].clone() - self.t[i][j].clone() * signed.clone();
                }
            }
            match row {
                None => self.at_upper[j] = !self.at_upper[j],
                Some(r) => {
                    let leaving = self.basis[r];
                    let a = self.t[r][j].clone();
                    let a = if increasing { a } else { -a };
                    self.at_upper[leaving] = a.is_neg();
                    let start = if self.at_upper[j] {
                        self.upper[j].clone().unwrap()
                    } else {
                        T::zero()
                    };
                    self.at_upper[j] = false;
                    self.beta[r] = start + signed;
                    self.pivot(r, j);
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j].clone();
        for v in self.t[r].iter_mut() {
            if !v.is_zero() {
                *v = v.clone() / p.clone();
            }
        }
        let pivot_row = self.t[r].clone();
        for i in 0..self.t.len() {
            if i == r {
                continue;
            }
            let f = self.t[i][j].clone();
            if f.is_zero() {
                continue;
            }
            for (c, pv) in pivot_row.iter().enumerate() {
                if !pv.is_zero() {
                    self.t[i][c] = self.t[i][c].clone() - f.clone() * pv.clone();
                }
            }
        }
        self.basis[r] = j;
    }
}

pub(crate) fn solve<T: Scalar>(lp: &Lp<T>) -> Result<LpSolution<T>> {
    let n = lp.cost.len();
    let m = lp.rows.len();
    // columns: structural n, slack m, artificial m
    let cols = n + 2 * m;
    let mut t = vec![vec![T::zero(); cols]; m];
    let mut beta = Vec::with_capacity(m);
    for (i, row) in lp.rows.iter().enumerate() {
        let flip = row.rhs.is_neg();
        let sign = |v: T| if flip { -v } else { v };
        for (j, a) in &row.coeffs {
            t[i][*j] = t[i][*j].clone() + sign(a.clone());
        }
        let slack = match row.sense {
            Sense::Ge => -one::<T>(),
            Sense::Le => one::<T>(),
        };
        t[i][n + i] = sign(slack);
        t[i][n + m + i] = one();
        beta.push(sign(row.rhs.clone()));
    }
    let mut upper = lp.upper.clone();
    upper.extend((0..2 * m).map(|_| None));
    let mut tab = Tableau {
        t,
        beta,
        basis: (n + m..cols).collect(),
        at_upper: vec![false; cols],
        upper,
        iterations: 0,
    };

    let mut phase_one = vec![T::zero(); cols];
    for c in phase_one.iter_mut().skip(n + m) {
        *c = one();
    }
    tab.optimize(&phase_one)?;
    let infeasibility = tab
        .basis
        .iter()
        .zip(&tab.beta)
        .filter(|(&b, _)| b >= n + m)
        .fold(T::zero(), |acc, (_, v)| acc + v.clone());
    if infeasibility.is_pos() {
        return Err(Error::Contract("linear program is infeasible".into()));
    }
    for j in n + m..cols {
        tab.upper[j] = Some(T::zero());
    }
    let mut cost = lp.cost.clone();
    cost.extend((0..2 * m).map(|_| T::zero()));
    tab.optimize(&cost)?;

    let mut x: Vec<T> = (0..n)
        .map(|j| {
            if tab.at_upper[j] {
                tab.upper[j].clone().unwrap()
            } else {
                T::zero()
            }
        })
        .collect();
    for (i, &b) in tab.basis.iter().enumerate() {
        if b < n {
            x[b] = tab.beta[i].clone();
        }
    }
    let objective = x
        .iter()
        .zip(&lp.cost)
        .fold(T::zero(), |acc, (xi, ci)| acc + xi.clone() * ci.clone());
    Ok(LpSolution {
        x,
        objective,
        iterations: tab.iterations,
    })
}

fn one<T: Scalar>() -> T {
    T::one()
}
