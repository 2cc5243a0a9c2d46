use num_integer::Integer;
use num_traits::One;
use serde::{Deserialize, Serialize};

use super::{Bag, Crusade, NodeId};
use crate::error::{Error, Result};
use crate::num::{int, Rational};

/// Group membership, checkpoints and the fairness factor γ.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairnessSpec {
    groups: Vec<usize>,
    group_count: usize,
    checkpoints: Vec<usize>,
    gamma: Rational,
    /// Also constrain the segment after the last checkpoint.
    pub check_final_segment: bool,
}

impl FairnessSpec {
    /// `groups[u]` is the group of node `u`. `gamma` must be positive; values
    /// below one are accepted so that infeasible fairness requirements can be
    /// expressed, although every fairness result assumes `gamma >= 1`.
    pub fn new(groups: Vec<usize>, checkpoints: Vec<usize>, gamma: Rational) -> Result<Self> {
        if groups.is_empty() {
            return Err(Error::domain("group assignment is empty"));
        }
        if gamma <= int(0) {
            return Err(Error::domain(format!("gamma must be positive, got {gamma}")));
        }
        if checkpoints.first() == Some(&0) {
            return Err(Error::domain("checkpoints must be strictly positive"));
        }
        if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain("checkpoints must be strictly increasing"));
        }
        let group_count = groups.iter().max().map_or(0, |&g| g + 1);
        Ok(FairnessSpec {
            groups,
            group_count,
            checkpoints,
            gamma,
            check_final_segment: true,
        })
    }

    pub fn groups(&self) -> &[usize] {
        &self.groups
    }

    pub fn group_of(&self, u: NodeId) -> usize {
        self.groups[u]
    }

    pub fn group_count(&self) -> usize {
        self.group_count
    }

    pub fn checkpoints(&self) -> &[usize] {
        &self.checkpoints
    }

    pub fn gamma(&self) -> Rational {
        self.gamma
    }

    pub fn with_gamma(&self, gamma: Rational) -> Self {
        FairnessSpec {
            gamma,
            ..self.clone()
        }
    }

    pub fn with_checkpoints(&self, checkpoints: Vec<usize>) -> Result<Self> {
        let mut s = FairnessSpec::new(self.groups.clone(), checkpoints, self.gamma)?;
        s.check_final_segment = self.check_final_segment;
        Ok(s)
    }

    pub fn counts(&self, nodes: impl IntoIterator<Item = NodeId>) -> Vec<usize> {
        let mut c = vec![0; self.group_count];
        for u in nodes {
            c[self.groups[u]] += 1;
        }
        c
    }

    pub(crate) fn check_covers(&self, bag: &Bag) -> Result<()> {
        match bag.members().last() {
            Some(&u) if u >= self.groups.len() => Err(Error::domain(format!(
                "node {u} has no group (assignment covers {} nodes)",
                self.groups.len()
            ))),
            _ => Ok(()),
        }
    }

    pub(crate) fn check_checkpoints(&self, k: usize) -> Result<()> {
        match self.checkpoints.last() {
            Some(&t) if t >= k => Err(Error::domain(format!(
                "checkpoint {t} outside (0, {k})"
            ))),
            _ => Ok(()),
        }
    }

    /// Segment lengths `τ_1, τ_2 − τ_1, …, k − τ_s` for a crusade of `k` steps.
    pub fn segment_lengths(&self, k: usize) -> Vec<usize> {
        let mut prev = 0;
        let mut out = Vec::with_capacity(self.checkpoints.len() + 1);
        for &t in &self.checkpoints {
            out.push(t - prev);
            prev = t;
        }
        out.push(k - prev);
        out
    }
}

/// The per-group fairness test for segments, relative to a fixed reference
/// population (the first bag of the crusade).
#[derive(Debug, Clone)]
pub struct GroupQuota {
    population: Vec<usize>,
    total: usize,
    gamma: Rational,
}

impl GroupQuota {
    pub fn new(population: Vec<usize>, gamma: Rational) -> Self {
        let total = population.iter().sum();
        GroupQuota {
            population,
            total,
            gamma,
        }
    }

    pub fn population(&self) -> &[usize] {
        &self.population
    }

    pub fn gamma(&self) -> Rational {
        self.gamma
    }

    fn scaled_share(&self, h: usize, len: usize) -> Rational {
        self.gamma * Rational::new(self.population[h] as i64, self.total as i64) * int(len as i64)
    }

    /// `|S ∩ V_h| < γ · |p_0 ∩ V_h| / |p_0| · |S| + 1` for every group.
    pub fn allows(&self, counts: &[usize], len: usize) -> bool {
        if self.total == 0 {
            return true;
        }
        counts
            .iter()
            .enumerate()
            .all(|(h, &c)| int(c as i64) < self.scaled_share(h, len) + Rational::one())
    }

    /// Largest count of group `h` the test admits in a segment of length `len`.
    pub fn cap(&self, h: usize, len: usize) -> usize {
        if self.total == 0 {
            return len;
        }
        let y = self.scaled_share(h, len);
        Integer::div_ceil(y.numer(), y.denom()) as usize
    }

    /// Proportional target `|p_0 ∩ V_h| / |p_0| · len`.
    pub fn share(&self, h: usize, len: usize) -> Rational {
        if self.total == 0 {
            return int(0);
        }
        Rational::new((self.population[h] * len) as i64, self.total as i64)
    }
}

/// Checks the fairness inequality on every inter-checkpoint set of `p`.
pub fn is_gamma_fair(p: &Crusade, spec: &FairnessSpec) -> Result<bool> {
    let k = p.len();
    spec.check_checkpoints(k)?;
    spec.check_covers(p.start())?;
    if spec.checkpoints().is_empty() {
        return Ok(true);
    }
    let quota = GroupQuota::new(spec.counts(p.start().iter()), spec.gamma());
    let order = p.removal_order();
    let mut bounds = vec![0];
    bounds.extend_from_slice(spec.checkpoints());
    if spec.check_final_segment {
        bounds.push(k);
    }
    Ok(bounds.windows(2).all(|w| {
        let seg = &order[w[0]..w[1]];
        quota.allows(&spec.counts(seg.iter().copied()), seg.len())
    }))
}
