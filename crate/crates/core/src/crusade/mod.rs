//! Approximate impedance by recursive balanced cuts, and its fair variant.

mod fair_dp;
mod tree;

pub use fair_dp::{fair_partition_dp, FairPartition};
pub use tree::{build_decomposition_tree, DecompositionTree, TreeNode};

use serde::{Deserialize, Serialize};

use crate::balanced::{balanced_cut, CutStrategy};
use crate::error::{Error, Result};
use crate::graph::{Bag, Crusade, FairnessSpec, GroupQuota, NodeId, WeightedGraph};
use crate::num::{int, Rational};
use crate::par::{self, ExecMode};

/// Bags at least this large split their two recursive halves across workers.
const PAR_THRESHOLD: usize = 48;

/// Crusade from `a` to `∅`: order the smaller-cut side first, each side
/// recursively, until single nodes remain.
pub fn appr_impe(g: &WeightedGraph, a: &Bag, strategy: CutStrategy) -> Result<Crusade> {
    appr_impe_with_mode(g, a, strategy, ExecMode::default())
}

pub fn appr_impe_with_mode(
    g: &WeightedGraph,
    a: &Bag,
    strategy: CutStrategy,
    mode: ExecMode,
) -> Result<Crusade> {
    if a.is_empty() {
        return Err(Error::domain("appr_impe needs a nonempty bag"));
    }
    a.validate(g.node_count())?;
    let order = removal_order(g, a, strategy, mode)?;
    Ok(Crusade::from_parts_unchecked(a.clone(), order))
}

fn removal_order(g: &WeightedGraph, a: &Bag, strategy: CutStrategy, mode: ExecMode) -> Result<Vec<NodeId>> {
    if a.len() == 1 {
        return Ok(a.members().to_vec());
    }
    let cut = balanced_cut(g, a, strategy)?;
    let sub_mode = if a.len() >= PAR_THRESHOLD { mode } else { ExecMode::Sequential };
    let (first, second) = par::join(
        sub_mode,
        || removal_order(g, &cut.side_one, strategy, mode),
        || removal_order(g, &cut.side_two, strategy, mode),
    );
    let mut order = first?;
    order.extend(second?);
    Ok(order)
}

/// `τ_i − τ_{i−1} ≥ τ_{i−1}` for every consecutive pair of checkpoints.
pub fn verify_doubling_condition(spec: &FairnessSpec) -> bool {
    spec.checkpoints().windows(2).all(|w| w[1] - w[0] >= w[0])
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FairCrusade {
    pub crusade: Crusade,
    /// The fairness factor the crusade was built for: `spec.gamma()`, or twice it
    /// when no γ-fair split could be completed.
    pub gamma: Rational,
}

/// A fair crusade from `a` to `∅`, or `None` when neither γ nor 2γ admit one.
pub fn fair_appr_impe(
    g: &WeightedGraph,
    a: &Bag,
    spec: &FairnessSpec,
    strategy: CutStrategy,
) -> Result<Option<FairCrusade>> {
    if a.is_empty() {
        return Err(Error::domain("fair_appr_impe needs a nonempty bag"));
    }
    a.validate(g.node_count())?;
    spec.check_covers(a)?;
    spec.check_checkpoints(a.len())?;
    if spec.group_count() > fair_dp::MAX_GROUPS {
        return Err(Error::domain(format!(
            "at most {} groups supported, got {}",
            fair_dp::MAX_GROUPS,
            spec.group_count()
        )));
    }
    if spec.checkpoints().is_empty() {
        return Ok(Some(FairCrusade {
            crusade: appr_impe(g, a, strategy)?,
            gamma: spec.gamma(),
        }));
    }
    for gamma in [spec.gamma(), spec.gamma() * int(2)] {
        let s = spec.with_gamma(gamma);
        if let Some(crusade) = fair_order(g, a, &s, strategy)? {
            return Ok(Some(FairCrusade { crusade, gamma }));
        }
    }
    Ok(None)
}

fn fair_order(g: &WeightedGraph, a: &Bag, spec: &FairnessSpec, strategy: CutStrategy) -> Result<Option<Crusade>> {
    let quota = GroupQuota::new(spec.counts(a.iter()), spec.gamma());
    let lengths = spec.segment_lengths(a.len());
    let mut remaining = a.clone();
    let mut order = Vec::with_capacity(a.len());
    for (j, &len) in lengths[..lengths.len() - 1].iter().enumerate() {
        let later = &lengths[j + 1..];
        let rem_counts = spec.counts(remaining.iter());
        let tree = build_decomposition_tree(g, &remaining, strategy)?;
        let admissible = |c: &[usize]| {
            if !quota.allows(c, len) {
                return false;
            }
            let rest: Vec<usize> = rem_counts.iter().zip(c).map(|(r, x)| r - x).collect();
            fair_dp::completable(&quota, &rest, later, spec.check_final_segment)
        };
        let Some(part) = fair_dp::best_partition(&tree, spec, &quota, len, &admissible)? else {
            return Ok(None);
        };
        order.extend_from_slice(appr_impe(g, &part.part, strategy)?.removal_order());
        remaining = remaining.minus(&part.part);
    }
    order.extend_from_slice(appr_impe(g, &remaining, strategy)?.removal_order());
    Ok(Some(Crusade::full(a.clone(), order)?))
}
