use serde::{Deserialize, Serialize};

use crate::balanced::{balanced_cut, CutStrategy};
use crate::error::{Error, Result};
use crate::graph::exact::LocalBag;
use crate::graph::{Bag, NodeId, WeightedGraph};
use crate::num::{common_denominator, scale, Rational};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub bag: Bag,
    /// Weight of the edge to the parent; zero at the root.
    pub weight: Rational,
    pub children: Option<[usize; 2]>,
}

/// Binary tree over a bag; node 0 is the root and leaves are single nodes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionTree {
    nodes: Vec<TreeNode>,
}

impl DecompositionTree {
    /// Checks the shape: every internal node has two children whose bags
    /// partition its own, leaves hold exactly one node, weights are
    /// nonnegative and every node is reachable from the root.
    pub fn new(nodes: Vec<TreeNode>) -> Result<Self> {
        if nodes.is_empty() {
            return Err(Error::Structure("tree has no nodes".into()));
        }
        let mut seen = vec![false; nodes.len()];
        let mut stack = vec![0];
        while let Some(v) = stack.pop() {
            if std::mem::replace(&mut seen[v], true) {
                return Err(Error::Structure(format!("tree node {v} reached twice")));
            }
            let node = &nodes[v];
            if node.weight < Rational::from_integer(0) {
                return Err(Error::Structure(format!("tree node {v} has negative weight")));
            }
            match node.children {
                None if node.bag.len() != 1 => {
                    return Err(Error::Structure(format!("leaf {v} must hold exactly one node")))
                }
                None => {}
                Some([l, r]) => {
                    if l >= nodes.len() || r >= nodes.len() {
                        return Err(Error::Structure(format!("tree node {v} has a missing child")));
                    }
                    let (bl, br) = (&nodes[l].bag, &nodes[r].bag);
                    if bl.len() + br.len() != node.bag.len() || bl.union(br) != node.bag {
                        return Err(Error::Structure(format!("children of {v} do not partition its bag")));
                    }
                    stack.extend([r, l]);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err(Error::Structure("tree has unreachable nodes".into()));
        }
        Ok(DecompositionTree { nodes })
    }

    pub fn root(&self) -> &TreeNode {
        &self.nodes[0]
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn nodes(&self) -> &[TreeNode] {
        &self.nodes
    }

    pub fn leaf_count(&self) -> usize {
        self.root().bag.len()
    }

    pub fn leaves(&self) -> &Bag {
        &self.root().bag
    }

    /// Weights on a common integer grid: `(scaled, denominator)`.
    pub(crate) fn scaled_weights(&self) -> (Vec<i64>, i64) {
        let denom = common_denominator(self.nodes.iter().map(|n| &n.weight));
        (self.nodes.iter().map(|n| scale(&n.weight, denom)).collect(), denom)
    }
}

/// Recursive balanced cuts of `a`; each child's edge weight is the cut of its
/// bag inside `G[a]`.
pub fn build_decomposition_tree(g: &WeightedGraph, a: &Bag, strategy: CutStrategy) -> Result<DecompositionTree> {
    if a.is_empty() {
        return Err(Error::domain("decomposition tree needs a nonempty bag"));
    }
    let inner = LocalBag::inner(g, a)?;
    let mut local = vec![usize::MAX; g.node_count()];
    for (i, u) in a.iter().enumerate() {
        local[u] = i;
    }
    let mut nodes = vec![TreeNode {
        bag: a.clone(),
        weight: Rational::from_integer(0),
        children: None,
    }];
    let mut stack = vec![0];
    while let Some(v) = stack.pop() {
        if nodes[v].bag.len() < 2 {
            continue;
        }
        let cut = balanced_cut(g, &nodes[v].bag, strategy)?;
        let mut kids = [0; 2];
        for (slot, side) in [cut.side_one, cut.side_two].into_iter().enumerate() {
            let weight = cut_inside(&inner, &local, side.members());
            kids[slot] = nodes.len();
            nodes.push(TreeNode {
                bag: side,
                weight,
                children: None,
            });
        }
        nodes[v].children = Some(kids);
        stack.extend([kids[1], kids[0]]);
    }
    Ok(DecompositionTree { nodes })
}

fn cut_inside(inner: &LocalBag, local: &[usize], members: &[NodeId]) -> Rational {
    let mut side = vec![false; inner.len()];
    for &u in members {
        side[local[u]] = true;
    }
    Rational::new(inner.cut_of(&side), inner.denom)
}
