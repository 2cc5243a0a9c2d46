//! Contact networks, bags, crusades and cut arithmetic.

pub(crate) mod exact;
mod fairness;
pub mod io;

use std::collections::HashSet;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::num::{self, Rational};

pub use exact::{
    fair_impedance_exact, impedance_exact, restricted_max_cut_exact, DEFAULT_FAIR_LIMIT,
    DEFAULT_SUBSET_LIMIT,
};
pub use fairness::{is_gamma_fair, FairnessSpec, GroupQuota};

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub w: Rational,
}

/// Undirected graph with weights in `[0, 1]`, nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedGraph {
    n: usize,
    edges: Vec<Edge>,
    // (neighbor, edge index)
    adj: Vec<Vec<(NodeId, usize)>>,
}

impl WeightedGraph {
    pub fn new(n: usize, edges: impl IntoIterator<Item = (NodeId, NodeId, Rational)>) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("graph must have at least one node"));
        }
        let mut seen = HashSet::new();
        let mut stored = Vec::new();
        for (u, v, w) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(Error::NodeOutOfRange { node: x, n });
                }
            }
            if u == v {
                return Err(Error::domain(format!("self loop at node {u}")));
            }
            num::check_unit_interval(&w)?;
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            if !seen.insert((a, b)) {
                return Err(Error::domain(format!("duplicate edge ({a}, {b})")));
            }
            stored.push(Edge { u: a, v: b, w });
        }
        let mut adj = vec![Vec::new(); n];
        for (i, e) in stored.iter().enumerate() {
            adj[e.u].push((e.v, i));
            adj[e.v].push((e.u, i));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(WeightedGraph { n, edges: stored, adj })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, u: NodeId) -> &[(NodeId, usize)] {
        &self.adj[u]
    }

    pub fn degree(&self, u: NodeId) -> Rational {
        self.adj[u].iter().map(|&(_, e)| self.edges[e].w).sum()
    }

    pub fn total_weight(&self) -> Rational {
        self.edges.iter().map(|e| e.w).sum()
    }

    pub fn is_unit_weight(&self) -> bool {
        self.edges.iter().all(|e| e.w == num::int(1))
    }

    pub fn check_node(&self, u: NodeId) -> Result<()> {
        if u >= self.n {
            return Err(Error::NodeOutOfRange { node: u, n: self.n });
        }
        Ok(())
    }

    /// Same topology, new weights (one per edge, in edge order).
    pub fn reweighted(&self, weights: &[Rational]) -> Result<Self> {
        if weights.len() != self.edges.len() {
            return Err(Error::domain("weight vector length differs from edge count"));
        }
        for w in weights {
            num::check_unit_interval(w)?;
        }
        let mut g = self.clone();
        for (e, w) in g.edges.iter_mut().zip(weights) {
            e.w = *w;
        }
        Ok(g)
    }

    /// Weights as integers over a common denominator.
    pub fn scaled(&self) -> ScaledWeights {
        let denom = num::common_denominator(self.edges.iter().map(|e| &e.w));
        ScaledWeights {
            denom,
            w: self.edges.iter().map(|e| num::scale(&e.w, denom)).collect(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ScaledWeights {
    pub denom: i64,
    pub w: Vec<i64>,
}

impl ScaledWeights {
    pub fn to_rational(&self, v: i64) -> Rational {
        Rational::new(v, self.denom)
    }
}

/// A node subset, kept sorted and duplicate free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Bag(Vec<NodeId>);

impl Bag {
    pub fn empty() -> Self {
        Bag(Vec::new())
    }

    pub fn full(n: usize) -> Self {
        Bag((0..n).collect())
    }

    pub fn singleton(u: NodeId) -> Self {
        Bag(vec![u])
    }

    pub fn members(&self) -> &[NodeId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, u: NodeId) -> bool {
        self.0.binary_search(&u).is_ok()
    }

    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &u in &self.0 {
            m[u] = true;
        }
        m
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self.0.last() {
            Some(&u) if u >= n => Err(Error::NodeOutOfRange { node: u, n }),
            _ => Ok(()),
        }
    }

    pub fn minus(&self, other: &Bag) -> Bag {
        Bag(self.0.iter().copied().filter(|&u| !other.contains(u)).collect())
    }

    pub fn union(&self, other: &Bag) -> Bag {
        self.0.iter().chain(other.0.iter()).copied().collect()
    }

    pub fn is_subset(&self, other: &Bag) -> bool {
        self.0.iter().all(|&u| other.contains(u))
    }

    pub fn complement(&self, n: usize) -> Bag {
        Bag((0..n).filter(|&u| !self.contains(u)).collect())
    }

    pub fn iter(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.0.iter().copied()
    }
}

impl FromIterator<NodeId> for Bag {
    fn from_iter<I: IntoIterator<Item = NodeId>>(iter: I) -> Self {
        let mut v: Vec<NodeId> = iter.into_iter().collect();
        v.sort_unstable();
        v.dedup();
        Bag(v)
    }
}

impl From<Vec<NodeId>> for Bag {
    fn from(v: Vec<NodeId>) -> Self {
        v.into_iter().collect()
    }
}

/// A monotone crusade `p_0 ⊃ p_1 ⊃ … ⊃ p_k`, stored as its first bag and the
/// order in which nodes leave it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crusade {
    start: Bag,
    order: Vec<NodeId>,
}

impl Crusade {
    pub fn new(start: Bag, order: Vec<NodeId>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(order.len());
        for &u in &order {
            if !start.contains(u) {
                return Err(Error::Structure(format!("node {u} removed but not in the first bag")));
            }
            if !seen.insert(u) {
                return Err(Error::Structure(format!("node {u} removed twice")));
            }
        }
        Ok(Crusade { start, order })
    }

    /// Crusade from `start` to the empty bag.
    pub fn full(start: Bag, order: Vec<NodeId>) -> Result<Self> {
        if order.len() != start.len() {
            return Err(Error::Structure(format!(
                "removal order has {} nodes but the bag has {}",
                order.len(),
                start.len()
            )));
        }
        Crusade::new(start, order)
    }

    /// Builds a crusade from its explicit bag sequence, checking the nesting.
    pub fn from_bags(bags: &[Bag]) -> Result<Self> {
        let Some(first) = bags.first() else {
            return Err(Error::Structure("a crusade needs at least one bag".into()));
        };
        let mut order = Vec::with_capacity(bags.len() - 1);
        for (i, pair) in bags.windows(2).enumerate() {
            let (prev, next) = (&pair[0], &pair[1]);
            if !next.is_subset(prev) || prev.len() != next.len() + 1 {
                return Err(Error::Structure(format!(
                    "bag {} is not its predecessor minus one node",
                    i + 1
                )));
            }
            order.push(prev.minus(next).members()[0]);
        }
        Crusade::new(first.clone(), order)
    }

    pub fn empty() -> Self {
        Crusade {
            start: Bag::empty(),
            order: Vec::new(),
        }
    }

    pub fn start(&self) -> &Bag {
        &self.start
    }

    pub fn removal_order(&self) -> &[NodeId] {
        &self.order
    }

    /// Number of steps `k`.
    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn terminal(&self) -> Bag {
        self.start.minus(&self.order.iter().copied().collect())
    }

    pub fn is_full(&self) -> bool {
        self.order.len() == self.start.len()
    }

    pub fn bag(&self, i: usize) -> Bag {
        let removed: Bag = self.order[..i].iter().copied().collect();
        self.start.minus(&removed)
    }

    pub fn bags(&self) -> Vec<Bag> {
        (0..=self.order.len()).map(|i| self.bag(i)).collect()
    }

    pub(crate) fn from_parts_unchecked(start: Bag, order: Vec<NodeId>) -> Self {
        debug_assert!(Crusade::new(start.clone(), order.clone()).is_ok());
        Crusade { start, order }
    }
}

/// Total weight of edges with exactly one endpoint in `a`.
pub fn cut_size(g: &WeightedGraph, a: &Bag) -> Result<Rational> {
    a.validate(g.node_count())?;
    let mask = a.mask(g.node_count());
    Ok(cut_of_mask(g, &mask))
}

pub(crate) fn cut_of_mask(g: &WeightedGraph, mask: &[bool]) -> Rational {
    g.edges()
        .iter()
        .filter(|e| mask[e.u] != mask[e.v])
        .map(|e| e.w)
        .sum()
}

/// `G[A]` with nodes relabelled densely; `mapping[local] = original`.
#[derive(Debug, Clone)]
pub struct Subgraph {
    pub graph: WeightedGraph,
    pub mapping: Vec<NodeId>,
}

impl Subgraph {
    pub fn to_original(&self, local: &Bag) -> Bag {
        local.iter().map(|u| self.mapping[u]).collect()
    }
}

pub fn subgraph(g: &WeightedGraph, a: &Bag) -> Result<Subgraph> {
    a.validate(g.node_count())?;
    if a.is_empty() {
        return Err(Error::domain("subgraph of an empty bag"));
    }
    let mut local = vec![usize::MAX; g.node_count()];
    for (i, u) in a.iter().enumerate() {
        local[u] = i;
    }
    let edges = g
        .edges()
        .iter()
        .filter(|e| local[e.u] != usize::MAX && local[e.v] != usize::MAX)
        .map(|e| (local[e.u], local[e.v], e.w));
    Ok(Subgraph {
        graph: WeightedGraph::new(a.len(), edges)?,
        mapping: a.members().to_vec(),
    })
}

pub fn max_degree(g: &WeightedGraph) -> Rational {
    (0..g.node_count())
        .map(|u| g.degree(u))
        .max()
        .unwrap_or_else(Rational::zero)
}

/// Cut of every bag `p_0 … p_k`, computed incrementally.
pub fn cut_profile(g: &WeightedGraph, p: &Crusade) -> Result<Vec<Rational>> {
    p.start().validate(g.node_count())?;
    let mut mask = p.start().mask(g.node_count());
    let mut cut = cut_of_mask(g, &mask);
    let mut out = Vec::with_capacity(p.len() + 1);
    out.push(cut);
    for &v in p.removal_order() {
        mask[v] = false;
        for &(x, e) in g.neighbors(v) {
            let w = g.edges()[e].w;
            if mask[x] {
                cut += w;
            } else {
                cut -= w;
            }
        }
        out.push(cut);
    }
    Ok(out)
}

/// `z(p) = max_i c(p_i)`.
pub fn crusade_width(g: &WeightedGraph, p: &Crusade) -> Result<Rational> {
    Ok(cut_profile(g, p)?.into_iter().max().unwrap_or_else(Rational::zero))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::{int, rat};

    pub(crate) fn path3() -> WeightedGraph {
        WeightedGraph::new(3, [(0, 1, int(1)), (1, 2, int(1))]).unwrap()
    }

    fn star3() -> WeightedGraph {
        WeightedGraph::new(4, [(0, 1, int(1)), (0, 2, int(1)), (0, 3, int(1))]).unwrap()
    }

    #[test]
    fn cut_examples() {
        let g = path3();
        assert_eq!(cut_size(&g, &Bag::singleton(1)).unwrap(), int(2));
        assert_eq!(cut_size(&g, &Bag::singleton(0)).unwrap(), int(1));
        assert_eq!(cut_size(&g, &Bag::empty()).unwrap(), int(0));
        assert!(matches!(
            cut_size(&g, &Bag::singleton(7)),
            Err(Error::NodeOutOfRange { node: 7, n: 3 })
        ));
    }

    #[test]
    fn rejects_bad_graphs() {
        assert!(WeightedGraph::new(2, [(0, 0, int(1))]).is_err());
        assert!(WeightedGraph::new(2, [(0, 1, int(1)), (1, 0, int(1))]).is_err());
        assert!(WeightedGraph::new(2, [(0, 1, rat(3, 2))]).is_err());
        assert!(WeightedGraph::new(2, [(0, 2, int(1))]).is_err());
    }

    #[test]
    fn subgraph_examples() {
        let tri = WeightedGraph::new(3, [(0, 1, rat(1, 2)), (1, 2, int(1)), (0, 2, rat(1, 4))]).unwrap();
        let s = subgraph(&tri, &Bag::from(vec![0, 2])).unwrap();
        assert_eq!(s.graph.edge_count(), 1);
        assert_eq!(s.graph.edges()[0].w, rat(1, 4));
        assert_eq!(s.mapping, vec![0, 2]);

        let all = subgraph(&tri, &Bag::full(3)).unwrap();
        assert_eq!(all.graph, tri);

        let one = subgraph(&tri, &Bag::singleton(1)).unwrap();
        assert_eq!(one.graph.node_count(), 1);
        assert_eq!(one.graph.edge_count(), 0);
    }

    #[test]
    fn max_degree_examples() {
        assert_eq!(max_degree(&WeightedGraph::new(3, []).unwrap()), int(0));
        assert_eq!(max_degree(&star3()), int(3));
        assert_eq!(max_degree(&WeightedGraph::new(2, [(0, 1, rat(2, 5))]).unwrap()), rat(2, 5));
    }

    #[test]
    fn width_examples() {
        let g = path3();
        let p = Crusade::full(Bag::full(3), vec![0, 1, 2]).unwrap();
        assert_eq!(cut_profile(&g, &p).unwrap(), vec![int(0), int(1), int(1), int(0)]);
        assert_eq!(crusade_width(&g, &p).unwrap(), int(1));

        assert_eq!(crusade_width(&g, &Crusade::empty()).unwrap(), int(0));

        let s = star3();
        let p = Crusade::full(Bag::full(4), vec![1, 2, 0, 3]).unwrap();
        assert_eq!(crusade_width(&s, &p).unwrap(), int(2));
    }

    #[test]
    fn crusade_structure_checks() {
        assert!(Crusade::new(Bag::full(3), vec![0, 0]).is_err());
        assert!(Crusade::new(Bag::singleton(1), vec![2]).is_err());
        let bags = vec![Bag::full(3), Bag::from(vec![1, 2]), Bag::from(vec![0])];
        assert!(matches!(Crusade::from_bags(&bags), Err(Error::Structure(_))));
        let bags = vec![Bag::full(3), Bag::from(vec![1, 2]), Bag::singleton(2), Bag::empty()];
        let p = Crusade::from_bags(&bags).unwrap();
        assert_eq!(p.removal_order(), &[0, 1, 2]);
        assert_eq!(p.bags(), bags);
        assert!(p.is_full());
    }
}
