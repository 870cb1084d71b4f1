//! Mixed graphs with directed and undirected edges.
//!
//! A path steps along `D1 -> D2` or `D1 ~ D2`, never against a directed
//! edge, and never repeats a node (a cycle repeats only its endpoint). A path
//! is directed when it uses at least one directed edge; a chain graph has no
//! directed cycle. Nodes are kept in sorted [`NodeId`] order and queries work
//! on indices into that order.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;

use thiserror::Error;

use crate::formula::{CanonicalKey, PropId};

/// Set of node indices.
pub type NodeSet = BTreeSet<usize>;

/// Edges named by their endpoints.
pub type EdgeSet = BTreeSet<(NodeId, NodeId)>;

/// Which side of a constraint a formula-node stands for.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Role {
    Conditioned,
    Conditioning,
}

/// Identity of a formula-node: semantic (truth table) or syntactic (printed form).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum FormulaIdentity {
    Semantic(CanonicalKey),
    Syntactic(String),
}

#[derive(Clone, Debug)]
pub struct FormulaNode {
    pub identity: FormulaIdentity,
    pub role: Role,
    /// Printed form of the first formula that created the node.
    pub label: String,
}

impl PartialEq for FormulaNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for FormulaNode {}

impl PartialOrd for FormulaNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for FormulaNode {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.identity, self.role).cmp(&(&other.identity, other.role))
    }
}

/// Propositions sort first (by name), then formula-nodes, then super-nodes.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum NodeId {
    Prop(PropId),
    Formula(FormulaNode),
    /// Condensed set of nodes, members sorted.
    Super(Vec<NodeId>),
}

impl NodeId {
    pub fn prop(name: &str) -> Self {
        NodeId::Prop(PropId::new(name).expect("valid proposition name"))
    }

    pub fn is_prop(&self) -> bool {
        matches!(self, NodeId::Prop(_))
    }

    pub fn as_prop(&self) -> Option<&PropId> {
        match self {
            NodeId::Prop(p) => Some(p),
            _ => None,
        }
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NodeId::Prop(p) => write!(f, "{p}"),
            NodeId::Formula(n) => f.write_str(&n.label),
            NodeId::Super(members) => {
                f.write_str("{")?;
                for (i, m) in members.iter().enumerate() {
                    if i > 0 {
                        f.write_str(",")?;
                    }
                    write!(f, "{m}")?;
                }
                f.write_str("}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("self-loop on `{0}`")]
    SelfLoop(String),
    #[error("node sets are not pairwise disjoint")]
    NotDisjoint,
    #[error("separation needs an undirected graph")]
    DirectedEdgesPresent,
    #[error("graph has a directed cycle")]
    DirectedCycle,
    #[error("graph has {nodes} nodes; at most {max} allowed here")]
    TooLarge { nodes: usize, max: usize },
    #[error("malformed edge list item `{0}`")]
    EdgeSyntax(String),
}

/// Accumulates nodes and edges; duplicates collapse.
#[derive(Clone, Debug, Default)]
pub struct GraphBuilder {
    nodes: BTreeSet<NodeId>,
    directed: BTreeSet<(NodeId, NodeId)>,
    undirected: BTreeSet<(NodeId, NodeId)>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, n: NodeId) -> &mut Self {
        self.nodes.insert(n);
        self
    }

    pub fn add_directed(&mut self, from: NodeId, to: NodeId) -> Result<&mut Self, GraphError> {
        if from == to {
            return Err(GraphError::SelfLoop(from.to_string()));
        }
        self.nodes.insert(from.clone());
        self.nodes.insert(to.clone());
        self.directed.insert((from, to));
        Ok(self)
    }

    pub fn add_undirected(&mut self, a: NodeId, b: NodeId) -> Result<&mut Self, GraphError> {
        if a == b {
            return Err(GraphError::SelfLoop(a.to_string()));
        }
        self.nodes.insert(a.clone());
        self.nodes.insert(b.clone());
        let pair = if a < b { (a, b) } else { (b, a) };
        self.undirected.insert(pair);
        Ok(self)
    }

    pub fn build(self) -> MixedGraph {
        let nodes: Vec<NodeId> = self.nodes.into_iter().collect();
        let index = |n: &NodeId| nodes.binary_search(n).expect("endpoint registered");
        let directed = self.directed.iter().map(|(a, b)| (index(a), index(b))).collect();
        let undirected = self.undirected.iter().map(|(a, b)| (index(a), index(b))).collect();
        MixedGraph::from_indexed(nodes, directed, undirected)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MixedGraph {
    nodes: Vec<NodeId>,
    directed: BTreeSet<(usize, usize)>,
    /// Stored with the smaller index first.
    undirected: BTreeSet<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    children: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
    cyclic: bool,
}

impl MixedGraph {
    /// `nodes` must be sorted and unique; edges index into it.
    fn from_indexed(
        nodes: Vec<NodeId>,
        directed: BTreeSet<(usize, usize)>,
        undirected: BTreeSet<(usize, usize)>,
    ) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        let n = nodes.len();
        let mut parents = vec![Vec::new(); n];
        let mut children = vec![Vec::new(); n];
        let mut neighbors = vec![Vec::new(); n];
        for &(a, b) in &directed {
            children[a].push(b);
            parents[b].push(a);
        }
        for &(a, b) in &undirected {
            neighbors[a].push(b);
            neighbors[b].push(a);
        }
        for list in parents.iter_mut().chain(children.iter_mut()).chain(neighbors.iter_mut()) {
            list.sort_unstable();
        }
        let mut g = MixedGraph {
            nodes,
            directed,
            undirected,
            parents,
            children,
            neighbors,
            cyclic: false,
        };
        let scc = g.step_components();
        g.cyclic = g.directed.iter().any(|&(a, b)| scc[a] == scc[b]);
        g
    }

    /// Graph over propositions from a compact edge list such as
    /// `"A -> B, C <-> D, B -- D, E"`: `->` directed, `<->` both directions,
    /// `--` undirected, a bare name adds an isolated node. Items are
    /// separated by commas, semicolons or newlines.
    pub fn from_edge_list(text: &str) -> Result<Self, GraphError> {
        let mut b = GraphBuilder::new();
        let prop = |s: &str| {
            PropId::new(s.trim())
                .map(NodeId::Prop)
                .map_err(|_| GraphError::EdgeSyntax(s.trim().to_string()))
        };
        for item in text.split([',', ';', '\n']).map(str::trim).filter(|s| !s.is_empty()) {
            if let Some((l, r)) = item.split_once("<->") {
                let (l, r) = (prop(l)?, prop(r)?);
                b.add_directed(l.clone(), r.clone())?;
                b.add_directed(r, l)?;
            } else if let Some((l, r)) = item.split_once("->") {
                b.add_directed(prop(l)?, prop(r)?)?;
            } else if let Some((l, r)) = item.split_once("--") {
                b.add_undirected(prop(l)?, prop(r)?)?;
            } else {
                b.add_node(prop(item)?);
            }
        }
        Ok(b.build())
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[NodeId] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &NodeId {
        &self.nodes[i]
    }

    pub fn index_of(&self, n: &NodeId) -> Option<usize> {
        self.nodes.binary_search(n).ok()
    }

    /// Index of the proposition-node with this name.
    pub fn ix(&self, name: &str) -> Result<usize, GraphError> {
        PropId::new(name)
            .ok()
            .and_then(|p| self.index_of(&NodeId::Prop(p)))
            .ok_or_else(|| GraphError::UnknownNode(name.to_string()))
    }

    /// Indices for a list of proposition names.
    pub fn set(&self, names: &[&str]) -> Result<NodeSet, GraphError> {
        names.iter().map(|n| self.ix(n)).collect()
    }

    pub fn ids(&self, set: &NodeSet) -> BTreeSet<NodeId> {
        set.iter().map(|&i| self.nodes[i].clone()).collect()
    }

    /// Names of a set of nodes, in node order.
    pub fn names(&self, set: &NodeSet) -> Vec<String> {
        set.iter().map(|&i| self.nodes[i].to_string()).collect()
    }

    pub fn all(&self) -> NodeSet {
        (0..self.nodes.len()).collect()
    }

    /// Indices of proposition-nodes.
    pub fn props(&self) -> NodeSet {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_prop()).collect()
    }

    pub fn directed_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.directed.iter().copied()
    }

    pub fn undirected_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.undirected.iter().copied()
    }

    pub fn has_directed(&self, from: usize, to: usize) -> bool {
        self.directed.contains(&(from, to))
    }

    pub fn has_undirected(&self, a: usize, b: usize) -> bool {
        self.undirected.contains(&(a.min(b), a.max(b)))
    }

    /// Joined by an edge of any kind.
    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.has_directed(a, b) || self.has_directed(b, a) || self.has_undirected(a, b)
    }

    pub fn is_undirected(&self) -> bool {
        self.directed.is_empty()
    }

    /// Edge sets in node-identity form, for comparing graphs built separately.
    pub fn edge_sets(&self) -> (EdgeSet, EdgeSet) {
        let pair = |&(a, b): &(usize, usize)| (self.nodes[a].clone(), self.nodes[b].clone());
        (self.directed.iter().map(pair).collect(), self.undirected.iter().map(pair).collect())
    }

    pub fn parents(&self, a: usize) -> &[usize] {
        &self.parents[a]
    }

    pub fn children(&self, a: usize) -> &[usize] {
        &self.children[a]
    }

    pub fn neighbors(&self, a: usize) -> &[usize] {
        &self.neighbors[a]
    }

    /// Nodes one step away along the path relation.
    fn steps(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        self.children[a].iter().chain(self.neighbors[a].iter()).copied()
    }

    /// `pa(a) ∪ ne(a)`.
    pub fn boundary(&self, a: usize) -> NodeSet {
        self.parents[a].iter().chain(self.neighbors[a].iter()).copied().collect()
    }

    /// Union of member boundaries, minus the set itself.
    pub fn boundary_of_set(&self, set: &NodeSet) -> NodeSet {
        set.iter()
            .flat_map(|&a| self.boundary(a))
            .filter(|b| !set.contains(b))
            .collect()
    }

    /// Least superset of `set` closed under boundaries.
    pub fn smallest_ancestral_set(&self, set: &NodeSet) -> NodeSet {
        let mut out = set.clone();
        let mut work: Vec<usize> = set.iter().copied().collect();
        while let Some(a) = work.pop() {
            for b in self.boundary(a) {
                if out.insert(b) {
                    work.push(b);
                }
            }
        }
        out
    }

    /// Connected components of the undirected edges alone, ordered by
    /// smallest member.
    pub fn chain_components(&self) -> Vec<NodeSet> {
        let mut comp = vec![usize::MAX; self.len()];
        let mut out = Vec::new();
        for start in 0..self.len() {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut members = NodeSet::new();
            let mut work = vec![start];
            comp[start] = id;
            while let Some(a) = work.pop() {
                members.insert(a);
                for &b in &self.neighbors[a] {
                    if comp[b] == usize::MAX {
                        comp[b] = id;
                        work.push(b);
                    }
                }
            }
            out.push(members);
        }
        out
    }

    /// Nodes reachable from `from` along the path relation through nodes
    /// outside `blocked`. `from` itself is not included unless re-entered.
    fn reach(&self, from: usize, blocked: &NodeSet) -> NodeSet {
        let mut seen = NodeSet::new();
        let mut work = vec![from];
        while let Some(a) = work.pop() {
            for b in self.steps(a) {
                if !blocked.contains(&b) && seen.insert(b) {
                    work.push(b);
                }
            }
        }
        seen
    }

    /// Ends of directed paths from `a`, excluding `a`.
    pub fn descendants(&self, a: usize) -> NodeSet {
        if !self.cyclic {
            // Without directed cycles every walk that uses a directed edge
            // shortens to a path that still does.
            let mut seen = [NodeSet::new(), NodeSet::new()];
            let mut work = vec![(a, 0usize)];
            while let Some((x, used)) = work.pop() {
                for &y in &self.children[x] {
                    if seen[1].insert(y) {
                        work.push((y, 1));
                    }
                }
                for &y in &self.neighbors[x] {
                    if seen[used].insert(y) {
                        work.push((y, used));
                    }
                }
            }
            let mut out = core::mem::take(&mut seen[1]);
            out.remove(&a);
            return out;
        }
        // A directed path is an undirected prefix, its first directed edge,
        // then any path avoiding the prefix.
        let mut out = NodeSet::new();
        let mut prefix = NodeSet::new();
        self.extend_prefix(a, &mut prefix, &mut out);
        out.remove(&a);
        out
    }

    fn extend_prefix(&self, at: usize, prefix: &mut NodeSet, out: &mut NodeSet) {
        prefix.insert(at);
        for &v in &self.children[at] {
            if prefix.contains(&v) {
                continue;
            }
            out.insert(v);
            out.extend(self.reach(v, prefix));
        }
        for &w in &self.neighbors[at] {
            if !prefix.contains(&w) {
                self.extend_prefix(w, prefix, out);
            }
        }
        prefix.remove(&at);
    }

    /// Ends of directed paths from `a` whose intermediate nodes avoid `bd(a)`.
    pub fn strict_descendants(&self, a: usize) -> NodeSet {
        let bd = self.boundary(a);
        let mut blocked = bd.clone();
        blocked.insert(a);
        // The first step must be directed: an undirected first step lands in bd(a).
        let mut out = NodeSet::new();
        let mut work = Vec::new();
        for &c in &self.children[a] {
            if out.insert(c) && !blocked.contains(&c) {
                work.push(c);
            }
        }
        while let Some(x) = work.pop() {
            for y in self.steps(x) {
                if y != a && out.insert(y) && !blocked.contains(&y) {
                    work.push(y);
                }
            }
        }
        out
    }

    pub fn has_directed_cycle(&self) -> bool {
        self.cyclic
    }

    /// Strongly connected components of the path-step relation, as a
    /// component id per node.
    pub fn step_components(&self) -> Vec<usize> {
        // Kosaraju, iterative.
        let n = self.len();
        let mut order = Vec::with_capacity(n);
        let mut visited = vec![false; n];
        for s in 0..n {
            if visited[s] {
                continue;
            }
            visited[s] = true;
            let mut stack = vec![(s, self.steps(s).collect::<Vec<_>>(), 0usize)];
            while let Some((node, succ, pos)) = stack.last_mut() {
                if *pos < succ.len() {
                    let next = succ[*pos];
                    *pos += 1;
                    if !visited[next] {
                        visited[next] = true;
                        let succ_next = self.steps(next).collect();
                        stack.push((next, succ_next, 0));
                    }
                } else {
                    order.push(*node);
                    stack.pop();
                }
            }
        }
        let mut comp = vec![usize::MAX; n];
        let mut next_id = 0;
        for &s in order.iter().rev() {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next_id;
            let mut work = vec![s];
            while let Some(a) = work.pop() {
                // Reverse steps: parents and neighbors.
                for &b in self.parents[a].iter().chain(self.neighbors[a].iter()) {
                    if comp[b] == usize::MAX {
                        comp[b] = next_id;
                        work.push(b);
                    }
                }
            }
            next_id += 1;
        }
        comp
    }

    /// Subgraph on `keep` with every edge among its nodes.
    pub fn induced_subgraph(&self, keep: &NodeSet) -> MixedGraph {
        let nodes: Vec<NodeId> = keep.iter().map(|&i| self.nodes[i].clone()).collect();
        let remap: BTreeMap<usize, usize> = keep.iter().enumerate().map(|(new, &old)| (old, new)).collect();
        let map_edges = |edges: &BTreeSet<(usize, usize)>| {
            edges
                .iter()
                .filter_map(|(a, b)| Some((*remap.get(a)?, *remap.get(b)?)))
                .collect()
        };
        MixedGraph::from_indexed(nodes, map_edges(&self.directed), map_edges(&self.undirected))
    }

    /// Marries every pair of nodes with children in a common chain component,
    /// then drops all directions.
    pub fn moral_graph(&self) -> MixedGraph {
        let mut undirected = self.undirected.clone();
        for comp in self.chain_components() {
            let co_parents: Vec<usize> = comp
                .iter()
                .flat_map(|&t| self.parents[t].iter().copied())
                .collect::<NodeSet>()
                .into_iter()
                .collect();
            for (i, &a) in co_parents.iter().enumerate() {
                for &b in &co_parents[i + 1..] {
                    undirected.insert((a, b));
                }
            }
        }
        for &(a, b) in &self.directed {
            undirected.insert((a.min(b), a.max(b)));
        }
        MixedGraph::from_indexed(self.nodes.clone(), BTreeSet::new(), undirected)
    }

    /// Moral graph of the smallest ancestral set containing the three sets.
    pub fn gma(&self, n1: &NodeSet, n2: &NodeSet, n3: &NodeSet) -> Result<MixedGraph, GraphError> {
        check_disjoint(n1, n2, n3)?;
        let all: NodeSet = n1.iter().chain(n2).chain(n3).copied().collect();
        Ok(self.induced_subgraph(&self.smallest_ancestral_set(&all)).moral_graph())
    }

    /// Indices in `self` of the nodes `set` denotes in `other`.
    pub fn translate(&self, other: &MixedGraph, set: &NodeSet) -> Result<NodeSet, GraphError> {
        set.iter()
            .map(|&i| {
                self.index_of(&other.nodes[i])
                    .ok_or_else(|| GraphError::UnknownNode(other.nodes[i].to_string()))
            })
            .collect()
    }

    /// True iff every path from `n1` to `n3` in this undirected graph meets `n2`.
    pub fn separates(&self, n1: &NodeSet, n2: &NodeSet, n3: &NodeSet) -> Result<bool, GraphError> {
        if !self.is_undirected() {
            return Err(GraphError::DirectedEdgesPresent);
        }
        check_disjoint(n1, n2, n3)?;
        let mut seen: NodeSet = n1.clone();
        let mut work: Vec<usize> = n1.iter().copied().collect();
        while let Some(a) = work.pop() {
            for &b in &self.neighbors[a] {
                if n3.contains(&b) {
                    return Ok(false);
                }
                if !n2.contains(&b) && seen.insert(b) {
                    work.push(b);
                }
            }
        }
        Ok(true)
    }

    /// Replaces each bi-directed pair with one undirected edge.
    pub fn collapse_bidirected(&self) -> MixedGraph {
        let mut directed = BTreeSet::new();
        let mut undirected = self.undirected.clone();
        for &(a, b) in &self.directed {
            if self.directed.contains(&(b, a)) {
                undirected.insert((a.min(b), a.max(b)));
            } else {
                directed.insert((a, b));
            }
        }
        MixedGraph::from_indexed(self.nodes.clone(), directed, undirected)
    }
}

pub(crate) fn check_disjoint(n1: &NodeSet, n2: &NodeSet, n3: &NodeSet) -> Result<(), GraphError> {
    if n1.is_disjoint(n2) && n1.is_disjoint(n3) && n2.is_disjoint(n3) {
        Ok(())
    } else {
        Err(GraphError::NotDisjoint)
    }
}
