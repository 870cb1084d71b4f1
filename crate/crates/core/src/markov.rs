//! Markov conditions as generators of independence statements.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::build::{lcn_descendants, lcn_parents, BuildError};
use crate::graph::{GraphError, MixedGraph, NodeId, NodeSet};

/// Largest graph [`enumerate_gmc`] accepts.
pub const MAX_ENUMERATION_NODES: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    /// Local condition on a dependency graph, given LCN-parents.
    LmcLcn,
    /// Chain-graph local condition: non-descendants given the boundary.
    LmcC,
    /// Local condition on a structure: non-strict-descendants given the boundary.
    LmcCstr,
    /// Directed local condition: non-descendants given the parents.
    LmcD,
    /// Global condition: separation in the moral graph of the ancestral closure.
    GmcC,
}

impl Condition {
    pub const ALL: [Condition; 5] = [
        Condition::LmcLcn,
        Condition::LmcC,
        Condition::LmcCstr,
        Condition::LmcD,
        Condition::GmcC,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::LmcLcn => "lmc-lcn",
            Condition::LmcC => "lmc-c",
            Condition::LmcCstr => "lmc-cstr",
            Condition::LmcD => "lmc-d",
            Condition::GmcC => "gmc-c",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == name)
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MarkovError {
    #[error("{condition} does not apply here: {reason}")]
    Mismatch { condition: Condition, reason: &'static str },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Build(#[from] BuildError),
}

/// `x ⫫ y | z`, stored with `x <= y`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct IndependenceStatement {
    x: BTreeSet<NodeId>,
    y: BTreeSet<NodeId>,
    z: BTreeSet<NodeId>,
}

impl IndependenceStatement {
    /// Returns `None` when a side is empty or the sets overlap.
    pub fn new(x: BTreeSet<NodeId>, y: BTreeSet<NodeId>, z: BTreeSet<NodeId>) -> Option<Self> {
        if x.is_empty() || y.is_empty() || !x.is_disjoint(&y) || !x.is_disjoint(&z) || !y.is_disjoint(&z) {
            return None;
        }
        let (x, y) = if x <= y { (x, y) } else { (y, x) };
        Some(IndependenceStatement { x, y, z })
    }

    pub fn from_indices(g: &MixedGraph, x: &NodeSet, y: &NodeSet, z: &NodeSet) -> Option<Self> {
        Self::new(g.ids(x), g.ids(y), g.ids(z))
    }

    /// Builds a statement over proposition names; panics on invalid input.
    pub fn props(x: &[&str], y: &[&str], z: &[&str]) -> Self {
        let set = |names: &[&str]| names.iter().map(|n| NodeId::prop(n)).collect();
        Self::new(set(x), set(y), set(z)).expect("well-formed statement")
    }

    pub fn x(&self) -> &BTreeSet<NodeId> {
        &self.x
    }

    pub fn y(&self) -> &BTreeSet<NodeId> {
        &self.y
    }

    pub fn z(&self) -> &BTreeSet<NodeId> {
        &self.z
    }
}

fn write_set(f: &mut fmt::Formatter<'_>, set: &BTreeSet<NodeId>) -> fmt::Result {
    if set.len() != 1 {
        f.write_str("{")?;
    }
    for (i, n) in set.iter().enumerate() {
        if i > 0 {
            f.write_str(",")?;
        }
        write!(f, "{n}")?;
    }
    if set.len() != 1 {
        f.write_str("}")?;
    }
    Ok(())
}

impl fmt::Display for IndependenceStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_set(f, &self.x)?;
        f.write_str(" ⫫ ")?;
        write_set(f, &self.y)?;
        if !self.z.is_empty() {
            f.write_str(" | ")?;
            write_set(f, &self.z)?;
        }
        Ok(())
    }
}

pub type StatementSet = BTreeSet<IndependenceStatement>;

fn has_formula_nodes(g: &MixedGraph) -> bool {
    g.nodes().iter().any(|n| matches!(n, NodeId::Formula(_)))
}

/// One statement per node with a nonempty remainder.
pub fn local_statements(g: &MixedGraph, condition: Condition) -> Result<StatementSet, MarkovError> {
    let mismatch = |reason| MarkovError::Mismatch { condition, reason };
    match condition {
        Condition::GmcC => return Err(mismatch("global condition; use enumerate_gmc")),
        Condition::LmcLcn if g.undirected_edges().next().is_some() => {
            return Err(mismatch("dependency graphs have no undirected edges"))
        }
        Condition::LmcC | Condition::LmcCstr | Condition::LmcD if has_formula_nodes(g) => {
            return Err(mismatch("graph contains formula-nodes"))
        }
        _ => {}
    }
    let domain: NodeSet = match condition {
        Condition::LmcLcn => g.props(),
        _ => g.all(),
    };
    let mut out = StatementSet::new();
    for &a in &domain {
        let (excluded, given) = match condition {
            Condition::LmcLcn => {
                let pa = lcn_parents(g, a)?;
                (lcn_descendants(g, a)?, pa)
            }
            Condition::LmcC => (g.descendants(a), g.boundary(a)),
            Condition::LmcCstr => (g.strict_descendants(a), g.boundary(a)),
            Condition::LmcD => (g.descendants(a), g.parents(a).iter().copied().collect()),
            Condition::GmcC => unreachable!(),
        };
        let rest: NodeSet = domain
            .iter()
            .copied()
            .filter(|b| *b != a && !excluded.contains(b) && !given.contains(b))
            .collect();
        let x = NodeSet::from([a]);
        if let Some(s) = IndependenceStatement::from_indices(g, &x, &rest, &given) {
            out.insert(s);
        }
    }
    Ok(out)
}

/// True iff `n2` separates `n1` from `n3` in the moral graph of their
/// smallest ancestral set. Vacuously true when `n1` or `n3` is empty.
pub fn gmc_implies(g: &MixedGraph, n1: &NodeSet, n2: &NodeSet, n3: &NodeSet) -> Result<bool, MarkovError> {
    let moral = g.gma(n1, n2, n3)?;
    let t = |s: &NodeSet| moral.translate(g, s);
    Ok(moral.separates(&t(n1)?, &t(n2)?, &t(n3)?)?)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bounds {
    pub max_x: usize,
    pub max_y: usize,
    pub max_z: usize,
}

impl Default for Bounds {
    fn default() -> Self {
        Bounds {
            max_x: 2,
            max_y: usize::MAX,
            max_z: 3,
        }
    }
}

/// Calls `f` with every subset of `items` of size `1..=max` (or `0..=max`
/// when `include_empty`), in lexicographic order of index lists.
fn subsets(items: &[usize], max: usize, include_empty: bool, f: &mut dyn FnMut(&NodeSet)) {
    fn go(items: &[usize], start: usize, max: usize, cur: &mut NodeSet, f: &mut dyn FnMut(&NodeSet)) {
        if cur.len() == max {
            return;
        }
        for i in start..items.len() {
            cur.insert(items[i]);
            f(cur);
            go(items, i + 1, max, cur, f);
            cur.remove(&items[i]);
        }
    }
    let mut cur = NodeSet::new();
    if include_empty {
        f(&cur);
    }
    go(items, 0, max, &mut cur, f);
}

/// Every statement within `bounds` that the global condition yields.
pub fn enumerate_gmc(g: &MixedGraph, bounds: Bounds) -> Result<StatementSet, MarkovError> {
    if g.len() > MAX_ENUMERATION_NODES {
        return Err(GraphError::TooLarge {
            nodes: g.len(),
            max: MAX_ENUMERATION_NODES,
        }
        .into());
    }
    if has_formula_nodes(g) {
        return Err(MarkovError::Mismatch {
            condition: Condition::GmcC,
            reason: "graph contains formula-nodes",
        });
    }
    // Without directed cycles the criterion obeys decomposition, so a
    // failing y rules out every superset reached by extending it.
    let prune = !g.has_directed_cycle();
    let all: Vec<usize> = (0..g.len()).collect();
    let mut out = StatementSet::new();
    let mut err = None;
    subsets(&all, bounds.max_x, false, &mut |x| {
        let others: Vec<usize> = all.iter().copied().filter(|i| !x.contains(i)).collect();
        subsets(&others, bounds.max_z, true, &mut |z| {
            let rest: Vec<usize> = others.iter().copied().filter(|i| !z.contains(i)).collect();
            let mut y = NodeSet::new();
            extend_y(g, x, z, &rest, 0, bounds.max_y, prune, &mut y, &mut out, &mut err);
        });
    });
    match err {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

#[allow(clippy::too_many_arguments)]
fn extend_y(
    g: &MixedGraph,
    x: &NodeSet,
    z: &NodeSet,
    rest: &[usize],
    start: usize,
    max_y: usize,
    prune: bool,
    y: &mut NodeSet,
    out: &mut StatementSet,
    err: &mut Option<MarkovError>,
) {
    if y.len() == max_y || err.is_some() {
        return;
    }
    for i in start..rest.len() {
        y.insert(rest[i]);
        let holds = match gmc_implies(g, x, z, y) {
            Ok(h) => h,
            Err(e) => {
                *err = Some(e);
                return;
            }
        };
        if holds {
            out.extend(IndependenceStatement::from_indices(g, x, y, z));
        }
        if holds || !prune {
            extend_y(g, x, z, rest, i + 1, max_y, prune, y, out, err);
        }
        y.remove(&rest[i]);
    }
}

/// `de(a) ∖ sde(a)`; defined on graphs without directed cycles.
pub fn weak_descendants(g: &MixedGraph, a: usize) -> Result<NodeSet, MarkovError> {
    if g.has_directed_cycle() {
        return Err(GraphError::DirectedCycle.into());
    }
    let sde = g.strict_descendants(a);
    Ok(g.descendants(a).into_iter().filter(|n| !sde.contains(n)).collect())
}

/// True iff `weak` follows from `strong` by decomposition: one side and the
/// conditioning set agree, the other side shrinks.
pub fn statement_decomposes(strong: &IndependenceStatement, weak: &IndependenceStatement) -> bool {
    if strong.z != weak.z {
        return false;
    }
    let sides = [(&strong.x, &strong.y), (&strong.y, &strong.x)];
    sides.iter().any(|(keep, shrink)| {
        (weak.x == **keep && weak.y.is_subset(shrink)) || (weak.y == **keep && weak.x.is_subset(shrink))
    })
}

/// Statements a condition yields on a graph; the global condition is
/// enumerated within `bounds`.
pub fn statements(g: &MixedGraph, condition: Condition, bounds: Bounds) -> Result<StatementSet, MarkovError> {
    match condition {
        Condition::GmcC => enumerate_gmc(g, bounds),
        local => local_statements(g, local),
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ComparisonReport {
    pub only_a: StatementSet,
    pub only_b: StatementSet,
    pub shared: StatementSet,
}

impl ComparisonReport {
    pub fn identical(&self) -> bool {
        self.only_a.is_empty() && self.only_b.is_empty()
    }
}

pub fn compare_conditions(
    g_a: &MixedGraph,
    cond_a: Condition,
    g_b: &MixedGraph,
    cond_b: Condition,
    bounds: Bounds,
) -> Result<ComparisonReport, MarkovError> {
    let a = statements(g_a, cond_a, bounds)?;
    let b = statements(g_b, cond_b, bounds)?;
    Ok(ComparisonReport {
        only_a: a.difference(&b).cloned().collect(),
        only_b: b.difference(&a).cloned().collect(),
        shared: a.intersection(&b).cloned().collect(),
    })
}

/// Statement names for diagnostics.
pub fn describe(set: &StatementSet) -> Vec<String> {
    use alloc::string::ToString;
    set.iter().map(|s| s.to_string()).collect()
}
