//! Graphs read off an LCN: the dependency graph, the structure and the
//! mixed-structure.
//!
//! The propositions "in" a formula are those its truth value depends on, and
//! formula-nodes are merged when their formulas are equivalent. Formulas
//! too wide for a truth table fall back to syntactic support and identity.

use alloc::collections::BTreeSet;
use alloc::string::ToString;
use alloc::vec::Vec;

use thiserror::Error;

use crate::formula::{Formula, PropId};
use crate::graph::{FormulaIdentity, FormulaNode, GraphBuilder, MixedGraph, NodeId, NodeSet, Role};
use crate::model::{Group, Lcn};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Identity {
    /// Merge equivalent formulas; support is semantic.
    #[default]
    Semantic,
    /// Merge formulas only when they print identically; support is syntactic.
    Syntactic,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BuildError {
    #[error("`{0}` is a formula-node, not a proposition")]
    NotAProposition(alloc::string::String),
}

/// How one side of a constraint shows up in the dependency graph.
struct Side {
    node: Option<NodeId>,
    props: BTreeSet<PropId>,
}

fn side(f: &Formula, role: Role, identity: Identity) -> Side {
    let key = match identity {
        Identity::Semantic => f.canonical_key().ok(),
        Identity::Syntactic => None,
    };
    match key {
        Some(key) => {
            let props: BTreeSet<PropId> = key.props().iter().cloned().collect();
            if role == Role::Conditioning && key.is_top() {
                return Side { node: None, props };
            }
            let node = match key.as_single_prop() {
                Some(p) => NodeId::Prop(p.clone()),
                None => NodeId::Formula(FormulaNode {
                    identity: FormulaIdentity::Semantic(key),
                    role,
                    label: f.to_string(),
                }),
            };
            Side { node: Some(node), props }
        }
        None => {
            let props = f.support();
            let node = match f {
                Formula::Top if role == Role::Conditioning => None,
                Formula::Prop(p) => Some(NodeId::Prop(p.clone())),
                _ => {
                    let label = f.to_string();
                    Some(NodeId::Formula(FormulaNode {
                        identity: FormulaIdentity::Syntactic(label.clone()),
                        role,
                        label,
                    }))
                }
            };
            Side { node, props }
        }
    }
}

fn props_of(f: &Formula, identity: Identity) -> BTreeSet<PropId> {
    side(f, Role::Conditioned, identity).props
}

fn base(lcn: &Lcn) -> GraphBuilder {
    let mut b = GraphBuilder::new();
    for p in lcn.props() {
        b.add_node(NodeId::Prop(p.clone()));
    }
    b
}

// Self-loops arise only when a single-proposition side is its own support.
fn directed(b: &mut GraphBuilder, from: NodeId, to: NodeId) {
    if from != to {
        b.add_directed(from, to).expect("distinct endpoints");
    }
}

pub fn dependency_graph(lcn: &Lcn) -> MixedGraph {
    dependency_graph_with(lcn, Identity::Semantic)
}

pub fn dependency_graph_with(lcn: &Lcn, identity: Identity) -> MixedGraph {
    let mut b = base(lcn);
    for c in lcn.constraints() {
        let phi = side(c.phi(), Role::Conditioned, identity);
        let psi = side(c.psi(), Role::Conditioning, identity);
        let phi_node = phi.node.expect("conditioned side always has a node");
        b.add_node(phi_node.clone());
        for p in &phi.props {
            directed(&mut b, phi_node.clone(), NodeId::Prop(p.clone()));
            if c.group() == Group::U {
                directed(&mut b, NodeId::Prop(p.clone()), phi_node.clone());
            }
        }
        if let Some(psi_node) = psi.node {
            for p in &psi.props {
                directed(&mut b, NodeId::Prop(p.clone()), psi_node.clone());
            }
            directed(&mut b, psi_node, phi_node.clone());
        }
    }
    b.build()
}

pub fn mixed_structure(lcn: &Lcn) -> MixedGraph {
    mixed_structure_with(lcn, Identity::Semantic)
}

pub fn mixed_structure_with(lcn: &Lcn, identity: Identity) -> MixedGraph {
    let mut b = base(lcn);
    for c in lcn.constraints() {
        let phi: Vec<PropId> = props_of(c.phi(), identity).into_iter().collect();
        if c.group() == Group::U {
            for (i, x) in phi.iter().enumerate() {
                for y in &phi[i + 1..] {
                    b.add_undirected(NodeId::Prop(x.clone()), NodeId::Prop(y.clone()))
                        .expect("distinct endpoints");
                }
            }
        }
        for x in props_of(c.psi(), identity) {
            for y in &phi {
                directed(&mut b, NodeId::Prop(x.clone()), NodeId::Prop(y.clone()));
            }
        }
    }
    b.build()
}

pub fn structure(lcn: &Lcn) -> MixedGraph {
    mixed_structure(lcn).collapse_bidirected()
}

pub fn structure_with(lcn: &Lcn, identity: Identity) -> MixedGraph {
    mixed_structure_with(lcn, identity).collapse_bidirected()
}

fn require_prop(dep: &MixedGraph, a: usize) -> Result<(), BuildError> {
    if dep.node(a).is_prop() {
        Ok(())
    } else {
        Err(BuildError::NotAProposition(dep.node(a).to_string()))
    }
}

/// Propositions with a directed path to `a` whose intermediate nodes are all
/// formula-nodes.
pub fn lcn_parents(dep: &MixedGraph, a: usize) -> Result<NodeSet, BuildError> {
    require_prop(dep, a)?;
    let mut out = NodeSet::new();
    let mut seen = NodeSet::new();
    let mut work = alloc::vec![a];
    while let Some(x) = work.pop() {
        for &p in dep.parents(x) {
            if dep.node(p).is_prop() {
                if p != a {
                    out.insert(p);
                }
            } else if seen.insert(p) {
                work.push(p);
            }
        }
    }
    Ok(out)
}

/// Propositions reached from `a` by a directed path whose intermediate
/// propositions are neither `a` nor LCN-parents of `a`.
pub fn lcn_descendants(dep: &MixedGraph, a: usize) -> Result<NodeSet, BuildError> {
    let mut blocked = lcn_parents(dep, a)?;
    blocked.insert(a);
    let mut seen = NodeSet::new();
    let mut work = alloc::vec![a];
    while let Some(x) = work.pop() {
        for &y in dep.children(x) {
            if y != a && seen.insert(y) && !blocked.contains(&y) {
                work.push(y);
            }
        }
    }
    Ok(seen.into_iter().filter(|&i| dep.node(i).is_prop()).collect())
}
