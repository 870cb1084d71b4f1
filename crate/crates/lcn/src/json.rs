//! JSON shapes for graphs, statements, plans and probability tables.

use std::collections::BTreeSet;

use anyhow::{Context, Result};
use lcn_core::factorize::{CliqueSpace, FactorizationPlan};
use lcn_core::formula::PropId;
use lcn_core::graph::{MixedGraph, NodeId};
use lcn_core::markov::{ComparisonReport, IndependenceStatement, StatementSet};
use lcn_core::oracle::JointTable;
use serde::{Deserialize, Serialize};

#[derive(Serialize)]
pub struct NodeJson {
    pub id: String,
    pub kind: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub role: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub members: Option<Vec<String>>,
}

#[derive(Serialize)]
pub struct GraphJson {
    pub nodes: Vec<NodeJson>,
    pub directed: Vec<[String; 2]>,
    pub undirected: Vec<[String; 2]>,
}

pub fn node_json(n: &NodeId) -> NodeJson {
    use lcn_core::graph::Role;
    match n {
        NodeId::Prop(p) => NodeJson {
            id: p.to_string(),
            kind: "proposition",
            role: None,
            members: None,
        },
        NodeId::Formula(f) => NodeJson {
            id: f.label.clone(),
            kind: "formula",
            role: Some(match f.role {
                Role::Conditioned => "conditioned",
                Role::Conditioning => "conditioning",
            }),
            members: None,
        },
        NodeId::Super(m) => NodeJson {
            id: n.to_string(),
            kind: "super",
            role: None,
            members: Some(m.iter().map(|x| x.to_string()).collect()),
        },
    }
}

pub fn graph_json(g: &MixedGraph) -> GraphJson {
    let label = |i: usize| g.node(i).to_string();
    GraphJson {
        nodes: g.nodes().iter().map(node_json).collect(),
        directed: g.directed_edges().map(|(a, b)| [label(a), label(b)]).collect(),
        undirected: g.undirected_edges().map(|(a, b)| [label(a), label(b)]).collect(),
    }
}

#[derive(Serialize)]
pub struct StatementJson {
    pub x: Vec<String>,
    pub y: Vec<String>,
    pub z: Vec<String>,
}

fn names(set: &BTreeSet<NodeId>) -> Vec<String> {
    set.iter().map(|n| n.to_string()).collect()
}

pub fn statement_json(s: &IndependenceStatement) -> StatementJson {
    StatementJson {
        x: names(s.x()),
        y: names(s.y()),
        z: names(s.z()),
    }
}

pub fn statements_json(set: &StatementSet) -> Vec<StatementJson> {
    set.iter().map(statement_json).collect()
}

#[derive(Serialize)]
pub struct ComparisonJson {
    pub only_a: Vec<StatementJson>,
    pub only_b: Vec<StatementJson>,
    pub shared: Vec<StatementJson>,
}

pub fn comparison_json(r: &ComparisonReport) -> ComparisonJson {
    ComparisonJson {
        only_a: statements_json(&r.only_a),
        only_b: statements_json(&r.only_b),
        shared: statements_json(&r.shared),
    }
}

#[derive(Serialize)]
pub struct ComponentJson {
    pub nodes: Vec<String>,
    pub boundary: Vec<String>,
    pub parent_components: Vec<usize>,
    pub cliques: Vec<Vec<String>>,
    pub factor: String,
    pub clique_form: String,
    pub super_node: bool,
}

#[derive(Serialize)]
pub struct CliqueSpaceJson {
    pub component: usize,
    pub clique: Vec<String>,
    pub allowed: usize,
    pub removed: usize,
}

#[derive(Serialize)]
pub struct PlanJson {
    pub product: String,
    pub components: Vec<ComponentJson>,
    pub positivity_assumed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pruning: Option<Vec<CliqueSpaceJson>>,
}

pub fn plan_json(plan: &FactorizationPlan, pruning: Option<&[CliqueSpace]>) -> PlanJson {
    PlanJson {
        product: plan.product(),
        components: plan
            .components
            .iter()
            .map(|c| ComponentJson {
                nodes: names(&c.nodes),
                boundary: names(&c.boundary),
                parent_components: c.parent_components.clone(),
                cliques: c.cliques.iter().map(names).collect(),
                factor: c.conditional(),
                clique_form: c.clique_form(),
                super_node: c.has_super_node(),
            })
            .collect(),
        positivity_assumed: plan.positivity_assumed,
        pruning: pruning.map(|spaces| {
            spaces
                .iter()
                .map(|s| CliqueSpaceJson {
                    component: s.component,
                    clique: s.clique.iter().map(|p| p.to_string()).collect(),
                    allowed: s.allowed.len(),
                    removed: s.removed(),
                })
                .collect()
        }),
    }
}

/// `{"props": [...], "probs": [...]}`; entry `i` sets `props[j]` true iff
/// bit `j` of `i` is set.
#[derive(Serialize, Deserialize)]
pub struct TableJson {
    pub props: Vec<String>,
    pub probs: Vec<f64>,
}

pub fn parse_table(text: &str) -> Result<JointTable> {
    let raw: TableJson = serde_json::from_str(text).context("malformed table JSON")?;
    let props = raw
        .props
        .iter()
        .map(|p| PropId::new(p).with_context(|| format!("bad proposition name `{p}`")))
        .collect::<Result<Vec<_>>>()?;
    Ok(JointTable::new(props, raw.probs)?)
}

pub fn table_json(t: &JointTable) -> TableJson {
    TableJson {
        props: t.props().iter().map(|p| p.to_string()).collect(),
        probs: t.probs().to_vec(),
    }
}
