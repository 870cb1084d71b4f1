//! Graphviz output.

use std::fmt::Write;

use lcn_core::graph::{MixedGraph, NodeId};

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// Renders `g` as a `digraph`. Undirected edges carry `dir=none`,
/// formula-nodes are dashed boxes and super-nodes are double octagons.
pub fn to_dot(g: &MixedGraph, name: &str) -> String {
    let mut out = String::new();
    writeln!(out, "digraph {} {{", quote(name)).unwrap();
    for (i, n) in g.nodes().iter().enumerate() {
        let style = match n {
            NodeId::Prop(_) => "shape=ellipse",
            NodeId::Formula(_) => "shape=box, style=dashed",
            NodeId::Super(_) => "shape=doubleoctagon",
        };
        writeln!(out, "  n{i} [label={}, {style}];", quote(&n.to_string())).unwrap();
    }
    for (a, b) in g.directed_edges() {
        writeln!(out, "  n{a} -> n{b};").unwrap();
    }
    for (a, b) in g.undirected_edges() {
        writeln!(out, "  n{a} -> n{b} [dir=none];").unwrap();
    }
    out.push_str("}\n");
    out
}
