//! Seeded random models and graphs for property checks.

use alloc::format;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::formula::{Formula, PropId};
use crate::graph::{GraphBuilder, MixedGraph, NodeId};
use crate::model::{Constraint, Group, Lcn};

/// Names `A`, `B`, ... for the first `n` propositions (at most 26).
pub fn letters(n: usize) -> Vec<PropId> {
    assert!(n <= 26, "at most 26 letter names");
    (0..n)
        .map(|i| PropId::new(&format!("{}", (b'A' + i as u8) as char)).expect("letter"))
        .collect()
}

/// A formula of at most `depth` connectives over `props`.
pub fn random_formula<R: Rng>(rng: &mut R, props: &[PropId], depth: usize) -> Formula {
    if depth == 0 || rng.gen_bool(0.35) {
        let p = Formula::prop(props.choose(rng).expect("nonempty").clone());
        return if rng.gen_bool(0.25) { Formula::not(p) } else { p };
    }
    let a = random_formula(rng, props, depth - 1);
    let b = random_formula(rng, props, depth - 1);
    match rng.gen_range(0..5) {
        0 => Formula::not(Formula::and(a, b)),
        1 | 2 => Formula::and(a, b),
        _ => Formula::or(a, b),
    }
}

fn bounds<R: Rng>(rng: &mut R) -> (f64, f64) {
    let a: f64 = rng.gen_range(0.0..=1.0);
    let b: f64 = rng.gen_range(0.0..=1.0);
    // Two decimals keep printed models readable.
    let round = |x: f64| (x * 100.0 + 0.5) as u32 as f64 / 100.0;
    let (lo, hi) = (round(a.min(b)), round(a.max(b)));
    (lo, hi)
}

/// An LCN over `1..=max_props` propositions with up to `max_constraints`
/// constraints from both groups.
pub fn random_lcn<R: Rng>(rng: &mut R, max_props: usize, max_constraints: usize) -> Lcn {
    let props = letters(rng.gen_range(1..=max_props));
    let count = rng.gen_range(0..=max_constraints);
    let mut constraints = Vec::with_capacity(count);
    while constraints.len() < count {
        let phi = random_formula(rng, &props, 2);
        let psi = if rng.gen_bool(0.3) {
            Formula::Top
        } else {
            random_formula(rng, &props, 1)
        };
        let group = if rng.gen_bool(0.5) { Group::U } else { Group::D };
        let (lo, hi) = bounds(rng);
        // Only literal constants are refused, and none are generated.
        constraints.push(Constraint::new(lo, hi, phi, psi, group).expect("generated constraint is valid"));
    }
    Lcn::new(props, constraints).expect("generated model is valid")
}

/// A chain graph on `n` letter-named nodes: nodes fall into ordered blocks,
/// undirected edges stay inside a block and directed edges point to later
/// blocks.
pub fn random_chain_graph<R: Rng>(rng: &mut R, n: usize, p_edge: f64) -> MixedGraph {
    let props = letters(n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut block = alloc::vec![0usize; n];
    let mut current = 0;
    for (k, &v) in order.iter().enumerate() {
        if k > 0 && rng.gen_bool(0.5) {
            current += 1;
        }
        block[v] = current;
    }
    let mut b = GraphBuilder::new();
    for p in &props {
        b.add_node(NodeId::Prop(p.clone()));
    }
    for i in 0..n {
        for j in 0..n {
            if i == j || !rng.gen_bool(p_edge) {
                continue;
            }
            let (u, v) = (NodeId::Prop(props[i].clone()), NodeId::Prop(props[j].clone()));
            if block[i] == block[j] && i < j {
                b.add_undirected(u, v).expect("distinct");
            } else if block[i] < block[j] {
                b.add_directed(u, v).expect("distinct");
            }
        }
    }
    b.build()
}

/// Any mixed graph: each ordered pair independently gets a directed edge,
/// each unordered pair an undirected one.
pub fn random_mixed_graph<R: Rng>(rng: &mut R, n: usize, p_directed: f64, p_undirected: f64) -> MixedGraph {
    let props = letters(n);
    let mut b = GraphBuilder::new();
    for p in &props {
        b.add_node(NodeId::Prop(p.clone()));
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let (u, v) = (NodeId::Prop(props[i].clone()), NodeId::Prop(props[j].clone()));
            if rng.gen_bool(p_directed) {
                b.add_directed(u.clone(), v.clone()).expect("distinct");
            }
            if i < j && rng.gen_bool(p_undirected) {
                b.add_undirected(u, v).expect("distinct");
            }
        }
    }
    b.build()
}

pub fn random_undirected_graph<R: Rng>(rng: &mut R, n: usize, p_edge: f64) -> MixedGraph {
    random_mixed_graph(rng, n, 0.0, p_edge)
}

/// An LCN whose structure is exactly `g`: `U: P(a | b)` per undirected
/// edge and `D: P(b given a)` per directed edge. `g` must hold propositions only.
pub fn lcn_with_structure<R: Rng>(rng: &mut R, g: &MixedGraph) -> Lcn {
    let prop = |i: usize| g.node(i).as_prop().expect("proposition node").clone();
    let mut constraints = Vec::new();
    for (a, b) in g.undirected_edges() {
        let (lo, hi) = bounds(rng);
        let phi = Formula::or(Formula::prop(prop(a)), Formula::prop(prop(b)));
        constraints.push(Constraint::new(lo, hi, phi, Formula::Top, Group::U).expect("valid"));
    }
    for (a, b) in g.directed_edges() {
        let (lo, hi) = bounds(rng);
        constraints.push(
            Constraint::new(lo, hi, Formula::prop(prop(b)), Formula::prop(prop(a)), Group::D).expect("valid"),
        );
    }
    let props = (0..g.len()).map(prop).collect();
    Lcn::new(props, constraints).expect("valid model")
}
