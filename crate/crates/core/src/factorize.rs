//! Chain-component factorization plans and super-node condensation.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use thiserror::Error;

use crate::formula::{Formula, PropId};
use crate::graph::{GraphBuilder, MixedGraph, NodeId, NodeSet};
use crate::model::Lcn;

/// Cliques wider than this are not expanded into configuration lists.
pub const MAX_CLIQUE_PROPS: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FactorizeError {
    #[error("graph has a directed cycle")]
    DirectedCycle,
    #[error("hard constraint {index} (`{text}`) spans no single clique")]
    UncoveredHardConstraint { index: usize, text: String },
    #[error("clique of {0} propositions is too wide to enumerate")]
    CliqueTooLarge(usize),
}

/// Chain components in an order where directed edges only point forward.
/// Ties go to the component with the smallest member.
pub fn component_dag(g: &MixedGraph) -> Result<Vec<NodeSet>, FactorizeError> {
    if g.has_directed_cycle() {
        return Err(FactorizeError::DirectedCycle);
    }
    let comps = g.chain_components();
    let mut comp_of = vec![0; g.len()];
    for (i, c) in comps.iter().enumerate() {
        for &n in c {
            comp_of[n] = i;
        }
    }
    let mut succ = vec![BTreeSet::new(); comps.len()];
    let mut indegree = vec![0usize; comps.len()];
    for (a, b) in g.directed_edges() {
        let (ca, cb) = (comp_of[a], comp_of[b]);
        if succ[ca].insert(cb) {
            indegree[cb] += 1;
        }
    }
    // Components are already sorted by smallest member, so the smallest
    // ready index is the tie-break.
    let mut ready: BTreeSet<usize> = (0..comps.len()).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(comps.len());
    while let Some(c) = ready.pop_first() {
        order.push(c);
        for &d in &succ[c] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                ready.insert(d);
            }
        }
    }
    debug_assert_eq!(order.len(), comps.len());
    Ok(order.into_iter().map(|i| comps[i].clone()).collect())
}

/// Maximal cliques of the undirected skeleton, each sorted, listed in order.
pub fn cliques(g: &MixedGraph) -> Vec<NodeSet> {
    let adj: Vec<NodeSet> = (0..g.len())
        .map(|a| (0..g.len()).filter(|&b| b != a && g.adjacent(a, b)).collect())
        .collect();
    let mut out = Vec::new();
    bron_kerbosch(&adj, NodeSet::new(), g.all(), NodeSet::new(), &mut out);
    out.sort();
    out
}

fn bron_kerbosch(adj: &[NodeSet], r: NodeSet, mut p: NodeSet, mut x: NodeSet, out: &mut Vec<NodeSet>) {
    if p.is_empty() {
        if x.is_empty() {
            out.push(r);
        }
        return;
    }
    let pivot = *p.union(&x).max_by_key(|&&u| adj[u].intersection(&p).count()).expect("nonempty");
    let candidates: Vec<usize> = p.difference(&adj[pivot]).copied().collect();
    for v in candidates {
        let mut r2 = r.clone();
        r2.insert(v);
        let p2 = p.intersection(&adj[v]).copied().collect();
        let x2 = x.intersection(&adj[v]).copied().collect();
        bron_kerbosch(adj, r2, p2, x2, out);
        p.remove(&v);
        x.insert(v);
    }
}

/// One factor `P(N | bd(N))` of a chain-component factorization.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComponentFactor {
    pub nodes: BTreeSet<NodeId>,
    pub boundary: BTreeSet<NodeId>,
    /// Positions in the plan of the components that feed this one.
    pub parent_components: Vec<usize>,
    /// Undirected graph on nodes and boundary, with the boundary complete.
    pub graph: MixedGraph,
    pub cliques: Vec<BTreeSet<NodeId>>,
}

impl ComponentFactor {
    /// The factor as a conditional probability.
    pub fn conditional(&self) -> String {
        if self.boundary.is_empty() {
            format!("P({})", join(&self.nodes))
        } else {
            format!("P({} | {})", join(&self.nodes), join(&self.boundary))
        }
    }

    /// The factor written through clique potentials.
    pub fn clique_form(&self) -> String {
        let product = self
            .cliques
            .iter()
            .map(|c| format!("φ({})", join(c)))
            .collect::<Vec<_>>()
            .join(" · ");
        if self.boundary.is_empty() {
            format!("{product} / Z")
        } else {
            format!("{product} / Σ_{{{}}} {product}", join(&self.nodes))
        }
    }

    /// Whether writing the factor through cliques relies on positivity.
    pub fn needs_positivity(&self) -> bool {
        self.cliques.len() > 1
    }

    /// Whether the factor involves a condensed set whose inner structure is
    /// left open.
    pub fn has_super_node(&self) -> bool {
        self.nodes.iter().any(|n| matches!(n, NodeId::Super(_)))
    }
}

fn join(set: &BTreeSet<NodeId>) -> String {
    set.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(",")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FactorizationPlan {
    pub components: Vec<ComponentFactor>,
    /// Some factor splits over several cliques, which holds for positive
    /// distributions.
    pub positivity_assumed: bool,
}

impl FactorizationPlan {
    /// The whole product, one conditional per component.
    pub fn product(&self) -> String {
        self.components.iter().map(|c| c.conditional()).collect::<Vec<_>>().join(" · ")
    }
}

impl fmt::Display for FactorizationPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "P = {}", self.product())?;
        for (i, c) in self.components.iter().enumerate() {
            writeln!(f, "[{}] {}", i + 1, c.conditional())?;
            writeln!(f, "    cliques: {}", c.cliques.iter().map(|q| format!("{{{}}}", join(q))).collect::<Vec<_>>().join(" "))?;
            writeln!(f, "    = {}", c.clique_form())?;
            if !c.parent_components.is_empty() {
                let parents: Vec<String> = c.parent_components.iter().map(|p| format!("[{}]", p + 1)).collect();
                writeln!(f, "    after: {}", parents.join(" "))?;
            }
            if c.has_super_node() {
                writeln!(f, "    super-node factor; inner decomposition left open")?;
            }
        }
        if self.positivity_assumed {
            writeln!(f, "assumes a positive distribution")?;
        }
        Ok(())
    }
}

pub fn factorization_plan(g: &MixedGraph) -> Result<FactorizationPlan, FactorizeError> {
    let order = component_dag(g)?;
    let mut position = vec![0; g.len()];
    for (i, comp) in order.iter().enumerate() {
        for &n in comp {
            position[n] = i;
        }
    }
    let mut components = Vec::with_capacity(order.len());
    for comp in &order {
        let bd = g.boundary_of_set(comp);
        let parent_components: BTreeSet<usize> = bd.iter().map(|&b| position[b]).collect();
        let mut b = GraphBuilder::new();
        for &n in comp.iter().chain(bd.iter()) {
            b.add_node(g.node(n).clone());
        }
        let scope: Vec<usize> = comp.iter().chain(bd.iter()).copied().collect();
        for (i, &u) in scope.iter().enumerate() {
            for &v in &scope[i + 1..] {
                let joined = g.adjacent(u, v) || (bd.contains(&u) && bd.contains(&v));
                if joined {
                    b.add_undirected(g.node(u).clone(), g.node(v).clone()).expect("distinct nodes");
                }
            }
        }
        let graph = b.build();
        let cliques = cliques(&graph).iter().map(|c| graph.ids(c)).collect();
        components.push(ComponentFactor {
            nodes: g.ids(comp),
            boundary: g.ids(&bd),
            parent_components: parent_components.into_iter().collect(),
            graph,
            cliques,
        });
    }
    let positivity_assumed = components.iter().any(ComponentFactor::needs_positivity);
    Ok(FactorizationPlan {
        components,
        positivity_assumed,
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Condensation {
    pub graph: MixedGraph,
    /// Where each original node ended up.
    pub mapping: BTreeMap<NodeId, NodeId>,
}

/// Replaces each set of nodes tied together by directed cycles with one
/// super-node. The result has no directed cycles.
pub fn condense_cycles(g: &MixedGraph) -> Condensation {
    let scc = g.step_components();
    let mut cyclic: BTreeSet<usize> = BTreeSet::new();
    for (a, b) in g.directed_edges() {
        if scc[a] == scc[b] {
            cyclic.insert(scc[a]);
        }
    }
    let mut members: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
    for (i, &c) in scc.iter().enumerate() {
        if cyclic.contains(&c) {
            members.entry(c).or_default().push(g.node(i).clone());
        }
    }
    let image: Vec<NodeId> = (0..g.len())
        .map(|i| match members.get(&scc[i]) {
            Some(m) => NodeId::Super(m.clone()),
            None => g.node(i).clone(),
        })
        .collect();
    let mut b = GraphBuilder::new();
    for n in &image {
        b.add_node(n.clone());
    }
    let mut directed = BTreeSet::new();
    for (u, v) in g.directed_edges() {
        if image[u] != image[v] {
            directed.insert((image[u].clone(), image[v].clone()));
        }
    }
    for (u, v) in &directed {
        if directed.contains(&(v.clone(), u.clone())) {
            b.add_undirected(u.clone(), v.clone()).expect("distinct nodes");
        } else {
            b.add_directed(u.clone(), v.clone()).expect("distinct nodes");
        }
    }
    for (u, v) in g.undirected_edges() {
        if image[u] != image[v] {
            b.add_undirected(image[u].clone(), image[v].clone()).expect("distinct nodes");
        }
    }
    let mapping = (0..g.len()).map(|i| (g.node(i).clone(), image[i].clone())).collect();
    Condensation {
        graph: b.build(),
        mapping,
    }
}

/// Configurations left in one clique after removing those a hard
/// constraint rules out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CliqueSpace {
    pub component: usize,
    pub clique: Vec<PropId>,
    /// Bit `j` of a configuration is the value of `clique[j]`.
    pub allowed: Vec<u64>,
}

impl CliqueSpace {
    pub fn removed(&self) -> usize {
        (1usize << self.clique.len()) - self.allowed.len()
    }
}

/// Propositions a node stands for; super-nodes stand for all members.
fn member_props(n: &NodeId, out: &mut Vec<PropId>) {
    match n {
        NodeId::Prop(p) => out.push(p.clone()),
        NodeId::Super(members) => members.iter().for_each(|m| member_props(m, out)),
        NodeId::Formula(_) => {}
    }
}

fn semantic_props(f: &Formula) -> BTreeSet<PropId> {
    match f.canonical_key() {
        Ok(k) => k.props().iter().cloned().collect(),
        Err(_) => f.support(),
    }
}

/// Removes clique configurations that hard constraints make impossible.
///
/// `P(φ|ψ) = 1` forbids `ψ ∧ ¬φ` and `P(φ|ψ) = 0` forbids `φ ∧ ψ`. Every
/// clique holding all of a constraint's propositions is pruned.
pub fn prune_hard_constraints(lcn: &Lcn, plan: &FactorizationPlan) -> Result<Vec<CliqueSpace>, FactorizeError> {
    let mut spaces = Vec::new();
    for (ci, comp) in plan.components.iter().enumerate() {
        for clique in &comp.cliques {
            let mut props = Vec::new();
            for n in clique {
                member_props(n, &mut props);
            }
            if props.len() > MAX_CLIQUE_PROPS {
                return Err(FactorizeError::CliqueTooLarge(props.len()));
            }
            spaces.push(CliqueSpace {
                component: ci,
                allowed: (0..1u64 << props.len()).collect(),
                clique: props,
            });
        }
    }
    for (index, c) in lcn.constraints().iter().enumerate() {
        if !c.is_hard() {
            continue;
        }
        let mut scope = semantic_props(c.phi());
        scope.extend(semantic_props(c.psi()));
        if scope.is_empty() {
            continue;
        }
        let forbid_true = c.hi() == 0.0;
        let mut covered = false;
        for space in spaces.iter_mut() {
            if !scope.iter().all(|p| space.clique.contains(p)) {
                continue;
            }
            covered = true;
            let clique = space.clique.clone();
            space.allowed.retain(|&cfg| {
                let value = |p: &PropId| clique.iter().position(|q| q == p).is_some_and(|j| cfg >> j & 1 == 1);
                let psi = c.psi().eval_with(&value);
                let phi = c.phi().eval_with(&value);
                !(psi && (phi == forbid_true))
            });
        }
        if !covered {
            return Err(FactorizeError::UncoveredHardConstraint {
                index,
                text: c.to_string(),
            });
        }
    }
    Ok(spaces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::build::structure;
    use crate::model::parse_lcn;

    fn g(edges: &str) -> MixedGraph {
        MixedGraph::from_edge_list(edges).unwrap()
    }

    fn named(g: &MixedGraph, sets: &[NodeSet]) -> Vec<Vec<String>> {
        sets.iter().map(|s| g.names(s)).collect()
    }

    const SMOKERS_STRUCTURE: &str = "F1 -- F2, F1 -- F3, F2 -- F3, S1 -- S2, S2 -- S3, S1 -- S3, \
        F1 -> S1, F1 -> S2, F2 -> S2, F2 -> S3, F3 -> S3, F3 -> S1, \
        S1 -> C1, S2 -> C2, S3 -> C3";

    #[test]
    fn smokers_component_order() {
        let st = g(SMOKERS_STRUCTURE);
        let order = component_dag(&st).unwrap();
        assert_eq!(
            named(&st, &order),
            [vec!["F1", "F2", "F3"], vec!["S1", "S2", "S3"], vec!["C1"], vec!["C2"], vec!["C3"]]
        );
    }

    #[test]
    fn dag_components_are_single_nodes() {
        let dag = g("C -> A, A -> B, C -> B");
        assert_eq!(named(&dag, &component_dag(&dag).unwrap()), [vec!["C"], vec!["A"], vec!["B"]]);
        assert_eq!(component_dag(&g("A <-> B")), Err(FactorizeError::DirectedCycle));
    }

    #[test]
    fn smokers_plan() {
        let plan = factorization_plan(&g(SMOKERS_STRUCTURE)).unwrap();
        assert_eq!(
            plan.product(),
            "P(F1,F2,F3) · P(S1,S2,S3 | F1,F2,F3) · P(C1 | S1) · P(C2 | S2) · P(C3 | S3)"
        );
        assert_eq!(plan.components[1].parent_components, [0]);
        assert_eq!(plan.components[2].parent_components, [1]);
        // Two triangles and the six triangles through the F -> S edges.
        let s = &plan.components[1];
        assert_eq!(s.cliques.len(), 8);
        assert!(s.cliques.contains(&["F1", "S1", "S2"].iter().map(|n| NodeId::prop(n)).collect()));
        assert!(plan.positivity_assumed);
    }

    #[test]
    fn split_f_component() {
        let st = g("F1 -- F2, F2 -- F3, S1 -- S2, S2 -- S3, S1 -- S3, \
            F1 -> S1, F1 -> S2, F2 -> S2, F2 -> S3, F3 -> S3, F3 -> S1");
        let plan = factorization_plan(&st).unwrap();
        let f = &plan.components[0];
        let cliques: Vec<String> = f.cliques.iter().map(join).collect();
        assert_eq!(cliques, ["F1,F2", "F2,F3"]);
        assert_eq!(f.clique_form(), "φ(F1,F2) · φ(F2,F3) / Z");
        assert!(plan.positivity_assumed);
    }

    #[test]
    fn dag_plan_is_one_factor_per_node() {
        let plan = factorization_plan(&g("A -> C, B -> C, C -> D")).unwrap();
        assert_eq!(plan.product(), "P(A) · P(B) · P(C | A,B) · P(D | C)");
        assert!(plan.components.iter().all(|c| c.cliques.len() == 1));
    }

    #[test]
    fn cliques_of_small_graphs() {
        let sq = g("A -- B, B -- C, C -- D, D -- A, A -- C");
        assert_eq!(named(&sq, &cliques(&sq)), [vec!["A", "B", "C"], vec!["A", "C", "D"]]);
        let iso = g("A, B");
        assert_eq!(named(&iso, &cliques(&iso)), [vec!["A"], vec!["B"]]);
    }

    #[test]
    fn condense_cycle() {
        let lcn: String = (1..=6).map(|i| format!("D: P(A{} given A{}) = 0.5\n", i % 6 + 1, i)).collect();
        let c = condense_cycles(&structure(&parse_lcn(&lcn).unwrap()));
        assert_eq!(c.graph.len(), 1);
        assert!(matches!(c.graph.node(0), NodeId::Super(m) if m.len() == 6));
    }

    #[test]
    fn condense_bidirected_path() {
        let c = condense_cycles(&g("A -> B, B <-> C, C <-> D, E -> D"));
        let sup = NodeId::Super(vec![NodeId::prop("B"), NodeId::prop("C"), NodeId::prop("D")]);
        assert_eq!(c.graph.nodes().len(), 3);
        let s = c.graph.index_of(&sup).unwrap();
        assert!(c.graph.has_directed(c.graph.ix("A").unwrap(), s));
        assert!(c.graph.has_directed(c.graph.ix("E").unwrap(), s));
        assert_eq!(c.graph.directed_edges().count(), 2);
        assert_eq!(c.mapping[&NodeId::prop("C")], sup);
        assert_eq!(sup.to_string(), "{B,C,D}");
    }

    #[test]
    fn condense_chain_graph_is_identity() {
        let st = g(SMOKERS_STRUCTURE);
        let c = condense_cycles(&st);
        assert_eq!(c.graph, st);
        assert!(c.mapping.iter().all(|(a, b)| a == b));
    }

    fn space_for<'a>(spaces: &'a [CliqueSpace], props: &[&str]) -> &'a CliqueSpace {
        spaces
            .iter()
            .find(|s| s.clique.iter().map(|p| p.as_str()).eq(props.iter().copied()))
            .unwrap()
    }

    #[test]
    fn pruning_removes_impossible_configurations() {
        let lcn = parse_lcn("U: P(A | B) = 1\nD: 0.2 <= P(C given A) <= 0.3").unwrap();
        let plan = factorization_plan(&structure(&lcn)).unwrap();
        let spaces = prune_hard_constraints(&lcn, &plan).unwrap();
        let ab = space_for(&spaces, &["A", "B"]);
        assert_eq!(ab.allowed, [0b01, 0b10, 0b11]);
        assert_eq!(ab.removed(), 1);
        let soft = parse_lcn("U: 0.1 <= P(A | B) <= 0.9").unwrap();
        let plan = factorization_plan(&structure(&soft)).unwrap();
        assert!(prune_hard_constraints(&soft, &plan).unwrap().iter().all(|s| s.removed() == 0));
    }

    #[test]
    fn pruning_zero_upper_bound_and_tautologies() {
        let lcn = parse_lcn("U: P(A & B) = 0\nU: P(A | !A) = 1").unwrap();
        let plan = factorization_plan(&structure(&lcn)).unwrap();
        let spaces = prune_hard_constraints(&lcn, &plan).unwrap();
        assert_eq!(space_for(&spaces, &["A", "B"]).allowed, [0b00, 0b01, 0b10]);
    }

    #[test]
    fn pruning_sees_inside_super_nodes() {
        let lcn = parse_lcn("D: P(A given B) = 0.5\nD: P(B given A) = 0.5\nU: P(A | B) = 1\nD: P(C given B) = 0.4").unwrap();
        let condensed = condense_cycles(&crate::build::mixed_structure(&lcn));
        let plan = factorization_plan(&condensed.graph).unwrap();
        let spaces = prune_hard_constraints(&lcn, &plan).unwrap();
        assert!(spaces.iter().any(|s| s.clique.len() == 2 && s.removed() == 1));
    }

    #[test]
    fn uncovered_hard_constraint_is_reported() {
        let lcn = parse_lcn("U: P(A | B) = 1\nD: P(C given A) = 0.5").unwrap();
        // Drop the A--B edge by planning over a graph without it.
        let plan = factorization_plan(&g("A -> C, B")).unwrap();
        assert!(matches!(
            prune_hard_constraints(&lcn, &plan),
            Err(FactorizeError::UncoveredHardConstraint { index: 0, .. })
        ));
    }
}
