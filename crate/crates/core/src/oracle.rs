//! Exhaustive ground truth over small joint distributions.
//!
//! A [`JointTable`] lists `2^n` probabilities; entry `i` is the assignment
//! where `props[j]` is true iff bit `j` of `i` is set.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::factorize::FactorizationPlan;
use crate::formula::{Formula, PropId};
use crate::graph::{MixedGraph, NodeId, NodeSet};
use crate::markov::IndependenceStatement;
use crate::model::Constraint;

pub const MAX_TABLE_PROPS: usize = 12;
/// Floor for sampled weights and potentials.
pub const WEIGHT_FLOOR: f64 = 1e-3;
/// Allowed distance of a table's total mass from 1.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("{0} propositions; tables hold at most {MAX_TABLE_PROPS}")]
    TooManyProps(usize),
    #[error("{props} propositions need {expected} probabilities, got {got}")]
    BadLength { props: usize, expected: usize, got: usize },
    #[error("probability {index} is negative or not finite")]
    BadEntry { index: usize },
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("proposition `{0}` is not in the table")]
    UnknownProp(String),
    #[error("proposition `{0}` listed twice")]
    DuplicateProp(String),
    #[error("`{0}` is not a proposition")]
    NotAProposition(String),
    #[error("graph has a directed cycle")]
    DirectedCycle,
    #[error("separation needs an undirected graph")]
    DirectedEdgesPresent,
    #[error("node sets are not pairwise disjoint")]
    NotDisjoint,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointTable {
    props: Vec<PropId>,
    probs: Vec<f64>,
}

/// Outcome of checking one constraint against a table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ConstraintStatus {
    Satisfied { value: f64 },
    /// `margin` is the distance to the nearest bound, beyond tolerance.
    Violated { value: f64, margin: f64 },
    /// The conditioning formula has probability zero.
    Vacuous,
}

impl ConstraintStatus {
    /// Strict checking counts vacuous constraints as violated.
    pub fn passes(&self, strict: bool) -> bool {
        match self {
            ConstraintStatus::Satisfied { .. } => true,
            ConstraintStatus::Violated { .. } => false,
            ConstraintStatus::Vacuous => !strict,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum IndependenceStatus {
    Holds { max_deviation: f64 },
    Fails { max_deviation: f64 },
}

impl IndependenceStatus {
    pub fn holds(&self) -> bool {
        matches!(self, IndependenceStatus::Holds { .. })
    }

    pub fn max_deviation(&self) -> f64 {
        match *self {
            IndependenceStatus::Holds { max_deviation } | IndependenceStatus::Fails { max_deviation } => max_deviation,
        }
    }
}

fn check_props(props: &[PropId]) -> Result<(), OracleError> {
    if props.len() > MAX_TABLE_PROPS {
        return Err(OracleError::TooManyProps(props.len()));
    }
    let mut seen = BTreeSet::new();
    for p in props {
        if !seen.insert(p) {
            return Err(OracleError::DuplicateProp(p.to_string()));
        }
    }
    Ok(())
}

impl JointTable {
    pub fn new(props: Vec<PropId>, probs: Vec<f64>) -> Result<Self, OracleError> {
        check_props(&props)?;
        let expected = 1usize << props.len();
        if probs.len() != expected {
            return Err(OracleError::BadLength {
                props: props.len(),
                expected,
                got: probs.len(),
            });
        }
        if let Some(index) = probs.iter().position(|p| !p.is_finite() || *p < 0.0) {
            return Err(OracleError::BadEntry { index });
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(OracleError::NotNormalized(total));
        }
        Ok(JointTable { props, probs })
    }

    /// Every assignment equally likely.
    pub fn uniform(props: Vec<PropId>) -> Result<Self, OracleError> {
        check_props(&props)?;
        let n = 1usize << props.len();
        Ok(JointTable {
            props,
            probs: vec![1.0 / n as f64; n],
        })
    }

    pub fn props(&self) -> &[PropId] {
        &self.props
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn position(&self, p: &PropId) -> Result<usize, OracleError> {
        self.props
            .iter()
            .position(|q| q == p)
            .ok_or_else(|| OracleError::UnknownProp(p.to_string()))
    }

    fn check_formula(&self, f: &Formula) -> Result<(), OracleError> {
        for p in f.support() {
            self.position(&p)?;
        }
        Ok(())
    }

    fn value(&self, row: usize) -> impl Fn(&PropId) -> bool + '_ {
        move |p: &PropId| {
            let j = self.props.iter().position(|q| q == p).expect("checked proposition");
            row >> j & 1 == 1
        }
    }

    /// Mass of the assignments satisfying `f`.
    pub fn prob(&self, f: &Formula) -> Result<f64, OracleError> {
        self.check_formula(f)?;
        Ok((0..self.probs.len())
            .filter(|&row| f.eval_with(&self.value(row)))
            .map(|row| self.probs[row])
            .sum())
    }

    /// `P(phi | psi)`, or `None` when `P(psi) = 0`.
    pub fn cond_prob(&self, phi: &Formula, psi: &Formula) -> Result<Option<f64>, OracleError> {
        self.check_formula(phi)?;
        self.check_formula(psi)?;
        let (mut both, mut given) = (0.0, 0.0);
        for row in 0..self.probs.len() {
            let value = self.value(row);
            if psi.eval_with(&value) {
                given += self.probs[row];
                if phi.eval_with(&value) {
                    both += self.probs[row];
                }
            }
        }
        Ok(if given > 0.0 { Some(both / given) } else { None })
    }

    pub fn check_constraint(&self, c: &Constraint, tol: f64) -> Result<ConstraintStatus, OracleError> {
        Ok(match self.cond_prob(c.phi(), c.psi())? {
            None => ConstraintStatus::Vacuous,
            Some(value) if value < c.lo() - tol => ConstraintStatus::Violated {
                value,
                margin: c.lo() - value,
            },
            Some(value) if value > c.hi() + tol => ConstraintStatus::Violated {
                value,
                margin: value - c.hi(),
            },
            Some(value) => ConstraintStatus::Satisfied { value },
        })
    }

    fn positions(&self, set: &BTreeSet<NodeId>) -> Result<Vec<usize>, OracleError> {
        set.iter()
            .map(|n| match n.as_prop() {
                Some(p) => self.position(p),
                None => Err(OracleError::NotAProposition(n.to_string())),
            })
            .collect()
    }

    /// Checks `P(x,y|z) = P(x|z) P(y|z)` for every configuration, skipping
    /// `z` with zero mass. The deviation is measured on the `P(x,y|z)` scale.
    pub fn check_independence(&self, s: &IndependenceStatement, tol: f64) -> Result<IndependenceStatus, OracleError> {
        let xs = self.positions(s.x())?;
        let ys = self.positions(s.y())?;
        let zs = self.positions(s.z())?;
        let (nx, ny, nz) = (xs.len(), ys.len(), zs.len());
        let pick = |row: usize, cols: &[usize]| {
            cols.iter().enumerate().fold(0usize, |acc, (k, &j)| acc | ((row >> j & 1) << k))
        };
        // Marginal over (x, y, z), indexed x | y << nx | z << (nx + ny).
        let mut m = vec![0.0; 1 << (nx + ny + nz)];
        for (row, p) in self.probs.iter().enumerate() {
            m[pick(row, &xs) | pick(row, &ys) << nx | pick(row, &zs) << (nx + ny)] += p;
        }
        let mut max_deviation: f64 = 0.0;
        for z in 0..1usize << nz {
            let base = z << (nx + ny);
            let pz: f64 = m[base..base + (1 << (nx + ny))].iter().sum();
            if pz <= 0.0 {
                continue;
            }
            let mut px = vec![0.0; 1 << nx];
            let mut py = vec![0.0; 1 << ny];
            for x in 0..1usize << nx {
                for y in 0..1usize << ny {
                    let v = m[base | x | y << nx];
                    px[x] += v;
                    py[y] += v;
                }
            }
            for x in 0..1usize << nx {
                for y in 0..1usize << ny {
                    let joint = m[base | x | y << nx] / pz;
                    let product = (px[x] / pz) * (py[y] / pz);
                    max_deviation = max_deviation.max((joint - product).abs());
                }
            }
        }
        Ok(if max_deviation <= tol {
            IndependenceStatus::Holds { max_deviation }
        } else {
            IndependenceStatus::Fails { max_deviation }
        })
    }
}

/// Independent weights in `[WEIGHT_FLOOR, 1]`, normalized.
pub fn sample_positive_table(props: Vec<PropId>, seed: u64) -> Result<JointTable, OracleError> {
    check_props(&props)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probs: Vec<f64> = (0..1usize << props.len()).map(|_| rng.gen_range(WEIGHT_FLOOR..=1.0)).collect();
    let total: f64 = probs.iter().sum();
    for p in probs.iter_mut() {
        *p /= total;
    }
    Ok(JointTable { props, probs })
}

/// Positive potentials, one table per clique of each component graph.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainPotentials {
    props: Vec<PropId>,
    components: Vec<ComponentPotentials>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComponentPotentials {
    /// Table positions of the component's own nodes.
    pub nodes: Vec<usize>,
    /// Table positions of the boundary.
    pub boundary: Vec<usize>,
    /// Per clique: table positions and one weight per clique configuration.
    pub cliques: Vec<(Vec<usize>, Vec<f64>)>,
}

impl ComponentPotentials {
    /// Product of clique potentials at a full assignment.
    pub fn weight(&self, row: usize) -> f64 {
        self.cliques
            .iter()
            .map(|(cols, w)| {
                let cfg = cols.iter().enumerate().fold(0usize, |acc, (k, &j)| acc | ((row >> j & 1) << k));
                w[cfg]
            })
            .product()
    }
}

impl ChainPotentials {
    pub fn props(&self) -> &[PropId] {
        &self.props
    }

    pub fn components(&self) -> &[ComponentPotentials] {
        &self.components
    }

    /// Multiplies the normalized component conditionals.
    pub fn table(&self) -> JointTable {
        let n = 1usize << self.props.len();
        let mut probs = vec![1.0; n];
        for comp in &self.components {
            // Normalizer per boundary configuration, keyed by the row with
            // only boundary bits kept.
            let bd_mask: usize = comp.boundary.iter().map(|&j| 1 << j).sum();
            let node_mask: usize = comp.nodes.iter().map(|&j| 1 << j).sum();
            let mut z = alloc::collections::BTreeMap::new();
            for row in 0..n {
                if row & !(bd_mask | node_mask) == 0 {
                    *z.entry(row & bd_mask).or_insert(0.0) += comp.weight(row);
                }
            }
            for (row, p) in probs.iter_mut().enumerate() {
                *p *= comp.weight(row) / z[&(row & bd_mask)];
            }
        }
        JointTable {
            props: self.props.clone(),
            probs,
        }
    }
}

fn graph_props(g: &MixedGraph) -> Result<Vec<PropId>, OracleError> {
    let props: Vec<PropId> = g
        .nodes()
        .iter()
        .map(|n| n.as_prop().cloned().ok_or_else(|| OracleError::NotAProposition(n.to_string())))
        .collect::<Result<_, _>>()?;
    check_props(&props)?;
    Ok(props)
}

/// Draws clique potentials for every component of `plan`, in plan order.
pub fn sample_chain_potentials(g: &MixedGraph, plan: &FactorizationPlan, seed: u64) -> Result<ChainPotentials, OracleError> {
    if g.has_directed_cycle() {
        return Err(OracleError::DirectedCycle);
    }
    let props = graph_props(g)?;
    let pos = |n: &NodeId| g.index_of(n).ok_or_else(|| OracleError::UnknownProp(n.to_string()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut components = Vec::with_capacity(plan.components.len());
    for comp in &plan.components {
        let nodes = comp.nodes.iter().map(pos).collect::<Result<_, _>>()?;
        let boundary = comp.boundary.iter().map(pos).collect::<Result<_, _>>()?;
        let mut cliques = Vec::with_capacity(comp.cliques.len());
        for clique in &comp.cliques {
            let cols: Vec<usize> = clique.iter().map(pos).collect::<Result<_, _>>()?;
            let weights = (0..1usize << cols.len()).map(|_| rng.gen_range(WEIGHT_FLOOR..=1.0)).collect();
            cliques.push((cols, weights));
        }
        components.push(ComponentPotentials { nodes, boundary, cliques });
    }
    Ok(ChainPotentials { props, components })
}

/// A positive table that factorizes along `plan`.
pub fn sample_chain_factorized(g: &MixedGraph, plan: &FactorizationPlan, seed: u64) -> Result<JointTable, OracleError> {
    Ok(sample_chain_potentials(g, plan, seed)?.table())
}

/// Separation by enumerating every simple path that avoids `n2`.
pub fn separation_bruteforce(u: &MixedGraph, n1: &NodeSet, n2: &NodeSet, n3: &NodeSet) -> Result<bool, OracleError> {
    let n = u.len();
    if n > MAX_TABLE_PROPS {
        return Err(OracleError::TooManyProps(n));
    }
    if u.directed_edges().next().is_some() {
        return Err(OracleError::DirectedEdgesPresent);
    }
    if !(n1.is_disjoint(n2) && n1.is_disjoint(n3) && n2.is_disjoint(n3)) {
        return Err(OracleError::NotDisjoint);
    }
    let mut adj = vec![vec![false; n]; n];
    for (a, b) in u.undirected_edges() {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    fn connects(adj: &[Vec<bool>], at: usize, on_path: &mut Vec<bool>, n2: &NodeSet, n3: &NodeSet) -> bool {
        if n3.contains(&at) {
            return true;
        }
        on_path[at] = true;
        let found = (0..adj.len()).any(|next| adj[at][next] && !on_path[next] && !n2.contains(&next) && connects(adj, next, on_path, n2, n3));
        on_path[at] = false;
        found
    }
    let mut on_path = vec![false; n];
    Ok(!n1.iter().any(|&a| connects(&adj, a, &mut on_path, n2, n3)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::factorize::factorization_plan;
    use crate::formula::{parse_formula, Scope};
    use crate::markov::{local_statements, Condition};
    use crate::model::parse_lcn;

    fn props(names: &[&str]) -> Vec<PropId> {
        names.iter().map(|n| PropId::new(n).unwrap()).collect()
    }

    fn f(text: &str) -> Formula {
        parse_formula(text, &mut Scope::open()).unwrap()
    }

    #[test]
    fn probabilities_of_formulas() {
        let t = JointTable::uniform(props(&["A", "B"])).unwrap();
        assert!((t.prob(&f("A | B")).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(t.prob(&Formula::Top).unwrap(), 1.0);
        assert!(matches!(t.prob(&f("C")), Err(OracleError::UnknownProp(_))));
        let point = JointTable::new(props(&["A", "B"]), vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(point.cond_prob(&f("B"), &f("A")).unwrap(), None);
    }

    #[test]
    fn table_validation() {
        assert!(matches!(JointTable::new(props(&["A"]), vec![1.0]), Err(OracleError::BadLength { .. })));
        assert!(matches!(JointTable::new(props(&["A"]), vec![0.5, 0.6]), Err(OracleError::NotNormalized(_))));
        assert!(matches!(JointTable::new(props(&["A"]), vec![1.5, -0.5]), Err(OracleError::BadEntry { index: 1 })));
        assert!(matches!(JointTable::new(props(&["A", "A"]), vec![0.25; 4]), Err(OracleError::DuplicateProp(_))));
        let many: Vec<String> = (0..13).map(|i| alloc::format!("P{i}")).collect();
        let many: Vec<&str> = many.iter().map(|s| s.as_str()).collect();
        assert!(matches!(JointTable::uniform(props(&many)), Err(OracleError::TooManyProps(13))));
    }

    #[test]
    fn constraint_statuses() {
        let t = JointTable::uniform(props(&["A", "B"])).unwrap();
        let lcn = parse_lcn("U: 0.5 <= P(A | B) <= 1\nU: P(A | B) <= 0.5\nD: P(B given A & !A) = 0.3").unwrap();
        let c = lcn.constraints();
        assert!(matches!(t.check_constraint(&c[0], 1e-9).unwrap(), ConstraintStatus::Satisfied { .. }));
        match t.check_constraint(&c[1], 1e-9).unwrap() {
            ConstraintStatus::Violated { margin, .. } => assert!((margin - 0.25).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
        let vacuous = t.check_constraint(&c[2], 1e-9).unwrap();
        assert_eq!(vacuous, ConstraintStatus::Vacuous);
        assert!(vacuous.passes(false) && !vacuous.passes(true));

        let hard = parse_lcn("U: P(A | B) = 1").unwrap();
        let t = JointTable::new(props(&["A", "B"]), vec![0.0, 0.2, 0.3, 0.5]).unwrap();
        assert!(matches!(t.check_constraint(&hard.constraints()[0], 0.0).unwrap(), ConstraintStatus::Satisfied { .. }));
    }

    #[test]
    fn independence_checks() {
        // P(A=1) = 0.3, P(B=1) = 0.6, independent.
        let (a, b) = (0.3, 0.6);
        let t = JointTable::new(props(&["A", "B"]), vec![(1.0 - a) * (1.0 - b), a * (1.0 - b), (1.0 - a) * b, a * b]).unwrap();
        let s = IndependenceStatement::props(&["A"], &["B"], &[]);
        assert!(t.check_independence(&s, 1e-12).unwrap().holds());

        let diag = JointTable::new(props(&["A", "B"]), vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        let r = diag.check_independence(&s, 1e-9).unwrap();
        assert!(!r.holds());
        assert!((r.max_deviation() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn conditional_independence_skips_empty_conditions() {
        // A and B copy C when C is true; C is never false.
        let t = JointTable::new(props(&["A", "B", "C"]), vec![0.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25]).unwrap();
        let s = IndependenceStatement::props(&["A"], &["B"], &["C"]);
        assert!(t.check_independence(&s, 1e-12).unwrap().holds());
    }

    #[test]
    fn positive_sampling_is_deterministic() {
        let p = props(&["A", "B", "C"]);
        let t1 = sample_positive_table(p.clone(), 7).unwrap();
        let t2 = sample_positive_table(p, 7).unwrap();
        assert_eq!(t1, t2);
        assert!(t1.probs().iter().all(|&x| x > 0.0));
        let two = sample_positive_table(props(&["A", "B"]), 0).unwrap();
        assert!((two.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_ne!(sample_positive_table(props(&["A"]), 1).unwrap(), sample_positive_table(props(&["A"]), 2).unwrap());
    }

    #[test]
    fn factorized_tables_are_markov() {
        let g = MixedGraph::from_edge_list("A -> B, C -> D, B -- D").unwrap();
        let plan = factorization_plan(&g).unwrap();
        for seed in 0..5 {
            let t = sample_chain_factorized(&g, &plan, seed).unwrap();
            assert!((t.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let lmc = local_statements(&g, Condition::LmcC).unwrap();
            assert_eq!(lmc.len(), 3);
            for s in &lmc {
                assert!(t.check_independence(s, 1e-9).unwrap().holds(), "{s}");
            }
        }
    }

    #[test]
    fn single_node_factorization() {
        let g = MixedGraph::from_edge_list("A").unwrap();
        let t = sample_chain_factorized(&g, &factorization_plan(&g).unwrap(), 3).unwrap();
        assert!((t.probs()[0] + t.probs()[1] - 1.0).abs() < 1e-15);
        assert!(t.probs().iter().all(|&p| p > 0.0));
    }

    #[test]
    fn brute_force_separation() {
        let moral_cycle = MixedGraph::from_edge_list("A -- B, C -- D, B -- D, A -- D, C -- B").unwrap();
        let s = |n: &[&str]| moral_cycle.set(n).unwrap();
        assert!(separation_bruteforce(&moral_cycle, &s(&["A"]), &s(&["B", "D"]), &s(&["C"])).unwrap());
        let path = MixedGraph::from_edge_list("A -- B, B -- C").unwrap();
        let s = |n: &[&str]| path.set(n).unwrap();
        assert!(!separation_bruteforce(&path, &s(&["A"]), &s(&[]), &s(&["C"])).unwrap());
        assert!(!separation_bruteforce(&path, &s(&["A"]), &s(&["C"]), &s(&["B"])).unwrap());
        let directed = MixedGraph::from_edge_list("A -> B").unwrap();
        assert_eq!(
            separation_bruteforce(&directed, &NodeSet::new(), &NodeSet::new(), &NodeSet::new()),
            Err(OracleError::DirectedEdgesPresent)
        );
    }
}
