//! Seeded random checks relating the graphs and Markov conditions, shared by `lcn verify`
//! and the acceptance suite.

use std::collections::BTreeSet;

use anyhow::Result;
use lcn_core::build::{dependency_graph, lcn_parents, structure};
use lcn_core::factorize::factorization_plan;
use lcn_core::gen::{lcn_with_structure, random_chain_graph, random_lcn};
use lcn_core::graph::{MixedGraph, NodeId, NodeSet};
use lcn_core::markov::{gmc_implies, local_statements, statement_decomposes, Condition};
use lcn_core::model::Lcn;
use lcn_core::oracle::sample_chain_factorized;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Deviation allowed when tables come from sampled potentials.
pub const SAMPLED_TOL: f64 = 1e-7;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub max_props: usize,
    pub max_constraints: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            samples: 200,
            seed: 0,
            max_props: 6,
            max_constraints: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CheckLine {
    pub name: &'static str,
    pub checked: usize,
    pub failed: usize,
}

#[derive(Debug, Default)]
pub struct VerifyReport {
    pub lines: Vec<CheckLine>,
    /// Printed models (or graphs) of the first few failures.
    pub counterexamples: Vec<String>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.lines.iter().all(|l| l.failed == 0)
    }

    pub fn line(&self, name: &str) -> Option<&CheckLine> {
        self.lines.iter().find(|l| l.name == name)
    }

    fn record(&mut self, index: usize, ok: bool, example: impl FnOnce() -> String) {
        let line = &mut self.lines[index];
        line.checked += 1;
        if !ok {
            line.failed += 1;
            if self.counterexamples.len() < 5 {
                self.counterexamples.push(example());
            }
        }
    }
}

pub const PARENTS_ARE_BOUNDARIES: &str = "lcn-parents equal structure boundaries";
pub const LOCAL_CONDITIONS_AGREE: &str = "lmc-lcn equals lmc-cstr";
pub const STRICT_LOCAL_IS_GLOBAL: &str = "lmc-cstr statements hold under gmc-c";
pub const LOCAL_DECOMPOSES: &str = "lmc-c statements decompose from lmc-cstr";
pub const TABLES_SATISFY_DEPENDENCY: &str = "factorized tables satisfy lmc-lcn";

/// Runs `samples` random models through each check. The first two checks
/// use arbitrary models, the rest use models built on random chain graphs.
pub fn verify(opts: &VerifyOptions) -> Result<VerifyReport> {
    let mut report = VerifyReport {
        lines: [PARENTS_ARE_BOUNDARIES, LOCAL_CONDITIONS_AGREE, STRICT_LOCAL_IS_GLOBAL, LOCAL_DECOMPOSES, TABLES_SATISFY_DEPENDENCY]
            .into_iter()
            .map(|name| CheckLine { name, checked: 0, failed: 0 })
            .collect(),
        counterexamples: Vec::new(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.samples {
        let lcn = random_lcn(&mut rng, opts.max_props, opts.max_constraints);
        let ok = parents_are_boundaries(&lcn)?;
        report.record(0, ok, || lcn.to_string());
        let ok = local_conditions_agree(&lcn)?;
        report.record(1, ok, || lcn.to_string());
    }
    for i in 0..opts.samples {
        let n = rng.gen_range(1..=opts.max_props);
        let g = random_chain_graph(&mut rng, n, 0.4);
        let lcn = lcn_with_structure(&mut rng, &g);
        let st = structure(&lcn);
        let ok = strict_local_is_global(&st)?;
        report.record(2, ok, || lcn.to_string());
        let ok = local_decomposes(&st)?;
        report.record(3, ok, || lcn.to_string());
        let table_seed = opts.seed.wrapping_mul(1_000_003).wrapping_add(i as u64);
        let ok = tables_satisfy_dependency(&lcn, &st, table_seed)?;
        report.record(4, ok, || lcn.to_string());
    }
    Ok(report)
}

pub fn parents_are_boundaries(lcn: &Lcn) -> Result<bool> {
    let dep = dependency_graph(lcn);
    let st = structure(lcn);
    for p in lcn.props() {
        let pa = lcn_parents(&dep, dep.ix(p.as_str())?)?;
        let bd = st.boundary(st.ix(p.as_str())?);
        if dep.names(&pa) != st.names(&bd) {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn local_conditions_agree(lcn: &Lcn) -> Result<bool> {
    let a = local_statements(&dependency_graph(lcn), Condition::LmcLcn)?;
    let b = local_statements(&structure(lcn), Condition::LmcCstr)?;
    Ok(a == b)
}

fn indices(g: &MixedGraph, set: &BTreeSet<NodeId>) -> NodeSet {
    set.iter().filter_map(|id| g.index_of(id)).collect()
}

pub fn strict_local_is_global(st: &MixedGraph) -> Result<bool> {
    for s in local_statements(st, Condition::LmcCstr)? {
        if !gmc_implies(st, &indices(st, s.x()), &indices(st, s.z()), &indices(st, s.y()))? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn local_decomposes(st: &MixedGraph) -> Result<bool> {
    let strict = local_statements(st, Condition::LmcCstr)?;
    let weak = local_statements(st, Condition::LmcC)?;
    Ok(weak.iter().all(|w| strict.iter().any(|s| statement_decomposes(s, w))))
}

pub fn tables_satisfy_dependency(lcn: &Lcn, st: &MixedGraph, seed: u64) -> Result<bool> {
    let plan = factorization_plan(st)?;
    let table = sample_chain_factorized(st, &plan, seed)?;
    for s in local_statements(&dependency_graph(lcn), Condition::LmcLcn)? {
        if !table.check_independence(&s, SAMPLED_TOL)?.holds() {
            return Ok(false);
        }
    }
    Ok(true)
}
