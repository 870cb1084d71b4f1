use std::collections::BTreeSet;

use lcn_core::build::dependency_graph;
use lcn_core::factorize::factorization_plan;
use lcn_core::gen::{lcn_with_structure, random_chain_graph};
use lcn_core::graph::{MixedGraph, NodeId};
use lcn_core::markov::{enumerate_gmc, local_statements, Bounds, Condition, IndependenceStatement};
use lcn_core::oracle::{sample_chain_factorized, sample_chain_potentials, JointTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SAMPLED_TOL: f64 = 1e-7;

fn chain_graphs(count: usize, max_nodes: usize, seed: u64) -> Vec<MixedGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let n = rng.gen_range(1..=max_nodes);
            random_chain_graph(&mut rng, n, 0.4)
        })
        .collect()
}

#[test]
fn factorized_tables_satisfy_local_conditions() {
    for (i, g) in chain_graphs(100, 6, 11).iter().enumerate() {
        let plan = factorization_plan(g).unwrap();
        let t = sample_chain_factorized(g, &plan, i as u64).unwrap();
        assert!((t.probs().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for cond in [Condition::LmcC, Condition::LmcCstr] {
            for s in local_statements(g, cond).unwrap() {
                let r = t.check_independence(&s, SAMPLED_TOL).unwrap();
                assert!(r.holds(), "graph {i} {cond} {s}: {}", r.max_deviation());
            }
        }
    }
}

#[test]
fn factorized_tables_satisfy_the_dependency_graph_condition() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for (i, g) in chain_graphs(100, 6, 13).iter().enumerate() {
        let lcn = lcn_with_structure(&mut rng, g);
        let plan = factorization_plan(g).unwrap();
        let t = sample_chain_factorized(g, &plan, 1000 + i as u64).unwrap();
        for s in local_statements(&dependency_graph(&lcn), Condition::LmcLcn).unwrap() {
            assert!(t.check_independence(&s, SAMPLED_TOL).unwrap().holds(), "graph {i}: {s}");
        }
    }
}

#[test]
fn factorized_tables_are_not_trivially_independent() {
    // An edge the sampler cannot hide: A -> B with random potentials.
    let g = MixedGraph::from_edge_list("A -> B, B -- C").unwrap();
    let plan = factorization_plan(&g).unwrap();
    let t = sample_chain_factorized(&g, &plan, 5).unwrap();
    let s = IndependenceStatement::props(&["A"], &["B"], &[]);
    assert!(!t.check_independence(&s, 1e-6).unwrap().holds());
    // Everything the global condition yields still holds.
    for s in enumerate_gmc(&g, Bounds::default()).unwrap() {
        assert!(t.check_independence(&s, SAMPLED_TOL).unwrap().holds(), "{s}");
    }
}

#[test]
fn dag_tables_match_per_node_conditionals() {
    let dags = ["A -> B, A -> C, B -> D, C -> D", "A -> C, B -> C", "A, B -> C, C -> D, A -> D"];
    for (k, edges) in dags.iter().enumerate() {
        let g = MixedGraph::from_edge_list(edges).unwrap();
        let plan = factorization_plan(&g).unwrap();
        let pot = sample_chain_potentials(&g, &plan, k as u64).unwrap();
        let table = pot.table();
        let n = g.len();
        // One clique {v} ∪ pa(v) per node: P(v | pa) = w(v, pa) / Σ_v w(v, pa).
        for row in 0..1usize << n {
            let mut p = 1.0;
            for comp in pot.components() {
                let v = comp.nodes[0];
                let flipped = row ^ (1 << v);
                p *= comp.weight(row) / (comp.weight(row) + comp.weight(flipped));
            }
            assert!((table.probs()[row] - p).abs() < 1e-12, "dag {k} row {row}");
        }
    }
}

/// Conditional mutual information in nats.
fn cmi(t: &JointTable, s: &IndependenceStatement) -> f64 {
    let cols = |set: &BTreeSet<NodeId>| -> Vec<usize> {
        set.iter().map(|n| t.position(n.as_prop().unwrap()).unwrap()).collect()
    };
    let (x, y, z) = (cols(s.x()), cols(s.y()), cols(s.z()));
    let mask = |c: &[usize]| c.iter().fold(0usize, |m, &j| m | 1 << j);
    let (mx, my, mz) = (mask(&x), mask(&y), mask(&z));
    let marginal = |m: usize, row: usize| -> f64 {
        t.probs().iter().enumerate().filter(|(r, _)| r & m == row & m).map(|(_, p)| p).sum()
    };
    let mut total = 0.0;
    let mut seen = BTreeSet::new();
    for row in 0..t.probs().len() {
        let key = row & (mx | my | mz);
        if !seen.insert(key) {
            continue;
        }
        let pxyz = marginal(mx | my | mz, row);
        if pxyz <= 0.0 {
            continue;
        }
        let pz = marginal(mz, row);
        let pxz = marginal(mx | mz, row);
        let pyz = marginal(my | mz, row);
        total += pxyz * (pxyz * pz / (pxz * pyz)).ln();
    }
    total
}

#[test]
fn deviation_and_mutual_information_agree() {
    let mut agreements = (0, 0);
    for (i, g) in chain_graphs(60, 4, 21).iter().enumerate() {
        let plan = factorization_plan(g).unwrap();
        let t = sample_chain_factorized(g, &plan, 500 + i as u64).unwrap();
        // Candidate statements: every triple, whether or not the graph implies it.
        let n = g.len();
        for code in 0..3usize.pow(n as u32) {
            let mut sets = [BTreeSet::new(), BTreeSet::new(), BTreeSet::new()];
            let mut c = code;
            for v in 0..n {
                sets[c % 3].insert(g.node(v).clone());
                c /= 3;
            }
            for x in sets[0].iter() {
                let xs = BTreeSet::from([x.clone()]);
                let ys: BTreeSet<NodeId> = sets[1].clone();
                let zs: BTreeSet<NodeId> = sets[2].clone();
                let Some(s) = IndependenceStatement::new(xs, ys, zs) else { continue };
                let by_deviation = t.check_independence(&s, 1e-9).unwrap().holds();
                let by_information = cmi(&t, &s) <= 1e-12;
                assert_eq!(by_deviation, by_information, "graph {i}: {s}");
                if by_deviation {
                    agreements.0 += 1;
                } else {
                    agreements.1 += 1;
                }
            }
        }
    }
    // Both outcomes occur, so the comparison is not one-sided.
    assert!(agreements.0 > 0 && agreements.1 > 0, "{agreements:?}");
}
