//! Cross-module invariants: label symmetry of the whole scoring path,
//! per-node scale neutrality of the posteriors, and agreement of the
//! single-feature path with the all-edges path on random instances.

mod common;

use bnpost::dataset::Dataset;
use bnpost::engine::{all_edge_posteriors, feature_posterior};
use bnpost::model::{assemble_b, Bfunction, FeatureSpec, PriorKind};
use bnpost::scoring::{bde_log_score, build_score_tables};
use bnpost::NodeSet;
use rand::prelude::*;

/// Shuffling the category labels of a column permutes counts but leaves
/// every local score unchanged.
#[test]
fn label_shuffle_preserves_scores() {
    let mut rng = common::rng(42);
    let ds = common::random_dataset(&mut rng, 4, 30, &[2, 3]);

    for column in 0..4 {
        let arity = ds.arity(column);
        let mut relabel: Vec<u32> = (0..arity).collect();
        relabel.shuffle(&mut rng);
        let rows: Vec<Vec<u32>> = (0..ds.m())
            .map(|t| {
                (0..ds.n())
                    .map(|i| {
                        let v = ds.value(t, i);
                        if i == column {
                            relabel[v as usize]
                        } else {
                            v
                        }
                    })
                    .collect()
            })
            .collect();
        let shuffled = Dataset::from_parts(
            ds.names().to_vec(),
            ds.arities().to_vec(),
            &rows,
        )
        .unwrap();

        for node in 0..4usize {
            for parents in [
                NodeSet::EMPTY,
                NodeSet::full(4).remove(node),
                NodeSet::singleton((node + 1) % 4),
            ] {
                let a = bde_log_score(&ds, node, parents).unwrap();
                let b = bde_log_score(&shuffled, node, parents).unwrap();
                assert!(
                    (a - b).abs() <= 1e-10 * a.abs().max(1.0),
                    "node {node}, parents {parents}: {a} vs {b}"
                );
            }
        }
    }
}

/// Scaling one node's B by a positive constant scales the joint and the
/// evidence identically, leaving every posterior unchanged.
#[test]
fn per_node_scaling_leaves_posteriors_unchanged() {
    let mut rng = common::rng(7);
    let ds = common::random_dataset(&mut rng, 5, 25, &[2]);
    let scores = build_score_tables(&ds, 3).unwrap();
    let b = assemble_b(&scores, PriorKind::Uniform, &FeatureSpec::constant(5), 3).unwrap();
    let base = all_edge_posteriors(&b).unwrap();

    for (node, factor) in [(0usize, 3.5f64), (2, 0.125), (4, 11.0)] {
        let families: Vec<Vec<(NodeSet, f64)>> = (0..5)
            .map(|i| {
                b.families(i)
                    .iter()
                    .map(|&(p, v)| (p, if i == node { v * factor } else { v }))
                    .collect()
            })
            .collect();
        let shifts: Vec<f64> = (0..5).map(|i| b.shift(i)).collect();
        let scaled = Bfunction::from_raw(5, 3, families, shifts).unwrap();
        let result = all_edge_posteriors(&scaled).unwrap();
        for u in 0..5 {
            for v in 0..5 {
                let (p, q) = (base.get(u, v), result.get(u, v));
                assert!(
                    (p - q).abs() <= 1e-10 * p.abs().max(1e-30),
                    "edge {u}->{v} moved: {p} vs {q} under factor {factor} on node {node}"
                );
            }
        }
        // the joint itself scales by exactly the factor
        let expected_log = base.log_evidence + factor.ln();
        assert!((result.log_evidence - expected_log).abs() < 1e-9);
    }
}

/// The single-feature path and the all-edges path are two different
/// algorithms for the same number; they must agree on every edge.
#[test]
fn feature_path_matches_edge_path_on_random_instances() {
    let mut rng = common::rng(1234);
    for trial in 0..4 {
        let n = 3 + (trial % 3);
        let m = [0, 5, 20, 40][trial % 4];
        let ds = common::random_dataset(&mut rng, n, m, &[2, 3]);
        let k = rng.gen_range(1..n);
        for prior in [PriorKind::Uniform, PriorKind::OrderModular] {
            let scores = build_score_tables(&ds, k).unwrap();
            let b = assemble_b(&scores, prior, &FeatureSpec::constant(n), k).unwrap();
            let matrix = all_edge_posteriors(&b).unwrap();
            for u in 0..n {
                for v in 0..n {
                    if u == v {
                        continue;
                    }
                    let f = FeatureSpec::edge(n, u, v).unwrap();
                    let p = feature_posterior(&scores, prior, &f, k).unwrap();
                    assert!(
                        (p - matrix.get(u, v)).abs() < 1e-9,
                        "n={n} m={m} k={k} {prior}: edge {u}->{v} {p} vs {}",
                        matrix.get(u, v)
                    );
                }
            }
        }
    }
}

/// A feature whose required edges form a directed cycle has posterior
/// exactly zero: no DAG satisfies it.
#[test]
fn cyclic_required_edges_have_zero_posterior() {
    let ds = common::random_dataset(&mut common::rng(5), 3, 12, &[2]);
    let scores = build_score_tables(&ds, 2).unwrap();
    let cycle = FeatureSpec::edge(3, 0, 1)
        .unwrap()
        .require_edge(1, 2)
        .unwrap()
        .require_edge(2, 0)
        .unwrap();
    let p = feature_posterior(&scores, PriorKind::Uniform, &cycle, 2).unwrap();
    assert!(p.abs() < 1e-12, "cyclic feature got posterior {p}");
}

/// Forbidden-edge features complement required-edge features:
/// P(edge present) + P(edge absent) = 1.
#[test]
fn required_and_forbidden_edge_posteriors_are_complementary() {
    let ds = common::random_dataset(&mut common::rng(17), 4, 15, &[2, 3]);
    let scores = build_score_tables(&ds, 2).unwrap();
    for (u, v) in [(0usize, 1usize), (2, 3), (3, 0)] {
        let present = FeatureSpec::edge(4, u, v).unwrap();
        let absent = FeatureSpec::constant(4).forbid_edge(u, v).unwrap();
        let p = feature_posterior(&scores, PriorKind::Uniform, &present, 2).unwrap();
        let q = feature_posterior(&scores, PriorKind::Uniform, &absent, 2).unwrap();
        assert!((p + q - 1.0).abs() < 1e-10, "{u}->{v}: {p} + {q} != 1");
    }
}

/// At k = n-1 the bound is inactive: posteriors match the unrestricted
/// oracle on a small instance.
#[test]
fn full_bound_matches_unbounded_oracle() {
    let ds = common::random_dataset(&mut common::rng(99), 4, 18, &[2]);
    let scores = build_score_tables(&ds, 3).unwrap();
    let b = assemble_b(&scores, PriorKind::Uniform, &FeatureSpec::constant(4), 3).unwrap();
    let matrix = all_edge_posteriors(&b).unwrap();
    let reference = bnpost::oracle::oracle_edge_matrix(&ds, PriorKind::Uniform, 3).unwrap();
    for u in 0..4 {
        for v in 0..4 {
            assert!((matrix.get(u, v) - reference.get(u, v)).abs() < 1e-9);
        }
    }
}
