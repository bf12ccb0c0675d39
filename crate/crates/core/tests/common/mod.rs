//! Shared synthetic-data generators for the integration suites.
#![allow(dead_code)] // each test binary uses a different subset

use bnpost::dataset::Dataset;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform random categorical dataset with arities drawn from `choices`.
pub fn random_dataset(rng: &mut ChaCha8Rng, n: usize, m: usize, choices: &[u32]) -> Dataset {
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let arities: Vec<u32> = (0..n).map(|_| *choices.choose(rng).unwrap()).collect();
    let rows: Vec<Vec<u32>> = (0..m)
        .map(|_| arities.iter().map(|&r| rng.gen_range(0..r)).collect())
        .collect();
    Dataset::from_parts(names, arities, &rows).unwrap()
}

/// Dataset sampled from a random ground-truth network over the node
/// order `0..n` with indegree at most `true_indegree`, so the columns
/// carry real dependence structure.
pub fn bn_dataset(
    rng: &mut ChaCha8Rng,
    n: usize,
    m: usize,
    arity: u32,
    true_indegree: usize,
) -> Dataset {
    let names: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
    let arities = vec![arity; n];

    // parents of node i drawn from 0..i, biased toward the full budget
    // so truncating the indegree genuinely loses structure
    let parents: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let count = true_indegree.min(i);
            let mut pool: Vec<usize> = (0..i).collect();
            pool.shuffle(rng);
            let take = if count == 0 {
                0
            } else {
                rng.gen_range((count / 2).max(1)..=count)
            };
            pool.into_iter().take(take).collect()
        })
        .collect();

    // additive-logit conditionals: every parent contributes its own
    // signal, so parent subsets carry partial information and truncating
    // the indegree loses structure gradually instead of all at once;
    // effect sizes are moderate so the shifted lattice stays inside the
    // double-precision envelope (see model::Bfunction)
    let effects: Vec<Vec<Vec<Vec<f64>>>> = (0..n)
        .map(|i| {
            parents[i]
                .iter()
                .map(|_| {
                    (0..arity)
                        .map(|_| (0..arity).map(|_| rng.gen_range(-1.2..1.2f64)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    let bias: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..arity).map(|_| rng.gen_range(-0.5..0.5f64)).collect())
        .collect();

    let rows: Vec<Vec<u32>> = (0..m)
        .map(|_| {
            let mut row = vec![0u32; n];
            for i in 0..n {
                let logits: Vec<f64> = (0..arity as usize)
                    .map(|c| {
                        let mut z = bias[i][c];
                        for (slot, &p) in parents[i].iter().enumerate() {
                            z += effects[i][slot][row[p] as usize][c];
                        }
                        z
                    })
                    .collect();
                row[i] = softmax_draw(rng, &logits);
            }
            row
        })
        .collect();
    Dataset::from_parts(names, arities, &rows).unwrap()
}

fn softmax_draw(rng: &mut ChaCha8Rng, logits: &[f64]) -> u32 {
    let zmax = logits.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let weights: Vec<f64> = logits.iter().map(|z| (z - zmax).exp()).collect();
    let total: f64 = weights.iter().sum();
    let draw: f64 = rng.gen_range(0.0..total);
    let mut acc = 0.0;
    for (c, &w) in weights.iter().enumerate() {
        acc += w;
        if draw < acc {
            return c as u32;
        }
    }
    (logits.len() - 1) as u32
}

/// Board-and-outcome shaped dataset: nine weakly coupled ternary "cell"
/// columns and one "class" column driven additively by every cell, with
/// effect sizes that taper off cell by cell. Low-order truncations of
/// the class family then lose structure gradually, while the overall
/// dependence stays mild enough for the shifted lattice.
pub fn board_game_dataset(rng: &mut ChaCha8Rng, m: usize) -> Dataset {
    let n = 10usize;
    let arity = 3u32;
    let names: Vec<String> = (0..9).map(|i| format!("C{i}")).chain(["CLASS".into()]).collect();

    // cells: at most two weak parents among earlier cells
    let cell_parents: Vec<Vec<usize>> = (0..9)
        .map(|i| {
            let mut pool: Vec<usize> = (0..i).collect();
            pool.shuffle(rng);
            pool.into_iter().take(2.min(i)).collect()
        })
        .collect();
    let cell_effects: Vec<Vec<Vec<Vec<f64>>>> = (0..9)
        .map(|i| {
            cell_parents[i]
                .iter()
                .map(|_| {
                    (0..arity)
                        .map(|_| (0..arity).map(|_| rng.gen_range(-0.25..0.25f64)).collect())
                        .collect()
                })
                .collect()
        })
        .collect();
    // class: driven by all nine cells with tapering strengths
    let taper = [0.9, 0.9, 0.9, 0.55, 0.2, 0.15, 0.12, 0.1, 0.08];
    let class_effects: Vec<Vec<Vec<f64>>> = taper
        .iter()
        .map(|&s| {
            (0..arity)
                .map(|_| (0..arity).map(|_| rng.gen_range(-s..s)).collect())
                .collect()
        })
        .collect();

    let rows: Vec<Vec<u32>> = (0..m)
        .map(|_| {
            let mut row = vec![0u32; n];
            for i in 0..9 {
                let logits: Vec<f64> = (0..arity as usize)
                    .map(|c| {
                        let mut z = 0.0;
                        for (slot, &p) in cell_parents[i].iter().enumerate() {
                            z += cell_effects[i][slot][row[p] as usize][c];
                        }
                        z
                    })
                    .collect();
                row[i] = softmax_draw(rng, &logits);
            }
            let logits: Vec<f64> = (0..arity as usize)
                .map(|c| (0..9).map(|p| class_effects[p][row[p] as usize][c]).sum())
                .collect();
            row[9] = softmax_draw(rng, &logits);
            row
        })
        .collect();
    Dataset::from_parts(names, vec![arity; n], &rows).unwrap()
}
