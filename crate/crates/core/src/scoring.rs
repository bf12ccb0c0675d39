//! Log-domain BDe local scores for all families within the indegree
//! bound, with the Dirichlet hyperparameters
//! `alpha_{x_i;pa_i} = 1 / (r_i * q_i)`.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::nodeset::{bounded_subsets_excluding, NodeSet};
use libm::lgamma;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// One scored family.
#[derive(Debug, Clone, Copy)]
pub struct ScoreEntry {
    pub parents: NodeSet,
    pub log_score: f64,
}

/// All local scores of one node, in canonical family order (ascending
/// cardinality, then ascending mask).
#[derive(Debug, Clone)]
pub struct LocalScoreTable {
    pub node: usize,
    pub max_indegree: usize,
    entries: Vec<ScoreEntry>,
}

impl LocalScoreTable {
    pub fn entries(&self) -> &[ScoreEntry] {
        &self.entries
    }

    /// Looks up a family by binary search over the canonical order.
    pub fn get(&self, parents: NodeSet) -> Option<f64> {
        let key = (parents.len(), parents.mask());
        self.entries
            .binary_search_by_key(&key, |e| (e.parents.len(), e.parents.mask()))
            .ok()
            .map(|idx| self.entries[idx].log_score)
    }
}

/// Natural-log BDe score of one family.
///
/// With `q` parent configurations, `alpha_ijk = 1/(r_i q)` and
/// `alpha_ij = 1/q`; the score is
/// `prod_j Γ(a_ij)/Γ(a_ij+N_ij) * prod_k Γ(a_ijk+N_ijk)/Γ(a_ijk)`.
/// Configurations never observed contribute a factor of exactly 1, so
/// only observed configurations are visited; with no data the score is
/// exactly 1 (log 0).
pub fn bde_log_score(ds: &Dataset, node: usize, parents: NodeSet) -> Result<f64> {
    if parents.contains(node) {
        return Err(Error::InvalidFamily(format!(
            "node {node} cannot be its own parent"
        )));
    }
    if node >= ds.n() || !parents.within(ds.n()) {
        return Err(Error::InvalidFamily(format!(
            "family ({node}, {parents}) out of range for n={}",
            ds.n()
        )));
    }
    let r = ds.arity(node) as usize;
    let parent_idx: Vec<usize> = parents.iter().collect();
    let q: f64 = parent_idx.iter().map(|&j| ds.arity(j) as f64).product();
    let alpha_ij = 1.0 / q;
    let alpha_ijk = alpha_ij / r as f64;

    // Parent-value tuples key the observed configurations; a BTreeMap
    // fixes the summation order so the result is bit-reproducible.
    let mut observed: BTreeMap<Vec<u32>, Vec<u64>> = BTreeMap::new();
    let mut key = vec![0u32; parent_idx.len()];
    for t in 0..ds.m() {
        for (slot, &j) in parent_idx.iter().enumerate() {
            key[slot] = ds.value(t, j);
        }
        observed.entry(key.clone()).or_insert_with(|| vec![0; r])[ds.value(t, node) as usize] += 1;
    }

    let lg_alpha_ij = lgamma(alpha_ij);
    let lg_alpha_ijk = lgamma(alpha_ijk);
    let mut acc = 0.0;
    for counts in observed.values() {
        let n_ij: u64 = counts.iter().sum();
        acc += lg_alpha_ij - lgamma(alpha_ij + n_ij as f64);
        for &n_ijk in counts {
            if n_ijk > 0 {
                acc += lgamma(alpha_ijk + n_ijk as f64) - lg_alpha_ijk;
            }
        }
    }
    Ok(acc)
}

/// Scores every family `|Pa_i| <= k` for every node.
///
/// Nodes are scored in parallel; each entry is a pure function of the
/// dataset, so the table content does not depend on thread count.
pub fn build_score_tables(ds: &Dataset, k: usize) -> Result<Vec<LocalScoreTable>> {
    let n = ds.n();
    if n == 0 || k > n - 1 {
        return Err(Error::ConfigError(format!(
            "indegree bound k={k} out of range 0..={}",
            n.saturating_sub(1)
        )));
    }
    (0..n)
        .into_par_iter()
        .map(|node| {
            let entries = bounded_subsets_excluding(n, node, k)
                .into_iter()
                .map(|parents| {
                    Ok(ScoreEntry {
                        parents,
                        log_score: bde_log_score(ds, node, parents)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(LocalScoreTable {
                node,
                max_indegree: k,
                entries,
            })
        })
        .collect()
}

// ---------------------------------------------------------------------
// Score-table cache
// ---------------------------------------------------------------------

#[derive(Serialize, Deserialize)]
struct CachedEntry {
    parents: u32,
    log_score: f64,
}

#[derive(Serialize, Deserialize)]
struct CachedTable {
    node: usize,
    entries: Vec<CachedEntry>,
}

/// On-disk score cache keyed by a dataset fingerprint.
#[derive(Serialize, Deserialize)]
pub struct ScoreCache {
    pub n: usize,
    pub k: usize,
    pub dataset_fingerprint: String,
    tables: Vec<CachedTable>,
}

impl ScoreCache {
    pub fn from_tables(ds: &Dataset, k: usize, tables: &[LocalScoreTable]) -> ScoreCache {
        ScoreCache {
            n: ds.n(),
            k,
            dataset_fingerprint: ds.fingerprint(),
            tables: tables
                .iter()
                .map(|t| CachedTable {
                    node: t.node,
                    entries: t
                        .entries
                        .iter()
                        .map(|e| CachedEntry {
                            parents: e.parents.mask(),
                            log_score: e.log_score,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Restores score tables when the cache matches this dataset and
    /// bound; returns `None` on any mismatch so callers recompute.
    pub fn restore(&self, ds: &Dataset, k: usize) -> Option<Vec<LocalScoreTable>> {
        if self.n != ds.n() || self.k != k || self.dataset_fingerprint != ds.fingerprint() {
            return None;
        }
        if self.tables.len() != self.n {
            return None;
        }
        let mut out = Vec::with_capacity(self.n);
        for (node, cached) in self.tables.iter().enumerate() {
            if cached.node != node {
                return None;
            }
            let expected = bounded_subsets_excluding(self.n, node, k);
            if cached.entries.len() != expected.len() {
                return None;
            }
            let entries: Vec<ScoreEntry> = cached
                .entries
                .iter()
                .zip(&expected)
                .map(|(e, &parents)| {
                    (e.parents == parents.mask()).then_some(ScoreEntry {
                        parents,
                        log_score: e.log_score,
                    })
                })
                .collect::<Option<_>>()?;
            out.push(LocalScoreTable {
                node,
                max_indegree: k,
                entries,
            });
        }
        Some(out)
    }
}
