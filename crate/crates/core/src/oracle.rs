//! Brute-force ground truth: exhaustive DAG enumeration with direct
//! summation of the joint, for certifying the DP engine.
//!
//! The enumeration assigns a parent set to each node in turn and prunes
//! prefixes whose induced subgraph already has a cycle, so its structure
//! shares nothing with the engine's subset-lattice recursions.

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::model::{FeatureSpec, PriorKind};
use crate::nodeset::{drop_bit, NodeSet};
use crate::scoring::bde_log_score;
use crate::sum::KahanSum;
use rayon::prelude::*;

/// Largest variable count enumerated exhaustively (3 781 503 DAGs).
pub const ENUMERATION_CAP: usize = 6;

/// Largest variable count for the Robinson recurrence cross-check.
pub const ROBINSON_CAP: usize = 8;

/// Exhaustive, duplicate-free enumeration of DAGs over `n` nodes with an
/// optional indegree bound, each DAG a vector of parent sets.
pub struct DagEnumeration {
    n: usize,
    candidates: Vec<Vec<NodeSet>>,
}

impl DagEnumeration {
    pub fn new(n: usize, max_indegree: Option<usize>) -> Result<DagEnumeration> {
        if n == 0 || n > ENUMERATION_CAP {
            return Err(Error::CapExceeded(format!(
                "DAG enumeration supports 1..={ENUMERATION_CAP} variables, requested {n}"
            )));
        }
        let k = max_indegree.unwrap_or(n - 1).min(n - 1);
        let candidates = (0..n)
            .map(|i| crate::nodeset::bounded_subsets_excluding(n, i, k))
            .collect();
        Ok(DagEnumeration { n, candidates })
    }

    /// Visits every DAG once, in a fixed order.
    pub fn for_each(&self, mut visit: impl FnMut(&[NodeSet])) {
        let mut parents = vec![NodeSet::EMPTY; self.n];
        for &first in &self.candidates[0] {
            parents[0] = first;
            self.recurse(1, &mut parents, &mut visit);
        }
    }

    fn recurse(&self, depth: usize, parents: &mut Vec<NodeSet>, visit: &mut impl FnMut(&[NodeSet])) {
        if !prefix_acyclic(parents, depth - 1) {
            return;
        }
        if depth == self.n {
            visit(parents);
            return;
        }
        for &p in &self.candidates[depth] {
            parents[depth] = p;
            self.recurse(depth + 1, parents, visit);
        }
    }

    /// Splits the enumeration by the first node's parent set and folds
    /// each chunk independently. Chunk boundaries depend only on the
    /// instance, so any later order-sensitive combination of the chunk
    /// results is thread-count independent.
    pub fn par_chunk_fold<T: Send + Sync>(
        &self,
        make: impl Fn() -> T + Send + Sync,
        fold: impl Fn(&mut T, &[NodeSet]) + Send + Sync,
    ) -> Vec<T> {
        self.candidates[0]
            .par_iter()
            .map(|&first| {
                let mut acc = make();
                let mut parents = vec![NodeSet::EMPTY; self.n];
                parents[0] = first;
                self.recurse(1, &mut parents, &mut |dag| fold(&mut acc, dag));
                acc
            })
            .collect()
    }

    pub fn count(&self) -> u64 {
        let counts = self.par_chunk_fold(|| 0u64, |acc, _| *acc += 1);
        counts.into_iter().sum()
    }
}

/// Kahn's topological sort on the subgraph induced by nodes `0..=upto`;
/// edges from still-unassigned nodes are ignored.
fn prefix_acyclic(parents: &[NodeSet], upto: usize) -> bool {
    let assigned = NodeSet::full(upto + 1).mask();
    let mut alive = assigned;
    while alive != 0 {
        let mut removed = 0u32;
        let mut m = alive;
        while m != 0 {
            let w = m.trailing_zeros() as usize;
            m &= m - 1;
            if parents[w].mask() & alive == 0 {
                removed |= 1 << w;
            }
        }
        if removed == 0 {
            return false;
        }
        alive &= !removed;
    }
    true
}

/// Exact DAG count by exhaustive enumeration (`n <= 6`).
pub fn count_dags(n: usize, max_indegree: Option<usize>) -> Result<u64> {
    Ok(DagEnumeration::new(n, max_indegree)?.count())
}

/// Labeled-DAG count by the classical alternating recurrence
/// `a(n) = sum_j (-1)^(j+1) C(n,j) 2^(j(n-j)) a(n-j)`, exact up to
/// `n = 8`. Independent of the enumeration above.
pub fn robinson_dag_count(n: usize) -> Result<u64> {
    if n > ROBINSON_CAP {
        return Err(Error::CapExceeded(format!(
            "Robinson recurrence supported up to n={ROBINSON_CAP}, requested {n}"
        )));
    }
    let mut a = vec![1i128; n + 1];
    for m in 1..=n {
        let mut sum: i128 = 0;
        for j in 1..=m {
            let mut choose: i128 = 1;
            for i in 0..j {
                choose = choose * (m - i) as i128 / (i + 1) as i128;
            }
            let term = choose * (1i128 << (j * (m - j))) * a[m - j];
            if j % 2 == 1 {
                sum += term;
            } else {
                sum -= term;
            }
        }
        a[m] = sum;
    }
    Ok(a[n] as u64)
}

/// Per-node log weights `log Q_i(Pa_i) + log score_i(Pa_i)` over the
/// compressed parent-set space, `-inf` beyond the bound.
fn log_weight_tables(ds: &Dataset, prior: PriorKind, k: usize) -> Result<Vec<Vec<f64>>> {
    let n = ds.n();
    let mut tables = Vec::with_capacity(n);
    for i in 0..n {
        let mut t = vec![f64::NEG_INFINITY; 1usize << (n - 1)];
        for parents in crate::nodeset::bounded_subsets_excluding(n, i, k) {
            t[drop_bit(parents.mask(), i)] =
                prior.log_q(n, parents.len()) + bde_log_score(ds, i, parents)?;
        }
        tables.push(t);
    }
    Ok(tables)
}

fn dag_log_weight(lw: &[Vec<f64>], dag: &[NodeSet]) -> f64 {
    dag.iter()
        .enumerate()
        .map(|(i, p)| lw[i][drop_bit(p.mask(), i)])
        .sum()
}

/// Exact feature posterior by direct summation over every DAG:
/// `sum_G f(G) P(D|G) P(G) / sum_G P(D|G) P(G)`, evaluated with a
/// global max-shift in two passes so the reduction is exact in shape
/// and thread-count independent.
pub fn oracle_posterior(
    ds: &Dataset,
    feature: &FeatureSpec,
    prior: PriorKind,
    k: usize,
) -> Result<f64> {
    let enumeration = DagEnumeration::new(ds.n(), Some(k))?;
    let lw = log_weight_tables(ds, prior, k)?;

    let max_lw = enumeration
        .par_chunk_fold(
            || f64::NEG_INFINITY,
            |m, dag| *m = m.max(dag_log_weight(&lw, dag)),
        )
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);

    let chunks = enumeration.par_chunk_fold(
        || (KahanSum::new(), KahanSum::new()),
        |(den, num), dag| {
            let w = (dag_log_weight(&lw, dag) - max_lw).exp();
            den.add(w);
            if dag
                .iter()
                .enumerate()
                .all(|(i, &p)| feature.allows(i, p))
            {
                num.add(w);
            }
        },
    );
    let mut den = KahanSum::new();
    let mut num = KahanSum::new();
    for (d, n) in chunks {
        den.add(d.value());
        num.add(n.value());
    }
    Ok(num.value() / den.value())
}

/// Ground-truth posteriors of all edges plus the log evidence, from the
/// same enumeration pass.
pub struct OracleMatrix {
    pub n: usize,
    pub edges: Vec<f64>,
    pub log_evidence: f64,
}

impl OracleMatrix {
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.edges[u * self.n + v]
    }
}

pub fn oracle_edge_matrix(ds: &Dataset, prior: PriorKind, k: usize) -> Result<OracleMatrix> {
    let n = ds.n();
    let enumeration = DagEnumeration::new(n, Some(k))?;
    let lw = log_weight_tables(ds, prior, k)?;

    let max_lw = enumeration
        .par_chunk_fold(
            || f64::NEG_INFINITY,
            |m, dag| *m = m.max(dag_log_weight(&lw, dag)),
        )
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);

    let chunks = enumeration.par_chunk_fold(
        || (KahanSum::new(), vec![KahanSum::new(); n * n]),
        |(den, num), dag| {
            let w = (dag_log_weight(&lw, dag) - max_lw).exp();
            den.add(w);
            for (v, p) in dag.iter().enumerate() {
                for u in p.iter() {
                    num[u * n + v].add(w);
                }
            }
        },
    );
    let mut den = KahanSum::new();
    let mut num = vec![KahanSum::new(); n * n];
    for (d, nums) in chunks {
        den.add(d.value());
        for (slot, chunk_sum) in num.iter_mut().zip(nums) {
            slot.add(chunk_sum.value());
        }
    }
    let total = den.value();
    Ok(OracleMatrix {
        n,
        edges: num.into_iter().map(|s| s.value() / total).collect(),
        log_evidence: max_lw + total.ln(),
    })
}
