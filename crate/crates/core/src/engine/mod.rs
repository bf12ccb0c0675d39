//! The posterior engine: assembles the DP tables and produces exact
//! feature and edge posteriors.
//!
//! Two independent recursions compute the same joint probability, one
//! over root nodes (`RR`) and one over sink nodes (`H`). Their top
//! entries must agree on every invocation; a relative gap beyond 1e-6
//! aborts the run instead of emitting corrupted posteriors.

mod tables;

pub use tables::{compute_gamma, compute_h, compute_k, compute_rr, upward_mobius};

use crate::error::{Error, Result};
use crate::model::{assemble_b, Bfunction, FeatureSpec, PriorKind};
use crate::nodeset::{drop_bit, insert_bit, MAX_VARS};
use crate::scoring::LocalScoreTable;
use crate::sum::KahanSum;
use rayon::prelude::*;
use std::io::Write;

/// Relative RR/H disagreement beyond which results are withheld.
pub const BREAKDOWN_GAP: f64 = 1e-6;

/// The dense full-space tables shared by every posterior query.
pub struct DpTables {
    pub n: usize,
    /// `a[i]` is `A_i` over subsets of `V \ {i}`, compressed indexing.
    pub a: Vec<Vec<f64>>,
    pub rr: Vec<f64>,
    pub h: Vec<f64>,
}

impl DpTables {
    pub fn rr_full(&self) -> f64 {
        self.rr[(1usize << self.n) - 1]
    }

    pub fn h_full(&self) -> f64 {
        self.h[(1usize << self.n) - 1]
    }
}

/// Health metrics from the redundant computations.
#[derive(Debug, Clone, Copy, Default)]
pub struct Diagnostics {
    /// `|RR(V) - H(V)| / RR(V)`
    pub rr_h_relative_gap: f64,
    /// worst per-sink deviation of the ancestor-split identity from `RR(V)`
    pub prop3_max_relative_gap: f64,
}

/// Exact posteriors of all `n(n-1)` directed edges plus the log
/// evidence, `(u, v)` meaning `P(u -> v | D)`.
#[derive(Debug, Clone)]
pub struct PosteriorMatrix {
    pub n: usize,
    edges: Vec<f64>,
    pub log_evidence: f64,
    pub diagnostics: Diagnostics,
}

impl PosteriorMatrix {
    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.edges[u * self.n + v]
    }

    /// Rows indexed by source, columns by target.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|u| self.edges[u * self.n..(u + 1) * self.n].to_vec())
            .collect()
    }
}

pub fn ensure_within_cap(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::ConfigError("need at least one variable".into()));
    }
    if n > MAX_VARS {
        return Err(Error::ConfigError(format!(
            "n={n} exceeds the {MAX_VARS}-variable cap; the dense tables alone would need ~{} GiB",
            estimated_table_bytes(n) >> 30
        )));
    }
    Ok(())
}

/// Upfront estimate of the dense table footprint: `A` is `n 2^(n-1)`
/// doubles, `RR` and `H` are `2^n` each, and the per-sink scratch adds a
/// few more `2^(n-1)` arrays.
pub fn estimated_table_bytes(n: usize) -> u64 {
    let half = 1u64 << (n - 1);
    8 * (n as u64 * half + 4 * half * 2)
}

/// Runs stages A, RR, H for an assembled `B`.
pub fn build_tables(b: &Bfunction) -> Result<DpTables> {
    let n = b.n();
    ensure_within_cap(n)?;
    let a: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| upward_mobius(n, i, b.families(i)))
        .collect();
    let rr = compute_rr(n, &a);
    let h = compute_h(n, &a);
    Ok(DpTables { n, a, rr, h })
}

fn certify(rr_full: f64, h_full: f64) -> Result<f64> {
    if !rr_full.is_finite() || !h_full.is_finite() || rr_full <= 0.0 {
        return Err(Error::NumericalBreakdown(format!(
            "RR(V)={rr_full}, H(V)={h_full}; joint probability must be finite and positive"
        )));
    }
    let gap = (rr_full - h_full).abs() / rr_full;
    if gap > BREAKDOWN_GAP {
        return Err(Error::NumericalBreakdown(format!(
            "RR(V)={rr_full} and H(V)={h_full} disagree by relative {gap:.3e} (limit {BREAKDOWN_GAP:.0e})"
        )));
    }
    Ok(gap)
}

/// Figure-of-merit pipeline for all edges: per sink `v`, compute `K_v`
/// and `Γ_v`, fold `sum_{Pa_v ∋ u} B_v(Pa_v) Γ_v(Pa_v)` into column `v`,
/// and release the per-sink tables. Peak memory stays `O(n 2^n)`.
pub fn edge_posteriors_from_tables(b: &Bfunction, t: &DpTables) -> Result<PosteriorMatrix> {
    let n = b.n();
    let rr_full = t.rr_full();
    let gap = certify(rr_full, t.h_full())?;

    let columns: Vec<(Vec<f64>, f64)> = (0..n)
        .into_par_iter()
        .map(|v| {
            let kv = compute_k(n, v, &t.rr, &t.a);
            let mut check = KahanSum::new();
            for uc in 0..1usize << (n - 1) {
                check.add(t.a[v][uc] * t.h[insert_bit(uc, v) as usize] * kv[uc]);
            }
            let prop3_gap = (check.value() - rr_full).abs() / rr_full;
            let gamma = compute_gamma(n, v, &t.h, &kv);
            let mut column = vec![0.0; n];
            for &(parents, bval) in b.families(v) {
                if bval == 0.0 {
                    continue;
                }
                let weight = bval * gamma[drop_bit(parents.mask(), v)];
                for u in parents.iter() {
                    column[u] += weight;
                }
            }
            for value in &mut column {
                *value /= rr_full;
            }
            (column, prop3_gap)
        })
        .collect();

    let mut edges = vec![0.0; n * n];
    let mut prop3_max: f64 = 0.0;
    for (v, (column, p3)) in columns.into_iter().enumerate() {
        prop3_max = prop3_max.max(p3);
        for (u, value) in column.into_iter().enumerate() {
            if u != v {
                edges[u * n + v] = value;
            }
        }
    }

    Ok(PosteriorMatrix {
        n,
        edges,
        log_evidence: rr_full.ln() + b.shift_sum(),
        diagnostics: Diagnostics {
            rr_h_relative_gap: gap,
            prop3_max_relative_gap: prop3_max,
        },
    })
}

/// Posteriors of all `n(n-1)` edges under the constant feature.
pub fn all_edge_posteriors(b: &Bfunction) -> Result<PosteriorMatrix> {
    let t = build_tables(b)?;
    edge_posteriors_from_tables(b, &t)
}

/// Result of a single-feature query.
#[derive(Debug, Clone, Copy)]
pub struct FeatureOutcome {
    pub posterior: f64,
    pub log_evidence: f64,
    pub rr_h_relative_gap: f64,
}

/// Exact posterior of a modular feature: `RR_f(V) / RR_1(V)` with both
/// assemblies sharing the same per-node shifts, so every shift cancels
/// in the ratio.
pub fn feature_posterior_full(
    scores: &[LocalScoreTable],
    prior: PriorKind,
    feature: &FeatureSpec,
    k: usize,
) -> Result<FeatureOutcome> {
    let n = scores.len();
    ensure_within_cap(n)?;
    let b_const = assemble_b(scores, prior, &FeatureSpec::constant(n), k)?;
    let t_const = build_tables(&b_const)?;
    let rr_one = t_const.rr_full();
    let gap_one = certify(rr_one, t_const.h_full())?;

    let b_feat = assemble_b(scores, prior, feature, k)?;
    let t_feat = build_tables(&b_feat)?;
    let rr_feat = t_feat.rr_full();
    let h_feat = t_feat.h_full();
    if !rr_feat.is_finite() || !h_feat.is_finite() {
        return Err(Error::NumericalBreakdown(format!(
            "feature run produced RR(V)={rr_feat}, H(V)={h_feat}"
        )));
    }
    // The feature-restricted sum can legitimately be zero, so its RR/H
    // agreement is measured on the evidence scale rather than its own.
    let gap_feat = (rr_feat - h_feat).abs() / rr_one;
    if gap_feat > BREAKDOWN_GAP {
        return Err(Error::NumericalBreakdown(format!(
            "feature run RR(V)={rr_feat} and H(V)={h_feat} disagree by {gap_feat:.3e} of the evidence"
        )));
    }

    Ok(FeatureOutcome {
        posterior: rr_feat / rr_one,
        log_evidence: rr_one.ln() + b_const.shift_sum(),
        rr_h_relative_gap: gap_one.max(gap_feat),
    })
}

/// Exact posterior probability of a modular feature.
pub fn feature_posterior(
    scores: &[LocalScoreTable],
    prior: PriorKind,
    feature: &FeatureSpec,
    k: usize,
) -> Result<f64> {
    feature_posterior_full(scores, prior, feature, k).map(|o| o.posterior)
}

/// Log evidence under the constant feature.
#[derive(Debug, Clone, Copy)]
pub struct EvidenceOutcome {
    pub log_evidence: f64,
    pub rr_h_relative_gap: f64,
}

pub fn evidence(scores: &[LocalScoreTable], prior: PriorKind, k: usize) -> Result<EvidenceOutcome> {
    let n = scores.len();
    ensure_within_cap(n)?;
    let b = assemble_b(scores, prior, &FeatureSpec::constant(n), k)?;
    let t = build_tables(&b)?;
    let gap = certify(t.rr_full(), t.h_full())?;
    Ok(EvidenceOutcome {
        log_evidence: t.rr_full().ln() + b.shift_sum(),
        rr_h_relative_gap: gap,
    })
}

/// Table identifiers for the debug dump format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableId {
    Rr = 0,
    H = 1,
}

/// Writes one full-space table as flat binary: header `{n, k, table-id}`
/// as little-endian u32, then `2^n` little-endian f64 in mask order.
pub fn dump_table(
    mut w: impl Write,
    n: usize,
    k: usize,
    id: TableId,
    values: &[f64],
) -> std::io::Result<()> {
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(k as u32).to_le_bytes())?;
    w.write_all(&(id as u32).to_le_bytes())?;
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}
