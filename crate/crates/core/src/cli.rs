//! Command-line front end: ingestion, engine/oracle runs, JSON result
//! files, and scatter-data diffs between result files.

use crate::dataset::{parse_arity_sidecar, Dataset};
use crate::engine::{self, TableId};
use crate::error::{Error, Result};
use crate::model::{assemble_b, FeatureSpec, PriorKind};
use crate::oracle;
use crate::scoring::{build_score_tables, LocalScoreTable, ScoreCache};
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Exit codes: 0 ok, 2 input error, 3 numerical breakdown, 4 cap exceeded.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::NumericalBreakdown(_) => 3,
        Error::CapExceeded(_) => 4,
        _ => 2,
    }
}

/// Options shared by the dataset-consuming subcommands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub data_path: PathBuf,
    pub arities_path: Option<PathBuf>,
    pub max_indegree: Option<usize>,
    pub prior: PriorKind,
    pub feature_path: Option<PathBuf>,
    pub out_path: Option<PathBuf>,
    pub threads: Option<usize>,
    pub dump_tables: bool,
    pub score_cache: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RuntimeSeconds {
    pub scores: f64,
    pub engine: f64,
    pub total: f64,
}

/// The machine-readable result schema shared by `edges`, `feature`,
/// `evidence`, and `oracle`. The edge matrix is row=source,
/// column=target, in `variables` order. `log_evidence` reports
/// `log RR(V) + sum_i c_i` as-is; under the unnormalized uniform prior
/// `P(G) = 1` this is the unnormalized evidence, and the constant
/// cancels in every posterior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultFile {
    pub variables: Vec<String>,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    pub prior: String,
    pub log_evidence: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub edges: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_posterior: Option<f64>,
    pub runtime_seconds: RuntimeSeconds,
    pub rr_h_relative_gap: f64,
}

impl ResultFile {
    pub fn write_to(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        fs::write(path, json)?;
        Ok(())
    }

    pub fn read_from(path: &Path) -> Result<ResultFile> {
        let text = fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn load_dataset(opts: &RunOptions) -> Result<Dataset> {
    let text = fs::read_to_string(&opts.data_path)?;
    let declared = match &opts.arities_path {
        Some(p) => Some(parse_arity_sidecar(&fs::read_to_string(p)?)?),
        None => None,
    };
    Dataset::from_csv(&text, declared.as_ref())
}

/// Applies the documented default `k = min(n-1, 5)` when the bound is
/// omitted, warning on stderr, and validates an explicit bound.
fn resolve_indegree(opts: &RunOptions, n: usize) -> Result<usize> {
    match opts.max_indegree {
        Some(k) if k <= n.saturating_sub(1) => Ok(k),
        Some(k) => Err(Error::ConfigError(format!(
            "--max-indegree {k} out of range 0..={} for n={n}",
            n.saturating_sub(1)
        ))),
        None => {
            let k = n.saturating_sub(1).min(5);
            eprintln!("warning: --max-indegree not given, defaulting to k={k}");
            Ok(k)
        }
    }
}

/// Builds score tables, consulting and refreshing the cache file when
/// one is configured.
fn scores_with_cache(opts: &RunOptions, ds: &Dataset, k: usize) -> Result<Vec<LocalScoreTable>> {
    if let Some(cache_path) = &opts.score_cache {
        if let Ok(text) = fs::read_to_string(cache_path) {
            if let Ok(cache) = serde_json::from_str::<ScoreCache>(&text) {
                if let Some(tables) = cache.restore(ds, k) {
                    return Ok(tables);
                }
            }
        }
        let tables = build_score_tables(ds, k)?;
        let cache = ScoreCache::from_tables(ds, k, &tables);
        fs::write(cache_path, serde_json::to_string(&cache)?)?;
        return Ok(tables);
    }
    build_score_tables(ds, k)
}

fn in_pool<T: Send>(threads: Option<usize>, job: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| Error::ConfigError(format!("thread pool: {e}")))?
            .install(job),
        None => job(),
    }
}

fn print_edge_summary(names: &[String], edges: &[Vec<f64>], log_evidence: f64) {
    println!("log evidence: {log_evidence:.6}");
    let n = names.len();
    let mut ranked: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v)))
        .map(|(u, v)| (u, v, edges[u][v]))
        .collect();
    ranked.sort_by(|a, b| b.2.partial_cmp(&a.2).unwrap().then((a.0, a.1).cmp(&(b.0, b.1))));
    println!("top edges by posterior:");
    for (u, v, p) in ranked.into_iter().take(10) {
        println!("  {} -> {}  {p:.6}", names[u], names[v]);
    }
}

fn dump_sibling(out: &Option<PathBuf>, suffix: &str) -> PathBuf {
    match out {
        Some(p) => {
            let stem = p
                .file_stem()
                .map(|s| s.to_string_lossy().to_string())
                .unwrap_or_else(|| "tables".into());
            p.with_file_name(format!("{stem}.{suffix}"))
        }
        None => PathBuf::from(format!("tables.{suffix}")),
    }
}

/// Posteriors of all edges (Figure-of-merit subcommand).
pub fn run_edges(opts: &RunOptions) -> Result<ResultFile> {
    let total0 = Instant::now();
    let ds = load_dataset(opts)?;
    let k = resolve_indegree(opts, ds.n())?;
    let (scores_time, matrix, engine_time) = in_pool(opts.threads, || {
        let s0 = Instant::now();
        let scores = scores_with_cache(opts, &ds, k)?;
        let scores_time = s0.elapsed().as_secs_f64();

        let e0 = Instant::now();
        let b = assemble_b(&scores, opts.prior, &FeatureSpec::constant(ds.n()), k)?;
        let matrix = if opts.dump_tables {
            let tables = engine::build_tables(&b)?;
            let rr_path = dump_sibling(&opts.out_path, "rr.bin");
            let h_path = dump_sibling(&opts.out_path, "h.bin");
            engine::dump_table(fs::File::create(&rr_path)?, ds.n(), k, TableId::Rr, &tables.rr)?;
            engine::dump_table(fs::File::create(&h_path)?, ds.n(), k, TableId::H, &tables.h)?;
            engine::edge_posteriors_from_tables(&b, &tables)?
        } else {
            engine::all_edge_posteriors(&b)?
        };
        Ok((scores_time, matrix, e0.elapsed().as_secs_f64()))
    })?;

    let result = ResultFile {
        variables: ds.names().to_vec(),
        n: ds.n(),
        m: ds.m(),
        k,
        prior: opts.prior.to_string(),
        log_evidence: matrix.log_evidence,
        edges: Some(matrix.rows()),
        feature_posterior: None,
        runtime_seconds: RuntimeSeconds {
            scores: scores_time,
            engine: engine_time,
            total: total0.elapsed().as_secs_f64(),
        },
        rr_h_relative_gap: matrix.diagnostics.rr_h_relative_gap,
    };
    if let Some(out) = &opts.out_path {
        result.write_to(out)?;
    }
    print_edge_summary(
        &result.variables,
        result.edges.as_ref().unwrap(),
        result.log_evidence,
    );
    Ok(result)
}

/// Posterior of the modular feature described by the feature file.
pub fn run_feature(opts: &RunOptions) -> Result<ResultFile> {
    let total0 = Instant::now();
    let ds = load_dataset(opts)?;
    let k = resolve_indegree(opts, ds.n())?;
    let feature_path = opts
        .feature_path
        .as_ref()
        .ok_or_else(|| Error::ConfigError("feature command requires --feature PATH".into()))?;
    let feature = FeatureSpec::from_json(&fs::read_to_string(feature_path)?, ds.names())?;
    let (scores_time, outcome, engine_time) = in_pool(opts.threads, || {
        let s0 = Instant::now();
        let scores = scores_with_cache(opts, &ds, k)?;
        let scores_time = s0.elapsed().as_secs_f64();
        let e0 = Instant::now();
        let outcome = engine::feature_posterior_full(&scores, opts.prior, &feature, k)?;
        Ok((scores_time, outcome, e0.elapsed().as_secs_f64()))
    })?;

    let result = ResultFile {
        variables: ds.names().to_vec(),
        n: ds.n(),
        m: ds.m(),
        k,
        prior: opts.prior.to_string(),
        log_evidence: outcome.log_evidence,
        edges: None,
        feature_posterior: Some(outcome.posterior),
        runtime_seconds: RuntimeSeconds {
            scores: scores_time,
            engine: engine_time,
            total: total0.elapsed().as_secs_f64(),
        },
        rr_h_relative_gap: outcome.rr_h_relative_gap,
    };
    if let Some(out) = &opts.out_path {
        result.write_to(out)?;
    }
    println!("feature posterior: {:.10}", outcome.posterior);
    println!("log evidence: {:.6}", outcome.log_evidence);
    Ok(result)
}

/// Log evidence only.
pub fn run_evidence(opts: &RunOptions) -> Result<ResultFile> {
    let total0 = Instant::now();
    let ds = load_dataset(opts)?;
    let k = resolve_indegree(opts, ds.n())?;
    let (scores_time, outcome, engine_time) = in_pool(opts.threads, || {
        let s0 = Instant::now();
        let scores = scores_with_cache(opts, &ds, k)?;
        let scores_time = s0.elapsed().as_secs_f64();
        let e0 = Instant::now();
        let outcome = engine::evidence(&scores, opts.prior, k)?;
        Ok((scores_time, outcome, e0.elapsed().as_secs_f64()))
    })?;

    let result = ResultFile {
        variables: ds.names().to_vec(),
        n: ds.n(),
        m: ds.m(),
        k,
        prior: opts.prior.to_string(),
        log_evidence: outcome.log_evidence,
        edges: None,
        feature_posterior: None,
        runtime_seconds: RuntimeSeconds {
            scores: scores_time,
            engine: engine_time,
            total: total0.elapsed().as_secs_f64(),
        },
        rr_h_relative_gap: outcome.rr_h_relative_gap,
    };
    if let Some(out) = &opts.out_path {
        result.write_to(out)?;
    }
    println!("log evidence: {:.6}", outcome.log_evidence);
    Ok(result)
}

/// Brute-force enumeration run, emitting the same schema as `edges` so
/// the two are directly diffable.
pub fn run_oracle(opts: &RunOptions) -> Result<ResultFile> {
    let total0 = Instant::now();
    let ds = load_dataset(opts)?;
    let k = resolve_indegree(opts, ds.n())?;
    let (matrix, engine_time) = in_pool(opts.threads, || {
        let e0 = Instant::now();
        let matrix = oracle::oracle_edge_matrix(&ds, opts.prior, k)?;
        Ok((matrix, e0.elapsed().as_secs_f64()))
    })?;

    let n = ds.n();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|u| (0..n).map(|v| matrix.get(u, v)).collect())
        .collect();
    let result = ResultFile {
        variables: ds.names().to_vec(),
        n,
        m: ds.m(),
        k,
        prior: opts.prior.to_string(),
        log_evidence: matrix.log_evidence,
        edges: Some(rows),
        feature_posterior: None,
        runtime_seconds: RuntimeSeconds {
            scores: 0.0,
            engine: engine_time,
            total: total0.elapsed().as_secs_f64(),
        },
        rr_h_relative_gap: 0.0,
    };
    if let Some(out) = &opts.out_path {
        result.write_to(out)?;
    }
    print_edge_summary(
        &result.variables,
        result.edges.as_ref().unwrap(),
        result.log_evidence,
    );
    Ok(result)
}

#[derive(Debug, Clone, Copy)]
pub struct CompareSummary {
    pub pairs: usize,
    pub max_abs_diff: f64,
    pub mean_abs_diff: f64,
}

/// Diffs two result files into scatter CSV rows `u,v,p_a,p_b`, one per
/// ordered pair, and prints the aggregate differences.
pub fn run_compare(a_path: &Path, b_path: &Path, out: Option<&Path>) -> Result<CompareSummary> {
    let a = ResultFile::read_from(a_path)?;
    let b = ResultFile::read_from(b_path)?;
    if a.variables != b.variables || a.n != b.n {
        return Err(Error::SchemaError(
            "result files describe different variable sets".into(),
        ));
    }
    let ea = a
        .edges
        .as_ref()
        .ok_or_else(|| Error::SchemaError(format!("{} has no edge matrix", a_path.display())))?;
    let eb = b
        .edges
        .as_ref()
        .ok_or_else(|| Error::SchemaError(format!("{} has no edge matrix", b_path.display())))?;

    let mut csv = String::from("u,v,p_a,p_b\n");
    let mut max_abs: f64 = 0.0;
    let mut sum_abs = 0.0;
    let mut pairs = 0usize;
    for u in 0..a.n {
        for v in 0..a.n {
            if u == v {
                continue;
            }
            let (pa, pb) = (ea[u][v], eb[u][v]);
            csv.push_str(&format!("{},{},{pa},{pb}\n", a.variables[u], a.variables[v]));
            max_abs = max_abs.max((pa - pb).abs());
            sum_abs += (pa - pb).abs();
            pairs += 1;
        }
    }
    match out {
        Some(path) => fs::write(path, &csv)?,
        None => print!("{csv}"),
    }
    let mean_abs = if pairs > 0 { sum_abs / pairs as f64 } else { 0.0 };
    println!("compared {pairs} ordered pairs: max_abs_diff={max_abs:.3e} mean_abs_diff={mean_abs:.3e}");
    Ok(CompareSummary {
        pairs,
        max_abs_diff: max_abs,
        mean_abs_diff: mean_abs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_error_class() {
        assert_eq!(exit_code(&Error::SchemaError("x".into())), 2);
        assert_eq!(exit_code(&Error::CompleteDataViolation("x".into())), 2);
        assert_eq!(exit_code(&Error::ConfigError("x".into())), 2);
        assert_eq!(exit_code(&Error::NumericalBreakdown("x".into())), 3);
        assert_eq!(exit_code(&Error::CapExceeded("x".into())), 4);
    }

    #[test]
    fn result_file_schema_roundtrip() {
        let r = ResultFile {
            variables: vec!["A".into(), "B".into()],
            n: 2,
            m: 0,
            k: 1,
            prior: "uniform".into(),
            log_evidence: 3.0f64.ln(),
            edges: Some(vec![vec![0.0, 1.0 / 3.0], vec![1.0 / 3.0, 0.0]]),
            feature_posterior: None,
            runtime_seconds: RuntimeSeconds {
                scores: 0.0,
                engine: 0.0,
                total: 0.0,
            },
            rr_h_relative_gap: 0.0,
        };
        let json = serde_json::to_string(&r).unwrap();
        assert!(!json.contains("feature_posterior"));
        let back: ResultFile = serde_json::from_str(&json).unwrap();
        assert_eq!(back.variables, r.variables);
        assert_eq!(back.edges.unwrap()[0][1], 1.0 / 3.0);
    }
}
