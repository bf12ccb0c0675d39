//! Complete discrete datasets: CSV ingestion, arity inference, and
//! sufficient-statistic counts for arbitrary families.

use crate::error::{Error, Result};
use crate::nodeset::NodeSet;
use serde::Deserialize;
use sha2::{Digest, Sha256};
use std::collections::HashMap;
use std::fmt::Write as _;

/// An immutable complete discrete dataset.
///
/// Cells are category codes assigned by first appearance of the distinct
/// string values per column, so identical input bytes always produce the
/// identical encoding. The BDe score is label-symmetric, which makes the
/// code assignment score-neutral.
#[derive(Debug, Clone)]
pub struct Dataset {
    names: Vec<String>,
    arities: Vec<u32>,
    /// Row-major category codes, `m * n` entries.
    codes: Vec<u32>,
    n: usize,
    m: usize,
}

impl Dataset {
    /// Parses a CSV with a mandatory header row.
    ///
    /// No quoting or escaping: every comma is a field separator. Rows
    /// with a field count other than `n` or with an empty field are
    /// rejected. `declared_arities` may enlarge a column's domain beyond
    /// the observed distinct values (never shrink it).
    pub fn from_csv(text: &str, declared_arities: Option<&HashMap<String, u32>>) -> Result<Dataset> {
        let mut lines = text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l));
        let header = lines
            .next()
            .ok_or_else(|| Error::SchemaError("empty input: missing header row".into()))?;
        let names: Vec<String> = header.split(',').map(|s| s.to_string()).collect();
        let n = names.len();
        {
            let mut seen = HashMap::new();
            for (i, name) in names.iter().enumerate() {
                if let Some(prev) = seen.insert(name.as_str(), i) {
                    return Err(Error::SchemaError(format!(
                        "duplicate header name {name:?} (columns {prev} and {i})"
                    )));
                }
            }
        }

        let mut encoders: Vec<HashMap<String, u32>> = vec![HashMap::new(); n];
        let mut codes: Vec<u32> = Vec::new();
        let mut m = 0usize;
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != n {
                return Err(Error::CompleteDataViolation(format!(
                    "row {} has {} fields, expected {}",
                    lineno + 2,
                    fields.len(),
                    n
                )));
            }
            for (col, field) in fields.iter().enumerate() {
                if field.is_empty() {
                    return Err(Error::CompleteDataViolation(format!(
                        "row {}, column {:?}: empty cell",
                        lineno + 2,
                        names[col]
                    )));
                }
                let enc = &mut encoders[col];
                let next = enc.len() as u32;
                let code = *enc.entry(field.to_string()).or_insert(next);
                codes.push(code);
            }
            m += 1;
        }

        let mut arities: Vec<u32> = encoders.iter().map(|e| (e.len() as u32).max(1)).collect();
        if let Some(declared) = declared_arities {
            for (name, &arity) in declared {
                let col = names.iter().position(|x| x == name).ok_or_else(|| {
                    Error::SchemaError(format!("declared arity for unknown variable {name:?}"))
                })?;
                if arity == 0 {
                    return Err(Error::SchemaError(format!(
                        "declared arity for {name:?} must be positive"
                    )));
                }
                let observed = encoders[col].len() as u32;
                if arity < observed {
                    return Err(Error::SchemaError(format!(
                        "declared arity {arity} for {name:?} is smaller than {observed} observed categories"
                    )));
                }
                arities[col] = arities[col].max(arity);
            }
        }

        Ok(Dataset {
            names,
            arities,
            codes,
            n,
            m,
        })
    }

    /// Builds a dataset from already-encoded records, used for synthetic
    /// data. Every cell must satisfy `row[i] < arities[i]`.
    pub fn from_parts(names: Vec<String>, arities: Vec<u32>, rows: &[Vec<u32>]) -> Result<Dataset> {
        let n = names.len();
        if n == 0 {
            return Err(Error::SchemaError("at least one variable required".into()));
        }
        if arities.len() != n || arities.iter().any(|&r| r == 0) {
            return Err(Error::SchemaError("need one positive arity per variable".into()));
        }
        let mut codes = Vec::with_capacity(rows.len() * n);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::CompleteDataViolation(format!(
                    "record {t} has {} cells, expected {n}",
                    row.len()
                )));
            }
            for (i, &v) in row.iter().enumerate() {
                if v >= arities[i] {
                    return Err(Error::SchemaError(format!(
                        "record {t}, column {i}: code {v} out of domain 0..{}",
                        arities[i]
                    )));
                }
                codes.push(v);
            }
        }
        Ok(Dataset {
            names,
            arities,
            codes,
            n,
            m: rows.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn arity(&self, i: usize) -> u32 {
        self.arities[i]
    }

    pub fn arities(&self) -> &[u32] {
        &self.arities
    }

    #[inline]
    pub fn value(&self, row: usize, col: usize) -> u32 {
        self.codes[row * self.n + col]
    }

    /// SHA-256 of the canonical encoded form (names, arities, category
    /// codes). Identical input bytes always fingerprint identically; the
    /// hash keys the score-table cache.
    pub fn fingerprint(&self) -> String {
        let mut canon = String::new();
        let _ = writeln!(canon, "{},{}", self.n, self.m);
        let _ = writeln!(canon, "{}", self.names.join(","));
        let _ = writeln!(
            canon,
            "{}",
            self.arities.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(",")
        );
        for t in 0..self.m {
            let row: Vec<String> = (0..self.n).map(|i| self.value(t, i).to_string()).collect();
            let _ = writeln!(canon, "{}", row.join(","));
        }
        let digest = Sha256::digest(canon.as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[derive(Deserialize)]
struct AritySidecar {
    arities: HashMap<String, u32>,
}

/// Parses the arity sidecar `{"arities": {"name": int, ...}}`.
pub fn parse_arity_sidecar(json: &str) -> Result<HashMap<String, u32>> {
    let sidecar: AritySidecar = serde_json::from_str(json)?;
    Ok(sidecar.arities)
}

/// Sufficient statistics for one family `(node, parent set)`.
///
/// `counts[j * r + k]` is `N_ijk`: how many records have the node at
/// category `k` while the parents are in configuration `j`. The
/// configuration index is the mixed-radix code of the parent values in
/// ascending parent-index order, lowest index as the fastest-varying
/// digit; this fixes the layout so score values are reproducible.
#[derive(Debug, Clone)]
pub struct FamilyCounts {
    pub node: usize,
    pub parent_set: NodeSet,
    /// Number of parent configurations, `q = prod_{j in parents} r_j`.
    pub q: u64,
    pub counts: Vec<u64>,
    pub row_totals: Vec<u64>,
}

/// Tallies `N_ijk` for one family in a single pass over the records.
pub fn family_counts(ds: &Dataset, node: usize, parents: NodeSet) -> Result<FamilyCounts> {
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
    let r = ds.arity(node) as u64;
    let parent_idx: Vec<usize> = parents.iter().collect();
    let mut q: u64 = 1;
    for &j in &parent_idx {
        q = q.checked_mul(ds.arity(j) as u64).ok_or_else(|| {
            Error::InvalidFamily(format!(
                "configuration count overflows for family ({node}, {parents})"
            ))
        })?;
    }
    let cells = usize::try_from(q * r).ok();
    let mut counts = vec![
        0u64;
        cells.expect("family count table too large to materialize")
    ];
    let mut row_totals = vec![0u64; q as usize];
    for t in 0..ds.m() {
        let mut cfg: u64 = 0;
        let mut stride: u64 = 1;
        for &j in &parent_idx {
            cfg += ds.value(t, j) as u64 * stride;
            stride *= ds.arity(j) as u64;
        }
        counts[cfg as usize * r as usize + ds.value(t, node) as usize] += 1;
        row_totals[cfg as usize] += 1;
    }
    Ok(FamilyCounts {
        node,
        parent_set: parents,
        q,
        counts,
        row_totals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_binary_columns() {
        let ds = Dataset::from_csv("A,B\n0,1\n1,0\n", None).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.m(), 2);
        assert_eq!(ds.arities(), &[2, 2]);
        // first-appearance coding: A sees "0" then "1", B sees "1" then "0"
        assert_eq!(ds.value(0, 0), 0);
        assert_eq!(ds.value(0, 1), 0);
        assert_eq!(ds.value(1, 1), 1);
    }

    #[test]
    fn header_only_is_empty_data() {
        let ds = Dataset::from_csv("A,B\n", None).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.m(), 0);
        assert_eq!(ds.arities(), &[1, 1]);
    }

    #[test]
    fn blank_cell_rejected() {
        let err = Dataset::from_csv("A,B\n0,\n", None).unwrap_err();
        assert!(matches!(err, Error::CompleteDataViolation(_)));
    }

    #[test]
    fn short_row_rejected() {
        let err = Dataset::from_csv("A,B,C\n0,1\n", None).unwrap_err();
        assert!(matches!(err, Error::CompleteDataViolation(_)));
    }

    #[test]
    fn duplicate_header_rejected() {
        let err = Dataset::from_csv("A,B,A\n0,1,2\n", None).unwrap_err();
        assert!(matches!(err, Error::SchemaError(_)));
    }

    #[test]
    fn declared_arity_enlarges_domain() {
        let mut declared = HashMap::new();
        declared.insert("A".to_string(), 4u32);
        let ds = Dataset::from_csv("A,B\n0,1\n1,0\n", Some(&declared)).unwrap();
        assert_eq!(ds.arities(), &[4, 2]);
    }

    #[test]
    fn declared_arity_below_observed_rejected() {
        let mut declared = HashMap::new();
        declared.insert("A".to_string(), 1u32);
        let err = Dataset::from_csv("A,B\n0,1\n1,0\n", Some(&declared)).unwrap_err();
        assert!(matches!(err, Error::SchemaError(_)));
    }

    #[test]
    fn arity_sidecar_parses() {
        let m = parse_arity_sidecar(r#"{"arities": {"A": 3, "B": 2}}"#).unwrap();
        assert_eq!(m["A"], 3);
        assert_eq!(m["B"], 2);
    }

    #[test]
    fn counts_without_parents() {
        let ds = Dataset::from_csv("A\n0\n1\n1\n", None).unwrap();
        let fc = family_counts(&ds, 0, NodeSet::EMPTY).unwrap();
        assert_eq!(fc.q, 1);
        assert_eq!(fc.counts, vec![1, 2]);
        assert_eq!(fc.row_totals, vec![3]);
    }

    #[test]
    fn counts_with_one_parent() {
        let ds = Dataset::from_csv("A,B\n0,0\n1,0\n1,1\n", None).unwrap();
        let fc = family_counts(&ds, 0, NodeSet::singleton(1)).unwrap();
        assert_eq!(fc.q, 2);
        // config B=0: A counts [1,1]; config B=1: [0,1]
        assert_eq!(fc.counts, vec![1, 1, 0, 1]);
        assert_eq!(fc.row_totals, vec![2, 1]);
    }

    #[test]
    fn counts_on_empty_data() {
        let ds = Dataset::from_csv("A,B,C\n", None).unwrap();
        let fc = family_counts(&ds, 0, NodeSet::from_indices(&[1, 2])).unwrap();
        assert_eq!(fc.q, 1); // all arities default to 1 with no observations
        assert!(fc.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn self_parent_rejected() {
        let ds = Dataset::from_csv("A,B\n0,1\n", None).unwrap();
        let err = family_counts(&ds, 0, NodeSet::singleton(0)).unwrap_err();
        assert!(matches!(err, Error::InvalidFamily(_)));
    }

    #[test]
    fn counts_total_to_m_and_are_row_order_free() {
        let names = vec!["X".into(), "Y".into(), "Z".into()];
        let rows = vec![
            vec![0, 1, 2],
            vec![1, 0, 2],
            vec![0, 0, 0],
            vec![1, 1, 1],
        ];
        let mut permuted = rows.clone();
        permuted.swap(0, 3);
        permuted.swap(1, 2);
        let a = Dataset::from_parts(names.clone(), vec![2, 2, 3], &rows).unwrap();
        let b = Dataset::from_parts(names, vec![2, 2, 3], &permuted).unwrap();
        for node in 0..3 {
            for parents in [NodeSet::EMPTY, NodeSet::singleton((node + 1) % 3)] {
                let fa = family_counts(&a, node, parents).unwrap();
                let fb = family_counts(&b, node, parents).unwrap();
                assert_eq!(fa.counts.iter().sum::<u64>(), 4);
                assert_eq!(fa.counts, fb.counts);
            }
        }
    }

    #[test]
    fn fingerprint_is_stable_and_content_sensitive() {
        let a = Dataset::from_csv("A,B\n0,1\n1,0\n", None).unwrap();
        let b = Dataset::from_csv("A,B\n0,1\n1,0\n", None).unwrap();
        let c = Dataset::from_csv("A,B\n0,1\n1,1\n", None).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a.fingerprint(), c.fingerprint());
    }
}
