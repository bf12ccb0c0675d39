//! Modular structure priors, modular features, and assembly of the
//! per-node functions `B_i(Pa_i) = f_i(Pa_i) Q_i(Pa_i) score_i(Pa_i)`.

use crate::error::{Error, Result};
use crate::nodeset::{binomial, NodeSet};
use crate::scoring::LocalScoreTable;
use serde::Deserialize;
use std::fmt;

/// A modular structure prior `P(G) = prod_i Q_i(Pa_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PriorKind {
    #[default]
    /// `Q_i = 1`, the (unnormalized) uniform prior over DAGs. The
    /// normalizer cancels in every posterior ratio.
    Uniform,
    /// `Q_i(Pa_i) = 1 / C(n-1, |Pa_i|)`, the order-modular form used by
    /// order-summing methods. Included for comparison runs only; it is
    /// non-uniform over DAGs.
    OrderModular,
}

impl PriorKind {
    pub fn log_q(self, n: usize, parent_count: usize) -> f64 {
        match self {
            PriorKind::Uniform => 0.0,
            PriorKind::OrderModular => -binomial(n - 1, parent_count).ln(),
        }
    }

    pub fn parse(name: &str) -> Result<PriorKind> {
        match name {
            "uniform" => Ok(PriorKind::Uniform),
            "order-modular" | "order_modular" => Ok(PriorKind::OrderModular),
            other => Err(Error::ConfigError(format!(
                "unknown prior {other:?}; expected uniform or order-modular"
            ))),
        }
    }
}

impl fmt::Display for PriorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PriorKind::Uniform => write!(f, "uniform"),
            PriorKind::OrderModular => write!(f, "order-modular"),
        }
    }
}

/// A modular feature `f(G) = prod_i f_i(Pa_i)` expressed as per-node
/// required and forbidden parent sets:
/// `f_i(Pa_i) = 1` iff `R_i ⊆ Pa_i` and `Pa_i ∩ F_i = ∅`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureSpec {
    n: usize,
    required: Vec<NodeSet>,
    forbidden: Vec<NodeSet>,
}

impl FeatureSpec {
    /// The constant feature `f ≡ 1`.
    pub fn constant(n: usize) -> FeatureSpec {
        FeatureSpec {
            n,
            required: vec![NodeSet::EMPTY; n],
            forbidden: vec![NodeSet::EMPTY; n],
        }
    }

    /// The single-edge feature `u -> v`.
    pub fn edge(n: usize, u: usize, v: usize) -> Result<FeatureSpec> {
        FeatureSpec::constant(n).require_edge(u, v)
    }

    pub fn require_edge(mut self, u: usize, v: usize) -> Result<FeatureSpec> {
        self.check_edge(u, v)?;
        if self.forbidden[v].contains(u) {
            return Err(Error::InvalidFeature(format!(
                "edge {u} -> {v} is both required and forbidden"
            )));
        }
        self.required[v] = self.required[v].insert(u);
        Ok(self)
    }

    pub fn forbid_edge(mut self, u: usize, v: usize) -> Result<FeatureSpec> {
        self.check_edge(u, v)?;
        if self.required[v].contains(u) {
            return Err(Error::InvalidFeature(format!(
                "edge {u} -> {v} is both required and forbidden"
            )));
        }
        self.forbidden[v] = self.forbidden[v].insert(u);
        Ok(self)
    }

    fn check_edge(&self, u: usize, v: usize) -> Result<()> {
        if u == v {
            return Err(Error::InvalidFeature(format!("self-loop {u} -> {v}")));
        }
        if u >= self.n || v >= self.n {
            return Err(Error::InvalidFeature(format!(
                "edge {u} -> {v} out of range for n={}",
                self.n
            )));
        }
        Ok(())
    }

    /// Conjunction of two features: a DAG satisfies it iff it satisfies
    /// both. Fails if the conjunction is contradictory.
    pub fn conjunction(&self, other: &FeatureSpec) -> Result<FeatureSpec> {
        if self.n != other.n {
            return Err(Error::InvalidFeature(
                "features defined over different variable counts".into(),
            ));
        }
        let mut out = self.clone();
        for i in 0..self.n {
            out.required[i] = out.required[i].union(other.required[i]);
            out.forbidden[i] = out.forbidden[i].union(other.forbidden[i]);
            if !out.required[i].intersection(out.forbidden[i]).is_empty() {
                return Err(Error::InvalidFeature(format!(
                    "conjunction requires and forbids the same parent of node {i}"
                )));
            }
        }
        Ok(out)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn required(&self, i: usize) -> NodeSet {
        self.required[i]
    }

    pub fn forbidden(&self, i: usize) -> NodeSet {
        self.forbidden[i]
    }

    /// `f_i(Pa_i)` as a boolean.
    #[inline]
    pub fn allows(&self, node: usize, parents: NodeSet) -> bool {
        self.required[node].is_subset_of(parents)
            && parents.intersection(self.forbidden[node]).is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.required.iter().all(|r| r.is_empty()) && self.forbidden.iter().all(|f| f.is_empty())
    }

    /// Largest required-parent set over all nodes; a feature is
    /// infeasible under bound `k` when this exceeds `k`.
    pub fn max_required_size(&self) -> usize {
        self.required.iter().map(|r| r.len()).max().unwrap_or(0)
    }

    /// Parses the feature file format
    /// `{"required_edges": [["U","V"], ...], "forbidden_edges": [...]}`
    /// where `U`, `V` are variable names.
    pub fn from_json(json: &str, names: &[String]) -> Result<FeatureSpec> {
        #[derive(Deserialize)]
        struct FeatureFile {
            #[serde(default)]
            required_edges: Vec<(String, String)>,
            #[serde(default)]
            forbidden_edges: Vec<(String, String)>,
        }
        let file: FeatureFile = serde_json::from_str(json)?;
        let resolve = |name: &str| {
            names
                .iter()
                .position(|x| x == name)
                .ok_or_else(|| Error::SchemaError(format!("unknown variable {name:?} in feature file")))
        };
        let mut feature = FeatureSpec::constant(names.len());
        for (u, v) in &file.required_edges {
            feature = feature.require_edge(resolve(u)?, resolve(v)?)?;
        }
        for (u, v) in &file.forbidden_edges {
            feature = feature.forbid_edge(resolve(u)?, resolve(v)?)?;
        }
        Ok(feature)
    }
}

/// The assembled per-node functions `B_i`, in linear domain after a
/// per-node log shift.
///
/// `shift(i)` records `c_i = max over families of (log Q_i + log
/// score_i)`, taken over all families regardless of the feature, so two
/// assemblies over the same scores share shifts exactly and their
/// `RR(V)` ratio is the exact posterior. After shifting every value lies
/// in `[0, 1]`, which rules out overflow anywhere in the lattice, and
/// values are exactly 0 wherever `f_i(Pa_i) = 0`.
///
/// The scheme has a dynamic-range envelope: the shifted lattice top is
/// `P(D) exp(-sum_i c_i)`, and when the per-node maxima overshoot what
/// any one DAG can achieve simultaneously by more than roughly
/// `700 - n ln(families per node)` nats, double precision cannot hold
/// the result and the engine aborts with a breakdown diagnostic instead
/// of emitting garbage. Re-centering shifts cannot widen that envelope:
/// any factor above 1 lets partial products dip through the underflow
/// floor and silently lose terms at the result's own scale.
#[derive(Debug, Clone)]
pub struct Bfunction {
    n: usize,
    max_indegree: usize,
    families: Vec<Vec<(NodeSet, f64)>>,
    shifts: Vec<f64>,
}

impl Bfunction {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn max_indegree(&self) -> usize {
        self.max_indegree
    }

    /// Families of one node with their B values, in canonical order.
    pub fn families(&self, i: usize) -> &[(NodeSet, f64)] {
        &self.families[i]
    }

    pub fn shift(&self, i: usize) -> f64 {
        self.shifts[i]
    }

    /// `sum_i c_i`, the log factor removed from every table value.
    pub fn shift_sum(&self) -> f64 {
        self.shifts.iter().sum()
    }

    /// Low-level constructor from explicit per-family values, for tests
    /// and for callers with non-indicator weights. Values must be finite
    /// and nonnegative; families must not contain their own node.
    pub fn from_raw(
        n: usize,
        max_indegree: usize,
        families: Vec<Vec<(NodeSet, f64)>>,
        shifts: Vec<f64>,
    ) -> Result<Bfunction> {
        if families.len() != n || shifts.len() != n {
            return Err(Error::ConfigError(
                "need one family list and one shift per node".into(),
            ));
        }
        for (i, fams) in families.iter().enumerate() {
            for &(parents, value) in fams {
                if parents.contains(i) || !parents.within(n) || parents.len() > max_indegree {
                    return Err(Error::InvalidFamily(format!(
                        "family ({i}, {parents}) invalid under n={n}, k={max_indegree}"
                    )));
                }
                if !value.is_finite() || value < 0.0 {
                    return Err(Error::ConfigError(format!(
                        "B value for ({i}, {parents}) must be finite and nonnegative, got {value}"
                    )));
                }
            }
        }
        Ok(Bfunction {
            n,
            max_indegree,
            families,
            shifts,
        })
    }

    /// Unit weights on every family within the bound; `RR(V)` then
    /// counts labeled DAGs with indegree at most `k`.
    pub fn unit(n: usize, k: usize) -> Bfunction {
        let families = (0..n)
            .map(|i| {
                crate::nodeset::bounded_subsets_excluding(n, i, k)
                    .into_iter()
                    .map(|p| (p, 1.0))
                    .collect()
            })
            .collect();
        Bfunction {
            n,
            max_indegree: k,
            families,
            shifts: vec![0.0; n],
        }
    }
}

/// Builds `B_i(Pa_i) = f_i(Pa_i) exp(log Q_i + log score_i - c_i)` for
/// every family within the bound.
pub fn assemble_b(
    scores: &[LocalScoreTable],
    prior: PriorKind,
    feature: &FeatureSpec,
    k: usize,
) -> Result<Bfunction> {
    let n = scores.len();
    if feature.n() != n {
        return Err(Error::ConfigError(format!(
            "feature over {} variables does not match {} score tables",
            feature.n(),
            n
        )));
    }
    for table in scores {
        if table.max_indegree < k {
            return Err(Error::ConfigError(format!(
                "score table for node {} covers indegree {} < requested {k}",
                table.node, table.max_indegree
            )));
        }
    }
    for i in 0..n {
        if feature.required(i).len() > k {
            return Err(Error::InfeasibleFeatureUnderBound(format!(
                "node {i} requires {} parents but the bound is {k}",
                feature.required(i).len()
            )));
        }
    }

    let mut families = Vec::with_capacity(n);
    let mut shifts = Vec::with_capacity(n);
    for (i, table) in scores.iter().enumerate() {
        let mut log_weights: Vec<(NodeSet, f64)> = Vec::new();
        let mut shift = f64::NEG_INFINITY;
        for entry in table.entries() {
            if entry.parents.len() > k {
                continue;
            }
            let lw = prior.log_q(n, entry.parents.len()) + entry.log_score;
            shift = shift.max(lw);
            log_weights.push((entry.parents, lw));
        }
        let fams = log_weights
            .into_iter()
            .map(|(parents, lw)| {
                let value = if feature.allows(i, parents) {
                    (lw - shift).exp()
                } else {
                    0.0
                };
                (parents, value)
            })
            .collect();
        families.push(fams);
        shifts.push(shift);
    }
    Ok(Bfunction {
        n,
        max_indegree: k,
        families,
        shifts,
    })
}
