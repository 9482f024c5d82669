//! A-priori solution counts and checks of the `a_j` recurrences.

use std::fmt;

use serde::Serialize;

use crate::bp::BpStats;
use crate::instance::{
    classify, first_non_clique_cluster, DiscretizationScheme, SchemeError, WeightedGraph,
};

/// Counting convention shared with the solver.
pub const CONVENTION: &str =
    "realizations are counted up to translation and rotation; mirror images are distinct";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CountKind {
    ExactPowerOfTwo,
    UpperBoundOnly,
    NotApplicable,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CountPrediction {
    pub kind: CountKind,
    /// `n − K`.
    pub exponent: u32,
    /// `2^(n−K)` when it is meaningful and fits in 128 bits.
    pub value: Option<u128>,
    pub rationale: String,
}

impl CountPrediction {
    /// Whether `count` agrees with the prediction: equal for an exact
    /// prediction, at most the bound for an upper bound.
    pub fn admits(&self, count: u128) -> Option<bool> {
        let v = self.value?;
        match self.kind {
            CountKind::ExactPowerOfTwo => Some(count == v),
            CountKind::UpperBoundOnly => Some(count <= v),
            CountKind::NotApplicable => None,
        }
    }
}

fn power_of_two(exponent: u32) -> Option<u128> {
    1u128.checked_shl(exponent).filter(|_| exponent < 128)
}

fn set(vertices: &[usize]) -> String {
    let items: Vec<String> = vertices.iter().map(|v| v.to_string()).collect();
    format!("{{{}}}", items.join(", "))
}

pub fn predict_count(
    graph: &WeightedGraph,
    scheme: &DiscretizationScheme,
) -> Result<CountPrediction, SchemeError> {
    let class = classify(graph, scheme)?;
    let exponent = (graph.n() - scheme.k()) as u32;
    let bound = power_of_two(exponent);
    if let Some((v, (a, b))) = first_non_clique_cluster(graph, scheme) {
        let members = scheme.cluster(v).unwrap_or_default();
        return Ok(CountPrediction {
            kind: CountKind::NotApplicable,
            exponent,
            value: None,
            rationale: format!(
                "U_{v} = {} is not a clique ({{{a}, {b}}} is not an edge), so the number of \
                 solutions depends on the edge weights and cannot be predicted from the graph",
                set(members)
            ),
        });
    }
    Ok(if class.pruning_free {
        CountPrediction {
            kind: CountKind::ExactPowerOfTwo,
            exponent,
            value: bound,
            rationale: format!(
                "every U_j induces a {}-clique and there are no pruning edges, so each \
                 trilateration doubles the positions: 2^{exponent} solutions almost surely",
                scheme.k()
            ),
        }
    } else {
        CountPrediction {
            kind: CountKind::UpperBoundOnly,
            exponent,
            value: bound,
            rationale: format!(
                "every U_j induces a {}-clique but pruning edges may discard branches: at most \
                 2^{exponent} solutions",
                scheme.k()
            ),
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "a_j <= 2 a_l")]
    AtMostDouble,
    #[serde(rename = "a_j = 2 a_l")]
    Double,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecurrenceViolation {
    pub vertex: usize,
    /// `ℓ(j)`, the latest-ranked member of `U_j`.
    pub latest: usize,
    pub a_j: u64,
    pub a_latest: u64,
    pub relation: Relation,
}

impl fmt::Display for RecurrenceViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.relation {
            Relation::AtMostDouble => "<=",
            Relation::Double => "=",
        };
        write!(
            f,
            "a_{} = {} violates a_{} {op} 2 a_{} = {}",
            self.vertex,
            self.a_j,
            self.vertex,
            self.latest,
            2 * self.a_latest
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RecurrenceReport {
    pub holds: bool,
    /// Equality is only asserted for pruning-free instances whose clusters
    /// are all cliques.
    pub equality_checked: bool,
    pub checked: usize,
    pub violations: Vec<RecurrenceViolation>,
}

pub fn check_recurrence(
    stats: &BpStats,
    graph: &WeightedGraph,
    scheme: &DiscretizationScheme,
) -> Result<RecurrenceReport, SchemeError> {
    let class = classify(graph, scheme)?;
    let equality = class.pruning_free && class.is_combinatorial();
    let mut violations = Vec::new();
    let mut checked = 0;
    for &v in scheme.discretized() {
        let (Some(a_j), Some(latest)) = (stats.a_of(scheme, v), scheme.latest(v)) else {
            continue;
        };
        let Some(a_latest) = stats.a_of(scheme, latest) else {
            continue;
        };
        checked += 1;
        let relation = if a_j > 2 * a_latest {
            Some(Relation::AtMostDouble)
        } else if equality && a_j != 2 * a_latest {
            Some(Relation::Double)
        } else {
            None
        };
        if let Some(relation) = relation {
            violations.push(RecurrenceViolation {
                vertex: v,
                latest,
                a_j,
                a_latest,
                relation,
            });
        }
    }
    Ok(RecurrenceReport {
        holds: violations.is_empty(),
        equality_checked: equality,
        checked,
        violations,
    })
}
