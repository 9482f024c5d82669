//! Line-oriented instance files.
//!
//! ```text
//! # comment
//! dgp <n> <K>
//! e <i> <j> <d>
//! order <v1> ... <vn>
//! cluster <j> <u1> ... <uK>
//! ```
//!
//! The header must precede every other record. `cluster` lines require an
//! `order` line somewhere in the file.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::graph::{GraphError, WeightedGraph};
use super::scheme::DiscretizationScheme;

#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub graph: WeightedGraph,
    pub k: usize,
    pub scheme: Option<DiscretizationScheme>,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("missing `dgp <n> <K>` header")]
    MissingHeader,
    #[error("duplicate header")]
    DuplicateHeader,
    #[error("unknown record `{0}`")]
    UnknownRecord(String),
    #[error("expected {expected} fields after `{record}`, found {found}")]
    FieldCount {
        record: &'static str,
        expected: String,
        found: usize,
    },
    #[error("field `{field}`: cannot parse `{text}`")]
    BadNumber { field: &'static str, text: String },
    #[error("K must be at least 1")]
    ZeroDimension,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("duplicate order line")]
    DuplicateOrder,
    #[error("order is not a permutation of 1..={0}")]
    OrderNotPermutation(usize),
    #[error("vertex {vertex} is outside 1..={n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("duplicate cluster for vertex {0}")]
    DuplicateCluster(usize),
    #[error("cluster lines require an order line")]
    ClusterWithoutOrder,
    #[error("input is not valid UTF-8")]
    NotUtf8,
    #[error("{field} = {value} exceeds the limit of {limit}")]
    TooLarge {
        field: &'static str,
        value: usize,
        limit: usize,
    },
}

/// Largest vertex count accepted by the reader.
pub const MAX_VERTICES: usize = 1 << 20;
/// Largest dimension accepted by the reader.
pub const MAX_DIMENSION: usize = 64;

fn err(line: usize, kind: ParseErrorKind) -> ParseError {
    ParseError { line, kind }
}

fn parse_usize(line: usize, field: &'static str, text: &str) -> Result<usize, ParseError> {
    text.parse().map_err(|_| {
        err(
            line,
            ParseErrorKind::BadNumber {
                field,
                text: text.to_string(),
            },
        )
    })
}

fn parse_vertex(
    line: usize,
    field: &'static str,
    text: &str,
    n: usize,
) -> Result<usize, ParseError> {
    let v = parse_usize(line, field, text)?;
    if v == 0 || v > n {
        return Err(err(line, ParseErrorKind::VertexOutOfRange { vertex: v, n }));
    }
    Ok(v)
}

pub fn read_instance_bytes(bytes: &[u8]) -> Result<Instance, ParseError> {
    let text = std::str::from_utf8(bytes).map_err(|_| err(0, ParseErrorKind::NotUtf8))?;
    read_instance(text)
}

pub fn read_instance(text: &str) -> Result<Instance, ParseError> {
    let mut header: Option<(WeightedGraph, usize)> = None;
    let mut order: Option<(usize, Vec<usize>)> = None;
    let mut clusters: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut first_cluster_line = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.trim();
        if content.is_empty() || content.starts_with('#') {
            continue;
        }
        let mut fields = content.split_whitespace();
        let record = fields.next().unwrap_or_default();
        let rest: Vec<&str> = fields.collect();

        if record == "dgp" {
            if header.is_some() {
                return Err(err(line, ParseErrorKind::DuplicateHeader));
            }
            if rest.len() != 2 {
                return Err(err(
                    line,
                    ParseErrorKind::FieldCount {
                        record: "dgp",
                        expected: "2".into(),
                        found: rest.len(),
                    },
                ));
            }
            let n = parse_usize(line, "n", rest[0])?;
            let k = parse_usize(line, "K", rest[1])?;
            if k == 0 {
                return Err(err(line, ParseErrorKind::ZeroDimension));
            }
            for (field, value, limit) in [("n", n, MAX_VERTICES), ("K", k, MAX_DIMENSION)] {
                if value > limit {
                    return Err(err(
                        line,
                        ParseErrorKind::TooLarge {
                            field,
                            value,
                            limit,
                        },
                    ));
                }
            }
            header = Some((WeightedGraph::new(n), k));
            continue;
        }

        let Some((graph, k)) = header.as_mut() else {
            return Err(err(line, ParseErrorKind::MissingHeader));
        };
        let n = graph.n();
        match record {
            "e" => {
                if rest.len() != 3 {
                    return Err(err(
                        line,
                        ParseErrorKind::FieldCount {
                            record: "e",
                            expected: "3".into(),
                            found: rest.len(),
                        },
                    ));
                }
                let i = parse_usize(line, "i", rest[0])?;
                let j = parse_usize(line, "j", rest[1])?;
                let d: f64 = rest[2].parse().map_err(|_| {
                    err(
                        line,
                        ParseErrorKind::BadNumber {
                            field: "d",
                            text: rest[2].to_string(),
                        },
                    )
                })?;
                graph.add_edge(i, j, d).map_err(|e| err(line, e.into()))?;
            }
            "order" => {
                if order.is_some() {
                    return Err(err(line, ParseErrorKind::DuplicateOrder));
                }
                if rest.len() != n {
                    return Err(err(
                        line,
                        ParseErrorKind::FieldCount {
                            record: "order",
                            expected: n.to_string(),
                            found: rest.len(),
                        },
                    ));
                }
                let mut seen = vec![false; n + 1];
                let mut vertices = Vec::with_capacity(n);
                for text in &rest {
                    let v = parse_vertex(line, "order", text, n)?;
                    if seen[v] {
                        return Err(err(line, ParseErrorKind::OrderNotPermutation(n)));
                    }
                    seen[v] = true;
                    vertices.push(v);
                }
                order = Some((line, vertices));
            }
            "cluster" => {
                if rest.len() != *k + 1 {
                    return Err(err(
                        line,
                        ParseErrorKind::FieldCount {
                            record: "cluster",
                            expected: (*k + 1).to_string(),
                            found: rest.len(),
                        },
                    ));
                }
                let j = parse_vertex(line, "j", rest[0], n)?;
                let members = rest[1..]
                    .iter()
                    .map(|t| parse_vertex(line, "u", t, n))
                    .collect::<Result<Vec<_>, _>>()?;
                if clusters.insert(j, members).is_some() {
                    return Err(err(line, ParseErrorKind::DuplicateCluster(j)));
                }
                first_cluster_line.get_or_insert(line);
            }
            other => return Err(err(line, ParseErrorKind::UnknownRecord(other.to_string()))),
        }
    }

    let Some((graph, k)) = header else {
        return Err(err(0, ParseErrorKind::MissingHeader));
    };
    let scheme = match order {
        Some((_, vertices)) => Some(DiscretizationScheme::new(k, vertices, clusters)),
        None => {
            if let Some(line) = first_cluster_line {
                return Err(err(line, ParseErrorKind::ClusterWithoutOrder));
            }
            None
        }
    };
    Ok(Instance { graph, k, scheme })
}

/// Serializes with 17 significant digits so that every weight round-trips.
pub fn write_instance(instance: &Instance) -> String {
    let mut out = String::new();
    let graph = &instance.graph;
    let _ = writeln!(out, "dgp {} {}", graph.n(), instance.k);
    for (i, j, d) in graph.edges() {
        let _ = writeln!(out, "e {i} {j} {d:.16e}");
    }
    if let Some(scheme) = &instance.scheme {
        out.push_str("order");
        for v in scheme.order() {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
        for v in scheme.discretized() {
            if let Some(members) = scheme.cluster(*v) {
                let _ = write!(out, "cluster {v}");
                for u in members {
                    let _ = write!(out, " {u}");
                }
                out.push('\n');
            }
        }
    }
    out
}
