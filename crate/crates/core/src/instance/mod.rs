//! Weighted graphs, discretization orders and instance files.

mod graph;
mod io;
mod scheme;

pub use graph::{GraphError, WeightedGraph};
pub use io::{
    read_instance, read_instance_bytes, write_instance, Instance, ParseError, ParseErrorKind,
    MAX_DIMENSION, MAX_VERTICES,
};
pub use scheme::{
    classify, complete_scheme, find_order, find_order_with_budget, first_non_clique_cluster,
    partition_edges, validate_scheme, ClassKind, DiscretizationScheme, EdgePartition,
    InstanceClass, OrderError, SchemeError, ValidationReport, Violation, DEFAULT_ORDER_BUDGET,
};
