use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::graph::WeightedGraph;
use crate::util::next_combination;

/// Vertex order plus the reference clusters `U_j` of every vertex after the
/// first `k`. Vertex labels are 1-based; ranks are 0-based positions in the
/// order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscretizationScheme {
    k: usize,
    order: Vec<usize>,
    clusters: BTreeMap<usize, Vec<usize>>,
    rank: Vec<Option<usize>>,
}

impl DiscretizationScheme {
    /// Builds a scheme without checking it against any graph. Cluster members
    /// are stored sorted by label.
    pub fn new(k: usize, order: Vec<usize>, clusters: BTreeMap<usize, Vec<usize>>) -> Self {
        let clusters = clusters
            .into_iter()
            .map(|(v, mut members)| {
                members.sort_unstable();
                (v, members)
            })
            .collect();
        let max_label = order.iter().copied().max().unwrap_or(0);
        let mut rank = vec![None; max_label + 1];
        for (r, &v) in order.iter().enumerate() {
            if rank[v].is_none() {
                rank[v] = Some(r);
            }
        }
        Self {
            k,
            order,
            clusters,
            rank,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn clusters(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.clusters
    }

    pub fn cluster(&self, vertex: usize) -> Option<&[usize]> {
        self.clusters.get(&vertex).map(Vec::as_slice)
    }

    /// 0-based position of `vertex` in the order.
    pub fn rank(&self, vertex: usize) -> Option<usize> {
        self.rank.get(vertex).copied().flatten()
    }

    /// ℓ(j): the latest-ordered member of `U_j`.
    pub fn latest(&self, vertex: usize) -> Option<usize> {
        self.cluster(vertex)?
            .iter()
            .copied()
            .max_by_key(|&u| self.rank(u).unwrap_or(0))
    }

    /// The first `k` vertices of the order.
    pub fn initial(&self) -> &[usize] {
        &self.order[..self.k.min(self.order.len())]
    }

    /// Vertices after the initial clique, in order.
    pub fn discretized(&self) -> &[usize] {
        &self.order[self.k.min(self.order.len())..]
    }

    fn is_permutation_of(&self, n: usize) -> bool {
        if self.order.len() != n {
            return false;
        }
        let mut seen = vec![false; n + 1];
        for &v in &self.order {
            if v == 0 || v > n || seen[v] {
                return false;
            }
            seen[v] = true;
        }
        true
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ZeroDimension,
    OrderNotPermutation { n: usize },
    TooFewVertices { n: usize, k: usize },
    InitialNotClique { missing: (usize, usize) },
    ClusterMissing { vertex: usize },
    ClusterOnInitialVertex { vertex: usize },
    ClusterWrongSize { vertex: usize, size: usize },
    ClusterNotPreceding { vertex: usize, member: usize },
    ClusterNotAdjacent { vertex: usize, member: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ZeroDimension => write!(f, "embedding dimension must be at least 1"),
            Violation::OrderNotPermutation { n } => {
                write!(f, "order is not a permutation of 1..={n}")
            }
            Violation::TooFewVertices { n, k } => {
                write!(f, "graph has {n} vertices, fewer than K = {k}")
            }
            Violation::InitialNotClique { missing: (u, v) } => write!(
                f,
                "initial vertices are not a clique of size K: {{{u},{v}}} is not an edge"
            ),
            Violation::ClusterMissing { vertex } => write!(f, "vertex {vertex} has no cluster"),
            Violation::ClusterOnInitialVertex { vertex } => {
                write!(
                    f,
                    "vertex {vertex} belongs to the initial clique but has a cluster"
                )
            }
            Violation::ClusterWrongSize { vertex, size } => {
                write!(f, "cluster of vertex {vertex} has {size} members")
            }
            Violation::ClusterNotPreceding { vertex, member } => {
                write!(
                    f,
                    "cluster member {member} does not precede vertex {vertex}"
                )
            }
            Violation::ClusterNotAdjacent { vertex, member } => {
                write!(
                    f,
                    "cluster member {member} is not adjacent to vertex {vertex}"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SchemeError {
    #[error("not a discretization order for this graph: {0}")]
    Invalid(ValidationReport),
}

/// Checks conditions (i)-(ii): the first `k` vertices form a clique and every
/// later vertex has `k` adjacent, earlier-ranked cluster members.
pub fn validate_scheme(graph: &WeightedGraph, scheme: &DiscretizationScheme) -> ValidationReport {
    let mut violations = Vec::new();
    let n = graph.n();
    let k = scheme.k();
    if k == 0 {
        violations.push(Violation::ZeroDimension);
    }
    if n < k {
        violations.push(Violation::TooFewVertices { n, k });
    }
    if !scheme.is_permutation_of(n) {
        violations.push(Violation::OrderNotPermutation { n });
        return ValidationReport { violations };
    }
    if let Some(missing) = graph.missing_pair(scheme.initial()) {
        violations.push(Violation::InitialNotClique { missing });
    }
    for &v in scheme.initial() {
        if scheme.cluster(v).is_some() {
            violations.push(Violation::ClusterOnInitialVertex { vertex: v });
        }
    }
    for &v in scheme.discretized() {
        let Some(members) = scheme.cluster(v) else {
            violations.push(Violation::ClusterMissing { vertex: v });
            continue;
        };
        let mut distinct = members.to_vec();
        distinct.dedup();
        if distinct.len() != k {
            violations.push(Violation::ClusterWrongSize {
                vertex: v,
                size: distinct.len(),
            });
        }
        let rank_v = scheme.rank(v);
        for &u in &distinct {
            match (scheme.rank(u), rank_v) {
                (Some(ru), Some(rv)) if ru < rv => {}
                _ => violations.push(Violation::ClusterNotPreceding {
                    vertex: v,
                    member: u,
                }),
            }
            if !graph.has_edge(u, v) {
                violations.push(Violation::ClusterNotAdjacent {
                    vertex: v,
                    member: u,
                });
            }
        }
    }
    ValidationReport { violations }
}

fn ensure_valid(graph: &WeightedGraph, scheme: &DiscretizationScheme) -> Result<(), SchemeError> {
    let report = validate_scheme(graph, scheme);
    if report.is_ok() {
        Ok(())
    } else {
        Err(SchemeError::Invalid(report))
    }
}

/// `E_D` (edges reaching into a cluster, plus the initial clique) and the
/// remaining pruning edges `E_P`. Each pair is `(i, j)` with `i < j`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EdgePartition {
    pub discretization: Vec<(usize, usize)>,
    pub pruning: Vec<(usize, usize)>,
}

impl EdgePartition {
    pub fn is_pruning_free(&self) -> bool {
        self.pruning.is_empty()
    }
}

pub fn partition_edges(
    graph: &WeightedGraph,
    scheme: &DiscretizationScheme,
) -> Result<EdgePartition, SchemeError> {
    ensure_valid(graph, scheme)?;
    let initial = scheme.initial();
    let mut partition = EdgePartition {
        discretization: Vec::new(),
        pruning: Vec::new(),
    };
    for (i, j, _) in graph.edges() {
        let in_cluster = |a: usize, b: usize| scheme.cluster(b).is_some_and(|c| c.contains(&a));
        let discretizing =
            (initial.contains(&i) && initial.contains(&j)) || in_cluster(i, j) || in_cluster(j, i);
        if discretizing {
            partition.discretization.push((i, j));
        } else {
            partition.pruning.push((i, j));
        }
    }
    Ok(partition)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ClassKind {
    NotDiscretizable,
    Ddgp,
    CombinatorialDdgp,
    Dmdgp,
}

impl ClassKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassKind::NotDiscretizable => "not-discretizable",
            ClassKind::Ddgp => "ddgp",
            ClassKind::CombinatorialDdgp => "combinatorial-ddgp",
            ClassKind::Dmdgp => "dmdgp",
        }
    }
}

impl std::str::FromStr for ClassKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ddgp" => Ok(ClassKind::Ddgp),
            "combinatorial" | "combinatorial-ddgp" | "cddgp" => Ok(ClassKind::CombinatorialDdgp),
            "dmdgp" => Ok(ClassKind::Dmdgp),
            other => Err(format!("unknown instance class `{other}`")),
        }
    }
}

/// The most specific class of an instance under a given scheme. The variants
/// are nested: Dmdgp implies CombinatorialDdgp implies Ddgp.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct InstanceClass {
    pub kind: ClassKind,
    pub pruning_free: bool,
}

impl InstanceClass {
    pub fn is_ddgp(&self) -> bool {
        self.kind >= ClassKind::Ddgp
    }

    pub fn is_combinatorial(&self) -> bool {
        self.kind >= ClassKind::CombinatorialDdgp
    }

    pub fn is_dmdgp(&self) -> bool {
        self.kind == ClassKind::Dmdgp
    }
}

pub fn classify(
    graph: &WeightedGraph,
    scheme: &DiscretizationScheme,
) -> Result<InstanceClass, SchemeError> {
    let partition = partition_edges(graph, scheme)?;
    let k = scheme.k();
    let mut immediate = true;
    let mut cliques = true;
    for (r, &v) in scheme.order().iter().enumerate().skip(k) {
        let members = scheme.cluster(v).unwrap_or_default();
        let mut preceding: Vec<usize> = scheme.order()[r - k..r].to_vec();
        preceding.sort_unstable();
        immediate &= preceding.as_slice() == members;
        cliques &= graph.is_clique(members);
    }
    let kind = if immediate {
        ClassKind::Dmdgp
    } else if cliques {
        ClassKind::CombinatorialDdgp
    } else {
        ClassKind::Ddgp
    };
    Ok(InstanceClass {
        kind,
        pruning_free: partition.is_pruning_free(),
    })
}

/// First non-clique cluster in order, with one of its missing pairs.
pub fn first_non_clique_cluster(
    graph: &WeightedGraph,
    scheme: &DiscretizationScheme,
) -> Option<(usize, (usize, usize))> {
    scheme.discretized().iter().find_map(|&v| {
        let members = scheme.cluster(v)?;
        graph.missing_pair(members).map(|pair| (v, pair))
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum OrderError {
    #[error("order search exceeded its budget of {0} steps")]
    BudgetExceeded(u64),
    #[error("embedding dimension must be at least 1")]
    ZeroDimension,
}

/// Work limit for [`find_order_with_budget`], counted in cluster evaluations.
pub const DEFAULT_ORDER_BUDGET: u64 = 50_000_000;

pub fn find_order(
    graph: &WeightedGraph,
    k: usize,
) -> Result<Option<DiscretizationScheme>, OrderError> {
    find_order_with_budget(graph, k, DEFAULT_ORDER_BUDGET)
}

/// Searches every initial K-clique as a seed and extends it greedily.
///
/// Extension is monotone: placing a vertex never removes a candidate, so the
/// greedy closure of a seed covers all vertices iff some DDGP order with that
/// seed exists. `Ok(None)` is therefore a certificate that no order exists.
/// Seeds are tried in lexicographic order; the first scheme whose clusters are
/// all cliques is returned, otherwise the first scheme found.
pub fn find_order_with_budget(
    graph: &WeightedGraph,
    k: usize,
    budget: u64,
) -> Result<Option<DiscretizationScheme>, OrderError> {
    if k == 0 {
        return Err(OrderError::ZeroDimension);
    }
    let n = graph.n();
    if n < k {
        return Ok(None);
    }
    let mut spent = 0u64;
    let mut first = None;
    for seed in k_cliques(graph, k) {
        if let Some(scheme) = extend_seed(graph, k, &seed, &mut spent, budget)? {
            if first_non_clique_cluster(graph, &scheme).is_none() {
                return Ok(Some(scheme));
            }
            first.get_or_insert(scheme);
        }
    }
    Ok(first)
}

/// All K-cliques, each sorted, in lexicographic order.
fn k_cliques(graph: &WeightedGraph, k: usize) -> Vec<Vec<usize>> {
    fn grow(
        graph: &WeightedGraph,
        k: usize,
        current: &mut Vec<usize>,
        candidates: &[usize],
        out: &mut Vec<Vec<usize>>,
    ) {
        if current.len() == k {
            out.push(current.clone());
            return;
        }
        for (idx, &v) in candidates.iter().enumerate() {
            let next: Vec<usize> = candidates[idx + 1..]
                .iter()
                .copied()
                .filter(|&u| graph.has_edge(u, v))
                .collect();
            if current.len() + 1 + next.len() < k {
                continue;
            }
            current.push(v);
            grow(graph, k, current, &next, out);
            current.pop();
        }
    }
    let all: Vec<usize> = (1..=graph.n()).collect();
    let mut out = Vec::new();
    grow(graph, k, &mut Vec::new(), &all, &mut out);
    out
}

fn extend_seed(
    graph: &WeightedGraph,
    k: usize,
    seed: &[usize],
    spent: &mut u64,
    budget: u64,
) -> Result<Option<DiscretizationScheme>, OrderError> {
    let n = graph.n();
    let mut placed = vec![false; n + 1];
    let mut order = seed.to_vec();
    for &v in seed {
        placed[v] = true;
    }
    let mut clusters = BTreeMap::new();
    while order.len() < n {
        let mut best: Option<(usize, usize, Vec<usize>)> = None;
        for v in 1..=n {
            if placed[v] {
                continue;
            }
            let earlier: Vec<usize> = graph.neighbours(v).filter(|&u| placed[u]).collect();
            if earlier.len() < k {
                continue;
            }
            let (score, cluster) = best_cluster(graph, &earlier, k, spent, budget)?;
            if best.as_ref().is_none_or(|(s, _, _)| score > *s) {
                best = Some((score, v, cluster));
            }
        }
        let Some((_, v, cluster)) = best else {
            return Ok(None);
        };
        placed[v] = true;
        order.push(v);
        clusters.insert(v, cluster);
    }
    Ok(Some(DiscretizationScheme::new(k, order, clusters)))
}

/// K-subset of `candidates` (ascending) with the most internal edges; ties go
/// to the lexicographically smallest subset.
fn best_cluster(
    graph: &WeightedGraph,
    candidates: &[usize],
    k: usize,
    spent: &mut u64,
    budget: u64,
) -> Result<(usize, Vec<usize>), OrderError> {
    let full = k * (k - 1) / 2;
    let mut best: Option<(usize, Vec<usize>)> = None;
    let mut indices: Vec<usize> = (0..k).collect();
    loop {
        *spent += 1;
        if *spent > budget {
            return Err(OrderError::BudgetExceeded(budget));
        }
        let subset: Vec<usize> = indices.iter().map(|&i| candidates[i]).collect();
        let score = graph.adjacent_pairs(&subset);
        if best.as_ref().is_none_or(|(s, _)| score > *s) {
            best = Some((score, subset));
            if score == full {
                break;
            }
        }
        if !next_combination(&mut indices, candidates.len()) {
            break;
        }
    }
    Ok(best.expect("at least one subset"))
}

/// Picks clusters for a fixed order using the same preference as
/// [`find_order`]. Returns `None` if some vertex has fewer than `k` adjacent
/// predecessors.
pub fn complete_scheme(
    graph: &WeightedGraph,
    k: usize,
    order: Vec<usize>,
) -> Result<Option<DiscretizationScheme>, OrderError> {
    if k == 0 {
        return Err(OrderError::ZeroDimension);
    }
    let mut spent = 0;
    let mut clusters = BTreeMap::new();
    let mut placed = vec![false; graph.n() + 1];
    for (r, &v) in order.iter().enumerate() {
        if v == 0 || v > graph.n() {
            return Ok(None);
        }
        if r >= k {
            let earlier: Vec<usize> = graph.neighbours(v).filter(|&u| placed[u]).collect();
            if earlier.len() < k {
                return Ok(None);
            }
            let (_, cluster) = best_cluster(graph, &earlier, k, &mut spent, DEFAULT_ORDER_BUDGET)?;
            clusters.insert(v, cluster);
        }
        placed[v] = true;
    }
    Ok(Some(DiscretizationScheme::new(k, order, clusters)))
}
