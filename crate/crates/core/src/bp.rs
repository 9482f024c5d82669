//! Branch-and-Prune enumeration of DDGP realizations.
//!
//! The initial clique is placed canonically, then each later vertex is
//! trilaterated from its cluster and the search branches on the returned
//! positions. Positions that violate a pruning edge to an earlier vertex are
//! discarded. Mirror images are distinct solutions: the first trilaterated
//! vertex branches like every other one unless [`BpConfig::fix_mirror`] is
//! set.

use std::collections::HashSet;
use std::fmt;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::edm::{is_valid_edm, squared_distance, EdmError, Realization, SquaredEdm};
use crate::instance::{validate_scheme, DiscretizationScheme, ValidationReport, WeightedGraph};
use crate::trilateration::{trilaterate, DegenerateReason, Trilateration};

#[derive(Debug, Clone, PartialEq)]
pub struct BpConfig {
    /// Relative tolerance handed to the trilateration kernel.
    pub tol_trilateration: f64,
    /// A pruning edge holds when `|‖x_i − x_j‖ − d_ij| ≤ tol_prune · d_ij`.
    pub tol_prune: f64,
    /// Upper bound on tree nodes, the root (initial clique) included.
    pub max_nodes: u64,
    /// Enumerate every leaf, or stop at the first one.
    pub collect_all: bool,
    /// Worker threads for subtree exploration; 0 means available parallelism.
    pub threads: usize,
    /// Keep only the first branch at the first trilaterated vertex, which
    /// removes the global mirror image.
    pub fix_mirror: bool,
}

pub const DEFAULT_TOL_TRILATERATION: f64 = 1e-9;
pub const DEFAULT_TOL_PRUNE: f64 = 1e-6;
pub const DEFAULT_MAX_NODES: u64 = 10_000_000;

impl Default for BpConfig {
    fn default() -> Self {
        Self {
            tol_trilateration: DEFAULT_TOL_TRILATERATION,
            tol_prune: DEFAULT_TOL_PRUNE,
            max_nodes: DEFAULT_MAX_NODES,
            collect_all: true,
            threads: 1,
            fix_mirror: false,
        }
    }
}

impl BpConfig {
    pub fn validate(&self) -> Result<(), BpError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.tol_trilateration) {
            return Err(BpError::InvalidConfig("tol_trilateration must be positive"));
        }
        if !positive(self.tol_prune) {
            return Err(BpError::InvalidConfig("tol_prune must be positive"));
        }
        if self.max_nodes == 0 {
            return Err(BpError::InvalidConfig("max_nodes must be at least 1"));
        }
        Ok(())
    }

    fn worker_threads(&self) -> usize {
        match self.threads {
            0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
            t => t,
        }
    }
}

/// One branching decision. Ordered like the symbols `+`, `-`, `=`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Branch {
    Plus,
    Minus,
    Single,
}

impl Branch {
    pub fn symbol(self) -> char {
        match self {
            Branch::Plus => '+',
            Branch::Minus => '-',
            Branch::Single => '=',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BranchString(pub Vec<Branch>);

impl fmt::Display for BranchString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in &self.0 {
            write!(f, "{}", b.symbol())?;
        }
        Ok(())
    }
}

impl Serialize for BranchString {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Solution {
    pub branch: BranchString,
    /// Row `v − 1` holds vertex `v`.
    #[serde(rename = "coords")]
    pub realization: Realization,
}

/// Leaves of the search tree, sorted by branch string.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
#[serde(transparent)]
pub struct SolutionSet {
    solutions: Vec<Solution>,
}

impl SolutionSet {
    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Solution> {
        self.solutions.iter()
    }

    pub fn as_slice(&self) -> &[Solution] {
        &self.solutions
    }
}

/// Per-level tree statistics; every vector is indexed by rank (0-based
/// position in the order).
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct BpStats {
    /// Distinct positions of each vertex that extend to a full realization.
    /// A vertex's position is a function of the branch decisions on its
    /// cluster ancestry, so positions are counted as distinct projections of
    /// the leaf branch strings onto that ancestry.
    pub a: Vec<u64>,
    /// Tree nodes of each level that lead to at least one leaf.
    pub live_nodes: Vec<u64>,
    /// Tree nodes created at each level.
    pub level_nodes: Vec<u64>,
    pub nodes_expanded: u64,
    /// Nodes created from a tangent (single-position) trilateration.
    pub single_nodes: u64,
    pub max_width_observed: u64,
    pub depth_reached: usize,
}

impl BpStats {
    /// `a` for a vertex label.
    pub fn a_of(&self, scheme: &DiscretizationScheme, vertex: usize) -> Option<u64> {
        scheme.rank(vertex).and_then(|r| self.a.get(r).copied())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Answer {
    #[serde(rename = "YES")]
    Yes,
    #[serde(rename = "NO")]
    No,
}

/// A subtree abandoned because trilateration was degenerate.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub vertex: usize,
    /// 1-based position of `vertex` in the order.
    pub rank: usize,
    /// Branch decisions leading to the degenerate node.
    pub branch: BranchString,
    pub reason: DegenerateReason,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "vertex {} (position {}, branch `{}`): {}",
            self.vertex, self.rank, self.branch, self.reason
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome {
    pub answer: Answer,
    pub solutions: SolutionSet,
    pub stats: BpStats,
    pub diagnostics: Vec<Diagnostic>,
    /// False when the search stopped at the first leaf.
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BpError {
    #[error("invalid discretization scheme: {0}")]
    InvalidScheme(ValidationReport),
    #[error("initial clique {vertices:?} has no realization in R^{k}")]
    CliqueInfeasible { vertices: Vec<usize>, k: usize },
    #[error("search exceeded the node budget of {max_nodes}")]
    BudgetExceeded { max_nodes: u64 },
    #[error("no realization found and {} subtree(s) hit degenerate trilateration; first: {}", .diagnostics.len(), .diagnostics[0])]
    DegenerateBase { diagnostics: Vec<Diagnostic> },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

/// Canonical coordinates of the first `k` ordered vertices: the first at the
/// origin, vertex `m` in the span of the first `m − 1` axes with a positive
/// last coordinate (zero if the clique is affinely degenerate).
pub fn realize_initial_clique(
    graph: &WeightedGraph,
    scheme: &DiscretizationScheme,
    tol: f64,
) -> Result<Vec<Vec<f64>>, BpError> {
    let k = scheme.k();
    let initial = scheme.initial();
    let infeasible = || BpError::CliqueInfeasible {
        vertices: initial.to_vec(),
        k,
    };
    let mut sq = vec![vec![0.0; k]; k];
    for a in 0..k {
        for b in 0..k {
            if a != b {
                let d = graph
                    .weight(initial[a], initial[b])
                    .ok_or_else(infeasible)?;
                sq[a][b] = d * d;
            }
        }
    }
    let edm = SquaredEdm::from_rows(&sq).map_err(|_| infeasible())?;
    if !is_valid_edm(&edm, k, tol) {
        return Err(infeasible());
    }
    let scale = sq.iter().flatten().fold(0.0f64, |m, v| m.max(*v));

    // Gram matrix relative to the first vertex, factored as L Lᵀ.
    let m = k - 1;
    let gram = |a: usize, b: usize| (sq[0][a + 1] + sq[0][b + 1] - sq[a + 1][b + 1]) / 2.0;
    let mut l = vec![vec![0.0; m]; m];
    for c in 0..m {
        let diag = gram(c, c) - (0..c).map(|p| l[c][p] * l[c][p]).sum::<f64>();
        let pivot = if diag > tol * scale { diag.sqrt() } else { 0.0 };
        l[c][c] = pivot;
        for r in c + 1..m {
            l[r][c] = if pivot > 0.0 {
                (gram(r, c) - (0..c).map(|p| l[r][p] * l[c][p]).sum::<f64>()) / pivot
            } else {
                0.0
            };
        }
    }
    let mut points = vec![vec![0.0; k]];
    for row in &l {
        let mut p = vec![0.0; k];
        p[..m].copy_from_slice(row);
        points.push(p);
    }
    Ok(points)
}

/// Largest relative edge residual `|‖x_i − x_j‖ − d_ij| / d_ij`.
pub fn verify_realization(graph: &WeightedGraph, x: &Realization) -> Result<f64, EdmError> {
    if x.n() != graph.n() {
        return Err(EdmError::Dimension {
            row: x.n(),
            expected: graph.n(),
            found: x.n(),
        });
    }
    Ok(graph
        .edges()
        .map(|(i, j, d)| (squared_distance(x.point(i - 1), x.point(j - 1)).sqrt() - d).abs() / d)
        .fold(0.0, f64::max))
}

struct Plan {
    n: usize,
    k: usize,
    order: Vec<usize>,
    /// Cluster ranks and distances, indexed by rank (empty below `k`).
    clusters: Vec<Vec<(usize, f64)>>,
    /// Earlier-ranked pruning neighbours and distances, indexed by rank.
    prune: Vec<Vec<(usize, f64)>>,
    /// Branch indices (`rank − k`) that determine each vertex's position.
    ancestry: Vec<Vec<usize>>,
}

impl Plan {
    fn new(graph: &WeightedGraph, scheme: &DiscretizationScheme) -> Self {
        let n = graph.n();
        let k = scheme.k();
        let order = scheme.order().to_vec();
        let mut clusters = vec![Vec::new(); n];
        let mut prune = vec![Vec::new(); n];
        let mut ancestry: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (r, &v) in order.iter().enumerate().skip(k) {
            let members = scheme.cluster(v).unwrap_or_default();
            let mut anc = vec![r - k];
            for &u in members {
                let ru = scheme.rank(u).expect("validated");
                clusters[r].push((ru, graph.weight(u, v).expect("validated")));
                anc.extend_from_slice(&ancestry[ru]);
            }
            anc.sort_unstable();
            anc.dedup();
            ancestry[r] = anc;
            for u in graph.neighbours(v) {
                let ru = scheme.rank(u).expect("validated");
                if ru < r && !members.contains(&u) {
                    prune[r].push((ru, graph.weight(u, v).expect("edge")));
                }
            }
        }
        Self {
            n,
            k,
            order,
            clusters,
            prune,
            ancestry,
        }
    }
}

struct Node {
    rank: usize,
    positions: Vec<f64>,
    branch: Vec<Branch>,
}

#[derive(Default)]
struct Partial {
    leaves: Vec<(Vec<Branch>, Vec<f64>)>,
    level_nodes: Vec<u64>,
    diagnostics: Vec<Diagnostic>,
    depth: usize,
    single_nodes: u64,
}

impl Partial {
    fn new(n: usize) -> Self {
        Self {
            level_nodes: vec![0; n],
            ..Self::default()
        }
    }

    fn absorb(&mut self, other: Partial) {
        self.leaves.extend(other.leaves);
        for (a, b) in self.level_nodes.iter_mut().zip(other.level_nodes) {
            *a += b;
        }
        self.diagnostics.extend(other.diagnostics);
        self.depth = self.depth.max(other.depth);
        self.single_nodes += other.single_nodes;
    }
}

struct Search<'a> {
    plan: &'a Plan,
    config: &'a BpConfig,
    nodes: AtomicU64,
    stop: AtomicBool,
}

enum Expansion {
    Children(Vec<(Branch, Vec<f64>)>),
    Degenerate(DegenerateReason),
}

impl Search<'_> {
    fn count_node(&self) -> Result<(), BpError> {
        let used = self.nodes.fetch_add(1, Ordering::SeqCst) + 1;
        if used > self.config.max_nodes {
            self.stop.store(true, Ordering::SeqCst);
            return Err(BpError::BudgetExceeded {
                max_nodes: self.config.max_nodes,
            });
        }
        Ok(())
    }

    fn expand(&self, rank: usize, positions: &[f64]) -> Expansion {
        let k = self.plan.k;
        let cluster = &self.plan.clusters[rank];
        let base: Vec<&[f64]> = cluster
            .iter()
            .map(|&(r, _)| &positions[r * k..(r + 1) * k])
            .collect();
        let dist: Vec<f64> = cluster.iter().map(|&(_, d)| d).collect();
        let result = trilaterate(&base, &dist, self.config.tol_trilateration)
            .expect("validated instance yields well-formed trilateration input");
        let mut candidates = match result {
            Trilateration::NoPosition => Vec::new(),
            Trilateration::TwoPositions { plus, minus } => {
                vec![(Branch::Plus, plus), (Branch::Minus, minus)]
            }
            Trilateration::SinglePosition(y) => vec![(Branch::Single, y)],
            Trilateration::Degenerate(reason) => return Expansion::Degenerate(reason),
        };
        if self.config.fix_mirror && rank == k {
            candidates.truncate(1);
        }
        let tol = self.config.tol_prune;
        candidates.retain(|(_, y)| {
            self.plan.prune[rank].iter().all(|&(r, d)| {
                let got = squared_distance(&positions[r * k..(r + 1) * k], y).sqrt();
                (got - d).abs() <= tol * d
            })
        });
        Expansion::Children(candidates)
    }

    fn diagnostic(&self, rank: usize, branch: &[Branch], reason: DegenerateReason) -> Diagnostic {
        Diagnostic {
            vertex: self.plan.order[rank],
            rank: rank + 1,
            branch: BranchString(branch.to_vec()),
            reason,
        }
    }

    fn dfs(&self, node: &mut Node, out: &mut Partial) -> Result<(), BpError> {
        let rank = node.rank;
        out.depth = out.depth.max(rank);
        if rank == self.plan.n {
            out.leaves
                .push((node.branch.clone(), node.positions.clone()));
            if !self.config.collect_all {
                self.stop.store(true, Ordering::SeqCst);
            }
            return Ok(());
        }
        let children = match self.expand(rank, &node.positions) {
            Expansion::Children(c) => c,
            Expansion::Degenerate(reason) => {
                out.diagnostics
                    .push(self.diagnostic(rank, &node.branch, reason));
                return Ok(());
            }
        };
        let k = self.plan.k;
        for (b, y) in children {
            if self.stop.load(Ordering::SeqCst) {
                break;
            }
            self.count_node()?;
            out.level_nodes[rank] += 1;
            out.single_nodes += u64::from(b == Branch::Single);
            node.positions[rank * k..(rank + 1) * k].copy_from_slice(&y);
            node.branch.push(b);
            node.rank += 1;
            let r = self.dfs(node, out);
            node.rank -= 1;
            node.branch.pop();
            r?;
        }
        Ok(())
    }

    /// Breadth-first expansion until there are enough independent subtrees.
    fn frontier(&self, root: Node, target: usize, out: &mut Partial) -> Result<Vec<Node>, BpError> {
        let k = self.plan.k;
        let mut level = vec![root];
        while level.len() < target && level.iter().any(|n| n.rank < self.plan.n) {
            let mut next = Vec::with_capacity(level.len() * 2);
            for node in level {
                if node.rank == self.plan.n {
                    next.push(node);
                    continue;
                }
                match self.expand(node.rank, &node.positions) {
                    Expansion::Degenerate(reason) => {
                        out.diagnostics
                            .push(self.diagnostic(node.rank, &node.branch, reason));
                        out.depth = out.depth.max(node.rank);
                    }
                    Expansion::Children(children) => {
                        out.depth = out.depth.max(node.rank);
                        for (b, y) in children {
                            self.count_node()?;
                            out.level_nodes[node.rank] += 1;
                            out.single_nodes += u64::from(b == Branch::Single);
                            let mut positions = node.positions.clone();
                            positions[node.rank * k..(node.rank + 1) * k].copy_from_slice(&y);
                            let mut branch = node.branch.clone();
                            branch.push(b);
                            next.push(Node {
                                rank: node.rank + 1,
                                positions,
                                branch,
                            });
                        }
                    }
                }
            }
            level = next;
        }
        Ok(level)
    }
}

/// Enumerates the realizations of a DDGP instance under `scheme`.
///
/// Degenerate trilaterations abandon their subtree and are reported in
/// [`SolveOutcome::diagnostics`]; if nothing else was found the answer cannot
/// be decided and [`BpError::DegenerateBase`] is returned.
pub fn solve(
    graph: &WeightedGraph,
    scheme: &DiscretizationScheme,
    config: &BpConfig,
) -> Result<SolveOutcome, BpError> {
    config.validate()?;
    let report = validate_scheme(graph, scheme);
    if !report.is_ok() {
        return Err(BpError::InvalidScheme(report));
    }
    let plan = Plan::new(graph, scheme);
    let (n, k) = (plan.n, plan.k);
    let clique = realize_initial_clique(graph, scheme, config.tol_trilateration)?;
    let mut positions = vec![0.0; n * k];
    for (r, p) in clique.iter().enumerate() {
        positions[r * k..(r + 1) * k].copy_from_slice(p);
    }

    let search = Search {
        plan: &plan,
        config,
        nodes: AtomicU64::new(0),
        stop: AtomicBool::new(false),
    };
    search.count_node()?;
    let mut root = Node {
        rank: k,
        positions,
        branch: Vec::new(),
    };
    let mut partial = Partial::new(n);
    let threads = config.worker_threads();
    if threads > 1 && config.collect_all && n > k {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|_| BpError::InvalidConfig("cannot start worker threads"))?;
        let tasks = search.frontier(root, threads * 8, &mut partial)?;
        let parts: Vec<Result<Partial, BpError>> = pool.install(|| {
            tasks
                .into_par_iter()
                .map(|mut node| {
                    let mut part = Partial::new(n);
                    search.dfs(&mut node, &mut part).map(|_| part)
                })
                .collect()
        });
        for part in parts {
            partial.absorb(part?);
        }
    } else {
        search.dfs(&mut root, &mut partial)?;
    }

    let Partial {
        mut leaves,
        level_nodes,
        mut diagnostics,
        depth,
        single_nodes,
    } = partial;
    leaves.sort_by(|a, b| a.0.cmp(&b.0));
    diagnostics.sort_by(|a, b| a.branch.cmp(&b.branch).then(a.rank.cmp(&b.rank)));
    if leaves.is_empty() && !diagnostics.is_empty() {
        return Err(BpError::DegenerateBase { diagnostics });
    }

    let answer = if leaves.is_empty() {
        Answer::No
    } else {
        Answer::Yes
    };
    let mut stats = statistics(&plan, &leaves, level_nodes, &search, depth);
    stats.single_nodes = single_nodes;
    let solutions = leaves
        .into_iter()
        .map(|(branch, by_rank)| {
            let mut coords = vec![0.0; n * k];
            for (r, &v) in plan.order.iter().enumerate() {
                coords[(v - 1) * k..v * k].copy_from_slice(&by_rank[r * k..(r + 1) * k]);
            }
            Solution {
                branch: BranchString(branch),
                realization: Realization::from_flat(k, coords).expect("finite coordinates"),
            }
        })
        .collect();
    Ok(SolveOutcome {
        answer,
        solutions: SolutionSet { solutions },
        stats,
        diagnostics,
        complete: config.collect_all,
    })
}

fn statistics(
    plan: &Plan,
    leaves: &[(Vec<Branch>, Vec<f64>)],
    mut level_nodes: Vec<u64>,
    search: &Search<'_>,
    depth: usize,
) -> BpStats {
    let (n, k) = (plan.n, plan.k);
    let yes = u64::from(!leaves.is_empty());
    for slot in level_nodes.iter_mut().take(k) {
        *slot = 1;
    }

    // Leaves are sorted, so a new prefix of length L starts wherever the
    // common prefix with the previous leaf is shorter than L.
    let mut live = vec![0u64; n];
    for slot in live.iter_mut().take(k) {
        *slot = yes;
    }
    for (idx, (branch, _)) in leaves.iter().enumerate() {
        let common = if idx == 0 {
            0
        } else {
            let prev = &leaves[idx - 1].0;
            branch.iter().zip(prev).take_while(|(a, b)| a == b).count()
        };
        for len in common + 1..=branch.len() {
            live[k + len - 1] += 1;
        }
    }

    let mut a = live.clone();
    for r in k..n {
        let anc = &plan.ancestry[r];
        let is_prefix = anc.len() == r - k + 1;
        if is_prefix {
            continue;
        }
        let distinct: HashSet<Vec<Branch>> = leaves
            .iter()
            .map(|(branch, _)| anc.iter().map(|&i| branch[i]).collect())
            .collect();
        a[r] = distinct.len() as u64;
    }

    BpStats {
        a,
        live_nodes: live,
        max_width_observed: level_nodes.iter().copied().max().unwrap_or(0),
        level_nodes,
        nodes_expanded: search.nodes.load(Ordering::SeqCst),
        single_nodes: 0,
        depth_reached: depth.max(k),
    }
}
