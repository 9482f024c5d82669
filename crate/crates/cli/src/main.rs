use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use ddgp_core::bp::{self, solve, verify_realization, Answer, BpConfig, BpError, SolveOutcome};
use ddgp_core::counting::{check_recurrence, predict_count, CONVENTION};
use ddgp_core::edm::squared_distance;
use ddgp_core::experiments::{monte_carlo_samples, summarize, SamplingModel, UtopiaConfig};
use ddgp_core::generator::{generate, GenSpec};
use ddgp_core::instance::{
    classify, complete_scheme, find_order, partition_edges, read_instance_bytes, validate_scheme,
    write_instance, ClassKind, DiscretizationScheme, Instance, WeightedGraph,
};
use ddgp_core::sidecar::{read_realization_json, write_realization_json};

#[derive(Parser)]
#[command(name = "ddgp", version, about = "Discretizable distance geometry toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate realizations with Branch-and-Prune.
    Solve(SolveArgs),
    /// Report the class of an instance under its discretization scheme.
    Classify(ClassifyArgs),
    /// Search for a discretization order and clusters.
    Order(OrderArgs),
    /// Compare the a-priori solution count with the enumerated one.
    Count(CountArgs),
    /// Write a random instance with a planted realization.
    Generate(GenerateArgs),
    /// Check a realization against the edge weights of an instance.
    Verify(VerifyArgs),
    /// Monte Carlo over the five-vertex family with weight-dependent counts.
    Utopia(UtopiaArgs),
}

#[derive(Args)]
struct Output {
    /// Write the report here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct Tolerances {
    /// Relative tolerance on pruning-edge distances.
    #[arg(long, default_value_t = bp::DEFAULT_TOL_PRUNE)]
    tol_prune: f64,
    /// Relative tolerance of the trilateration kernel.
    #[arg(long, default_value_t = bp::DEFAULT_TOL_TRILATERATION)]
    tol_trilat: f64,
}

#[derive(Args)]
struct Search {
    #[command(flatten)]
    tol: Tolerances,
    /// Node budget of the search tree.
    #[arg(long, default_value_t = bp::DEFAULT_MAX_NODES)]
    max_nodes: u64,
    /// Worker threads; 0 uses the available parallelism.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Explore only the first branch at the first trilaterated vertex.
    #[arg(long)]
    fix_mirror: bool,
}

impl Search {
    fn config(&self, collect_all: bool) -> BpConfig {
        BpConfig {
            tol_trilateration: self.tol.tol_trilat,
            tol_prune: self.tol.tol_prune,
            max_nodes: self.max_nodes,
            collect_all,
            threads: self.threads,
            fix_mirror: self.fix_mirror,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    out: Output,
    #[command(flatten)]
    search: Search,
    /// Stop at the first realization.
    #[arg(long)]
    first: bool,
    /// Also write coordinates as CSV, one row per (solution, vertex).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct ClassifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct OrderArgs {
    #[arg(long)]
    input: PathBuf,
    /// Embedding dimension; defaults to the one in the file header.
    #[arg(long)]
    k: Option<usize>,
    #[command(flatten)]
    out: Output,
    /// Write the instance together with the order found.
    #[arg(long)]
    write_instance: Option<PathBuf>,
}

#[derive(Args)]
struct CountArgs {
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    out: Output,
    #[command(flatten)]
    search: Search,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// dmdgp, combinatorial or ddgp.
    #[arg(long, default_value = "dmdgp")]
    class: ClassKind,
    /// Probability of adding each remaining backward pair as a pruning edge.
    #[arg(long, default_value_t = 0.0)]
    prune_prob: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Instance file; standard output when absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Planted realization as JSON; defaults to `<output>.realization.json`.
    #[arg(long)]
    realization: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    /// Realization JSON as written by `generate`.
    #[arg(long)]
    realization: PathBuf,
    /// Largest accepted relative edge residual.
    #[arg(long, default_value_t = bp::DEFAULT_TOL_PRUNE)]
    tol_prune: f64,
    #[command(flatten)]
    out: Output,
}

#[derive(Args)]
struct UtopiaArgs {
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// independent or coupled.
    #[arg(long, default_value = "independent")]
    model: SamplingModel,
    /// Worker threads; 0 uses the available parallelism.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    #[command(flatten)]
    tol: Tolerances,
    /// Per-sample CSV of d24, d34 and the event.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[command(flatten)]
    out: Output,
}

/// A report plus the exit status it implies.
struct Outcome {
    report: serde_json::Value,
    success: bool,
}

impl Outcome {
    fn ok(report: impl Serialize) -> Result<Self> {
        Ok(Self {
            report: serde_json::to_value(report)?,
            success: true,
        })
    }

    fn failed(report: impl Serialize) -> Result<Self> {
        Ok(Self {
            report: serde_json::to_value(report)?,
            success: false,
        })
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, output) = match &cli.command {
        Command::Solve(a) => (run_solve(a), &a.out),
        Command::Classify(a) => (run_classify(a), &a.out),
        Command::Order(a) => (run_order(a), &a.out),
        Command::Count(a) => (run_count(a), &a.out),
        Command::Generate(a) => return finish(run_generate(a).map(|()| true)),
        Command::Verify(a) => (run_verify(a), &a.out),
        Command::Utopia(a) => (run_utopia(a), &a.out),
    };
    finish(result.and_then(|o| {
        emit(&o.report, output.output.as_deref())?;
        Ok(o.success)
    }))
}

fn finish(result: Result<bool>) -> ExitCode {
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn emit(report: &serde_json::Value, path: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_text(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("cannot write {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_instance(path: &Path) -> Result<Instance> {
    let bytes = fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    read_instance_bytes(&bytes).with_context(|| format!("{}", path.display()))
}

/// The scheme in the file, completed with clusters when only an order is
/// given, or searched for when absent.
fn resolve_scheme(inst: &Instance) -> Result<Option<(DiscretizationScheme, &'static str)>> {
    let n = inst.graph.n();
    match &inst.scheme {
        Some(s) if s.clusters().is_empty() && n > inst.k => {
            Ok(complete_scheme(&inst.graph, inst.k, s.order().to_vec())?.map(|s| (s, "completed")))
        }
        Some(s) => Ok(Some((s.clone(), "file"))),
        None => Ok(find_order(&inst.graph, inst.k)?.map(|s| (s, "found"))),
    }
}

fn require_scheme(inst: &Instance) -> Result<(DiscretizationScheme, &'static str)> {
    resolve_scheme(inst)?.ok_or_else(|| match &inst.scheme {
        Some(_) => anyhow!("the given order admits no valid clusters for K = {}", inst.k),
        None => anyhow!("no discretization order exists for K = {}", inst.k),
    })
}

fn check_valid(graph: &WeightedGraph, scheme: &DiscretizationScheme) -> Result<()> {
    let report = validate_scheme(graph, scheme);
    if !report.is_ok() {
        bail!("invalid discretization scheme: {report}");
    }
    Ok(())
}

#[derive(Serialize)]
struct StatsReport<'a> {
    /// By position in `order`.
    a: &'a [u64],
    nodes: u64,
    width: u64,
    depth: usize,
    level_nodes: &'a [u64],
    live_nodes: &'a [u64],
    single_nodes: u64,
}

fn stats_report(out: &SolveOutcome) -> StatsReport<'_> {
    let s = &out.stats;
    StatsReport {
        a: &s.a,
        nodes: s.nodes_expanded,
        width: s.max_width_observed,
        depth: s.depth_reached,
        level_nodes: &s.level_nodes,
        live_nodes: &s.live_nodes,
        single_nodes: s.single_nodes,
    }
}

fn run_solve(a: &SolveArgs) -> Result<Outcome> {
    let inst = load_instance(&a.input)?;
    let (scheme, source) = require_scheme(&inst)?;
    check_valid(&inst.graph, &scheme)?;
    let config = a.search.config(!a.first);
    let out = match solve(&inst.graph, &scheme, &config) {
        Ok(out) => out,
        Err(BpError::CliqueInfeasible { vertices, k }) => {
            return Outcome::ok(json!({
                "status": "NO",
                "count": 0,
                "reason": format!("initial clique {vertices:?} has no realization in R^{k}"),
                "scheme_source": source,
                "order": scheme.order(),
                "convention": CONVENTION,
                "solutions": [],
            }))
        }
        Err(BpError::DegenerateBase { diagnostics }) => {
            return Outcome::failed(json!({
                "status": "DEGENERATE",
                "count": 0,
                "scheme_source": source,
                "order": scheme.order(),
                "convention": CONVENTION,
                "solutions": [],
                "diagnostics": diagnostics,
            }))
        }
        Err(e) => return Err(e.into()),
    };
    let max_residual = out
        .solutions
        .iter()
        .map(|s| verify_realization(&inst.graph, &s.realization))
        .try_fold(0.0f64, |m, r| r.map(|r| m.max(r)))?;
    if let Some(path) = &a.csv {
        let mut csv = String::from("solution,branch,vertex");
        for c in 1..=inst.k {
            let _ = write!(csv, ",x{c}");
        }
        csv.push('\n');
        for (i, s) in out.solutions.iter().enumerate() {
            for (v, p) in s.realization.points().enumerate() {
                let _ = write!(csv, "{},{},{}", i + 1, s.branch, v + 1);
                for c in p {
                    let _ = write!(csv, ",{c}");
                }
                csv.push('\n');
            }
        }
        write_text(Some(path), &csv)?;
    }
    Outcome::ok(json!({
        "status": out.answer,
        "count": out.solutions.len(),
        "complete": out.complete,
        "scheme_source": source,
        "order": scheme.order(),
        "convention": CONVENTION,
        "stats": stats_report(&out),
        "max_residual": max_residual,
        "solutions": out.solutions,
        "diagnostics": out.diagnostics,
    }))
}

fn class_report(graph: &WeightedGraph, scheme: &DiscretizationScheme) -> Result<serde_json::Value> {
    let class = classify(graph, scheme)?;
    let partition = partition_edges(graph, scheme)?;
    Ok(json!({
        "class": class.kind.name(),
        "ddgp": class.is_ddgp(),
        "combinatorial": class.is_combinatorial(),
        "dmdgp": class.is_dmdgp(),
        "pruning_free": class.pruning_free,
        "discretization_edges": partition.discretization,
        "pruning_edges": partition.pruning,
    }))
}

fn run_classify(a: &ClassifyArgs) -> Result<Outcome> {
    let inst = load_instance(&a.input)?;
    let Some((scheme, source)) = resolve_scheme(&inst)? else {
        return Outcome::ok(json!({
            "class": ClassKind::NotDiscretizable.name(),
            "ddgp": false,
            "combinatorial": false,
            "dmdgp": false,
            "scheme_source": if inst.scheme.is_some() { "completed" } else { "found" },
        }));
    };
    let validation = validate_scheme(&inst.graph, &scheme);
    if !validation.is_ok() {
        let messages: Vec<String> = validation.violations.iter().map(|v| v.to_string()).collect();
        return Outcome::failed(json!({
            "class": "invalid",
            "scheme_source": source,
            "violations": validation.violations,
            "messages": messages,
        }));
    }
    let mut report = class_report(&inst.graph, &scheme)?;
    report["scheme_source"] = json!(source);
    report["order"] = json!(scheme.order());
    Outcome::ok(report)
}

fn run_order(a: &OrderArgs) -> Result<Outcome> {
    let inst = load_instance(&a.input)?;
    let k = a.k.unwrap_or(inst.k);
    let Some(scheme) = find_order(&inst.graph, k)? else {
        return Outcome::ok(json!({ "found": false, "k": k }));
    };
    if let Some(path) = &a.write_instance {
        let with_scheme = Instance {
            graph: inst.graph.clone(),
            k,
            scheme: Some(scheme.clone()),
        };
        write_text(Some(path), &write_instance(&with_scheme))?;
    }
    let clusters: serde_json::Map<String, serde_json::Value> = scheme
        .clusters()
        .iter()
        .map(|(v, m)| (v.to_string(), json!(m)))
        .collect();
    let mut report = json!({
        "found": true,
        "k": k,
        "order": scheme.order(),
        "clusters": clusters,
    });
    report["classification"] = class_report(&inst.graph, &scheme)?;
    Outcome::ok(report)
}

fn run_count(a: &CountArgs) -> Result<Outcome> {
    let inst = load_instance(&a.input)?;
    let (scheme, source) = require_scheme(&inst)?;
    check_valid(&inst.graph, &scheme)?;
    let prediction = predict_count(&inst.graph, &scheme)?;
    let out = match solve(&inst.graph, &scheme, &a.search.config(true)) {
        Ok(out) => Some(out),
        Err(BpError::CliqueInfeasible { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let enumerated = out.as_ref().map_or(0, |o| o.solutions.len());
    let recurrence = match &out {
        Some(o) if o.answer == Answer::Yes => {
            Some(check_recurrence(&o.stats, &inst.graph, &scheme)?)
        }
        _ => None,
    };
    Outcome::ok(json!({
        "convention": CONVENTION,
        "scheme_source": source,
        "prediction": prediction,
        "enumerated": enumerated,
        "match": prediction.admits(enumerated as u128),
        "recurrence": recurrence,
        "a": out.as_ref().map(|o| &o.stats.a),
        "order": scheme.order(),
    }))
}

fn run_generate(a: &GenerateArgs) -> Result<()> {
    let spec = GenSpec::new(a.n, a.k, a.class, a.prune_prob, a.seed);
    let g = generate(&spec)?;
    let inst = Instance {
        graph: g.graph,
        k: a.k,
        scheme: Some(g.scheme),
    };
    let text = write_instance(&inst);
    write_text(a.output.as_deref(), &text)?;
    let sidecar = a.realization.clone().or_else(|| {
        a.output.as_ref().map(|p| {
            let mut s = p.clone().into_os_string();
            s.push(".realization.json");
            PathBuf::from(s)
        })
    });
    if let Some(path) = sidecar {
        write_text(Some(&path), &write_realization_json(&g.realization))?;
    }
    Ok(())
}

fn run_verify(a: &VerifyArgs) -> Result<Outcome> {
    let inst = load_instance(&a.input)?;
    let path = &a.realization;
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let x = read_realization_json(&text).with_context(|| format!("{}", path.display()))?;
    if x.n() != inst.graph.n() || x.dim() != inst.k {
        bail!(
            "{}: realization has {} points in R^{}, instance needs {} in R^{}",
            path.display(),
            x.n(),
            x.dim(),
            inst.graph.n(),
            inst.k
        );
    }
    let max = verify_realization(&inst.graph, &x)?;
    let worst = inst
        .graph
        .edges()
        .map(|(i, j, d)| {
            let got = squared_distance(x.point(i - 1), x.point(j - 1)).sqrt();
            (i, j, d, got, (got - d).abs() / d)
        })
        .fold(None, |best: Option<(usize, usize, f64, f64, f64)>, e| match best {
            Some(b) if b.4 >= e.4 => Some(b),
            _ => Some(e),
        });
    let valid = max <= a.tol_prune;
    let report = json!({
        "valid": valid,
        "max_relative_residual": max,
        "tolerance": a.tol_prune,
        "worst_edge": worst.map(|(i, j, d, got, _)| json!({
            "edge": [i, j],
            "weight": d,
            "distance": got,
        })),
    });
    if valid {
        Outcome::ok(report)
    } else {
        Outcome::failed(report)
    }
}

fn run_utopia(a: &UtopiaArgs) -> Result<Outcome> {
    let config = UtopiaConfig {
        samples: a.samples,
        seed: a.seed,
        model: a.model,
        bp: BpConfig {
            tol_trilateration: a.tol.tol_trilat,
            tol_prune: a.tol.tol_prune,
            ..BpConfig::default()
        },
        threads: a.threads,
    };
    let samples = monte_carlo_samples(&config)?;
    if let Some(path) = &a.csv {
        let mut csv = String::from("index,d24,d34,event\n");
        for s in &samples {
            let event = s.event.map_or("degenerate".to_string(), |e| e.to_string());
            let _ = writeln!(csv, "{},{},{},{}", s.index, s.d24, s.d34, event);
        }
        write_text(Some(path), &csv)?;
    }
    Outcome::ok(summarize(&config, &samples))
}
