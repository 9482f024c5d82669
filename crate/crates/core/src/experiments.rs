//! The five-vertex family whose solution count depends on two edge weights.
//!
//! Vertices 1..5 in order, `U_3 = {1, 2}`, `U_4 = {2, 3}`, `U_5 = {1, 4}`,
//! with `d12 = d15 = d23 = d45 = 1`, `d13 = √2` and free weights `d24`, `d34`.
//! Since `{1, 4}` is not an edge, the number of positions of vertex 4 that
//! extend to vertex 5 can be 0, 1 or 2, each with positive probability.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::bp::{solve, BpConfig, BpError};
use crate::instance::{DiscretizationScheme, WeightedGraph};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Analytic {
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

pub fn analytic_probabilities() -> Analytic {
    let s3 = 3f64.sqrt();
    let s5 = 5f64.sqrt();
    let d = (5.0 - 2.0 * s3).sqrt();
    Analytic {
        p0: 2.0 / (s5 + 1.0),
        p1: (s5 - d - s3 + 1.0) / (s5 + 1.0),
        p2: (d + s3 - 2.0) / (s5 + 1.0),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Thresholds {
    pub epsilon_star: f64,
    pub d24_star: f64,
}

pub fn thresholds() -> Thresholds {
    let s3 = 3f64.sqrt();
    Thresholds {
        epsilon_star: s3 - 1.0,
        d24_star: (5.0 - 2.0 * s3).sqrt(),
    }
}

/// The family member with the given free weights.
pub fn example_instance(
    d24: f64,
    d34: f64,
) -> Result<(WeightedGraph, DiscretizationScheme), ClassifyError> {
    let g = WeightedGraph::from_edges(
        5,
        [
            (1, 2, 1.0),
            (1, 3, 2f64.sqrt()),
            (1, 5, 1.0),
            (2, 3, 1.0),
            (2, 4, d24),
            (3, 4, d34),
            (4, 5, 1.0),
        ],
    )
    .map_err(|e| ClassifyError::InvalidDistance(e.to_string()))?;
    let clusters = [(3, vec![1, 2]), (4, vec![2, 3]), (5, vec![1, 4])].into();
    Ok((
        g,
        DiscretizationScheme::new(2, vec![1, 2, 3, 4, 5], clusters),
    ))
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ClassifyError {
    #[error("invalid distance: {0}")]
    InvalidDistance(String),
    #[error("degenerate trilateration: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Solver(#[from] BpError),
}

/// Number of positions of vertex 4 that extend to a full realization, in the
/// frame where vertex 3 is fixed.
pub fn classify_instance(d24: f64, d34: f64, config: &BpConfig) -> Result<u8, ClassifyError> {
    if !(d24 > 0.0 && d34 > 0.0 && d24.is_finite() && d34.is_finite()) {
        return Err(ClassifyError::InvalidDistance(format!(
            "d24 = {d24}, d34 = {d34} must be positive"
        )));
    }
    let (g, s) = example_instance(d24, d34)?;
    let config = BpConfig {
        collect_all: true,
        fix_mirror: true,
        threads: 1,
        ..config.clone()
    };
    let out = match solve(&g, &s, &config) {
        Ok(out) => out,
        Err(BpError::DegenerateBase { diagnostics }) => {
            return Err(ClassifyError::Degenerate(diagnostics[0].to_string()))
        }
        Err(e) => return Err(e.into()),
    };
    if let Some(d) = out.diagnostics.first() {
        return Err(ClassifyError::Degenerate(d.to_string()));
    }
    if out.stats.single_nodes > 0 {
        return Err(ClassifyError::Degenerate(format!(
            "{} tangent intersection(s)",
            out.stats.single_nodes
        )));
    }
    Ok(out.stats.a[3] as u8)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SamplingModel {
    /// `d24 ~ U[1, √5]` and `d34 ~ U[0, 2]` independently.
    #[serde(rename = "independent")]
    IndependentUniform,
    /// `ε ~ U[0, 2]`, `d34 = ε`, `d24 = √(1 + ε²)`.
    #[serde(rename = "coupled")]
    CoupledEpsilon,
}

impl FromStr for SamplingModel {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "independent" => Ok(Self::IndependentUniform),
            "coupled" => Ok(Self::CoupledEpsilon),
            other => Err(format!("unknown sampling model `{other}`")),
        }
    }
}

impl fmt::Display for SamplingModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IndependentUniform => "independent",
            Self::CoupledEpsilon => "coupled",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtopiaConfig {
    pub samples: u64,
    pub seed: u64,
    pub model: SamplingModel,
    pub bp: BpConfig,
    /// Worker threads; 0 means available parallelism.
    pub threads: usize,
}

impl UtopiaConfig {
    pub fn new(samples: u64, seed: u64, model: SamplingModel) -> Self {
        Self {
            samples,
            seed,
            model,
            bp: BpConfig::default(),
            threads: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub index: u64,
    pub d24: f64,
    pub d34: f64,
    /// `None` for a degenerate sample.
    pub event: Option<u8>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct EventCounts {
    pub zero: u64,
    pub one: u64,
    pub two: u64,
    pub degenerate: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Frequencies {
    pub zero: f64,
    pub one: f64,
    pub two: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UtopiaReport {
    pub model: SamplingModel,
    pub samples: u64,
    pub seed: u64,
    pub analytic: Analytic,
    pub thresholds: Thresholds,
    pub counts: EventCounts,
    /// Over the non-degenerate samples.
    pub empirical: Frequencies,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum UtopiaError {
    #[error("samples must be at least 1")]
    NoSamples,
    #[error("cannot start worker threads")]
    Threads,
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

fn draw(seed: u64, index: u64, model: SamplingModel) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    match model {
        SamplingModel::IndependentUniform => {
            let d24 = rng.random_range(1.0..=5f64.sqrt());
            let d34 = rng.random_range(0.0..=2.0);
            (d24, d34)
        }
        SamplingModel::CoupledEpsilon => {
            let eps: f64 = rng.random_range(0.0..=2.0);
            ((1.0 + eps * eps).sqrt(), eps)
        }
    }
}

fn run_sample(config: &UtopiaConfig, index: u64) -> Result<Sample, UtopiaError> {
    let (d24, d34) = draw(config.seed, index, config.model);
    let event = if d34 == 0.0 {
        None
    } else {
        match classify_instance(d24, d34, &config.bp) {
            Ok(e) => Some(e),
            Err(ClassifyError::Degenerate(_)) => None,
            Err(e) => return Err(e.into()),
        }
    };
    Ok(Sample {
        index,
        d24,
        d34,
        event,
    })
}

/// Draws and classifies every sample. Sample `i` uses its own ChaCha8 stream
/// `i` under the seed, so the result does not depend on scheduling.
pub fn monte_carlo_samples(config: &UtopiaConfig) -> Result<Vec<Sample>, UtopiaError> {
    if config.samples == 0 {
        return Err(UtopiaError::NoSamples);
    }
    let threads = match config.threads {
        0 => std::thread::available_parallelism().map_or(1, |n| n.get()),
        t => t,
    };
    if threads <= 1 {
        return (0..config.samples)
            .map(|i| run_sample(config, i))
            .collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|_| UtopiaError::Threads)?;
    pool.install(|| {
        (0..config.samples)
            .into_par_iter()
            .map(|i| run_sample(config, i))
            .collect()
    })
}

pub fn summarize(config: &UtopiaConfig, samples: &[Sample]) -> UtopiaReport {
    let mut counts = EventCounts::default();
    for s in samples {
        match s.event {
            Some(0) => counts.zero += 1,
            Some(1) => counts.one += 1,
            Some(_) => counts.two += 1,
            None => counts.degenerate += 1,
        }
    }
    let classified = (counts.zero + counts.one + counts.two).max(1) as f64;
    let empirical = Frequencies {
        zero: counts.zero as f64 / classified,
        one: counts.one as f64 / classified,
        two: counts.two as f64 / classified,
    };
    let notes = vec![
        "analytic values are the closed forms P0 = 2/(√5+1), P1 = (√5 − √(5−2√3) − √3 + 1)/(√5+1), \
         P2 = (√(5−2√3) + √3 − 2)/(√5+1), evaluated as written"
            .to_string(),
        "the P1 numerator differs from the interval-length sum √5 − √(5−2√3) + 3 − √3, and neither \
         sampling model is expected to reproduce the analytic values; only positivity of all three \
         events is asserted"
            .to_string(),
        "events count positions of vertex 4 that extend to vertex 5 with vertex 3 fixed, \
         so the mirror image is not counted"
            .to_string(),
    ];
    UtopiaReport {
        model: config.model,
        samples: config.samples,
        seed: config.seed,
        analytic: analytic_probabilities(),
        thresholds: thresholds(),
        counts,
        empirical,
        notes,
    }
}

pub fn monte_carlo(config: &UtopiaConfig) -> Result<UtopiaReport, UtopiaError> {
    let samples = monte_carlo_samples(config)?;
    Ok(summarize(config, &samples))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify(d24: f64, d34: f64) -> Result<u8, ClassifyError> {
        classify_instance(d24, d34, &BpConfig::default())
    }

    #[test]
    fn probabilities() {
        let p = analytic_probabilities();
        assert!((p.p0 - 0.618).abs() < 1e-3);
        assert!((p.p1 - 0.0818).abs() < 1e-3);
        assert!((p.p2 - 0.300).abs() < 1e-3);
        assert!((p.p0 + p.p1 + p.p2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn threshold_on_coupled_curve() {
        let t = thresholds();
        assert!((t.d24_star.powi(2) - (1.0 + t.epsilon_star.powi(2))).abs() < 1e-14);
    }

    #[test]
    fn events() {
        assert_eq!(classify(5f64.sqrt(), 2.0), Ok(1));
        assert_eq!(classify((1.0f64 + 0.09).sqrt(), 0.3), Ok(2));
        assert_eq!(classify(2.2, 0.1), Ok(0));
        assert!(matches!(
            classify(1.0, 0.0),
            Err(ClassifyError::InvalidDistance(_))
        ));
    }

    #[test]
    fn tangency_is_degenerate() {
        // d24 = 2, d34 = 1 puts vertex 4 on the line through 2 and 3.
        assert!(matches!(
            classify(2.0, 1.0),
            Err(ClassifyError::Degenerate(_))
        ));
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let mut c = UtopiaConfig::new(500, 9, SamplingModel::IndependentUniform);
        let a = monte_carlo_samples(&c).unwrap();
        c.threads = 4;
        let b = monte_carlo_samples(&c).unwrap();
        assert_eq!(a, b);
        let report = summarize(&c, &a);
        let f = report.empirical;
        assert!((f.zero + f.one + f.two - 1.0).abs() <= 4.0 * f64::EPSILON);
    }

    #[test]
    fn coupled_never_loses_vertex_four() {
        let c = UtopiaConfig::new(2000, 3, SamplingModel::CoupledEpsilon);
        let r = monte_carlo(&c).unwrap();
        assert_eq!(r.counts.zero, 0);
        assert!(r.counts.one > 0 && r.counts.two > 0);
    }

    #[test]
    fn model_names() {
        for m in [SamplingModel::IndependentUniform, SamplingModel::CoupledEpsilon] {
            assert_eq!(m.to_string().parse::<SamplingModel>(), Ok(m));
        }
        assert!("gaussian".parse::<SamplingModel>().is_err());
    }
}
