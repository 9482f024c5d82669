//! Random YES instances with a planted realization.
//!
//! Randomness comes from ChaCha8 seeded with the 64-bit seed, so an instance
//! is a pure function of its [`GenSpec`] on every platform.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::edm::{general_position, squared_distance, Realization};
use crate::instance::{
    classify, first_non_clique_cluster, ClassKind, DiscretizationScheme, WeightedGraph,
};

const POINT_RETRIES: usize = 100;
const CLUSTER_RETRIES: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct GenSpec {
    pub n: usize,
    pub k: usize,
    pub class_target: ClassKind,
    pub pruning_edge_prob: f64,
    pub seed: u64,
    pub box_lo: f64,
    pub box_hi: f64,
    /// Relative singular-value threshold for the general-position test.
    pub gp_tol: f64,
}

impl GenSpec {
    pub fn new(
        n: usize,
        k: usize,
        class_target: ClassKind,
        pruning_edge_prob: f64,
        seed: u64,
    ) -> Self {
        Self {
            n,
            k,
            class_target,
            pruning_edge_prob,
            seed,
            box_lo: -5.0,
            box_hi: 5.0,
            gp_tol: 1e-3,
        }
    }

    fn validate(&self) -> Result<(), GenError> {
        if self.k == 0 {
            return Err(GenError::InvalidSpec("K must be at least 1".into()));
        }
        if self.n <= self.k {
            return Err(GenError::InvalidSpec(format!(
                "n = {} must exceed K = {}",
                self.n, self.k
            )));
        }
        if !(0.0..=1.0).contains(&self.pruning_edge_prob) {
            return Err(GenError::InvalidSpec(
                "pruning edge probability must lie in [0, 1]".into(),
            ));
        }
        if !(self.box_lo.is_finite() && self.box_hi.is_finite() && self.box_lo < self.box_hi) {
            return Err(GenError::InvalidSpec("empty sampling box".into()));
        }
        if !(self.gp_tol > 0.0 && self.gp_tol < 1.0) {
            return Err(GenError::InvalidSpec(
                "general-position tolerance must lie in (0, 1)".into(),
            ));
        }
        if self.class_target == ClassKind::NotDiscretizable {
            return Err(GenError::InvalidSpec(
                "cannot target a non-discretizable class".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GenError {
    #[error("invalid generator spec: {0}")]
    InvalidSpec(String),
    #[error("unsatisfiable generator spec: {0}")]
    UnsatisfiableSpec(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generated {
    pub graph: WeightedGraph,
    pub scheme: DiscretizationScheme,
    pub realization: Realization,
}

pub fn generate(spec: &GenSpec) -> Result<Generated, GenError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (clusters, protected) = draw_clusters(spec, &mut rng)?;
    let points = draw_points(spec, &clusters, &mut rng)?;
    let (n, k) = (spec.n, spec.k);

    let mut pairs: BTreeSet<(usize, usize)> = BTreeSet::new();
    for j in 2..=k {
        pairs.extend((1..j).map(|i| (i, j)));
    }
    for (&j, members) in &clusters {
        pairs.extend(members.iter().map(|&u| (u, j)));
    }
    for j in k + 1..=n {
        for i in 1..j {
            if !pairs.contains(&(i, j))
                && protected != Some((i, j))
                && rng.random_bool(spec.pruning_edge_prob)
            {
                pairs.insert((i, j));
            }
        }
    }

    let mut graph = WeightedGraph::new(n);
    for (i, j) in pairs {
        let d = squared_distance(&points[i - 1], &points[j - 1]).sqrt();
        graph
            .add_edge(i, j, d)
            .map_err(|e| GenError::UnsatisfiableSpec(format!("coincident points: {e}")))?;
    }
    let scheme = DiscretizationScheme::new(k, (1..=n).collect(), clusters);
    let realization = Realization::from_rows(points).expect("sampled coordinates are finite");
    Ok(Generated {
        graph,
        scheme,
        realization,
    })
}

type Clusters = BTreeMap<usize, Vec<usize>>;

/// Clusters for the identity order, plus a non-adjacent pair that must stay
/// non-adjacent for a general DDGP target.
fn draw_clusters(
    spec: &GenSpec,
    rng: &mut ChaCha8Rng,
) -> Result<(Clusters, Option<(usize, usize)>), GenError> {
    let (n, k) = (spec.n, spec.k);
    for _ in 0..CLUSTER_RETRIES {
        let mut clusters = Clusters::new();
        for j in k + 1..=n {
            let mut members: Vec<usize> = match spec.class_target {
                ClassKind::Dmdgp | ClassKind::NotDiscretizable => (j - k..j).collect(),
                ClassKind::CombinatorialDdgp => {
                    // Pruning-free cliques force U_j = {ℓ} ∪ (K − 1 members of U_ℓ).
                    let latest = rng.random_range(k..j);
                    if latest == k {
                        (1..=k).collect()
                    } else {
                        let parent = &clusters[&latest];
                        let drop = rng.random_range(0..k);
                        let mut m: Vec<usize> = parent
                            .iter()
                            .enumerate()
                            .filter(|&(i, _)| i != drop)
                            .map(|(_, &u)| u)
                            .collect();
                        m.push(latest);
                        m
                    }
                }
                ClassKind::Ddgp => sample(rng, j - 1, k).into_iter().map(|i| i + 1).collect(),
            };
            members.sort_unstable();
            clusters.insert(j, members);
        }

        let mut graph = WeightedGraph::new(n);
        for j in 2..=k {
            for i in 1..j {
                let _ = graph.add_edge(i, j, 1.0);
            }
        }
        for (&j, members) in &clusters {
            for &u in members {
                let _ = graph.add_edge(u, j, 1.0);
            }
        }
        let scheme = DiscretizationScheme::new(k, (1..=n).collect(), clusters);
        let got = classify(&graph, &scheme).map(|c| c.kind);
        if got == Ok(spec.class_target) {
            let protected = first_non_clique_cluster(&graph, &scheme).map(|(_, p)| p);
            return Ok((scheme.clusters().clone(), protected));
        }
    }
    Err(GenError::UnsatisfiableSpec(format!(
        "no cluster sequence of class {} found for n = {n}, K = {k} within {CLUSTER_RETRIES} draws",
        spec.class_target.name()
    )))
}

fn draw_points(
    spec: &GenSpec,
    clusters: &Clusters,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<f64>>, GenError> {
    let (n, k) = (spec.n, spec.k);
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n);
    for j in 1..=n {
        let mut placed = false;
        for _ in 0..POINT_RETRIES {
            let p: Vec<f64> = (0..k)
                .map(|_| rng.random_range(spec.box_lo..spec.box_hi))
                .collect();
            let mut group: Vec<&[f64]> = match clusters.get(&j) {
                Some(members) => members.iter().map(|&u| points[u - 1].as_slice()).collect(),
                None => points.iter().map(Vec::as_slice).collect(),
            };
            group.push(&p);
            if general_position(&group, k, spec.gp_tol) {
                points.push(p);
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(GenError::UnsatisfiableSpec(format!(
                "vertex {j} not in general position after {POINT_RETRIES} draws"
            )));
        }
    }
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bp::verify_realization;
    use crate::instance::{partition_edges, validate_scheme};

    #[test]
    fn small_dmdgp() {
        let g = generate(&GenSpec::new(5, 2, ClassKind::Dmdgp, 0.0, 42)).unwrap();
        assert!(validate_scheme(&g.graph, &g.scheme).is_ok());
        let class = classify(&g.graph, &g.scheme).unwrap();
        assert_eq!(class.kind, ClassKind::Dmdgp);
        assert!(class.pruning_free);
        assert!(verify_realization(&g.graph, &g.realization).unwrap() <= 1e-12);
    }

    #[test]
    fn classes_match_targets() {
        for kind in [
            ClassKind::Dmdgp,
            ClassKind::CombinatorialDdgp,
            ClassKind::Ddgp,
        ] {
            for k in 2..=3 {
                for p in [0.0, 0.5, 1.0] {
                    let g = generate(&GenSpec::new(9, k, kind, p, 7)).unwrap();
                    let class = classify(&g.graph, &g.scheme).unwrap();
                    assert_eq!(class.kind, kind, "{kind:?} K={k} p={p}");
                    assert_eq!(class.pruning_free, p == 0.0);
                }
            }
        }
    }

    #[test]
    fn full_pruning() {
        let g = generate(&GenSpec::new(8, 2, ClassKind::CombinatorialDdgp, 1.0, 3)).unwrap();
        let part = partition_edges(&g.graph, &g.scheme).unwrap();
        assert_eq!(part.discretization.len() + part.pruning.len(), 8 * 7 / 2);
    }

    #[test]
    fn deterministic() {
        let spec = GenSpec::new(12, 3, ClassKind::Ddgp, 0.2, 99);
        let first = generate(&spec).unwrap();
        assert_eq!(first, generate(&spec).unwrap());
        let other = generate(&GenSpec { seed: 100, ..spec }).unwrap();
        assert_ne!(first.realization, other.realization);
    }

    #[test]
    fn impossible_targets() {
        assert!(matches!(
            generate(&GenSpec::new(3, 2, ClassKind::CombinatorialDdgp, 0.0, 1)),
            Err(GenError::UnsatisfiableSpec(_))
        ));
        assert!(matches!(
            generate(&GenSpec::new(6, 1, ClassKind::Ddgp, 0.0, 1)),
            Err(GenError::UnsatisfiableSpec(_))
        ));
        assert!(matches!(
            generate(&GenSpec::new(2, 2, ClassKind::Dmdgp, 0.0, 1)),
            Err(GenError::InvalidSpec(_))
        ));
        assert!(matches!(
            generate(&GenSpec::new(5, 2, ClassKind::Dmdgp, 1.5, 1)),
            Err(GenError::InvalidSpec(_))
        ));
    }
}
