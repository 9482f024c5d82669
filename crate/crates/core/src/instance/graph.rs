use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("vertex {vertex} is outside 1..={n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0},{1}}}")]
    DuplicateEdge(usize, usize),
    #[error("edge {{{i},{j}}} has weight {weight}; weights must be positive and finite")]
    InvalidWeight { i: usize, j: usize, weight: f64 },
}

/// Simple undirected graph on vertices `1..=n` with positive edge weights.
///
/// Weights are plain distances; squared values are computed on demand.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    weights: BTreeMap<(usize, usize), f64>,
    adjacency: Vec<BTreeSet<usize>>,
}

fn key(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

impl WeightedGraph {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            weights: BTreeMap::new(),
            adjacency: vec![BTreeSet::new(); n + 1],
        }
    }

    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut graph = Self::new(n);
        for (i, j, d) in edges {
            graph.add_edge(i, j, d)?;
        }
        Ok(graph)
    }

    pub fn add_edge(&mut self, i: usize, j: usize, weight: f64) -> Result<(), GraphError> {
        for v in [i, j] {
            if v == 0 || v > self.n {
                return Err(GraphError::VertexOutOfRange {
                    vertex: v,
                    n: self.n,
                });
            }
        }
        if i == j {
            return Err(GraphError::SelfLoop(i));
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(GraphError::InvalidWeight { i, j, weight });
        }
        let k = key(i, j);
        if self.weights.contains_key(&k) {
            return Err(GraphError::DuplicateEdge(k.0, k.1));
        }
        self.weights.insert(k, weight);
        self.adjacency[i].insert(j);
        self.adjacency[j].insert(i);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.weights.len()
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.weights.get(&key(i, j)).copied()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.weights.contains_key(&key(i, j))
    }

    /// Edges as `(i, j, d)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.weights.iter().map(|(&(i, j), &d)| (i, j, d))
    }

    /// The neighbourhood N(j), ascending.
    pub fn neighbours(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        self.adjacency
            .get(j)
            .into_iter()
            .flat_map(|set| set.iter().copied())
    }

    pub fn degree(&self, j: usize) -> usize {
        self.adjacency.get(j).map_or(0, BTreeSet::len)
    }

    /// First non-adjacent pair inside `vertices`, if any.
    pub fn missing_pair(&self, vertices: &[usize]) -> Option<(usize, usize)> {
        for (a, &u) in vertices.iter().enumerate() {
            for &v in &vertices[a + 1..] {
                if !self.has_edge(u, v) {
                    return Some(key(u, v));
                }
            }
        }
        None
    }

    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        self.missing_pair(vertices).is_none()
    }

    /// Number of adjacent pairs inside `vertices`.
    pub fn adjacent_pairs(&self, vertices: &[usize]) -> usize {
        let mut count = 0;
        for (a, &u) in vertices.iter().enumerate() {
            count += vertices[a + 1..]
                .iter()
                .filter(|&&v| self.has_edge(u, v))
                .count();
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_access() {
        let g = WeightedGraph::from_edges(3, [(1, 2, 1.5), (3, 2, 2.0)]).unwrap();
        assert_eq!(g.weight(2, 1), Some(1.5));
        assert_eq!(g.weight(2, 3), g.weight(3, 2));
        assert_eq!(g.weight(1, 3), None);
        assert_eq!(g.neighbours(2).collect::<Vec<_>>(), vec![1, 3]);
    }

    #[test]
    fn rejects_bad_edges() {
        let mut g = WeightedGraph::new(3);
        assert_eq!(g.add_edge(1, 1, 1.0), Err(GraphError::SelfLoop(1)));
        assert!(matches!(
            g.add_edge(1, 4, 1.0),
            Err(GraphError::VertexOutOfRange { .. })
        ));
        assert!(matches!(
            g.add_edge(1, 2, -1.0),
            Err(GraphError::InvalidWeight { .. })
        ));
        assert!(matches!(
            g.add_edge(1, 2, f64::NAN),
            Err(GraphError::InvalidWeight { .. })
        ));
        g.add_edge(1, 2, 1.0).unwrap();
        assert_eq!(g.add_edge(2, 1, 1.0), Err(GraphError::DuplicateEdge(1, 2)));
    }

    #[test]
    fn clique_checks() {
        let g = WeightedGraph::from_edges(4, [(1, 2, 1.0), (1, 3, 1.0), (2, 3, 1.0), (3, 4, 1.0)])
            .unwrap();
        assert!(g.is_clique(&[1, 2, 3]));
        assert_eq!(g.missing_pair(&[1, 3, 4]), Some((1, 4)));
        assert_eq!(g.adjacent_pairs(&[1, 3, 4]), 2);
    }
}
