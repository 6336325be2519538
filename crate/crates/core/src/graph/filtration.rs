use super::{DirectedWeightedGraph, VertexSubset};
use crate::error::{Error, Result};

/// Nested sequence of finite connected vertex sets `G_0 ⊆ G_1 ⊆ …`.
///
/// On a finite window the levels need not exhaust the parent; use
/// [`Filtration::is_exhaustive`] to check.
#[derive(Clone, Debug)]
pub struct Filtration {
    levels: Vec<VertexSubset>,
}

impl Filtration {
    pub fn new(graph: &DirectedWeightedGraph, levels: Vec<VertexSubset>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidFiltration("no levels".into()));
        }
        for (n, level) in levels.iter().enumerate() {
            if level.parent_len() != graph.len() {
                return Err(Error::InvalidFiltration(format!("level {n} belongs to another graph")));
            }
            if !level.is_weakly_connected(graph) {
                return Err(Error::InvalidFiltration(format!("level {n} is empty or not connected")));
            }
        }
        if let Some(n) = (1..levels.len()).find(|&n| !levels[n - 1].is_subset_of(&levels[n])) {
            return Err(Error::InvalidFiltration(format!("level {} is not contained in level {n}", n - 1)));
        }
        Ok(Self { levels })
    }

    /// Undirected hop balls around `root`: `G_n = {x : hops(root, x) ≤ n}` for `n = 0..=max_n`.
    pub fn hop_balls(graph: &DirectedWeightedGraph, root: usize, max_n: usize) -> Result<Self> {
        if root >= graph.len() {
            return Err(Error::InvalidParameter(format!("root index {root} out of range")));
        }
        let mut dist = vec![usize::MAX; graph.len()];
        dist[root] = 0;
        let mut queue = std::collections::VecDeque::from([root]);
        while let Some(x) = queue.pop_front() {
            if dist[x] >= max_n {
                continue;
            }
            for y in graph.undirected_neighbors(x) {
                if dist[y] == usize::MAX {
                    dist[y] = dist[x] + 1;
                    queue.push_back(y);
                }
            }
        }
        let levels = (0..=max_n)
            .map(|n| VertexSubset::from_indices(graph.len(), (0..graph.len()).filter(|&x| dist[x] <= n)))
            .collect();
        Self::new(graph, levels)
    }

    pub fn levels(&self) -> &[VertexSubset] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, n: usize) -> Result<&VertexSubset> {
        self.levels
            .get(n)
            .ok_or_else(|| Error::InvalidFiltration(format!("level {n} not available (have {})", self.levels.len())))
    }

    /// `G_k ∖ G_n`.
    pub fn annulus(&self, n: usize, k: usize) -> Result<VertexSubset> {
        if k <= n {
            return Err(Error::InvalidParameter(format!("annulus needs k > n, got n={n}, k={k}")));
        }
        Ok(self.level(k)?.difference(self.level(n)?))
    }

    pub fn is_exhaustive(&self) -> bool {
        self.levels.last().is_some_and(|l| l.len() == l.parent_len())
    }
}
