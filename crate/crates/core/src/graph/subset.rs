use serde::{Deserialize, Serialize};

use super::{DirectedWeightedGraph, VertexId};

/// Subset of a parent graph's vertices, stored as sorted indices plus a
/// membership mask sized to the parent.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct VertexSubset {
    indices: Vec<usize>,
    mask: Vec<bool>,
}

impl VertexSubset {
    pub fn from_indices(parent_len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut mask = vec![false; parent_len];
        for x in indices {
            mask[x] = true;
        }
        let indices = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
        Self { indices, mask }
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let indices = mask.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect();
        Self { indices, mask }
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn parent_len(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.mask.get(x).copied().unwrap_or(false)
    }

    /// Position of parent index `x` inside `indices()`.
    pub fn position(&self, x: usize) -> Option<usize> {
        self.indices.binary_search(&x).ok()
    }

    pub fn is_subset_of(&self, other: &VertexSubset) -> bool {
        self.indices.iter().all(|&x| other.contains(x))
    }

    pub fn difference(&self, other: &VertexSubset) -> VertexSubset {
        Self::from_indices(self.parent_len(), self.indices.iter().copied().filter(|&x| !other.contains(x)))
    }

    pub fn intersection(&self, other: &VertexSubset) -> VertexSubset {
        Self::from_indices(self.parent_len(), self.indices.iter().copied().filter(|&x| other.contains(x)))
    }

    pub fn union(&self, other: &VertexSubset) -> VertexSubset {
        Self::from_indices(self.parent_len(), self.indices.iter().chain(other.indices.iter()).copied())
    }

    /// Complement within the parent vertex set.
    pub fn complement(&self) -> VertexSubset {
        Self::from_mask(self.mask.iter().map(|m| !m).collect())
    }

    pub fn ids(&self, graph: &DirectedWeightedGraph) -> Vec<VertexId> {
        self.indices.iter().map(|&x| graph.id(x).clone()).collect()
    }

    /// Components of the subgraph induced on this subset, along undirected edges.
    pub fn components(&self, graph: &DirectedWeightedGraph) -> Vec<VertexSubset> {
        let mut seen = vec![false; self.parent_len()];
        let mut out = Vec::new();
        for &start in &self.indices {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                let x = comp[i];
                i += 1;
                for y in graph.undirected_neighbors(x) {
                    if self.contains(y) && !seen[y] {
                        seen[y] = true;
                        comp.push(y);
                    }
                }
            }
            out.push(Self::from_indices(self.parent_len(), comp));
        }
        out
    }

    pub fn is_weakly_connected(&self, graph: &DirectedWeightedGraph) -> bool {
        !self.is_empty() && self.components(graph).len() == 1
    }
}
