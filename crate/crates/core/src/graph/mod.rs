//! Directed weighted graphs with a vertex measure.
//!
//! A graph stores exact rational weights `b(x, y) > 0` on directed edges and a
//! positive measure `m(x)` on vertices, together with floating-point copies
//! used by operator assembly. Graphs are immutable once built.

mod filtration;
pub mod format;
mod metric;
mod subset;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use filtration::Filtration;
pub use metric::{
    chi_cutoffs, delta_b_distance, delta_b_distances_from, self_adjointness_advisory, ChiCutoffs,
    SelfAdjointnessAdvisory, SelfAdjointnessCriterion,
};
pub use subset::VertexSubset;
pub use validate::{connectivity_class, validate, ConnectivityClass, ValidationReport};

/// Exact weight type.
pub type Rational = BigRational;

/// Builds an exact rational `p/q`.
pub fn ratio(p: i64, q: i64) -> Rational {
    Rational::new(BigInt::from(p), BigInt::from(q))
}

/// Exact rational value of a finite float.
pub fn rational_from_f64(x: f64) -> Result<Rational> {
    Rational::from_float(x).ok_or_else(|| Error::InvalidParameter(format!("non-finite value {x}")))
}

pub(crate) fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Opaque, totally ordered vertex key. Integers sort before names.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum VertexId {
    Int(i64),
    Name(String),
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexId::Int(i) => write!(f, "{i}"),
            VertexId::Name(s) => {
                f.write_str("\"")?;
                for c in s.chars() {
                    match c {
                        '"' => f.write_str("\\\"")?,
                        '\\' => f.write_str("\\\\")?,
                        c => write!(f, "{c}")?,
                    }
                }
                f.write_str("\"")
            }
        }
    }
}

impl From<i64> for VertexId {
    fn from(i: i64) -> Self {
        VertexId::Int(i)
    }
}

impl From<i32> for VertexId {
    fn from(i: i32) -> Self {
        VertexId::Int(i as i64)
    }
}

impl From<usize> for VertexId {
    fn from(i: usize) -> Self {
        VertexId::Int(i as i64)
    }
}

impl From<&str> for VertexId {
    fn from(s: &str) -> Self {
        VertexId::Name(s.to_string())
    }
}

/// One stored directed edge as seen from one endpoint.
#[derive(Clone, Debug)]
pub struct Arc {
    /// Index of the other endpoint.
    pub other: usize,
    pub weight: Rational,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct DirectedWeightedGraph {
    ids: Vec<VertexId>,
    index: BTreeMap<VertexId, usize>,
    measure: Vec<Rational>,
    measure_f: Vec<f64>,
    out_arcs: Vec<Vec<Arc>>,
    in_arcs: Vec<Vec<Arc>>,
    beta_out: Vec<Rational>,
    beta_in: Vec<Rational>,
    beta_out_f: Vec<f64>,
    beta_in_f: Vec<f64>,
    window_boundary: Vec<bool>,
}

/// Collects vertices and edges, then checks the storage invariants in `build`.
#[derive(Default, Debug, Clone)]
pub struct GraphBuilder {
    vertices: Vec<(VertexId, Rational)>,
    edges: Vec<(VertexId, VertexId, Rational)>,
    boundary: Vec<VertexId>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn vertex(&mut self, id: impl Into<VertexId>, measure: Rational) -> &mut Self {
        self.vertices.push((id.into(), measure));
        self
    }

    pub fn edge(&mut self, from: impl Into<VertexId>, to: impl Into<VertexId>, weight: Rational) -> &mut Self {
        self.edges.push((from.into(), to.into(), weight));
        self
    }

    /// Marks a vertex whose neighbourhood was truncated by a finite window.
    pub fn window_boundary(&mut self, id: impl Into<VertexId>) -> &mut Self {
        self.boundary.push(id.into());
        self
    }

    pub fn build(&self) -> Result<DirectedWeightedGraph> {
        let mut index = BTreeMap::new();
        for (id, m) in &self.vertices {
            if !m.is_positive() {
                return Err(Error::NonpositiveMeasure(id.clone()));
            }
            if index.insert(id.clone(), 0usize).is_some() {
                return Err(Error::DuplicateVertex(id.clone()));
            }
        }
        for (i, v) in index.values_mut().enumerate() {
            *v = i;
        }
        let n = index.len();
        let ids: Vec<VertexId> = index.keys().cloned().collect();
        let mut measure = vec![Rational::zero(); n];
        for (id, m) in &self.vertices {
            measure[index[id]] = m.clone();
        }

        let mut out_arcs: Vec<Vec<Arc>> = vec![Vec::new(); n];
        let mut in_arcs: Vec<Vec<Arc>> = vec![Vec::new(); n];
        for (from, to, w) in &self.edges {
            let x = *index.get(from).ok_or_else(|| Error::UnknownVertex(from.clone()))?;
            let y = *index.get(to).ok_or_else(|| Error::UnknownVertex(to.clone()))?;
            if x == y {
                return Err(Error::SelfLoop(from.clone()));
            }
            if !w.is_positive() {
                return Err(Error::NonpositiveWeight(from.clone(), to.clone()));
            }
            let value = to_f64(w);
            out_arcs[x].push(Arc { other: y, weight: w.clone(), value });
            in_arcs[y].push(Arc { other: x, weight: w.clone(), value });
        }
        for x in 0..n {
            out_arcs[x].sort_by_key(|a| a.other);
            in_arcs[x].sort_by_key(|a| a.other);
            if let Some(w) = out_arcs[x].windows(2).find(|w| w[0].other == w[1].other) {
                return Err(Error::DuplicateEdge(ids[x].clone(), ids[w[0].other].clone()));
            }
        }

        let sum = |arcs: &Vec<Arc>| arcs.iter().fold(Rational::zero(), |acc, a| acc + &a.weight);
        let beta_out: Vec<Rational> = out_arcs.iter().map(sum).collect();
        let beta_in: Vec<Rational> = in_arcs.iter().map(sum).collect();

        let mut window_boundary = vec![false; n];
        for id in &self.boundary {
            let x = *index.get(id).ok_or_else(|| Error::UnknownVertex(id.clone()))?;
            window_boundary[x] = true;
        }

        Ok(DirectedWeightedGraph {
            measure_f: measure.iter().map(to_f64).collect(),
            beta_out_f: beta_out.iter().map(to_f64).collect(),
            beta_in_f: beta_in.iter().map(to_f64).collect(),
            ids,
            index,
            measure,
            out_arcs,
            in_arcs,
            beta_out,
            beta_in,
            window_boundary,
        })
    }
}

impl DirectedWeightedGraph {
    pub fn builder() -> GraphBuilder {
        GraphBuilder::new()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[VertexId] {
        &self.ids
    }

    pub fn id(&self, x: usize) -> &VertexId {
        &self.ids[x]
    }

    pub fn index_of(&self, id: &VertexId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub(crate) fn require_index(&self, id: &VertexId) -> Result<usize> {
        self.index_of(id).ok_or_else(|| Error::UnknownVertex(id.clone()))
    }

    pub fn measure(&self, x: usize) -> f64 {
        self.measure_f[x]
    }

    pub fn measure_exact(&self, x: usize) -> &Rational {
        &self.measure[x]
    }

    pub fn measure_vector(&self) -> &[f64] {
        &self.measure_f
    }

    /// `b(x, y)`, zero when `(x, y)` is not an edge.
    pub fn weight(&self, x: usize, y: usize) -> f64 {
        match self.out_arcs[x].binary_search_by_key(&y, |a| a.other) {
            Ok(i) => self.out_arcs[x][i].value,
            Err(_) => 0.0,
        }
    }

    pub fn weight_exact(&self, x: usize, y: usize) -> Rational {
        match self.out_arcs[x].binary_search_by_key(&y, |a| a.other) {
            Ok(i) => self.out_arcs[x][i].weight.clone(),
            Err(_) => Rational::zero(),
        }
    }

    /// `b(x, y) + b(y, x)`.
    pub fn symmetric_weight(&self, x: usize, y: usize) -> f64 {
        self.weight(x, y) + self.weight(y, x)
    }

    /// Outgoing arcs of `x`, sorted by target.
    pub fn out_arcs(&self, x: usize) -> &[Arc] {
        &self.out_arcs[x]
    }

    /// Incoming arcs of `x`, sorted by source.
    pub fn in_arcs(&self, x: usize) -> &[Arc] {
        &self.in_arcs[x]
    }

    /// Neighbours of `x` along undirected edges, sorted and deduplicated.
    pub fn undirected_neighbors(&self, x: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self.out_arcs[x].iter().chain(self.in_arcs[x].iter()).map(|a| a.other).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// All directed edges `(x, y, b(x, y))` in lexicographic index order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, &Arc)> + '_ {
        self.out_arcs.iter().enumerate().flat_map(|(x, arcs)| arcs.iter().map(move |a| (x, a.other, a)))
    }

    pub fn edge_count(&self) -> usize {
        self.out_arcs.iter().map(Vec::len).sum()
    }

    /// `β⁺(x) = Σ_y b(x, y)`.
    pub fn beta_out(&self, x: usize) -> f64 {
        self.beta_out_f[x]
    }

    /// `β⁻(x) = Σ_y b(y, x)`.
    pub fn beta_in(&self, x: usize) -> f64 {
        self.beta_in_f[x]
    }

    pub fn beta_out_exact(&self, x: usize) -> &Rational {
        &self.beta_out[x]
    }

    pub fn beta_in_exact(&self, x: usize) -> &Rational {
        &self.beta_in[x]
    }

    pub fn is_window_boundary(&self, x: usize) -> bool {
        self.window_boundary[x]
    }

    pub fn has_window_boundary(&self) -> bool {
        self.window_boundary.iter().any(|&b| b)
    }

    pub fn all(&self) -> VertexSubset {
        VertexSubset::from_indices(self.len(), 0..self.len())
    }

    /// Vertices whose neighbourhood is complete (not on the window boundary).
    pub fn interior(&self) -> VertexSubset {
        VertexSubset::from_indices(self.len(), (0..self.len()).filter(|&x| !self.window_boundary[x]))
    }

    pub fn subset<I, T>(&self, ids: I) -> Result<VertexSubset>
    where
        I: IntoIterator<Item = T>,
        T: Into<VertexId>,
    {
        let idx = ids.into_iter().map(|id| self.require_index(&id.into())).collect::<Result<Vec<_>>>()?;
        Ok(VertexSubset::from_indices(self.len(), idx))
    }

    pub fn subset_where(&self, mut pred: impl FnMut(&VertexId) -> bool) -> VertexSubset {
        VertexSubset::from_indices(self.len(), (0..self.len()).filter(|&x| pred(&self.ids[x])))
    }

    /// Total weight `Σ b(x, y)` over all edges, exactly.
    pub fn total_weight_exact(&self) -> Rational {
        self.beta_out.iter().fold(Rational::zero(), |acc, b| acc + b)
    }

    /// Builder pre-filled with this graph, for edits.
    pub fn to_builder(&self) -> GraphBuilder {
        let mut b = GraphBuilder::new();
        for x in 0..self.len() {
            b.vertex(self.ids[x].clone(), self.measure[x].clone());
            if self.window_boundary[x] {
                b.window_boundary(self.ids[x].clone());
            }
        }
        for (x, y, arc) in self.edges() {
            b.edge(self.ids[x].clone(), self.ids[y].clone(), arc.weight.clone());
        }
        b
    }

    /// Same graph with every weight multiplied by `b_factor` and every
    /// measure by `m_factor`.
    pub fn scaled(&self, b_factor: &Rational, m_factor: &Rational) -> Result<Self> {
        let mut b = GraphBuilder::new();
        for x in 0..self.len() {
            b.vertex(self.ids[x].clone(), &self.measure[x] * m_factor);
            if self.window_boundary[x] {
                b.window_boundary(self.ids[x].clone());
            }
        }
        for (x, y, arc) in self.edges() {
            b.edge(self.ids[x].clone(), self.ids[y].clone(), &arc.weight * b_factor);
        }
        b.build()
    }

    /// Induced subgraph on `subset`; vertices losing edges become window boundary.
    pub fn induced(&self, subset: &VertexSubset) -> Result<Self> {
        let mut b = GraphBuilder::new();
        for &x in subset.indices() {
            b.vertex(self.ids[x].clone(), self.measure[x].clone());
            let truncated =
                self.window_boundary[x] || self.undirected_neighbors(x).iter().any(|&y| !subset.contains(y));
            if truncated {
                b.window_boundary(self.ids[x].clone());
            }
        }
        for (x, y, arc) in self.edges() {
            if subset.contains(x) && subset.contains(y) {
                b.edge(self.ids[x].clone(), self.ids[y].clone(), arc.weight.clone());
            }
        }
        b.build()
    }
}

pub(crate) fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    (a - b).abs()
}
