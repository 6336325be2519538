use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use super::{DirectedWeightedGraph, Filtration, VertexId, VertexSubset};
use crate::error::{Error, Result};

#[derive(Copy, Clone, PartialEq)]
struct State {
    dist: f64,
    vertex: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| self.vertex.cmp(&other.vertex))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn edge_length(graph: &DirectedWeightedGraph, x: usize, y: usize) -> f64 {
    (graph.measure(x) * graph.measure(y)).sqrt() / graph.symmetric_weight(x, y).sqrt()
}

/// Multi-source Dijkstra under the `δ_b` edge length. Unreached vertices get `∞`.
pub fn delta_b_distances_from(graph: &DirectedWeightedGraph, sources: &[usize]) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.len()];
    let mut heap = BinaryHeap::new();
    for &s in sources {
        dist[s] = 0.0;
        heap.push(State { dist: 0.0, vertex: s });
    }
    while let Some(State { dist: d, vertex: x }) = heap.pop() {
        if d > dist[x] {
            continue;
        }
        for y in graph.undirected_neighbors(x) {
            let nd = d + edge_length(graph, x, y);
            if nd < dist[y] {
                dist[y] = nd;
                heap.push(State { dist: nd, vertex: y });
            }
        }
    }
    dist
}

/// `δ_b(x, y)`: the shortest chain length with edge length `√(m(x)m(y)) / √(b(x,y) + b(y,x))`.
pub fn delta_b_distance(graph: &DirectedWeightedGraph, x: &VertexId, y: &VertexId) -> Result<f64> {
    let xi = graph.require_index(x)?;
    let yi = graph.require_index(y)?;
    let d = delta_b_distances_from(graph, &[xi])[yi];
    if d.is_finite() {
        Ok(d)
    } else {
        Err(Error::NoChain(x.clone(), y.clone()))
    }
}

/// Clamped-linear cut-offs `χ_n = clamp(1 − δ_b(·, B_n) / r_n, 0, 1)` and their
/// energy constants `C_n`. Evidence only: finite windows cannot certify χ-completeness.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ChiCutoffs {
    pub functions: Vec<Vec<f64>>,
    pub constants: Vec<f64>,
    pub sup: f64,
    /// No late records: the maximum over the last third does not exceed the earlier maximum.
    pub advisory_bounded: bool,
}

pub fn chi_cutoffs(
    graph: &DirectedWeightedGraph,
    filtration: &Filtration,
    radius_profile: &[f64],
) -> Result<ChiCutoffs> {
    if radius_profile.len() != filtration.len() {
        return Err(Error::InvalidParameter(format!(
            "radius profile has {} entries for {} levels",
            radius_profile.len(),
            filtration.len()
        )));
    }
    if let Some(r) = radius_profile.iter().find(|r| r.is_nan() || **r <= 0.0) {
        return Err(Error::InvalidParameter(format!("radius profile must be positive, got {r}")));
    }
    let mut functions = Vec::with_capacity(filtration.len());
    let mut constants = Vec::with_capacity(filtration.len());
    for (level, &radius) in filtration.levels().iter().zip(radius_profile) {
        let dist = delta_b_distances_from(graph, level.indices());
        let chi: Vec<f64> = dist.iter().map(|d| (1.0 - d / radius).clamp(0.0, 1.0)).collect();
        constants.push(chi_energy(graph, &chi));
        functions.push(chi);
    }
    let sup = constants.iter().copied().fold(0.0, f64::max);
    let split = (2 * constants.len()).div_ceil(3).max(1).min(constants.len());
    let early = constants[..split].iter().copied().fold(0.0, f64::max);
    let late = constants[split..].iter().copied().fold(0.0, f64::max);
    Ok(ChiCutoffs { functions, constants, sup, advisory_bounded: late <= early * (1.0 + 1e-9) })
}

/// `max_x (1/m(x)) Σ_{(x,y) ∈ E⃗} (b(x,y) + b(y,x)) |χ(x) − χ(y)|²`.
fn chi_energy(graph: &DirectedWeightedGraph, chi: &[f64]) -> f64 {
    (0..graph.len())
        .map(|x| {
            graph
                .out_arcs(x)
                .iter()
                .map(|a| graph.symmetric_weight(x, a.other) * (chi[x] - chi[a.other]).powi(2))
                .sum::<f64>()
                / graph.measure(x)
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelfAdjointnessCriterion {
    /// Constant vertex measure.
    ConstantMeasure,
    /// Bounded degree with a `δ_b` metric that looks complete.
    BoundedDegreeComplete,
    /// Cut-off constants `C_n` look bounded.
    ChiComplete,
    None,
}

/// Advisory report on which essential self-adjointness criterion for the
/// symmetric Laplacian appears to apply on a finite window.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelfAdjointnessAdvisory {
    pub measure_constant: bool,
    pub degree_bound: usize,
    /// `min_{x ∉ G_n} δ_b(G_0, x)` per level (∞ once a level covers the window).
    pub delta_b_radii: Vec<f64>,
    /// Radius increments do not decay below a quarter of the first one.
    pub delta_b_growing: bool,
    pub chi: ChiCutoffs,
    pub criterion: SelfAdjointnessCriterion,
}

pub fn self_adjointness_advisory(
    graph: &DirectedWeightedGraph,
    filtration: &Filtration,
    radius_profile: &[f64],
) -> Result<SelfAdjointnessAdvisory> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let measure_constant = (1..graph.len()).all(|x| graph.measure_exact(x) == graph.measure_exact(0));
    let degree_bound = (0..graph.len()).map(|x| graph.undirected_neighbors(x).len()).max().unwrap_or(0) + 1;

    let from_root = delta_b_distances_from(graph, filtration.levels()[0].indices());
    let delta_b_radii: Vec<f64> = filtration
        .levels()
        .iter()
        .map(|level: &VertexSubset| {
            (0..graph.len()).filter(|&x| !level.contains(x)).map(|x| from_root[x]).fold(f64::INFINITY, f64::min)
        })
        .collect();
    let finite: Vec<f64> = delta_b_radii.iter().copied().filter(|r| r.is_finite()).collect();
    let increments: Vec<f64> = finite.windows(2).map(|w| w[1] - w[0]).collect();
    let delta_b_growing = match (increments.first(), increments.last()) {
        (Some(&first), Some(&last)) if first > 0.0 => last >= 0.25 * first,
        _ => false,
    };
    let chi = chi_cutoffs(graph, filtration, radius_profile)?;

    let criterion = if measure_constant {
        SelfAdjointnessCriterion::ConstantMeasure
    } else if delta_b_growing {
        SelfAdjointnessCriterion::BoundedDegreeComplete
    } else if chi.advisory_bounded {
        SelfAdjointnessCriterion::ChiComplete
    } else {
        SelfAdjointnessCriterion::None
    };
    Ok(SelfAdjointnessAdvisory { measure_constant, degree_bound, delta_b_radii, delta_b_growing, chi, criterion })
}
