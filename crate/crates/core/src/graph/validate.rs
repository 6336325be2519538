use std::collections::HashSet;

use num_traits::{Signed, Zero};
use petgraph::algo::{connected_components, tarjan_scc};
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use super::{abs_diff, to_f64, DirectedWeightedGraph, Rational, VertexId};
use crate::error::{Error, Result};

/// Strongest connectedness notion that holds. Ordered from weakest to strongest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConnectivityClass {
    Disconnected,
    WeaklyConnected,
    /// For every pair of vertices there is a directed path in at least one direction.
    Connected,
    StronglyConnected,
}

impl std::fmt::Display for ConnectivityClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ConnectivityClass::Disconnected => "disconnected",
            ConnectivityClass::WeaklyConnected => "weakly-connected",
            ConnectivityClass::Connected => "connected",
            ConnectivityClass::StronglyConnected => "strongly-connected",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    /// `max_x |β⁺(x) − β⁻(x)|` over interior vertices.
    pub beta_max_deviation: f64,
    pub beta_max_deviation_exact: String,
    pub beta_worst_vertex: Option<VertexId>,
    pub beta_holds: bool,
    pub tolerance: f64,
    /// Minimal `M` with `Σ_y |b(x,y) − b(y,x)| ≤ M m(x)` on interior vertices.
    pub gamma_constant: f64,
    pub gamma_constant_exact: String,
    /// Smallest `N` with `#{y : {x,y} ∈ E} < N` for every vertex.
    pub degree_bound: usize,
    pub connectivity_class: ConnectivityClass,
    pub outgoing_condition: bool,
    pub vertices_without_outgoing: Vec<VertexId>,
    pub self_loop_free: bool,
    pub checked_vertices: usize,
    pub window_boundary_vertices: usize,
}

/// Checks the standing hypotheses on every interior vertex.
///
/// Window-boundary vertices have truncated neighbourhoods; they are excluded
/// from the (β) and (γ) checks and counted in `window_boundary_vertices`.
pub fn validate(graph: &DirectedWeightedGraph, tolerance: f64) -> Result<ValidationReport> {
    if graph.is_empty() {
        return Err(Error::EmptyGraph);
    }
    if tolerance.is_nan() || tolerance < 0.0 {
        return Err(Error::InvalidParameter(format!("tolerance must be nonnegative, got {tolerance}")));
    }

    let mut beta_max = Rational::zero();
    let mut beta_worst = None;
    let mut gamma_max = Rational::zero();
    let mut checked = 0usize;
    for x in 0..graph.len() {
        if graph.is_window_boundary(x) {
            continue;
        }
        checked += 1;
        let dev = abs_diff(graph.beta_out_exact(x), graph.beta_in_exact(x));
        if dev > beta_max || (beta_worst.is_none() && dev.is_positive()) {
            beta_max = dev;
            beta_worst = Some(graph.id(x).clone());
        }
        let mut anti = Rational::zero();
        for y in graph.undirected_neighbors(x) {
            anti += abs_diff(&graph.weight_exact(x, y), &graph.weight_exact(y, x));
        }
        let ratio = anti / graph.measure_exact(x);
        if ratio > gamma_max {
            gamma_max = ratio;
        }
    }

    let degree_bound = (0..graph.len()).map(|x| graph.undirected_neighbors(x).len()).max().unwrap_or(0) + 1;
    let without: Vec<VertexId> =
        (0..graph.len()).filter(|&x| graph.out_arcs(x).is_empty()).map(|x| graph.id(x).clone()).collect();
    let beta_f = to_f64(&beta_max);

    Ok(ValidationReport {
        beta_max_deviation: beta_f,
        beta_max_deviation_exact: beta_max.to_string(),
        beta_worst_vertex: beta_worst,
        beta_holds: beta_max.is_zero() || beta_f <= tolerance,
        tolerance,
        gamma_constant: to_f64(&gamma_max),
        gamma_constant_exact: gamma_max.to_string(),
        degree_bound,
        connectivity_class: connectivity_class(graph),
        outgoing_condition: without.is_empty(),
        vertices_without_outgoing: without,
        self_loop_free: graph.edges().all(|(x, y, _)| x != y),
        checked_vertices: checked,
        window_boundary_vertices: graph.len() - checked,
    })
}

pub fn connectivity_class(graph: &DirectedWeightedGraph) -> ConnectivityClass {
    let n = graph.len();
    if n == 0 {
        return ConnectivityClass::Disconnected;
    }
    let mut g = DiGraph::<(), ()>::with_capacity(n, graph.edge_count());
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for (x, y, _) in graph.edges() {
        g.add_edge(nodes[x], nodes[y], ());
    }
    if connected_components(&g) != 1 {
        return ConnectivityClass::Disconnected;
    }
    // tarjan_scc yields components in reverse topological order.
    let mut sccs = tarjan_scc(&g);
    if sccs.len() == 1 {
        return ConnectivityClass::StronglyConnected;
    }
    sccs.reverse();
    let mut comp_of = vec![0usize; n];
    for (c, scc) in sccs.iter().enumerate() {
        for v in scc {
            comp_of[v.index()] = c;
        }
    }
    let dag_edges: HashSet<(usize, usize)> =
        graph.edges().map(|(x, y, _)| (comp_of[x], comp_of[y])).filter(|(a, b)| a != b).collect();
    // Unilateral iff the condensation's topological order is a Hamiltonian path.
    let unilateral = (0..sccs.len() - 1).all(|c| dag_edges.contains(&(c, c + 1)));
    if unilateral {
        ConnectivityClass::Connected
    } else {
        ConnectivityClass::WeaklyConnected
    }
}
