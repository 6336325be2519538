//! Isoperimetric constants `h(Ω) = inf b(∂U)/m(U)` and `h̃(Ω) = inf b(∂U)/β⁺(U)`,
//! the Cheeger chain for the Dirichlet Laplacian, and condition (Abs).
//!
//! The boundary `∂_E U` collects directed edges with exactly one endpoint in
//! `U`, both orientations included.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::graph::{DirectedWeightedGraph, Filtration, VertexId, VertexSubset};
use crate::operators::{assemble, OperatorKind};
use crate::spectra::{lambda1_symmetric, lambda1_symmetric_pair, nu};

/// Largest `Ω` for brute-force enumeration of all `2^|Ω| − 1` subsets.
pub const EXACT_LIMIT: usize = 22;
/// Default cap on connected subsets visited by [`cheeger_connected`].
pub const CONNECTED_BUDGET: usize = 5_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Denominator `m(U)`.
    H,
    /// Denominator `β⁺(U)`.
    HTilde,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Exact,
    Heuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryWeight {
    pub value: f64,
    /// `U` contains a window-boundary vertex, so the value may undercount.
    pub touches_window_boundary: bool,
}

pub fn boundary_weight(graph: &DirectedWeightedGraph, u: &VertexSubset) -> Result<BoundaryWeight> {
    if u.is_empty() {
        return Err(Error::EmptySubset);
    }
    Ok(BoundaryWeight {
        value: boundary_value(graph, u),
        touches_window_boundary: u.indices().iter().any(|&x| graph.is_window_boundary(x)),
    })
}

fn boundary_value(graph: &DirectedWeightedGraph, u: &VertexSubset) -> f64 {
    graph.edges().filter(|(x, y, _)| u.contains(*x) != u.contains(*y)).map(|(_, _, a)| a.value).sum()
}

fn denominator_weight(graph: &DirectedWeightedGraph, x: usize, variant: Variant) -> f64 {
    match variant {
        Variant::H => graph.measure(x),
        Variant::HTilde => graph.beta_out(x),
    }
}

/// `b(∂U) / m(U)` or `b(∂U) / β⁺(U)`.
pub fn cheeger_ratio(graph: &DirectedWeightedGraph, u: &VertexSubset, variant: Variant) -> Result<f64> {
    if u.is_empty() {
        return Err(Error::EmptySubset);
    }
    let den: f64 = u.indices().iter().map(|&x| denominator_weight(graph, x, variant)).sum();
    Ok(boundary_value(graph, u) / den)
}

/// Infimum over non-empty `U ⊆ Ω` together with the subset attaining it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerFragment {
    pub variant: Variant,
    pub value: f64,
    pub witness: Vec<VertexId>,
    #[serde(skip)]
    pub witness_subset: Option<VertexSubset>,
    pub mode: Mode,
}

fn check_omega(graph: &DirectedWeightedGraph, omega: &VertexSubset) -> Result<()> {
    if omega.parent_len() != graph.len() {
        return Err(Error::DimensionMismatch { expected: graph.len(), got: omega.parent_len() });
    }
    if omega.is_empty() {
        return Err(Error::EmptySubset);
    }
    if let Some(&x) = omega.indices().iter().find(|&&x| graph.is_window_boundary(x)) {
        return Err(Error::BoundaryVertex(graph.id(x).clone()));
    }
    Ok(())
}

fn fragment(graph: &DirectedWeightedGraph, u: VertexSubset, variant: Variant, mode: Mode) -> CheegerFragment {
    let value = cheeger_ratio(graph, &u, variant).expect("witness is non-empty");
    CheegerFragment { variant, value, witness: u.ids(graph), witness_subset: Some(u), mode }
}

/// Local view of `Ω`: symmetric weights between members and the weight each
/// member sends across to the complement of `Ω`.
struct LocalOmega {
    members: Vec<usize>,
    neighbors: Vec<Vec<(usize, f64)>>,
    outside: Vec<f64>,
    denom: Vec<f64>,
}

impl LocalOmega {
    fn new(graph: &DirectedWeightedGraph, omega: &VertexSubset, variant: Variant) -> Self {
        let members = omega.indices().to_vec();
        let mut neighbors = vec![Vec::new(); members.len()];
        let mut outside = vec![0.0; members.len()];
        for (i, &x) in members.iter().enumerate() {
            for y in graph.undirected_neighbors(x) {
                let w = graph.symmetric_weight(x, y);
                match omega.position(y) {
                    Some(j) => neighbors[i].push((j, w)),
                    None => outside[i] += w,
                }
            }
        }
        let denom = members.iter().map(|&x| denominator_weight(graph, x, variant)).collect();
        Self { members, neighbors, outside, denom }
    }

    fn len(&self) -> usize {
        self.members.len()
    }

    fn subset(&self, parent_len: usize, local: impl IntoIterator<Item = usize>) -> VertexSubset {
        VertexSubset::from_indices(parent_len, local.into_iter().map(|i| self.members[i]))
    }

    /// Boundary change when local vertex `i` joins (`sign = 1`) or leaves (`−1`) `U`.
    fn toggle_delta(&self, i: usize, in_u: &[bool], joining: bool) -> f64 {
        let inner: f64 = self.neighbors[i].iter().map(|&(j, w)| if in_u[j] { -w } else { w }).sum();
        let delta = inner + self.outside[i];
        if joining {
            delta
        } else {
            -delta
        }
    }
}

/// Brute-force infimum over all `2^|Ω| − 1` subsets, `|Ω| ≤ 22`.
pub fn cheeger_exact(graph: &DirectedWeightedGraph, omega: &VertexSubset, variant: Variant) -> Result<CheegerFragment> {
    check_omega(graph, omega)?;
    if omega.len() > EXACT_LIMIT {
        return Err(Error::SubsetTooLarge { size: omega.len(), limit: EXACT_LIMIT });
    }
    let local = LocalOmega::new(graph, omega, variant);
    let n = local.len();
    // Split by the top bits into independent Gray-code sweeps over the low bits.
    let high_bits = n.min(4);
    let low_bits = n - high_bits;
    let best = (0u64..1 << high_bits)
        .into_par_iter()
        .map(|prefix| {
            let mut in_u = vec![false; n];
            let mut boundary = 0.0;
            let mut den = 0.0;
            for b in 0..high_bits {
                if prefix >> b & 1 == 1 {
                    let i = low_bits + b;
                    boundary += local.toggle_delta(i, &in_u, true);
                    den += local.denom[i];
                    in_u[i] = true;
                }
            }
            let mut best: Option<(f64, u64)> = None;
            let mut consider = |boundary: f64, den: f64, mask: u64| {
                if den > 0.0 {
                    let r = boundary / den;
                    if best.is_none_or(|(v, m)| r < v || (r == v && mask < m)) {
                        best = Some((r, mask));
                    }
                }
            };
            let prefix_mask = prefix << low_bits;
            consider(boundary, den, prefix_mask);
            let mut gray: u64 = 0;
            for step in 1u64..1 << low_bits {
                let bit = step.trailing_zeros() as usize;
                let joining = !in_u[bit];
                boundary += local.toggle_delta(bit, &in_u, joining);
                if joining {
                    den += local.denom[bit];
                } else {
                    den -= local.denom[bit];
                }
                in_u[bit] = joining;
                gray ^= 1 << bit;
                consider(boundary, den, prefix_mask | gray);
            }
            best
        })
        .filter_map(|b| b)
        .collect::<Vec<_>>();
    // Re-evaluate the per-block winners directly to remove accumulated rounding.
    let winner = best
        .into_iter()
        .map(|(_, mask)| {
            let u = local.subset(graph.len(), (0..n).filter(|i| mask >> i & 1 == 1));
            (cheeger_ratio(graph, &u, variant).expect("non-empty"), mask, u)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .expect("at least one non-empty subset");
    Ok(fragment(graph, winner.2, variant, Mode::Exact))
}

/// Exact infimum through connected subsets only.
///
/// Components of `U` that share no edge have disjoint boundaries, so the
/// ratio of `U` is a mediant of its components' ratios and the infimum is
/// attained on a connected `U`. Enumeration visits each connected subset of
/// `Ω` once; `budget` caps the count.
pub fn cheeger_connected(
    graph: &DirectedWeightedGraph,
    omega: &VertexSubset,
    variant: Variant,
    budget: usize,
) -> Result<CheegerFragment> {
    check_omega(graph, omega)?;
    let local = LocalOmega::new(graph, omega, variant);
    let n = local.len();
    type RootBest = Result<Option<(f64, Vec<usize>)>>;
    let results: Vec<RootBest> = (0..n)
        .into_par_iter()
        .map(|root| {
            let mut state = ConnectedSearch {
                local: &local,
                root,
                in_u: vec![false; n],
                forbidden: vec![false; n],
                members: vec![root],
                visited: 0,
                budget,
                best: None,
            };
            state.in_u[root] = true;
            let boundary = local.toggle_delta(root, &vec![false; n], true);
            state.recurse(boundary, local.denom[root])?;
            Ok(state.best)
        })
        .collect();
    let mut winner: Option<(f64, VertexSubset)> = None;
    for r in results {
        if let Some((_, members)) = r? {
            let u = local.subset(graph.len(), members);
            let v = cheeger_ratio(graph, &u, variant)?;
            if winner.as_ref().is_none_or(|(w, _)| v < *w) {
                winner = Some((v, u));
            }
        }
    }
    let (_, u) = winner.expect("Ω is non-empty");
    Ok(fragment(graph, u, variant, Mode::Exact))
}

struct ConnectedSearch<'a> {
    local: &'a LocalOmega,
    root: usize,
    in_u: Vec<bool>,
    forbidden: Vec<bool>,
    members: Vec<usize>,
    visited: usize,
    budget: usize,
    best: Option<(f64, Vec<usize>)>,
}

impl ConnectedSearch<'_> {
    fn candidate(&self) -> Option<usize> {
        self.members
            .iter()
            .flat_map(|&i| self.local.neighbors[i].iter().map(|&(j, _)| j))
            .filter(|&j| j > self.root && !self.in_u[j] && !self.forbidden[j])
            .min()
    }

    /// Every connected set whose smallest local index is `root` is reached at
    /// exactly one leaf: each branch decides membership of one frontier vertex.
    fn recurse(&mut self, boundary: f64, den: f64) -> Result<()> {
        match self.candidate() {
            None => {
                self.visited += 1;
                if self.visited > self.budget {
                    return Err(Error::SubsetTooLarge { size: self.local.len(), limit: self.budget });
                }
                let r = boundary / den;
                if self.best.as_ref().is_none_or(|(v, _)| r < *v) {
                    let mut m = self.members.clone();
                    m.sort_unstable();
                    self.best = Some((r, m));
                }
                Ok(())
            }
            Some(c) => {
                let delta = self.local.toggle_delta(c, &self.in_u, true);
                self.in_u[c] = true;
                self.members.push(c);
                self.recurse(boundary + delta, den + self.local.denom[c])?;
                self.members.pop();
                self.in_u[c] = false;

                self.forbidden[c] = true;
                let out = self.recurse(boundary, den);
                self.forbidden[c] = false;
                out
            }
        }
    }
}

/// Exact value by brute force when small, otherwise through connected subsets.
pub fn cheeger_auto(graph: &DirectedWeightedGraph, omega: &VertexSubset, variant: Variant) -> Result<CheegerFragment> {
    if omega.len() <= 12 {
        cheeger_exact(graph, omega, variant)
    } else {
        cheeger_connected(graph, omega, variant, CONNECTED_BUDGET)
    }
}

/// Upper bound from sweep cuts of the first two Dirichlet eigenvectors of
/// `S̃` on each component of `Ω`, refined by single-vertex moves.
pub fn cheeger_heuristic(
    graph: &DirectedWeightedGraph,
    omega: &VertexSubset,
    variant: Variant,
    seed: u64,
) -> Result<CheegerFragment> {
    check_omega(graph, omega)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, VertexSubset)> = None;
    let offer = |u: VertexSubset, best: &mut Option<(f64, VertexSubset)>| -> Result<()> {
        if u.is_empty() {
            return Ok(());
        }
        let r = cheeger_ratio(graph, &u, variant)?;
        if best.as_ref().is_none_or(|(v, _)| r < *v) {
            *best = Some((r, u));
        }
        Ok(())
    };
    for comp in omega.components(graph) {
        offer(comp.clone(), &mut best)?;
        let local = LocalOmega::new(graph, &comp, variant);
        let n = local.len();
        let mut orders: Vec<Vec<usize>> = Vec::new();
        if n > 1 {
            let s = assemble(graph, &comp, OperatorKind::S)?;
            let dense = s.symmetrized();
            let eig = nalgebra::SymmetricEigen::new((&dense + dense.transpose()) * 0.5);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
            for &k in idx.iter().take(2) {
                let col = eig.eigenvectors.column(k);
                let sq: Vec<f64> = comp.indices().iter().map(|&x| graph.measure(x).sqrt()).collect();
                let f: Vec<f64> = (0..n).map(|i| col[i] / sq[i]).collect();
                let mut order: Vec<usize> = (0..n).collect();
                order.sort_by(|&a, &b| f[b].total_cmp(&f[a]).then(a.cmp(&b)));
                orders.push(order.clone());
                order.reverse();
                orders.push(order);
            }
        }
        let mut comp_best: Option<(f64, Vec<bool>)> = None;
        let consider = |in_u: &[bool], comp_best: &mut Option<(f64, Vec<bool>)>| {
            let bnd: f64 = (0..n)
                .filter(|&i| in_u[i])
                .map(|i| {
                    local.outside[i]
                        + local.neighbors[i].iter().filter(|&&(j, _)| !in_u[j]).map(|&(_, w)| w).sum::<f64>()
                })
                .sum();
            let den: f64 = (0..n).filter(|&i| in_u[i]).map(|i| local.denom[i]).sum();
            if den > 0.0 {
                let r = bnd / den;
                if comp_best.as_ref().is_none_or(|(v, _)| r < *v) {
                    *comp_best = Some((r, in_u.to_vec()));
                }
            }
        };
        for order in &orders {
            let mut in_u = vec![false; n];
            for &i in order {
                in_u[i] = true;
                consider(&in_u, &mut comp_best);
            }
        }
        for i in 0..n {
            let mut in_u = vec![false; n];
            in_u[i] = true;
            consider(&in_u, &mut comp_best);
        }
        // Greedy single-vertex moves from the best sweep cut and from random singletons.
        let mut starts: Vec<Vec<bool>> = comp_best.iter().map(|(_, u)| u.clone()).collect();
        for _ in 0..4.min(n) {
            let mut in_u = vec![false; n];
            in_u[rng.gen_range(0..n)] = true;
            starts.push(in_u);
        }
        for mut in_u in starts {
            let mut current = ratio_of(&local, &in_u);
            loop {
                let mut improved = false;
                for i in 0..n {
                    in_u[i] = !in_u[i];
                    let r = ratio_of(&local, &in_u);
                    if r < current - 1e-15 * current.abs().max(1.0) {
                        current = r;
                        improved = true;
                    } else {
                        in_u[i] = !in_u[i];
                    }
                }
                if !improved {
                    break;
                }
            }
            consider(&in_u, &mut comp_best);
        }
        if let Some((_, in_u)) = comp_best {
            offer(local.subset(graph.len(), (0..n).filter(|&i| in_u[i])), &mut best)?;
        }
    }
    let (_, u) = best.expect("Ω is non-empty");
    Ok(fragment(graph, u, variant, Mode::Heuristic))
}

fn ratio_of(local: &LocalOmega, in_u: &[bool]) -> f64 {
    let n = local.len();
    let den: f64 = (0..n).filter(|&i| in_u[i]).map(|i| local.denom[i]).sum();
    if den <= 0.0 {
        return f64::INFINITY;
    }
    let bnd: f64 = (0..n)
        .filter(|&i| in_u[i])
        .map(|i| local.outside[i] + local.neighbors[i].iter().filter(|&&(j, _)| !in_u[j]).map(|&(_, w)| w).sum::<f64>())
        .sum();
    bnd / den
}

/// `M_Ω = max_{x ∈ Ω} β⁺(x)/m(x)`.
pub fn m_sup(graph: &DirectedWeightedGraph, omega: &VertexSubset) -> Result<f64> {
    if omega.is_empty() {
        return Err(Error::EmptySubset);
    }
    Ok(omega.indices().iter().map(|&x| graph.beta_out(x) / graph.measure(x)).fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheegerReport {
    pub h_value: f64,
    pub h_tilde_value: f64,
    pub witness_h: Vec<VertexId>,
    pub witness_h_tilde: Vec<VertexId>,
    #[serde(rename = "M_omega")]
    pub m_omega: f64,
    pub mode: Mode,
    pub nu: f64,
    pub lambda1: f64,
    /// `h²/8`.
    pub inequality_left: f64,
    /// `M_Ω ν(Δ^D_Ω)`.
    pub inequality_mid: f64,
    /// `M_Ω h/2`.
    pub inequality_right: f64,
    pub inequality_holds: bool,
    /// `M_Ω λ₁(S^D_Ω) ≥ h²/8`.
    pub self_adjoint_bound_holds: bool,
}

/// `h²/8 ≤ M_Ω ν(Δ^D_Ω) ≤ M_Ω h/2` with exact `h`.
pub fn inequality_check(graph: &DirectedWeightedGraph, omega: &VertexSubset) -> Result<CheegerReport> {
    check_omega(graph, omega)?;
    let exact = |variant| match cheeger_auto(graph, omega, variant) {
        Err(Error::SubsetTooLarge { .. }) => cheeger_heuristic(graph, omega, variant, 0),
        other => other,
    };
    let h = exact(Variant::H)?;
    let ht = exact(Variant::HTilde)?;
    let m_omega = m_sup(graph, omega)?;
    let nu = nu(&assemble(graph, omega, OperatorKind::Delta)?)?;
    let lambda1 = lambda1_symmetric(&assemble(graph, omega, OperatorKind::S)?)?;
    let tol = 1e-8;
    let left = h.value * h.value / 8.0;
    let mid = m_omega * nu;
    let right = m_omega * h.value / 2.0;
    let mode = if h.mode == Mode::Exact && ht.mode == Mode::Exact { Mode::Exact } else { Mode::Heuristic };
    let right_ok = mid <= right + tol * right.abs().max(1.0);
    let left_ok = left <= mid + tol * mid.abs().max(1.0);
    Ok(CheegerReport {
        h_value: h.value,
        h_tilde_value: ht.value,
        witness_h: h.witness,
        witness_h_tilde: ht.witness,
        m_omega,
        mode,
        nu,
        lambda1,
        inequality_left: left,
        inequality_mid: mid,
        inequality_right: right,
        // An upper-bound h only certifies the right-hand inequality.
        inequality_holds: right_ok && (left_ok || mode == Mode::Heuristic),
        self_adjoint_bound_holds: m_omega * lambda1 >= left - tol * left.abs().max(1.0) || mode == Mode::Heuristic,
    })
}

/// Which sets stand in for `G_n^c` when tracing `h_∞`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrendDomain {
    /// `G_n^c` intersected with the window interior.
    Complement,
    /// `G_{factor·n} ∖ G_n`.
    Annulus { factor: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub n: usize,
    /// Upper bound on `h(G_n^c)` (resp. `h̃`): the exact infimum over the finite domain.
    pub value: f64,
    pub mode: Mode,
    pub domain_size: usize,
    pub witness: Vec<VertexId>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HInfinityTrend {
    pub variant: Variant,
    pub domain: TrendDomain,
    pub points: Vec<TrendPoint>,
    /// Least-squares fit `value ≈ prefactor · n^exponent`.
    pub exponent: f64,
    pub prefactor: f64,
}

fn trend_domain(
    graph: &DirectedWeightedGraph,
    filtration: &Filtration,
    n: usize,
    domain: TrendDomain,
) -> Result<VertexSubset> {
    let set = match domain {
        TrendDomain::Complement => graph.interior().difference(filtration.level(n)?),
        TrendDomain::Annulus { factor } => {
            let k = factor * n;
            if k >= filtration.len() {
                return Err(Error::WindowTooSmall(format!("filtration has no level {k}")));
            }
            filtration.annulus(n, k)?
        }
    };
    if set.is_empty() {
        return Err(Error::WindowTooSmall(format!("empty domain at n = {n}")));
    }
    if let Some(&x) = set.indices().iter().find(|&&x| graph.is_window_boundary(x)) {
        return Err(Error::WindowTooSmall(format!("domain at n = {n} reaches window boundary vertex {}", graph.id(x))));
    }
    Ok(set)
}

pub fn h_infinity_trend(
    graph: &DirectedWeightedGraph,
    filtration: &Filtration,
    ns: &[usize],
    variant: Variant,
    domain: TrendDomain,
) -> Result<HInfinityTrend> {
    let points = ns
        .iter()
        .map(|&n| {
            let omega = trend_domain(graph, filtration, n, domain)?;
            let frag = match cheeger_auto(graph, &omega, variant) {
                Err(Error::SubsetTooLarge { .. }) => cheeger_heuristic(graph, &omega, variant, 0)?,
                other => other?,
            };
            Ok(TrendPoint { n, value: frag.value, mode: frag.mode, domain_size: omega.len(), witness: frag.witness })
        })
        .collect::<Result<Vec<_>>>()?;
    let (exponent, prefactor) = power_law_fit(&points);
    Ok(HInfinityTrend { variant, domain, points, exponent, prefactor })
}

pub fn h_infinity_trend_for_spec(
    spec: &GeneratorSpec,
    ns: &[usize],
    variant: Variant,
    domain: TrendDomain,
) -> Result<HInfinityTrend> {
    let graph = spec.build()?;
    let max_level = match domain {
        TrendDomain::Complement => ns.iter().copied().max().unwrap_or(0),
        TrendDomain::Annulus { factor } => ns.iter().map(|n| n * factor).max().unwrap_or(0),
    };
    let filtration = Filtration::hop_balls(&graph, spec.root(&graph), max_level)?;
    h_infinity_trend(&graph, &filtration, ns, variant, domain)
}

fn power_law_fit(points: &[TrendPoint]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> =
        points.iter().filter(|p| p.n > 0 && p.value > 0.0).map(|p| ((p.n as f64).ln(), p.value.ln())).collect();
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    (slope, (my - slope * mx).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AbsVerdict {
    Satisfied,
    NotSatisfied,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsCell {
    pub n: usize,
    pub k: usize,
    pub h: f64,
    #[serde(rename = "M")]
    pub m_sup: f64,
    /// `h²/(8M)` on `G_k ∖ G_n`.
    pub ratio: f64,
    pub lambda1: f64,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbsReport {
    pub cells: Vec<AbsCell>,
    /// `(n, c_n)` with `c_n = min_k h²(G_k∖G_n)/(8 M_{G_k∖G_n})`.
    pub c_sequence: Vec<(usize, f64)>,
    pub verdict: AbsVerdict,
    /// `λ₁(S^D_{G_k∖G_n}) ≥ c_n` on every computed cell.
    pub cross_check_holds: bool,
}

/// Strict increase over the last three entries.
pub(crate) fn strictly_increasing_tail(values: &[f64]) -> bool {
    values.len() >= 3 && values[values.len() - 3..].windows(2).all(|w| w[1] > w[0])
}

pub(crate) fn check_schedule(schedule: &[(usize, Vec<usize>)]) -> Result<()> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty schedule".into()));
    }
    for (n, ks) in schedule {
        if ks.is_empty() {
            return Err(Error::InvalidParameter(format!("no k scheduled for n = {n}")));
        }
        if let Some(k) = ks.iter().find(|&&k| k <= *n) {
            return Err(Error::InvalidParameter(format!("schedule needs k > n, got n = {n}, k = {k}")));
        }
    }
    Ok(())
}

/// Annulus `G_k ∖ G_n`, rejecting sets that reach the window boundary.
pub(crate) fn interior_annulus(
    graph: &DirectedWeightedGraph,
    filtration: &Filtration,
    n: usize,
    k: usize,
) -> Result<VertexSubset> {
    if k >= filtration.len() {
        return Err(Error::WindowTooSmall(format!("filtration has no level {k}")));
    }
    let set = filtration.annulus(n, k)?;
    if let Some(&x) = set.indices().iter().find(|&&x| graph.is_window_boundary(x)) {
        return Err(Error::WindowTooSmall(format!("G_{k} \\ G_{n} reaches window boundary vertex {}", graph.id(x))));
    }
    if set.is_empty() {
        return Err(Error::WindowTooSmall(format!("G_{k} \\ G_{n} is empty")));
    }
    Ok(set)
}

/// Condition (Abs) over the scheduled `(n, k)` cells, with the cross-check
/// `λ₁(S^D_{G_k∖G_n}) ≥ c_n`.
pub fn abs_condition(
    graph: &DirectedWeightedGraph,
    filtration: &Filtration,
    schedule: &[(usize, Vec<usize>)],
) -> Result<AbsReport> {
    check_schedule(schedule)?;
    let jobs: Vec<(usize, usize)> = schedule.iter().flat_map(|(n, ks)| ks.iter().map(move |&k| (*n, k))).collect();
    let cells = jobs
        .par_iter()
        .map(|&(n, k)| {
            let omega = interior_annulus(graph, filtration, n, k)?;
            let frag = match cheeger_auto(graph, &omega, Variant::H) {
                Err(Error::SubsetTooLarge { .. }) => cheeger_heuristic(graph, &omega, Variant::H, 0)?,
                other => other?,
            };
            let m = m_sup(graph, &omega)?;
            let (lambda1, _) = lambda1_symmetric_pair(&assemble(graph, &omega, OperatorKind::S)?)?;
            Ok(AbsCell {
                n,
                k,
                h: frag.value,
                m_sup: m,
                ratio: frag.value * frag.value / (8.0 * m),
                lambda1,
                mode: frag.mode,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let c_sequence: Vec<(usize, f64)> = schedule
        .iter()
        .map(|(n, _)| {
            let c = cells.iter().filter(|c| c.n == *n).map(|c| c.ratio).fold(f64::INFINITY, f64::min);
            (*n, c)
        })
        .collect();
    let cross_check_holds = cells.iter().all(|cell| {
        let c = c_sequence.iter().find(|(n, _)| *n == cell.n).expect("scheduled n").1;
        cell.lambda1 >= c - 1e-10 * c.abs().max(1.0)
    });
    let values: Vec<f64> = c_sequence.iter().map(|c| c.1).collect();
    let verdict = if values.len() < 3 {
        AbsVerdict::Inconclusive
    } else if strictly_increasing_tail(&values) {
        AbsVerdict::Satisfied
    } else if values[values.len() - 3..].windows(2).all(|w| w[1] <= w[0]) {
        AbsVerdict::NotSatisfied
    } else {
        AbsVerdict::Inconclusive
    };
    Ok(AbsReport { cells, c_sequence, verdict, cross_check_holds })
}

pub fn abs_condition_for_spec(spec: &GeneratorSpec, schedule: &[(usize, Vec<usize>)]) -> Result<AbsReport> {
    let graph = spec.build()?;
    let max_k = schedule.iter().flat_map(|(_, ks)| ks.iter().copied()).max().unwrap_or(0);
    let filtration = Filtration::hop_balls(&graph, spec.root(&graph), max_k)?;
    abs_condition(&graph, &filtration, schedule)
}

/// `k = factor · n` for every factor, per `n`.
pub fn multiples_schedule(ns: &[usize], factors: &[usize]) -> Vec<(usize, Vec<usize>)> {
    ns.iter().map(|&n| (n, factors.iter().map(|f| f * n).collect())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_directed_cycle, gen_z_line, gen_z_line_uniform, z_shell};
    use crate::graph::ratio;

    fn cycle3() -> DirectedWeightedGraph {
        gen_directed_cycle(3, ratio(1, 1), ratio(0, 1)).unwrap()
    }

    #[test]
    fn boundary_weights() {
        let g = cycle3();
        assert_eq!(boundary_weight(&g, &g.subset([0i64]).unwrap()).unwrap().value, 2.0);
        let z = gen_z_line(8);
        let u = z.subset(1i64..=4).unwrap();
        let bw = boundary_weight(&z, &u).unwrap();
        assert_eq!(bw.value, 66.0);
        assert!(!bw.touches_window_boundary);
        let full = boundary_weight(&z, &z.all()).unwrap();
        assert_eq!(full.value, 0.0);
        assert!(full.touches_window_boundary);
    }

    #[test]
    fn exact_on_cycle_pair() {
        let g = cycle3();
        let f = cheeger_exact(&g, &g.subset([0i64, 1]).unwrap(), Variant::H).unwrap();
        assert_eq!(f.value, 1.0);
        assert_eq!(f.witness, vec![VertexId::Int(0), VertexId::Int(1)]);
    }

    #[test]
    fn exact_on_z_segment() {
        let z = gen_z_line(10);
        let omega = z.subset(2i64..=6).unwrap();
        let whole = cheeger_ratio(&z, &omega, Variant::H).unwrap();
        assert_eq!(whole, 219.0 / 5.0);
        let f = cheeger_exact(&z, &omega, Variant::H).unwrap();
        assert!(f.value <= whole);
        let c = cheeger_connected(&z, &omega, Variant::H, CONNECTED_BUDGET).unwrap();
        assert_eq!(c.value, f.value);
        assert_eq!(c.witness, f.witness);
    }

    #[test]
    fn h_tilde_on_uniform_segment_halves_h() {
        let line = gen_z_line_uniform(10, 1);
        let omega = line.subset(-3i64..=3).unwrap();
        let h = cheeger_exact(&line, &omega, Variant::H).unwrap().value;
        let ht = cheeger_exact(&line, &omega, Variant::HTilde).unwrap().value;
        assert!((ht - h / 2.0).abs() < 1e-15);
    }

    #[test]
    fn size_limit_and_boundary() {
        let z = gen_z_line(30);
        let big = z.subset(1i64..=23).unwrap();
        assert!(matches!(cheeger_exact(&z, &big, Variant::H), Err(Error::SubsetTooLarge { .. })));
        assert!(matches!(cheeger_exact(&z, &z.subset([30i64]).unwrap(), Variant::H), Err(Error::BoundaryVertex(_))));
    }

    #[test]
    fn heuristic_singleton_and_components() {
        let z = gen_z_line(10);
        let single = z.subset([3i64]).unwrap();
        let h = cheeger_heuristic(&z, &single, Variant::H, 0).unwrap();
        assert_eq!(h.value, cheeger_ratio(&z, &single, Variant::H).unwrap());
        let split = z.subset([-6i64, -5, 2, 3, 4]).unwrap();
        let heur = cheeger_heuristic(&z, &split, Variant::H, 0).unwrap();
        let exact = cheeger_exact(&z, &split, Variant::H).unwrap();
        assert!(heur.value >= exact.value);
        let per_comp = split
            .components(&z)
            .iter()
            .map(|c| cheeger_exact(&z, c, Variant::H).unwrap().value)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(exact.value, per_comp);
    }

    #[test]
    fn m_sup_on_z_shell() {
        let z = gen_z_line(10);
        assert_eq!(m_sup(&z, &z.subset(2i64..=5).unwrap()).unwrap(), 95.5);
        // The left half carries the heavier edge {-6, -5}.
        assert_eq!(m_sup(&z, &z_shell(&z, 2, 5)).unwrap(), 171.5);
        assert_eq!(m_sup(&z, &z.subset([0i64]).unwrap()).unwrap(), 1.5);
    }

    #[test]
    fn inequality_on_cycle_pair() {
        let g = cycle3();
        let r = inequality_check(&g, &g.subset([0i64, 1]).unwrap()).unwrap();
        assert_eq!(r.h_value, 1.0);
        assert_eq!(r.m_omega, 1.0);
        assert!((r.nu - 0.5).abs() < 1e-14);
        assert_eq!(r.inequality_left, 0.125);
        assert!((r.inequality_mid - 0.5).abs() < 1e-14);
        assert_eq!(r.inequality_right, 0.5);
        assert!(r.inequality_holds && r.self_adjoint_bound_holds);
        assert_eq!(r.mode, Mode::Exact);
    }

    #[test]
    fn inequality_on_path_segment() {
        let line = gen_z_line_uniform(6, 1);
        let r = inequality_check(&line, &line.subset(-1i64..=1).unwrap()).unwrap();
        // Whole segment: boundary 2 + 2, mass 3.
        assert!((r.h_value - 4.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.m_omega, 2.0);
        let want_nu = 2.0 - 2f64.sqrt();
        assert!((r.nu - want_nu).abs() < 1e-12);
        assert!(r.inequality_holds);
    }

    #[test]
    fn symmetric_line_abs_not_satisfied() {
        let spec = GeneratorSpec::ZLine { radius: 40, weights: crate::generators::ZWeights::Uniform(1) };
        let report = abs_condition_for_spec(&spec, &multiples_schedule(&[1, 2, 3, 4, 5], &[2, 3])).unwrap();
        assert_eq!(report.verdict, AbsVerdict::NotSatisfied);
        assert!(report.cross_check_holds);
        assert!(report.c_sequence.iter().all(|c| c.1 >= 0.0));
    }

    #[test]
    fn schedule_rejects_k_not_above_n() {
        let z = gen_z_line(20);
        let f = Filtration::hop_balls(&z, z.index_of(&0i64.into()).unwrap(), 8).unwrap();
        assert!(abs_condition(&z, &f, &[(3, vec![3])]).is_err());
    }

    #[test]
    fn trend_window_too_small() {
        let spec = GeneratorSpec::z_line(8);
        assert!(matches!(
            h_infinity_trend_for_spec(&spec, &[4], Variant::HTilde, TrendDomain::Annulus { factor: 2 }),
            Err(Error::WindowTooSmall(_))
        ));
    }
}
