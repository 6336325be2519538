//! Graph windows that satisfy the Kirchhoff balance `β⁺ = β⁻` exactly.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_traits::{One, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::format::load_graph;
use crate::graph::{ratio, rational_from_f64, DirectedWeightedGraph, GraphBuilder, Rational, VertexSubset};

const MAX_RESAMPLES: usize = 1000;
const WEIGHT_STEPS: i64 = 64;

/// Closed range of positive weights, sampled on a grid of 64 steps so that
/// sums stay small exact rationals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightRange {
    pub lo: f64,
    pub hi: f64,
}

impl WeightRange {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(lo >= 0.0 && hi >= lo && hi > 0.0 && hi.is_finite()) {
            return Err(Error::InvalidParameter(format!("bad weight range [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    fn sample(&self, rng: &mut impl Rng) -> Result<Rational> {
        let lo = rational_from_f64(self.lo)?;
        let hi = rational_from_f64(self.hi)?;
        let first = if lo.is_zero() { 1 } else { 0 };
        let k = rng.gen_range(first..=WEIGHT_STEPS);
        Ok(&lo + (hi - &lo) * ratio(k, WEIGHT_STEPS))
    }
}

impl Default for WeightRange {
    fn default() -> Self {
        Self { lo: 0.5, hi: 2.0 }
    }
}

/// Weight profile of the integer line.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ZWeights {
    /// `b(l, l+1) = (|l|³+1)/2 + 1/4`, `b(l+1, l) = (|l|³+1)/2 − 1/4`.
    Cubic,
    /// `b ≡ w` in both directions.
    Uniform(i64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GeneratorSpec {
    ZLine { radius: usize, weights: ZWeights },
    DirectedCycle { n: usize, forward: f64, backward: f64 },
    SymmetricRandom { size: usize, seed: u64, density: f64, weight_range: WeightRange },
    CirculationRandom { size: usize, seed: u64, symmetric_density: f64, cycle_count: usize, weight_range: WeightRange },
    File { path: PathBuf },
}

impl GeneratorSpec {
    pub fn z_line(radius: usize) -> Self {
        GeneratorSpec::ZLine { radius, weights: ZWeights::Cubic }
    }

    pub fn build(&self) -> Result<DirectedWeightedGraph> {
        match self {
            GeneratorSpec::ZLine { radius, weights } => {
                if *radius < 1 {
                    return Err(Error::InvalidParameter("radius must be at least 1".into()));
                }
                Ok(match weights {
                    ZWeights::Cubic => gen_z_line(*radius),
                    ZWeights::Uniform(w) => {
                        if *w <= 0 {
                            return Err(Error::InvalidParameter("uniform weight must be positive".into()));
                        }
                        gen_z_line_uniform(*radius, *w)
                    }
                })
            }
            GeneratorSpec::DirectedCycle { n, forward, backward } => {
                gen_directed_cycle(*n, rational_from_f64(*forward)?, rational_from_f64(*backward)?)
            }
            GeneratorSpec::SymmetricRandom { size, seed, density, weight_range } => {
                gen_symmetric_random(*size, *seed, *density, weight_range)
            }
            GeneratorSpec::CirculationRandom { size, seed, symmetric_density, cycle_count, weight_range } => {
                gen_circulation_random(*size, *seed, *symmetric_density, *cycle_count, weight_range)
            }
            GeneratorSpec::File { path } => load_graph(path),
        }
    }

    /// Index of the natural filtration root: vertex `0` when present, else the first vertex.
    pub fn root(&self, graph: &DirectedWeightedGraph) -> usize {
        graph.index_of(&0i64.into()).unwrap_or(0)
    }
}

fn line_builder(radius: usize) -> GraphBuilder {
    let r = radius as i64;
    let mut b = GraphBuilder::new();
    for l in -r..=r {
        b.vertex(l, Rational::one());
    }
    b.window_boundary(-r).window_boundary(r);
    b
}

/// Window `{−radius..radius}` of the integer line with cubic weights, `m ≡ 1`.
///
/// The two extreme vertices are marked as window boundary.
pub fn gen_z_line(radius: usize) -> DirectedWeightedGraph {
    assert!(radius >= 1, "radius must be at least 1");
    let r = radius as i64;
    let mut b = line_builder(radius);
    for l in -r..r {
        let base = ratio(l.abs().pow(3) + 1, 2);
        b.edge(l, l + 1, &base + ratio(1, 4));
        b.edge(l + 1, l, base - ratio(1, 4));
    }
    b.build().expect("z-line window is well formed")
}

/// Window of the integer line with `b ≡ weight` both ways, `m ≡ 1`.
pub fn gen_z_line_uniform(radius: usize, weight: i64) -> DirectedWeightedGraph {
    assert!(radius >= 1 && weight > 0);
    let r = radius as i64;
    let mut b = line_builder(radius);
    for l in -r..r {
        b.edge(l, l + 1, ratio(weight, 1));
        b.edge(l + 1, l, ratio(weight, 1));
    }
    b.build().expect("uniform line window is well formed")
}

pub fn gen_directed_cycle(n: usize, forward: Rational, backward: Rational) -> Result<DirectedWeightedGraph> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!("cycle needs n >= 3, got {n}")));
    }
    if forward <= Rational::zero() || backward < Rational::zero() {
        return Err(Error::InvalidParameter("forward weight must be positive, backward nonnegative".into()));
    }
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.vertex(i, Rational::one());
    }
    for i in 0..n {
        let j = (i + 1) % n;
        b.edge(i, j, forward.clone());
        if !backward.is_zero() {
            b.edge(j, i, backward.clone());
        }
    }
    b.build()
}

fn check_density(density: f64) -> Result<()> {
    if (0.0..=1.0).contains(&density) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("density must lie in [0, 1], got {density}")))
    }
}

/// Random symmetric weights on an Erdős–Rényi edge set, resampled until connected.
fn symmetric_base(
    rng: &mut ChaCha8Rng,
    size: usize,
    density: f64,
    range: &WeightRange,
) -> Result<BTreeMap<(usize, usize), Rational>> {
    for _ in 0..MAX_RESAMPLES {
        let mut weights = BTreeMap::new();
        let mut adj = vec![Vec::new(); size];
        for i in 0..size {
            for j in i + 1..size {
                if rng.gen_bool(density) {
                    let w = range.sample(rng)?;
                    weights.insert((i, j), w.clone());
                    weights.insert((j, i), w);
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        let mut seen = vec![false; size];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(x) = stack.pop() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    stack.push(y);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            return Ok(weights);
        }
    }
    Err(Error::GenerationFailed(MAX_RESAMPLES))
}

fn assemble_random(
    rng: &mut ChaCha8Rng,
    size: usize,
    weights: BTreeMap<(usize, usize), Rational>,
    range: &WeightRange,
) -> Result<DirectedWeightedGraph> {
    let mut b = GraphBuilder::new();
    for i in 0..size {
        b.vertex(i, range.sample(rng)?);
    }
    for ((i, j), w) in weights {
        b.edge(i, j, w);
    }
    b.build()
}

pub fn gen_symmetric_random(
    size: usize,
    seed: u64,
    density: f64,
    weight_range: &WeightRange,
) -> Result<DirectedWeightedGraph> {
    if size < 2 {
        return Err(Error::InvalidParameter(format!("size must be at least 2, got {size}")));
    }
    check_density(density)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let weights = symmetric_base(&mut rng, size, density, weight_range)?;
    assemble_random(&mut rng, size, weights, weight_range)
}

/// Symmetric random base plus `cycle_count` random directed simple cycles,
/// each carrying a random positive flow. Every vertex stays balanced exactly.
pub fn gen_circulation_random(
    size: usize,
    seed: u64,
    symmetric_density: f64,
    cycle_count: usize,
    weight_range: &WeightRange,
) -> Result<DirectedWeightedGraph> {
    if size < 2 {
        return Err(Error::InvalidParameter(format!("size must be at least 2, got {size}")));
    }
    check_density(symmetric_density)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut weights = symmetric_base(&mut rng, size, symmetric_density, weight_range)?;
    let mut order: Vec<usize> = (0..size).collect();
    for _ in 0..cycle_count {
        let len = if size >= 3 { rng.gen_range(3..=size.min(8)) } else { 2 };
        order.shuffle(&mut rng);
        let flow = weight_range.sample(&mut rng)?;
        let flow = if flow.is_zero() { Rational::one() } else { flow };
        for i in 0..len {
            let key = (order[i], order[(i + 1) % len]);
            *weights.entry(key).or_insert_with(Rational::zero) += &flow;
        }
    }
    assemble_random(&mut rng, size, weights, weight_range)
}

/// Vertices `{k : lo ≤ |k| ≤ hi}` of an integer-line window.
pub fn z_shell(graph: &DirectedWeightedGraph, lo: i64, hi: i64) -> VertexSubset {
    graph.subset_where(|id| matches!(id, crate::graph::VertexId::Int(k) if (lo..=hi).contains(&k.abs())))
}
