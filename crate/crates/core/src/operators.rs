//! Assembly of `Δ`, `Δ′`, `S` and `B` as Dirichlet restrictions acting on
//! `ℓ²(V, m)`, plus the weighted inner product and Green's identity.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{DirectedWeightedGraph, VertexSubset};
use crate::linalg::{fmt_f64, lanczos_extreme, Csr, End, DENSE_LIMIT};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OperatorKind {
    /// `Δf(x) = (1/m(x)) Σ_y b(x,y)(f(x) − f(y))`.
    Delta,
    /// Formal adjoint: weights transposed.
    DeltaPrime,
    /// `(Δ + Δ′)/2`.
    S,
    /// `Δ − Δ′`.
    B,
    Custom,
}

/// A square matrix on an ordered vertex subset, read as an operator on `ℓ²(V, m)`.
#[derive(Clone, Debug)]
pub struct WeightedOperator {
    matrix: Csr,
    measure: Vec<f64>,
    kind: OperatorKind,
    domain: VertexSubset,
}

impl WeightedOperator {
    /// Wraps an arbitrary dense matrix indexed by `domain`.
    pub fn custom(matrix: DMatrix<f64>, measure: Vec<f64>, domain: VertexSubset) -> Result<Self> {
        let n = domain.len();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: matrix.nrows() });
        }
        if measure.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: measure.len() });
        }
        if let Some(m) = measure.iter().find(|m| m.is_nan() || **m <= 0.0) {
            return Err(Error::InvalidParameter(format!("measure must be positive, got {m}")));
        }
        Ok(Self { matrix: Csr::from_dense(&matrix), measure, kind: OperatorKind::Custom, domain })
    }

    pub fn dim(&self) -> usize {
        self.matrix.n
    }

    pub fn kind(&self) -> OperatorKind {
        self.kind
    }

    pub fn domain(&self) -> &VertexSubset {
        &self.domain
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn csr(&self) -> &Csr {
        &self.matrix
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        self.matrix.to_dense()
    }

    /// `Ã = D^{1/2} A D^{-1/2}`, which acts on the standard inner product.
    pub fn symmetrized_csr(&self) -> Csr {
        self.matrix.similarity(&self.measure)
    }

    pub fn symmetrized(&self) -> DMatrix<f64> {
        self.symmetrized_csr().to_dense()
    }

    /// Maps `f` to `D^{1/2} f`, the coordinates in which `Ã` acts.
    pub fn to_symmetric_coords(&self, f: &DVector<Complex64>) -> DVector<Complex64> {
        DVector::from_iterator(f.len(), f.iter().zip(&self.measure).map(|(v, m)| v * m.sqrt()))
    }
}

fn check_subset(graph: &DirectedWeightedGraph, subset: &VertexSubset, allow_boundary: bool) -> Result<()> {
    if subset.parent_len() != graph.len() {
        return Err(Error::DimensionMismatch { expected: graph.len(), got: subset.parent_len() });
    }
    if subset.is_empty() {
        return Err(Error::EmptySubset);
    }
    if !allow_boundary {
        if let Some(&x) = subset.indices().iter().find(|&&x| graph.is_window_boundary(x)) {
            return Err(Error::BoundaryVertex(graph.id(x).clone()));
        }
    }
    Ok(())
}

/// Dirichlet restriction of `which` to `subset`. Functions are extended by zero
/// outside the subset, so the diagonal keeps the full `β⁺(x)/m(x)` (resp. `β⁻`).
///
/// Window-boundary vertices are rejected; see [`assemble_including_boundary`].
pub fn assemble(graph: &DirectedWeightedGraph, subset: &VertexSubset, which: OperatorKind) -> Result<WeightedOperator> {
    assemble_impl(graph, subset, which, false)
}

/// Like [`assemble`] but accepts window-boundary rows, whose truncated
/// neighbourhoods may break the Kirchhoff balance.
pub fn assemble_including_boundary(
    graph: &DirectedWeightedGraph,
    subset: &VertexSubset,
    which: OperatorKind,
) -> Result<WeightedOperator> {
    assemble_impl(graph, subset, which, true)
}

fn assemble_impl(
    graph: &DirectedWeightedGraph,
    subset: &VertexSubset,
    which: OperatorKind,
    allow_boundary: bool,
) -> Result<WeightedOperator> {
    check_subset(graph, subset, allow_boundary)?;
    if which == OperatorKind::Custom {
        return Err(Error::InvalidParameter("custom operators are built with WeightedOperator::custom".into()));
    }
    let rows = subset
        .indices()
        .iter()
        .map(|&x| {
            let m = graph.measure(x);
            let mut cols: Vec<usize> =
                graph.undirected_neighbors(x).into_iter().filter(|&y| subset.contains(y)).collect();
            cols.push(x);
            cols.sort_unstable();
            cols.into_iter()
                .map(|y| {
                    let (d, dp) = if y == x {
                        (graph.beta_out(x) / m, graph.beta_in(x) / m)
                    } else {
                        (-graph.weight(x, y) / m, -graph.weight(y, x) / m)
                    };
                    let v = match which {
                        OperatorKind::Delta => d,
                        OperatorKind::DeltaPrime => dp,
                        OperatorKind::S => 0.5 * (d + dp),
                        OperatorKind::B => d - dp,
                        OperatorKind::Custom => unreachable!(),
                    };
                    (subset.position(y).expect("column inside subset"), v)
                })
                .filter(|&(_, v)| v != 0.0)
                .collect()
        })
        .collect();
    Ok(WeightedOperator {
        matrix: Csr::from_rows(rows),
        measure: subset.indices().iter().map(|&x| graph.measure(x)).collect(),
        kind: which,
        domain: subset.clone(),
    })
}

pub fn apply(op: &WeightedOperator, f: &DVector<Complex64>) -> Result<DVector<Complex64>> {
    if f.len() != op.dim() {
        return Err(Error::DimensionMismatch { expected: op.dim(), got: f.len() });
    }
    Ok(DVector::from_iterator(
        op.dim(),
        (0..op.dim()).map(|i| op.matrix.row(i).map(|(j, v)| f[j] * v).sum::<Complex64>()),
    ))
}

/// `(f, g)_m = Σ m(x) f(x) conj(g(x))`.
pub fn inner(f: &DVector<Complex64>, g: &DVector<Complex64>, measure: &[f64]) -> Result<Complex64> {
    if f.len() != g.len() || f.len() != measure.len() {
        return Err(Error::DimensionMismatch {
            expected: measure.len(),
            got: if f.len() != measure.len() { f.len() } else { g.len() },
        });
    }
    Ok(f.iter().zip(g.iter()).zip(measure).map(|((a, b), m)| a * b.conj() * *m).sum())
}

pub fn norm_m(f: &DVector<Complex64>, measure: &[f64]) -> Result<f64> {
    Ok(inner(f, f, measure)?.re.max(0.0).sqrt())
}

/// Residual of Green's identity
/// `(Δf, g)_m + (f, Δg)_m = Σ_{(x,y) ∈ E⃗} b(x,y)(f(x) − f(y)) conj(g(x) − g(y))`
/// for `f`, `g` indexed by the graph's vertices and supported off the window boundary.
pub fn green_residual(
    graph: &DirectedWeightedGraph,
    f: &DVector<Complex64>,
    g: &DVector<Complex64>,
) -> Result<Complex64> {
    for v in [f, g] {
        if v.len() != graph.len() {
            return Err(Error::DimensionMismatch { expected: graph.len(), got: v.len() });
        }
    }
    if let Some(x) =
        (0..graph.len()).find(|&x| graph.is_window_boundary(x) && (f[x] != Complex64::ZERO || g[x] != Complex64::ZERO))
    {
        return Err(Error::SupportNotInterior(graph.id(x).clone()));
    }
    let delta = assemble_including_boundary(graph, &graph.all(), OperatorKind::Delta)?;
    let m = graph.measure_vector();
    let lhs = inner(&apply(&delta, f)?, g, m)? + inner(f, &apply(&delta, g)?, m)?;
    let rhs: Complex64 = graph.edges().map(|(x, y, arc)| (f[x] - f[y]) * (g[x] - g[y]).conj() * arc.value).sum();
    Ok(lhs - rhs)
}

/// `ℓ²(V, m)` operator norm of `B = Δ − Δ′` on the window interior.
pub fn operator_norm_b(graph: &DirectedWeightedGraph) -> Result<f64> {
    let interior = graph.interior();
    let b = assemble(graph, &interior, OperatorKind::B)?;
    spectral_norm(&b.symmetrized_csr())
}

/// Largest singular value.
pub(crate) fn spectral_norm(a: &Csr) -> Result<f64> {
    if a.nnz() == 0 {
        return Ok(0.0);
    }
    if a.n <= DENSE_LIMIT {
        let svd = SVD::new(a.to_dense(), false, false);
        return Ok(svd.singular_values.iter().copied().fold(0.0, f64::max));
    }
    let at = a.transpose();
    let (lmax, _) = lanczos_extreme(
        a.n,
        |x, y| {
            let mut t = vec![0.0; a.n];
            a.matvec(x, &mut t);
            at.matvec(&t, y);
        },
        End::Largest,
        1e-12,
        600,
    )?;
    Ok(lmax.max(0.0).sqrt())
}

/// Triplet export `i j value` (row, column, entry), one nonzero per line.
pub fn write_triplets(op: &WeightedOperator) -> String {
    let mut out = String::new();
    for i in 0..op.dim() {
        for (j, v) in op.matrix.row(i) {
            let _ = writeln!(out, "{i} {j} {}", fmt_f64(v));
        }
    }
    out
}

/// Measure vector aligned with the operator index, one value per line.
pub fn write_measure(op: &WeightedOperator) -> String {
    op.measure.iter().map(|m| fmt_f64(*m) + "\n").collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_directed_cycle, gen_z_line};
    use crate::graph::ratio;

    fn cycle3() -> DirectedWeightedGraph {
        gen_directed_cycle(3, ratio(1, 1), ratio(0, 1)).unwrap()
    }

    #[test]
    fn cycle_delta_is_identity_minus_shift() {
        let g = cycle3();
        let d = assemble(&g, &g.all(), OperatorKind::Delta).unwrap().to_dense();
        let want = DMatrix::from_row_slice(3, 3, &[1.0, -1.0, 0.0, 0.0, 1.0, -1.0, -1.0, 0.0, 1.0]);
        assert_eq!(d, want);
        let s = assemble(&g, &g.all(), OperatorKind::S).unwrap().to_dense();
        assert_eq!(s, DMatrix::from_row_slice(3, 3, &[1.0, -0.5, -0.5, -0.5, 1.0, -0.5, -0.5, -0.5, 1.0]));
    }

    #[test]
    fn dirichlet_keeps_full_diagonal() {
        let g = cycle3();
        let sub = g.subset([0i64, 1]).unwrap();
        let d = assemble(&g, &sub, OperatorKind::Delta).unwrap().to_dense();
        assert_eq!(d, DMatrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0]));
    }

    #[test]
    fn b_is_delta_minus_delta_prime_exactly() {
        let g = gen_z_line(6);
        let sub = g.interior();
        let d = assemble(&g, &sub, OperatorKind::Delta).unwrap().to_dense();
        let dp = assemble(&g, &sub, OperatorKind::DeltaPrime).unwrap().to_dense();
        let b = assemble(&g, &sub, OperatorKind::B).unwrap().to_dense();
        let s = assemble(&g, &sub, OperatorKind::S).unwrap().to_dense();
        assert_eq!(b, &d - &dp);
        assert_eq!(s, (&d + &dp) * 0.5);
    }

    #[test]
    fn errors() {
        let g = gen_z_line(3);
        let empty = g.subset(Vec::<i64>::new()).unwrap();
        assert!(matches!(assemble(&g, &empty, OperatorKind::Delta), Err(Error::EmptySubset)));
        assert!(matches!(assemble(&g, &g.all(), OperatorKind::Delta), Err(Error::BoundaryVertex(_))));
        assert!(assemble_including_boundary(&g, &g.all(), OperatorKind::Delta).is_ok());
        let op = assemble(&g, &g.interior(), OperatorKind::Delta).unwrap();
        assert!(apply(&op, &DVector::from_element(2, Complex64::ONE)).is_err());
    }

    #[test]
    fn inner_and_norm() {
        let g = gen_z_line(3);
        let m = g.measure_vector();
        let mut e = DVector::from_element(g.len(), Complex64::ZERO);
        let x = g.index_of(&1i64.into()).unwrap();
        e[x] = Complex64::ONE;
        assert_eq!(inner(&e, &e, m).unwrap(), Complex64::new(m[x], 0.0));
        e[g.index_of(&0i64.into()).unwrap()] = Complex64::ONE;
        assert!((norm_m(&e, m).unwrap() - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn constant_vector_is_annihilated_on_a_closed_graph() {
        let g = cycle3();
        let d = assemble(&g, &g.all(), OperatorKind::Delta).unwrap();
        let out = apply(&d, &DVector::from_element(3, Complex64::new(2.0, -1.0))).unwrap();
        assert!(out.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn green_single_vertex_and_zero() {
        let g = gen_z_line(5);
        let x = g.index_of(&2i64.into()).unwrap();
        let mut f = DVector::from_element(g.len(), Complex64::ZERO);
        f[x] = Complex64::ONE;
        assert!(green_residual(&g, &f, &f).unwrap().norm() < 1e-12);
        let zero = DVector::from_element(g.len(), Complex64::ZERO);
        assert_eq!(green_residual(&g, &f, &zero).unwrap(), Complex64::ZERO);
        let mut edge = zero.clone();
        edge[g.index_of(&5i64.into()).unwrap()] = Complex64::ONE;
        assert!(matches!(green_residual(&g, &edge, &f), Err(Error::SupportNotInterior(_))));
    }

    #[test]
    fn norm_of_b() {
        let g = cycle3();
        assert!((operator_norm_b(&g).unwrap() - 3f64.sqrt()).abs() < 1e-12);
        let z = gen_z_line(16);
        assert!(operator_norm_b(&z).unwrap() <= 1.0 + 1e-8);
        let sym = gen_directed_cycle(5, ratio(1, 1), ratio(1, 1)).unwrap();
        assert_eq!(operator_norm_b(&sym).unwrap(), 0.0);
    }

    #[test]
    fn triplet_export() {
        let g = cycle3();
        let op = assemble(&g, &g.subset([0i64, 1]).unwrap(), OperatorKind::Delta).unwrap();
        let text = write_triplets(&op);
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("0 0 1.0000000000000000e0\n0 1 -1.0000000000000000e0\n"));
        assert_eq!(write_measure(&op).lines().count(), 2);
    }
}
