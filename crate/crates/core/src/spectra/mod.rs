//! Eigenvalues, bottom of the numerical range, sector certificates and
//! filtration-based essential-spectrum estimates.

mod ess;
mod range;

use nalgebra::{DMatrix, DVector, Schur};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{validate, DirectedWeightedGraph, VertexSubset};
use crate::linalg::{dense_symmetric_extreme, lanczos_extreme, Csr, End, DENSE_LIMIT};
use crate::operators::{assemble, OperatorKind, WeightedOperator};

pub use ess::{
    ess_spectrum_estimate, ess_spectrum_estimate_for_spec, EssCell, EssSpectrumEstimate, EssVerdict, InnerLimit,
};
pub use range::{numerical_range_boundary, BoundaryPoint, ConvexHull};

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 10_000;

/// All eigenvalues of `Ã`, sorted by real part then imaginary part.
pub fn eigenvalues(op: &WeightedOperator) -> Result<Vec<Complex64>> {
    if op.dim() == 0 {
        return Err(Error::EmptySubset);
    }
    let a = op.symmetrized();
    let mut vals: Vec<Complex64> = schur_eigenvalues(&a)
        .ok_or_else(|| Error::NoConvergence(format!("Schur iteration on {}x{} matrix", op.dim(), op.dim())))?;
    vals.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    Ok(vals)
}

/// The QR iteration occasionally stalls on highly structured input such as
/// circulants; a seeded random orthogonal similarity breaks the structure.
fn schur_eigenvalues(a: &DMatrix<f64>) -> Option<Vec<Complex64>> {
    if let Some(s) = Schur::try_new(a.clone(), SCHUR_EPS, SCHUR_MAX_ITER) {
        return Some(s.complex_eigenvalues().iter().copied().collect());
    }
    let n = a.nrows();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5c4);
    (0..4).find_map(|_| {
        let q = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)).qr().q();
        Schur::try_new(q.transpose() * a * &q, SCHUR_EPS, SCHUR_MAX_ITER)
            .map(|s| s.complex_eigenvalues().iter().copied().collect())
    })
}

/// Eigenpairs of `Ã` by inverse iteration from the Schur eigenvalues. Each
/// returned pair satisfies `‖Ãv − λv‖ ≤ 1e−8 ‖Ã‖`.
pub fn eigenpairs(op: &WeightedOperator) -> Result<Vec<(Complex64, DVector<Complex64>)>> {
    let a = op.symmetrized().map(|v| Complex64::new(v, 0.0));
    let n = a.nrows();
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.norm())).max(f64::MIN_POSITIVE);
    let norm = nalgebra::SVD::new(a.clone(), false, false).singular_values.max();
    let mut out = Vec::with_capacity(n);
    for (i, lambda) in eigenvalues(op)?.into_iter().enumerate() {
        let shift = lambda + Complex64::new(1e-10, 1e-10) * scale;
        let lu = (&a - DMatrix::identity(n, n) * shift).lu();
        let mut v = DVector::from_fn(n, |j, _| Complex64::new(1.0 + ((i + j) % 7) as f64 * 0.1, (j % 3) as f64 * 0.05));
        for _ in 0..4 {
            v = lu.solve(&v).ok_or_else(|| Error::NoConvergence("singular inverse-iteration system".into()))?;
            let nv = v.norm();
            if !(nv.is_finite() && nv > 0.0) {
                return Err(Error::NoConvergence("inverse iteration diverged".into()));
            }
            v /= Complex64::new(nv, 0.0);
        }
        let residual = (&a * &v - &v * lambda).norm();
        if residual > 1e-8 * norm.max(1.0) {
            return Err(Error::NoConvergence(format!("eigenpair residual {residual:e} for eigenvalue {lambda}")));
        }
        out.push((lambda, v));
    }
    Ok(out)
}

fn max_asymmetry(a: &Csr) -> f64 {
    (0..a.n)
        .flat_map(|i| a.row(i).map(move |(j, v)| (i, j, v)))
        .map(|(i, j, v)| (v - a.get(j, i)).abs())
        .fold(0.0, f64::max)
}

/// Smallest eigenpair of a symmetric matrix, dense or Lanczos by size.
fn symmetric_bottom(a: &Csr) -> Result<(f64, Vec<f64>)> {
    if a.n <= DENSE_LIMIT {
        let (val, vec) = dense_symmetric_extreme(&a.to_dense(), End::Smallest);
        Ok((val, vec.iter().copied().collect()))
    } else {
        lanczos_extreme(a.n, |x, y| a.matvec(x, y), End::Smallest, 1e-13, 2000)
    }
}

fn rayleigh_residual(a: &Csr, value: f64, v: &[f64]) -> f64 {
    let mut av = vec![0.0; a.n];
    a.matvec(v, &mut av);
    av.iter().zip(v).map(|(p, q)| (p - value * q).powi(2)).sum::<f64>().sqrt()
}

/// Bottom of the spectrum of a symmetric (in `ℓ²(m)`) operator, normally the
/// `S` assembly: `λ₁ = inf (Sf, f)_m / (f, f)_m`.
pub fn lambda1_symmetric(op: &WeightedOperator) -> Result<f64> {
    lambda1_symmetric_pair(op).map(|(v, _)| v)
}

/// `λ₁` together with its eigenvector in symmetrized coordinates.
pub fn lambda1_symmetric_pair(op: &WeightedOperator) -> Result<(f64, Vec<f64>)> {
    let s = op.symmetrized_csr();
    let scale = s.max_abs().max(1.0);
    let asym = max_asymmetry(&s);
    if asym > 1e-12 * scale {
        return Err(Error::BetaViolated(asym));
    }
    let s = s.symmetric_part(false);
    let (value, vec) = symmetric_bottom(&s)?;
    let res = rayleigh_residual(&s, value, &vec);
    if res > 1e-10 * scale {
        return Err(Error::NoConvergence(format!("Rayleigh residual {res:e} for lambda1")));
    }
    Ok((value, vec))
}

/// `ν(A) = inf Re W(A)`: the smallest eigenvalue of the Hermitian part of `Ã`.
pub fn nu(op: &WeightedOperator) -> Result<f64> {
    let h = op.symmetrized_csr().symmetric_part(false);
    Ok(symmetric_bottom(&h)?.0)
}

/// `|λ₁(S^D_Ω) − ν(Δ^D_Ω)|`, zero up to rounding when the balance holds on `Ω`.
pub fn s_nu_gap(graph: &DirectedWeightedGraph, subset: &VertexSubset) -> Result<f64> {
    let s = assemble(graph, subset, OperatorKind::S)?;
    let d = assemble(graph, subset, OperatorKind::Delta)?;
    Ok((lambda1_symmetric(&s)? - nu(&d)?).abs())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCheck {
    pub min_re_delta: f64,
    pub lambda1_s: f64,
    pub margin: f64,
    pub holds: bool,
}

/// Finite-truncation comparison `min Re σ(Δ^D_Ω) ≥ λ₁(S^D_Ω)`.
pub fn comparison_check(graph: &DirectedWeightedGraph, subset: &VertexSubset) -> Result<ComparisonCheck> {
    let d = assemble(graph, subset, OperatorKind::Delta)?;
    let s = assemble(graph, subset, OperatorKind::S)?;
    let min_re_delta = eigenvalues(&d)?.iter().map(|z| z.re).fold(f64::INFINITY, f64::min);
    let lambda1_s = lambda1_symmetric(&s)?;
    let margin = min_re_delta - lambda1_s;
    Ok(ComparisonCheck { min_re_delta, lambda1_s, margin, holds: margin >= -1e-8 })
}

/// Sector `S_{a,θ} = {z : |arg(z − a)| ≤ θ}` containing the numerical range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorReport {
    pub nu: f64,
    /// `max |Im (Af, f)_m|` over unit `f`: the norm of the skew-Hermitian part of `Ã`.
    pub im_bound: f64,
    #[serde(rename = "gamma_M")]
    pub gamma_m: f64,
    pub vertex_a: f64,
    pub half_angle: f64,
    pub sectorial: bool,
    /// Every sampled boundary point of `W(A)` lies in the sector.
    pub boundary_in_sector: bool,
    pub diagnostic: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SectorOptions {
    /// Sector vertex; defaults to `−M/2`.
    pub vertex_a: Option<f64>,
    pub tolerance: f64,
    pub angle_count: usize,
}

impl Default for SectorOptions {
    fn default() -> Self {
        Self { vertex_a: None, tolerance: 1e-8, angle_count: 64 }
    }
}

pub fn sector_fit(graph: &DirectedWeightedGraph, op: &WeightedOperator) -> Result<SectorReport> {
    sector_fit_with(graph, op, &SectorOptions::default())
}

pub fn sector_fit_with(
    graph: &DirectedWeightedGraph,
    op: &WeightedOperator,
    opts: &SectorOptions,
) -> Result<SectorReport> {
    let tol = opts.tolerance;
    let gamma_m = validate(graph, 1e-12)?.gamma_constant;
    let nu = nu(op)?;
    let skew = op.symmetrized_csr().symmetric_part(true);
    let im_bound = crate::operators::spectral_norm(&skew)?;
    let vertex_a = opts.vertex_a.unwrap_or(-gamma_m / 2.0);
    let half_angle = if im_bound == 0.0 {
        0.0
    } else if nu - vertex_a > 0.0 {
        (im_bound / (nu - vertex_a)).atan()
    } else {
        std::f64::consts::FRAC_PI_2
    };

    let boundary = numerical_range_boundary(op, opts.angle_count.max(8))?;
    let boundary_in_sector = boundary.iter().all(|p| {
        let w = p.point - vertex_a;
        w.norm() <= tol || w.arg().abs() <= half_angle + 1e-6
    });

    let mut diagnostic = None;
    if nu < -tol {
        diagnostic = Some(format!("nu = {nu:e} < 0: the balance condition is likely violated"));
    } else if im_bound > gamma_m / 2.0 + tol {
        diagnostic = Some(format!("im_bound {im_bound} exceeds M/2 = {}", gamma_m / 2.0));
    }
    let sectorial = nu >= -tol && im_bound <= gamma_m / 2.0 + tol && half_angle < std::f64::consts::FRAC_PI_2;
    Ok(SectorReport { nu, im_bound, gamma_m, vertex_a, half_angle, sectorial, boundary_in_sector, diagnostic })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_directed_cycle, gen_z_line, z_shell};
    use crate::graph::ratio;

    fn cycle3() -> DirectedWeightedGraph {
        gen_directed_cycle(3, ratio(1, 1), ratio(0, 1)).unwrap()
    }

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-12
    }

    #[test]
    fn cycle_spectra() {
        let g = cycle3();
        let h = 3f64.sqrt() / 2.0;
        let d = eigenvalues(&assemble(&g, &g.all(), OperatorKind::Delta).unwrap()).unwrap();
        assert!(close(d[0], Complex64::ZERO));
        assert!(close(d[1], Complex64::new(1.5, -h)), "{d:?}");
        assert!(close(d[2], Complex64::new(1.5, h)), "{d:?}");
        let s = eigenvalues(&assemble(&g, &g.all(), OperatorKind::S).unwrap()).unwrap();
        for (got, want) in s.iter().zip([0.0, 1.5, 1.5]) {
            assert!(close(*got, Complex64::new(want, 0.0)), "{s:?}");
        }
    }

    #[test]
    fn eigenpair_residuals() {
        let g = gen_z_line(5);
        let op = assemble(&g, &g.interior(), OperatorKind::Delta).unwrap();
        let pairs = eigenpairs(&op).unwrap();
        assert_eq!(pairs.len(), op.dim());
        let g = cycle3();
        let pairs = eigenpairs(&assemble(&g, &g.all(), OperatorKind::S).unwrap()).unwrap();
        assert_eq!(pairs.len(), 3);
    }

    #[test]
    fn lambda1_and_nu_on_cycle() {
        let g = cycle3();
        let all = g.all();
        let pair = g.subset([0i64, 1]).unwrap();
        assert!(lambda1_symmetric(&assemble(&g, &all, OperatorKind::S).unwrap()).unwrap().abs() < 1e-14);
        assert!((lambda1_symmetric(&assemble(&g, &pair, OperatorKind::S).unwrap()).unwrap() - 0.5).abs() < 1e-14);
        assert!(nu(&assemble(&g, &all, OperatorKind::Delta).unwrap()).unwrap().abs() < 1e-14);
        assert!((nu(&assemble(&g, &pair, OperatorKind::Delta).unwrap()).unwrap() - 0.5).abs() < 1e-14);
        assert!(s_nu_gap(&g, &pair).unwrap() < 1e-14);
    }

    #[test]
    fn lambda1_rejects_non_symmetric_input() {
        let g = cycle3();
        let d = assemble(&g, &g.all(), OperatorKind::Delta).unwrap();
        assert!(matches!(lambda1_symmetric(&d), Err(Error::BetaViolated(_))));
    }

    #[test]
    fn z_lambda1_bound_at_eight() {
        let g = gen_z_line(64);
        let omega = z_shell(&g, 8, 63);
        let l = lambda1_symmetric(&assemble(&g, &omega, OperatorKind::S).unwrap()).unwrap();
        assert!(l >= 1.0, "{l}");
    }

    #[test]
    fn comparison_on_cycle_pair() {
        let g = cycle3();
        let c = comparison_check(&g, &g.subset([0i64, 1]).unwrap()).unwrap();
        assert!((c.min_re_delta - 1.0).abs() < 1e-7);
        assert!((c.lambda1_s - 0.5).abs() < 1e-14);
        assert!((c.margin - 0.5).abs() < 1e-7);
        assert!(c.holds);
    }

    #[test]
    fn sector_reports() {
        let g = cycle3();
        let op = assemble(&g, &g.all(), OperatorKind::Delta).unwrap();
        let r = sector_fit(&g, &op).unwrap();
        assert_eq!(r.gamma_m, 2.0);
        assert_eq!(r.vertex_a, -1.0);
        assert!((r.im_bound - 3f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((r.half_angle - (3f64.sqrt() / 2.0).atan()).abs() < 1e-12);
        assert!((r.half_angle - 0.7137).abs() < 1e-4);
        assert!(r.sectorial && r.boundary_in_sector);

        let sym = gen_directed_cycle(5, ratio(1, 1), ratio(1, 1)).unwrap();
        let op = assemble(&sym, &sym.all(), OperatorKind::Delta).unwrap();
        let r = sector_fit(&sym, &op).unwrap();
        assert_eq!(r.im_bound, 0.0);
        assert_eq!(r.half_angle, 0.0);
        assert!(r.sectorial);
    }
}
