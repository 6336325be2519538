use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::operators::WeightedOperator;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPoint {
    pub theta: f64,
    pub point: Complex64,
}

/// Supporting-line sweep of `W(A)`: for each `θ` the top eigenvector `v` of
/// the Hermitian part of `e^{−iθ}Ã` gives the boundary point `(Ãv, v)`.
pub fn numerical_range_boundary(op: &WeightedOperator, angle_count: usize) -> Result<Vec<BoundaryPoint>> {
    if angle_count < 8 {
        return Err(Error::InvalidParameter(format!("angle_count must be at least 8, got {angle_count}")));
    }
    let a = op.symmetrized().map(|v| Complex64::new(v, 0.0));
    let adj = a.adjoint();
    let herm = (&a + &adj) * Complex64::new(0.5, 0.0);
    // (Ã − Ã*)/(2i), also Hermitian.
    let skew = (&a - &adj) * Complex64::new(0.0, -0.5);
    let n = a.nrows();
    (0..angle_count)
        .map(|j| {
            let theta = 2.0 * std::f64::consts::PI * j as f64 / angle_count as f64;
            let h: DMatrix<Complex64> =
                &herm * Complex64::new(theta.cos(), 0.0) + &skew * Complex64::new(theta.sin(), 0.0);
            let eig = SymmetricEigen::try_new(h, 1e-15, 100_000)
                .ok_or_else(|| Error::NoConvergence(format!("Hermitian eigensolve at theta = {theta}")))?;
            let top = (0..n)
                .reduce(|p, q| if eig.eigenvalues[q] > eig.eigenvalues[p] { q } else { p })
                .expect("non-empty operator");
            let v = eig.eigenvectors.column(top);
            let point = (v.adjoint() * &a * v)[(0, 0)] / v.norm_squared();
            Ok(BoundaryPoint { theta, point })
        })
        .collect()
}

/// Convex hull in the complex plane, counter-clockwise without repeated vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvexHull {
    vertices: Vec<Complex64>,
}

fn cross(o: Complex64, a: Complex64, b: Complex64) -> f64 {
    (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)
}

fn segment_distance(p: Complex64, a: Complex64, b: Complex64) -> f64 {
    let ab = b - a;
    let len2 = ab.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * ab.conj()).re / len2).clamp(0.0, 1.0);
    (p - (a + ab * t)).norm()
}

impl ConvexHull {
    /// Andrew's monotone chain.
    pub fn new(points: &[Complex64]) -> Self {
        let mut pts: Vec<Complex64> = points.iter().copied().filter(|p| p.re.is_finite() && p.im.is_finite()).collect();
        pts.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
        pts.dedup();
        if pts.len() < 3 {
            return Self { vertices: pts };
        }
        let mut lower: Vec<Complex64> = Vec::new();
        for &p in &pts {
            while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
                lower.pop();
            }
            lower.push(p);
        }
        let mut upper: Vec<Complex64> = Vec::new();
        for &p in pts.iter().rev() {
            while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
                upper.pop();
            }
            upper.push(p);
        }
        lower.pop();
        upper.pop();
        lower.extend(upper);
        Self { vertices: lower }
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = (Complex64, Complex64)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    /// Euclidean distance from `p` to the hull region (zero inside).
    pub fn distance(&self, p: Complex64) -> f64 {
        match self.vertices.len() {
            0 => f64::INFINITY,
            1 => (p - self.vertices[0]).norm(),
            2 => segment_distance(p, self.vertices[0], self.vertices[1]),
            _ => {
                if self.edges().all(|(a, b)| cross(a, b, p) >= 0.0) {
                    0.0
                } else {
                    self.edges().map(|(a, b)| segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
                }
            }
        }
    }

    pub fn contains(&self, p: Complex64, inflation: f64) -> bool {
        self.distance(p) <= inflation
    }

    /// Hausdorff distance between the two hull regions.
    pub fn hausdorff(&self, other: &ConvexHull) -> f64 {
        let one = self.vertices.iter().map(|&p| other.distance(p)).fold(0.0, f64::max);
        let two = other.vertices.iter().map(|&p| self.distance(p)).fold(0.0, f64::max);
        one.max(two)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::{gen_directed_cycle, gen_z_line};
    use crate::graph::ratio;
    use crate::operators::{assemble, OperatorKind};
    use crate::spectra::eigenvalues;

    #[test]
    fn hull_basics() {
        let square = [
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.5, 0.5),
        ];
        let h = ConvexHull::new(&square);
        assert_eq!(h.vertices().len(), 4);
        assert_eq!(h.distance(Complex64::new(0.5, 0.5)), 0.0);
        assert!((h.distance(Complex64::new(2.0, 0.5)) - 1.0).abs() < 1e-15);
        let seg = ConvexHull::new(&[Complex64::new(0.0, 0.0), Complex64::new(2.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert_eq!(seg.vertices().len(), 2);
        assert!((seg.distance(Complex64::new(1.0, 1.0)) - 1.0).abs() < 1e-15);
        assert!((h.hausdorff(&seg) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn hermitian_range_is_real_segment() {
        let g = gen_z_line(4);
        let op = assemble(&g, &g.interior(), OperatorKind::S).unwrap();
        let pts = numerical_range_boundary(&op, 16).unwrap();
        assert!(pts.iter().all(|p| p.point.im.abs() < 1e-10));
        let eig = eigenvalues(&op).unwrap();
        let (lo, hi) = (eig[0].re, eig[eig.len() - 1].re);
        let re_min = pts.iter().map(|p| p.point.re).fold(f64::INFINITY, f64::min);
        let re_max = pts.iter().map(|p| p.point.re).fold(f64::NEG_INFINITY, f64::max);
        assert!((re_min - lo).abs() < 1e-9 && (re_max - hi).abs() < 1e-9);
    }

    #[test]
    fn normal_range_is_hull_of_spectrum() {
        let g = gen_directed_cycle(3, ratio(1, 1), ratio(0, 1)).unwrap();
        let op = assemble(&g, &g.all(), OperatorKind::Delta).unwrap();
        let pts: Vec<Complex64> = numerical_range_boundary(&op, 720).unwrap().iter().map(|p| p.point).collect();
        let hull = ConvexHull::new(&pts);
        let spec = ConvexHull::new(&eigenvalues(&op).unwrap());
        assert!(hull.hausdorff(&spec) < 1e-6);
    }

    #[test]
    fn one_by_one() {
        let g = gen_z_line(2);
        let op = assemble(&g, &g.subset([0i64]).unwrap(), OperatorKind::Delta).unwrap();
        let pts = numerical_range_boundary(&op, 8).unwrap();
        assert!(pts.iter().all(|p| (p.point - Complex64::new(1.5, 0.0)).norm() < 1e-15));
        assert!(numerical_range_boundary(&op, 7).is_err());
    }
}
