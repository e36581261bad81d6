//! Cell quadrature, scaled monomial bases and L2 projections on polygons.

use nalgebra::{DMatrix, DVector};

use super::monomial::{dim, eval_monomial_derivatives, eval_monomials, Frame, Poly2};
use super::quadrature::{rule, Domain};
use crate::error::{Result, VemError};
use crate::linalg::{orthonormalizing_transform, spd_solve};
use crate::mesh::{Point2, SubTriangulation};

/// Physical quadrature points and weights over one triangle.
pub fn triangle_quadrature(tri: [Point2; 3], exactness: usize) -> (Vec<Point2>, Vec<f64>) {
    let q = rule(Domain::Triangle, exactness);
    let [a, b, c] = tri;
    let jac = (b - a).cross(c - a).abs();
    let pts = q.points.iter().map(|p| a + (b - a) * p[0] + (c - a) * p[1]).collect();
    let wts = q.weights.iter().map(|w| w * jac).collect();
    (pts, wts)
}

/// Quadrature over a polygon assembled from its sub-triangles.
#[derive(Clone, Debug)]
pub struct CellQuadrature {
    pub points: Vec<Point2>,
    pub weights: Vec<f64>,
    /// Sub-triangle owning each point.
    pub triangle: Vec<usize>,
}

impl CellQuadrature {
    pub fn new(st: &SubTriangulation, exactness: usize) -> Self {
        let mut out = Self {
            points: Vec::new(),
            weights: Vec::new(),
            triangle: Vec::new(),
        };
        for t in 0..st.num_triangles() {
            let (p, w) = triangle_quadrature(st.triangle_points(t), exactness);
            out.triangle.extend(std::iter::repeat(t).take(p.len()));
            out.points.extend(p);
            out.weights.extend(w);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(Point2) -> f64) -> f64 {
        self.points.iter().zip(&self.weights).map(|(&p, w)| w * f(p)).sum()
    }
}

/// Basis of `ℙ_k(K)`: scaled monomials `((x − x_K)/h_K)^α`, optionally
/// L2-orthonormalized.
///
/// The orthonormalizing transform is upper triangular, so the first `dim(d)`
/// members always span `ℙ_d(K)`.
#[derive(Clone, Debug)]
pub struct CellBasis {
    pub degree: usize,
    pub frame: Frame,
    /// Column `j` holds the monomial coefficients of member `j`.
    to_mono: DMatrix<f64>,
    /// Inverse of `to_mono`.
    from_mono: DMatrix<f64>,
}

impl CellBasis {
    pub fn monomial(center: Point2, h: f64, degree: usize) -> Self {
        let n = dim(degree);
        Self {
            degree,
            frame: Frame::scaled(center, h),
            to_mono: DMatrix::identity(n, n),
            from_mono: DMatrix::identity(n, n),
        }
    }

    /// Orthonormal for the averaged product `(1/|K|)(·,·)_K`, with member 0 ≡ 1.
    pub fn orthonormal(center: Point2, h: f64, degree: usize, quad: &CellQuadrature) -> Result<Self> {
        let n = dim(degree);
        let frame = Frame::scaled(center, h);
        let area: f64 = quad.weights.iter().sum();
        let mut v = DMatrix::zeros(quad.len(), n);
        let mut m = vec![0.0; n];
        for (q, (&p, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
            eval_monomials(degree, frame.local(p), &mut m);
            let s = (w / area).sqrt();
            for j in 0..n {
                v[(q, j)] = s * m[j];
            }
        }
        let to_mono = orthonormalizing_transform(&v)?;
        let mut from_mono = DMatrix::identity(n, n);
        if !to_mono.solve_upper_triangular_mut(&mut from_mono) {
            return Err(VemError::Singular("cell basis transform is singular".into()));
        }
        Ok(Self {
            degree,
            frame,
            to_mono,
            from_mono,
        })
    }

    pub fn dim(&self) -> usize {
        dim(self.degree)
    }

    /// Member values at `p`, all degrees up to `self.degree`.
    pub fn eval(&self, p: Point2) -> DVector<f64> {
        let n = self.dim();
        let mut m = DVector::zeros(n);
        eval_monomials(self.degree, self.frame.local(p), m.as_mut_slice());
        self.to_mono.tr_mul(&m)
    }

    /// Member gradients at `p` as `(∂_x, ∂_y)` vectors.
    pub fn eval_grad(&self, p: Point2) -> (DVector<f64>, DVector<f64>) {
        let n = self.dim();
        let (mut dx, mut dy) = (DVector::zeros(n), DVector::zeros(n));
        eval_monomial_derivatives(self.degree, self.frame.local(p), dx.as_mut_slice(), dy.as_mut_slice());
        let mut gx = DVector::zeros(n);
        let mut gy = DVector::zeros(n);
        for i in 0..n {
            let [a, b] = self.frame.physical_gradient(dx[i], dy[i]);
            gx[i] = a;
            gy[i] = b;
        }
        (self.to_mono.tr_mul(&gx), self.to_mono.tr_mul(&gy))
    }

    /// Member `j` as an explicit polynomial.
    pub fn member(&self, j: usize) -> Poly2 {
        let d = member_degree(j);
        Poly2::new(self.frame, d, self.to_mono.view((0, j), (dim(d), 1)).column(0).into_owned())
    }

    /// Coordinates in this basis of a polynomial over the same frame.
    pub fn coordinates(&self, p: &Poly2) -> DVector<f64> {
        assert!(p.degree <= self.degree, "polynomial degree exceeds the basis");
        let c = p.with_degree(self.degree).coeffs;
        &self.from_mono * c
    }

    /// `(b_i, b_j)_K` for `i < dim(d1)`, `j < dim(d2)`.
    pub fn mass(&self, quad: &CellQuadrature, d1: usize, d2: usize) -> DMatrix<f64> {
        let (n1, n2) = (dim(d1), dim(d2));
        let mut m = DMatrix::zeros(n1, n2);
        for (&p, &w) in quad.points.iter().zip(&quad.weights) {
            let v = self.eval(p);
            for j in 0..n2 {
                let wj = w * v[j];
                for i in 0..n1 {
                    m[(i, j)] += v[i] * wj;
                }
            }
        }
        m
    }

    /// `(∇b_i, ∇b_j)_K` over all members.
    pub fn stiffness(&self, quad: &CellQuadrature) -> DMatrix<f64> {
        let n = self.dim();
        let mut s = DMatrix::zeros(n, n);
        for (&p, &w) in quad.points.iter().zip(&quad.weights) {
            let (gx, gy) = self.eval_grad(p);
            for j in 0..n {
                for i in 0..n {
                    s[(i, j)] += w * (gx[i] * gx[j] + gy[i] * gy[j]);
                }
            }
        }
        s
    }

    /// Moments `(f, b_i)_K` for `i < dim(d)`.
    pub fn moments(&self, quad: &CellQuadrature, d: usize, f: impl Fn(Point2) -> f64) -> DVector<f64> {
        let n = dim(d);
        let mut b = DVector::zeros(n);
        for (&p, &w) in quad.points.iter().zip(&quad.weights) {
            let fv = w * f(p);
            let v = self.eval(p);
            for i in 0..n {
                b[i] += fv * v[i];
            }
        }
        b
    }

    /// Coefficients of the L2 projection of `f` onto `ℙ_d(K)`.
    pub fn l2_project(&self, quad: &CellQuadrature, d: usize, f: impl Fn(Point2) -> f64) -> Result<DVector<f64>> {
        let m = self.mass(quad, d, d);
        let b = self.moments(quad, d, f);
        Ok(spd_solve(&m, &DMatrix::from_column_slice(b.len(), 1, b.as_slice()))?.column(0).into_owned())
    }

    /// Value of `Σ c_i b_i` at `p`; `c` may be shorter than the full basis.
    pub fn eval_combination(&self, c: &DVector<f64>, p: Point2) -> f64 {
        let v = self.eval(p);
        c.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
    }
}

/// Total degree of the member at position `j`.
pub fn member_degree(j: usize) -> usize {
    let mut d = 0;
    while dim(d) <= j {
        d += 1;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{subtriangulate, SubtriStrategy};

    fn unit_square() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    fn setup(degree: usize, orthonormal: bool) -> (CellBasis, CellQuadrature) {
        let sq = unit_square();
        let st = subtriangulate(&sq, SubtriStrategy::InballFan).unwrap();
        let q = CellQuadrature::new(&st, 2 * degree + 4);
        let c = Point2::new(0.5, 0.5);
        let h = 2f64.sqrt();
        let b = if orthonormal {
            CellBasis::orthonormal(c, h, degree, &q).unwrap()
        } else {
            CellBasis::monomial(c, h, degree)
        };
        (b, q)
    }

    #[test]
    fn projection_of_sine_product_onto_constants() {
        let (b, _) = setup(0, false);
        let st = subtriangulate(&unit_square(), SubtriStrategy::InballFan).unwrap();
        let q = CellQuadrature::new(&st, 24);
        let c = b.l2_project(&q, 0, |p| (std::f64::consts::PI * p.x).sin() * (std::f64::consts::PI * p.y).sin()).unwrap();
        let exact = 4.0 / std::f64::consts::PI.powi(2);
        assert!((c[0] - exact).abs() < 1e-12);
        let c = b.l2_project(&q, 0, |_| 3.0).unwrap();
        assert!((c[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn projection_reproduces_polynomials() {
        for ortho in [false, true] {
            let (b, q) = setup(4, ortho);
            let target = DVector::from_fn(b.dim(), |i, _| 1.0 / (1.0 + i as f64));
            let c = b.l2_project(&q, 4, |p| b.eval_combination(&target, p)).unwrap();
            assert!((c - &target).amax() < 1e-11);
        }
    }

    #[test]
    fn orthonormal_mass_is_area_times_identity() {
        let (b, q) = setup(5, true);
        let m = b.mass(&q, 5, 5);
        assert!((m - DMatrix::identity(21, 21)).amax() < 1e-12);
        let one = b.member(0);
        assert!((one.eval(Point2::new(0.1, 0.7)) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn members_agree_with_eval_and_coordinates_invert() {
        let (b, _) = setup(3, true);
        let p = Point2::new(0.3, 0.8);
        let v = b.eval(p);
        for j in 0..b.dim() {
            assert!((b.member(j).eval(p) - v[j]).abs() < 1e-12);
            let c = b.coordinates(&b.member(j));
            for i in 0..b.dim() {
                let e = if i == j { 1.0 } else { 0.0 };
                assert!((c[i] - e).abs() < 1e-11);
            }
        }
    }

    #[test]
    fn stiffness_matches_exact_integrals() {
        // (∇m_(1,0), ∇m_(1,0)) = |K| / h², (∇m_(2,0), ∇m_(0,0)) = 0
        let (b, q) = setup(2, false);
        let s = b.stiffness(&q);
        assert!((s[(1, 1)] - 0.5).abs() < 1e-14);
        assert_eq!(s[(0, 3)], 0.0);
        // ∫ ∂x(ξ²) ∂x(ξ²) = ∫ 4 (x − 1/2)² / h⁴ = 4 (1/12) / 4
        assert!((s[(3, 3)] - 1.0 / 12.0).abs() < 1e-14);
    }
}
