//! Polynomials in affine local coordinates and their calculus.

use std::ops::AddAssign;

use nalgebra::DVector;

use crate::mesh::Point2;

/// Number of monomials of total degree at most `k`.
pub const fn dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// `dim(k)` with `dim(-1) = 0`, for degree caps that may be negative.
pub fn dim_signed(k: isize) -> usize {
    if k < 0 {
        0
    } else {
        dim(k as usize)
    }
}

/// Position of `ξ^a η^b` in the degree-major ordering.
pub const fn index(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

/// Exponent pairs `(a, b)` in degree-major order.
pub fn exponents(k: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim(k));
    for d in 0..=k {
        for b in 0..=d {
            out.push((d - b, b));
        }
    }
    out
}

/// Affine local coordinates `ξ = inv · (x − origin)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Frame {
    pub origin: Point2,
    pub inv: [[f64; 2]; 2],
}

impl Frame {
    /// `((x − c)/h, (y − c_y)/h)`: the scaled-monomial frame of a cell.
    pub fn scaled(center: Point2, h: f64) -> Self {
        Self {
            origin: center,
            inv: [[1.0 / h, 0.0], [0.0, 1.0 / h]],
        }
    }

    /// Barycentric-type coordinates with `a ↦ (0,0)`, `b ↦ (1,0)`, `c ↦ (0,1)`.
    pub fn affine(a: Point2, b: Point2, c: Point2) -> Self {
        let (u, v) = (b - a, c - a);
        let det = u.cross(v);
        Self {
            origin: a,
            inv: [[v.y / det, -v.x / det], [-u.y / det, u.x / det]],
        }
    }

    pub fn local(&self, p: Point2) -> [f64; 2] {
        let d = p - self.origin;
        [
            self.inv[0][0] * d.x + self.inv[0][1] * d.y,
            self.inv[1][0] * d.x + self.inv[1][1] * d.y,
        ]
    }

    /// Physical gradient from local partial derivatives.
    pub fn physical_gradient(&self, d_xi: f64, d_eta: f64) -> [f64; 2] {
        [
            d_xi * self.inv[0][0] + d_eta * self.inv[1][0],
            d_xi * self.inv[0][1] + d_eta * self.inv[1][1],
        ]
    }
}

/// Monomial values at local coordinates, degree-major, written into `out`.
pub fn eval_monomials(k: usize, xi: [f64; 2], out: &mut [f64]) {
    let mut px = [1.0; 32];
    let mut py = [1.0; 32];
    for d in 1..=k {
        px[d] = px[d - 1] * xi[0];
        py[d] = py[d - 1] * xi[1];
    }
    let mut i = 0;
    for d in 0..=k {
        for b in 0..=d {
            out[i] = px[d - b] * py[b];
            i += 1;
        }
    }
}

/// Local partial derivatives `(∂_ξ, ∂_η)` of every monomial.
pub fn eval_monomial_derivatives(k: usize, xi: [f64; 2], dx: &mut [f64], dy: &mut [f64]) {
    let mut px = [1.0; 32];
    let mut py = [1.0; 32];
    for d in 1..=k {
        px[d] = px[d - 1] * xi[0];
        py[d] = py[d - 1] * xi[1];
    }
    let mut i = 0;
    for d in 0..=k {
        for b in 0..=d {
            let a = d - b;
            dx[i] = if a > 0 { a as f64 * px[a - 1] * py[b] } else { 0.0 };
            dy[i] = if b > 0 { b as f64 * px[a] * py[b - 1] } else { 0.0 };
            i += 1;
        }
    }
}

/// Scalar polynomial over the monomials of a [`Frame`].
#[derive(Clone, Debug, PartialEq)]
pub struct Poly2 {
    pub frame: Frame,
    pub degree: usize,
    pub coeffs: DVector<f64>,
}

impl Poly2 {
    pub fn new(frame: Frame, degree: usize, coeffs: DVector<f64>) -> Self {
        assert_eq!(coeffs.len(), dim(degree), "coefficient count does not match degree");
        Self { frame, degree, coeffs }
    }

    pub fn zero(frame: Frame, degree: usize) -> Self {
        Self::new(frame, degree, DVector::zeros(dim(degree)))
    }

    pub fn constant(frame: Frame, c: f64) -> Self {
        Self::new(frame, 0, DVector::from_element(1, c))
    }

    /// The single monomial `ξ^a η^b`.
    pub fn monomial(frame: Frame, a: usize, b: usize) -> Self {
        let mut p = Self::zero(frame, a + b);
        p.coeffs[index(a, b)] = 1.0;
        p
    }

    pub fn eval(&self, x: Point2) -> f64 {
        let mut m = vec![0.0; dim(self.degree)];
        eval_monomials(self.degree, self.frame.local(x), &mut m);
        self.coeffs.iter().zip(&m).map(|(c, v)| c * v).sum()
    }

    /// Partial derivative in local coordinate `axis` (0 for ξ, 1 for η).
    pub fn local_derivative(&self, axis: usize) -> Poly2 {
        let deg = self.degree.saturating_sub(1);
        let mut out = Poly2::zero(self.frame, deg);
        if self.degree == 0 {
            return out;
        }
        for (i, (a, b)) in exponents(self.degree).into_iter().enumerate() {
            let c = self.coeffs[i];
            match axis {
                0 if a > 0 => out.coeffs[index(a - 1, b)] += a as f64 * c,
                1 if b > 0 => out.coeffs[index(a, b - 1)] += b as f64 * c,
                _ => {}
            }
        }
        out
    }

    pub fn grad(&self) -> VecPoly2 {
        let dxi = self.local_derivative(0);
        let deta = self.local_derivative(1);
        let inv = self.frame.inv;
        VecPoly2 {
            x: dxi.scaled(inv[0][0]).add(&deta.scaled(inv[1][0])),
            y: dxi.scaled(inv[0][1]).add(&deta.scaled(inv[1][1])),
        }
    }

    pub fn laplacian(&self) -> Poly2 {
        let g = self.grad();
        g.div()
    }

    pub fn scaled(&self, s: f64) -> Poly2 {
        Poly2::new(self.frame, self.degree, &self.coeffs * s)
    }

    /// Sum of two polynomials over the same frame.
    pub fn add(&self, o: &Poly2) -> Poly2 {
        debug_assert_eq!(self.frame, o.frame);
        let deg = self.degree.max(o.degree);
        let mut c = DVector::zeros(dim(deg));
        c.rows_mut(0, self.coeffs.len()).add_assign(&self.coeffs);
        c.rows_mut(0, o.coeffs.len()).add_assign(&o.coeffs);
        Poly2::new(self.frame, deg, c)
    }

    /// Product of two polynomials over the same frame.
    pub fn mul(&self, o: &Poly2) -> Poly2 {
        debug_assert_eq!(self.frame, o.frame);
        let deg = self.degree + o.degree;
        let mut c = DVector::zeros(dim(deg));
        let (ea, eb) = (exponents(self.degree), exponents(o.degree));
        for (i, &(a1, b1)) in ea.iter().enumerate() {
            if self.coeffs[i] == 0.0 {
                continue;
            }
            for (j, &(a2, b2)) in eb.iter().enumerate() {
                c[index(a1 + a2, b1 + b2)] += self.coeffs[i] * o.coeffs[j];
            }
        }
        Poly2::new(self.frame, deg, c)
    }

    /// Coefficients padded (or truncated) to `degree`.
    pub fn with_degree(&self, degree: usize) -> Poly2 {
        let mut c = DVector::zeros(dim(degree));
        let n = dim(degree).min(self.coeffs.len());
        c.rows_mut(0, n).copy_from(&self.coeffs.rows(0, n));
        Poly2::new(self.frame, degree, c)
    }
}

/// Vector-valued polynomial with components over a common frame.
#[derive(Clone, Debug, PartialEq)]
pub struct VecPoly2 {
    pub x: Poly2,
    pub y: Poly2,
}

impl VecPoly2 {
    pub fn eval(&self, p: Point2) -> Point2 {
        Point2::new(self.x.eval(p), self.y.eval(p))
    }

    pub fn div(&self) -> Poly2 {
        let (gx, gy) = (self.x.grad(), self.y.grad());
        gx.x.add(&gy.y)
    }

    /// Rotated gradient `(∂_y q, −∂_x q)` of a scalar.
    pub fn curl_of(q: &Poly2) -> VecPoly2 {
        let g = q.grad();
        VecPoly2 {
            x: g.y,
            y: g.x.scaled(-1.0),
        }
    }
}
