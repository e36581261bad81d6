//! BDM_r (r ≥ 1) and RT_0 elements on a single triangle.

use nalgebra::{DMatrix, DVector};

use super::reference;
use crate::error::{Result, VemError};
use crate::linalg::lu_solve;
use crate::mesh::{orient2d, Point2};
use crate::poly::{dim, eval_monomials, legendre_into, quadrature::rule, quadrature::Domain, triangle_quadrature};
use crate::poly::{Frame, Poly2, VecPoly2};

/// Highest supported BDM degree.
pub const MAX_DIV_DEGREE: usize = 11;

/// Orientation data for the normal-moment DoFs of one triangle edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeFrame {
    /// The Legendre parameter runs from `start` (t = 0) to `end` (t = 1).
    pub start: Point2,
    pub end: Point2,
    /// Unit normal the moments are taken against.
    pub normal: Point2,
}

impl EdgeFrame {
    /// Local edge `j` of a counterclockwise triangle, opposite vertex `j`,
    /// with the outward normal.
    pub fn outward(tri: [Point2; 3], j: usize) -> Self {
        let (start, end) = (tri[(j + 1) % 3], tri[(j + 2) % 3]);
        let d = end - start;
        Self {
            start,
            end,
            normal: (d * (1.0 / d.norm())).rot_cw(),
        }
    }
}

/// Shape functions dual to the triangle DoFs.
///
/// DoFs, in order: per edge `j`, `(1/|F|)(v·n_F, ψ_i)_F` for `i = 0..=r`;
/// then `(1/h_T)(div v, q)_T` for `q` in an orthonormal basis of
/// `ℙ_{r−1}(T)` orthogonal to constants; then `(1/|T|)(v, q J(x − c)/h_T)_T`
/// for `q` in an orthonormal basis of `ℙ_{r−2}(T)`, with `J` the clockwise
/// rotation and `c` the centroid. For `r = 0` only the edge moments remain
/// (RT_0). Both interior blocks are invariant under the Piola map up to a
/// factor `1/h_T`, like the edge block, which keeps flat triangles usable.
#[derive(Clone, Debug)]
pub struct TriangleDivBasis {
    pub degree: usize,
    pub vertices: [Point2; 3],
    pub frame: Frame,
    pub edges: [EdgeFrame; 3],
    area: f64,
    diameter: f64,
    poly_degree: usize,
    /// Columns of the affine map `x = a + J λ` and its determinant.
    columns: [Point2; 2],
    det: f64,
    /// Row `j`: reference-field coefficients of shape `j`, whose physical
    /// field is the Piola image `(1/det J) J v̂`.
    hx: DMatrix<f64>,
    hy: DMatrix<f64>,
    /// Row `j`: monomial coefficients of `div` of shape `j`.
    cdiv: DMatrix<f64>,
}

/// Number of local DoFs of the degree-`r` element.
pub fn div_dim(r: usize) -> usize {
    if r == 0 {
        3
    } else {
        (r + 1) * (r + 2)
    }
}

pub fn num_div_interior(r: usize) -> usize {
    div_dim(r) - 3 * (r + 1)
}

pub fn num_div_moments(r: usize) -> usize {
    if r == 0 {
        0
    } else {
        dim(r - 1) - 1
    }
}

pub fn num_rot_moments(r: usize) -> usize {
    if r < 2 {
        0
    } else {
        dim(r - 2)
    }
}

impl TriangleDivBasis {
    /// Element with outward edge normals and counterclockwise edge parameters.
    pub fn new(tri: [Point2; 3], r: usize) -> Result<Self> {
        Self::with_edges(tri, r, [0, 1, 2].map(|j| EdgeFrame::outward(tri, j)))
    }

    pub fn with_edges(tri: [Point2; 3], r: usize, edges: [EdgeFrame; 3]) -> Result<Self> {
        if r > MAX_DIV_DEGREE {
            return Err(VemError::Unsupported(format!("div element degree {r} > {MAX_DIV_DEGREE}")));
        }
        let area = 0.5 * orient2d(tri[0], tri[1], tri[2]);
        let diameter = tri[0].dist(tri[1]).max(tri[1].dist(tri[2])).max(tri[2].dist(tri[0]));
        if !(area > 1e-14 * diameter * diameter) {
            return Err(VemError::Unsupported("degenerate or clockwise triangle".into()));
        }
        let frame = centered_frame(tri);
        let poly_degree = r.max(1);
        let (u, v) = (tri[1] - tri[0], tri[2] - tri[0]);
        let det = u.cross(v);
        let mut skeleton = Self {
            degree: r,
            vertices: tri,
            frame,
            edges,
            area,
            diameter,
            poly_degree,
            columns: [u, v],
            det,
            hx: DMatrix::zeros(0, 0),
            hy: DMatrix::zeros(0, 0),
            cdiv: DMatrix::zeros(0, 0),
        };
        let (gx, gy) = reference_generators(r);
        let n = gx.nrows();
        let gdiv = skeleton.divergence_coefficients(&gx, &gy);
        let dm = skeleton.apply_dofs_batch(
            n,
            |p| skeleton.piola_all(&gx, &gy, p),
            |p| {
                let mut m = DVector::zeros(dim(poly_degree - 1));
                eval_monomials(poly_degree - 1, skeleton.frame.local(p), m.as_mut_slice());
                &gdiv * m
            },
            poly_degree,
        );
        // equilibrate rows: DoF blocks carry different geometric scale factors
        let mut scale = DMatrix::zeros(n, n);
        for i in 0..n {
            let m = dm.row(i).amax();
            scale[(i, i)] = if m > 0.0 { 1.0 / m } else { 1.0 };
        }
        let inv = lu_solve(&(&scale * &dm), &scale)
            .map_err(|_| VemError::Singular("triangle div DoF matrix is singular".into()))?;
        // shape_j = Σ_g gen_g inv[g, j]
        skeleton.hx = inv.tr_mul(&gx);
        skeleton.hy = inv.tr_mul(&gy);
        skeleton.cdiv = inv.tr_mul(&gdiv);
        Ok(skeleton)
    }

    /// Divergence rows `(2/det J)(∂_ξ1 v̂_x + ∂_ξ2 v̂_y)` of reference fields,
    /// formed without cancellation between large physical derivatives.
    fn divergence_coefficients(&self, gx: &DMatrix<f64>, gy: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.poly_degree;
        let mut out = DMatrix::zeros(gx.nrows(), dim(d - 1));
        for g in 0..gx.nrows() {
            let px = Poly2::new(self.frame, d, gx.row(g).transpose()).local_derivative(0);
            let py = Poly2::new(self.frame, d, gy.row(g).transpose()).local_derivative(1);
            let sum = px.add(&py).scaled(2.0 / self.det);
            out.view_mut((g, 0), (1, sum.coeffs.len())).copy_from(&sum.coeffs.transpose());
        }
        out
    }

    fn piola_all(&self, gx: &DMatrix<f64>, gy: &DMatrix<f64>, p: Point2) -> (DVector<f64>, DVector<f64>) {
        let mut m = DVector::zeros(dim(self.poly_degree));
        eval_monomials(self.poly_degree, self.frame.local(p), m.as_mut_slice());
        let (a, b) = (gx * &m, gy * &m);
        let [u, v] = self.columns;
        let s = 1.0 / self.det;
        (&a * (u.x * s) + &b * (v.x * s), &a * (u.y * s) + &b * (v.y * s))
    }

    pub fn dim(&self) -> usize {
        self.hx.nrows()
    }

    pub fn area(&self) -> f64 {
        self.area
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Shape `j` as an explicit vector polynomial in the affine frame.
    pub fn shape(&self, j: usize) -> VecPoly2 {
        let hx = Poly2::new(self.frame, self.poly_degree, self.hx.row(j).transpose());
        let hy = Poly2::new(self.frame, self.poly_degree, self.hy.row(j).transpose());
        let [u, v] = self.columns;
        VecPoly2 {
            x: hx.scaled(u.x / self.det).add(&hy.scaled(v.x / self.det)),
            y: hx.scaled(u.y / self.det).add(&hy.scaled(v.y / self.det)),
        }
    }

    /// Values of all shapes at `p`.
    pub fn eval(&self, p: Point2) -> (DVector<f64>, DVector<f64>) {
        self.piola_all(&self.hx, &self.hy, p)
    }

    /// Divergence of all shapes at `p`.
    pub fn eval_div(&self, p: Point2) -> DVector<f64> {
        let d = self.poly_degree - 1;
        let mut m = DVector::zeros(dim(d));
        eval_monomials(d, self.frame.local(p), m.as_mut_slice());
        &self.cdiv * &m
    }

    /// DoFs of every shape (the identity up to rounding), evaluated from the
    /// stored representation.
    pub fn dof_matrix(&self) -> DMatrix<f64> {
        self.apply_dofs_batch(self.dim(), |p| self.eval(p), |p| self.eval_div(p), self.poly_degree)
    }

    /// The DoF functionals applied to a vector field with known divergence.
    pub fn apply_dofs(&self, v: &VecPoly2) -> DVector<f64> {
        let div = v.div();
        let deg = v.x.degree.max(v.y.degree).max(self.degree);
        self.apply_dofs_fn(|p| v.eval(p), |p| div.eval(p), deg)
    }

    /// DoFs of `v` given pointwise evaluators; `deg` bounds its polynomial degree.
    pub fn apply_dofs_fn(&self, v: impl Fn(Point2) -> Point2, div: impl Fn(Point2) -> f64, deg: usize) -> DVector<f64> {
        self.apply_dofs_batch(
            1,
            |p| {
                let x = v(p);
                (DVector::from_element(1, x.x), DVector::from_element(1, x.y))
            },
            |p| DVector::from_element(1, div(p)),
            deg,
        )
        .column(0)
        .into_owned()
    }

    /// DoFs of `count` fields at once; the evaluators return all fields'
    /// components (resp. divergences) at a point.
    pub fn apply_dofs_batch(
        &self,
        count: usize,
        values: impl Fn(Point2) -> (DVector<f64>, DVector<f64>),
        div: impl Fn(Point2) -> DVector<f64>,
        deg: usize,
    ) -> DMatrix<f64> {
        let r = self.degree;
        let mut out = DMatrix::zeros(div_dim(r), count);
        let seg = rule(Domain::Segment, deg + r + 1);
        let mut psi = vec![0.0; r + 1];
        for (j, e) in self.edges.iter().enumerate() {
            for (pt, w) in seg.points.iter().zip(&seg.weights) {
                let t = pt[0];
                let (vx, vy) = values(e.start.lerp(e.end, t));
                let vn = vx * e.normal.x + vy * e.normal.y;
                legendre_into(r, t, &mut psi);
                for i in 0..=r {
                    add_row(&mut out, j * (r + 1) + i, w * psi[i], &vn);
                }
            }
        }
        if r == 0 {
            return out;
        }
        let base = 3 * (r + 1);
        let (pts, wts) = triangle_quadrature(self.vertices, deg + r + 1);
        let nd = num_div_moments(r);
        let nr = num_rot_moments(r);
        let qd = reference::orthonormal(r - 1);
        let c = (self.vertices[0] + self.vertices[1] + self.vertices[2]) * (1.0 / 3.0);
        for (&p, &w) in pts.iter().zip(&wts) {
            let q = qd.eval(reference::barycentric(self.vertices, p));
            let dv = div(p) * (w / self.diameter);
            for i in 0..nd {
                add_row(&mut out, base + i, q[i + 1], &dv);
            }
            if nr > 0 {
                let (vx, vy) = values(p);
                let x = (p - c) * (1.0 / self.diameter);
                // v · J(x − c)/h_T with J(a, b) = (b, −a)
                let rot = (vx * x.y - vy * x.x) * (w / self.area);
                for i in 0..nr {
                    add_row(&mut out, base + nd + i, q[i], &rot);
                }
            }
        }
        out
    }
}

fn add_row(m: &mut DMatrix<f64>, row: usize, s: f64, v: &DVector<f64>) {
    for (c, x) in v.iter().enumerate() {
        m[(row, c)] += s * x;
    }
}

/// Affine coordinates centred at the centroid, `ξ = 2 J⁻¹ (x − c)`; centred
/// monomials are far better conditioned than barycentric ones at high degree.
fn centered_frame(tri: [Point2; 3]) -> Frame {
    let f = Frame::affine(tri[0], tri[1], tri[2]);
    let c = (tri[0] + tri[1] + tri[2]) * (1.0 / 3.0);
    Frame {
        origin: c,
        inv: [[2.0 * f.inv[0][0], 2.0 * f.inv[0][1]], [2.0 * f.inv[1][0], 2.0 * f.inv[1][1]]],
    }
}

/// Reference fields spanning the local space, as coefficient rows over the
/// centred monomials: vector monomials of degree `r`, or `ℙ_0² + ξ ℙ_0` for
/// RT_0. Their Piola images span the physical space.
fn reference_generators(r: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let deg = r.max(1);
    let n = if r == 0 { 1 } else { dim(r) };
    let total = div_dim(r);
    let (mut gx, mut gy) = (DMatrix::zeros(total, dim(deg)), DMatrix::zeros(total, dim(deg)));
    for a in 0..n {
        gx[(a, a)] = 1.0;
        gy[(n + a, a)] = 1.0;
    }
    if r == 0 {
        gx[(2, 1)] = 1.0;
        gy[(2, 2)] = 1.0;
    }
    (gx, gy)
}
