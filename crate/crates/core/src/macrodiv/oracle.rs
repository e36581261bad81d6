//! Fine-mesh approximation of virtual element functions, used as a test
//! oracle for the projections.
//!
//! A virtual function is the minimizer of the Dirichlet energy under its DoF
//! values and the enhancement constraints `(v − Π v, q)_K = 0`,
//! `q ∈ ℙ_k ⊖ ℙ_{k−2}`; conforming elements additionally fix the polynomial
//! boundary trace. The minimization is carried out with continuous
//! Lagrange elements of degree `k + 2` on a refined sub-triangulation.

use nalgebra::{DMatrix, DVector, LU};

use crate::error::{Result, VemError};
use crate::femspaces::LagrangeSpace;
use crate::mesh::{Point2, SubTriangulation};
use crate::poly::{dim, dim_signed, legendre, quadrature::rule, quadrature::Domain, CellQuadrature};
use crate::vem::{ElementOperators, Family};

/// Factorized constrained minimization on one element, reusable for many
/// DoF vectors.
pub struct VirtualOracle {
    pub fine: SubTriangulation,
    pub space: LagrangeSpace,
    pub quad: CellQuadrature,
    /// Number of fine triangles per coarse sub-triangle.
    pub per_parent: usize,
    /// Constraint rows (rows of `C`), DoF-dependent right side `R · dofs`.
    rhs_map: DMatrix<f64>,
    constraints: DMatrix<f64>,
    lu: LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
    n: usize,
}

/// A solved oracle field with values and gradients at the fine quadrature points.
#[derive(Clone, Debug)]
pub struct OracleField {
    pub coefficients: DVector<f64>,
    pub values: Vec<f64>,
    pub gradients: Vec<Point2>,
    /// Max violation of the imposed constraints, relative to the data scale.
    pub constraint_residual: f64,
}

impl OracleField {
    pub fn grad_norm(&self, quad: &CellQuadrature) -> f64 {
        quad.weights
            .iter()
            .zip(&self.gradients)
            .map(|(w, g)| w * g.dot(*g))
            .sum::<f64>()
            .sqrt()
    }
}

fn segment_points(a: Point2, b: Point2, exactness: usize) -> Vec<(Point2, f64)> {
    let q = rule(Domain::Segment, exactness);
    let len = (b - a).norm();
    q.points.iter().zip(&q.weights).map(|(p, w)| (a.lerp(b, p[0]), w * len)).collect()
}

impl VirtualOracle {
    pub fn new(ops: &ElementOperators, refine: usize) -> Result<Self> {
        if refine < 2 {
            return Err(VemError::Unsupported("the oracle needs refine >= 2".into()));
        }
        let k = ops.k();
        let layout = &ops.layout;
        let polygon = &ops.ctx.geometry.points;
        let fine = ops.ctx.subtri.refined(polygon, refine)?;
        let space = LagrangeSpace::new(&fine, k + 2);
        let quad = CellQuadrature::new(&fine, 2 * k + 6);
        let n = space.num_dofs();
        let basis = &ops.ctx.basis;
        let nk = dim(k);
        let area = ops.ctx.area();
        let perimeter: f64 = ops.ctx.geometry.edges.iter().map(|e| e.length).sum();

        // energy, cell moments against the computational basis, Ritz data
        let mut stiff = DMatrix::zeros(n, n);
        let mut moments = DMatrix::zeros(nk, n);
        let mut grad_moments = DMatrix::zeros(nk, n);
        let mut dof_moments = DMatrix::zeros(layout.num_interior(), n);
        for ((&p, &w), &t) in quad.points.iter().zip(&quad.weights).zip(&quad.triangle) {
            let nodes = &space.triangle_nodes[t];
            let v = space.eval(t, p);
            let (gx, gy) = space.eval_grad(t, p);
            let b = basis.eval(p);
            let (bx, by) = basis.eval_grad(p);
            let db = ops.dof_basis.eval(p);
            for (a, &ga) in nodes.iter().enumerate() {
                for (c, &gc) in nodes.iter().enumerate() {
                    stiff[(ga, gc)] += w * (gx[a] * gx[c] + gy[a] * gy[c]);
                }
                for al in 0..nk {
                    moments[(al, ga)] += w * b[al] * v[a];
                    grad_moments[(al, ga)] += w * (bx[al] * gx[a] + by[al] * gy[a]);
                }
                for g in 0..layout.num_interior() {
                    dof_moments[(g, ga)] += w * db[g] * v[a] / area;
                }
            }
        }

        // boundary: mean, edge moments in the global orientation
        let mut mean = DMatrix::zeros(1, n);
        let mut basis_mean = DMatrix::zeros(1, nk);
        let per = layout.per_edge();
        let mut edge_rows = DMatrix::zeros(layout.num_edges() * per, n);
        for (f, eg) in ops.ctx.geometry.edges.iter().enumerate() {
            for e in fine.sub_edges_of(f) {
                let se = &fine.edges[e];
                let (t, _) = se.triangles[0];
                let nodes = &space.triangle_nodes[t];
                let (a, b) = (fine.vertices[se.vertices[0]], fine.vertices[se.vertices[1]]);
                for (x, w) in segment_points(a, b, 2 * k + 6) {
                    let v = space.eval(t, x);
                    let bv = basis.eval(x);
                    let s_local = (x - eg.start).dot(eg.end - eg.start) / (eg.length * eg.length);
                    let s = if ops.aligned[f] { s_local } else { 1.0 - s_local };
                    let psi = legendre(per.max(1) - 1, s);
                    for (l, &g) in nodes.iter().enumerate() {
                        mean[(0, g)] += w * v[l] / perimeter;
                        for j in 0..per {
                            edge_rows[(f * per + j, g)] += w * v[l] * psi[j] / eg.length;
                        }
                    }
                    for al in 0..nk {
                        basis_mean[(0, al)] += w * bv[al] / perimeter;
                    }
                }
            }
        }

        // Ritz projection of every fine basis function: G c = r
        let mut g = basis.stiffness(&ops.ctx.quad);
        g.row_mut(0).copy_from(&basis_mean);
        let mut r = grad_moments;
        r.row_mut(0).copy_from(&mean);
        let pi = crate::linalg::lu_solve(&g, &r)?;

        // enhancement functionals q ∈ ℙ_k ⊖ ℙ_{k−2}
        let nlow = dim_signed(k as isize - 2);
        let mass = basis.mass(&ops.ctx.quad, k, k);
        let mut q = DMatrix::<f64>::zeros(nk, nk - nlow);
        for (c, beta) in (nlow..nk).enumerate() {
            q[(beta, c)] = 1.0;
            if nlow > 0 {
                let low = mass.view((0, 0), (nlow, nlow)).into_owned();
                let rhs = mass.view((0, beta), (nlow, 1)).into_owned();
                let x = crate::linalg::spd_solve(&low, &rhs)?;
                for i in 0..nlow {
                    q[(i, c)] = -x[(i, 0)];
                }
            }
        }
        let enh = q.transpose() * (&moments - &mass * &pi);

        // constraint rows and their DoF-dependent right sides
        let ndof = layout.count();
        let mut rows: Vec<DMatrix<f64>> = Vec::new();
        let mut rhs: Vec<DMatrix<f64>> = Vec::new();
        let select = |idx: &mut dyn Iterator<Item = usize>, count: usize| {
            let mut s = DMatrix::zeros(count, ndof);
            for (i, d) in idx.enumerate() {
                s[(i, d)] = 1.0;
            }
            s
        };
        if layout.num_interior() > 0 {
            rows.push(dof_moments);
            rhs.push(select(&mut (0..layout.num_interior()).map(|g| layout.interior(g)), layout.num_interior()));
        }
        match layout.family {
            Family::Nc => {
                rows.push(edge_rows);
                let count = layout.num_edges() * per;
                rhs.push(select(&mut (0..count).map(|i| layout.edge(i / per, i % per)), count));
            }
            Family::C => {
                // boundary nodes take the polynomial trace recovered from the DoFs
                let mut bn = Vec::new();
                let mut map = Vec::new();
                for node in (0..n).filter(|&i| space.on_boundary[i]) {
                    let x = space.node_points[node];
                    let (f, s) = locate_on_boundary(ops, x)?;
                    let psi = DVector::from_vec(legendre(k, s));
                    bn.push(node);
                    map.push(ops.traces[f].tr_mul(&psi).transpose());
                }
                let mut c = DMatrix::zeros(bn.len(), n);
                let mut m = DMatrix::zeros(bn.len(), ndof);
                for (i, (&node, row)) in bn.iter().zip(&map).enumerate() {
                    c[(i, node)] = 1.0;
                    m.row_mut(i).copy_from(row);
                }
                rows.push(c);
                rhs.push(m);
            }
        }
        rows.push(enh);
        rhs.push(DMatrix::zeros(nk - nlow, ndof));

        let nc: usize = rows.iter().map(|r| r.nrows()).sum();
        let mut kkt = DMatrix::zeros(n + nc, n + nc);
        kkt.view_mut((0, 0), (n, n)).copy_from(&stiff);
        let mut rhs_map = DMatrix::zeros(n + nc, ndof);
        let mut r0 = n;
        for (c, m) in rows.iter().zip(&rhs) {
            kkt.view_mut((r0, 0), (c.nrows(), n)).copy_from(c);
            kkt.view_mut((0, r0), (n, c.nrows())).copy_from(&c.transpose());
            rhs_map.view_mut((r0, 0), (m.nrows(), ndof)).copy_from(m);
            r0 += c.nrows();
        }
        let constraints = kkt.view((n, 0), (nc, n)).into_owned();
        let lu = kkt.lu();
        if !lu.is_invertible() {
            return Err(VemError::Singular("oracle constraint system is singular".into()));
        }
        let per_parent = refine * refine;
        Ok(Self {
            fine,
            space,
            quad,
            per_parent,
            rhs_map,
            constraints,
            lu,
            n,
        })
    }

    pub fn solve(&self, dofs: &DVector<f64>) -> Result<OracleField> {
        let rhs = &self.rhs_map * dofs;
        let sol = self
            .lu
            .solve(&rhs)
            .ok_or_else(|| VemError::Singular("oracle solve failed".into()))?;
        let coefficients = sol.rows(0, self.n).into_owned();
        let mut values = Vec::with_capacity(self.quad.len());
        let mut gradients = Vec::with_capacity(self.quad.len());
        for (&p, &t) in self.quad.points.iter().zip(&self.quad.triangle) {
            let c = DVector::from_iterator(
                self.space.triangle_nodes[t].len(),
                self.space.triangle_nodes[t].iter().map(|&g| coefficients[g]),
            );
            values.push(self.space.eval(t, p).dot(&c));
            let (gx, gy) = self.space.eval_grad(t, p);
            gradients.push(Point2::new(gx.dot(&c), gy.dot(&c)));
        }
        let data = rhs.rows(self.n, rhs.len() - self.n);
        let scale = data.amax().max(f64::MIN_POSITIVE);
        let constraint_residual = (&self.constraints * &coefficients - data).amax() / scale;
        Ok(OracleField {
            coefficients,
            values,
            gradients,
            constraint_residual,
        })
    }

    /// Coarse sub-triangle containing fine triangle `t`.
    pub fn parent(&self, t: usize) -> usize {
        t / self.per_parent
    }
}

/// Polygon edge containing `x` and the counterclockwise parameter along it.
fn locate_on_boundary(ops: &ElementOperators, x: Point2) -> Result<(usize, f64)> {
    let tol = 1e-10 * ops.ctx.diameter();
    for (f, e) in ops.ctx.geometry.edges.iter().enumerate() {
        let d = e.end - e.start;
        let s = (x - e.start).dot(d) / d.dot(d);
        if (-1e-12..=1.0 + 1e-12).contains(&s) && (e.start.lerp(e.end, s) - x).norm() <= tol {
            return Ok((f, s.clamp(0.0, 1.0)));
        }
    }
    Err(VemError::InvalidCell {
        cell: 0,
        reason: "boundary node off the polygon".into(),
    })
}

/// One-shot oracle solve.
pub fn approximate_virtual_function(ops: &ElementOperators, dofs: &DVector<f64>, refine: usize) -> Result<OracleField> {
    VirtualOracle::new(ops, refine)?.solve(dofs)
}
