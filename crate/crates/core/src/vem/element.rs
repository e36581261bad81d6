use nalgebra::{DMatrix, DVector};

use super::{ElementDofLayout, Family};
use crate::cell::{CellContext, CellOptions};
use crate::error::{Result, VemError};
use crate::linalg::{lu_solve, spd_solve};
use crate::mesh::Point2;
use crate::poly::{dim, edge_moments, reversal_sign, CellBasis};

/// Projection matrices of one element, all in the cell basis of `ctx`.
#[derive(Clone, Debug)]
pub struct ElementOperators {
    pub layout: ElementDofLayout,
    pub ctx: CellContext,
    /// Whether local edge `f` (vertex `f` to `f + 1`) runs from the lower to
    /// the higher global vertex index.
    pub aligned: Vec<bool>,
    /// DoFs of every cell-basis member (`dofs × dim ℙ_k`).
    pub d: DMatrix<f64>,
    /// DoF vector to Ritz projection coefficients.
    pub pi_star: DMatrix<f64>,
    /// DoF vector to L2 projection coefficients.
    pub q: DMatrix<f64>,
    /// Per edge: DoF vector to averaged Legendre moments of the trace in the
    /// counterclockwise parameter, degrees `0..=layout.trace_degree()`.
    pub traces: Vec<DMatrix<f64>>,
    /// `(b_i, b_j)_K` over `ℙ_k`.
    pub mass: DMatrix<f64>,
    /// `(∇b_i, ∇b_j)_K` over `ℙ_k`.
    pub stiffness: DMatrix<f64>,
    /// Basis of `ℙ_{k−2}` the interior DoFs are taken against.
    pub dof_basis: CellBasis,
    /// Column `j`: the first `dim ℙ_{k−2}` computational members expanded in `dof_basis`.
    interior_transform: DMatrix<f64>,
}

impl ElementOperators {
    pub fn new(points: &[Point2], family: Family, k: usize, aligned: &[bool], opts: &CellOptions) -> Result<Self> {
        if k == 0 {
            return Err(VemError::Unsupported("virtual elements need k >= 1".into()));
        }
        if aligned.len() != points.len() {
            return Err(VemError::InvalidMesh("one orientation flag per edge is required".into()));
        }
        let ctx = CellContext::new(points, k, opts)?;
        let layout = ElementDofLayout::new(family, k, points.len());
        let nint = layout.num_interior();
        let dof_basis = ctx.dof_basis(opts.dof_basis, k.saturating_sub(2))?;
        let interior_transform = if nint > 0 {
            let dm = dof_basis.mass(&ctx.quad, k - 2, k - 2);
            let mut mixed = DMatrix::zeros(nint, nint);
            for (&p, &w) in ctx.quad.points.iter().zip(&ctx.quad.weights) {
                let d = dof_basis.eval(p);
                let b = ctx.basis.eval(p);
                for j in 0..nint {
                    for i in 0..nint {
                        mixed[(i, j)] += w * d[i] * b[j];
                    }
                }
            }
            spd_solve(&dm, &mixed)?
        } else {
            DMatrix::zeros(0, 0)
        };
        let mut ops = Self {
            layout,
            ctx,
            aligned: aligned.to_vec(),
            d: DMatrix::zeros(0, 0),
            pi_star: DMatrix::zeros(0, 0),
            q: DMatrix::zeros(0, 0),
            traces: Vec::new(),
            mass: DMatrix::zeros(0, 0),
            stiffness: DMatrix::zeros(0, 0),
            dof_basis,
            interior_transform,
        };
        ops.traces = (0..layout.num_edges()).map(|f| ops.trace_matrix(f)).collect();
        let basis = ops.ctx.basis.clone();
        ops.d = ops.dof_matrix_of(basis.dim(), |p| basis.eval(p));
        ops.mass = basis.mass(&ops.ctx.quad, k, k);
        ops.stiffness = basis.stiffness(&ops.ctx.quad);
        ops.pi_star = ops.ritz()?;
        ops.q = ops.l2_lift()?;
        Ok(ops)
    }

    pub fn k(&self) -> usize {
        self.layout.k
    }

    pub fn num_dofs(&self) -> usize {
        self.layout.count()
    }

    /// Global-orientation endpoints of local edge `f`.
    fn oriented_edge(&self, f: usize) -> (Point2, Point2) {
        let e = &self.ctx.geometry.edges[f];
        if self.aligned[f] {
            (e.start, e.end)
        } else {
            (e.end, e.start)
        }
    }

    /// DoFs of `ncols` functions evaluated together.
    pub fn dof_matrix_of(&self, ncols: usize, eval: impl Fn(Point2) -> DVector<f64>) -> DMatrix<f64> {
        let l = &self.layout;
        let ex = self.ctx.exactness;
        let mut out = DMatrix::zeros(l.count(), ncols);
        if l.per_vertex() > 0 {
            for (v, &p) in self.ctx.geometry.points.iter().enumerate() {
                out.row_mut(l.vertex(v)).copy_from(&eval(p).transpose());
            }
        }
        let per = l.per_edge();
        if per > 0 {
            for f in 0..l.num_edges() {
                let (a, b) = self.oriented_edge(f);
                for c in 0..ncols {
                    let m = edge_moments(|p| eval(p)[c], a, b, per - 1, ex);
                    for j in 0..per {
                        out[(l.edge(f, j), c)] = m[j];
                    }
                }
            }
        }
        let nint = l.num_interior();
        if nint > 0 {
            let area = self.ctx.area();
            for (&p, &w) in self.ctx.quad.points.iter().zip(&self.ctx.quad.weights) {
                let v = eval(p);
                let b = self.dof_basis.eval(p);
                for g in 0..nint {
                    for c in 0..ncols {
                        out[(l.interior(g), c)] += w * b[g] * v[c] / area;
                    }
                }
            }
        }
        out
    }

    /// DoFs of a single function.
    pub fn dofs_of(&self, u: impl Fn(Point2) -> f64) -> DVector<f64> {
        self.dof_matrix_of(1, |p| DVector::from_element(1, u(p))).column(0).into_owned()
    }

    fn trace_matrix(&self, f: usize) -> DMatrix<f64> {
        let l = &self.layout;
        let k = l.k;
        let n = l.count();
        let sign = |j: usize| if self.aligned[f] { 1.0 } else { reversal_sign(j) };
        let mut tr = DMatrix::zeros(l.trace_degree() + 1, n);
        match l.family {
            Family::Nc => {
                for j in 0..k {
                    tr[(j, l.edge(f, j))] = sign(j);
                }
            }
            Family::C => {
                for j in 0..k - 1 {
                    tr[(j, l.edge(f, j))] = sign(j);
                }
                // endpoint residuals after removing the known low-order part
                let mut s_end = DVector::zeros(n);
                let mut s_start = DVector::zeros(n);
                s_start[l.vertex(f)] = 1.0;
                s_end[l.vertex((f + 1) % l.num_vertices)] = 1.0;
                for j in 0..k - 1 {
                    let root = ((2 * j + 1) as f64).sqrt();
                    let idx = l.edge(f, j);
                    s_end[idx] -= sign(j) * root;
                    s_start[idx] -= sign(j) * root * reversal_sign(j);
                }
                let par = reversal_sign(k - 1);
                let hi = ((2 * k - 1) as f64).sqrt();
                let top = ((2 * k + 1) as f64).sqrt();
                for c in 0..n {
                    tr[(k - 1, c)] = (s_end[c] + par * s_start[c]) / (2.0 * hi);
                    tr[(k, c)] = (s_end[c] - par * s_start[c]) / (2.0 * top);
                }
            }
        }
        tr
    }

    /// DoF vector to plain moments `(v, b_γ)_K` against the computational basis.
    fn interior_moments(&self) -> DMatrix<f64> {
        let l = &self.layout;
        let nint = l.num_interior();
        let mut m = DMatrix::zeros(nint, l.count());
        if nint == 0 {
            return m;
        }
        let t = self.interior_transform.transpose() * self.ctx.area();
        m.view_mut((0, l.interior(0)), (nint, nint)).copy_from(&t);
        m
    }

    fn ritz(&self) -> Result<DMatrix<f64>> {
        let l = &self.layout;
        let k = l.k;
        let nk = dim(k);
        let nint = l.num_interior();
        let basis = &self.ctx.basis;
        let perimeter: f64 = self.ctx.geometry.edges.iter().map(|e| e.length).sum();
        let int = self.interior_moments();

        let mut g = self.stiffness.clone();
        let mut b = DMatrix::zeros(nk, l.count());
        // boundary mean of v
        let mut mean = DMatrix::zeros(1, l.count());
        for (f, e) in self.ctx.geometry.edges.iter().enumerate() {
            mean += self.traces[f].rows(0, 1) * (e.length / perimeter);
        }
        g.row_mut(0).copy_from(&(&mean * &self.d));
        b.row_mut(0).copy_from(&mean);

        for a in 1..nk {
            let member = basis.member(a);
            if nint > 0 {
                let lap = basis.coordinates(&member.laplacian());
                for gi in 0..nint {
                    if lap[gi] != 0.0 {
                        let row = int.row(gi) * (-lap[gi]);
                        let mut target = b.row_mut(a);
                        target += row;
                    }
                }
            }
            let grad = member.grad();
            for (f, e) in self.ctx.geometry.edges.iter().enumerate() {
                let dn = edge_moments(
                    |p| grad.eval(p).dot(e.normal),
                    e.start,
                    e.end,
                    k - 1,
                    self.ctx.exactness,
                );
                for (j, c) in dn.iter().enumerate() {
                    let row = self.traces[f].row(j) * (c * e.length);
                    let mut target = b.row_mut(a);
                    target += row;
                }
            }
        }
        lu_solve(&g, &b)
    }

    fn l2_lift(&self) -> Result<DMatrix<f64>> {
        let nint = self.layout.num_interior();
        let mut q = self.pi_star.clone();
        if nint == 0 {
            return Ok(q);
        }
        let km2 = self.k() - 2;
        let m_low = self.ctx.basis.mass(&self.ctx.quad, km2, km2);
        let m_mix = self.mass.rows(0, nint);
        let r = self.interior_moments() - m_mix * &self.pi_star;
        let x = spd_solve(&m_low, &r)?;
        let mut top = q.rows_mut(0, nint);
        top += x;
        Ok(q)
    }

    /// `(v, b_β)_K` for all cell-basis members, through the L2 lift.
    pub fn cell_moments(&self) -> DMatrix<f64> {
        &self.mass * &self.q
    }

    /// Ritz projection coefficients of the polynomial whose DoFs are `dofs`.
    pub fn project(&self, dofs: &DVector<f64>) -> DVector<f64> {
        &self.pi_star * dofs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{hexagon_hi, mesh_zoo, square_with_hanging_nodes};

    fn ops(points: &[Point2], family: Family, k: usize) -> ElementOperators {
        let aligned: Vec<bool> = (0..points.len()).map(|f| f % 2 == 0).collect();
        ElementOperators::new(points, family, k, &aligned, &CellOptions::default()).unwrap()
    }

    #[test]
    fn projectors_reproduce_polynomials() {
        for (name, cell) in mesh_zoo().into_iter().take(8) {
            for family in [Family::Nc, Family::C] {
                for k in 1..=4 {
                    let o = ops(&cell, family, k);
                    let n = dim(k);
                    let id = DMatrix::<f64>::identity(n, n);
                    let e1 = (&o.pi_star * &o.d - &id).amax();
                    let e2 = (&o.q * &o.d - &id).amax();
                    assert!(e1 < 1e-10 && e2 < 1e-10, "{name} {family:?} k={k}: {e1:e} {e2:e}");
                }
            }
        }
    }

    #[test]
    fn constant_dofs() {
        let h = hexagon_hi(0);
        for family in [Family::Nc, Family::C] {
            let o = ops(&h, family, 3);
            let one = o.dofs_of(|_| 1.0);
            let expected_vertices = if family == Family::C { 6 } else { 0 };
            assert_eq!(one.iter().filter(|&&v| (v - 1.0).abs() < 1e-13).count(), expected_vertices + 6 + 1);
            let p = o.project(&one);
            assert!((p[0] - 1.0).abs() < 1e-12 && p.rows(1, p.len() - 1).amax() < 1e-12);
        }
    }

    #[test]
    fn linear_midpoint_moments() {
        let sq = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let o = ElementOperators::new(&sq, Family::Nc, 1, &[true, true, false, false], &CellOptions::default()).unwrap();
        let d = o.dofs_of(|p| p.x);
        assert!((d[1] - 1.0).abs() < 1e-14);
        assert!(d[3].abs() < 1e-14);
    }

    #[test]
    fn conforming_trace_is_exact() {
        let cell = square_with_hanging_nodes();
        for k in 1..=5 {
            let o = ops(&cell, Family::C, k);
            let basis = o.ctx.basis.clone();
            for (f, e) in o.ctx.geometry.edges.iter().enumerate() {
                let exact = o.dof_matrix_of(basis.dim(), |p| basis.eval(p));
                let from_dofs = &o.traces[f] * &exact;
                for c in 0..basis.dim() {
                    let m = edge_moments(|p| basis.eval(p)[c], e.start, e.end, k, 2 * k + 2);
                    for j in 0..=k {
                        assert!((from_dofs[(j, c)] - m[j]).abs() < 1e-11);
                    }
                }
            }
        }
    }
}
