use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::cell::CellContext;
use crate::error::{Result, VemError};
use crate::femspaces::{reference_orthonormal, LagrangeSpace, PiecewiseDivSpace};
use crate::linalg::{gram_orthonormalizer, nullspace, spd_solve, NULLSPACE_RTOL};
use crate::mesh::{Point2, SubTriangulation};
use crate::poly::{dim, legendre, legendre_into, quadrature::rule, quadrature::Domain};

/// Which constrained macro space to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MacroMode {
    /// Partner of the nonconforming element: `BDM_{k−1}` (RT_0 at k = 1),
    /// divergence in `ℙ_{k−2}`, normal traces in `ℙ_{k−1}`.
    Nc,
    /// Partner of the conforming element: `BDM_k`, divergence in `ℙ_{k−1}`,
    /// normal traces in `ℙ_k`.
    C,
    /// Conforming variant with divergence capped at `ℙ_{k−2}` (k ≥ 2).
    CReduced,
}

/// Parent element degree `r`, divergence cap `s` and normal-trace degree `t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MacroDegrees {
    pub r: usize,
    pub s: usize,
    pub t: usize,
}

impl MacroMode {
    pub fn degrees(self, k: usize) -> Result<MacroDegrees> {
        if k == 0 {
            return Err(VemError::Unsupported("macro spaces need k >= 1".into()));
        }
        Ok(match self {
            MacroMode::Nc => MacroDegrees {
                r: k - 1,
                s: k.saturating_sub(2),
                t: k - 1,
            },
            MacroMode::C => MacroDegrees { r: k, s: k - 1, t: k },
            MacroMode::CReduced => {
                if k < 2 {
                    return Err(VemError::Unsupported("reduced conforming macro space needs k >= 2".into()));
                }
                MacroDegrees { r: k, s: k - 2, t: k }
            }
        })
    }

    /// Degree of the Lagrange potentials whose ring curls complete the space.
    pub fn ring_degree(self, k: usize) -> usize {
        match self {
            MacroMode::Nc => k,
            MacroMode::C | MacroMode::CReduced => k + 1,
        }
    }
}

/// Dimension predicted by the unisolvent DoF set: normal-trace moments on
/// every polygon edge, divergence moments modulo constants, and one DoF per
/// ring Lagrange function.
pub fn dof_count(st: &SubTriangulation, num_polygon_edges: usize, k: usize, mode: MacroMode) -> Result<usize> {
    let d = mode.degrees(k)?;
    Ok(num_polygon_edges * (d.t + 1) + dim(d.s) - 1 + LagrangeSpace::interior_count(st, mode.ring_degree(k)))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MacroOptions {
    /// Make the basis L2-orthonormal so the Gram matrix is the identity.
    pub orthonormalize: bool,
    pub rtol: f64,
}

impl Default for MacroOptions {
    fn default() -> Self {
        Self {
            orthonormalize: true,
            rtol: NULLSPACE_RTOL,
        }
    }
}

/// The constrained macro H(div) space on one cell.
#[derive(Clone, Debug)]
pub struct MacroDivSpace {
    pub mode: MacroMode,
    pub k: usize,
    pub degrees: MacroDegrees,
    pub parent: PiecewiseDivSpace,
    /// Basis members as columns of parent coefficients.
    pub basis: DMatrix<f64>,
    /// `(φ_i, φ_j)_K`; the identity when orthonormalized.
    pub gram: DMatrix<f64>,
    /// Row `i`: coefficients of `div φ_i` over the first `dim(s)` cell-basis members.
    pub div_coeffs: DMatrix<f64>,
    /// Per polygon edge, row `i`: Legendre coefficients (degree ≤ t, parameter
    /// along the counterclockwise traversal) of `φ_i · n_{K,F}`.
    pub traces: Vec<DMatrix<f64>>,
    /// Per sub-triangle, the basis restricted to that triangle's local shapes.
    local: Vec<DMatrix<f64>>,
    /// Dimension of the parent space minus the constraint rank.
    pub constraint_rows: usize,
}

impl MacroDivSpace {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_orthonormal(&self) -> bool {
        self.gram.nrows() > 0 && (&self.gram - DMatrix::identity(self.dim(), self.dim())).amax() < 1e-9
    }

    /// Values of all basis members at `p` in sub-triangle `t`.
    pub fn eval(&self, t: usize, p: Point2) -> (DVector<f64>, DVector<f64>) {
        let (vx, vy) = self.parent.triangles[t].eval(p);
        (self.local[t].tr_mul(&vx), self.local[t].tr_mul(&vy))
    }

    /// Divergence of all basis members at `p` in sub-triangle `t`.
    pub fn eval_div(&self, t: usize, p: Point2) -> DVector<f64> {
        self.local[t].tr_mul(&self.parent.triangles[t].eval_div(p))
    }

    /// Value of the field with coefficients `c` at `p` in sub-triangle `t`.
    pub fn field(&self, t: usize, c: &DVector<f64>, p: Point2) -> Point2 {
        let (vx, vy) = self.eval(t, p);
        Point2::new(vx.dot(c), vy.dot(c))
    }

    /// `M⁻¹ b`.
    pub fn gram_solve(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        if self.is_orthonormal() {
            return Ok(b.clone());
        }
        spd_solve(&self.gram, b)
    }

    /// Moments `(φ_i, g)_K` of a vector field.
    pub fn moments(&self, ctx: &CellContext, g: impl Fn(Point2) -> Point2) -> DVector<f64> {
        let mut b = DVector::zeros(self.dim());
        for ((&p, &w), &t) in ctx.quad.points.iter().zip(&ctx.quad.weights).zip(&ctx.quad.triangle) {
            let gv = g(p);
            let (vx, vy) = self.eval(t, p);
            b += (vx * gv.x + vy * gv.y) * w;
        }
        b
    }

    /// Coefficients of the L2 projection of `g` onto the space.
    pub fn project_field(&self, ctx: &CellContext, g: impl Fn(Point2) -> Point2) -> Result<DVector<f64>> {
        let b = self.moments(ctx, g);
        Ok(self.gram_solve(&DMatrix::from_column_slice(b.len(), 1, b.as_slice()))?.column(0).into_owned())
    }

    /// Right-hand sides `(φ_i, ∇v)_K` by parts, `−(div φ_i, v)_K + Σ_F (φ_i·n, v)_F`,
    /// one column per input function.
    ///
    /// `cell_moments` holds `(v, b_β)_K` for the first `dim(s)` cell-basis
    /// members and `edge_traces[f]` the averaged Legendre moments of `v` on
    /// polygon edge `f` (counterclockwise parameter, at least `t + 1` rows).
    pub fn gradient_moments(
        &self,
        ctx: &CellContext,
        cell_moments: &DMatrix<f64>,
        edge_traces: &[DMatrix<f64>],
    ) -> DMatrix<f64> {
        let ns = dim(self.degrees.s);
        let mut b = -(&self.div_coeffs * cell_moments.rows(0, ns));
        let t = self.degrees.t;
        for (f, tr) in self.traces.iter().enumerate() {
            let len = ctx.geometry.edges[f].length;
            b += tr * edge_traces[f].rows(0, t + 1) * len;
        }
        b
    }

    /// Macro coefficients of the projection of `∇v` from its moment data
    /// (see [`MacroDivSpace::gradient_moments`]).
    pub fn project_virtual_gradient(
        &self,
        ctx: &CellContext,
        cell_moments: &DMatrix<f64>,
        edge_traces: &[DMatrix<f64>],
    ) -> Result<DMatrix<f64>> {
        self.gram_solve(&self.gradient_moments(ctx, cell_moments, edge_traces))
    }
}

/// Assemble the constraints, take their nullspace and precompute the Gram,
/// divergence and trace representations.
pub fn build_macro_div_space(ctx: &CellContext, k: usize, mode: MacroMode, opts: &MacroOptions) -> Result<MacroDivSpace> {
    let degrees = mode.degrees(k)?;
    if degrees.s > ctx.basis.degree {
        return Err(VemError::ModeMismatch(format!(
            "cell basis degree {} below divergence degree {}",
            ctx.basis.degree, degrees.s
        )));
    }
    let st = &ctx.subtri;
    let parent = PiecewiseDivSpace::new(st, degrees.r)?;
    let c = constraints(ctx, &parent, degrees);
    let constraint_rows = c.nrows();
    let null = nullspace(&c, opts.rtol)?;
    let pg = parent.gram();
    let raw_gram = null.tr_mul(&(&pg * &null));
    let (basis, gram) = if opts.orthonormalize {
        let tr = gram_orthonormalizer(&raw_gram)?;
        let n = tr.ncols();
        (&null * tr, DMatrix::identity(n, n))
    } else {
        (null, raw_gram)
    };
    let local = parent
        .local_to_global
        .iter()
        .map(|map| DMatrix::from_fn(map.len(), basis.ncols(), |l, j| basis[(map[l], j)]))
        .collect();
    let mut space = MacroDivSpace {
        mode,
        k,
        degrees,
        parent,
        basis,
        gram,
        div_coeffs: DMatrix::zeros(0, 0),
        traces: Vec::new(),
        local,
        constraint_rows,
    };
    space.div_coeffs = divergence_representation(ctx, &space)?;
    space.traces = trace_representation(ctx, &space);
    Ok(space)
}

/// Thin orthonormal basis of the column space of `g` (full column rank).
fn orthonormal_columns(g: DMatrix<f64>) -> DMatrix<f64> {
    g.qr().q()
}

/// Rows `(I − U Uᵀ) S`: the part of `S` outside the span of `U`.
fn complement_rows(u: &DMatrix<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
    s - u * u.tr_mul(s)
}

fn constraints(ctx: &CellContext, parent: &PiecewiseDivSpace, d: MacroDegrees) -> DMatrix<f64> {
    let st = &ctx.subtri;
    let n = parent.num_dofs();
    let area = ctx.area();
    let hk = ctx.diameter();
    let mut blocks: Vec<DMatrix<f64>> = Vec::new();

    // (i) piecewise divergence equal to one polynomial of degree ≤ s
    let dd = d.r.saturating_sub(1);
    let nq = dim(dd);
    let ntri = st.num_triangles();
    if ntri > 1 || dim(d.s) < nq {
        let qref = reference_orthonormal(dd);
        let ns = dim(d.s);
        let mut div = DMatrix::zeros(ntri * nq, n);
        let mut glob = DMatrix::zeros(ntri * nq, ns);
        for t in 0..ntri {
            let tb = &parent.triangles[t];
            let ta = tb.area();
            let scale = (ta / area).sqrt() / ta;
            let (pts, wts) = crate::poly::triangle_quadrature(tb.vertices, 2 * d.r.max(d.s) + 2);
            for (&p, &w) in pts.iter().zip(&wts) {
                let q = qref.eval(crate::femspaces::barycentric(tb.vertices, p));
                let dv = tb.eval_div(p);
                let b = ctx.basis.eval(p);
                for j in 0..nq {
                    let f = w * scale * q[j];
                    for (l, &g) in parent.local_to_global[t].iter().enumerate() {
                        div[(t * nq + j, g)] += f * dv[l] * hk;
                    }
                    for beta in 0..ns {
                        glob[(t * nq + j, beta)] += f * b[beta];
                    }
                }
            }
        }
        let u = orthonormal_columns(glob);
        blocks.push(complement_rows(&u, &div));
    }

    // (ii) normal trace on each split polygon edge equal to one polynomial of degree ≤ t
    let np = ctx.num_edges();
    for f in 0..np {
        let subs = st.sub_edges_of(f);
        if subs.len() <= 1 {
            continue;
        }
        let eg = &ctx.geometry.edges[f];
        let per = d.r + 1;
        let mut sel = DMatrix::zeros(subs.len() * per, n);
        let mut glob = DMatrix::zeros(subs.len() * per, d.t + 1);
        let seg = rule(Domain::Segment, d.r + d.t + 2);
        let mut psi_e = vec![0.0; per];
        let mut psi_f = vec![0.0; d.t + 1];
        for (b, &e) in subs.iter().enumerate() {
            let se = &st.edges[e];
            let sigma = se.normal.dot(eg.normal).signum();
            let w_e = (se.length / eg.length).sqrt();
            let (a, bb) = (st.vertices[se.vertices[0]], st.vertices[se.vertices[1]]);
            for i in 0..per {
                sel[(b * per + i, parent.edge_dof(e, i))] = w_e * sigma;
            }
            for (pt, w) in seg.points.iter().zip(&seg.weights) {
                let x = a.lerp(bb, pt[0]);
                let s = (x - eg.start).dot(eg.end - eg.start) / (eg.length * eg.length);
                legendre_into(d.r, pt[0], &mut psi_e);
                legendre_into(d.t, s, &mut psi_f);
                for i in 0..per {
                    for j in 0..=d.t {
                        glob[(b * per + i, j)] += w_e * w * psi_e[i] * psi_f[j];
                    }
                }
            }
        }
        let u = orthonormal_columns(glob);
        blocks.push(complement_rows(&u, &sel));
    }

    let rows: usize = blocks.iter().map(|b| b.nrows()).sum();
    let mut c = DMatrix::zeros(rows, n);
    let mut r0 = 0;
    for b in blocks {
        c.view_mut((r0, 0), (b.nrows(), n)).copy_from(&b);
        r0 += b.nrows();
    }
    c
}

fn divergence_representation(ctx: &CellContext, space: &MacroDivSpace) -> Result<DMatrix<f64>> {
    let s = space.degrees.s;
    let ns = dim(s);
    let m = space.dim();
    let mut mom = DMatrix::zeros(ns, m);
    for ((&p, &w), &t) in ctx.quad.points.iter().zip(&ctx.quad.weights).zip(&ctx.quad.triangle) {
        let dv = space.eval_div(t, p);
        let b = ctx.basis.eval(p);
        for beta in 0..ns {
            for i in 0..m {
                mom[(beta, i)] += w * b[beta] * dv[i];
            }
        }
    }
    let mass = ctx.basis.mass(&ctx.quad, s, s);
    Ok(spd_solve(&mass, &mom)?.transpose())
}

fn trace_representation(ctx: &CellContext, space: &MacroDivSpace) -> Vec<DMatrix<f64>> {
    let st = &ctx.subtri;
    let d = space.degrees;
    let per = d.r + 1;
    let seg = rule(Domain::Segment, d.r + d.t + 2);
    let mut out = Vec::with_capacity(ctx.num_edges());
    for (f, eg) in ctx.geometry.edges.iter().enumerate() {
        let mut tr = DMatrix::zeros(space.dim(), d.t + 1);
        for e in st.sub_edges_of(f) {
            let se = &st.edges[e];
            let sigma = se.normal.dot(eg.normal).signum();
            let (a, b) = (st.vertices[se.vertices[0]], st.vertices[se.vertices[1]]);
            for (pt, w) in seg.points.iter().zip(&seg.weights) {
                let x = a.lerp(b, pt[0]);
                let s = (x - eg.start).dot(eg.end - eg.start) / (eg.length * eg.length);
                let psi_e = legendre(d.r, pt[0]);
                let psi_f = legendre(d.t, s);
                let wt = w * se.length / eg.length * sigma;
                for i in 0..per {
                    let row = space.basis.row(space.parent.edge_dof(e, i));
                    for j in 0..=d.t {
                        let f = wt * psi_e[i] * psi_f[j];
                        for (mi, &c) in row.iter().enumerate() {
                            tr[(mi, j)] += f * c;
                        }
                    }
                }
            }
        }
        out.push(tr);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cell::CellOptions;
    use crate::mesh::{hexagon_hi, SubtriStrategy};

    fn ctx(points: &[Point2], k: usize, strategy: SubtriStrategy) -> CellContext {
        let opts = CellOptions {
            strategy,
            ..CellOptions::default()
        };
        CellContext::new(points, k + 1, &opts).unwrap()
    }

    fn square() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    fn check_dim(points: &[Point2], k: usize, mode: MacroMode, strategy: SubtriStrategy, expected: usize) {
        let c = ctx(points, k, strategy);
        let space = build_macro_div_space(&c, k, mode, &MacroOptions::default()).unwrap();
        assert_eq!(space.dim(), expected);
        assert_eq!(dof_count(&c.subtri, c.num_edges(), k, mode).unwrap(), expected);
    }

    #[test]
    fn square_split_rt0() {
        check_dim(&square(), 1, MacroMode::Nc, SubtriStrategy::EarClip, 4);
    }

    #[test]
    fn hexagon_fan_dimensions() {
        let h = hexagon_hi(0);
        check_dim(&h, 1, MacroMode::Nc, SubtriStrategy::CentroidFan, 7);
        check_dim(&h, 1, MacroMode::C, SubtriStrategy::CentroidFan, 19);
        check_dim(&h, 2, MacroMode::Nc, SubtriStrategy::CentroidFan, 19);
    }

    #[test]
    fn single_triangle_k3() {
        let tri = [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.3, 0.8)];
        check_dim(&tri, 3, MacroMode::Nc, SubtriStrategy::EarClip, 12);
    }

    #[test]
    fn constraints_hold_for_every_member() {
        let h = hexagon_hi(0);
        for (k, mode) in [(2, MacroMode::Nc), (2, MacroMode::C), (3, MacroMode::CReduced)] {
            let c = ctx(&h, k, SubtriStrategy::InballFan);
            let s = build_macro_div_space(&c, k, mode, &MacroOptions::default()).unwrap();
            assert!(s.is_orthonormal());
            // divergence matches its global polynomial fit pointwise
            for ((&p, _), &t) in c.quad.points.iter().zip(&c.quad.weights).zip(&c.quad.triangle) {
                let dv = s.eval_div(t, p);
                let b = c.basis.eval(p);
                let fit = &s.div_coeffs * b.rows(0, dim(s.degrees.s));
                assert!((dv - fit).amax() < 1e-9);
            }
            // normal traces match their Legendre representation
            for (f, eg) in c.geometry.edges.iter().enumerate() {
                for e in c.subtri.sub_edges_of(f) {
                    let t = c.subtri.edges[e].triangles[0].0;
                    let (a, b) = (c.subtri.vertices[c.subtri.edges[e].vertices[0]], c.subtri.vertices[c.subtri.edges[e].vertices[1]]);
                    for lam in [0.13, 0.5, 0.91] {
                        let x = a.lerp(b, lam);
                        let (vx, vy) = s.eval(t, x);
                        let vn = vx * eg.normal.x + vy * eg.normal.y;
                        let sp = (x - eg.start).dot(eg.end - eg.start) / (eg.length * eg.length);
                        let fit = &s.traces[f] * DVector::from_vec(legendre(s.degrees.t, sp));
                        let dev = (vn - fit).amax();
                        assert!(dev < 1e-9, "edge {f}: {dev}");
                    }
                }
            }
        }
    }

    #[test]
    fn divergence_is_onto() {
        let h = hexagon_hi(0);
        for k in 1..=3 {
            for mode in [MacroMode::Nc, MacroMode::C] {
                let c = ctx(&h, k, SubtriStrategy::InballFan);
                let s = build_macro_div_space(&c, k, mode, &MacroOptions::default()).unwrap();
                assert_eq!(crate::linalg::rank(&s.div_coeffs, 1e-10), dim(s.degrees.s));
            }
        }
    }

    #[test]
    fn projection_reproduces_polynomial_fields() {
        let h = hexagon_hi(0);
        for k in 1..=3 {
            let c = ctx(&h, k, SubtriStrategy::InballFan);
            let s = build_macro_div_space(&c, k, MacroMode::Nc, &MacroOptions::default()).unwrap();
            let g = move |p: Point2| {
                let d = k as i32 - 1;
                Point2::new(1.0 + p.x.powi(d) - 0.5 * p.y.powi(d), p.x * p.y.powi((d - 1).max(0)) * (d > 0) as i32 as f64 - 2.0)
            };
            let coef = s.project_field(&c, g).unwrap();
            for ((&p, _), &t) in c.quad.points.iter().zip(&c.quad.weights).zip(&c.quad.triangle).step_by(7) {
                let v = s.field(t, &coef, p);
                assert!((v - g(p)).norm() < 1e-10);
            }
            let zero = s.project_field(&c, |_| Point2::new(0.0, 0.0)).unwrap();
            assert_eq!(zero.amax(), 0.0);
        }
    }

    #[test]
    fn unorthonormalized_gram_is_spd() {
        let h = hexagon_hi(0);
        let c = ctx(&h, 2, SubtriStrategy::InballFan);
        let opts = MacroOptions {
            orthonormalize: false,
            ..MacroOptions::default()
        };
        let s = build_macro_div_space(&c, 2, MacroMode::C, &opts).unwrap();
        let (ev, _) = crate::linalg::sym_eigen(&s.gram);
        assert!(ev.iter().all(|&l| l > 0.0));
    }
}
