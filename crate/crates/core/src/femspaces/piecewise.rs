//! The broken-free H(div) space on a sub-triangulation.

use nalgebra::{DMatrix, DVector};

use super::bdm::{div_dim, num_div_interior, EdgeFrame, TriangleDivBasis};
use crate::error::Result;
use crate::mesh::{Point2, SubTriangulation};
use crate::poly::triangle_quadrature;

/// `BDM_r` (or `RT_0`) on every sub-triangle with normal moments shared
/// across sub-edges.
///
/// Edge DoFs use each sub-edge's fixed normal and lower-to-higher parameter,
/// so neighbouring triangles agree on them without sign flips and every
/// coefficient vector has a continuous normal component.
#[derive(Clone, Debug)]
pub struct PiecewiseDivSpace {
    pub degree: usize,
    pub triangles: Vec<TriangleDivBasis>,
    /// Global index of every local shape, per triangle.
    pub local_to_global: Vec<Vec<usize>>,
    pub num_edges: usize,
    num_dofs: usize,
}

impl PiecewiseDivSpace {
    pub fn new(st: &SubTriangulation, r: usize) -> Result<Self> {
        let ne = st.edges.len();
        let per_edge = r + 1;
        let n_int = num_div_interior(r);
        let mut triangles = Vec::with_capacity(st.num_triangles());
        let mut local_to_global = Vec::with_capacity(st.num_triangles());
        for t in 0..st.num_triangles() {
            let frames = [0, 1, 2].map(|j| {
                let e = &st.edges[st.triangle_edges[t][j]];
                EdgeFrame {
                    start: st.vertices[e.vertices[0]],
                    end: st.vertices[e.vertices[1]],
                    normal: e.normal,
                }
            });
            triangles.push(TriangleDivBasis::with_edges(st.triangle_points(t), r, frames)?);
            let mut map = Vec::with_capacity(div_dim(r));
            for j in 0..3 {
                let e = st.triangle_edges[t][j];
                map.extend((0..per_edge).map(|i| e * per_edge + i));
            }
            map.extend((0..n_int).map(|l| ne * per_edge + t * n_int + l));
            local_to_global.push(map);
        }
        Ok(Self {
            degree: r,
            triangles,
            local_to_global,
            num_edges: ne,
            num_dofs: ne * per_edge + st.num_triangles() * n_int,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.num_dofs
    }

    /// Global index of normal moment `i` on sub-edge `e`.
    pub fn edge_dof(&self, e: usize, i: usize) -> usize {
        e * (self.degree + 1) + i
    }

    /// Restriction of a global coefficient vector to triangle `t`.
    pub fn local_coefficients(&self, t: usize, c: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.local_to_global[t].len(), self.local_to_global[t].iter().map(|&g| c[g]))
    }

    /// Field value at `p` inside triangle `t`.
    pub fn eval(&self, t: usize, c: &DVector<f64>, p: Point2) -> Point2 {
        let (vx, vy) = self.triangles[t].eval(p);
        let lc = self.local_coefficients(t, c);
        Point2::new(vx.dot(&lc), vy.dot(&lc))
    }

    /// Gram matrix `(φ_i, φ_j)_K` of all global shapes.
    pub fn gram(&self) -> DMatrix<f64> {
        let n = self.num_dofs;
        let mut m = DMatrix::zeros(n, n);
        for (t, tb) in self.triangles.iter().enumerate() {
            let (pts, wts) = triangle_quadrature(tb.vertices, 2 * tb.degree.max(1));
            let map = &self.local_to_global[t];
            for (&p, &w) in pts.iter().zip(&wts) {
                let (vx, vy) = tb.eval(p);
                for (a, &ga) in map.iter().enumerate() {
                    for (b, &gb) in map.iter().enumerate() {
                        m[(ga, gb)] += w * (vx[a] * vx[b] + vy[a] * vy[b]);
                    }
                }
            }
        }
        m
    }
}
