//! Continuous piecewise-polynomial Lagrange spaces on a sub-triangulation.

use nalgebra::DVector;

use super::reference::{lagrange_coefficients, lattice_nodes};
use crate::mesh::{Point2, SubTriangulation};
use crate::poly::{dim, eval_monomial_derivatives, eval_monomials, Frame, Poly2, VecPoly2};

/// Degree-`m` continuous Lagrange space; in two dimensions this is the
/// potential space whose curls fill the divergence-free part of the H(div)
/// macro space.
///
/// Nodes are numbered by [`SubTriangulation::lattice_node`]: vertices, then
/// edge points, then triangle-interior points.
#[derive(Clone, Debug)]
pub struct LagrangeSpace {
    pub degree: usize,
    pub frames: Vec<Frame>,
    /// Global node of every reference lattice node, per triangle.
    pub triangle_nodes: Vec<Vec<usize>>,
    pub node_points: Vec<Point2>,
    pub on_boundary: Vec<bool>,
}

impl LagrangeSpace {
    pub fn new(st: &SubTriangulation, m: usize) -> Self {
        assert!(m >= 1, "Lagrange degree must be positive");
        let n = st.lattice_size(m);
        let mut node_points = vec![Point2::default(); n];
        let mut triangle_nodes = Vec::with_capacity(st.num_triangles());
        let mut frames = Vec::with_capacity(st.num_triangles());
        for t in 0..st.num_triangles() {
            let [a, b, c] = st.triangle_points(t);
            frames.push(Frame::affine(a, b, c));
            let ids: Vec<usize> = lattice_nodes(m)
                .into_iter()
                .map(|(i, j)| {
                    let g = st.lattice_node(m, t, i, j);
                    node_points[g] = a + (b - a) * (i as f64 / m as f64) + (c - a) * (j as f64 / m as f64);
                    g
                })
                .collect();
            triangle_nodes.push(ids);
        }
        let mut on_boundary = vec![false; n];
        for t in 0..st.num_triangles() {
            for j in 0..3 {
                if st.edges[st.triangle_edges[t][j]].is_boundary() {
                    // lattice nodes on local edge j: those with the j-th barycentric coordinate zero
                    for (k, &(a, b)) in lattice_nodes(m).iter().enumerate() {
                        let on = match j {
                            0 => a + b == m,
                            1 => a == 0,
                            _ => b == 0,
                        };
                        if on {
                            on_boundary[triangle_nodes[t][k]] = true;
                        }
                    }
                }
            }
        }
        Self {
            degree: m,
            frames,
            triangle_nodes,
            node_points,
            on_boundary,
        }
    }

    pub fn num_dofs(&self) -> usize {
        self.node_points.len()
    }

    /// Nodes not on the polygon boundary (the ring subspace).
    pub fn interior_dofs(&self) -> Vec<usize> {
        (0..self.num_dofs()).filter(|&i| !self.on_boundary[i]).collect()
    }

    /// Values of the local shapes of triangle `t` at `p`.
    pub fn eval(&self, t: usize, p: Point2) -> DVector<f64> {
        let m = self.degree;
        let mut mono = DVector::zeros(dim(m));
        eval_monomials(m, self.frames[t].local(p), mono.as_mut_slice());
        lagrange_coefficients(m).tr_mul(&mono)
    }

    /// Physical gradients of the local shapes of triangle `t` at `p`.
    pub fn eval_grad(&self, t: usize, p: Point2) -> (DVector<f64>, DVector<f64>) {
        let m = self.degree;
        let (mut dx, mut dy) = (DVector::zeros(dim(m)), DVector::zeros(dim(m)));
        eval_monomial_derivatives(m, self.frames[t].local(p), dx.as_mut_slice(), dy.as_mut_slice());
        let c = lagrange_coefficients(m);
        let (gx, gy) = (c.tr_mul(&dx), c.tr_mul(&dy));
        let inv = self.frames[t].inv;
        (&gx * inv[0][0] + &gy * inv[1][0], &gx * inv[0][1] + &gy * inv[1][1])
    }

    /// Local shape `k` of triangle `t` as a polynomial in its affine frame.
    pub fn shape(&self, t: usize, k: usize) -> Poly2 {
        Poly2::new(self.frames[t], self.degree, lagrange_coefficients(self.degree).column(k).into_owned())
    }

    pub fn curl_shape(&self, t: usize, k: usize) -> VecPoly2 {
        VecPoly2::curl_of(&self.shape(t, k))
    }

    /// Number of ring (interior) DoFs predicted from the sub-triangulation.
    pub fn interior_count(st: &SubTriangulation, m: usize) -> usize {
        st.interior_vertices().len()
            + (m - 1) * st.num_interior_edges()
            + if m >= 3 { st.num_triangles() * (m - 1) * (m - 2) / 2 } else { 0 }
    }
}
