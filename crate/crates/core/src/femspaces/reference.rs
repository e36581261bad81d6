//! Bases on the reference triangle shared by every physical triangle.

use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::mesh::Point2;
use crate::poly::{dim, eval_monomials, triangle_quadrature, CellBasis, CellQuadrature, Frame};

const MAX_DEGREE: usize = 15;

fn reference_triangle() -> [Point2; 3] {
    [Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)]
}

/// Orthonormal basis of `ℙ_d` on the reference triangle for the averaged
/// inner product; affine maps preserve averages, so it serves every triangle
/// when evaluated at reference coordinates.
pub fn orthonormal(d: usize) -> &'static CellBasis {
    static CACHE: [OnceLock<CellBasis>; MAX_DEGREE + 1] = [const { OnceLock::new() }; MAX_DEGREE + 1];
    assert!(d <= MAX_DEGREE, "reference degree {d} too large");
    CACHE[d].get_or_init(|| {
        let (points, weights) = triangle_quadrature(reference_triangle(), 2 * d + 2);
        let quad = CellQuadrature {
            triangle: vec![0; points.len()],
            points,
            weights,
        };
        CellBasis::orthonormal(Point2::new(1.0 / 3.0, 1.0 / 3.0), 0.5, d, &quad)
            .expect("monomials are independent on the reference triangle")
    })
}

/// Reference coordinates `(λ_1, λ_2)` of `p` in the triangle `tri`.
pub fn barycentric(tri: [Point2; 3], p: Point2) -> Point2 {
    let [l1, l2] = Frame::affine(tri[0], tri[1], tri[2]).local(p);
    Point2::new(l1, l2)
}

/// Reference lattice node `(i, j)` order used by Lagrange elements.
pub fn lattice_nodes(m: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(dim(m));
    for j in 0..=m {
        for i in 0..=(m - j) {
            out.push((i, j));
        }
    }
    out
}

/// Monomial coefficients (columns) of the degree-`m` nodal Lagrange basis on
/// the reference triangle.
pub fn lagrange_coefficients(m: usize) -> &'static DMatrix<f64> {
    static CACHE: [OnceLock<DMatrix<f64>>; MAX_DEGREE + 1] = [const { OnceLock::new() }; MAX_DEGREE + 1];
    assert!((1..=MAX_DEGREE).contains(&m), "Lagrange degree {m} unsupported");
    CACHE[m].get_or_init(|| {
        let nodes = lattice_nodes(m);
        let n = nodes.len();
        let mut v = DMatrix::zeros(n, n);
        let mut row = vec![0.0; n];
        for (r, &(i, j)) in nodes.iter().enumerate() {
            eval_monomials(m, [i as f64 / m as f64, j as f64 / m as f64], &mut row);
            for c in 0..n {
                v[(r, c)] = row[c];
            }
        }
        v.try_inverse().expect("equispaced Vandermonde matrix is invertible")
    })
}
