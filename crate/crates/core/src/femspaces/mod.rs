//! Finite element spaces on the sub-triangulation of a cell: BDM/RT_0
//! elements and continuous Lagrange elements.

mod bdm;
mod lagrange;
mod piecewise;
mod reference;

pub use bdm::{
    div_dim, num_div_interior, num_div_moments, num_rot_moments, EdgeFrame, TriangleDivBasis, MAX_DIV_DEGREE,
};
pub use lagrange::LagrangeSpace;
pub use piecewise::PiecewiseDivSpace;
pub use reference::{barycentric, lagrange_coefficients, lattice_nodes, orthonormal as reference_orthonormal};
