//! Quadrature, polynomial bases on cells and edges, and L2 projections.

mod cell;
mod legendre;
mod monomial;
pub mod quadrature;

pub use cell::{member_degree, triangle_quadrature, CellBasis, CellQuadrature};
pub use legendre::{edge_moments, endpoint_values, legendre, legendre_into, reversal_sign};
pub use monomial::{
    dim, dim_signed, eval_monomial_derivatives, eval_monomials, exponents, index, Frame, Poly2, VecPoly2,
};
pub use quadrature::{quadrature_rule, Domain, QuadratureRule, MAX_EXACTNESS};

/// Quadrature exactness used for degree-`k` assemblies unless overridden.
pub fn default_exactness(k: usize) -> usize {
    (2 * k + 4).min(MAX_EXACTNESS)
}
