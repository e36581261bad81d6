use nalgebra::{DMatrix, DVector};

use super::{ElementOperators, Method};
use crate::error::{Result, VemError};
use crate::macrodiv::MacroDivSpace;
use crate::mesh::Point2;

/// Local stiffness, L2-lifted mass and load of one element.
#[derive(Clone, Debug)]
pub struct LocalMatrices {
    pub method: Method,
    /// Full local operator: gradient part plus `α` times `mass`.
    pub a: DMatrix<f64>,
    /// `(Q u, Q v)_K`.
    pub mass: DMatrix<f64>,
    /// `(f, Q ψ_j)_K`.
    pub load: DVector<f64>,
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    (&a + a.transpose()) * 0.5
}

fn lifted_mass_and_load(ops: &ElementOperators, f: impl Fn(Point2) -> f64) -> (DMatrix<f64>, DVector<f64>) {
    let mass = symmetrize(ops.q.transpose() * &ops.mass * &ops.q);
    let moments = ops.ctx.basis.moments(&ops.ctx.quad, ops.k(), f);
    (mass, ops.q.tr_mul(&moments))
}

/// `(φ_i, ∇ψ_j)_K` for every macro member `φ_i` and local basis function `ψ_j`.
pub fn macro_gradient_matrix(ops: &ElementOperators, space: &MacroDivSpace) -> Result<DMatrix<f64>> {
    if !ops.layout.family.accepts(space.mode) || space.k != ops.k() {
        return Err(VemError::ModeMismatch(format!(
            "{:?} element of degree {} cannot use a {:?} macro space of degree {}",
            ops.layout.family,
            ops.k(),
            space.mode,
            space.k
        )));
    }
    Ok(space.gradient_moments(&ops.ctx, &ops.cell_moments(), &ops.traces))
}

/// `(Q^div ∇u, Q^div ∇v)_K + α (Q u, Q v)_K`, with no stabilization.
pub fn local_matrices_sf(
    ops: &ElementOperators,
    space: &MacroDivSpace,
    alpha: f64,
    f: impl Fn(Point2) -> f64,
) -> Result<LocalMatrices> {
    let b = macro_gradient_matrix(ops, space)?;
    let coef = space.gram_solve(&b)?;
    let (mass, load) = lifted_mass_and_load(ops, f);
    let a = symmetrize(b.tr_mul(&coef)) + &mass * alpha;
    let method = match ops.layout.family {
        super::Family::Nc => Method::Sfncvem,
        super::Family::C => Method::Sfcvem,
    };
    Ok(LocalMatrices { method, a, mass, load })
}

/// `(∇Π u, ∇Π v)_K + Σ_i dof_i(u − Π u) dof_i(v − Π v) + α (Q u, Q v)_K`.
pub fn local_matrices_standard(ops: &ElementOperators, alpha: f64, f: impl Fn(Point2) -> f64) -> LocalMatrices {
    let n = ops.num_dofs();
    let consistency = ops.pi_star.transpose() * &ops.stiffness * &ops.pi_star;
    let residual = DMatrix::identity(n, n) - &ops.d * &ops.pi_star;
    let stab = residual.tr_mul(&residual);
    let (mass, load) = lifted_mass_and_load(ops, f);
    let a = symmetrize(consistency + stab) + &mass * alpha;
    let method = match ops.layout.family {
        super::Family::Nc => Method::Ncvem,
        super::Family::C => Method::Cvem,
    };
    LocalMatrices { method, a, mass, load }
}
