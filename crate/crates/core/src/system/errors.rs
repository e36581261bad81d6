use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::Discretization;
use crate::error::{Result, VemError};
use crate::macrodiv::build_macro_div_space;
use crate::mesh::Point2;
use crate::par::try_map_indexed;
use crate::vem::macro_gradient_matrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorNorms {
    /// `‖u − Q_h u_h‖_0`.
    pub l2: f64,
    /// `‖∇u − Q^div ∇_h u_h‖_0`.
    pub grad: f64,
}

/// L2 and projected-gradient errors of a global DoF vector.
pub fn compute_errors(
    disc: &Discretization,
    uh: &DVector<f64>,
    u: &(dyn Fn(Point2) -> f64 + Sync),
    grad: &(dyn Fn(Point2) -> Point2 + Sync),
) -> Result<ErrorNorms> {
    if uh.len() != disc.num_dofs() {
        return Err(VemError::ModeMismatch("solution length differs from the DoF count".into()));
    }
    let parts = try_map_indexed(disc.elements.len(), disc.options.execution, |c| -> Result<(f64, f64)> {
        let e = &disc.elements[c];
        let ops = &e.ops;
        let local = DVector::from_iterator(ops.num_dofs(), disc.dofmap.cell_dofs[c].iter().map(|&g| uh[g]));
        let q = &ops.q * &local;
        let built;
        let (space, b) = match (&e.space, &e.gradient) {
            (Some(s), Some(b)) => (s, b),
            _ => {
                let mode = disc.options.macro_mode.unwrap_or(ops.layout.family.macro_mode());
                let s = build_macro_div_space(&ops.ctx, disc.k, mode, &disc.options.macro_options)?;
                let b = macro_gradient_matrix(ops, &s)?;
                built = (s, b);
                (&built.0, &built.1)
            }
        };
        let rhs = b * &local;
        let coef = space
            .gram_solve(&nalgebra::DMatrix::from_column_slice(rhs.len(), 1, rhs.as_slice()))?
            .column(0)
            .into_owned();
        let (mut l2, mut h1) = (0.0, 0.0);
        for ((&p, &w), &t) in ops.ctx.quad.points.iter().zip(&ops.ctx.quad.weights).zip(&ops.ctx.quad.triangle) {
            let d = u(p) - ops.ctx.basis.eval_combination(&q, p);
            l2 += w * d * d;
            let g = grad(p) - space.field(t, &coef, p);
            h1 += w * g.dot(g);
        }
        Ok((l2, h1))
    })?;
    let (l2, h1) = parts.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    Ok(ErrorNorms {
        l2: l2.sqrt(),
        grad: h1.sqrt(),
    })
}
