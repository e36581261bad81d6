use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sprs::{CsMat, FillInReduction};
use sprs_ldl::Ldl;

use super::SparseSystem;
use crate::error::{Result, VemError};
use crate::linalg::spd_solve;
use crate::par::Execution;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverKind {
    /// Dense Cholesky up to the size threshold, sparse LDLᵀ above it.
    #[default]
    Auto,
    Dense,
    /// Jacobi-preconditioned conjugate gradients.
    Cg,
    /// Sparse LDLᵀ with reverse Cuthill–McKee ordering.
    SparseDirect,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub kind: SolverKind,
    pub dense_threshold: usize,
    pub cg_tolerance: f64,
    /// Iteration cap as a multiple of the system size.
    pub cg_max_factor: usize,
    pub execution: Execution,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            kind: SolverKind::Auto,
            dense_threshold: 2000,
            cg_tolerance: 1e-12,
            cg_max_factor: 20,
            execution: Execution::Sequential,
        }
    }
}

/// Outcome of a converged CG run.
#[derive(Clone, Debug)]
pub struct CgReport {
    pub solution: DVector<f64>,
    pub iterations: usize,
    /// Relative residual after every iteration.
    pub history: Vec<f64>,
}

pub(super) fn matvec(a: &CsMat<f64>, x: &DVector<f64>, y: &mut DVector<f64>, exec: Execution) {
    let row = |i: usize| -> f64 {
        a.outer_view(i)
            .map(|r| r.iter().map(|(j, v)| v * x[j]).sum())
            .unwrap_or(0.0)
    };
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            use rayon::prelude::*;
            y.as_mut_slice().par_iter_mut().enumerate().for_each(|(i, yi)| *yi = row(i));
            return;
        }
    }
    let _ = exec;
    for i in 0..a.rows() {
        y[i] = row(i);
    }
}

/// Jacobi-preconditioned CG on a CSR matrix, stopping at relative residual
/// `tol` or after `max_iter` iterations.
pub fn conjugate_gradient(
    a: &CsMat<f64>,
    b: &DVector<f64>,
    tol: f64,
    max_iter: usize,
    exec: Execution,
) -> Result<CgReport> {
    let n = b.len();
    let mut diag = DVector::from_element(n, 1.0);
    for (v, (i, j)) in a.iter() {
        if i == j && *v > 0.0 {
            diag[i] = *v;
        }
    }
    let bnorm = b.norm();
    let mut x = DVector::zeros(n);
    if bnorm == 0.0 {
        return Ok(CgReport {
            solution: x,
            iterations: 0,
            history: vec![0.0],
        });
    }
    let mut r = b.clone();
    let mut z = r.component_div(&diag);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut ap = DVector::zeros(n);
    let mut history = Vec::new();
    for it in 1..=max_iter {
        matvec(a, &p, &mut ap, exec);
        let pap = p.dot(&ap);
        if pap <= 0.0 {
            return Err(VemError::Singular(format!("CG met a non-positive curvature {pap:e}")));
        }
        let step = rz / pap;
        x.axpy(step, &p, 1.0);
        r.axpy(-step, &ap, 1.0);
        let rel = r.norm() / bnorm;
        history.push(rel);
        if rel <= tol {
            return Ok(CgReport {
                solution: x,
                iterations: it,
                history,
            });
        }
        z = r.component_div(&diag);
        let rz_new = r.dot(&z);
        p = &z + &p * (rz_new / rz);
        rz = rz_new;
    }
    let residual = history.last().copied().unwrap_or(1.0);
    Err(VemError::NoConvergence {
        iterations: max_iter,
        residual,
        history,
    })
}

pub(super) fn factor_ldl(a: &CsMat<f64>) -> Result<sprs_ldl::LdlNumeric<f64, usize>> {
    let ldl = Ldl::new()
        .fill_in_reduction(FillInReduction::ReverseCuthillMcKee)
        .numeric(a.view())
        .map_err(|e| VemError::Singular(format!("sparse factorization failed: {e}")))?;
    if ldl.d().iter().any(|&d| !(d > 0.0)) {
        return Err(VemError::Singular("sparse factorization met a non-positive pivot".into()));
    }
    Ok(ldl)
}

fn sparse_direct(a: &CsMat<f64>, b: &DVector<f64>) -> Result<DVector<f64>> {
    let ldl = factor_ldl(a)?;
    let x: Vec<f64> = ldl.solve(b.as_slice());
    Ok(DVector::from_vec(x))
}

/// Solve the reduced system; returns the full DoF vector including the
/// Dirichlet values.
pub fn solve_system(sys: &SparseSystem, opts: &SolverOptions) -> Result<DVector<f64>> {
    let n = sys.size();
    if n == 0 {
        return Ok(sys.boundary_values.clone());
    }
    let kind = match opts.kind {
        SolverKind::Auto if n <= opts.dense_threshold => SolverKind::Dense,
        SolverKind::Auto => SolverKind::SparseDirect,
        k => k,
    };
    let x = match kind {
        SolverKind::Dense => {
            let b = DMatrix::from_column_slice(n, 1, sys.rhs.as_slice());
            spd_solve(&sys.to_dense(), &b)?.column(0).into_owned()
        }
        SolverKind::Cg => {
            conjugate_gradient(&sys.matrix, &sys.rhs, opts.cg_tolerance, opts.cg_max_factor * n, opts.execution)?.solution
        }
        SolverKind::SparseDirect => sparse_direct(&sys.matrix, &sys.rhs)?,
        SolverKind::Auto => unreachable!("resolved above"),
    };
    Ok(sys.expand(&x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{generate_mesh, MeshFamily, MeshParams, Point2};
    use crate::system::{Discretization, DiscretizationOptions};
    use crate::vem::Method;

    #[test]
    fn zero_data_gives_zero_solution() {
        let cell = crate::mesh::PolygonalMesh::single_cell(&crate::mesh::hexagon_hi(0)).unwrap();
        let d = Discretization::new(&cell, Method::Sfncvem, 1, DiscretizationOptions::default()).unwrap();
        let sys = d.assemble(1.0, &|_| 0.0, &|_| 0.0).unwrap();
        let u = solve_system(&sys, &SolverOptions::default()).unwrap();
        assert_eq!(u.amax(), 0.0);
    }

    #[test]
    fn all_solvers_agree() {
        let m = generate_mesh(MeshFamily::ConvexPoly, MeshParams::divisions(7)).unwrap();
        let d = Discretization::new(&m, Method::Sfcvem, 3, DiscretizationOptions::default()).unwrap();
        let f = |p: Point2| (p.x * 3.0).sin() + p.y;
        let sys = d.assemble(2.0, &f, &|p| p.x * p.y).unwrap();
        assert!(sys.size() >= 500, "{}", sys.size());
        let run = |kind| {
            solve_system(
                &sys,
                &SolverOptions {
                    kind,
                    ..SolverOptions::default()
                },
            )
            .unwrap()
        };
        let dense = run(SolverKind::Dense);
        for kind in [SolverKind::Cg, SolverKind::SparseDirect] {
            let x = run(kind);
            assert!((&x - &dense).amax() < 1e-9 * dense.amax(), "{kind:?}");
        }
    }

    #[test]
    fn cg_reports_non_convergence_with_history() {
        let m = generate_mesh(MeshFamily::UniformQuads, MeshParams::divisions(4)).unwrap();
        let d = Discretization::new(&m, Method::Ncvem, 2, DiscretizationOptions::default()).unwrap();
        let sys = d.assemble(0.0, &|_| 1.0, &|_| 0.0).unwrap();
        match conjugate_gradient(&sys.matrix, &sys.rhs, 1e-14, 2, Execution::Sequential) {
            Err(VemError::NoConvergence { iterations, history, .. }) => {
                assert_eq!(iterations, 2);
                assert_eq!(history.len(), 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
