use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sprs::{CsMat, TriMat};

use super::GlobalDofMap;
use crate::cell::CellOptions;
use crate::error::{Result, VemError};
use crate::macrodiv::{build_macro_div_space, MacroDivSpace, MacroMode, MacroOptions};
use crate::mesh::{Point2, PolygonalMesh};
use crate::par::{map_indexed, try_map_indexed, Execution};
use crate::vem::{
    local_matrices_sf, local_matrices_standard, macro_gradient_matrix, ElementOperators, LocalMatrices, Method,
};

/// Scalar field usable from worker threads.
pub type Field<'a> = &'a (dyn Fn(Point2) -> f64 + Sync);

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscretizationOptions {
    pub cell: CellOptions,
    pub macro_options: MacroOptions,
    /// Macro space for the stabilization-free methods; `None` picks the
    /// family default.
    pub macro_mode: Option<MacroMode>,
    pub execution: Execution,
    /// Build macro spaces for the stabilized methods as well, so the
    /// projected-gradient error can be measured for every method.
    pub gradient_projection: bool,
}

impl Default for DiscretizationOptions {
    fn default() -> Self {
        Self {
            cell: CellOptions::default(),
            macro_options: MacroOptions::default(),
            macro_mode: None,
            execution: Execution::default(),
            gradient_projection: true,
        }
    }
}

/// Per-element operators plus, when built, the macro space and the matrix
/// `(φ_i, ∇ψ_j)_K`.
#[derive(Clone, Debug)]
pub struct ElementData {
    pub ops: ElementOperators,
    pub space: Option<MacroDivSpace>,
    pub gradient: Option<DMatrix<f64>>,
}

/// A mesh with all element operators of one method built.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub method: Method,
    pub k: usize,
    pub dofmap: GlobalDofMap,
    pub elements: Vec<ElementData>,
    pub options: DiscretizationOptions,
}

fn in_cell(c: usize) -> impl Fn(VemError) -> VemError {
    move |e| match e {
        VemError::InvalidCell { .. } => e,
        other => VemError::InvalidCell {
            cell: c,
            reason: other.to_string(),
        },
    }
}

impl Discretization {
    pub fn new(mesh: &PolygonalMesh, method: Method, k: usize, options: DiscretizationOptions) -> Result<Self> {
        let family = method.family();
        let mode = options.macro_mode.unwrap_or(family.macro_mode());
        if !family.accepts(mode) {
            return Err(VemError::ModeMismatch(format!("{method} cannot use the {mode:?} macro space")));
        }
        let dofmap = GlobalDofMap::new(mesh, family, k);
        let with_space = method.is_stabilization_free() || options.gradient_projection;
        let elements = try_map_indexed(mesh.num_cells(), options.execution, |c| -> Result<ElementData> {
            let points = mesh.cell_points(c);
            let ops = ElementOperators::new(&points, family, k, &dofmap.cell_aligned[c], &options.cell)
                .map_err(in_cell(c))?;
            let (space, gradient) = if with_space {
                let space =
                    build_macro_div_space(&ops.ctx, k, mode, &options.macro_options).map_err(in_cell(c))?;
                let b = macro_gradient_matrix(&ops, &space)?;
                (Some(space), Some(b))
            } else {
                (None, None)
            };
            Ok(ElementData { ops, space, gradient })
        })?;
        Ok(Self {
            method,
            k,
            dofmap,
            elements,
            options,
        })
    }

    pub fn num_dofs(&self) -> usize {
        self.dofmap.num_dofs
    }

    /// Global DoF vector of `u`; shared DoFs take the value from the last cell
    /// visiting them, which agrees with every other cell up to quadrature.
    pub fn interpolate(&self, u: Field<'_>) -> DVector<f64> {
        let local = map_indexed(self.elements.len(), self.options.execution, |c| self.elements[c].ops.dofs_of(u));
        let mut out = DVector::zeros(self.num_dofs());
        for (c, vals) in local.iter().enumerate() {
            for (l, &g) in self.dofmap.cell_dofs[c].iter().enumerate() {
                out[g] = vals[l];
            }
        }
        out
    }

    pub fn local_matrices(&self, c: usize, alpha: f64, f: Field<'_>) -> Result<LocalMatrices> {
        let e = &self.elements[c];
        if self.method.is_stabilization_free() {
            let space = e
                .space
                .as_ref()
                .ok_or_else(|| VemError::ModeMismatch("macro space missing".into()))?;
            local_matrices_sf(&e.ops, space, alpha, f)
        } else {
            Ok(local_matrices_standard(&e.ops, alpha, f))
        }
    }

    /// Global matrix and load with boundary DoFs eliminated; boundary values
    /// are the DoFs of `g`.
    pub fn assemble(&self, alpha: f64, f: Field<'_>, g: Field<'_>) -> Result<SparseSystem> {
        let locals = try_map_indexed(self.elements.len(), self.options.execution, |c| self.local_matrices(c, alpha, f))?;
        let gvals = self.interpolate(g);
        let n = self.num_dofs();
        let mut reduced = vec![usize::MAX; n];
        let free = self.dofmap.free_dofs();
        for (i, &d) in free.iter().enumerate() {
            reduced[d] = i;
        }
        let mut boundary_values = DVector::zeros(n);
        for d in self.dofmap.boundary_dofs() {
            boundary_values[d] = gvals[d];
        }
        let nf = free.len();
        let mut tri = TriMat::new((nf, nf));
        let mut rhs = DVector::zeros(nf);
        for (c, lm) in locals.iter().enumerate() {
            let map = &self.dofmap.cell_dofs[c];
            for (i, &gi) in map.iter().enumerate() {
                let ri = reduced[gi];
                if ri == usize::MAX {
                    continue;
                }
                rhs[ri] += lm.load[i];
                for (j, &gj) in map.iter().enumerate() {
                    let v = lm.a[(i, j)];
                    match reduced[gj] {
                        usize::MAX => rhs[ri] -= v * boundary_values[gj],
                        rj => tri.add_triplet(ri, rj, v),
                    }
                }
            }
        }
        Ok(SparseSystem {
            matrix: tri.to_csr(),
            rhs,
            free,
            boundary_values,
        })
    }

    /// Dense global matrix without boundary elimination (small meshes only).
    pub fn assemble_full_dense(&self, alpha: f64) -> Result<DMatrix<f64>> {
        let n = self.num_dofs();
        let mut a = DMatrix::zeros(n, n);
        for c in 0..self.elements.len() {
            let lm = self.local_matrices(c, alpha, &|_| 0.0)?;
            let map = &self.dofmap.cell_dofs[c];
            for (i, &gi) in map.iter().enumerate() {
                for (j, &gj) in map.iter().enumerate() {
                    a[(gi, gj)] += lm.a[(i, j)];
                }
            }
        }
        Ok(a)
    }
}

/// Reduced system on the free DoFs.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub matrix: CsMat<f64>,
    pub rhs: DVector<f64>,
    /// Global index of every reduced unknown.
    pub free: Vec<usize>,
    /// Full-length vector holding the Dirichlet values (zero at free DoFs).
    pub boundary_values: DVector<f64>,
}

impl SparseSystem {
    pub fn size(&self) -> usize {
        self.free.len()
    }

    /// Full DoF vector from a solution on the free DoFs.
    pub fn expand(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = self.boundary_values.clone();
        for (i, &d) in self.free.iter().enumerate() {
            out[d] = x[i];
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.size();
        let mut a = DMatrix::zeros(n, n);
        for (v, (i, j)) in self.matrix.iter() {
            a[(i, j)] += *v;
        }
        a
    }
}

/// Build the discretization of `method` on `mesh` and assemble
/// `−Δu + αu = f` with Dirichlet data `g`.
pub fn assemble_global(
    mesh: &PolygonalMesh,
    method: Method,
    k: usize,
    alpha: f64,
    f: Field<'_>,
    g: Field<'_>,
    options: DiscretizationOptions,
) -> Result<(Discretization, SparseSystem)> {
    if k == 0 || k > 10 {
        return Err(VemError::Unsupported(format!("degree {k} outside 1..=10")));
    }
    let disc = Discretization::new(mesh, method, k, options)?;
    let sys = disc.assemble(alpha, f, g)?;
    Ok((disc, sys))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::asymmetry;
    use crate::mesh::{generate_mesh, MeshFamily, MeshParams};

    #[test]
    fn load_is_linear_in_f() {
        let m = generate_mesh(MeshFamily::ConvexPoly, MeshParams::divisions(3)).unwrap();
        let d = Discretization::new(&m, Method::Sfncvem, 2, DiscretizationOptions::default()).unwrap();
        let f1 = |p: Point2| p.x * p.y;
        let f2 = |p: Point2| (3.0 * p.x).sin();
        let zero = |_: Point2| 0.0;
        let a = d.assemble(1.0, &f1, &zero).unwrap().rhs;
        let b = d.assemble(1.0, &f2, &zero).unwrap().rhs;
        let sum = |p: Point2| f1(p) + f2(p);
        let c = d.assemble(1.0, &sum, &zero).unwrap().rhs;
        assert!((c - a - b).amax() < 1e-13);
    }

    #[test]
    fn reduced_matrix_is_symmetric_positive_definite() {
        let m = generate_mesh(MeshFamily::NonconvexPoly, MeshParams::divisions(2)).unwrap();
        for method in Method::ALL {
            for k in 1..=2 {
                let d = Discretization::new(&m, method, k, DiscretizationOptions::default()).unwrap();
                let sys = d.assemble(0.0, &|_| 1.0, &|_| 0.0).unwrap();
                let a = sys.to_dense();
                assert!(asymmetry(&a) < 1e-12 * a.amax());
                let (ev, _) = crate::linalg::sym_eigen(&a);
                assert!(ev.iter().all(|&l| l > 0.0), "{method} k={k}");
                let full = d.assemble_full_dense(0.0).unwrap();
                let (ev, _) = crate::linalg::sym_eigen(&full);
                let lmax = ev.iter().cloned().fold(0.0, f64::max);
                assert_eq!(ev.iter().filter(|&&l| l <= 1e-8 * lmax).count(), 1, "{method} k={k}");
            }
        }
    }
}
