//! Global DoF numbering, assembly with Dirichlet elimination, linear
//! solvers, error norms and spectral statistics.

mod assemble;
mod dofmap;
mod errors;
mod solve;
mod spectrum;

pub use assemble::{assemble_global, Discretization, DiscretizationOptions, ElementData, SparseSystem};
pub use dofmap::GlobalDofMap;
pub use errors::{compute_errors, ErrorNorms};
pub use solve::{conjugate_gradient, solve_system, CgReport, SolverKind, SolverOptions};
pub use spectrum::{
    extreme_eigenvalues_spd, spectrum_stats, spectrum_stats_known_kernel, SpectrumStats, DEFAULT_ZERO_THRESHOLD,
};
