//! Constrained macro H(div) spaces on a cell and their L2 projectors.
//!
//! The parent is the piecewise BDM (or RT_0) space on the sub-triangulation.
//! Members must have a divergence that is a single polynomial on the whole
//! cell and a normal component that is a single polynomial on every polygon
//! edge; the space is the nullspace of those linear constraints.

mod oracle;
mod space;

pub use space::{build_macro_div_space, dof_count, MacroDegrees, MacroDivSpace, MacroMode, MacroOptions};
pub use oracle::{approximate_virtual_function, OracleField, VirtualOracle};
