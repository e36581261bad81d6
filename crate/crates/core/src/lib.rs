//! Stabilization-free virtual element methods for the reaction-diffusion
//! problem `-Δu + αu = f` on polygonal meshes.
//!
//! The discrete gradient of a virtual function is replaced by its L2
//! projection onto a locally built H(div) macro element space, which makes
//! the bilinear form coercive without any stabilization term. Standard
//! (stabilized) conforming and nonconforming baselines share the same DoF
//! layouts so the four methods can be compared directly.
//!
//! Module map:
//! - [`mesh`]: polygonal meshes, generators and per-cell sub-triangulations
//! - [`poly`]: quadrature, scaled monomial and Legendre bases, projections
//! - [`femspaces`]: BDM/RT elements on triangles and the Lagrange macro space
//! - [`macrodiv`]: constrained macro H(div) spaces and their L2 projectors
//! - [`vem`]: element DoF layouts, projectors and local matrices
//! - [`system`]: global assembly, solvers, error norms, spectra
//! - [`experiment`]: the experiment driver and CSV/JSON reports

pub mod cell;
pub mod error;
pub mod experiment;
pub mod femspaces;
pub mod linalg;
pub mod macrodiv;
pub mod mesh;
pub mod par;
pub mod poly;
pub mod system;
pub mod vem;

pub use error::{Result, VemError};
pub use mesh::{Point2, PolygonalMesh};
pub use vem::{Family, Method};
