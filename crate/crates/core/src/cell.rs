//! Per-cell geometric context shared by the macro spaces and the virtual
//! element operators.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::mesh::{subtriangulate_with, ElementGeometry, Point2, SubTriangulation, SubtriStrategy, DEFAULT_MIN_ANGLE};
use crate::poly::{default_exactness, CellBasis, CellQuadrature};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellOptions {
    pub strategy: SubtriStrategy,
    pub min_angle: f64,
    /// Quadrature exactness; `None` selects `2k + 4`.
    pub exactness: Option<usize>,
    /// L2-orthonormalize the computational cell basis. This changes no
    /// discrete operator, only round-off.
    pub orthonormal_basis: bool,
    /// Basis of `ℙ_{k−2}(K)` that interior DoFs are taken against.
    pub dof_basis: DofBasis,
}

/// Polynomial basis defining the interior moment DoFs. The choice fixes the
/// scaling of the discrete system and hence its spectrum.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DofBasis {
    /// `((x − x_K)/h_K)^α` about the centroid, `h_K` the diameter.
    ScaledMonomial,
    /// Same, scaled by `√|K|` instead of the diameter.
    #[default]
    AreaScaledMonomial,
    /// L2-orthonormal for `(1/|K|)(·,·)_K`; insensitive to cell shape.
    Orthonormal,
}

impl Default for CellOptions {
    fn default() -> Self {
        Self {
            strategy: SubtriStrategy::InballFan,
            min_angle: DEFAULT_MIN_ANGLE,
            exactness: None,
            orthonormal_basis: true,
            dof_basis: DofBasis::AreaScaledMonomial,
        }
    }
}

/// Geometry, sub-triangulation, quadrature and the degree-`k` cell basis of
/// one polygon.
#[derive(Clone, Debug)]
pub struct CellContext {
    pub geometry: ElementGeometry,
    pub subtri: SubTriangulation,
    pub quad: CellQuadrature,
    pub basis: CellBasis,
    pub exactness: usize,
}

impl CellContext {
    pub fn new(points: &[Point2], k: usize, opts: &CellOptions) -> Result<Self> {
        let geometry = ElementGeometry::new(points)?;
        let subtri = subtriangulate_with(points, opts.strategy, opts.min_angle)?;
        let exactness = opts.exactness.unwrap_or_else(|| default_exactness(k));
        let quad = CellQuadrature::new(&subtri, exactness);
        let basis = if opts.orthonormal_basis {
            CellBasis::orthonormal(geometry.inball_center, geometry.diameter, k, &quad)?
        } else {
            CellBasis::monomial(geometry.inball_center, geometry.diameter, k)
        };
        Ok(Self {
            geometry,
            subtri,
            quad,
            basis,
            exactness,
        })
    }

    /// Basis of degree `d` for interior DoFs.
    pub fn dof_basis(&self, kind: DofBasis, d: usize) -> Result<CellBasis> {
        let g = &self.geometry;
        Ok(match kind {
            DofBasis::ScaledMonomial => CellBasis::monomial(g.centroid, g.diameter, d),
            DofBasis::AreaScaledMonomial => CellBasis::monomial(g.centroid, g.area.sqrt(), d),
            DofBasis::Orthonormal => CellBasis::orthonormal(g.centroid, g.diameter, d, &self.quad)?,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.geometry.edges.len()
    }

    pub fn area(&self) -> f64 {
        self.geometry.area
    }

    pub fn diameter(&self) -> f64 {
        self.geometry.diameter
    }
}
