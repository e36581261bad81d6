//! Batch experiments over methods, degrees and meshes, with CSV/JSON
//! reports.

mod report;
mod runs;

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VemError};
use crate::mesh::{MeshFamily, MeshParams};
use crate::system::DEFAULT_ZERO_THRESHOLD;
use crate::vem::Method;

pub use report::{
    write_report, Environment, ExperimentReport, RateFit, ReportFormat, RunRecord, CSV_COLUMNS,
};
pub use runs::{estimated_dofs, run_experiment};

/// Largest degree any experiment accepts.
pub const MAX_DEGREE: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Manufactured smooth solution on a refined mesh family.
    Convergence,
    /// Local stiffness spectra on the three reference cells.
    LocalSpectrum,
    /// Local condition numbers on the flattening hexagons `H_0..H_12`.
    CollapsingHexagons,
    /// Linear solution on three mesh sequences.
    PatchTest,
    /// Wall-clock assembly time across degrees and mesh sizes.
    Timing,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 5] = [
        ExperimentKind::Convergence,
        ExperimentKind::LocalSpectrum,
        ExperimentKind::CollapsingHexagons,
        ExperimentKind::PatchTest,
        ExperimentKind::Timing,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::LocalSpectrum => "local-spectrum",
            ExperimentKind::CollapsingHexagons => "collapsing-hexagons",
            ExperimentKind::PatchTest => "patch-test",
            ExperimentKind::Timing => "timing",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentKind {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentKind::ALL
            .into_iter()
            .find(|e| e.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| VemError::Unsupported(format!("unknown experiment `{s}`")))
    }
}

/// One experiment invocation. JSON keys match the command-line flags.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(alias = "methods")]
    pub method: Vec<Method>,
    pub k: Vec<usize>,
    pub mesh: MeshFamily,
    /// Refinement levels (convergence, timing).
    pub levels: usize,
    pub alpha: f64,
    pub out: PathBuf,
    /// Worker threads; `Some(1)` runs every element loop sequentially.
    pub threads: Option<usize>,
    /// Quadrature exactness; `None` selects `2k + 4`.
    #[serde(alias = "quad_exactness")]
    pub quad_exactness: Option<usize>,
    #[serde(alias = "zero_threshold")]
    pub zero_threshold: f64,
    /// Runs whose estimated DoF count exceeds this are refused up front.
    #[serde(alias = "max_dofs")]
    pub max_dofs: usize,
    /// Subdivisions per side on the coarsest level.
    #[serde(alias = "base_divisions")]
    pub base_divisions: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            experiment: ExperimentKind::Convergence,
            method: vec![Method::Sfncvem],
            k: vec![1, 2, 3],
            mesh: MeshFamily::ConvexPoly,
            levels: 4,
            alpha: 2.0,
            out: PathBuf::from("results"),
            threads: None,
            quad_exactness: None,
            zero_threshold: DEFAULT_ZERO_THRESHOLD,
            max_dofs: 2_000_000,
            base_divisions: 4,
        }
    }
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(VemError::Unsupported(msg));
        if self.method.is_empty() {
            return bad("empty method list".into());
        }
        if self.k.is_empty() {
            return bad("empty degree list".into());
        }
        if let Some(&k) = self.k.iter().find(|&&k| k == 0 || k > MAX_DEGREE) {
            return bad(format!("degree {k} outside 1..={MAX_DEGREE}"));
        }
        if !self.alpha.is_finite() || self.alpha < 0.0 {
            return bad(format!("alpha must be finite and non-negative, got {}", self.alpha));
        }
        if !(self.zero_threshold > 0.0 && self.zero_threshold < 1.0) {
            return bad(format!("zero threshold {} outside (0, 1)", self.zero_threshold));
        }
        if self.threads == Some(0) {
            return bad("thread count must be positive".into());
        }
        if self.base_divisions == 0 {
            return bad("base divisions must be positive".into());
        }
        match self.experiment {
            ExperimentKind::Convergence | ExperimentKind::Timing => {
                if self.mesh.is_single_element() {
                    return bad(format!("{} needs a mesh of the unit square, not {}", self.experiment, self.mesh));
                }
                let min = if self.experiment == ExperimentKind::Convergence { 2 } else { 1 };
                if self.levels < min {
                    return bad(format!("{} needs at least {min} levels, got {}", self.experiment, self.levels));
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Generator parameters of refinement level `l`: mesh sizes halve from
    /// `1 / base_divisions`. Anisotropic quads keep the aspect ratio 4.
    pub fn level_params(&self, l: usize) -> MeshParams {
        let n = self.base_divisions << l;
        match self.mesh {
            MeshFamily::AnisotropicQuads => MeshParams::spacing(1.0 / n as f64, 0.25 / n as f64),
            MeshFamily::HexagonHi => MeshParams::index(l),
            _ => MeshParams::divisions(n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_parse_by_name() {
        for e in ExperimentKind::ALL {
            assert_eq!(e.name().parse::<ExperimentKind>().unwrap(), e);
        }
        assert!("spectra".parse::<ExperimentKind>().is_err());
    }

    #[test]
    fn json_keys_match_flags() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"experiment": "patch-test", "method": ["SFCVEM", "NCVEM"], "k": [3],
                "quad-exactness": 12, "zero-threshold": 1e-9}"#,
        )
        .unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::PatchTest);
        assert_eq!(cfg.method, vec![Method::Sfcvem, Method::Ncvem]);
        assert_eq!(cfg.quad_exactness, Some(12));
        assert_eq!(cfg.levels, 4);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"levls": 3}"#).is_err());
    }

    #[test]
    fn validation() {
        let ok = ExperimentConfig::default();
        ok.validate().unwrap();
        let with = |f: &dyn Fn(&mut ExperimentConfig)| {
            let mut c = ok.clone();
            f(&mut c);
            c.validate()
        };
        assert!(with(&|c| c.levels = 1).is_err());
        assert!(with(&|c| c.k = vec![0]).is_err());
        assert!(with(&|c| c.k = vec![11]).is_err());
        assert!(with(&|c| c.method.clear()).is_err());
        assert!(with(&|c| c.mesh = MeshFamily::HexagonHi).is_err());
        assert!(with(&|c| c.threads = Some(0)).is_err());
        assert!(with(&|c| {
            c.experiment = ExperimentKind::LocalSpectrum;
            c.levels = 1;
        })
        .is_ok());
    }
}
