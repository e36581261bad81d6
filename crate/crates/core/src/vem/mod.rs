//! Per-element virtual element operators for the nonconforming and
//! conforming families, with stabilization-free and stabilized local
//! matrices.

mod element;
mod layout;
mod local;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::VemError;
use crate::macrodiv::MacroMode;

pub use element::ElementOperators;
pub use layout::ElementDofLayout;
pub use local::{local_matrices_sf, local_matrices_standard, macro_gradient_matrix, LocalMatrices};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "NC")]
    Nc,
    #[serde(rename = "C")]
    C,
}

impl Family {
    /// Macro space paired with the family by default.
    pub fn macro_mode(self) -> MacroMode {
        match self {
            Family::Nc => MacroMode::Nc,
            Family::C => MacroMode::C,
        }
    }

    pub fn accepts(self, mode: MacroMode) -> bool {
        matches!(
            (self, mode),
            (Family::Nc, MacroMode::Nc) | (Family::C, MacroMode::C) | (Family::C, MacroMode::CReduced)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "SFNCVEM")]
    Sfncvem,
    #[serde(rename = "SFCVEM")]
    Sfcvem,
    #[serde(rename = "NCVEM")]
    Ncvem,
    #[serde(rename = "CVEM")]
    Cvem,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Ncvem, Method::Cvem, Method::Sfncvem, Method::Sfcvem];

    pub fn name(self) -> &'static str {
        match self {
            Method::Sfncvem => "SFNCVEM",
            Method::Sfcvem => "SFCVEM",
            Method::Ncvem => "NCVEM",
            Method::Cvem => "CVEM",
        }
    }

    pub fn family(self) -> Family {
        match self {
            Method::Sfncvem | Method::Ncvem => Family::Nc,
            Method::Sfcvem | Method::Cvem => Family::C,
        }
    }

    pub fn is_stabilization_free(self) -> bool {
        matches!(self, Method::Sfncvem | Method::Sfcvem)
    }

    /// The other method of the same family.
    pub fn counterpart(self) -> Method {
        match self {
            Method::Sfncvem => Method::Ncvem,
            Method::Ncvem => Method::Sfncvem,
            Method::Sfcvem => Method::Cvem,
            Method::Cvem => Method::Sfcvem,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| VemError::Unsupported(format!("unknown method `{s}`")))
    }
}
