use serde::{Deserialize, Serialize};

use super::Family;
use crate::poly::dim_signed;

/// Local DoF ordering of one element.
///
/// Conforming: vertex values, then `k − 1` moments per edge, then interior
/// moments. Nonconforming: `k` moments per edge, then interior moments.
/// Edge moments use the orthonormal Legendre basis scaled by `1/|F|`,
/// parametrized from the lower to the higher global vertex index; interior
/// moments use the first `dim ℙ_{k−2}` cell-basis members scaled by `1/|K|`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ElementDofLayout {
    pub family: Family,
    pub k: usize,
    pub num_vertices: usize,
}

impl ElementDofLayout {
    pub fn new(family: Family, k: usize, num_vertices: usize) -> Self {
        Self { family, k, num_vertices }
    }

    pub fn num_edges(&self) -> usize {
        self.num_vertices
    }

    pub fn per_vertex(&self) -> usize {
        match self.family {
            Family::Nc => 0,
            Family::C => 1,
        }
    }

    pub fn per_edge(&self) -> usize {
        match self.family {
            Family::Nc => self.k,
            Family::C => self.k - 1,
        }
    }

    pub fn num_interior(&self) -> usize {
        dim_signed(self.k as isize - 2)
    }

    pub fn count(&self) -> usize {
        self.num_vertices * self.per_vertex() + self.num_edges() * self.per_edge() + self.num_interior()
    }

    pub fn vertex(&self, v: usize) -> usize {
        debug_assert_eq!(self.family, Family::C);
        v
    }

    pub fn edge(&self, f: usize, j: usize) -> usize {
        self.num_vertices * self.per_vertex() + f * self.per_edge() + j
    }

    pub fn interior(&self, g: usize) -> usize {
        self.num_vertices * self.per_vertex() + self.num_edges() * self.per_edge() + g
    }

    /// Degree of the Legendre moments of the trace that the DoFs determine.
    pub fn trace_degree(&self) -> usize {
        match self.family {
            Family::Nc => self.k - 1,
            Family::C => self.k,
        }
    }
}
