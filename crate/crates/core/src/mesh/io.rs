use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::point::Point2;
use super::PolygonalMesh;
use crate::error::Result;

/// On-disk mesh: coordinates and vertex loops only.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MeshFile {
    pub vertices: Vec<[f64; 2]>,
    pub cells: Vec<Vec<usize>>,
}

impl From<&PolygonalMesh> for MeshFile {
    fn from(m: &PolygonalMesh) -> Self {
        Self {
            vertices: m.vertices().iter().map(|p| [p.x, p.y]).collect(),
            cells: m.cells().to_vec(),
        }
    }
}

impl MeshFile {
    pub fn into_mesh(self) -> Result<PolygonalMesh> {
        PolygonalMesh::build(self.vertices.into_iter().map(Point2::from).collect(), self.cells)
    }
}

pub fn read_mesh_json(path: &Path) -> Result<PolygonalMesh> {
    let file: MeshFile = serde_json::from_str(&fs::read_to_string(path)?)?;
    file.into_mesh()
}

pub fn write_mesh_json(mesh: &PolygonalMesh, path: &Path) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(&MeshFile::from(mesh))?)?;
    Ok(())
}
