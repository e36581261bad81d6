//! Polygonal meshes, mesh generators and per-cell simplicial partitions.

mod generate;
mod geometry;
mod io;
mod point;
mod subtri;

use std::collections::HashMap;

pub use generate::{
    generate_mesh, hexagon_hi, mesh_zoo, quasi_regular_hexagon, square_with_hanging_nodes, MeshFamily,
    MeshParams,
};
pub use geometry::ElementGeometry;
pub use io::{read_mesh_json, write_mesh_json, MeshFile};
pub use point::{
    orient2d, point_in_polygon, point_segment_distance, segments_intersect, signed_area, Point2,
};
pub use subtri::{
    subtriangulate, subtriangulate_with, SubEdge, SubTriangulation, SubtriStrategy, DEFAULT_MIN_ANGLE,
};

use crate::error::{Result, VemError};

/// A mesh edge with its fixed unit normal.
///
/// Vertices are stored as `[lo, hi]` by global index; the edge parameter runs
/// from `lo` to `hi` and the fixed normal is the clockwise rotation of that
/// tangent.
#[derive(Clone, Debug)]
pub struct MeshEdge {
    pub vertices: [usize; 2],
    pub cells: Vec<usize>,
    pub normal: Point2,
    pub length: f64,
}

impl MeshEdge {
    pub fn is_boundary(&self) -> bool {
        self.cells.len() == 1
    }
}

#[derive(Clone, Debug)]
pub struct PolygonalMesh {
    vertices: Vec<Point2>,
    cells: Vec<Vec<usize>>,
    edges: Vec<MeshEdge>,
    cell_edges: Vec<Vec<usize>>,
}

impl PolygonalMesh {
    /// Validate and canonicalize: cells become counterclockwise, edges are
    /// deduplicated and boundary edges flagged.
    pub fn build(vertices: Vec<Point2>, cells: Vec<Vec<usize>>) -> Result<Self> {
        if let Some(i) = vertices.iter().position(|p| !p.is_finite()) {
            return Err(VemError::InvalidMesh(format!("vertex {i} has non-finite coordinates")));
        }
        let mut cells = cells;
        for (c, cell) in cells.iter_mut().enumerate() {
            validate_cell(c, cell, &vertices)?;
        }

        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<MeshEdge> = Vec::new();
        let mut directions: Vec<Vec<bool>> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let n = cell.len();
            let mut ce = Vec::with_capacity(n);
            for i in 0..n {
                let (a, b) = (cell[i], cell[(i + 1) % n]);
                let key = (a.min(b), a.max(b));
                let id = *edge_ids.entry(key).or_insert_with(|| {
                    let (p, q) = (vertices[key.0], vertices[key.1]);
                    let t = q - p;
                    let len = t.norm();
                    edges.push(MeshEdge {
                        vertices: [key.0, key.1],
                        cells: Vec::new(),
                        normal: (t * (1.0 / len)).rot_cw(),
                        length: len,
                    });
                    directions.push(Vec::new());
                    edges.len() - 1
                });
                edges[id].cells.push(c);
                directions[id].push(a < b);
                ce.push(id);
            }
            cell_edges.push(ce);
        }
        for (e, edge) in edges.iter().enumerate() {
            match edge.cells.len() {
                1 => {}
                2 => {
                    if directions[e][0] == directions[e][1] {
                        return Err(VemError::InvalidMesh(format!(
                            "edge {:?} is traversed in the same direction by cells {} and {}",
                            edge.vertices, edge.cells[0], edge.cells[1]
                        )));
                    }
                }
                m => {
                    return Err(VemError::InvalidMesh(format!(
                        "edge {:?} is shared by {m} cells",
                        edge.vertices
                    )))
                }
            }
        }
        Ok(Self {
            vertices,
            cells,
            edges,
            cell_edges,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn edges(&self) -> &[MeshEdge] {
        &self.edges
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_boundary_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_boundary()).count()
    }

    /// Global edge ids of cell `c`; local edge `i` joins loop vertices `i` and `i + 1`.
    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c]
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point2> {
        self.cells[c].iter().map(|&v| self.vertices[v]).collect()
    }

    /// Whether local edge `i` of cell `c` runs from the lower to the higher
    /// global vertex index.
    pub fn edge_aligned(&self, c: usize, i: usize) -> bool {
        let cell = &self.cells[c];
        cell[i] < cell[(i + 1) % cell.len()]
    }

    pub fn boundary_vertices(&self) -> Vec<bool> {
        let mut b = vec![false; self.vertices.len()];
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            b[e.vertices[0]] = true;
            b[e.vertices[1]] = true;
        }
        b
    }

    /// Largest cell diameter.
    pub fn h(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| polygon_diameter(&self.cell_points(c)))
            .fold(0.0, f64::max)
    }

    /// Copy of the mesh with every coordinate mapped through `f`.
    pub fn map_vertices(&self, f: impl Fn(Point2) -> Point2) -> Result<Self> {
        Self::build(self.vertices.iter().map(|&p| f(p)).collect(), self.cells.clone())
    }

    /// The one-cell mesh made of cell `c` (vertex numbering follows the loop).
    pub fn single_cell(points: &[Point2]) -> Result<Self> {
        Self::build(points.to_vec(), vec![(0..points.len()).collect()])
    }
}

pub fn polygon_diameter(points: &[Point2]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            h = h.max(points[i].dist(points[j]));
        }
    }
    h
}

fn validate_cell(c: usize, cell: &mut Vec<usize>, vertices: &[Point2]) -> Result<()> {
    let bad = |reason: String| VemError::InvalidCell { cell: c, reason };
    let n = cell.len();
    if n < 3 {
        return Err(bad(format!("only {n} vertices")));
    }
    if let Some(&v) = cell.iter().find(|&&v| v >= vertices.len()) {
        return Err(bad(format!("vertex index {v} out of range")));
    }
    let mut seen = cell.clone();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(bad("repeated vertex index".into()));
    }
    let pts: Vec<Point2> = cell.iter().map(|&v| vertices[v]).collect();
    let area = signed_area(&pts);
    let diam = polygon_diameter(&pts);
    if !(area.abs() > 1e-14 * diam * diam) {
        return Err(bad("zero area".into()));
    }
    // Spikes: consecutive edges folding back onto each other.
    for i in 0..n {
        let (a, b, d) = (pts[(i + n - 1) % n], pts[i], pts[(i + 1) % n]);
        if orient2d(a, b, d).abs() <= 1e-14 * diam * diam && (a - b).dot(d - b) > 0.0 {
            return Err(bad(format!("degenerate spike at local vertex {i}")));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if j == i + 1 || (i == 0 && j == n - 1) {
                continue;
            }
            if segments_intersect(pts[i], pts[(i + 1) % n], pts[j], pts[(j + 1) % n]) {
                return Err(bad(format!("self-intersection between local edges {i} and {j}")));
            }
        }
    }
    if area < 0.0 {
        cell.reverse();
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn unit_square_single_cell() {
        let m = PolygonalMesh::build(square(), vec![vec![0, 1, 2, 3]]).unwrap();
        assert_eq!(m.num_vertices(), 4);
        assert_eq!(m.num_boundary_edges(), 4);
        assert_eq!(m.num_edges() - m.num_boundary_edges(), 0);
    }

    #[test]
    fn two_triangles() {
        let m = PolygonalMesh::build(square(), vec![vec![0, 1, 2], vec![0, 2, 3]]).unwrap();
        assert_eq!(m.num_edges(), 5);
        assert_eq!(m.num_edges() - m.num_boundary_edges(), 1);
    }

    #[test]
    fn repeated_vertex_is_rejected() {
        let r = PolygonalMesh::build(square(), vec![vec![0, 1, 2, 1]]);
        assert!(matches!(r, Err(VemError::InvalidCell { cell: 0, .. })));
    }

    #[test]
    fn clockwise_cells_are_reoriented() {
        let m = PolygonalMesh::build(square(), vec![vec![3, 2, 1, 0]]).unwrap();
        assert!(signed_area(&m.cell_points(0)) > 0.0);
    }

    #[test]
    fn self_intersecting_cell_is_rejected() {
        let r = PolygonalMesh::build(square(), vec![vec![0, 2, 1, 3]]);
        assert!(matches!(r, Err(VemError::InvalidCell { cell: 0, .. })));
    }

    #[test]
    fn inconsistent_shared_edge_is_rejected() {
        let mut v = square();
        v.push(Point2::new(0.5, 0.5));
        // overlapping triangles sharing edge 0-1 in the same direction
        let r = PolygonalMesh::build(v, vec![vec![0, 1, 2], vec![0, 1, 4]]);
        assert!(matches!(r, Err(VemError::InvalidMesh(_))));
    }

    #[test]
    fn interior_edge_normals_are_opposite_for_neighbors() {
        let m = PolygonalMesh::build(square(), vec![vec![0, 1, 2], vec![0, 2, 3]]).unwrap();
        for (e, edge) in m.edges().iter().enumerate().filter(|(_, e)| !e.is_boundary()) {
            let outward: Vec<Point2> = edge
                .cells
                .iter()
                .map(|&c| {
                    let i = m.cell_edges(c).iter().position(|&x| x == e).unwrap();
                    if m.edge_aligned(c, i) {
                        edge.normal
                    } else {
                        -edge.normal
                    }
                })
                .collect();
            // local traversal is counterclockwise, so the outward normal is the
            // clockwise rotation of the local tangent
            assert!((outward[0] + outward[1]).norm() < 1e-15);
        }
    }
}
