use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::point::Point2;
use super::PolygonalMesh;
use crate::error::{Result, VemError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MeshFamily {
    /// Centroid dual of a diagonally split `n × n` grid: convex hexagons in the
    /// interior, convex pentagons and quadrilaterals along the boundary.
    #[serde(rename = "convex-poly")]
    ConvexPoly,
    /// `n × n` grid whose interior horizontal edges are bent upwards at their
    /// midpoints, giving chevron-shaped non-convex cells.
    #[serde(rename = "nonconvex-poly")]
    NonconvexPoly,
    /// Single hexagon `H_i` with half-height `√3 / 2^(i+1)`.
    #[serde(rename = "hexagon-Hi", alias = "hexagon-hi")]
    HexagonHi,
    /// Unit square carrying two hanging nodes on its boundary.
    #[serde(rename = "square-hanging-nodes")]
    SquareHangingNodes,
    /// Tensor grid of `hx × hy` rectangles.
    #[serde(rename = "anisotropic-quads")]
    AnisotropicQuads,
    /// Regular hexagon with a fixed small perturbation of its vertices.
    #[serde(rename = "quasi-regular-hexagon")]
    QuasiRegularHexagon,
    #[serde(rename = "uniform-quads")]
    UniformQuads,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 7] = [
        MeshFamily::ConvexPoly,
        MeshFamily::NonconvexPoly,
        MeshFamily::HexagonHi,
        MeshFamily::SquareHangingNodes,
        MeshFamily::AnisotropicQuads,
        MeshFamily::QuasiRegularHexagon,
        MeshFamily::UniformQuads,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::ConvexPoly => "convex-poly",
            MeshFamily::NonconvexPoly => "nonconvex-poly",
            MeshFamily::HexagonHi => "hexagon-Hi",
            MeshFamily::SquareHangingNodes => "square-hanging-nodes",
            MeshFamily::AnisotropicQuads => "anisotropic-quads",
            MeshFamily::QuasiRegularHexagon => "quasi-regular-hexagon",
            MeshFamily::UniformQuads => "uniform-quads",
        }
    }

    /// Families made of one reference polygon rather than a mesh of (0,1)².
    pub fn is_single_element(self) -> bool {
        matches!(
            self,
            MeshFamily::HexagonHi | MeshFamily::SquareHangingNodes | MeshFamily::QuasiRegularHexagon
        )
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshFamily {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self> {
        MeshFamily::ALL
            .into_iter()
            .find(|f| f.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| VemError::Unsupported(format!("unknown mesh family `{s}`")))
    }
}

/// Generator parameters; each family reads only the fields it needs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeshParams {
    /// Subdivisions per side (convex-poly, nonconvex-poly, uniform-quads).
    pub n: usize,
    /// Rectangle sizes (anisotropic-quads).
    pub hx: f64,
    pub hy: f64,
    /// Hexagon index `i` (hexagon-Hi).
    pub index: usize,
}

impl Default for MeshParams {
    fn default() -> Self {
        Self {
            n: 4,
            hx: 0.25,
            hy: 0.25,
            index: 0,
        }
    }
}

impl MeshParams {
    pub fn divisions(n: usize) -> Self {
        Self {
            n,
            hx: 1.0 / n as f64,
            hy: 1.0 / n as f64,
            ..Self::default()
        }
    }

    pub fn spacing(hx: f64, hy: f64) -> Self {
        Self {
            hx,
            hy,
            ..Self::default()
        }
    }

    pub fn index(i: usize) -> Self {
        Self {
            index: i,
            ..Self::default()
        }
    }
}

pub fn generate_mesh(family: MeshFamily, params: MeshParams) -> Result<PolygonalMesh> {
    let need_n = || {
        if params.n == 0 || params.n > 4096 {
            Err(VemError::Unsupported(format!("{family} needs 1 <= n <= 4096, got {}", params.n)))
        } else {
            Ok(params.n)
        }
    };
    match family {
        MeshFamily::UniformQuads => {
            let n = need_n()?;
            rectangles(n, n)
        }
        MeshFamily::AnisotropicQuads => {
            let nx = divisions_for(params.hx)?;
            let ny = divisions_for(params.hy)?;
            rectangles(nx, ny)
        }
        MeshFamily::ConvexPoly => centroid_dual(need_n()?),
        MeshFamily::NonconvexPoly => chevrons(need_n()?),
        MeshFamily::HexagonHi => {
            if params.index > 60 {
                return Err(VemError::Unsupported(format!("hexagon index {} too large", params.index)));
            }
            PolygonalMesh::single_cell(&hexagon_hi(params.index))
        }
        MeshFamily::SquareHangingNodes => PolygonalMesh::single_cell(&square_with_hanging_nodes()),
        MeshFamily::QuasiRegularHexagon => PolygonalMesh::single_cell(&quasi_regular_hexagon()),
    }
}

fn divisions_for(h: f64) -> Result<usize> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(VemError::Unsupported(format!("mesh size {h} outside (0, 1]")));
    }
    let n = (1.0 / h).round();
    if (n * h - 1.0).abs() > 1e-9 || n > 1e5 {
        return Err(VemError::Unsupported(format!("1/{h} is not an integer number of cells")));
    }
    Ok(n as usize)
}

/// Vertices `A..F` of `H_i`, with `a_i = √3 / 2^(i+1)`.
pub fn hexagon_hi(i: usize) -> Vec<Point2> {
    let a = 3f64.sqrt() / 2f64.powi(i as i32 + 1);
    vec![
        Point2::new(1.0, 0.0),
        Point2::new(0.5, a),
        Point2::new(-0.5, a),
        Point2::new(-1.0, 0.0),
        Point2::new(-0.5, -a),
        Point2::new(0.5, -a),
    ]
}

pub fn square_with_hanging_nodes() -> Vec<Point2> {
    vec![
        Point2::new(0.0, 0.0),
        Point2::new(0.5, 0.0),
        Point2::new(1.0, 0.0),
        Point2::new(1.0, 0.5),
        Point2::new(1.0, 1.0),
        Point2::new(0.0, 1.0),
    ]
}

pub fn quasi_regular_hexagon() -> Vec<Point2> {
    const SHIFT: [[f64; 2]; 6] = [
        [0.03, -0.02],
        [-0.04, 0.05],
        [0.02, 0.03],
        [0.05, -0.01],
        [-0.03, -0.04],
        [0.01, 0.02],
    ];
    hexagon_hi(0)
        .into_iter()
        .zip(SHIFT)
        .map(|(p, [dx, dy])| Point2::new(p.x + dx, p.y + dy))
        .collect()
}

fn rectangles(nx: usize, ny: usize) -> Result<PolygonalMesh> {
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point2::new(i as f64 / nx as f64, j as f64 / ny as f64));
        }
    }
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    PolygonalMesh::build(vertices, cells)
}

fn centroid_dual(n: usize) -> Result<PolygonalMesh> {
    let h = 1.0 / n as f64;
    let grid = |i: usize, j: usize| Point2::new(i as f64 * h, j as f64 * h);
    // primal triangles of square (i, j), split along its rising diagonal
    let mut tris: Vec<[(usize, usize); 3]> = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            tris.push([(i, j), (i + 1, j), (i + 1, j + 1)]);
            tris.push([(i, j), (i + 1, j + 1), (i, j + 1)]);
        }
    }
    let mut vertices: Vec<Point2> = Vec::new();
    let mut around: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
    for t in &tris {
        let c = (grid(t[0].0, t[0].1) + grid(t[1].0, t[1].1) + grid(t[2].0, t[2].1)) * (1.0 / 3.0);
        vertices.push(c);
        for &v in t {
            around.entry(v).or_default().push(vertices.len() - 1);
        }
    }
    let on_boundary = |i: usize, j: usize| i == 0 || j == 0 || i == n || j == n;
    let mut midpoint_ids: HashMap<[(usize, usize); 2], usize> = HashMap::new();
    let mut cells = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let mut ids = around[&(i, j)].clone();
            if on_boundary(i, j) {
                let neighbours = [
                    (i as isize - 1, j as isize),
                    (i as isize + 1, j as isize),
                    (i as isize, j as isize - 1),
                    (i as isize, j as isize + 1),
                ];
                for (a, b) in neighbours {
                    if a < 0 || b < 0 || a > n as isize || b > n as isize {
                        continue;
                    }
                    let w = (a as usize, b as usize);
                    let along_side = (i == w.0 && (i == 0 || i == n)) || (j == w.1 && (j == 0 || j == n));
                    if !along_side {
                        continue;
                    }
                    let key = if (i, j) < w { [(i, j), w] } else { [w, (i, j)] };
                    let id = *midpoint_ids.entry(key).or_insert_with(|| {
                        vertices.push((grid(i, j) + grid(w.0, w.1)) * 0.5);
                        vertices.len() - 1
                    });
                    ids.push(id);
                }
                if (i == 0 || i == n) && (j == 0 || j == n) {
                    vertices.push(grid(i, j));
                    ids.push(vertices.len() - 1);
                }
            }
            let centre = ids.iter().fold(Point2::default(), |s, &v| s + vertices[v]) * (1.0 / ids.len() as f64);
            ids.sort_by(|&a, &b| {
                let (pa, pb) = (vertices[a] - centre, vertices[b] - centre);
                pa.y.atan2(pa.x).total_cmp(&pb.y.atan2(pb.x))
            });
            cells.push(ids);
        }
    }
    PolygonalMesh::build(vertices, cells)
}

/// Rise of the bent interior horizontal edges, relative to `h`.
const CHEVRON_RISE: f64 = 0.3;

fn chevrons(n: usize) -> Result<PolygonalMesh> {
    let h = 1.0 / n as f64;
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut vertices = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(Point2::new(i as f64 * h, j as f64 * h));
        }
    }
    // bend point of the horizontal edge at row j (1 ≤ j < n), column i
    let base = vertices.len();
    let bend = |i: usize, j: usize| base + (j - 1) * n + i;
    for j in 1..n {
        for i in 0..n {
            vertices.push(Point2::new((i as f64 + 0.5) * h, (j as f64 + CHEVRON_RISE) * h));
        }
    }
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            let mut c = vec![id(i, j)];
            if j >= 1 {
                c.push(bend(i, j));
            }
            c.push(id(i + 1, j));
            c.push(id(i + 1, j + 1));
            if j + 1 < n {
                c.push(bend(i, j + 1));
            }
            c.push(id(i, j + 1));
            cells.push(c);
        }
    }
    PolygonalMesh::build(vertices, cells)
}

/// Representative cells from every generator, used for exhaustive checks.
pub fn mesh_zoo() -> Vec<(String, Vec<Point2>)> {
    let mut zoo = vec![
        (
            "triangle".to_string(),
            vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.2, 0.9)],
        ),
        (
            "unit-square".to_string(),
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
        ),
        ("regular-hexagon".to_string(), hexagon_hi(0)),
        ("quasi-regular-hexagon".to_string(), quasi_regular_hexagon()),
        ("square-hanging-nodes".to_string(), square_with_hanging_nodes()),
        ("hexagon-H3".to_string(), hexagon_hi(3)),
    ];
    let meshes = [
        ("convex-poly", generate_mesh(MeshFamily::ConvexPoly, MeshParams::divisions(3))),
        ("nonconvex-poly", generate_mesh(MeshFamily::NonconvexPoly, MeshParams::divisions(3))),
        ("anisotropic-quads", generate_mesh(MeshFamily::AnisotropicQuads, MeshParams::spacing(0.2, 0.0625))),
    ];
    for (name, mesh) in meshes {
        let mesh = mesh.expect("zoo meshes are valid");
        // one representative per distinct vertex count
        let mut seen = std::collections::BTreeSet::new();
        for c in 0..mesh.num_cells() {
            if seen.insert(mesh.cells()[c].len()) {
                zoo.push((format!("{name}-cell{c}"), mesh.cell_points(c)));
            }
        }
    }
    zoo
}
