use std::collections::HashMap;

use super::geometry::ElementGeometry;
use super::point::{orient2d, point_segment_distance, Point2};
use crate::error::{Result, VemError};

/// Default lower bound on sub-triangle angles (radians). Deliberately loose:
/// collapsing-cell experiments produce legitimately thin fans.
pub const DEFAULT_MIN_ANGLE: f64 = 1e-6;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubtriStrategy {
    CentroidFan,
    #[default]
    InballFan,
    EarClip,
}

#[derive(Clone, Debug)]
pub struct SubEdge {
    /// Local vertex indices, `lo < hi`.
    pub vertices: [usize; 2],
    /// `(triangle, local edge)` pairs; local edge `j` is opposite vertex `j`.
    pub triangles: Vec<(usize, usize)>,
    /// Polygon edge this sub-edge lies on, for boundary sub-edges.
    pub parent: Option<usize>,
    /// Clockwise rotation of the `lo → hi` tangent.
    pub normal: Point2,
    pub length: f64,
}

impl SubEdge {
    pub fn is_boundary(&self) -> bool {
        self.parent.is_some()
    }
}

/// Simplicial partition of one polygonal cell.
///
/// The first `num_polygon_vertices` local vertices are the polygon vertices in
/// loop order; further vertices are interior or edge points.
#[derive(Clone, Debug)]
pub struct SubTriangulation {
    pub vertices: Vec<Point2>,
    pub num_polygon_vertices: usize,
    /// Counterclockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub edges: Vec<SubEdge>,
    pub triangle_edges: Vec<[usize; 3]>,
    /// `+1` where the edge's fixed normal points out of the triangle.
    pub triangle_edge_signs: Vec<[f64; 3]>,
}

impl SubTriangulation {
    /// Assemble edge tables from counterclockwise triangles.
    pub fn from_triangles(
        polygon: &[Point2],
        vertices: Vec<Point2>,
        triangles: Vec<[usize; 3]>,
    ) -> Result<Self> {
        let mut ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<SubEdge> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        let mut triangle_edge_signs = Vec::with_capacity(triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if orient2d(vertices[tri[0]], vertices[tri[1]], vertices[tri[2]]) <= 0.0 {
                return Err(VemError::Unsupported(format!("sub-triangle {t} is not counterclockwise")));
            }
            let mut te = [0; 3];
            let mut ts = [0.0; 3];
            for j in 0..3 {
                let (a, b) = (tri[(j + 1) % 3], tri[(j + 2) % 3]);
                let key = (a.min(b), a.max(b));
                let id = *ids.entry(key).or_insert_with(|| {
                    let d = vertices[key.1] - vertices[key.0];
                    let length = d.norm();
                    edges.push(SubEdge {
                        vertices: [key.0, key.1],
                        triangles: Vec::new(),
                        parent: None,
                        normal: (d * (1.0 / length)).rot_cw(),
                        length,
                    });
                    edges.len() - 1
                });
                edges[id].triangles.push((t, j));
                te[j] = id;
                // counterclockwise traversal a → b has outward normal rot_cw(b - a)
                ts[j] = if a < b { 1.0 } else { -1.0 };
            }
            triangle_edges.push(te);
            triangle_edge_signs.push(ts);
        }
        let n = polygon.len();
        let scale = super::polygon_diameter(polygon);
        for e in edges.iter_mut() {
            match e.triangles.len() {
                1 => {
                    let (p, q) = (vertices[e.vertices[0]], vertices[e.vertices[1]]);
                    let parent = (0..n).find(|&i| {
                        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
                        point_segment_distance(p, a, b) <= 1e-12 * scale
                            && point_segment_distance(q, a, b) <= 1e-12 * scale
                    });
                    if parent.is_none() {
                        return Err(VemError::Unsupported(
                            "boundary sub-edge does not lie on a polygon edge".into(),
                        ));
                    }
                    e.parent = parent;
                }
                2 => {}
                m => {
                    return Err(VemError::Unsupported(format!("sub-edge shared by {m} triangles")));
                }
            }
        }
        Ok(Self {
            vertices,
            num_polygon_vertices: n,
            triangles,
            edges,
            triangle_edges,
            triangle_edge_signs,
        })
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn num_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| !e.is_boundary()).count()
    }

    /// Vertices not on the polygon boundary.
    pub fn interior_vertices(&self) -> Vec<usize> {
        let mut on_boundary = vec![false; self.vertices.len()];
        for e in self.edges.iter().filter(|e| e.is_boundary()) {
            on_boundary[e.vertices[0]] = true;
            on_boundary[e.vertices[1]] = true;
        }
        (0..self.vertices.len()).filter(|&v| !on_boundary[v]).collect()
    }

    pub fn triangle_points(&self, t: usize) -> [Point2; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        0.5 * orient2d(a, b, c)
    }

    /// Smallest interior angle over all triangles (radians).
    pub fn min_angle(&self) -> f64 {
        (0..self.num_triangles())
            .map(|t| triangle_min_angle(self.triangle_points(t)))
            .fold(f64::INFINITY, f64::min)
    }

    /// Boundary sub-edges lying on polygon edge `f`.
    pub fn sub_edges_of(&self, f: usize) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].parent == Some(f)).collect()
    }

    /// Global id of lattice node `(i, j)` of triangle `t` in an order-`m`
    /// lattice: vertices first, then `m - 1` points per edge ordered from the
    /// lower to the higher vertex index, then triangle-interior points.
    pub fn lattice_node(&self, m: usize, t: usize, i: usize, j: usize) -> usize {
        let nv = self.vertices.len();
        let ne = self.edges.len();
        let tri = self.triangles[t];
        let edge_point = |local_edge: usize, from: usize, steps: usize| {
            let e = self.triangle_edges[t][local_edge];
            let ed = &self.edges[e];
            let pos = if ed.vertices[0] == from { steps - 1 } else { m - steps - 1 };
            nv + e * (m - 1) + pos
        };
        match (i, j) {
            (0, 0) => tri[0],
            (i, 0) if i == m => tri[1],
            (0, j) if j == m => tri[2],
            (i, 0) => edge_point(2, tri[0], i),
            (0, j) => edge_point(1, tri[0], j),
            (i, j) if i + j == m => edge_point(0, tri[1], j),
            (i, j) => {
                let per = (m - 1) * (m - 2) / 2;
                // interior points enumerated row by row in j
                let mut idx = 0;
                for jj in 1..j {
                    idx += m - 1 - jj;
                }
                idx += i - 1;
                nv + ne * (m - 1) + t * per + idx
            }
        }
    }

    pub fn lattice_size(&self, m: usize) -> usize {
        self.vertices.len()
            + self.edges.len() * (m.max(1) - 1)
            + self.num_triangles() * if m >= 3 { (m - 1) * (m - 2) / 2 } else { 0 }
    }

    /// Uniform refinement: every triangle split into `m²` congruent pieces.
    pub fn refined(&self, polygon: &[Point2], m: usize) -> Result<SubTriangulation> {
        if m <= 1 {
            return Ok(self.clone());
        }
        let mut pts = vec![Point2::default(); self.lattice_size(m)];
        for t in 0..self.num_triangles() {
            let [a, b, c] = self.triangle_points(t);
            for j in 0..=m {
                for i in 0..=(m - j) {
                    let p = a + (b - a) * (i as f64 / m as f64) + (c - a) * (j as f64 / m as f64);
                    pts[self.lattice_node(m, t, i, j)] = p;
                }
            }
        }
        let mut tris = Vec::with_capacity(self.num_triangles() * m * m);
        for t in 0..self.num_triangles() {
            let id = |i, j| self.lattice_node(m, t, i, j);
            for j in 0..m {
                for i in 0..(m - j) {
                    tris.push([id(i, j), id(i + 1, j), id(i, j + 1)]);
                    if i + j + 2 <= m {
                        tris.push([id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
                    }
                }
            }
        }
        SubTriangulation::from_triangles(polygon, pts, tris)
    }
}

fn triangle_min_angle(p: [Point2; 3]) -> f64 {
    (0..3)
        .map(|i| {
            let (a, b, c) = (p[i], p[(i + 1) % 3], p[(i + 2) % 3]);
            let (u, v) = (b - a, c - a);
            u.cross(v).abs().atan2(u.dot(v))
        })
        .fold(f64::INFINITY, f64::min)
}

fn fan(polygon: &[Point2], center: Point2, min_angle: f64) -> Option<(Vec<Point2>, Vec<[usize; 3]>)> {
    let n = polygon.len();
    let scale = super::polygon_diameter(polygon);
    let mut tris = Vec::with_capacity(n);
    for i in 0..n {
        let (a, b) = (polygon[i], polygon[(i + 1) % n]);
        if orient2d(center, a, b) <= 1e-13 * scale * scale || triangle_min_angle([center, a, b]) < min_angle {
            return None;
        }
        tris.push([n, i, (i + 1) % n]);
    }
    let mut verts = polygon.to_vec();
    verts.push(center);
    Some((verts, tris))
}

fn ear_clip(polygon: &[Point2], min_angle: f64) -> Option<Vec<[usize; 3]>> {
    let scale = super::polygon_diameter(polygon);
    let eps = 1e-13 * scale * scale;
    let mut remaining: Vec<usize> = (0..polygon.len()).collect();
    let mut tris = Vec::new();
    while remaining.len() > 3 {
        let r = remaining.len();
        let mut best: Option<(usize, f64)> = None;
        for k in 0..r {
            let (ip, ic, inx) = (remaining[(k + r - 1) % r], remaining[k], remaining[(k + 1) % r]);
            let (a, b, c) = (polygon[ip], polygon[ic], polygon[inx]);
            if orient2d(a, b, c) <= eps {
                continue;
            }
            let blocked = remaining.iter().any(|&q| {
                if q == ip || q == ic || q == inx {
                    return false;
                }
                let p = polygon[q];
                orient2d(a, b, p) >= -eps && orient2d(b, c, p) >= -eps && orient2d(c, a, p) >= -eps
            });
            if blocked {
                continue;
            }
            let quality = triangle_min_angle([a, b, c]);
            if best.map_or(true, |(_, q)| quality > q) {
                best = Some((k, quality));
            }
        }
        let (k, _) = best?;
        let r = remaining.len();
        tris.push([remaining[(k + r - 1) % r], remaining[k], remaining[(k + 1) % r]]);
        remaining.remove(k);
    }
    let [a, b, c] = [remaining[0], remaining[1], remaining[2]];
    if orient2d(polygon[a], polygon[b], polygon[c]) <= eps {
        return None;
    }
    tris.push([a, b, c]);
    if tris
        .iter()
        .any(|t| triangle_min_angle([polygon[t[0]], polygon[t[1]], polygon[t[2]]]) < min_angle)
    {
        return None;
    }
    Some(tris)
}

/// Partition a counterclockwise polygon into triangles.
///
/// Fan strategies fall back to ear clipping when the fan point does not see
/// every edge with positive orientation.
pub fn subtriangulate(polygon: &[Point2], strategy: SubtriStrategy) -> Result<SubTriangulation> {
    subtriangulate_with(polygon, strategy, DEFAULT_MIN_ANGLE)
}

pub fn subtriangulate_with(
    polygon: &[Point2],
    strategy: SubtriStrategy,
    min_angle: f64,
) -> Result<SubTriangulation> {
    let center = match strategy {
        SubtriStrategy::EarClip => None,
        SubtriStrategy::CentroidFan => Some(ElementGeometry::new(polygon)?.centroid),
        SubtriStrategy::InballFan => Some(ElementGeometry::new(polygon)?.inball_center),
    };
    if let Some(c) = center {
        if let Some((verts, tris)) = fan(polygon, c, min_angle) {
            return SubTriangulation::from_triangles(polygon, verts, tris);
        }
    }
    match ear_clip(polygon, min_angle) {
        Some(tris) => SubTriangulation::from_triangles(polygon, polygon.to_vec(), tris),
        None => Err(VemError::Unsupported(
            "polygon admits neither a fan nor an ear-clipping triangulation".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::super::point::signed_area;
    use super::*;

    pub(crate) fn regular_hexagon() -> Vec<Point2> {
        let a = 3f64.sqrt() / 2.0;
        vec![
            Point2::new(1.0, 0.0),
            Point2::new(0.5, a),
            Point2::new(-0.5, a),
            Point2::new(-1.0, 0.0),
            Point2::new(-0.5, -a),
            Point2::new(0.5, -a),
        ]
    }

    fn square() -> Vec<Point2> {
        vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ]
    }

    #[test]
    fn hexagon_fan_combinatorics() {
        let st = subtriangulate(&regular_hexagon(), SubtriStrategy::CentroidFan).unwrap();
        assert_eq!(st.num_triangles(), 6);
        assert_eq!(st.num_interior_edges(), 6);
        assert_eq!(st.interior_vertices().len(), 1);
    }

    #[test]
    fn square_ear_clip() {
        let st = subtriangulate(&square(), SubtriStrategy::EarClip).unwrap();
        assert_eq!(st.num_triangles(), 2);
        assert_eq!(st.edges.len(), 5);
    }

    #[test]
    fn non_star_cell_falls_back_to_ear_clip() {
        // thin L: the centroid lies outside the polygon
        let l = vec![
            Point2::new(0.0, 0.0),
            Point2::new(3.0, 0.0),
            Point2::new(3.0, 0.2),
            Point2::new(0.2, 0.2),
            Point2::new(0.2, 3.0),
            Point2::new(0.0, 3.0),
        ];
        let st = subtriangulate(&l, SubtriStrategy::CentroidFan).unwrap();
        assert_eq!(st.num_triangles(), 4);
        assert_eq!(st.vertices.len(), 6);
        for t in 0..st.num_triangles() {
            assert!(st.triangle_area(t) > 0.0);
        }
        let total: f64 = (0..st.num_triangles()).map(|t| st.triangle_area(t)).sum();
        assert!((total - signed_area(&l)).abs() < 1e-12 * signed_area(&l));
    }

    #[test]
    fn concave_pentagon_with_centroid_outside_kernel() {
        // arrow-head: the centroid does not see the notch edges
        let p = vec![
            Point2::new(0.0, 0.0),
            Point2::new(4.0, 0.0),
            Point2::new(4.0, 4.0),
            Point2::new(0.3, 0.3),
            Point2::new(0.0, 4.0),
        ];
        let c = ElementGeometry::new(&p).unwrap().centroid;
        assert!(fan(&p, c, DEFAULT_MIN_ANGLE).is_none());
        let st = subtriangulate(&p, SubtriStrategy::CentroidFan).unwrap();
        assert_eq!(st.num_triangles(), 3);
    }

    #[test]
    fn refinement_tiles_parent_edges() {
        let hex = regular_hexagon();
        let st = subtriangulate(&hex, SubtriStrategy::InballFan).unwrap();
        let fine = st.refined(&hex, 3).unwrap();
        assert_eq!(fine.num_triangles(), 54);
        for f in 0..6 {
            let len: f64 = fine.sub_edges_of(f).iter().map(|&e| fine.edges[e].length).sum();
            assert!((len - 1.0).abs() < 1e-12);
            assert_eq!(fine.sub_edges_of(f).len(), 3);
        }
        let total: f64 = (0..fine.num_triangles()).map(|t| fine.triangle_area(t)).sum();
        assert!((total - signed_area(&hex)).abs() < 1e-12 * signed_area(&hex));
    }

    #[test]
    fn edge_signs_are_opposite_across_interior_edges() {
        let st = subtriangulate(&regular_hexagon(), SubtriStrategy::InballFan).unwrap();
        for e in st.edges.iter().filter(|e| !e.is_boundary()) {
            let s: f64 = e.triangles.iter().map(|&(t, j)| st.triangle_edge_signs[t][j]).sum();
            assert_eq!(s, 0.0);
        }
    }
}
