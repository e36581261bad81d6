use super::point::{point_in_polygon, point_segment_distance, signed_area, Point2};
use super::polygon_diameter;
use crate::error::{Result, VemError};

/// One polygon edge in counterclockwise traversal order.
#[derive(Clone, Copy, Debug)]
pub struct EdgeGeometry {
    pub start: Point2,
    pub end: Point2,
    pub length: f64,
    /// Unit outward normal.
    pub normal: Point2,
}

/// Geometric data of a polygonal cell.
#[derive(Clone, Debug)]
pub struct ElementGeometry {
    pub points: Vec<Point2>,
    pub diameter: f64,
    pub area: f64,
    pub centroid: Point2,
    /// Approximate center of the largest inscribed disk (within 1e-6 h_K).
    pub inball_center: Point2,
    pub inradius: f64,
    /// `h_K / (2 r)` with `r` the inradius.
    pub chunkiness: f64,
    pub edges: Vec<EdgeGeometry>,
}

impl ElementGeometry {
    /// `points` must be a counterclockwise simple polygon.
    pub fn new(points: &[Point2]) -> Result<Self> {
        let area = signed_area(points);
        let diameter = polygon_diameter(points);
        if !(area > 1e-14 * diameter * diameter) {
            return Err(VemError::Unsupported(format!(
                "element geometry needs a counterclockwise cell with positive area (got {area:.3e})"
            )));
        }
        let n = points.len();
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..n {
            let (p, q) = (points[i], points[(i + 1) % n]);
            let w = p.cross(q);
            cx += (p.x + q.x) * w;
            cy += (p.y + q.y) * w;
        }
        let centroid = Point2::new(cx / (6.0 * area), cy / (6.0 * area));
        let edges = (0..n)
            .map(|i| {
                let (start, end) = (points[i], points[(i + 1) % n]);
                let t = end - start;
                let length = t.norm();
                EdgeGeometry {
                    start,
                    end,
                    length,
                    normal: (t * (1.0 / length)).rot_cw(),
                }
            })
            .collect();
        let (inball_center, inradius) = inball(points, centroid, diameter);
        Ok(Self {
            points: points.to_vec(),
            diameter,
            area,
            centroid,
            inball_center,
            inradius,
            chunkiness: diameter / (2.0 * inradius),
            edges,
        })
    }
}

/// Signed distance to the boundary: positive inside.
pub(crate) fn boundary_distance(p: Point2, poly: &[Point2]) -> f64 {
    let n = poly.len();
    let d = (0..n)
        .map(|i| point_segment_distance(p, poly[i], poly[(i + 1) % n]))
        .fold(f64::INFINITY, f64::min);
    if point_in_polygon(p, poly) {
        d
    } else {
        -d
    }
}

/// Grid search followed by compass search on the distance-to-boundary.
///
/// A tiny pull towards the centroid breaks ties, so that cells with a
/// non-unique inball center (rectangles) get the symmetric choice.
fn inball(poly: &[Point2], centroid: Point2, diameter: f64) -> (Point2, f64) {
    let (mut xmin, mut xmax, mut ymin, mut ymax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
    for p in poly {
        xmin = xmin.min(p.x);
        xmax = xmax.max(p.x);
        ymin = ymin.min(p.y);
        ymax = ymax.max(p.y);
    }
    let pull = 1e-8;
    let objective = |p: Point2| boundary_distance(p, poly) - pull * p.dist(centroid);
    let grid = 48;
    let mut best = centroid;
    let mut best_val = objective(centroid);
    for i in 0..=grid {
        for j in 0..=grid {
            let p = Point2::new(
                xmin + (xmax - xmin) * i as f64 / grid as f64,
                ymin + (ymax - ymin) * j as f64 / grid as f64,
            );
            let v = objective(p);
            if v > best_val {
                best = p;
                best_val = v;
            }
        }
    }
    let mut sx = (xmax - xmin) / grid as f64;
    let mut sy = (ymax - ymin) / grid as f64;
    let dirs = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
        (-1.0, -1.0),
    ];
    let min_step = 1e-12 * diameter;
    let mut iterations = 0;
    while (sx > min_step || sy > min_step) && iterations < 20_000 {
        iterations += 1;
        let mut moved = false;
        for (dx, dy) in dirs {
            let p = Point2::new(best.x + dx * sx, best.y + dy * sy);
            let v = objective(p);
            if v > best_val {
                best = p;
                best_val = v;
                moved = true;
                break;
            }
        }
        if !moved {
            sx *= 0.5;
            sy *= 0.5;
        }
    }
    (best, boundary_distance(best, poly))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hexagon(a: f64) -> Vec<Point2> {
        vec![
            Point2::new(1.0, 0.0),
            Point2::new(0.5, a),
            Point2::new(-0.5, a),
            Point2::new(-1.0, 0.0),
            Point2::new(-0.5, -a),
            Point2::new(0.5, -a),
        ]
    }

    #[test]
    fn unit_square() {
        let g = ElementGeometry::new(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
        .unwrap();
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
        assert!((g.area - 1.0).abs() < 1e-15);
        assert!(g.inball_center.dist(Point2::new(0.5, 0.5)) < 1e-6 * g.diameter);
        assert!((g.inradius - 0.5).abs() < 1e-6);
    }

    #[test]
    fn regular_hexagon_area() {
        let g = ElementGeometry::new(&hexagon(3f64.sqrt() / 2.0)).unwrap();
        // shoelace on the exact vertices
        let exact = 3.0 * 3f64.sqrt() / 2.0;
        assert!((g.area - exact).abs() < 1e-14);
        assert!(g.inball_center.norm() < 1e-6);
    }

    #[test]
    fn thin_rectangle_prefers_centroid() {
        let g = ElementGeometry::new(&[
            Point2::new(0.0, 0.0),
            Point2::new(0.2, 0.0),
            Point2::new(0.2, 0.004),
            Point2::new(0.0, 0.004),
        ])
        .unwrap();
        assert!(g.inball_center.dist(Point2::new(0.1, 0.002)) < 1e-6 * g.diameter);
    }

    #[test]
    fn chunkiness_grows_for_collapsing_hexagons() {
        let mut last = 0.0;
        for i in 0..=12 {
            let a = 3f64.sqrt() / 2f64.powi(i + 1);
            let g = ElementGeometry::new(&hexagon(a)).unwrap();
            assert!(g.chunkiness > last, "i = {i}");
            last = g.chunkiness;
        }
    }

    #[test]
    fn zero_area_is_rejected() {
        let r = ElementGeometry::new(&[
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(2.0, 0.0),
        ]);
        assert!(r.is_err());
    }
}
