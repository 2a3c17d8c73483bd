//! Exact planar polygon computations.

mod clip;
mod distortion;
mod families;

use std::fmt::Write as _;
use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{argument, Error, Result};

pub use clip::{
    clip_boundary_to_disk, disk_polygon_area, segment_disk_overlap, shell_polygon_area,
};
pub use distortion::{distortion, clip_ratio, Distortion, DistortionSearch};
pub use families::{
    make_dumbbell, make_spiked_square, regular_polygon, unit_square, SpikedSquare,
    SpikedSquareParams, SpikeSpec,
};

/// Volume of the unit ball in the plane.
pub const OMEGA_2: f64 = std::f64::consts::PI;
/// Length of the unit interval ball `(-1, 1)`.
pub const OMEGA_1: f64 = 2.0;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    #[inline]
    pub fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 2D cross product.
    #[inline]
    pub fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    #[inline]
    pub fn dist(self, o: Point) -> f64 {
        (self - o).norm()
    }

    #[inline]
    pub fn dist2(self, o: Point) -> f64 {
        (self - o).norm2()
    }

    #[inline]
    pub fn midpoint(self, o: Point) -> Point {
        Point::new(0.5 * (self.x + o.x), 0.5 * (self.y + o.y))
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point {
    type Output = Point;
    #[inline]
    fn add(self, o: Point) -> Point {
        Point::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point {
    type Output = Point;
    #[inline]
    fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point {
    type Output = Point;
    #[inline]
    fn mul(self, s: f64) -> Point {
        Point::new(self.x * s, self.y * s)
    }
}

impl Neg for Point {
    type Output = Point;
    fn neg(self) -> Point {
        Point::new(-self.x, -self.y)
    }
}

/// Twice the signed area of the triangle `(a, b, c)`.
#[inline]
pub fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b - a).cross(c - a)
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundingBox {
    pub min: Point,
    pub max: Point,
}

impl BoundingBox {
    pub fn of(points: &[Point]) -> Self {
        let mut min = Point::new(f64::INFINITY, f64::INFINITY);
        let mut max = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in points {
            min.x = min.x.min(p.x);
            min.y = min.y.min(p.y);
            max.x = max.x.max(p.x);
            max.y = max.y.max(p.y);
        }
        BoundingBox { min, max }
    }

    pub fn diagonal(&self) -> f64 {
        self.min.dist(self.max)
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// A simple, counterclockwise polygon with at least three vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point>,
}

/// Perimeter, area and isoperimetric ratio `|∂Ω| / |Ω|^{1/2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolygonMetrics {
    pub perimeter: f64,
    pub area: f64,
    pub iso_ratio: f64,
}

/// Relative tolerance (of the bounding-box diagonal) for coincident vertices.
pub const VERTEX_TOLERANCE: f64 = 1e-12;

impl Polygon {
    /// Validates and wraps a counterclockwise vertex list.
    pub fn new(vertices: Vec<Point>) -> Result<Self> {
        validate_vertices(&vertices)?;
        Ok(Polygon { vertices })
    }

    /// Like [`Polygon::new`] but reverses clockwise input first.
    pub fn from_any_orientation(mut vertices: Vec<Point>) -> Result<Self> {
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Polygon::new(vertices)
    }

    pub fn from_xy(coords: &[[f64; 2]]) -> Result<Self> {
        Polygon::new(coords.iter().map(|c| Point::new(c[0], c[1])).collect())
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1 (mod n)`.
    pub fn edge(&self, i: usize) -> (Point, Point) {
        let n = self.vertices.len();
        (self.vertices[i], self.vertices[(i + 1) % n])
    }

    pub fn edges(&self) -> impl Iterator<Item = (Point, Point)> + '_ {
        (0..self.len()).map(move |i| self.edge(i))
    }

    pub fn perimeter(&self) -> f64 {
        let lens: Vec<f64> = self.edges().map(|(a, b)| a.dist(b)).collect();
        crate::numeric::pairwise_sum(&lens)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn metrics(&self) -> PolygonMetrics {
        let perimeter = self.perimeter();
        let area = self.area();
        PolygonMetrics {
            perimeter,
            area,
            iso_ratio: perimeter / area.sqrt(),
        }
    }

    pub fn bounding_box(&self) -> BoundingBox {
        BoundingBox::of(&self.vertices)
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edges().map(|(a, b)| a.dist(b)).fold(f64::INFINITY, f64::min)
    }

    pub fn diameter(&self) -> f64 {
        let v = &self.vertices;
        let mut d: f64 = 0.0;
        for i in 0..v.len() {
            for j in i + 1..v.len() {
                d = d.max(v[i].dist(v[j]));
            }
        }
        d
    }

    pub fn centroid(&self) -> Point {
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a2 = 0.0;
        for (p, q) in self.edges() {
            let c = p.cross(q);
            a2 += c;
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        Point::new(cx / (3.0 * a2), cy / (3.0 * a2))
    }

    /// Convex (all turns non-negative) test.
    pub fn is_convex(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let c = self.vertices[(i + 2) % n];
            orient(a, b, c) >= -1e-14 * self.bounding_box().diagonal().powi(2)
        })
    }

    /// Closed point-in-polygon test (boundary points count as inside).
    pub fn contains(&self, p: Point) -> bool {
        let tol = 1e-12 * self.bounding_box().diagonal();
        for (a, b) in self.edges() {
            if point_segment_distance(p, a, b) <= tol {
                return true;
            }
        }
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Multiplies every vertex by `t > 0`.
    pub fn scaled(&self, t: f64) -> Result<Polygon> {
        scale_polygon(self, t)
    }

    pub fn to_json(&self) -> String {
        let mut s = String::from("{\"vertices\": [");
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                s.push_str(", ");
            }
            let _ = write!(s, "[{:.16e}, {:.16e}]", v.x, v.y);
        }
        s.push_str("]}\n");
        s
    }

    pub fn from_json(text: &str) -> Result<Polygon> {
        let file: PolygonFile = serde_json::from_str(text)?;
        Polygon::from_xy(&file.vertices)
    }

    pub fn read_json(path: impl AsRef<Path>) -> Result<Polygon> {
        Polygon::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

#[derive(Deserialize)]
struct PolygonFile {
    vertices: Vec<[f64; 2]>,
}

pub fn polygon_metrics(poly: &Polygon) -> PolygonMetrics {
    poly.metrics()
}

pub fn scale_polygon(poly: &Polygon, t: f64) -> Result<Polygon> {
    if !(t > 0.0) || !t.is_finite() {
        return Err(argument(format!("scale factor must be positive, got {t}")));
    }
    Polygon::new(poly.vertices.iter().map(|&v| v * t).collect())
}

fn signed_area(v: &[Point]) -> f64 {
    let n = v.len();
    let terms: Vec<f64> = (0..n).map(|i| v[i].cross(v[(i + 1) % n])).collect();
    0.5 * crate::numeric::pairwise_sum(&terms)
}

pub fn point_segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let d = b - a;
    let len2 = d.norm2();
    if len2 == 0.0 {
        return p.dist(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.dist(a + d * t)
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segment intersection test.
pub fn segments_intersect(p1: Point, p2: Point, q1: Point, q2: Point) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(p1, q1, q2))
        || (d2 == 0.0 && on_segment(p2, q1, q2))
        || (d3 == 0.0 && on_segment(q1, p1, p2))
        || (d4 == 0.0 && on_segment(q2, p1, p2))
}

fn validate_vertices(v: &[Point]) -> Result<()> {
    let n = v.len();
    if n < 3 {
        return Err(Error::Validation(format!(
            "polygon needs at least 3 vertices, got {n}"
        )));
    }
    if let Some(i) = v.iter().position(|p| !p.is_finite()) {
        return Err(Error::Validation(format!("vertex {i} is not finite")));
    }
    let diag = BoundingBox::of(v).diagonal();
    let tol = VERTEX_TOLERANCE * diag;
    for i in 0..n {
        let j = (i + 1) % n;
        if v[i].dist(v[j]) <= tol {
            return Err(Error::Validation(format!(
                "consecutive vertices {i} and {j} coincide"
            )));
        }
    }
    // Adjacent edges may only share their common vertex.
    for i in 0..n {
        let a = v[i];
        let b = v[(i + 1) % n];
        let c = v[(i + 2) % n];
        if orient(a, b, c) == 0.0 && (b - a).dot(c - b) < 0.0 {
            return Err(Error::NonSimple {
                first: i,
                second: (i + 1) % n,
            });
        }
    }
    for i in 0..n {
        let (a, b) = (v[i], v[(i + 1) % n]);
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            let (c, d) = (v[j], v[(j + 1) % n]);
            if segments_intersect(a, b, c, d) {
                return Err(Error::NonSimple { first: i, second: j });
            }
        }
    }
    let area = signed_area(v);
    if !(area > 0.0) {
        return Err(Error::Validation(format!(
            "signed area must be positive (counterclockwise), got {area}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_metrics() {
        let m = unit_square().metrics();
        assert_eq!(m.perimeter, 4.0);
        assert_eq!(m.area, 1.0);
        assert_eq!(m.iso_ratio, 4.0);
    }

    #[test]
    fn regular_64_gon_metrics() {
        let poly = regular_polygon(64, 1.0).unwrap();
        let m = poly.metrics();
        let pi = std::f64::consts::PI;
        assert!((m.perimeter - 128.0 * (pi / 64.0).sin()).abs() < 1e-12);
        assert!((m.area - 32.0 * (pi / 32.0).sin()).abs() < 1e-12);
        assert!((m.perimeter - 6.28066).abs() < 1e-5);
        assert!((m.area - 3.13655).abs() < 1e-5);
        assert!((m.iso_ratio / (2.0 * pi.sqrt()) - 1.0).abs() < 1e-3);
    }

    #[test]
    fn bowtie_is_rejected_with_edge_pair() {
        let err = Polygon::from_xy(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]).unwrap_err();
        match err {
            Error::NonSimple { first, second } => assert_eq!((first, second), (0, 2)),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn clockwise_and_degenerate_input_is_rejected() {
        assert!(Polygon::from_xy(&[[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]).is_err());
        assert!(Polygon::from_xy(&[[0.0, 0.0], [1.0, 0.0]]).is_err());
        assert!(Polygon::from_xy(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.0], [0.0, 1.0]]).is_err());
        // Fold-back between adjacent edges.
        assert!(Polygon::from_xy(&[[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [1.0, 1.0]]).is_err());
        let ccw = Polygon::from_any_orientation(vec![
            Point::new(0.0, 0.0),
            Point::new(0.0, 1.0),
            Point::new(1.0, 1.0),
            Point::new(1.0, 0.0),
        ])
        .unwrap();
        assert!(ccw.area() > 0.0);
    }

    #[test]
    fn scaling() {
        let sq = unit_square();
        let big = scale_polygon(&sq, 2.0).unwrap();
        assert_eq!(big.perimeter(), 8.0);
        assert_eq!(big.area(), 4.0);
        assert_eq!(scale_polygon(&sq, 1.0).unwrap(), sq);
        assert!(scale_polygon(&sq, 0.0).is_err());
        assert!(scale_polygon(&sq, -1.0).is_err());
        let poly = make_dumbbell(0.3, 0.7).unwrap();
        for t in [0.1, 0.5, 3.0, 17.0] {
            let s = poly.scaled(t).unwrap();
            assert!((s.metrics().iso_ratio / poly.metrics().iso_ratio - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let poly = make_spiked_square(SpikeSpec::PresetP(4.0), 2).unwrap().polygon;
        let text = poly.to_json();
        let back = Polygon::from_json(&text).unwrap();
        assert_eq!(back, poly);
        assert!(text.starts_with("{\"vertices\": [["));
    }

    #[test]
    fn containment_and_convexity() {
        let sq = unit_square();
        assert!(sq.is_convex());
        assert!(sq.contains(Point::new(0.5, 0.5)));
        assert!(sq.contains(Point::new(1.0, 0.5)));
        assert!(!sq.contains(Point::new(1.5, 0.5)));
        assert!(!make_dumbbell(0.2, 1.0).unwrap().is_convex());
    }
}
