//! Circle clipping of polygon boundaries and interiors.

use super::{Point, Polygon};
use crate::error::{argument, Result};
use crate::numeric::pairwise_sum;

/// Parameter interval `[t0, t1] ⊂ [0, 1]` of segment `a → b` inside the open
/// disk `B(c, r)`, or `None` when the segment misses it.
pub fn segment_disk_overlap(a: Point, b: Point, c: Point, r: f64) -> Option<(f64, f64)> {
    let (t0, t1) = line_circle_params(a, b, c, r)?;
    let lo = t0.max(0.0);
    let hi = t1.min(1.0);
    (hi > lo).then_some((lo, hi))
}

/// Unclamped line parameters where `|a + t(b-a) - c| = r`.
fn line_circle_params(a: Point, b: Point, c: Point, r: f64) -> Option<(f64, f64)> {
    let d = b - a;
    let f = a - c;
    let qa = d.norm2();
    let qb = f.dot(d);
    let qc = f.norm2() - r * r;
    let disc = qb * qb - qa * qc;
    if !(disc > 0.0) || qa == 0.0 {
        return None;
    }
    let s = disc.sqrt();
    Some(((-qb - s) / qa, (-qb + s) / qa))
}

/// Length of `∂Ω ∩ B(center, radius)` by per-segment chord intersection.
pub fn clip_boundary_to_disk(poly: &Polygon, center: Point, radius: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(argument(format!("radius must be positive, got {radius}")));
    }
    Ok(boundary_in_disk(poly, center, radius))
}

pub(crate) fn boundary_in_disk(poly: &Polygon, center: Point, radius: f64) -> f64 {
    let mut total = 0.0;
    for (a, b) in poly.edges() {
        if let Some((t0, t1)) = segment_disk_overlap(a, b, center, radius) {
            total += (t1 - t0) * a.dist(b);
        }
    }
    total
}

/// Signed area of `B(0, r) ∩ triangle(0, p, q)`.
fn triangle_disk_signed_area(p: Point, q: Point, r: f64) -> f64 {
    let r2 = r * r;
    let mut pts = [p; 4];
    let mut n = 1;
    if let Some((t0, t1)) = line_circle_params(p, q, Point::default(), r) {
        let d = q - p;
        if t0 > 0.0 && t0 < 1.0 {
            pts[n] = p + d * t0;
            n += 1;
        }
        if t1 > 0.0 && t1 < 1.0 {
            pts[n] = p + d * t1;
            n += 1;
        }
    }
    pts[n] = q;
    n += 1;
    let mut area = 0.0;
    for w in pts[..n].windows(2) {
        let (u, v) = (w[0], w[1]);
        if u.midpoint(v).norm2() <= r2 {
            area += 0.5 * u.cross(v);
        } else {
            area += 0.5 * r2 * u.cross(v).atan2(u.dot(v));
        }
    }
    area
}

/// `|Ω ∩ B(center, r)|` by Green's theorem over polygon edges.
pub fn disk_polygon_area(poly: &Polygon, center: Point, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let terms: Vec<f64> = poly
        .edges()
        .map(|(a, b)| triangle_disk_signed_area(a - center, b - center, r))
        .collect();
    pairwise_sum(&terms).max(0.0)
}

/// `|Ω ∩ {r_in < |x - center| < r_out}|`.
pub fn shell_polygon_area(poly: &Polygon, center: Point, r_in: f64, r_out: f64) -> f64 {
    (disk_polygon_area(poly, center, r_out) - disk_polygon_area(poly, center, r_in)).max(0.0)
}
