//! Arc-length measure of the boundary, its concentration function and the
//! radius threshold below which no ball carries a prescribed share.

use rayon::prelude::*;

use super::BoundConstants;
use crate::error::{argument, Result};
use crate::geometry::{segment_disk_overlap, BoundingBox, Point, Polygon};
use crate::numeric::halton2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurePoint {
    pub position: Point,
    pub weight: f64,
}

/// Boundary arc length cut into sub-segments no longer than `resolution`.
#[derive(Debug, Clone)]
pub struct BoundaryMeasure {
    points: Vec<MeasurePoint>,
    segments: Vec<(Point, Point)>,
    total: f64,
    resolution: f64,
}

pub fn build_boundary_measure(poly: &Polygon, resolution: f64) -> Result<BoundaryMeasure> {
    if !(resolution > 0.0) || !resolution.is_finite() {
        return Err(argument(format!("measure resolution must be positive, got {resolution}")));
    }
    let mut points = Vec::new();
    let mut segments = Vec::new();
    for (a, b) in poly.edges() {
        let len = a.dist(b);
        let pieces = ((len / resolution).ceil() as usize).max(1);
        for i in 0..pieces {
            let p = a + (b - a) * (i as f64 / pieces as f64);
            let q = if i + 1 == pieces { b } else { a + (b - a) * ((i + 1) as f64 / pieces as f64) };
            points.push(MeasurePoint {
                position: p.midpoint(q),
                weight: p.dist(q),
            });
            segments.push((p, q));
        }
    }
    let total = points.iter().map(|m| m.weight).sum();
    Ok(BoundaryMeasure {
        points,
        segments,
        total,
        resolution,
    })
}

impl BoundaryMeasure {
    pub fn points(&self) -> &[MeasurePoint] {
        &self.points
    }

    pub fn segments(&self) -> &[(Point, Point)] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn bounding_box(&self) -> BoundingBox {
        let pts: Vec<Point> = self.segments.iter().map(|s| s.0).collect();
        BoundingBox::of(&pts)
    }

    /// Exact `μ(B(c, r))` for the open disk.
    pub fn mass_in_ball(&self, c: Point, r: f64) -> f64 {
        self.mass_where(c, r, |_| true)
    }

    /// `μ(B(c, r))` restricted to sub-segments accepted by `keep`.
    pub(crate) fn mass_where(&self, c: Point, r: f64, keep: impl Fn(usize) -> bool) -> f64 {
        if !(r > 0.0) {
            return 0.0;
        }
        let mut total = 0.0;
        for (i, (&(a, b), m)) in self.segments.iter().zip(&self.points).enumerate() {
            // A sub-segment lies within half its length of its midpoint.
            if m.position.dist(c) >= r + 0.5 * m.weight || !keep(i) {
                continue;
            }
            if let Some((t0, t1)) = segment_disk_overlap(a, b, c, r) {
                total += (t1 - t0) * m.weight;
            }
        }
        total
    }

    /// Total weight of the sample points strictly inside `B(c, r)`.
    pub fn point_mass_in_ball(&self, c: Point, r: f64) -> f64 {
        let r2 = r * r;
        self.points
            .iter()
            .filter(|m| m.position.dist2(c) < r2)
            .map(|m| m.weight)
            .sum()
    }
}

/// Candidate centres for the concentration function.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CenterSampling {
    /// Halton points in the bounding box, `grid_density^2` of them, on top of
    /// the measure points.
    pub grid_density: usize,
}

impl Default for CenterSampling {
    fn default() -> Self {
        CenterSampling { grid_density: 16 }
    }
}

pub(crate) fn candidate_centers(measure: &BoundaryMeasure, sampling: CenterSampling) -> Vec<Point> {
    let bb = measure.bounding_box();
    let mut centers: Vec<Point> = measure.points.iter().map(|m| m.position).collect();
    let grid = (sampling.grid_density * sampling.grid_density) as u64;
    centers.extend((0..grid).map(|i| {
        let (u, v) = halton2(i);
        Point::new(bb.min.x + u * bb.width(), bb.min.y + v * bb.height())
    }));
    centers
}

/// Sampled `V(r) = sup_x μ(B(x, r))`. Each sample is an exact disk mass, so
/// the result never exceeds the true supremum, and it is non-decreasing in
/// `r` for a fixed centre set.
pub fn concentration(measure: &BoundaryMeasure, r: f64, sampling: CenterSampling) -> f64 {
    let centers = candidate_centers(measure, sampling);
    max_mass(measure, &centers, r)
}

fn max_mass(measure: &BoundaryMeasure, centers: &[Point], r: f64) -> f64 {
    if !(r > 0.0) {
        return 0.0;
    }
    centers
        .par_iter()
        .map(|&c| measure.mass_in_ball(c, r))
        .reduce(|| 0.0, f64::max)
}

/// `inf{r : V(r) ≥ v}` by bisection on the sampled concentration.
pub(crate) fn infimum_radius(measure: &BoundaryMeasure, v: f64, sampling: CenterSampling) -> f64 {
    let centers = candidate_centers(measure, sampling);
    let mut hi = 1.01 * measure.bounding_box().diagonal().max(measure.resolution);
    while max_mass(measure, &centers, hi) < v {
        hi *= 2.0;
        if !hi.is_finite() {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    for _ in 0..100 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if max_mass(measure, &centers, mid) >= v {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// Share `v_k = c_n μ(ℝ²) / (2k)` required of each of `2k` annuli.
pub fn share_for(measure: &BoundaryMeasure, count: usize, constants: &BoundConstants) -> Result<f64> {
    if count == 0 {
        return Err(argument("annulus count must be at least 1"));
    }
    let v = constants.c_n * measure.total() / count as f64;
    if v > measure.total() {
        return Err(argument(format!(
            "k too small for threshold: share {v} exceeds the total measure {}",
            measure.total()
        )));
    }
    Ok(v)
}

/// `½ inf{r : V(r) ≥ c_n μ(ℝ²)/(2k)}`.
pub fn inner_radius_threshold(measure: &BoundaryMeasure, k: usize, constants: &BoundConstants) -> Result<f64> {
    if k == 0 {
        return Err(argument("k must be at least 1"));
    }
    let v = share_for(measure, 2 * k, constants)?;
    Ok(0.5 * infimum_radius(measure, v, CenterSampling::default()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::clip_boundary_to_disk;
    use crate::geometry::{distortion, regular_polygon, unit_square, DistortionSearch, OMEGA_1};

    #[test]
    fn square_measure() {
        let m = build_boundary_measure(&unit_square(), 0.1).unwrap();
        assert_eq!(m.len(), 40);
        assert!((m.total() - 4.0).abs() < 1e-12);
        assert!(m.points().iter().all(|p| p.weight > 0.0 && p.weight <= 0.1 + 1e-15));
        assert!(build_boundary_measure(&unit_square(), 0.0).is_err());
        assert!(build_boundary_measure(&unit_square(), -1.0).is_err());
    }

    #[test]
    fn total_matches_perimeter() {
        let poly = regular_polygon(7, 1.3).unwrap();
        for res in [0.5, 0.07, 0.013] {
            let m = build_boundary_measure(&poly, res).unwrap();
            assert!((m.total() - poly.perimeter()).abs() <= 1e-9 * poly.perimeter());
            assert!(m.points().iter().all(|p| p.weight <= res * (1.0 + 1e-12)));
        }
    }

    #[test]
    fn point_filter_close_to_exact_clip() {
        let sq = unit_square();
        let m = build_boundary_measure(&sq, 0.1).unwrap();
        let c = Point::new(0.0, 0.0);
        let exact = clip_boundary_to_disk(&sq, c, 0.5).unwrap();
        assert!((m.point_mass_in_ball(c, 0.5) - exact).abs() <= 0.1);
        assert!((m.point_mass_in_ball(c, 0.5) - 1.0).abs() <= 0.1);
        assert!((m.mass_in_ball(c, 0.5) - exact).abs() < 1e-14);
    }

    /// Brute-force maximum over a fine grid of centres of the exact clip.
    fn brute_force_square(r: f64) -> f64 {
        let sq = unit_square();
        let n = 200;
        let mut best: f64 = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let c = Point::new(i as f64 / n as f64, j as f64 / n as f64);
                best = best.max(clip_boundary_to_disk(&sq, c, r).unwrap());
            }
        }
        best
    }

    #[test]
    fn square_concentration() {
        let m = build_boundary_measure(&unit_square(), 0.01).unwrap();
        let s = CenterSampling::default();
        assert!((concentration(&m, 10.0, s) - 4.0).abs() < 1e-12);
        let analytic = 2.0 * 2f64.sqrt() * 0.5;
        let v = concentration(&m, 0.5, s);
        assert!(v <= analytic + 1e-12);
        assert!((v - analytic).abs() <= 0.02 * analytic, "{v}");
        assert!((brute_force_square(0.5) - analytic).abs() < 1e-3);
    }

    #[test]
    fn concentration_monotone_and_below_distortion() {
        let poly = regular_polygon(5, 1.0).unwrap();
        let m = build_boundary_measure(&poly, 0.02).unwrap();
        let s = CenterSampling::default();
        let d = distortion(&poly, DistortionSearch::default()).unwrap().value;
        let mut last = 0.0;
        for i in 1..40 {
            let r = 0.05 * i as f64;
            let v = concentration(&m, r, s);
            assert!(v >= last);
            assert!(v / (OMEGA_1 * r) <= d + 1e-9);
            last = v;
        }
    }

    #[test]
    fn square_threshold() {
        let m = build_boundary_measure(&unit_square(), 0.005).unwrap();
        let c = BoundConstants::default();
        let t = inner_radius_threshold(&m, 2, &c).unwrap();
        let exact = 0.5 / (2.0 * 2f64.sqrt());
        assert!((t - exact).abs() <= 0.02 * exact, "{t}");
        let mut last = f64::INFINITY;
        for k in 1..8 {
            let t = inner_radius_threshold(&m, k, &c).unwrap();
            assert!(t <= last);
            last = t;
        }
        let big = BoundConstants::new(10.0).unwrap();
        let err = inner_radius_threshold(&m, 2, &big).unwrap_err();
        assert!(err.to_string().contains("k too small for threshold"));
    }

    #[test]
    fn threshold_scales() {
        let poly = regular_polygon(6, 1.0).unwrap();
        let c = BoundConstants::default();
        let m1 = build_boundary_measure(&poly, 0.05).unwrap();
        let big = poly.scaled(4.0).unwrap();
        let m4 = build_boundary_measure(&big, 0.2).unwrap();
        let t1 = inner_radius_threshold(&m1, 3, &c).unwrap();
        let t4 = inner_radius_threshold(&m4, 3, &c).unwrap();
        assert!((t4 - 4.0 * t1).abs() <= 1e-9 * t4);
    }
}
