//! Sampled lower bound of the boundary distortion
//! `D(Ω) = sup_{x,r} |∂Ω ∩ B(x,r)| / (ω_1 r)`.

use rayon::prelude::*;
use serde::Serialize;

use super::clip::boundary_in_disk;
use super::{Point, Polygon, OMEGA_1};
use crate::error::{argument, Result};
use crate::numeric::halton2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistortionSearch {
    /// The bounding box is sampled with `grid_density^2` Halton points.
    pub grid_density: usize,
    /// Coordinate-wise refinement rounds per candidate centre.
    pub refine_rounds: usize,
    /// Log-spaced radii tried per centre, in addition to vertex distances.
    pub radius_sweep: usize,
}

impl Default for DistortionSearch {
    fn default() -> Self {
        DistortionSearch {
            grid_density: 16,
            refine_rounds: 40,
            radius_sweep: 48,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Distortion {
    pub value: f64,
    pub center: Point,
    pub radius: f64,
}

/// `|∂Ω ∩ B(c, r)| / (ω_1 r)`.
pub fn clip_ratio(poly: &Polygon, center: Point, radius: f64) -> f64 {
    boundary_in_disk(poly, center, radius) / (OMEGA_1 * radius)
}

/// Maximises the clip ratio over candidate centres (vertices, edge midpoints,
/// centroid and a nested Halton grid) and radii (centre-to-vertex distances
/// and a log sweep), refining every candidate locally. Every sample is a lower
/// bound of the supremum; the candidate set for a density is a prefix of the
/// set for any larger density, so the result is monotone in `grid_density`.
pub fn distortion(poly: &Polygon, search: DistortionSearch) -> Result<Distortion> {
    if search.grid_density == 0 || search.radius_sweep == 0 {
        return Err(argument("distortion search parameters must be positive"));
    }
    let bb = poly.bounding_box();
    let diag = bb.diagonal();
    let mut centers: Vec<Point> = poly.vertices().to_vec();
    centers.extend(poly.edges().map(|(a, b)| a.midpoint(b)));
    centers.push(poly.centroid());
    let grid = (search.grid_density * search.grid_density) as u64;
    centers.extend((0..grid).map(|i| {
        let (u, v) = halton2(i);
        Point::new(bb.min.x + u * bb.width(), bb.min.y + v * bb.height())
    }));

    let r_min = 1e-4 * diag;
    let r_max = 2.0 * diag;
    let sweep: Vec<f64> = (0..search.radius_sweep)
        .map(|i| {
            let t = i as f64 / (search.radius_sweep.max(2) - 1) as f64;
            r_min * (r_max / r_min).powf(t)
        })
        .collect();

    let results: Vec<Distortion> = centers
        .par_iter()
        .map(|&c| {
            let start = best_radius(poly, c, &sweep);
            refine(poly, start, search.refine_rounds, diag)
        })
        .collect();

    let mut best = results[0];
    for r in &results[1..] {
        if r.value > best.value {
            best = *r;
        }
    }
    Ok(best)
}

fn best_radius(poly: &Polygon, c: Point, sweep: &[f64]) -> Distortion {
    let mut best = Distortion {
        value: 0.0,
        center: c,
        radius: sweep[0],
    };
    let vertex_radii = poly.vertices().iter().map(|v| v.dist(c));
    for r in vertex_radii.chain(sweep.iter().copied()) {
        if r <= 0.0 {
            continue;
        }
        let value = clip_ratio(poly, c, r);
        if value > best.value {
            best = Distortion { value, center: c, radius: r };
        }
    }
    best
}

fn refine(poly: &Polygon, start: Distortion, rounds: usize, diag: f64) -> Distortion {
    let mut best = start;
    let mut step = (0.25 * best.radius).min(0.1 * diag);
    let mut factor: f64 = 1.25;
    for _ in 0..rounds {
        let c = best.center;
        let r = best.radius;
        let moves = [
            (Point::new(c.x + step, c.y), r),
            (Point::new(c.x - step, c.y), r),
            (Point::new(c.x, c.y + step), r),
            (Point::new(c.x, c.y - step), r),
            (c, r * factor),
            (c, r / factor),
        ];
        let mut improved = false;
        for (center, radius) in moves {
            let value = clip_ratio(poly, center, radius);
            if value > best.value {
                best = Distortion { value, center, radius };
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
            factor = factor.sqrt();
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_spiked_square, regular_polygon, unit_square, SpikeSpec};

    /// Brute-force grid oracle over centres and radii.
    fn brute_force(poly: &Polygon, n: usize, nr: usize) -> f64 {
        let bb = poly.bounding_box();
        let diag = bb.diagonal();
        let mut best: f64 = 0.0;
        for i in 0..=n {
            for j in 0..=n {
                let c = Point::new(
                    bb.min.x + bb.width() * i as f64 / n as f64,
                    bb.min.y + bb.height() * j as f64 / n as f64,
                );
                for k in 1..=nr {
                    let r = diag * k as f64 / nr as f64;
                    best = best.max(clip_ratio(poly, c, r));
                }
            }
        }
        best
    }

    #[test]
    fn unit_square_distortion() {
        let d = distortion(&unit_square(), DistortionSearch::default()).unwrap();
        let exact = 2.0 * 2f64.sqrt();
        assert!((d.value - exact).abs() <= 0.01 * exact, "{d:?}");
        assert!(d.value <= exact + 1e-9);
        // r = √2/2 at the centroid gives 4√(r² - 1/4)/r = 2√2 in the limit.
        let r: f64 = 2f64.sqrt() / 2.0;
        assert!((4.0 * (r * r - 0.25).sqrt() / r - exact).abs() < 1e-12);
        let oracle = brute_force(&unit_square(), 40, 200);
        assert!((oracle - exact).abs() < 0.01 * exact);
    }

    #[test]
    fn convex_64_gon_distortion_near_pi() {
        let poly = regular_polygon(64, 1.0).unwrap();
        let d = distortion(&poly, DistortionSearch::default()).unwrap();
        let pi = std::f64::consts::PI;
        assert!((d.value - pi).abs() <= 0.02 * pi, "{d:?}");
        assert!(d.value <= pi + 1e-6);
    }

    #[test]
    fn spiked_square_distortion_is_large() {
        let s = make_spiked_square(SpikeSpec::PresetP(4.0), 2).unwrap();
        let d = distortion(&s.polygon, DistortionSearch::default()).unwrap();
        assert!(d.value >= 2.0, "{d:?}");
    }

    #[test]
    fn monotone_in_grid_density() {
        let s = make_spiked_square(SpikeSpec::PresetP(4.0), 2).unwrap();
        let mut prev = 0.0;
        for g in [1, 2, 3, 5, 8] {
            let search = DistortionSearch {
                grid_density: g,
                refine_rounds: 10,
                radius_sweep: 16,
            };
            let d = distortion(&s.polygon, search).unwrap().value;
            assert!(d >= prev);
            prev = d;
        }
    }

    #[test]
    fn rejects_zero_density() {
        let search = DistortionSearch {
            grid_density: 0,
            ..Default::default()
        };
        assert!(distortion(&unit_square(), search).is_err());
    }
}
