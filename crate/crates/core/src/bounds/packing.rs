//! Annuli with pairwise disjoint doubles, each carrying a share of the
//! boundary measure, and the plateau-ramp functions built on them.

use rayon::prelude::*;
use serde::Serialize;

use super::measure::{candidate_centers, infimum_radius, share_for, BoundaryMeasure, CenterSampling};
use super::BoundConstants;
use crate::error::{argument, Error, Result};
use crate::geometry::{Point, Polygon, disk_polygon_area};

/// `A(a, r, R) = {r < |x - a| < R}`; `r_inner = 0` is the ball `B(a, R)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Annulus {
    pub center: Point,
    pub r_inner: f64,
    pub r_outer: f64,
}

impl Annulus {
    pub fn new(center: Point, r_inner: f64, r_outer: f64) -> Result<Self> {
        if !center.is_finite() || !(r_inner >= 0.0) || !(r_outer > r_inner) || !r_outer.is_finite() {
            return Err(argument(format!(
                "annulus radii must satisfy 0 <= r < R < inf, got r = {r_inner}, R = {r_outer}"
            )));
        }
        Ok(Annulus {
            center,
            r_inner,
            r_outer,
        })
    }

    pub fn ball(center: Point, radius: f64) -> Result<Self> {
        Annulus::new(center, 0.0, radius)
    }

    pub fn is_ball(&self) -> bool {
        self.r_inner == 0.0
    }

    /// `2A = A(a, r/2, 2R)`.
    pub fn doubled(&self) -> Annulus {
        Annulus {
            center: self.center,
            r_inner: 0.5 * self.r_inner,
            r_outer: 2.0 * self.r_outer,
        }
    }

    /// Exact test that the doubles of `self` and `other` do not meet.
    pub fn doubles_disjoint(&self, other: &Annulus) -> bool {
        let reach = 2.0 * self.r_outer + 2.0 * other.r_outer;
        self.center.dist2(other.center) > reach * reach
    }

    /// Plateau-ramp profile as a function of `d = |x - a|`.
    pub fn profile_at(&self, d: f64) -> f64 {
        let (r, big) = (self.r_inner, self.r_outer);
        if d <= big {
            if self.is_ball() || d >= r {
                1.0
            } else if d >= 0.5 * r {
                2.0 * d / r - 1.0
            } else {
                0.0
            }
        } else if d <= 2.0 * big {
            2.0 - d / big
        } else {
            0.0
        }
    }

    /// `|∇u|` at distance `d`: `2/r` on the inner ramp, `1/R` on the outer.
    pub fn gradient_at(&self, d: f64) -> f64 {
        let (r, big) = (self.r_inner, self.r_outer);
        if d > big && d < 2.0 * big {
            1.0 / big
        } else if !self.is_ball() && d > 0.5 * r && d < r {
            2.0 / r
        } else {
            0.0
        }
    }

    /// Radii where the profile changes formula, ascending.
    pub fn breakpoints(&self) -> Vec<f64> {
        if self.is_ball() {
            vec![self.r_outer, 2.0 * self.r_outer]
        } else {
            vec![0.5 * self.r_inner, self.r_inner, self.r_outer, 2.0 * self.r_outer]
        }
    }

    /// `|2A ∩ Ω|`.
    pub fn doubled_area_in(&self, poly: &Polygon) -> f64 {
        let d = self.doubled();
        (disk_polygon_area(poly, d.center, d.r_outer) - disk_polygon_area(poly, d.center, d.r_inner)).max(0.0)
    }
}

pub fn annulus_test_function_profile(a: &Annulus, x: Point) -> f64 {
    a.profile_at(x.dist(a.center))
}

#[derive(Debug, Clone)]
pub struct Packing {
    pub annuli: Vec<Annulus>,
    /// Index of each centre in the candidate list (measure points, then
    /// the concentration grid).
    pub center_candidates: Vec<usize>,
    /// Exact `μ(A_i)`.
    pub masses: Vec<f64>,
    /// `min_i μ(A_i) · count / μ(ℝ²)`.
    pub achieved_c: f64,
}

pub fn annuli_pack(measure: &BoundaryMeasure, count: usize, constants: &BoundConstants) -> Result<Packing> {
    annuli_pack_excluding(measure, count, constants, &[])
}

/// Greedy packing of balls of a common radius `r*`: each ball maximises the
/// remaining captured mass among candidate centres farther than `2r* + 2r*`
/// from every chosen centre, and the sub-segments with midpoint within that
/// distance are removed from the remaining mass. `r*` starts at the radius where the
/// sampled concentration reaches `c_n μ / count` and is reduced (halving,
/// then bisection back up) until `count` balls fit.
pub(crate) fn annuli_pack_excluding(
    measure: &BoundaryMeasure,
    count: usize,
    constants: &BoundConstants,
    excluded: &[usize],
) -> Result<Packing> {
    constants.check()?;
    let v = share_for(measure, count, constants)?;
    let r0 = infimum_radius(measure, v, CenterSampling::default());
    let floor = measure.resolution();
    let candidates = candidate_centers(measure, CenterSampling::default());
    let mut allowed = vec![true; candidates.len()];
    for &i in excluded {
        if i < allowed.len() {
            allowed[i] = false;
        }
    }
    let greedy = |r: f64| greedy_centers(measure, &candidates, count, r, &allowed);

    let (radius, centers) = if let Some(c) = greedy(r0) {
        (r0, c)
    } else {
        let mut hi = r0;
        let mut lo = 0.5 * r0;
        let mut found = None;
        while lo >= floor {
            if let Some(c) = greedy(lo) {
                found = Some(c);
                break;
            }
            hi = lo;
            lo *= 0.5;
        }
        let Some(mut best) = found else {
            return Err(Error::Precondition(format!(
                "packing infeasible at resolution {floor}: {count} disjoint doubled balls do not fit"
            )));
        };
        for _ in 0..30 {
            let mid = 0.5 * (lo + hi);
            match greedy(mid) {
                Some(c) => {
                    lo = mid;
                    best = c;
                }
                None => hi = mid,
            }
        }
        (lo, best)
    };

    let annuli: Vec<Annulus> = centers
        .iter()
        .map(|&i| Annulus::ball(candidates[i], radius))
        .collect::<Result<_>>()?;
    for (i, a) in annuli.iter().enumerate() {
        for b in &annuli[i + 1..] {
            assert!(a.doubles_disjoint(b), "doubled annuli overlap");
        }
    }
    let masses: Vec<f64> = annuli.iter().map(|a| measure.mass_in_ball(a.center, a.r_outer)).collect();
    let min_mass = masses.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Packing {
        achieved_c: min_mass * count as f64 / measure.total(),
        annuli,
        center_candidates: centers,
        masses,
    })
}

fn greedy_centers(
    measure: &BoundaryMeasure,
    candidates: &[Point],
    count: usize,
    r: f64,
    allowed: &[bool],
) -> Option<Vec<usize>> {
    if !(r > 0.0) {
        return None;
    }
    let reach = 2.0 * r + 2.0 * r;
    let reach2 = reach * reach;
    let mut remaining = vec![true; measure.len()];
    let mut alive: Vec<bool> = allowed.to_vec();
    let mut centers = Vec::with_capacity(count);
    for _ in 0..count {
        let best = (0..candidates.len())
            .into_par_iter()
            .filter(|&i| alive[i])
            .map(|i| (measure.mass_where(candidates[i], r, |j| remaining[j]), i))
            .reduce(
                || (f64::NEG_INFINITY, usize::MAX),
                |a, b| if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) { b } else { a },
            );
        if best.1 == usize::MAX || !(best.0 > 0.0) {
            return None;
        }
        let c = candidates[best.1];
        for (j, m) in measure.points().iter().enumerate() {
            if m.position.dist2(c) <= reach2 {
                remaining[j] = false;
            }
        }
        for (j, q) in candidates.iter().enumerate() {
            if q.dist2(c) <= reach2 {
                alive[j] = false;
            }
        }
        centers.push(best.1);
    }
    Some(centers)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::build_boundary_measure;
    use crate::geometry::{regular_polygon, unit_square};

    #[test]
    fn profile_values() {
        let a = Annulus::new(Point::new(0.0, 0.0), 0.4, 1.0).unwrap();
        let at = |d: f64| annulus_test_function_profile(&a, Point::new(d, 0.0));
        assert!((at(0.3) - 0.5).abs() < 1e-15);
        assert_eq!(at(0.1), 0.0);
        assert_eq!(at(0.7), 1.0);
        assert!((at(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(at(2.5), 0.0);
        assert!((a.gradient_at(0.3) - 5.0).abs() < 1e-15);
        assert!((a.gradient_at(1.5) - 1.0).abs() < 1e-15);
        assert_eq!(a.gradient_at(0.7), 0.0);
        let d = a.doubled();
        assert_eq!((d.r_inner, d.r_outer), (0.2, 2.0));

        let b = Annulus::ball(Point::new(1.0, 1.0), 0.5).unwrap();
        assert_eq!(annulus_test_function_profile(&b, Point::new(1.0, 1.0)), 1.0);
        assert!((b.profile_at(0.75) - 0.5).abs() < 1e-15);
        assert!((b.gradient_at(0.75) - 2.0).abs() < 1e-15);
        assert!(Annulus::new(Point::new(0.0, 0.0), 1.0, 1.0).is_err());
        assert!(Annulus::new(Point::new(0.0, 0.0), -0.1, 1.0).is_err());
    }

    #[test]
    fn profile_is_continuous() {
        let a = Annulus::new(Point::new(0.0, 0.0), 0.3, 0.8).unwrap();
        for &r in &a.breakpoints() {
            let (lo, hi) = (a.profile_at(r * (1.0 - 1e-12)), a.profile_at(r * (1.0 + 1e-12)));
            assert!((lo - hi).abs() < 1e-10);
        }
    }

    #[test]
    fn single_ball_takes_everything() {
        let m = build_boundary_measure(&unit_square(), 0.05).unwrap();
        let p = annuli_pack(&m, 1, &BoundConstants::default()).unwrap();
        assert_eq!(p.annuli.len(), 1);
        assert!((p.achieved_c - 1.0).abs() < 1e-9, "{}", p.achieved_c);
    }

    #[test]
    fn polygon_pair_is_antipodal() {
        let poly = regular_polygon(64, 1.0).unwrap();
        let m = build_boundary_measure(&poly, poly.perimeter() / 1024.0).unwrap();
        let p = annuli_pack(&m, 2, &BoundConstants::default()).unwrap();
        assert_eq!(p.annuli.len(), 2);
        assert!(p.annuli[0].doubles_disjoint(&p.annuli[1]));
        let (a, b) = (p.annuli[0].center, p.annuli[1].center);
        let angle = a.cross(b).atan2(a.dot(b)).abs();
        assert!(angle > 170f64.to_radians(), "{angle}");
        for &mass in &p.masses {
            assert!(mass >= 0.15 * poly.perimeter(), "{mass}");
        }
        assert!(p.achieved_c > 0.0);
    }

    #[test]
    fn many_annuli_disjoint() {
        let m = build_boundary_measure(&unit_square(), 0.01).unwrap();
        for count in [2, 5, 16] {
            let p = annuli_pack(&m, count, &BoundConstants::default()).unwrap();
            assert_eq!(p.annuli.len(), count);
            for (i, a) in p.annuli.iter().enumerate() {
                for b in &p.annuli[i + 1..] {
                    let reach = 2.0 * a.r_outer + 2.0 * b.r_outer;
                    assert!(a.center.dist2(b.center) > reach * reach);
                }
            }
            assert!(p.achieved_c > 0.0);
        }
    }

    #[test]
    fn infeasible_packing() {
        let m = build_boundary_measure(&unit_square(), 0.25).unwrap();
        let err = annuli_pack(&m, 40, &BoundConstants::default()).unwrap_err();
        assert!(err.to_string().contains("packing infeasible at resolution"));
    }
}
