//! Mesh-free upper bounds for σ_{p,k} from disjointly supported plateau
//! functions: every integral is evaluated on the polygon itself.

use super::measure::build_boundary_measure;
use super::packing::{annuli_pack_excluding, Annulus, Packing};
use super::{theoretical_rhs_with_distortion, BoundConstants};
use crate::error::{argument, Error, Result};
use crate::geometry::{point_segment_distance, shell_polygon_area, Point, Polygon, OMEGA_1};
use crate::numeric::{abs_pow, gauss_legendre_unit, pairwise_sum};
use crate::spectrum::{EstimateKind, SpectralEstimate};

const MAX_RETRIES: usize = 5;
const SUBINTERVALS: usize = 4;
const GAUSS_ORDER: usize = 8;

/// `∫_Ω |∇u|^p` for the plateau-ramp function of `a`, from exact shell areas.
pub fn profile_energy(poly: &Polygon, a: &Annulus, p: f64) -> f64 {
    let outer = (1.0 / a.r_outer).powf(p) * shell_polygon_area(poly, a.center, a.r_outer, 2.0 * a.r_outer);
    if a.is_ball() {
        outer
    } else {
        let inner = (2.0 / a.r_inner).powf(p) * shell_polygon_area(poly, a.center, 0.5 * a.r_inner, a.r_inner);
        inner + outer
    }
}

/// Parameters in `(0, 1)` where segment `x → y` crosses `|· - c| = rho`.
fn crossings(x: Point, y: Point, c: Point, rho: f64, out: &mut Vec<f64>) {
    let d = y - x;
    let f = x - c;
    let qa = d.norm2();
    let qb = f.dot(d);
    let qc = f.norm2() - rho * rho;
    let disc = qb * qb - qa * qc;
    if qa == 0.0 || !(disc > 0.0) {
        return;
    }
    let s = disc.sqrt();
    for t in [(-qb - s) / qa, (-qb + s) / qa] {
        if t > 0.0 && t < 1.0 {
            out.push(t);
        }
    }
}

/// `∫_∂Ω |u|^p` with every edge split where the radial formula changes;
/// each smooth piece gets composite Gauss–Legendre quadrature.
pub fn profile_boundary_norm(poly: &Polygon, a: &Annulus, p: f64) -> f64 {
    let (nodes, weights) = gauss_legendre_unit(GAUSS_ORDER);
    let reach = 2.0 * a.r_outer;
    let breaks = a.breakpoints();
    let terms: Vec<f64> = poly
        .edges()
        .map(|(x, y)| {
            let len = x.dist(y);
            if point_segment_distance(a.center, x, y) >= reach {
                return 0.0;
            }
            let mut ts = vec![0.0, 1.0];
            for &rho in &breaks {
                crossings(x, y, a.center, rho, &mut ts);
            }
            ts.sort_by(f64::total_cmp);
            let mut sum = 0.0;
            for w in ts.windows(2) {
                let (t0, t1) = (w[0], w[1]);
                if t1 <= t0 {
                    continue;
                }
                let h = (t1 - t0) / SUBINTERVALS as f64;
                for s in 0..SUBINTERVALS {
                    let base = t0 + s as f64 * h;
                    for (&node, &wt) in nodes.iter().zip(&weights) {
                        let q = x + (y - x) * (base + node * h);
                        sum += wt * h * abs_pow(a.profile_at(q.dist(a.center)), p);
                    }
                }
            }
            sum * len
        })
        .collect();
    pairwise_sum(&terms)
}

/// Rayleigh quotient of the plateau-ramp function of `a`, or `None` when
/// its boundary trace vanishes.
pub fn profile_rayleigh(poly: &Polygon, a: &Annulus, p: f64) -> Option<f64> {
    let den = profile_boundary_norm(poly, a, p);
    (den > 1e-300).then(|| profile_energy(poly, a, p) / den)
}

#[derive(Debug, Clone)]
pub struct CertifiedBound {
    pub estimate: SpectralEstimate,
    /// The `k` annuli carrying the test functions, in packing order.
    pub annuli: Vec<Annulus>,
    pub quotients: Vec<f64>,
    /// Exact `μ(A_i)` of the selected annuli.
    pub masses: Vec<f64>,
    /// `achieved_c` of the full `2k` packing.
    pub achieved_c: f64,
    /// Packing attempts used (1 unless some trace vanished).
    pub attempts: usize,
    /// For p > 2: the closed-form right-hand side at `c_n = achieved_c` and
    /// `D = max_i μ(A_i)/(ω_1 r_i)`, which dominates every quotient.
    pub majorant: Option<f64>,
}

/// Sub-segment length used when none is given: 64 pieces per packed annulus
/// and at least 512 overall.
pub fn default_resolution(poly: &Polygon, k: usize) -> f64 {
    poly.perimeter() / (128 * k).max(512) as f64
}

/// Packs `2k` annuli, keeps the `k` with the smallest `|2A_i ∩ Ω|` (ties by
/// packing order) and returns the largest of their Rayleigh quotients.
pub fn certified_upper_bound(poly: &Polygon, p: f64, k: usize, resolution: f64) -> Result<CertifiedBound> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(argument(format!("exponent p must exceed 1, got {p}")));
    }
    if k == 0 {
        return Err(argument("k must be at least 1"));
    }
    let measure = build_boundary_measure(poly, resolution)?;
    let constants = BoundConstants::default();
    let mut excluded = Vec::new();
    for attempt in 1..=MAX_RETRIES + 1 {
        let packing = annuli_pack_excluding(&measure, 2 * k, &constants, &excluded)?;
        match evaluate(poly, &packing, p, k)? {
            Ok(mut bound) => {
                bound.attempts = attempt;
                return Ok(bound);
            }
            Err(rejected) => excluded.extend(rejected),
        }
    }
    Err(Error::Numerical(format!(
        "certified bound: test functions kept missing the boundary after {MAX_RETRIES} retries"
    )))
}

/// The bound, or the candidate centres whose functions had no trace.
fn evaluate(
    poly: &Polygon,
    packing: &Packing,
    p: f64,
    k: usize,
) -> Result<Result<CertifiedBound, Vec<usize>>> {
    let areas: Vec<f64> = packing.annuli.iter().map(|a| a.doubled_area_in(poly)).collect();
    let mut order: Vec<usize> = (0..packing.annuli.len()).collect();
    order.sort_by(|&i, &j| areas[i].total_cmp(&areas[j]).then(i.cmp(&j)));
    let mut chosen: Vec<usize> = order.into_iter().take(k).collect();
    chosen.sort_unstable();

    let mut quotients = Vec::with_capacity(k);
    let mut rejected = Vec::new();
    for &i in &chosen {
        match profile_rayleigh(poly, &packing.annuli[i], p) {
            Some(q) => quotients.push(q),
            None => rejected.push(packing.center_candidates[i]),
        }
    }
    if !rejected.is_empty() {
        return Ok(Err(rejected));
    }
    let value = quotients.iter().copied().fold(0.0, f64::max);
    let annuli: Vec<Annulus> = chosen.iter().map(|&i| packing.annuli[i]).collect();
    let masses: Vec<f64> = chosen.iter().map(|&i| packing.masses[i]).collect();

    let majorant = if p > 2.0 {
        let d_eff = annuli
            .iter()
            .zip(&masses)
            .map(|(a, m)| m / (OMEGA_1 * a.r_outer))
            .fold(0.0, f64::max);
        let constants = BoundConstants::new(packing.achieved_c)?;
        let rhs = theoretical_rhs_with_distortion(poly, p, k, &constants, d_eff)?.value;
        for q in &quotients {
            assert!(*q <= rhs * (1.0 + 1e-9), "closed-form majorant {rhs} below quotient {q}");
        }
        Some(rhs)
    } else {
        None
    };
    Ok(Ok(CertifiedBound {
        estimate: SpectralEstimate {
            value,
            k,
            p,
            kind: EstimateKind::CertifiedUpper,
            residual: 0.0,
            iterations: 0,
            stationary: true,
            eigenfield: None,
        },
        annuli,
        quotients,
        masses,
        achieved_c: packing.achieved_c,
        attempts: 0,
        majorant,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{regular_polygon, unit_square};
    use crate::mesh::triangulate;
    use crate::spectrum::steklov_spectrum_p2;

    #[test]
    fn ball_on_square_side() {
        // Half-disk plateau of radius r on a straight side, far from corners.
        let sq = unit_square().scaled(8.0).unwrap();
        let r = 0.5;
        let a = Annulus::ball(Point::new(4.0, 0.0), r).unwrap();
        let num = profile_energy(&sq, &a, 2.0);
        assert!((num - 1.5 * std::f64::consts::PI).abs() < 1e-10);
        // 2r on the plateau, two ramps of ∫_r^{2r} (2 - s/r)^2 ds = r/3.
        let den = profile_boundary_norm(&sq, &a, 2.0);
        assert!((den - (2.0 * r + 2.0 * r / 3.0)).abs() < 1e-12, "{den}");
        let den4 = profile_boundary_norm(&sq, &a, 4.0);
        assert!((den4 - (2.0 * r + 2.0 * r / 5.0)).abs() < 1e-12);
    }

    #[test]
    fn annulus_energy_on_large_domain() {
        let big = regular_polygon(256, 100.0).unwrap();
        let a = Annulus::new(Point::new(0.0, 0.0), 0.4, 1.0).unwrap();
        let pi = std::f64::consts::PI;
        // Each ramp contributes 3π at p = 2.
        assert!((profile_energy(&big, &a, 2.0) - 6.0 * pi).abs() < 1e-9);
        assert!(profile_rayleigh(&big, &a, 2.0).is_none());
    }

    #[test]
    fn trivial_first_eigenvalue() {
        let b = certified_upper_bound(&unit_square(), 2.0, 1, 0.01).unwrap();
        assert!(b.estimate.value >= 0.0);
        assert_eq!(b.annuli.len(), 1);
    }

    #[test]
    fn square_bound_dominates_oracle() {
        let sq = unit_square();
        let mesh = triangulate(&sq, 1.0 / 16.0).unwrap();
        let spec = steklov_spectrum_p2(&mesh, 6).unwrap();
        for k in 2..=6 {
            let b = certified_upper_bound(&sq, 2.0, k, default_resolution(&sq, k)).unwrap();
            assert!(b.estimate.value >= spec[k - 1].value, "k = {k}: {} < {}", b.estimate.value, spec[k - 1].value);
            assert_eq!(b.estimate.kind, EstimateKind::CertifiedUpper);
            assert_eq!(b.quotients.len(), k);
        }
    }

    #[test]
    fn bound_scales_homogeneously() {
        let poly = regular_polygon(9, 1.0).unwrap();
        for p in [2.0, 3.0] {
            let b1 = certified_upper_bound(&poly, p, 3, 0.01).unwrap().estimate.value;
            let t = 2.0;
            let b2 = certified_upper_bound(&poly.scaled(t).unwrap(), p, 3, 0.02).unwrap().estimate.value;
            assert!((b2 - t.powf(1.0 - p) * b1).abs() <= 1e-9 * b2, "{b1} {b2}");
        }
    }

    #[test]
    fn supercritical_majorant() {
        let poly = regular_polygon(5, 1.0).unwrap();
        for k in [2, 3] {
            let b = certified_upper_bound(&poly, 4.0, k, 0.01).unwrap();
            let m = b.majorant.unwrap();
            assert!(b.quotients.iter().all(|q| *q <= m));
        }
    }
}
