//! Upper-bound machinery: the boundary measure, its concentration function,
//! annuli packings with disjoint doubles, plateau test functions, mesh-free
//! certified bounds and the closed-form right-hand sides.
//!
//! The packing constant `c_n` is a free parameter (default 1.0). Every
//! closed-form value is therefore stated modulo its calibration.

mod certified;
mod measure;
mod packing;

use std::fmt;

use serde::Serialize;

use crate::error::{argument, Error, Result};
use crate::fem::{NodalField, P1Space};
use crate::geometry::{distortion, DistortionSearch, Polygon, OMEGA_1, OMEGA_2};
use crate::mesh::TriangleMesh;

pub use certified::{
    certified_upper_bound, default_resolution, profile_boundary_norm, profile_energy, profile_rayleigh,
    CertifiedBound,
};
pub use measure::{
    build_boundary_measure, concentration, inner_radius_threshold, share_for, BoundaryMeasure, CenterSampling,
    MeasurePoint,
};
pub use packing::{annuli_pack, annulus_test_function_profile, Annulus, Packing};

/// Constants of the planar bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundConstants {
    /// Packing constant; uncalibrated.
    pub c_n: f64,
    pub n: usize,
    pub omega_n: f64,
    pub omega_n_minus_1: f64,
}

impl Default for BoundConstants {
    fn default() -> Self {
        BoundConstants {
            c_n: 1.0,
            n: 2,
            omega_n: OMEGA_2,
            omega_n_minus_1: OMEGA_1,
        }
    }
}

impl BoundConstants {
    pub fn new(c_n: f64) -> Result<Self> {
        let c = BoundConstants {
            c_n,
            ..BoundConstants::default()
        };
        c.check()?;
        Ok(c)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !(self.c_n > 0.0) || !self.c_n.is_finite() {
            return Err(argument(format!("packing constant c_n must be positive, got {}", self.c_n)));
        }
        Ok(())
    }

    /// `C_n = (2n ω_n)^{1/n}`.
    pub fn big_c_n(&self) -> f64 {
        let n = self.n as f64;
        (2.0 * n * self.omega_n).powf(1.0 / n)
    }

    /// `C_{p,n} = 2 c_n^{-1} C_n^p`.
    pub fn c_pn(&self, p: f64) -> f64 {
        2.0 / self.c_n * self.big_c_n().powf(p)
    }

    /// `C'_{p,n} = 2^{(n(2p-2n+3)-2-p)/(n-1)} c_n^{-(p-1)/(n-1)} n ω_n`.
    pub fn c_prime_pn(&self, p: f64) -> f64 {
        let n = self.n as f64;
        let e = (n * (2.0 * p - 2.0 * n + 3.0) - 2.0 - p) / (n - 1.0);
        2f64.powf(e) * self.c_n.powf(-(p - 1.0) / (n - 1.0)) * n * self.omega_n
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `p ≤ n`: isoperimetric form.
    #[serde(rename = "p<=n")]
    Isoperimetric,
    /// `p > n`: distortion form, evaluated at a sampled distortion.
    #[serde(rename = "p>n")]
    Distortion,
}

impl Branch {
    pub fn tag(self) -> &'static str {
        match self {
            Branch::Isoperimetric => "p<=n",
            Branch::Distortion => "p>n",
        }
    }
}

impl fmt::Display for Branch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoreticalBound {
    /// Upper bound for σ_{p,k} itself (the perimeter power is divided out).
    pub value: f64,
    pub branch: Branch,
    pub isoperimetric_ratio: f64,
    pub perimeter: f64,
    /// The distortion used on the `p > n` branch.
    pub distortion: Option<f64>,
}

fn check_pk(p: f64, k: usize) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(argument(format!("exponent p must exceed 1, got {p}")));
    }
    if k == 0 {
        return Err(argument("k must be at least 1"));
    }
    Ok(())
}

/// Closed-form bound; for `p > 2` the distortion comes from the default
/// sampled search, a lower bound of the true supremum.
pub fn theoretical_rhs(poly: &Polygon, p: f64, k: usize, constants: &BoundConstants) -> Result<TheoreticalBound> {
    check_pk(p, k)?;
    constants.check()?;
    if p > constants.n as f64 {
        let d = distortion(poly, DistortionSearch::default())?.value;
        theoretical_rhs_with_distortion(poly, p, k, constants, d)
    } else {
        theoretical_rhs_with_distortion(poly, p, k, constants, f64::NAN)
    }
}

/// As [`theoretical_rhs`] with an explicit distortion (ignored for `p ≤ n`).
pub fn theoretical_rhs_with_distortion(
    poly: &Polygon,
    p: f64,
    k: usize,
    constants: &BoundConstants,
    d: f64,
) -> Result<TheoreticalBound> {
    check_pk(p, k)?;
    constants.check()?;
    let n = constants.n as f64;
    let perimeter = poly.perimeter();
    let iso = perimeter / poly.area().powf((n - 1.0) / n);
    let kf = k as f64;
    if p <= n {
        let value = constants.c_pn(p) * kf.powf(p / n)
            / (iso.powf((n - p) / (n - 1.0)) * perimeter.powf((p - 1.0) / (n - 1.0)));
        Ok(TheoreticalBound {
            value,
            branch: Branch::Isoperimetric,
            isoperimetric_ratio: iso,
            perimeter,
            distortion: None,
        })
    } else {
        if !(d > 0.0) || !d.is_finite() {
            return Err(argument(format!("distortion must be positive, got {d}")));
        }
        let value = constants.c_prime_pn(p)
            * d.powf((p - n) / (n - 1.0))
            * (kf / perimeter).powf((p - 1.0) / (n - 1.0));
        Ok(TheoreticalBound {
            value,
            branch: Branch::Distortion,
            isoperimetric_ratio: iso,
            perimeter,
            distortion: Some(d),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Oscillation {
    pub osc: f64,
    pub grad_p_norm: f64,
    pub ratio: f64,
}

/// `osc_D(u) / ((diam D)^2/|D| · (diam D)^{1-2/p} · ‖∇u‖_{L^p(D)})` over the
/// nodes in the convex set `D` and the triangles with all vertices in `D`.
pub fn oscillation_diagnostic(mesh: &TriangleMesh, u: &NodalField, d: &Polygon, p: f64) -> Result<Oscillation> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(argument(format!("oscillation diagnostic needs p > 2, got {p}")));
    }
    if !d.is_convex() {
        return Err(Error::Precondition("oscillation set D must be convex".into()));
    }
    let values = u.values();
    if values.len() != mesh.node_count() {
        return Err(Error::Validation("field does not match the mesh".into()));
    }
    let inside: Vec<bool> = mesh.nodes().iter().map(|&q| d.contains(q)).collect();
    let (lo, hi) = values
        .iter()
        .zip(&inside)
        .filter(|(_, &i)| i)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (&v, _)| (lo.min(v), hi.max(v)));
    if lo > hi {
        return Err(Error::Precondition("no mesh node lies in D".into()));
    }
    let tris = mesh.triangles();
    let keep = |t: usize| tris[t].iter().all(|&v| inside[v]);
    if !(0..tris.len()).any(keep) {
        return Err(Error::Precondition("no mesh triangle lies in D".into()));
    }
    let space = P1Space::new(mesh);
    let grad_p_norm = space.energy_on(values, p, keep)?.powf(1.0 / p);
    let osc = hi - lo;
    let diam = d.diameter();
    let scale = diam * diam / d.area() * diam.powf(1.0 - 2.0 / p) * grad_p_norm;
    let ratio = if osc == 0.0 { 0.0 } else { osc / scale };
    Ok(Oscillation {
        osc,
        grad_p_norm,
        ratio,
    })
}

pub const BOUND_CSV_HEADER: &str = "domain,p,k,kind,value,achieved_c,D_sampled,I,perimeter";

/// One row of a bound report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundRow {
    pub domain: String,
    pub p: f64,
    pub k: usize,
    pub kind: crate::spectrum::EstimateKind,
    pub value: f64,
    pub achieved_c: f64,
    pub d_sampled: f64,
    pub iso: f64,
    pub perimeter: f64,
}

impl BoundRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.domain,
            self.p,
            self.k,
            self.kind,
            self.value,
            self.achieved_c,
            self.d_sampled,
            self.iso,
            self.perimeter
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::unit_square;
    use crate::mesh::triangulate;
    use std::f64::consts::PI;

    #[test]
    fn constants() {
        let c = BoundConstants::default();
        assert!((c.big_c_n() - (4.0 * PI).sqrt()).abs() < 1e-14);
        assert!((c.c_pn(2.0) - 8.0 * PI).abs() < 1e-12);
        assert!((c.c_prime_pn(4.0) - 256.0 * 2.0 * PI).abs() < 1e-9);
        let half = BoundConstants::new(0.5).unwrap();
        assert!((half.c_prime_pn(4.0) - 256.0 * 8.0 * 2.0 * PI).abs() < 1e-8);
        assert!(BoundConstants::new(0.0).is_err());
        assert!(BoundConstants::new(-1.0).is_err());
    }

    #[test]
    fn square_p2_rhs() {
        let sq = unit_square();
        let c = BoundConstants::default();
        for k in 1..6 {
            let b = theoretical_rhs(&sq, 2.0, k, &c).unwrap();
            assert!((b.value - 2.0 * PI * k as f64).abs() < 1e-12);
            assert_eq!(b.branch, Branch::Isoperimetric);
        }
        let bad = BoundConstants {
            c_n: 0.0,
            ..c
        };
        assert!(theoretical_rhs(&sq, 2.0, 2, &bad).is_err());
    }

    #[test]
    fn p2_rhs_ignores_isoperimetry() {
        // Same perimeter, different area.
        let c = BoundConstants::default();
        let sq = unit_square();
        let rect = Polygon::from_xy(&[[0.0, 0.0], [1.5, 0.0], [1.5, 0.5], [0.0, 0.5]]).unwrap();
        let a = theoretical_rhs(&sq, 2.0, 3, &c).unwrap().value;
        let b = theoretical_rhs(&rect, 2.0, 3, &c).unwrap().value;
        assert!((a - b).abs() < 1e-12);
        let a = theoretical_rhs(&sq, 1.5, 3, &c).unwrap().value;
        let b = theoretical_rhs(&rect, 1.5, 3, &c).unwrap().value;
        assert!(a != b);
    }

    #[test]
    fn p4_rhs_uses_distortion() {
        let sq = unit_square();
        let c = BoundConstants::default();
        let b = theoretical_rhs(&sq, 4.0, 2, &c).unwrap();
        assert_eq!(b.branch, Branch::Distortion);
        let d = b.distortion.unwrap();
        let expected = 256.0 * 2.0 * PI * d * d * (2.0f64 / 4.0).powi(3);
        assert!((b.value - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn oscillation_of_linear_field() {
        let sq = unit_square();
        let mesh = triangulate(&sq, 0.1).unwrap();
        let u = NodalField::from_fn(&mesh, |q| q.x).unwrap();
        let o = oscillation_diagnostic(&mesh, &u, &sq, 4.0).unwrap();
        assert!((o.osc - 1.0).abs() < 1e-12);
        assert!((o.grad_p_norm - 1.0).abs() < 1e-12);
        assert!((o.ratio - 2f64.powf(-1.25)).abs() < 1e-12);
        let c = NodalField::constant(&mesh, 3.0).unwrap();
        let o = oscillation_diagnostic(&mesh, &c, &sq, 4.0).unwrap();
        assert_eq!((o.osc, o.ratio), (0.0, 0.0));
    }

    #[test]
    fn oscillation_preconditions() {
        let sq = unit_square();
        let mesh = triangulate(&sq, 0.2).unwrap();
        let u = NodalField::from_fn(&mesh, |q| q.x * q.y).unwrap();
        let l = Polygon::from_xy(&[[0.0, 0.0], [1.0, 0.0], [1.0, 0.5], [0.5, 0.5], [0.5, 1.0], [0.0, 1.0]]).unwrap();
        assert!(matches!(oscillation_diagnostic(&mesh, &u, &l, 4.0), Err(Error::Precondition(_))));
        assert!(oscillation_diagnostic(&mesh, &u, &sq, 2.0).is_err());
        let o = oscillation_diagnostic(&mesh, &u, &sq, 3.0).unwrap();
        assert!(o.ratio > 0.0 && o.ratio.is_finite());
    }

    #[test]
    fn bound_row_csv() {
        let row = BoundRow {
            domain: "square".into(),
            p: 2.0,
            k: 3,
            kind: crate::spectrum::EstimateKind::CertifiedUpper,
            value: 12.5,
            achieved_c: 0.5,
            d_sampled: 1.0,
            iso: 4.0,
            perimeter: 4.0,
        };
        assert_eq!(row.csv(), "square,2,3,certified-upper,12.5,0.5,1,4,4");
    }
}
