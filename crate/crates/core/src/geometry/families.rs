//! Generators for the domain families used in the experiments.

use std::f64::consts::PI;

use serde::Serialize;

use super::{Point, Polygon};
use crate::error::{argument, Result};

pub fn unit_square() -> Polygon {
    Polygon::from_xy(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]).expect("unit square")
}

/// Regular `n`-gon inscribed in the circle of the given radius around the origin.
pub fn regular_polygon(n: usize, radius: f64) -> Result<Polygon> {
    if n < 3 {
        return Err(argument(format!("regular polygon needs n >= 3, got {n}")));
    }
    if !(radius > 0.0) {
        return Err(argument(format!("radius must be positive, got {radius}")));
    }
    let vertices = (0..n)
        .map(|i| {
            let t = 2.0 * PI * i as f64 / n as f64;
            Point::new(radius * t.cos(), radius * t.sin())
        })
        .collect();
    Polygon::new(vertices)
}

/// How the tooth exponent `beta` of a spiked square is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpikeSpec {
    /// `beta = (3p - 4) / (p - 2)`, the choice that makes the counterexample
    /// work for the exponent `p > 2`.
    PresetP(f64),
    /// Explicit `beta > 2`.
    Beta(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpikedSquareParams {
    pub j: u32,
    pub beta: f64,
    /// `beta - 1`; tooth height is `j^-alpha`.
    pub alpha: f64,
    /// Number of teeth, `floor(j^(beta-1)) + 1`.
    pub m: u32,
}

impl SpikedSquareParams {
    pub fn side(&self) -> f64 {
        1.0 / self.j as f64
    }

    pub fn tooth_base(&self) -> f64 {
        1.0 / (self.j as f64 * self.m as f64)
    }

    pub fn tooth_height(&self) -> f64 {
        (self.j as f64).powf(-self.alpha)
    }

    /// Centre abscissae `c_i = (i + 1/2) / (j m)` of the teeth.
    pub fn tooth_centers(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| (i as f64 + 0.5) * self.tooth_base())
            .collect()
    }

    /// Closed-form area: square plus `m` triangles.
    pub fn area(&self) -> f64 {
        let s = self.side();
        s * s + self.m as f64 * 0.5 * self.tooth_base() * self.tooth_height()
    }

    /// Closed-form perimeter: three square sides plus the lateral tooth edges.
    pub fn perimeter(&self) -> f64 {
        let half = 0.5 * self.tooth_base();
        let h = self.tooth_height();
        3.0 * self.side() + self.m as f64 * 2.0 * (h * h + half * half).sqrt()
    }
}

#[derive(Debug, Clone)]
pub struct SpikedSquare {
    pub polygon: Polygon,
    pub params: SpikedSquareParams,
}

/// Square of side `1/j` whose top edge carries `m(j)` isosceles teeth of base
/// `1/(j m)` and height `j^-alpha`.
pub fn make_spiked_square(spec: SpikeSpec, j: u32) -> Result<SpikedSquare> {
    if j < 1 {
        return Err(argument("j must be a positive integer"));
    }
    let beta = match spec {
        SpikeSpec::PresetP(p) => {
            if !(p > 2.0) {
                return Err(argument(format!(
                    "preset beta undefined for p <= n (p = {p}, n = 2)"
                )));
            }
            (3.0 * p - 4.0) / (p - 2.0)
        }
        SpikeSpec::Beta(b) => {
            if !(b > 2.0) {
                return Err(argument(format!("beta must exceed n = 2, got {b}")));
            }
            b
        }
    };
    let alpha = beta - 1.0;
    let m = robust_floor((j as f64).powf(beta - 1.0)) + 1;
    let m = u32::try_from(m).map_err(|_| argument("tooth count overflows"))?;
    let params = SpikedSquareParams { j, beta, alpha, m };

    let s = params.side();
    let h = params.tooth_height();
    let jm = j as f64 * m as f64;
    let mut v = Vec::with_capacity(2 * m as usize + 3);
    v.push(Point::new(0.0, 0.0));
    v.push(Point::new(s, 0.0));
    v.push(Point::new(s, s));
    for i in (0..m).rev() {
        v.push(Point::new((i as f64 + 0.5) / jm, s + h));
        v.push(Point::new(i as f64 / jm, s));
    }
    Ok(SpikedSquare {
        polygon: Polygon::new(v)?,
        params,
    })
}

/// `floor(x)`, snapping values within 1e-9 relative of an integer.
fn robust_floor(x: f64) -> u64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.max(1.0) {
        r as u64
    } else {
        x.floor() as u64
    }
}

/// Two unit squares joined by a channel of length `length` and width `eps`,
/// centred on the facing sides.
pub fn make_dumbbell(eps: f64, length: f64) -> Result<Polygon> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(argument(format!("channel width must lie in (0, 1), got {eps}")));
    }
    if !(length > 0.0) {
        return Err(argument(format!("channel length must be positive, got {length}")));
    }
    let lo = 0.5 - 0.5 * eps;
    let hi = 0.5 + 0.5 * eps;
    let x1 = 1.0 + length;
    let x2 = 2.0 + length;
    Polygon::from_xy(&[
        [0.0, 0.0],
        [1.0, 0.0],
        [1.0, lo],
        [x1, lo],
        [x1, 0.0],
        [x2, 0.0],
        [x2, 1.0],
        [x1, 1.0],
        [x1, hi],
        [1.0, hi],
        [1.0, 1.0],
        [0.0, 1.0],
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spiked_j1_p4() {
        let s = make_spiked_square(SpikeSpec::PresetP(4.0), 1).unwrap();
        assert_eq!(s.params.beta, 4.0);
        assert_eq!(s.params.alpha, 3.0);
        assert_eq!(s.params.m, 2);
        assert_eq!(s.polygon.len(), 7);
        let m = s.polygon.metrics();
        assert!((m.area - 1.5).abs() < 1e-15);
        let expected = 3.0 + 4.0 * (1.0f64 / 16.0 + 1.0).sqrt();
        assert!((m.perimeter - expected).abs() < 1e-14);
        assert!((m.perimeter - 7.1231).abs() < 1e-4);
    }

    #[test]
    fn spiked_j2_p4() {
        let s = make_spiked_square(SpikeSpec::PresetP(4.0), 2).unwrap();
        assert_eq!(s.params.m, 9);
        assert_eq!(s.polygon.len(), 21);
        assert!((s.params.tooth_base() - 1.0 / 18.0).abs() < 1e-16);
        assert!((s.params.tooth_height() - 1.0 / 8.0).abs() < 1e-16);
    }

    #[test]
    fn spiked_closed_forms_match_measured() {
        for p in [3.0, 4.0, 5.0] {
            for j in 1..=4 {
                let s = make_spiked_square(SpikeSpec::PresetP(p), j).unwrap();
                let m = s.polygon.metrics();
                assert!((m.perimeter - s.params.perimeter()).abs() <= 1e-12 * m.perimeter);
                assert!((m.area - s.params.area()).abs() <= 1e-12 * m.area);
                assert_eq!(s.polygon.len(), 2 * s.params.m as usize + 3);
                // Closed form of the lateral surface of one tooth.
                let jm = j as f64 * s.params.m as f64;
                let lateral = 2.0
                    * ((j as f64).powf(-2.0 * s.params.alpha) + 1.0 / (4.0 * jm * jm)).sqrt();
                let teeth = m.perimeter - 3.0 / j as f64;
                assert!((teeth - s.params.m as f64 * lateral).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn spiked_errors() {
        assert!(make_spiked_square(SpikeSpec::PresetP(2.0), 1).is_err());
        assert!(make_spiked_square(SpikeSpec::PresetP(1.5), 1).is_err());
        assert!(make_spiked_square(SpikeSpec::Beta(2.0), 1).is_err());
        assert!(make_spiked_square(SpikeSpec::PresetP(4.0), 0).is_err());
        let b = make_spiked_square(SpikeSpec::Beta(3.0), 3).unwrap();
        assert_eq!(b.params.m, 10);
    }

    #[test]
    fn preset_beta_formula() {
        // General-n formula (p - n(n + p - np)) / (p - n) at n = 2.
        for p in [2.5, 3.0, 4.0, 7.0] {
            let n = 2.0;
            let general = (p - n * (n + p - n * p)) / (p - n);
            let s = make_spiked_square(SpikeSpec::PresetP(p), 1).unwrap();
            assert!((s.params.beta - general).abs() < 1e-12);
            // (p - n) beta - n (p - n) = p (n - 1)^2
            assert!(((p - n) * general - n * (p - n) - p).abs() < 1e-12);
        }
    }

    #[test]
    fn dumbbell_closed_forms() {
        let d = make_dumbbell(0.1, 1.0).unwrap();
        assert_eq!(d.len(), 12);
        assert!((d.area() - 2.1).abs() < 1e-14);
        assert!((d.perimeter() - 9.8).abs() < 1e-14);
        assert!(make_dumbbell(0.5, 0.5).is_ok());
        assert!(make_dumbbell(1.2, 1.0).is_err());
        assert!(make_dumbbell(0.0, 1.0).is_err());
        assert!(make_dumbbell(0.5, 0.0).is_err());
    }
}
