//! The spiked-square growth sweep and the Weyl diagnostic.

use serde::Serialize;

use crate::error::{argument, Error, Result};
use crate::geometry::{distortion, make_spiked_square, DistortionSearch, Polygon, SpikeSpec};
use crate::mesh::{triangulate, uniform_refine, TriangleMesh};
use crate::numeric::fit_slope;
use crate::spectrum::{steklov_sigma2_p, steklov_spectrum_p2, DescentOptions};

/// `triangulate` followed by `levels` uniform refinements.
pub fn build_mesh(poly: &Polygon, h: f64, levels: usize) -> Result<TriangleMesh> {
    let mut mesh = triangulate(poly, h)?;
    for _ in 0..levels {
        mesh = uniform_refine(&mesh)?;
    }
    Ok(mesh)
}

/// Failure text for a CSV cell: no commas or newlines.
pub(crate) fn status_of(e: &Error) -> String {
    let msg = match e {
        Error::Resource {
            estimated_elements, ..
        } => format!("failed: mesh needs about {estimated_elements} elements"),
        other => format!("failed: {other}"),
    };
    msg.replace([',', '\n'], ";")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepOptions {
    /// Mesh size is `min(h_max / j, tooth base)`.
    pub h_max: f64,
    pub descent: DescentOptions,
}

impl Default for SweepOptions {
    fn default() -> Self {
        SweepOptions {
            h_max: 0.1,
            descent: DescentOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub j: u32,
    pub beta: f64,
    pub teeth: u32,
    pub h: f64,
    pub mesh_nodes: usize,
    pub sigma: f64,
    pub residual: f64,
    pub stationary: bool,
    /// `σ_{p,2} / j^{p-2}`.
    pub sigma_scaled: f64,
    pub distortion: f64,
    pub distortion_over_j: f64,
    pub perimeter: f64,
    pub area: f64,
    /// `σ_{p,2}(j^η Ω_j)`, computed on the similarity-scaled mesh.
    pub rescaled_sigma: f64,
    /// `|∂(j^η Ω_j)|`.
    pub rescaled_perimeter: f64,
    pub status: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub p: f64,
    pub eta: f64,
    pub rows: Vec<SweepRow>,
    /// Least-squares slope of `log σ` against `log j` over successful rows.
    pub slope: f64,
}

pub const SWEEP_CSV_HEADER: &str = "j,beta,teeth,h,mesh_nodes,sigma,residual,stationary,sigma_over_j_pow,D,D_over_j,perimeter,area,rescaled_sigma,rescaled_perimeter,status";

impl SweepRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.j,
            self.beta,
            self.teeth,
            self.h,
            self.mesh_nodes,
            self.sigma,
            self.residual,
            self.stationary,
            self.sigma_scaled,
            self.distortion,
            self.distortion_over_j,
            self.perimeter,
            self.area,
            self.rescaled_sigma,
            self.rescaled_perimeter,
            self.status
        )
    }

    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

impl SweepReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&r.csv());
            out.push('\n');
        }
        out
    }
}

/// σ_{p,2} on the spiked squares `Ω_j` (tooth exponent preset for `p`), their
/// distortion and measures, and the same quantities for `j^η Ω_j`.
pub fn counterexample_sweep(p: f64, j_list: &[u32], eta: f64, opts: &SweepOptions) -> Result<SweepReport> {
    if !(p > 2.0) || !p.is_finite() {
        return Err(argument(format!("the sweep needs p > 2, got {p}")));
    }
    if j_list.is_empty() || j_list.windows(2).any(|w| w[0] >= w[1]) || j_list[0] == 0 {
        return Err(argument("j list must be non-empty, positive and strictly ascending"));
    }
    let eta_max = (p - 2.0) / (p - 1.0);
    if !(eta > 0.0 && eta <= eta_max * (1.0 + 1e-12)) {
        return Err(argument(format!("eta must lie in (0, {eta_max}], got {eta}")));
    }
    if !(opts.h_max > 0.0) {
        return Err(argument("h_max must be positive"));
    }
    let mut rows = Vec::with_capacity(j_list.len());
    for &j in j_list {
        let spiked = make_spiked_square(SpikeSpec::PresetP(p), j)?;
        let poly = &spiked.polygon;
        let params = spiked.params;
        let h = (opts.h_max / j as f64).min(params.tooth_base());
        let d = distortion(poly, DistortionSearch::default())?.value;
        let t = (j as f64).powf(eta);
        let mut row = SweepRow {
            j,
            beta: params.beta,
            teeth: params.m,
            h,
            mesh_nodes: 0,
            sigma: f64::NAN,
            residual: f64::NAN,
            stationary: false,
            sigma_scaled: f64::NAN,
            distortion: d,
            distortion_over_j: d / j as f64,
            perimeter: poly.perimeter(),
            area: poly.area(),
            rescaled_sigma: f64::NAN,
            rescaled_perimeter: t * poly.perimeter(),
            status: "ok".into(),
        };
        let solved = triangulate(poly, h).and_then(|mesh| {
            let est = steklov_sigma2_p(&mesh, p, &opts.descent)?;
            let scaled = mesh.scaled(t)?;
            let rescaled = steklov_sigma2_p(&scaled, p, &opts.descent)?;
            Ok((mesh.node_count(), est, rescaled))
        });
        match solved {
            Ok((nodes, est, rescaled)) => {
                row.mesh_nodes = nodes;
                row.sigma = est.value;
                row.residual = est.residual;
                row.stationary = est.stationary;
                row.sigma_scaled = est.value / (j as f64).powf(p - 2.0);
                row.rescaled_sigma = rescaled.value;
            }
            Err(e) => row.status = status_of(&e),
        }
        rows.push(row);
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.ok())
        .map(|r| ((r.j as f64).ln(), r.sigma.ln()))
        .unzip();
    let slope = if xs.len() >= 2 { fit_slope(&xs, &ys) } else { f64::NAN };
    Ok(SweepReport { p, eta, rows, slope })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylRow {
    pub k: usize,
    pub sigma: f64,
    /// `|∂Ω| σ_{2,k} / k`.
    pub ratio: f64,
    /// The ratio one refinement level coarser, when there is one.
    pub coarse_ratio: Option<f64>,
}

impl WeylRow {
    /// Relative change of the ratio under the last refinement (0 at k = 1).
    pub fn drift(&self) -> Option<f64> {
        self.coarse_ratio.map(|c| if self.ratio == 0.0 { 0.0 } else { (self.ratio - c).abs() / self.ratio })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeylReport {
    pub perimeter: f64,
    pub mesh_nodes: usize,
    pub rows: Vec<WeylRow>,
    /// `2π / ω_1 = π`.
    pub limit: f64,
}

pub const WEYL_CSV_HEADER: &str = "k,sigma,ratio,coarse_ratio,drift,limit";

impl WeylReport {
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let mut out = String::from(WEYL_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.k,
                r.sigma,
                r.ratio,
                opt(r.coarse_ratio),
                opt(r.drift()),
                self.limit
            ));
        }
        out
    }
}

/// Normalized p = 2 eigenvalues `|∂Ω| σ_k / k` on the mesh refined `levels`
/// times, next to the same ratios one level coarser.
pub fn weyl_diagnostic(poly: &Polygon, kmax: usize, levels: usize, h: f64) -> Result<WeylReport> {
    if kmax == 0 {
        return Err(argument("kmax must be at least 1"));
    }
    let mut meshes = vec![triangulate(poly, h)?];
    for _ in 0..levels {
        let next = uniform_refine(meshes.last().expect("mesh"))?;
        meshes.push(next);
    }
    let fine = meshes.last().expect("mesh");
    let nb = fine.boundary_edges().len();
    if kmax > nb {
        return Err(argument(format!(
            "kmax = {kmax} exceeds the {nb} boundary nodes of the finest mesh"
        )));
    }
    let perimeter = poly.perimeter();
    let ratios = |mesh: &TriangleMesh| -> Result<Vec<(f64, f64)>> {
        Ok(steklov_spectrum_p2(mesh, kmax)?
            .iter()
            .map(|e| (e.value, perimeter * e.value / e.k as f64))
            .collect())
    };
    let fine_ratios = ratios(fine)?;
    let coarse = if levels > 0 && kmax <= meshes[levels - 1].boundary_edges().len() {
        Some(ratios(&meshes[levels - 1])?)
    } else {
        None
    };
    let rows = fine_ratios
        .iter()
        .enumerate()
        .map(|(i, &(sigma, ratio))| {
            // σ_1 = 0 up to rounding; its ratio is 0 by definition.
            let (sigma, ratio) = if i == 0 { (0.0, 0.0) } else { (sigma, ratio) };
            WeylRow {
                k: i + 1,
                sigma,
                ratio,
                coarse_ratio: coarse.as_ref().map(|c| if i == 0 { 0.0 } else { c[i].1 }),
            }
        })
        .collect();
    Ok(WeylReport {
        perimeter,
        mesh_nodes: fine.node_count(),
        rows,
        limit: std::f64::consts::PI,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{regular_polygon, unit_square};

    #[test]
    fn weyl_rows() {
        let poly = regular_polygon(32, 1.0).unwrap();
        let r = weyl_diagnostic(&poly, 8, 1, 0.3).unwrap();
        assert_eq!(r.rows.len(), 8);
        assert_eq!((r.rows[0].sigma, r.rows[0].ratio), (0.0, 0.0));
        for row in &r.rows[1..] {
            assert!(row.ratio > 0.0);
            // Nested P1 spaces under uniform refinement: min-max makes the fine value no larger.
            assert!(row.ratio <= row.coarse_ratio.unwrap() * (1.0 + 1e-9));
            assert!(row.drift().unwrap() < 0.25);
        }
        assert!(weyl_diagnostic(&poly, 10_000, 0, 0.3).is_err());
        assert!(weyl_diagnostic(&poly, 0, 0, 0.3).is_err());
        assert!(r.to_csv().starts_with(WEYL_CSV_HEADER));
    }

    #[test]
    fn sweep_arguments() {
        let o = SweepOptions::default();
        assert!(counterexample_sweep(2.0, &[1, 2], 0.1, &o).is_err());
        assert!(counterexample_sweep(4.0, &[2, 1], 0.5, &o).is_err());
        assert!(counterexample_sweep(4.0, &[], 0.5, &o).is_err());
        assert!(counterexample_sweep(4.0, &[1], 0.9, &o).is_err());
        assert!(counterexample_sweep(4.0, &[1], 0.0, &o).is_err());
    }

    #[test]
    fn sweep_single_row() {
        let o = SweepOptions {
            h_max: 0.2,
            descent: DescentOptions {
                starts: 1,
                ..DescentOptions::default()
            },
        };
        let r = counterexample_sweep(4.0, &[1], 2.0 / 3.0, &o).unwrap();
        let row = &r.rows[0];
        assert!(row.ok());
        assert!(row.sigma > 0.0);
        // j = 1 is fixed by the rescaling.
        assert!((row.rescaled_sigma - row.sigma).abs() <= 1e-9 * row.sigma);
        assert!(r.slope.is_nan());
        assert!(r.to_csv().lines().count() == 2);
    }

    #[test]
    fn resource_failures_are_flagged() {
        let e = triangulate(&unit_square(), 1e-9).unwrap_err();
        assert!(status_of(&e).starts_with("failed: mesh needs about"));
    }
}
