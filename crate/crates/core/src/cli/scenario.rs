//! Scenario runs: every (domain, p, k) cell produces one row per estimate
//! kind, written in configuration order.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use super::config::{DomainSpec, ScenarioConfig};
use super::experiments::{build_mesh, status_of};
use crate::bounds::{certified_upper_bound, default_resolution, theoretical_rhs_with_distortion, BoundConstants};
use crate::error::Result;
use crate::geometry::{distortion, DistortionSearch, Polygon};
use crate::spectrum::{steklov_sigma2_p, steklov_spectrum_p2, DescentOptions, EstimateKind, SpectralEstimate};

pub const RESULTS_CSV_HEADER: &str =
    "domain,p,k,kind,value,normalized,residual,iterations,mesh_nodes,achieved_c,D_sampled,I,perimeter,status";

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRow {
    pub domain: String,
    pub p: f64,
    pub k: usize,
    pub kind: EstimateKind,
    pub value: Option<f64>,
    /// `|∂Ω|^{p-1} · value`.
    pub normalized: Option<f64>,
    pub residual: Option<f64>,
    pub iterations: Option<usize>,
    pub mesh_nodes: Option<usize>,
    pub achieved_c: Option<f64>,
    pub d_sampled: f64,
    pub iso: f64,
    pub perimeter: f64,
    pub status: String,
}

fn cell<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

impl ScenarioRow {
    pub fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            self.domain,
            self.p,
            self.k,
            self.kind,
            cell(&self.value),
            cell(&self.normalized),
            cell(&self.residual),
            cell(&self.iterations),
            cell(&self.mesh_nodes),
            cell(&self.achieved_c),
            self.d_sampled,
            self.iso,
            self.perimeter,
            self.status
        )
    }

    pub fn ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioReport {
    pub rows: Vec<ScenarioRow>,
    pub csv_path: PathBuf,
    pub svg_path: Option<PathBuf>,
}

impl ScenarioReport {
    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| !r.ok()).count()
    }
}

pub fn rows_to_csv(rows: &[ScenarioRow]) -> String {
    let mut out = String::from(RESULTS_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&r.csv());
        out.push('\n');
    }
    out
}

struct DomainContext {
    id: String,
    poly: Polygon,
    d: f64,
    iso: f64,
    perimeter: f64,
}

impl DomainContext {
    fn row(&self, p: f64, k: usize, kind: EstimateKind) -> ScenarioRow {
        ScenarioRow {
            domain: self.id.clone(),
            p,
            k,
            kind,
            value: None,
            normalized: None,
            residual: None,
            iterations: None,
            mesh_nodes: None,
            achieved_c: None,
            d_sampled: self.d,
            iso: self.iso,
            perimeter: self.perimeter,
            status: "ok".into(),
        }
    }

    fn estimate_row(&self, p: f64, k: usize, kind: EstimateKind, est: Result<(&SpectralEstimate, usize)>) -> ScenarioRow {
        let mut row = self.row(p, k, kind);
        match est {
            Ok((e, nodes)) => {
                row.value = Some(e.value);
                row.normalized = Some(self.perimeter.powf(p - 1.0) * e.value);
                row.residual = Some(e.residual);
                row.iterations = Some(e.iterations);
                row.mesh_nodes = Some(nodes);
                if !e.stationary {
                    row.status = "failed: descent did not reach the stationarity tolerance".into();
                }
            }
            Err(e) => row.status = status_of(&e),
        }
        row
    }
}

/// All rows for one domain: the p = 2 oracle or descent rows, then certified
/// and closed-form rows, for every `(p, k)` in configuration order.
fn domain_rows(spec: &DomainSpec, config: &ScenarioConfig, seed: u64) -> Vec<ScenarioRow> {
    let id = spec.to_string();
    let poly = match spec.polygon() {
        Ok(p) => p,
        Err(e) => {
            return config
                .p
                .iter()
                .flat_map(|&p| config.k.iter().map(move |&k| (p, k)))
                .map(|(p, k)| ScenarioRow {
                    domain: id.clone(),
                    p,
                    k,
                    kind: EstimateKind::CertifiedUpper,
                    value: None,
                    normalized: None,
                    residual: None,
                    iterations: None,
                    mesh_nodes: None,
                    achieved_c: None,
                    d_sampled: f64::NAN,
                    iso: f64::NAN,
                    perimeter: f64::NAN,
                    status: status_of(&e),
                })
                .collect();
        }
    };
    let m = poly.metrics();
    let d = distortion(&poly, DistortionSearch::default()).map(|d| d.value).unwrap_or(f64::NAN);
    let ctx = DomainContext {
        id,
        d,
        iso: m.iso_ratio,
        perimeter: m.perimeter,
        poly,
    };

    let mesh = spec
        .mesh_size(config.h_max)
        .and_then(|h| build_mesh(&ctx.poly, h, config.refinements));
    let kmax = config.k.iter().copied().max().unwrap_or(1);
    let oracle = config.p.contains(&2.0).then(|| {
        let mesh = mesh.as_ref().map_err(clone_error)?;
        let nb = mesh.boundary_edges().len();
        steklov_spectrum_p2(mesh, kmax.min(nb)).map(|s| (s, mesh.node_count()))
    });
    let descent_opts = DescentOptions {
        starts: config.descent_starts,
        seed,
        ..DescentOptions::default()
    };

    let constants = BoundConstants::new(config.c_n);
    let mut rows = Vec::new();
    for &p in &config.p {
        let descent = (p != 2.0 && config.k.contains(&2)).then(|| {
            let mesh = mesh.as_ref().map_err(clone_error)?;
            steklov_sigma2_p(mesh, p, &descent_opts).map(|e| (e, mesh.node_count()))
        });
        let bounds: Vec<(Result<_>, Result<_>)> = config
            .k
            .par_iter()
            .map(|&k| {
                let res = config.measure_resolution.unwrap_or_else(|| default_resolution(&ctx.poly, k));
                let cert = certified_upper_bound(&ctx.poly, p, k, res);
                let theo = constants
                    .as_ref()
                    .map_err(clone_error)
                    .and_then(|c| theoretical_rhs_with_distortion(&ctx.poly, p, k, c, ctx.d));
                (cert, theo)
            })
            .collect();
        for (&k, (cert, theo)) in config.k.iter().zip(bounds) {
            if p == 2.0 {
                let est = match oracle.as_ref().expect("oracle requested") {
                    Ok((spec, nodes)) => spec
                        .get(k - 1)
                        .map(|e| (e, *nodes))
                        .ok_or_else(|| crate::error::argument(format!("k = {k} exceeds the boundary node count"))),
                    Err(e) => Err(clone_error(e)),
                };
                rows.push(ctx.estimate_row(p, k, EstimateKind::OracleP2, est));
            } else if k == 2 {
                let est = match descent.as_ref().expect("descent requested") {
                    Ok((e, nodes)) => Ok((e, *nodes)),
                    Err(e) => Err(clone_error(e)),
                };
                rows.push(ctx.estimate_row(p, k, EstimateKind::Descent, est));
            }
            let mut row = ctx.row(p, k, EstimateKind::CertifiedUpper);
            match cert {
                Ok(b) => {
                    row.value = Some(b.estimate.value);
                    row.normalized = Some(ctx.perimeter.powf(p - 1.0) * b.estimate.value);
                    row.achieved_c = Some(b.achieved_c);
                }
                Err(e) => row.status = status_of(&e),
            }
            rows.push(row);
            let mut row = ctx.row(p, k, EstimateKind::TheoreticalUpper);
            match theo {
                Ok(t) => {
                    row.value = Some(t.value);
                    row.normalized = Some(ctx.perimeter.powf(p - 1.0) * t.value);
                    row.achieved_c = Some(config.c_n);
                }
                Err(e) => row.status = status_of(&e),
            }
            rows.push(row);
        }
    }
    rows
}

/// Errors are not `Clone`; shared failures are re-raised by message.
fn clone_error(e: &crate::Error) -> crate::Error {
    match e {
        crate::Error::Resource {
            message,
            estimated_elements,
        } => crate::Error::Resource {
            message: message.clone(),
            estimated_elements: *estimated_elements,
        },
        other => crate::Error::Numerical(other.to_string()),
    }
}

/// Runs every cell and writes `results.csv` (and `results.svg` when asked)
/// into `out_dir`. Failed cells are kept as flagged rows.
pub fn run_scenario(config: &ScenarioConfig, out_dir: &Path, seed: u64, svg: bool) -> Result<ScenarioReport> {
    config.validate()?;
    let specs = config.domain_specs()?;
    let rows: Vec<ScenarioRow> = specs.iter().flat_map(|s| domain_rows(s, config, seed)).collect();
    std::fs::create_dir_all(out_dir)?;
    let csv_path = out_dir.join("results.csv");
    std::fs::write(&csv_path, rows_to_csv(&rows))?;
    let svg_path = if svg || config.svg {
        let path = out_dir.join("results.svg");
        std::fs::write(&path, render_svg(&rows))?;
        Some(path)
    } else {
        None
    };
    Ok(ScenarioReport {
        rows,
        csv_path,
        svg_path,
    })
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line plot of `log10(normalized)` against k, one polyline per
/// (domain, p, kind) series.
pub fn render_svg(rows: &[ScenarioRow]) -> String {
    let (w, h, margin) = (720.0, 480.0, 60.0);
    let mut series: Vec<(String, Vec<(f64, f64)>)> = Vec::new();
    for r in rows {
        let Some(v) = r.normalized.filter(|v| *v > 0.0 && v.is_finite()) else {
            continue;
        };
        let name = format!("{} p={} {}", r.domain, r.p, r.kind);
        let pt = (r.k as f64, v.log10());
        match series.iter_mut().find(|(n, _)| *n == name) {
            Some((_, pts)) => pts.push(pt),
            None => series.push((name, vec![pt])),
        }
    }
    let all = series.iter().flat_map(|(_, p)| p.iter());
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in all {
        x0 = x0.min(x);
        x1 = x1.max(x);
        y0 = y0.min(y);
        y1 = y1.max(y);
    }
    if !(x1 > x0) {
        x0 -= 1.0;
        x1 += 1.0;
    }
    if !(y1 > y0) {
        y0 -= 1.0;
        y1 += 1.0;
    }
    let sx = |x: f64| margin + (x - x0) / (x1 - x0) * (w - 2.0 * margin);
    let sy = |y: f64| h - margin - (y - y0) / (y1 - y0) * (h - 2.0 * margin);

    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(
        s,
        r#"<line x1="{m}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/><line x1="{m}" y1="{b}" x2="{m}" y2="{m}" stroke="black"/>"#,
        m = margin,
        b = h - margin,
        r = w - margin
    );
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="12" text-anchor="middle">k</text>"#, w / 2.0, h - 20.0);
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" font-size="12" transform="rotate(-90 16 {})" text-anchor="middle">log10 normalized value</text>"#,
        h / 2.0,
        h / 2.0
    );
    for (label, v) in [(x0, sx(x0)), (x1, sx(x1))] {
        let _ = writeln!(s, r#"<text x="{v:.2}" y="{:.2}" font-size="10" text-anchor="middle">{label}</text>"#, h - margin + 14.0);
    }
    for (label, v) in [(y0, sy(y0)), (y1, sy(y1))] {
        let _ = writeln!(s, r#"<text x="{:.2}" y="{v:.2}" font-size="10" text-anchor="end">{label:.3}</text>"#, margin - 4.0);
    }
    for (i, (name, pts)) in series.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let path: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, path.join(" "));
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{:.2}" font-size="10" fill="{color}">{name}</text>"#,
            margin + 8.0,
            margin + 12.0 * i as f64
        );
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_config() -> ScenarioConfig {
        ScenarioConfig::from_json(r#"{"domains": ["square"], "p": [2], "k": [1, 2, 3, 4, 5], "h_max": 0.125}"#).unwrap()
    }

    #[test]
    fn square_rows_ordered_and_certified() {
        let dir = tempfile::tempdir().unwrap();
        let report = run_scenario(&square_config(), dir.path(), 0, true).unwrap();
        assert_eq!(report.failed(), 0);
        let oracle: Vec<f64> = report.rows.iter().filter(|r| r.kind == EstimateKind::OracleP2).map(|r| r.value.unwrap()).collect();
        let cert: Vec<f64> = report.rows.iter().filter(|r| r.kind == EstimateKind::CertifiedUpper).map(|r| r.value.unwrap()).collect();
        assert_eq!(oracle.len(), 5);
        assert!(oracle[0] >= 0.0 && oracle.windows(2).all(|w| w[0] <= w[1]));
        for (c, o) in cert.iter().zip(&oracle) {
            assert!(c >= o);
        }
        let svg = std::fs::read_to_string(report.svg_path.unwrap()).unwrap();
        assert!(svg.starts_with("<svg") && svg.contains("polyline"));
    }

    #[test]
    fn rerun_is_byte_identical() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let config = ScenarioConfig::from_json(r#"{"domains": ["regular:6", "spiked:1:4"], "p": [2, 3], "k": [2, 3], "h_max": 0.2}"#).unwrap();
        run_scenario(&config, a.path(), 7, true).unwrap();
        run_scenario(&config, b.path(), 7, true).unwrap();
        for f in ["results.csv", "results.svg"] {
            assert_eq!(std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        }
    }

    #[test]
    fn failed_cells_are_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let config = ScenarioConfig::from_json(r#"{"domains": ["file:/nonexistent/poly.json", "square"], "p": [2], "k": [2], "h_max": 0.25}"#).unwrap();
        let report = run_scenario(&config, dir.path(), 0, false).unwrap();
        assert!(report.failed() >= 1);
        assert!(report.rows.iter().any(|r| r.domain == "square" && r.ok()));
        let text = std::fs::read_to_string(&report.csv_path).unwrap();
        assert!(text.starts_with(RESULTS_CSV_HEADER));
        assert!(text.lines().skip(1).all(|l| l.split(',').count() == 14));
    }
}
