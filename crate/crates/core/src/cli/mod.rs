//! Experiment runner behind the `steklov` binary.
//!
//! Exit codes: 0 on success, 1 when some row failed, 2 for invalid input.

mod config;
mod experiments;
mod scenario;

use std::io::Write as _;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::bounds::{
    certified_upper_bound, default_resolution, theoretical_rhs, BoundConstants, BoundRow, BOUND_CSV_HEADER,
};
use crate::error::{Error, Result};
use crate::geometry::{distortion, DistortionSearch};
use crate::spectrum::{
    steklov_sigma2_p, steklov_spectrum_p2, DescentOptions, EstimateKind, SPECTRUM_CSV_HEADER,
};

pub use config::{DomainSpec, Family, ScenarioConfig};
pub use experiments::{
    build_mesh, counterexample_sweep, weyl_diagnostic, SweepOptions, SweepReport, SweepRow, WeylReport, WeylRow,
    SWEEP_CSV_HEADER, WEYL_CSV_HEADER,
};
pub use scenario::{render_svg, rows_to_csv, run_scenario, ScenarioReport, ScenarioRow, RESULTS_CSV_HEADER};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED_ROWS: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

pub const GEOMETRY_CSV_HEADER: &str = "domain,vertices,perimeter,area,I,diameter,convex,D_sampled,D_center_x,D_center_y,D_radius";

const COLUMNS_HELP: &str = "\
CSV columns
  geometry:        domain,vertices,perimeter,area,I,diameter,convex,D_sampled,D_center_x,D_center_y,D_radius
  solve:           domain,p,k,kind,value,residual,iterations,mesh_nodes
  bound:           domain,p,k,kind,value,achieved_c,D_sampled,I,perimeter
  counterexample:  j,beta,teeth,h,mesh_nodes,sigma,residual,stationary,sigma_over_j_pow,D,D_over_j,perimeter,area,rescaled_sigma,rescaled_perimeter,status
  weyl:            k,sigma,ratio,coarse_ratio,drift,limit
  scenario:        domain,p,k,kind,value,normalized,residual,iterations,mesh_nodes,achieved_c,D_sampled,I,perimeter,status

Domains: square, regular:N, spiked:J:P, dumbbell:EPS:L, file:PATH, each optionally suffixed @SCALE.
Theoretical values use the packing constant c_n (default 1.0) and hold modulo its calibration.";

#[derive(Debug, Parser)]
#[command(name = "steklov", version, about = "Steklov eigenvalues of the p-Laplacian on planar polygons", after_help = COLUMNS_HELP)]
pub struct Cli {
    /// JSON scenario file (scenario subcommand).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory; tables go to stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Also write an SVG line plot (scenario subcommand).
    #[arg(long, global = true)]
    pub svg: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// Maximum edge length before refinement.
    #[arg(long, default_value_t = 0.1)]
    pub h: f64,
    /// Uniform refinements after meshing.
    #[arg(long, default_value_t = 0)]
    pub refine: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Perimeter, area, isoperimetric ratio and sampled distortion.
    Geometry {
        #[arg(long, default_value = "square")]
        domain: String,
    },
    /// Eigenvalues: the p = 2 spectrum up to kmax, or σ_{p,2} by descent.
    Solve {
        #[arg(long, default_value = "square")]
        domain: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 5)]
        kmax: usize,
        #[command(flatten)]
        mesh: MeshArgs,
        /// Random starts besides the p = 2 eigenfunction.
        #[arg(long, default_value_t = 4)]
        starts: usize,
    },
    /// Certified and closed-form upper bounds for σ_{p,k}.
    Bound {
        #[arg(long, default_value = "square")]
        domain: String,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Boundary sub-segment length; perimeter / max(512, 128k) by default.
        #[arg(long)]
        resolution: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        c_n: f64,
    },
    /// σ_{p,2} growth on the spiked squares and their rescalings.
    Counterexample {
        #[arg(long, default_value_t = 4.0)]
        p: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        j: Vec<u32>,
        /// Rescaling exponent; (p - 2)/(p - 1) by default.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        h: f64,
        #[arg(long, default_value_t = 4)]
        starts: usize,
    },
    /// Normalized p = 2 eigenvalues |∂Ω| σ_k / k against the limit π.
    Weyl {
        #[arg(long, default_value = "regular:64")]
        domain: String,
        #[arg(long, default_value_t = 30)]
        kmax: usize,
        #[arg(long, default_value_t = 0.2)]
        h: f64,
        #[arg(long, default_value_t = 2)]
        levels: usize,
    },
    /// Runs a JSON scenario file into results.csv (and results.svg).
    Scenario,
}

/// Invalid-input errors map to exit code 2, everything else to 1.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::Argument(_) | Error::Json(_) | Error::Validation(_) | Error::NonSimple { .. } => {
            EXIT_INVALID
        }
        _ => EXIT_FAILED_ROWS,
    }
}

fn emit(out: &Option<PathBuf>, name: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), text)?;
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
        }
    }
    Ok(())
}

fn table(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut s = String::from(header);
    s.push('\n');
    for r in rows {
        s.push_str(&r);
        s.push('\n');
    }
    s
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn run(cli: &Cli) -> Result<i32> {
    let seed = cli.seed.unwrap_or(0);
    match &cli.command {
        Command::Geometry { domain } => {
            let spec: DomainSpec = domain.parse()?;
            let poly = spec.polygon()?;
            let m = poly.metrics();
            let d = distortion(&poly, DistortionSearch::default())?;
            let row = format!(
                "{spec},{},{},{},{},{},{},{},{},{},{}",
                poly.len(),
                m.perimeter,
                m.area,
                m.iso_ratio,
                poly.diameter(),
                poly.is_convex(),
                d.value,
                d.center.x,
                d.center.y,
                d.radius
            );
            emit(&cli.out, "geometry.csv", &table(GEOMETRY_CSV_HEADER, [row]))?;
            Ok(EXIT_OK)
        }
        Command::Solve {
            domain,
            p,
            kmax,
            mesh,
            starts,
        } => {
            let spec: DomainSpec = domain.parse()?;
            let poly = spec.polygon()?;
            let m = build_mesh(&poly, spec.mesh_size(mesh.h)?, mesh.refine)?;
            let estimates = if *p == 2.0 {
                steklov_spectrum_p2(&m, *kmax)?
            } else {
                let opts = DescentOptions {
                    starts: *starts,
                    seed,
                    ..DescentOptions::default()
                };
                vec![steklov_sigma2_p(&m, *p, &opts)?]
            };
            let failed = estimates.iter().any(|e| !e.stationary);
            let rows = estimates.iter().map(|e| e.csv_row(&spec.to_string(), m.node_count()));
            emit(&cli.out, "solve.csv", &table(SPECTRUM_CSV_HEADER, rows))?;
            Ok(if failed { EXIT_FAILED_ROWS } else { EXIT_OK })
        }
        Command::Bound {
            domain,
            p,
            k,
            resolution,
            c_n,
        } => {
            let spec: DomainSpec = domain.parse()?;
            let poly = spec.polygon()?;
            let constants = BoundConstants::new(*c_n)?;
            let res = resolution.unwrap_or_else(|| default_resolution(&poly, *k));
            let cert = certified_upper_bound(&poly, *p, *k, res)?;
            let theo = theoretical_rhs(&poly, *p, *k, &constants)?;
            let d = match theo.distortion {
                Some(d) => d,
                None => distortion(&poly, DistortionSearch::default())?.value,
            };
            let m = poly.metrics();
            let base = BoundRow {
                domain: spec.to_string(),
                p: *p,
                k: *k,
                kind: EstimateKind::CertifiedUpper,
                value: cert.estimate.value,
                achieved_c: cert.achieved_c,
                d_sampled: d,
                iso: m.iso_ratio,
                perimeter: m.perimeter,
            };
            let theo_row = BoundRow {
                kind: EstimateKind::TheoreticalUpper,
                value: theo.value,
                achieved_c: *c_n,
                ..base.clone()
            };
            emit(&cli.out, "bound.csv", &table(BOUND_CSV_HEADER, [base.csv(), theo_row.csv()]))?;
            Ok(EXIT_OK)
        }
        Command::Counterexample {
            p,
            j,
            eta,
            h,
            starts,
        } => {
            let eta = eta.unwrap_or((p - 2.0) / (p - 1.0));
            let opts = SweepOptions {
                h_max: *h,
                descent: DescentOptions {
                    starts: *starts,
                    seed,
                    ..DescentOptions::default()
                },
            };
            let report = counterexample_sweep(*p, j, eta, &opts)?;
            emit(&cli.out, "counterexample.csv", &report.to_csv())?;
            eprintln!("fitted log-log slope of sigma against j: {}", report.slope);
            let failed = report.rows.iter().any(|r| !r.ok());
            Ok(if failed { EXIT_FAILED_ROWS } else { EXIT_OK })
        }
        Command::Weyl {
            domain,
            kmax,
            h,
            levels,
        } => {
            let spec: DomainSpec = domain.parse()?;
            let poly = spec.polygon()?;
            let report = weyl_diagnostic(&poly, *kmax, *levels, *h)?;
            emit(&cli.out, "weyl.csv", &report.to_csv())?;
            Ok(EXIT_OK)
        }
        Command::Scenario => {
            let Some(path) = &cli.config else {
                return Err(Error::Parse("scenario needs --config <path>".into()));
            };
            let config = ScenarioConfig::read(path)?;
            let out = cli
                .out
                .clone()
                .or_else(|| config.output.as_ref().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("."));
            let report = run_scenario(&config, &out, cli.seed.unwrap_or(config.seed), cli.svg)?;
            Ok(if report.failed() > 0 { EXIT_FAILED_ROWS } else { EXIT_OK })
        }
    }
}
