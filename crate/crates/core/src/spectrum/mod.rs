//! Steklov eigenvalue estimates: the exact discrete spectrum at p = 2,
//! constrained descent for σ_{p,2}, disk reference values and suprema over
//! disjoint-support families.

mod descent;
mod p2;
pub mod sparse;

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;

use crate::error::{argument, Error, Result};
use crate::fem::{NodalField, P1Space};
use crate::mesh::TriangleMesh;

pub use descent::{balance_shift, descend, descent_runs, descent_starts, steklov_sigma2_p, DescentOptions, DescentRun};
pub use p2::steklov_spectrum_p2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum EstimateKind {
    #[serde(rename = "oracle-p2")]
    OracleP2,
    #[serde(rename = "descent")]
    Descent,
    #[serde(rename = "analytic-disk")]
    AnalyticDisk,
    #[serde(rename = "certified-upper")]
    CertifiedUpper,
    #[serde(rename = "theoretical-upper")]
    TheoreticalUpper,
}

impl EstimateKind {
    pub fn tag(self) -> &'static str {
        match self {
            EstimateKind::OracleP2 => "oracle-p2",
            EstimateKind::Descent => "descent",
            EstimateKind::AnalyticDisk => "analytic-disk",
            EstimateKind::CertifiedUpper => "certified-upper",
            EstimateKind::TheoreticalUpper => "theoretical-upper",
        }
    }
}

impl fmt::Display for EstimateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

/// A value of σ_{p,k} together with how it was obtained.
#[derive(Debug, Clone)]
pub struct SpectralEstimate {
    pub value: f64,
    pub k: usize,
    pub p: f64,
    pub kind: EstimateKind,
    /// `‖∇R‖·‖u‖ / R` at the returned field (0 where not applicable).
    pub residual: f64,
    pub iterations: usize,
    pub stationary: bool,
    pub eigenfield: Option<NodalField>,
}

pub const SPECTRUM_CSV_HEADER: &str = "domain,p,k,kind,value,residual,iterations,mesh_nodes";

impl SpectralEstimate {
    pub fn analytic(k: usize, value: f64) -> Self {
        SpectralEstimate {
            value,
            k,
            p: 2.0,
            kind: EstimateKind::AnalyticDisk,
            residual: 0.0,
            iterations: 0,
            stationary: true,
            eigenfield: None,
        }
    }

    pub fn csv_row(&self, domain: &str, mesh_nodes: usize) -> String {
        format!(
            "{domain},{},{},{},{},{},{},{mesh_nodes}",
            self.p, self.k, self.kind, self.value, self.residual, self.iterations
        )
    }
}

/// Steklov eigenvalues of the unit disk: 0, 1, 1, 2, 2, 3, 3, …
pub fn disk_oracle(kmax: usize) -> Result<Vec<f64>> {
    if kmax < 1 {
        return Err(argument("kmax must be at least 1"));
    }
    Ok((1..=kmax).map(|k| (k / 2) as f64).collect())
}

/// Fails unless no triangle or boundary edge touches the supports of two
/// different fields (so energies and boundary norms add exactly).
pub fn check_disjoint_supports(mesh: &TriangleMesh, fields: &[NodalField]) -> Result<()> {
    let mut owner = vec![usize::MAX; mesh.node_count()];
    for (i, f) in fields.iter().enumerate() {
        if f.len() != mesh.node_count() {
            return Err(Error::Validation(format!("field {i} does not match the mesh")));
        }
        for (v, &x) in f.values().iter().enumerate() {
            if x != 0.0 {
                if owner[v] != usize::MAX {
                    return Err(Error::Precondition(format!(
                        "fields {} and {i} share support node {v}",
                        owner[v]
                    )));
                }
                owner[v] = i;
            }
        }
    }
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let mut seen = usize::MAX;
        for &v in tri {
            let o = owner[v];
            if o != usize::MAX {
                if seen != usize::MAX && seen != o {
                    return Err(Error::Precondition(format!(
                        "fields {seen} and {o} overlap on triangle {t}"
                    )));
                }
                seen = o;
            }
        }
    }
    Ok(())
}

/// Largest sampled `R_p(Σ α_i u_i)` with `Σ|α_i|^p = 1`, including the basis
/// points `α = e_i`.
pub fn family_sup_quotient(
    mesh: &TriangleMesh,
    fields: &[NodalField],
    p: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if fields.is_empty() {
        return Err(argument("family needs at least one field"));
    }
    check_disjoint_supports(mesh, fields)?;
    let space = P1Space::new(mesh);
    let combine = |alpha: &[f64]| -> Result<f64> {
        let mut u = vec![0.0; mesh.node_count()];
        for (a, f) in alpha.iter().zip(fields) {
            for (ui, fi) in u.iter_mut().zip(f.values()) {
                *ui += a * fi;
            }
        }
        space.rayleigh(&u, p)
    };
    let k = fields.len();
    let mut best = f64::NEG_INFINITY;
    for i in 0..k {
        let mut e = vec![0.0; k];
        e[i] = 1.0;
        best = best.max(combine(&e)?);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut alpha: Vec<f64> = (0..k).map(|_| StandardNormal.sample(&mut rng)).collect();
        let s: f64 = alpha.iter().map(|a| crate::numeric::abs_pow(*a, p)).sum();
        if !(s > 0.0) {
            continue;
        }
        let scale = s.powf(-1.0 / p);
        alpha.iter_mut().for_each(|a| *a *= scale);
        best = best.max(combine(&alpha)?);
    }
    Ok(best)
}
