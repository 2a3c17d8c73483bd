//! Constrained descent for the second variational eigenvalue at general p.
//!
//! Iterates stay on `S = {∫_∂Ω |u|^{p-2}u = 0, ∫_∂Ω |u|^p = 1}` through the
//! projection `P(u) = (u - c) / ‖u - c‖_{p,∂Ω}`. On `S` the Rayleigh gradient
//! is orthogonal to constants and to `u`, so it is also the gradient of
//! `R ∘ P`; the step direction is a limited-memory BFGS direction in that
//! gradient, safeguarded by Armijo backtracking.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::p2::steklov_spectrum_p2;
use super::{EstimateKind, SpectralEstimate};
use crate::error::{argument, Error, Result};
use crate::fem::{NodalField, P1Space};
use crate::geometry::BoundingBox;
use crate::mesh::TriangleMesh;
use crate::numeric::{abs_pow, signed_pow};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DescentOptions {
    /// Random polynomial starts, in addition to the p = 2 eigenfunction.
    pub starts: usize,
    /// Target for `‖∇R‖·‖u‖ / R`.
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub oracle_start: bool,
    /// Curvature pairs kept by the quasi-Newton direction.
    pub memory: usize,
}

impl Default for DescentOptions {
    fn default() -> Self {
        DescentOptions {
            starts: 4,
            tol: 1e-5,
            max_iter: 20_000,
            seed: 0,
            oracle_start: true,
            memory: 8,
        }
    }
}

/// Outcome of one start.
#[derive(Debug, Clone)]
pub struct DescentRun {
    pub value: f64,
    pub residual: f64,
    pub iterations: usize,
    pub stationary: bool,
    /// Accepted Rayleigh values, non-increasing.
    pub history: Vec<f64>,
    pub field: Vec<f64>,
}

const ARMIJO: f64 = 1e-4;
const MAX_BACKTRACK: usize = 60;

/// `c` with `∫_∂Ω |u - c|^{p-2}(u - c) = 0`. The moment is strictly
/// decreasing in `c` on the trace range; Newton steps are kept inside a
/// shrinking bracket and replaced by bisection when they leave it.
pub fn balance_shift(space: &P1Space<'_>, u: &[f64], p: f64) -> f64 {
    let mesh = space.mesh();
    let (mut lo, mut hi) = mesh
        .boundary_edges()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), e| (lo.min(u[e.a]), hi.max(u[e.a])));
    if !(hi > lo) {
        return lo;
    }
    let tol = 1e-12 * (hi - lo).max(lo.abs().max(hi.abs()));
    let lengths = space.boundary_edge_lengths();
    let quad: Vec<(f64, f64)> = space.quadrature().points().collect();
    let moment = |c: f64| -> (f64, f64) {
        let (mut m, mut dm) = (0.0, 0.0);
        for (e, &len) in mesh.boundary_edges().iter().zip(lengths) {
            let (ua, ub) = (u[e.a] - c, u[e.b] - c);
            let (mut em, mut ed) = (0.0, 0.0);
            for &(x, w) in &quad {
                let v = ua + x * (ub - ua);
                em += w * signed_pow(v, p);
                ed += w * abs_pow(v, p - 2.0);
            }
            m += len * em;
            dm += len * ed;
        }
        (m, -(p - 1.0) * dm)
    };
    let mut c = 0.5 * (lo + hi);
    for _ in 0..200 {
        let (m, dm) = moment(c);
        if m == 0.0 {
            return c;
        }
        if m > 0.0 {
            lo = c;
        } else {
            hi = c;
        }
        let newton = c - m / dm;
        let next = if dm.is_finite() && dm < 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        let done = (next - c).abs() <= tol || hi - lo <= tol;
        c = next;
        if done {
            break;
        }
    }
    c
}

/// Projects onto `S`, or `None` when the shifted trace vanishes.
fn project(space: &P1Space<'_>, u: &[f64], p: f64) -> Option<Vec<f64>> {
    let c = balance_shift(space, u, p);
    let shifted: Vec<f64> = u.iter().map(|v| v - c).collect();
    let b = space.boundary_norm(&shifted, p).ok()?;
    if !(b > 1e-200) || !b.is_finite() {
        return None;
    }
    let s = b.powf(-1.0 / p);
    Some(shifted.iter().map(|v| v * s).collect())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn residual_of(r: f64, g: &[f64], u: &[f64]) -> f64 {
    if r <= 0.0 {
        return f64::INFINITY;
    }
    norm(g) * norm(u) / r
}

/// Runs projected quasi-Newton descent from `start`.
pub fn descend(space: &P1Space<'_>, start: &[f64], p: f64, opts: &DescentOptions) -> Result<DescentRun> {
    let mut u = project(space, start, p)
        .ok_or_else(|| Error::Numerical("start field has a vanishing boundary trace".into()))?;
    let (mut r, mut g) = space.rayleigh_with_gradient(&u, p)?;
    let mut history = vec![r];
    let mut pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut residual = residual_of(r, &g, &u);
    let mut iterations = 0;
    while iterations < opts.max_iter && residual > opts.tol {
        iterations += 1;
        let mut d = lbfgs_direction(&g, &pairs);
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            pairs.clear();
            d = g.iter().map(|x| -x).collect();
            slope = -dot(&g, &g);
        }
        if pairs.is_empty() {
            // Unit first step moves u by about 10% of its size.
            let scale = 0.1 * norm(&u) / norm(&d).max(1e-300);
            d.iter_mut().for_each(|x| *x *= scale);
            slope *= scale;
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACK {
            let trial: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a + step * b).collect();
            if let Some(w) = project(space, &trial, p) {
                if let Ok((rw, gw)) = space.rayleigh_with_gradient(&w, p) {
                    if rw <= r + ARMIJO * step * slope {
                        accepted = Some((w, rw, gw));
                        break;
                    }
                }
            }
            step *= 0.5;
        }
        let Some((w, rw, gw)) = accepted else {
            if pairs.is_empty() {
                break;
            }
            pairs.clear();
            continue;
        };
        debug_assert!(rw <= r);
        let s: Vec<f64> = w.iter().zip(&u).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gw.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if pairs.len() == opts.memory.max(1) {
                pairs.pop_front();
            }
            pairs.push_back((s, y, 1.0 / sy));
        }
        u = w;
        r = rw;
        g = gw;
        history.push(r);
        residual = residual_of(r, &g, &u);
    }
    Ok(DescentRun {
        value: r,
        residual,
        iterations,
        stationary: residual <= opts.tol,
        history,
        field: u,
    })
}

/// Two-loop recursion for `−H g`.
fn lbfgs_direction(g: &[f64], pairs: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q: Vec<f64> = g.to_vec();
    let mut alphas = Vec::with_capacity(pairs.len());
    for (s, y, rho) in pairs.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    if let Some((s, y, _)) = pairs.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|x| *x *= gamma);
    }
    for ((s, y, rho), a) in pairs.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - b) * si);
    }
    q.iter_mut().for_each(|x| *x = -*x);
    q
}

/// Random cubic polynomial in bounding-box coordinates.
fn polynomial_start(mesh: &TriangleMesh, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let bb = BoundingBox::of(mesh.nodes());
    let cx = 0.5 * (bb.min.x + bb.max.x);
    let cy = 0.5 * (bb.min.y + bb.max.y);
    let half = 0.5 * bb.width().max(bb.height());
    let monomials = [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2), (3, 0), (2, 1), (1, 2), (0, 3)];
    let coef: Vec<f64> = monomials.iter().map(|_| StandardNormal.sample(rng)).collect();
    mesh.nodes()
        .iter()
        .map(|q| {
            let x = (q.x - cx) / half;
            let y = (q.y - cy) / half;
            monomials
                .iter()
                .zip(&coef)
                .map(|(&(i, j), c)| c * x.powi(i) * y.powi(j))
                .sum()
        })
        .collect()
}

/// Start fields: the p = 2 second eigenfunction (when enabled) followed by
/// seeded random polynomials.
pub fn descent_starts(mesh: &TriangleMesh, opts: &DescentOptions) -> Result<Vec<Vec<f64>>> {
    let mut starts = Vec::new();
    if opts.oracle_start && mesh.boundary_edges().len() >= 2 {
        let spec = steklov_spectrum_p2(mesh, 2)?;
        if let Some(f) = spec[1].eigenfield.clone() {
            starts.push(f.into_values());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.starts {
        starts.push(polynomial_start(mesh, &mut rng));
    }
    if starts.is_empty() {
        return Err(argument("descent needs at least one start"));
    }
    Ok(starts)
}

/// All runs, in start order.
pub fn descent_runs(mesh: &TriangleMesh, p: f64, opts: &DescentOptions) -> Result<Vec<DescentRun>> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(argument(format!("exponent p must exceed 1, got {p}")));
    }
    let starts = descent_starts(mesh, opts)?;
    let space = P1Space::new(mesh);
    starts
        .par_iter()
        .map(|s| descend(&space, s, p, opts))
        .collect()
}

/// Best stationary run by (value, start index); a non-stationary best run
/// is returned flagged when no start converged.
pub fn steklov_sigma2_p(mesh: &TriangleMesh, p: f64, opts: &DescentOptions) -> Result<SpectralEstimate> {
    let runs = descent_runs(mesh, p, opts)?;
    let pick = |stationary_only: bool| {
        runs.iter()
            .enumerate()
            .filter(|(_, r)| !stationary_only || r.stationary)
            .min_by(|a, b| a.1.value.total_cmp(&b.1.value).then(a.0.cmp(&b.0)))
            .map(|(_, r)| r)
    };
    let best = pick(true).or_else(|| pick(false)).expect("at least one run");
    Ok(SpectralEstimate {
        value: best.value,
        k: 2,
        p,
        kind: EstimateKind::Descent,
        residual: best.residual,
        iterations: best.iterations,
        stationary: best.stationary,
        eigenfield: Some(NodalField::new(best.field.clone())?),
    })
}
