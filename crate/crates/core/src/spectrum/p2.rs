//! Exact discrete Steklov spectrum at p = 2 by boundary condensation.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::sparse::{conjugate_gradient, CsrMatrix};
use super::{EstimateKind, SpectralEstimate};
use crate::error::{argument, Error, Result};
use crate::fem::{NodalField, P1Space};
use crate::mesh::TriangleMesh;

const CG_RTOL: f64 = 1e-12;

/// Stiffness matrix split into interior and boundary blocks.
struct Condensation {
    boundary: Vec<usize>,
    interior: Vec<usize>,
    k_ii: CsrMatrix,
    /// Rows interior, columns boundary.
    k_ib: CsrMatrix,
    k_bb: DMatrix<f64>,
}

impl Condensation {
    fn new(mesh: &TriangleMesh) -> Self {
        let space = P1Space::new(mesh);
        let mask = mesh.boundary_mask();
        let boundary: Vec<usize> = mesh.boundary_edges().iter().map(|e| e.a).collect();
        let interior: Vec<usize> = (0..mesh.node_count()).filter(|&v| !mask[v]).collect();
        let mut local = vec![usize::MAX; mesh.node_count()];
        for (i, &v) in boundary.iter().enumerate() {
            local[v] = i;
        }
        for (i, &v) in interior.iter().enumerate() {
            local[v] = i;
        }
        let nb = boundary.len();
        let mut ii = Vec::new();
        let mut ib = Vec::new();
        let mut k_bb = DMatrix::zeros(nb, nb);
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let area = space.triangle_areas()[t];
            for a in 0..3 {
                for b in 0..3 {
                    let h = space.hat_gradients(t);
                    let k = area * h[a].dot(h[b]);
                    let (va, vb) = (tri[a], tri[b]);
                    match (mask[va], mask[vb]) {
                        (false, false) => ii.push((local[va], local[vb], k)),
                        (false, true) => ib.push((local[va], local[vb], k)),
                        (true, true) => k_bb[(local[va], local[vb])] += k,
                        (true, false) => {}
                    }
                }
            }
        }
        let ni = interior.len();
        Condensation {
            k_ii: CsrMatrix::from_triplets(ni, ni, ii),
            k_ib: CsrMatrix::from_triplets(ni, nb, ib),
            boundary,
            interior,
            k_bb,
        }
    }

    /// `K_II⁻¹ K_IB e_j` for every boundary column `j`.
    fn solve_columns(&self) -> Result<Vec<Vec<f64>>> {
        let nb = self.boundary.len();
        let ni = self.interior.len();
        let mut columns = vec![vec![0.0; ni]; nb];
        #[allow(clippy::needless_range_loop)]
        for r in 0..ni {
            for (c, v) in self.k_ib.row(r) {
                columns[c][r] = v;
            }
        }
        let max_iter = 10 * ni + 100;
        columns
            .into_par_iter()
            .map(|rhs| conjugate_gradient(&self.k_ii, &rhs, CG_RTOL, max_iter).map(|(x, _)| x))
            .collect()
    }

    /// `S = K_BB − K_BI K_II⁻¹ K_IB`, symmetrized.
    fn schur(&self) -> Result<DMatrix<f64>> {
        let nb = self.boundary.len();
        let mut s = self.k_bb.clone();
        if !self.interior.is_empty() {
            let cols = self.solve_columns()?;
            for (j, y) in cols.iter().enumerate() {
                let mut kby = vec![0.0; nb];
                for (r, &yr) in y.iter().enumerate() {
                    for (c, v) in self.k_ib.row(r) {
                        kby[c] += v * yr;
                    }
                }
                for i in 0..nb {
                    s[(i, j)] -= kby[i];
                }
            }
        }
        Ok(0.5 * (&s + s.transpose()))
    }

    /// Discrete harmonic extension `u_I = −K_II⁻¹ K_IB u_B`.
    fn extend(&self, mesh: &TriangleMesh, ub: &[f64]) -> Result<Vec<f64>> {
        let mut u = vec![0.0; mesh.node_count()];
        for (i, &v) in self.boundary.iter().enumerate() {
            u[v] = ub[i];
        }
        if !self.interior.is_empty() {
            let rhs: Vec<f64> = self.k_ib.mul_vec(ub).iter().map(|x| -x).collect();
            let (ui, _) = conjugate_gradient(&self.k_ii, &rhs, CG_RTOL, 10 * self.interior.len() + 100)?;
            for (i, &v) in self.interior.iter().enumerate() {
                u[v] = ui[i];
            }
        }
        Ok(u)
    }
}

/// Consistent boundary mass `L/6 [2 1; 1 2]` per boundary edge.
fn boundary_mass(mesh: &TriangleMesh) -> DMatrix<f64> {
    let nb = mesh.boundary_edges().len();
    let mut m = DMatrix::zeros(nb, nb);
    let nodes = mesh.nodes();
    for (i, e) in mesh.boundary_edges().iter().enumerate() {
        let j = (i + 1) % nb;
        let l = nodes[e.a].dist(nodes[e.b]);
        m[(i, i)] += l / 3.0;
        m[(j, j)] += l / 3.0;
        m[(i, j)] += l / 6.0;
        m[(j, i)] += l / 6.0;
    }
    m
}

/// The `kmax` smallest eigenvalues of `K u = σ M_∂ u` with harmonic
/// eigenfields normalized to unit boundary 2-norm.
pub fn steklov_spectrum_p2(mesh: &TriangleMesh, kmax: usize) -> Result<Vec<SpectralEstimate>> {
    let nb = mesh.boundary_edges().len();
    if kmax < 1 || kmax > nb {
        return Err(argument(format!(
            "kmax must lie in 1..={nb} (boundary node count), got {kmax}"
        )));
    }
    let cond = Condensation::new(mesh);
    let s = cond.schur()?;
    let m = boundary_mass(mesh);
    let chol = m
        .cholesky()
        .ok_or_else(|| Error::Numerical("boundary mass matrix is not positive definite".into()))?;
    let l = chol.l();
    // C = L⁻¹ S L⁻ᵀ
    let a = l
        .solve_lower_triangular(&s)
        .ok_or_else(|| Error::Numerical("singular boundary mass factor".into()))?;
    let c = l
        .solve_lower_triangular(&a.transpose())
        .ok_or_else(|| Error::Numerical("singular boundary mass factor".into()))?;
    let c = 0.5 * (&c + c.transpose());
    let eig = c.symmetric_eigen();
    let mut order: Vec<usize> = (0..nb).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let lt = l.transpose();
    let mut out = Vec::with_capacity(kmax);
    for (k, &idx) in order.iter().take(kmax).enumerate() {
        let value = eig.eigenvalues[idx].max(0.0);
        let y: DVector<f64> = eig.eigenvectors.column(idx).into_owned();
        let ub = lt
            .solve_upper_triangular(&y)
            .ok_or_else(|| Error::Numerical("singular boundary mass factor".into()))?;
        let mut ub: Vec<f64> = ub.iter().copied().collect();
        // Fix the sign so the largest-magnitude boundary value is positive.
        let pivot = ub.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            ub.iter_mut().for_each(|v| *v = -*v);
        }
        let u = cond.extend(mesh, &ub)?;
        let residual = stationarity(mesh, &u, value);
        out.push(SpectralEstimate {
            value,
            k: k + 1,
            p: 2.0,
            kind: EstimateKind::OracleP2,
            residual,
            iterations: 0,
            stationary: true,
            eigenfield: Some(NodalField::new(u)?),
        });
    }
    Ok(out)
}

/// `‖∇R‖·‖u‖ / R`, or 0 for the constant mode.
fn stationarity(mesh: &TriangleMesh, u: &[f64], value: f64) -> f64 {
    if value <= 1e-12 {
        return 0.0;
    }
    let space = P1Space::new(mesh);
    match space.rayleigh_with_gradient(u, 2.0) {
        Ok((r, g)) => {
            let gn = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            let un = u.iter().map(|x| x * x).sum::<f64>().sqrt();
            gn * un / r
        }
        Err(_) => f64::INFINITY,
    }
}
