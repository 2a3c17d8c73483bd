//! P1 evaluation of the p-Dirichlet energy, the boundary p-norm, their
//! quotient and its exact gradient with respect to nodal values.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{argument, Error, Result};
use crate::geometry::Point;
use crate::mesh::TriangleMesh;
use crate::numeric::{abs_pow, gauss_legendre_unit, pairwise_sum, pow_half, signed_pow};

/// Boundary traces below this p-norm make the quotient undefined.
pub const VANISHING_TRACE: f64 = 1e-300;

/// Regularization of `|∇u|²` inside the gradient when `p < 2`.
pub const GRADIENT_EPS: f64 = 1e-12;

/// Gauss–Legendre rule used on every boundary edge.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    order: usize,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn new(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(argument(format!("quadrature order must be at least 2, got {order}")));
        }
        let (nodes, weights) = gauss_legendre_unit(order);
        Ok(QuadratureRule { order, nodes, weights })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Points on `[0, 1]` and weights summing to 1.
    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

impl Default for QuadratureRule {
    fn default() -> Self {
        QuadratureRule::new(4).expect("default order")
    }
}

/// One finite value per mesh node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodalField(Vec<f64>);

impl NodalField {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("nodal value {i} is not finite")));
        }
        Ok(NodalField(values))
    }

    pub fn for_mesh(mesh: &TriangleMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.node_count() {
            return Err(Error::Validation(format!(
                "field has {} values but the mesh has {} nodes",
                values.len(),
                mesh.node_count()
            )));
        }
        NodalField::new(values)
    }

    /// Nodal interpolant of `f`.
    pub fn from_fn(mesh: &TriangleMesh, f: impl Fn(Point) -> f64) -> Result<Self> {
        NodalField::for_mesh(mesh, mesh.nodes().iter().map(|&p| f(p)).collect())
    }

    pub fn constant(mesh: &TriangleMesh, c: f64) -> Result<Self> {
        NodalField::for_mesh(mesh, vec![c; mesh.node_count()])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn scaled(&self, c: f64) -> NodalField {
        NodalField(self.0.iter().map(|v| v * c).collect())
    }

    /// Linear interpolation onto a uniformly refined mesh with the given
    /// parent edges.
    pub fn prolongate(&self, parents: &[[usize; 2]]) -> NodalField {
        let mut v = self.0.clone();
        v.extend(parents.iter().map(|&[a, b]| 0.5 * (self.0[a] + self.0[b])));
        NodalField(v)
    }

    /// Node count on the first line, then one value per line.
    pub fn to_text(&self) -> String {
        let mut s = format!("{}\n", self.0.len());
        for v in &self.0 {
            let _ = writeln!(s, "{v:?}");
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let n: usize = lines
            .next()
            .and_then(|l| l.trim().parse().ok())
            .ok_or_else(|| Error::Parse("field file must start with the node count".into()))?;
        let values: Vec<f64> = lines
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                l.trim()
                    .parse()
                    .map_err(|_| Error::Parse(format!("field line {}: bad value", i + 2)))
            })
            .collect::<Result<_>>()?;
        if values.len() != n {
            return Err(Error::Parse(format!("field declares {n} values, found {}", values.len())));
        }
        NodalField::new(values)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        NodalField::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn check_p(p: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(argument(format!("exponent p must exceed 1, got {p}")));
    }
    Ok(())
}

/// Precomputed element geometry of a mesh.
#[derive(Debug, Clone)]
pub struct P1Space<'m> {
    mesh: &'m TriangleMesh,
    areas: Vec<f64>,
    /// Gradients of the three hat functions of each triangle.
    hats: Vec<[Point; 3]>,
    edge_lengths: Vec<f64>,
    quad: QuadratureRule,
}

impl<'m> P1Space<'m> {
    pub fn new(mesh: &'m TriangleMesh) -> Self {
        P1Space::with_quadrature(mesh, QuadratureRule::default())
    }

    pub fn with_quadrature(mesh: &'m TriangleMesh, quad: QuadratureRule) -> Self {
        let nodes = mesh.nodes();
        let mut areas = Vec::with_capacity(mesh.triangle_count());
        let mut hats = Vec::with_capacity(mesh.triangle_count());
        for &[a, b, c] in mesh.triangles() {
            let (pa, pb, pc) = (nodes[a], nodes[b], nodes[c]);
            let twice = (pb - pa).cross(pc - pa);
            areas.push(0.5 * twice);
            // ∇φ_a is the inward normal of the opposite edge over twice the area.
            let perp = |e: Point| Point::new(-e.y / twice, e.x / twice);
            hats.push([perp(pc - pb), perp(pa - pc), perp(pb - pa)]);
        }
        let edge_lengths = mesh
            .boundary_edges()
            .iter()
            .map(|e| nodes[e.a].dist(nodes[e.b]))
            .collect();
        P1Space {
            mesh,
            areas,
            hats,
            edge_lengths,
            quad,
        }
    }

    pub fn mesh(&self) -> &'m TriangleMesh {
        self.mesh
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn triangle_areas(&self) -> &[f64] {
        &self.areas
    }

    pub fn boundary_edge_lengths(&self) -> &[f64] {
        &self.edge_lengths
    }

    fn check(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.mesh.node_count() {
            return Err(Error::Validation(format!(
                "field has {} values but the mesh has {} nodes",
                u.len(),
                self.mesh.node_count()
            )));
        }
        Ok(())
    }

    /// Gradients of the three hat functions of triangle `t`.
    pub fn hat_gradients(&self, t: usize) -> [Point; 3] {
        self.hats[t]
    }

    /// Constant gradient of `u` on triangle `t`.
    pub fn element_gradient(&self, t: usize, u: &[f64]) -> Point {
        let [a, b, c] = self.mesh.triangles()[t];
        let g = &self.hats[t];
        g[0] * u[a] + g[1] * u[b] + g[2] * u[c]
    }

    /// `∫_Ω |∇u|^p`, exact for P1.
    pub fn energy(&self, u: &[f64], p: f64) -> Result<f64> {
        check_p(p)?;
        self.check(u)?;
        Ok(self.energy_unchecked(u, p))
    }

    fn energy_unchecked(&self, u: &[f64], p: f64) -> f64 {
        let terms: Vec<f64> = (0..self.areas.len())
            .into_par_iter()
            .map(|t| self.areas[t] * pow_half(self.element_gradient(t, u).norm2(), p))
            .collect();
        pairwise_sum(&terms)
    }

    /// `Σ_{t ⊂ D} ∫_t |∇u|^p` over triangles selected by `keep`.
    pub fn energy_on(&self, u: &[f64], p: f64, keep: impl Fn(usize) -> bool) -> Result<f64> {
        check_p(p)?;
        self.check(u)?;
        let terms: Vec<f64> = (0..self.areas.len())
            .filter(|&t| keep(t))
            .map(|t| self.areas[t] * pow_half(self.element_gradient(t, u).norm2(), p))
            .collect();
        Ok(pairwise_sum(&terms))
    }

    /// `∫_∂Ω |u|^p` by Gauss–Legendre quadrature of the linear trace.
    pub fn boundary_norm(&self, u: &[f64], p: f64) -> Result<f64> {
        check_p(p)?;
        self.check(u)?;
        Ok(self.boundary_integral(u, |x| abs_pow(x, p)))
    }

    /// `∫_∂Ω f(u)` with the edge rule.
    pub fn boundary_integral(&self, u: &[f64], f: impl Fn(f64) -> f64 + Sync) -> f64 {
        let terms: Vec<f64> = self
            .mesh
            .boundary_edges()
            .iter()
            .zip(&self.edge_lengths)
            .map(|(e, &len)| {
                let (ua, ub) = (u[e.a], u[e.b]);
                let s: f64 = self.quad.points().map(|(x, w)| w * f(ua + x * (ub - ua))).sum();
                len * s
            })
            .collect();
        pairwise_sum(&terms)
    }

    /// `R_p(u) = ∫|∇u|^p / ∫_∂Ω |u|^p`.
    pub fn rayleigh(&self, u: &[f64], p: f64) -> Result<f64> {
        let e = self.energy(u, p)?;
        let b = self.boundary_norm(u, p)?;
        if !(b >= VANISHING_TRACE) {
            return Err(Error::VanishingTrace(b));
        }
        Ok(e / b)
    }

    /// Gradient of the energy with respect to nodal values.
    pub fn energy_gradient(&self, u: &[f64], p: f64) -> Result<Vec<f64>> {
        check_p(p)?;
        self.check(u)?;
        let local: Vec<[f64; 3]> = (0..self.areas.len())
            .into_par_iter()
            .map(|t| {
                let g = self.element_gradient(t, u);
                let s = if p >= 2.0 {
                    g.norm2()
                } else {
                    g.norm2() + GRADIENT_EPS
                };
                let coef = p * self.areas[t] * pow_half(s, p - 2.0);
                let h = &self.hats[t];
                [coef * g.dot(h[0]), coef * g.dot(h[1]), coef * g.dot(h[2])]
            })
            .collect();
        let mut grad = vec![0.0; u.len()];
        for (t, c) in self.mesh.triangles().iter().zip(&local) {
            for i in 0..3 {
                grad[t[i]] += c[i];
            }
        }
        Ok(grad)
    }

    /// Gradient of the boundary p-norm with respect to nodal values.
    pub fn boundary_gradient(&self, u: &[f64], p: f64) -> Result<Vec<f64>> {
        check_p(p)?;
        self.check(u)?;
        let mut grad = vec![0.0; u.len()];
        for (e, &len) in self.mesh.boundary_edges().iter().zip(&self.edge_lengths) {
            let (ua, ub) = (u[e.a], u[e.b]);
            let (mut da, mut db) = (0.0, 0.0);
            for (x, w) in self.quad.points() {
                let d = w * p * signed_pow(ua + x * (ub - ua), p);
                da += d * (1.0 - x);
                db += d * x;
            }
            grad[e.a] += len * da;
            grad[e.b] += len * db;
        }
        Ok(grad)
    }

    /// `(R_p(u), ∇R_p(u))` with `∇R = (∇E − R ∇B) / B`.
    pub fn rayleigh_with_gradient(&self, u: &[f64], p: f64) -> Result<(f64, Vec<f64>)> {
        let e = self.energy(u, p)?;
        let b = self.boundary_norm(u, p)?;
        if !(b >= VANISHING_TRACE) {
            return Err(Error::VanishingTrace(b));
        }
        let r = e / b;
        let ge = self.energy_gradient(u, p)?;
        let gb = self.boundary_gradient(u, p)?;
        let grad = ge.iter().zip(&gb).map(|(x, y)| (x - r * y) / b).collect();
        Ok((r, grad))
    }
}

pub fn p_dirichlet_energy(mesh: &TriangleMesh, u: &NodalField, p: f64) -> Result<f64> {
    P1Space::new(mesh).energy(u.values(), p)
}

pub fn boundary_p_norm(mesh: &TriangleMesh, u: &NodalField, p: f64, quad: &QuadratureRule) -> Result<f64> {
    P1Space::with_quadrature(mesh, quad.clone()).boundary_norm(u.values(), p)
}

pub fn rayleigh_quotient(mesh: &TriangleMesh, u: &NodalField, p: f64) -> Result<f64> {
    P1Space::new(mesh).rayleigh(u.values(), p)
}

pub fn rayleigh_gradient(mesh: &TriangleMesh, u: &NodalField, p: f64) -> Result<NodalField> {
    let (_, g) = P1Space::new(mesh).rayleigh_with_gradient(u.values(), p)?;
    NodalField::new(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_dumbbell, unit_square};
    use crate::mesh::{triangulate, uniform_refine_with_parents};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square_mesh() -> TriangleMesh {
        triangulate(&unit_square(), 0.25).unwrap()
    }

    #[test]
    fn linear_field_examples() {
        let mesh = square_mesh();
        let u = NodalField::from_fn(&mesh, |p| p.x).unwrap();
        let q = QuadratureRule::default();
        assert!((p_dirichlet_energy(&mesh, &u, 2.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((p_dirichlet_energy(&mesh, &u, 4.0).unwrap() - 1.0).abs() < 1e-13);
        assert!((boundary_p_norm(&mesh, &u, 2.0, &q).unwrap() - 5.0 / 3.0).abs() < 1e-13);
        assert!((boundary_p_norm(&mesh, &u, 3.0, &q).unwrap() - 1.5).abs() < 1e-13);
        assert!((rayleigh_quotient(&mesh, &u, 2.0).unwrap() - 0.6).abs() < 1e-13);
        let one = NodalField::constant(&mesh, 1.0).unwrap();
        assert!((boundary_p_norm(&mesh, &one, 2.5, &q).unwrap() - 4.0).abs() < 1e-13);
        assert_eq!(p_dirichlet_energy(&mesh, &one, 3.0).unwrap(), 0.0);
        assert_eq!(rayleigh_quotient(&mesh, &one, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn interior_bump_has_vanishing_trace() {
        let mesh = square_mesh();
        let mask = mesh.boundary_mask();
        let u: Vec<f64> = mask.iter().map(|&b| if b { 0.0 } else { 1.0 }).collect();
        let u = NodalField::for_mesh(&mesh, u).unwrap();
        assert!(matches!(rayleigh_quotient(&mesh, &u, 2.0), Err(Error::VanishingTrace(_))));
    }

    #[test]
    fn argument_errors() {
        let mesh = square_mesh();
        let u = NodalField::constant(&mesh, 1.0).unwrap();
        assert!(p_dirichlet_energy(&mesh, &u, 1.0).is_err());
        assert!(rayleigh_quotient(&mesh, &u, 0.5).is_err());
        assert!(QuadratureRule::new(1).is_err());
        assert!(NodalField::new(vec![1.0, f64::NAN]).is_err());
        assert!(NodalField::for_mesh(&mesh, vec![1.0; 3]).is_err());
    }

    fn random_field(mesh: &TriangleMesh, rng: &mut ChaCha8Rng) -> Vec<f64> {
        (0..mesh.node_count()).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mesh = triangulate(&make_dumbbell(0.4, 0.5).unwrap(), 0.3).unwrap();
        let space = P1Space::new(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in [2.0, 3.5, 1.5] {
            let u = random_field(&mesh, &mut rng);
            let (_, g) = space.rayleigh_with_gradient(&u, p).unwrap();
            let step = 1e-6;
            let mut fd = vec![0.0; u.len()];
            for i in 0..u.len() {
                let mut up = u.clone();
                let mut dn = u.clone();
                up[i] += step;
                dn[i] -= step;
                fd[i] = (space.rayleigh(&up, p).unwrap() - space.rayleigh(&dn, p).unwrap()) / (2.0 * step);
            }
            let diff: f64 = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = fd.iter().map(|a| a * a).sum::<f64>().sqrt();
            assert!(diff <= 1e-5 * norm, "p = {p}: {diff} vs {norm}");
        }
    }

    #[test]
    fn homogeneity_and_gradient_scaling() {
        let mesh = square_mesh();
        let space = P1Space::new(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_field(&mesh, &mut rng);
        for p in [2.0, 3.0, 4.0] {
            let (r, g) = space.rayleigh_with_gradient(&u, p).unwrap();
            let u2: Vec<f64> = u.iter().map(|v| 2.0 * v).collect();
            let (r2, g2) = space.rayleigh_with_gradient(&u2, p).unwrap();
            assert!((r - r2).abs() <= 1e-12 * r);
            let neg: Vec<f64> = u.iter().map(|v| -3.0 * v).collect();
            assert!((space.rayleigh(&neg, p).unwrap() - r).abs() <= 1e-12 * r);
            for (a, b) in g.iter().zip(&g2) {
                assert!((a - 2.0 * b).abs() <= 1e-12 * a.abs().max(1e-300));
            }
        }
    }

    #[test]
    fn exact_discrete_scaling() {
        let mesh = square_mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_field(&mesh, &mut rng);
        for t in [0.5, 3.0] {
            let scaled = mesh.scaled(t).unwrap();
            for p in [2.0, 2.5, 4.0] {
                let r = P1Space::new(&mesh).rayleigh(&u, p).unwrap();
                let rs = P1Space::new(&scaled).rayleigh(&u, p).unwrap();
                assert!((rs - t.powf(1.0 - p) * r).abs() <= 1e-12 * rs);
            }
        }
    }

    #[test]
    fn nested_interpolation_preserves_energy() {
        let mesh = square_mesh();
        let (fine, parents) = uniform_refine_with_parents(&mesh).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = NodalField::new(random_field(&mesh, &mut rng)).unwrap();
        let uf = u.prolongate(&parents);
        for p in [2.0, 3.0] {
            let e = p_dirichlet_energy(&mesh, &u, p).unwrap();
            let ef = p_dirichlet_energy(&fine, &uf, p).unwrap();
            assert!((e - ef).abs() <= 1e-12 * e);
        }
        let q = QuadratureRule::default();
        let b = boundary_p_norm(&mesh, &u, 2.0, &q).unwrap();
        let bf = boundary_p_norm(&fine, &uf, 2.0, &q).unwrap();
        assert!((b - bf).abs() <= 1e-12 * b);
    }

    #[test]
    fn field_text_round_trip() {
        let mesh = square_mesh();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = NodalField::for_mesh(&mesh, random_field(&mesh, &mut rng)).unwrap();
        assert_eq!(NodalField::from_text(&u.to_text()).unwrap(), u);
        assert!(NodalField::from_text("3\n1\n2\n").is_err());
    }
}
