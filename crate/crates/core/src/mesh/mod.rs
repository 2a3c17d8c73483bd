//! Conforming triangle meshes of polygons.

mod refine;
mod triangulate;

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{orient, Point, Polygon};

pub use refine::{uniform_refine, uniform_refine_with_parents};
pub use triangulate::{triangulate, triangulate_with, MeshOptions, MAX_ELEMENTS};

/// A boundary edge `a → b` (counterclockwise along ∂Ω) lying on polygon edge `tag`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: usize,
}

/// Triangulation with counterclockwise triangles and an ordered boundary cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct TriangleMesh {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality {
    pub min_angle_deg: f64,
    pub max_edge: f64,
    pub max_boundary_edge: f64,
}

impl TriangleMesh {
    /// Builds a mesh and checks every structural invariant.
    pub fn from_parts(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
    ) -> Result<Self> {
        let mesh = TriangleMesh {
            nodes,
            triangles,
            boundary,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub(crate) fn from_parts_unchecked(
        nodes: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<BoundaryEdge>,
    ) -> Self {
        TriangleMesh {
            nodes,
            triangles,
            boundary,
        }
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Flags for nodes lying on the boundary.
    pub fn boundary_mask(&self) -> Vec<bool> {
        let mut mask = vec![false; self.nodes.len()];
        for e in &self.boundary {
            mask[e.a] = true;
            mask[e.b] = true;
        }
        mask
    }

    pub fn boundary_length(&self) -> f64 {
        let lens: Vec<f64> = self
            .boundary
            .iter()
            .map(|e| self.nodes[e.a].dist(self.nodes[e.b]))
            .collect();
        crate::numeric::pairwise_sum(&lens)
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        0.5 * orient(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    pub fn area(&self) -> f64 {
        let areas: Vec<f64> = (0..self.triangles.len())
            .map(|t| self.triangle_area(t))
            .collect();
        crate::numeric::pairwise_sum(&areas)
    }

    /// Undirected edges in first-seen order.
    pub fn edges(&self) -> Vec<[usize; 2]> {
        let mut seen = HashMap::new();
        let mut edges = Vec::new();
        for t in &self.triangles {
            for i in 0..3 {
                let key = edge_key(t[i], t[(i + 1) % 3]);
                seen.entry(key).or_insert_with(|| {
                    edges.push([key.0, key.1]);
                });
            }
        }
        edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges().len()
    }

    /// Index of the node at `p` (within `tol`), if any.
    pub fn find_node(&self, p: Point, tol: f64) -> Option<usize> {
        self.nodes.iter().position(|q| q.dist(p) <= tol)
    }

    /// Similarity-scaled copy with identical connectivity.
    pub fn scaled(&self, t: f64) -> Result<TriangleMesh> {
        if !(t > 0.0) {
            return Err(crate::error::argument(format!(
                "scale factor must be positive, got {t}"
            )));
        }
        Ok(TriangleMesh {
            nodes: self.nodes.iter().map(|&p| p * t).collect(),
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
        })
    }

    pub fn quality(&self) -> MeshQuality {
        let mut min_angle = f64::INFINITY;
        let mut max_edge: f64 = 0.0;
        for t in &self.triangles {
            let p = [self.nodes[t[0]], self.nodes[t[1]], self.nodes[t[2]]];
            for i in 0..3 {
                let a = p[i];
                let b = p[(i + 1) % 3];
                let c = p[(i + 2) % 3];
                let u = b - a;
                let v = c - a;
                let ang = u.cross(v).atan2(u.dot(v)).abs().to_degrees();
                min_angle = min_angle.min(ang);
                max_edge = max_edge.max(u.norm());
            }
        }
        let max_boundary_edge = self
            .boundary
            .iter()
            .map(|e| self.nodes[e.a].dist(self.nodes[e.b]))
            .fold(0.0, f64::max);
        MeshQuality {
            min_angle_deg: min_angle,
            max_edge,
            max_boundary_edge,
        }
    }

    /// Checks orientation, edge incidence, the Euler relation and the
    /// boundary cycle.
    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        for (i, t) in self.triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= n) {
                return Err(Error::Validation(format!("triangle {i} references a missing node")));
            }
            if !(self.triangle_area(i) > 0.0) {
                return Err(Error::Validation(format!("triangle {i} has non-positive area")));
            }
        }
        let mut incidence: HashMap<(usize, usize), u32> = HashMap::new();
        let mut directed: HashMap<(usize, usize), ()> = HashMap::new();
        for t in &self.triangles {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                *incidence.entry(edge_key(a, b)).or_insert(0) += 1;
                directed.insert((a, b), ());
            }
        }
        if let Some((e, c)) = incidence.iter().find(|(_, &c)| c > 2) {
            return Err(Error::Validation(format!("edge {e:?} shared by {c} triangles")));
        }
        let open_edges = incidence.values().filter(|&&c| c == 1).count();
        if open_edges != self.boundary.len() {
            return Err(Error::Validation(format!(
                "{open_edges} edges with one triangle but {} boundary edges",
                self.boundary.len()
            )));
        }
        for e in &self.boundary {
            if incidence.get(&edge_key(e.a, e.b)) != Some(&1) || !directed.contains_key(&(e.a, e.b)) {
                return Err(Error::Validation(format!(
                    "boundary edge {}->{} is not a counterclockwise edge of exactly one triangle",
                    e.a, e.b
                )));
            }
        }
        let euler = n as i64 - incidence.len() as i64 + self.triangles.len() as i64;
        if euler != 1 {
            return Err(Error::Validation(format!("Euler characteristic {euler}, expected 1")));
        }
        let nb = self.boundary.len();
        if nb < 3 {
            return Err(Error::Validation("boundary has fewer than 3 edges".into()));
        }
        let mut starts = vec![false; n];
        for i in 0..nb {
            let e = self.boundary[i];
            let next = self.boundary[(i + 1) % nb];
            if e.b != next.a {
                return Err(Error::Validation(format!("boundary cycle broken after edge {i}")));
            }
            if std::mem::replace(&mut starts[e.a], true) {
                return Err(Error::Validation(format!("boundary visits node {} twice", e.a)));
            }
        }
        Ok(())
    }

    /// Checks that every polygon vertex is a node and the boundary length
    /// matches the perimeter.
    pub fn check_against(&self, poly: &Polygon) -> Result<()> {
        let tol = 1e-12 * poly.bounding_box().diagonal();
        for (i, v) in poly.vertices().iter().enumerate() {
            if self.find_node(*v, tol).is_none() {
                return Err(Error::Validation(format!("polygon vertex {i} is not a mesh node")));
            }
        }
        let perim = poly.perimeter();
        let len = self.boundary_length();
        if (len - perim).abs() > 1e-12 * perim {
            return Err(Error::Validation(format!(
                "boundary length {len} differs from perimeter {perim}"
            )));
        }
        Ok(())
    }

    /// Text format: header `nodes N triangles T boundary B`, then node
    /// coordinates, triangle triples and tagged boundary edges.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "nodes {} triangles {} boundary {}",
            self.nodes.len(),
            self.triangles.len(),
            self.boundary.len()
        );
        for p in &self.nodes {
            let _ = writeln!(s, "{:?} {:?}", p.x, p.y);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        for e in &self.boundary {
            let _ = writeln!(s, "{} {} {}", e.a, e.b, e.tag);
        }
        s
    }

    pub fn from_text(text: &str) -> Result<TriangleMesh> {
        let mut lines = text.lines().enumerate();
        let bad = |line: usize, what: &str| Error::Parse(format!("mesh line {}: {what}", line + 1));
        let (ln, header) = lines.next().ok_or_else(|| Error::Parse("empty mesh file".into()))?;
        let words: Vec<&str> = header.split_whitespace().collect();
        if words.len() != 6 || words[0] != "nodes" || words[2] != "triangles" || words[4] != "boundary" {
            return Err(bad(ln, "expected header `nodes N triangles T boundary B`"));
        }
        let count = |w: &str| w.parse::<usize>().map_err(|_| bad(ln, "bad count"));
        let (n, t, b) = (count(words[1])?, count(words[3])?, count(words[5])?);
        let mut nodes = Vec::with_capacity(n);
        for _ in 0..n {
            let (ln, line) = lines.next().ok_or_else(|| bad(ln, "truncated node list"))?;
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|w| w.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(ln, "bad coordinate"))?;
            if v.len() != 2 {
                return Err(bad(ln, "expected two coordinates"));
            }
            nodes.push(Point::new(v[0], v[1]));
        }
        let mut read_triple = |what: &str| -> Result<[usize; 3]> {
            let (ln, line) = lines.next().ok_or_else(|| bad(0, what))?;
            let v: Vec<usize> = line
                .split_whitespace()
                .map(|w| w.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| bad(ln, "bad index"))?;
            if v.len() != 3 {
                return Err(bad(ln, "expected three integers"));
            }
            Ok([v[0], v[1], v[2]])
        };
        let mut triangles = Vec::with_capacity(t);
        for _ in 0..t {
            triangles.push(read_triple("truncated triangle list")?);
        }
        let mut boundary = Vec::with_capacity(b);
        for _ in 0..b {
            let [a, b, tag] = read_triple("truncated boundary list")?;
            boundary.push(BoundaryEdge { a, b, tag });
        }
        TriangleMesh::from_parts(nodes, triangles, boundary)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<TriangleMesh> {
        TriangleMesh::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

#[inline]
pub(crate) fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_dumbbell, make_spiked_square, regular_polygon, unit_square, SpikeSpec};

    fn check(poly: &Polygon, h: f64) -> TriangleMesh {
        let mesh = triangulate(poly, h).unwrap();
        mesh.validate().unwrap();
        mesh.check_against(poly).unwrap();
        let q = mesh.quality();
        assert!(q.max_boundary_edge <= h * (1.0 + 1e-12), "{q:?}");
        assert!(q.max_edge <= 2.0 * h * (1.0 + 1e-12), "{q:?}");
        assert!(q.min_angle_deg >= 1.0, "{q:?}");
        assert!((mesh.area() - poly.area()).abs() < 1e-12 * poly.area());
        mesh
    }

    #[test]
    fn unit_square_mesh() {
        let poly = unit_square();
        let mesh = check(&poly, 0.5);
        assert!((mesh.boundary_length() - 4.0).abs() < 1e-12);
        let v = mesh.node_count() as i64;
        let e = mesh.edge_count() as i64;
        let f = mesh.triangle_count() as i64;
        assert_eq!(v - e + f, 1);
    }

    #[test]
    fn family_meshes_are_valid() {
        check(&regular_polygon(64, 1.0).unwrap(), 0.1);
        check(&make_dumbbell(0.2, 1.0).unwrap(), 0.1);
        check(&make_dumbbell(0.05, 1.0).unwrap(), 0.025);
        for j in 1..=3 {
            let s = make_spiked_square(SpikeSpec::PresetP(4.0), j).unwrap();
            let h = (0.1 / j as f64).min(s.params.tooth_base());
            check(&s.polygon, h);
        }
    }

    #[test]
    fn spiked_vertices_are_nodes() {
        let s = make_spiked_square(SpikeSpec::PresetP(4.0), 2).unwrap();
        let mesh = check(&s.polygon, 1.0 / 72.0);
        let tol = 1e-13;
        let found = s
            .polygon
            .vertices()
            .iter()
            .filter(|v| mesh.find_node(**v, tol).is_some())
            .count();
        assert_eq!(found, 21);
    }

    #[test]
    fn deterministic_under_power_of_two_scaling() {
        let poly = make_dumbbell(0.3, 0.6).unwrap();
        let base = triangulate(&poly, 0.2).unwrap();
        for t in [0.5, 2.0] {
            let scaled = triangulate(&poly.scaled(t).unwrap(), 0.2 * t).unwrap();
            assert_eq!(scaled.triangles(), base.triangles());
            for (p, q) in scaled.nodes().iter().zip(base.nodes()) {
                assert_eq!(*p, *q * t);
            }
        }
        assert_eq!(triangulate(&poly, 0.2).unwrap(), base);
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let mesh = triangulate(&regular_polygon(9, 1.3).unwrap(), 0.3).unwrap();
        let back = TriangleMesh::from_text(&mesh.to_text()).unwrap();
        assert_eq!(back, mesh);
        assert!(TriangleMesh::from_text("nodes 1 triangles 0").is_err());
    }

    #[test]
    fn resource_and_validation_errors() {
        let sq = unit_square();
        assert!(matches!(triangulate(&sq, 1e-9), Err(Error::Resource { .. })));
        assert!(triangulate(&sq, 0.0).is_err());
        assert!(triangulate(&sq, -1.0).is_err());
    }

    #[test]
    fn corrupted_mesh_is_rejected() {
        let mesh = triangulate(&unit_square(), 0.5).unwrap();
        let mut tris = mesh.triangles().to_vec();
        tris.swap(0, 1);
        tris[0].swap(0, 1);
        assert!(TriangleMesh::from_parts(mesh.nodes().to_vec(), tris, mesh.boundary_edges().to_vec()).is_err());
        let mut bnd = mesh.boundary_edges().to_vec();
        bnd.pop();
        assert!(TriangleMesh::from_parts(mesh.nodes().to_vec(), mesh.triangles().to_vec(), bnd).is_err());
    }
}
