//! Polygon triangulation: best-ear clipping, longest-edge (LEPP) bisection,
//! Lawson flips and guarded Laplacian smoothing. Every step visits items in
//! index order, so the output depends only on the input coordinates and
//! scaling the input by a power of two scales the nodes exactly.

use std::collections::HashMap;

use super::{edge_key, BoundaryEdge, TriangleMesh};
use crate::error::{argument, Error, Result};
use crate::geometry::{orient, Point, Polygon};

/// Meshes larger than this are refused.
pub const MAX_ELEMENTS: u64 = 4_000_000;

const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshOptions {
    pub smoothing_sweeps: usize,
    pub delaunay_flips: bool,
}

impl Default for MeshOptions {
    fn default() -> Self {
        MeshOptions {
            smoothing_sweeps: 6,
            delaunay_flips: true,
        }
    }
}

/// Meshes `poly` with boundary edges `<= h_max` and interior edges `<= 2 h_max`.
pub fn triangulate(poly: &Polygon, h_max: f64) -> Result<TriangleMesh> {
    triangulate_with(poly, h_max, MeshOptions::default())
}

pub fn triangulate_with(poly: &Polygon, h_max: f64, opts: MeshOptions) -> Result<TriangleMesh> {
    if !(h_max > 0.0) || !h_max.is_finite() {
        return Err(argument(format!("mesh size must be positive and finite, got {h_max}")));
    }
    let estimate = estimate_elements(poly, h_max);
    if h_max < 1e-6 * poly.min_edge_length() || estimate > MAX_ELEMENTS as f64 {
        return Err(Error::Resource {
            message: format!("mesh size {h_max} is too small for this polygon"),
            estimated_elements: estimate.min(u64::MAX as f64) as u64,
        });
    }
    let pts = poly.vertices().to_vec();
    let tris = ear_clip(&pts)?;
    let mut b = Builder::new(pts, tris, opts.delaunay_flips);
    if opts.delaunay_flips {
        b.lawson_flips();
    }
    b.refine_all(h_max);
    b.smooth(h_max, opts.smoothing_sweeps);
    let mesh = b.finish()?;
    mesh.validate()?;
    Ok(mesh)
}

fn estimate_elements(poly: &Polygon, h: f64) -> f64 {
    let equilateral = 3f64.sqrt() / 4.0 * h * h;
    2.0 * poly.area() / equilateral + 2.0 * poly.perimeter() / h
}

/// `4√3 · area / Σ edge²`: 1 for equilateral, 0 for degenerate.
pub(crate) fn shape_quality(a: Point, b: Point, c: Point) -> f64 {
    let s = (b - a).norm2() + (c - b).norm2() + (a - c).norm2();
    2.0 * 3f64.sqrt() * orient(a, b, c) / s
}

fn in_closed_triangle(a: Point, b: Point, c: Point, p: Point) -> bool {
    orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0
}

/// Clips the best-shaped valid ear until a triangle remains.
fn ear_clip(pts: &[Point]) -> Result<Vec<[usize; 3]>> {
    let n = pts.len();
    let mut prev: Vec<usize> = (0..n).map(|i| (i + n - 1) % n).collect();
    let mut next: Vec<usize> = (0..n).map(|i| (i + 1) % n).collect();
    let mut alive = vec![true; n];
    let mut remaining = n;
    let mut tris = Vec::with_capacity(n - 2);
    let mut start = 0;
    while remaining > 3 {
        let mut ring = Vec::with_capacity(remaining);
        let mut v = start;
        for _ in 0..remaining {
            ring.push(v);
            v = next[v];
        }
        let reflex: Vec<usize> = ring
            .iter()
            .copied()
            .filter(|&v| orient(pts[prev[v]], pts[v], pts[next[v]]) <= 0.0)
            .collect();
        let mut candidates: Vec<(f64, usize)> = ring
            .iter()
            .copied()
            .filter(|&v| orient(pts[prev[v]], pts[v], pts[next[v]]) > 0.0)
            .map(|v| (shape_quality(pts[prev[v]], pts[v], pts[next[v]]), v))
            .collect();
        candidates.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)));
        let ear = candidates.iter().map(|c| c.1).find(|&v| {
            let (p, q) = (prev[v], next[v]);
            reflex
                .iter()
                .all(|&r| r == p || r == q || r == v || !in_closed_triangle(pts[p], pts[v], pts[q], pts[r]))
        });
        let v = ear.ok_or_else(|| Error::Numerical("ear clipping found no valid ear".into()))?;
        let (p, q) = (prev[v], next[v]);
        tris.push([p, v, q]);
        next[p] = q;
        prev[q] = p;
        alive[v] = false;
        remaining -= 1;
        if start == v {
            start = q;
        }
    }
    let a = start;
    tris.push([a, next[a], next[next[a]]]);
    debug_assert!(alive.iter().filter(|&&x| x).count() == 3);
    Ok(tris)
}

/// Mutable triangulation with edge-to-triangle adjacency.
struct Builder {
    nodes: Vec<Point>,
    tris: Vec<[usize; 3]>,
    edge_tris: HashMap<(usize, usize), [usize; 2]>,
    /// Boundary edge key to polygon edge index.
    boundary: HashMap<(usize, usize), usize>,
    /// Restore the local Delaunay property around every inserted midpoint.
    legalize: bool,
}

impl Builder {
    fn new(nodes: Vec<Point>, tris: Vec<[usize; 3]>, legalize: bool) -> Self {
        let n = nodes.len();
        let mut b = Builder {
            nodes,
            tris: Vec::new(),
            edge_tris: HashMap::new(),
            boundary: (0..n).map(|i| (edge_key(i, (i + 1) % n), i)).collect(),
            legalize,
        };
        for t in tris {
            let id = b.tris.len();
            b.tris.push(t);
            for i in 0..3 {
                b.attach(t[i], t[(i + 1) % 3], id);
            }
        }
        b
    }

    fn attach(&mut self, a: usize, b: usize, t: usize) {
        let slot = self.edge_tris.entry(edge_key(a, b)).or_insert([NONE, NONE]);
        if slot[0] == NONE {
            slot[0] = t;
        } else {
            slot[1] = t;
        }
    }

    fn reassign(&mut self, a: usize, b: usize, old: usize, new: usize) {
        let slot = self.edge_tris.get_mut(&edge_key(a, b)).expect("edge present");
        for s in slot.iter_mut() {
            if *s == old {
                *s = new;
                return;
            }
        }
        unreachable!("triangle not incident to edge");
    }

    fn len2(&self, key: (usize, usize)) -> f64 {
        (self.nodes[key.0] - self.nodes[key.1]).norm2()
    }

    /// Longest edge of `t`, ties broken by the smaller node-pair key.
    fn longest(&self, t: usize) -> (usize, usize) {
        let v = self.tris[t];
        let mut best = edge_key(v[0], v[1]);
        let mut best_len = self.len2(best);
        for i in 1..3 {
            let key = edge_key(v[i], v[(i + 1) % 3]);
            let len = self.len2(key);
            if len > best_len || (len == best_len && key < best) {
                best = key;
                best_len = len;
            }
        }
        best
    }

    fn other(&self, key: (usize, usize), t: usize) -> Option<usize> {
        let slot = self.edge_tris[&key];
        let o = if slot[0] == t { slot[1] } else { slot[0] };
        (o != NONE).then_some(o)
    }

    /// Splits edge `key` at its midpoint, halving each incident triangle.
    fn bisect(&mut self, key: (usize, usize)) {
        let m = self.nodes.len();
        self.nodes.push(self.nodes[key.0].midpoint(self.nodes[key.1]));
        let slot = self.edge_tris.remove(&key).expect("edge present");
        let mut halves = Vec::with_capacity(4);
        for &t in slot.iter().filter(|&&t| t != NONE) {
            let v = self.tris[t];
            let i = (0..3)
                .find(|&i| edge_key(v[i], v[(i + 1) % 3]) == key)
                .expect("edge in triangle");
            let (a, b, c) = (v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
            let t2 = self.tris.len();
            self.tris[t] = [a, m, c];
            self.tris.push([m, b, c]);
            halves.extend([t, t2]);
            self.attach(a, m, t);
            self.attach(m, b, t2);
            self.attach(m, c, t);
            self.attach(m, c, t2);
            self.reassign(b, c, t, t2);
        }
        if let Some(tag) = self.boundary.remove(&key) {
            self.boundary.insert(edge_key(key.0, m), tag);
            self.boundary.insert(edge_key(m, key.1), tag);
        }
        if self.legalize {
            let mut stack: Vec<(usize, usize)> = halves
                .iter()
                .map(|&t| {
                    let v = self.tris[t];
                    let i = v.iter().position(|&x| x == m).expect("midpoint in half");
                    edge_key(v[(i + 1) % 3], v[(i + 2) % 3])
                })
                .collect();
            stack.reverse();
            self.flip_until_legal(stack);
        }
    }

    /// Bisects along the longest-edge propagation path until the longest
    /// edge of `t0` has been split.
    fn refine_triangle(&mut self, t0: usize) {
        let target = self.longest(t0);
        while self.edge_tris.contains_key(&target) {
            let mut t = t0;
            let mut e = target;
            loop {
                match self.other(e, t) {
                    None => break,
                    Some(n) => {
                        let en = self.longest(n);
                        if en == e {
                            break;
                        }
                        t = n;
                        e = en;
                    }
                }
            }
            self.bisect(e);
        }
    }

    fn bound2(&self, key: (usize, usize), h: f64) -> f64 {
        if self.boundary.contains_key(&key) {
            h * h
        } else {
            4.0 * h * h
        }
    }

    fn violates(&self, t: usize, h: f64) -> bool {
        let v = self.tris[t];
        (0..3).any(|i| {
            let key = edge_key(v[i], v[(i + 1) % 3]);
            self.len2(key) > self.bound2(key, h)
        })
    }

    /// Sweeps in index order until no triangle violates the size bound; flips
    /// may rewrite triangles an earlier sweep already accepted.
    fn refine_all(&mut self, h: f64) {
        loop {
            let mut changed = false;
            let mut t = 0;
            while t < self.tris.len() {
                while self.violates(t, h) {
                    self.refine_triangle(t);
                    changed = true;
                }
                t += 1;
            }
            if !changed {
                break;
            }
        }
    }

    /// Flips interior edges until every one is locally Delaunay.
    fn lawson_flips(&mut self) {
        let mut stack: Vec<(usize, usize)> = self
            .edge_tris
            .iter()
            .filter(|(k, s)| s[1] != NONE && !self.boundary.contains_key(k))
            .map(|(k, _)| *k)
            .collect();
        stack.sort_unstable_by(|a, b| b.cmp(a));
        self.flip_until_legal(stack);
    }

    fn flip_until_legal(&mut self, mut stack: Vec<(usize, usize)>) {
        let mut budget = 64 * self.tris.len() + 1024;
        while let Some(key) = stack.pop() {
            if budget == 0 {
                break;
            }
            if let Some(outer) = self.try_flip(key) {
                budget -= 1;
                stack.extend(outer);
            }
        }
    }

    fn try_flip(&mut self, key: (usize, usize)) -> Option<[(usize, usize); 4]> {
        let slot = *self.edge_tris.get(&key)?;
        if slot[1] == NONE || self.boundary.contains_key(&key) {
            return None;
        }
        let (t1, t2) = (slot[0], slot[1]);
        let v = self.tris[t1];
        let i = (0..3).find(|&i| edge_key(v[i], v[(i + 1) % 3]) == key)?;
        let (a, b, c) = (v[i], v[(i + 1) % 3], v[(i + 2) % 3]);
        let w = self.tris[t2];
        let d = *w.iter().find(|&&x| x != a && x != b)?;
        let p = &self.nodes;
        if !(orient(p[a], p[d], p[c]) > 0.0 && orient(p[d], p[b], p[c]) > 0.0) {
            return None;
        }
        if !incircle_strict(p[a], p[b], p[c], p[d]) {
            return None;
        }
        self.edge_tris.remove(&key);
        self.tris[t1] = [a, d, c];
        self.tris[t2] = [d, b, c];
        self.edge_tris.insert(edge_key(c, d), [t1, t2]);
        self.reassign(a, d, t2, t1);
        self.reassign(b, c, t1, t2);
        Some([edge_key(a, d), edge_key(d, b), edge_key(b, c), edge_key(c, a)])
    }

    /// Laplacian smoothing of interior nodes, keeping a move only when no
    /// incident triangle inverts, the worst incident shape does not degrade
    /// and incident edges stay within `2h`.
    fn smooth(&mut self, h: f64, sweeps: usize) {
        if sweeps == 0 {
            return;
        }
        let n = self.nodes.len();
        let mut on_boundary = vec![false; n];
        for k in self.boundary.keys() {
            on_boundary[k.0] = true;
            on_boundary[k.1] = true;
        }
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (t, v) in self.tris.iter().enumerate() {
            for &x in v {
                incident[x].push(t);
            }
        }
        let mut neighbours: Vec<Vec<usize>> = vec![Vec::new(); n];
        for v in 0..n {
            let mut nb: Vec<usize> = incident[v]
                .iter()
                .flat_map(|&t| self.tris[t])
                .filter(|&x| x != v)
                .collect();
            nb.sort_unstable();
            nb.dedup();
            neighbours[v] = nb;
        }
        let bound2 = 4.0 * h * h;
        for _ in 0..sweeps {
            let mut moved = false;
            for v in 0..n {
                if on_boundary[v] || neighbours[v].is_empty() {
                    continue;
                }
                let mut sum = Point::default();
                for &u in &neighbours[v] {
                    sum = sum + self.nodes[u];
                }
                let target = sum * (1.0 / neighbours[v].len() as f64);
                if target == self.nodes[v] {
                    continue;
                }
                let old_q = self.worst_quality(&incident[v], v, self.nodes[v]);
                let new_q = self.worst_quality(&incident[v], v, target);
                let fits = neighbours[v]
                    .iter()
                    .all(|&u| (self.nodes[u] - target).norm2() <= bound2);
                if new_q > 0.0 && new_q >= old_q && fits {
                    self.nodes[v] = target;
                    moved = true;
                }
            }
            if !moved {
                break;
            }
        }
    }

    fn worst_quality(&self, tris: &[usize], v: usize, at: Point) -> f64 {
        let pos = |x: usize| if x == v { at } else { self.nodes[x] };
        tris.iter()
            .map(|&t| {
                let [a, b, c] = self.tris[t];
                shape_quality(pos(a), pos(b), pos(c))
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Orders the boundary as a counterclockwise cycle starting at node 0.
    fn finish(self) -> Result<TriangleMesh> {
        let mut next: HashMap<usize, (usize, usize)> = HashMap::new();
        for t in &self.tris {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                if let Some(&tag) = self.boundary.get(&edge_key(a, b)) {
                    next.insert(a, (b, tag));
                }
            }
        }
        let mut cycle = Vec::with_capacity(next.len());
        let mut a = 0;
        for _ in 0..next.len() {
            let &(b, tag) = next
                .get(&a)
                .ok_or_else(|| Error::Numerical("boundary cycle is broken".into()))?;
            cycle.push(BoundaryEdge { a, b, tag });
            a = b;
        }
        Ok(TriangleMesh::from_parts_unchecked(self.nodes, self.tris, cycle))
    }
}

/// `d` strictly inside the circumcircle of counterclockwise `abc`, with a
/// relative margin so cocircular quadruples do not flip back and forth.
fn incircle_strict(a: Point, b: Point, c: Point, d: Point) -> bool {
    let (ax, ay) = (a.x - d.x, a.y - d.y);
    let (bx, by) = (b.x - d.x, b.y - d.y);
    let (cx, cy) = (c.x - d.x, c.y - d.y);
    let (a2, b2, c2) = (ax * ax + ay * ay, bx * bx + by * by, cx * cx + cy * cy);
    let det = a2 * (bx * cy - by * cx) - b2 * (ax * cy - ay * cx) + c2 * (ax * by - ay * bx);
    let scale = a2 * (bx * cy).abs().max((by * cx).abs())
        + b2 * (ax * cy).abs().max((ay * cx).abs())
        + c2 * (ax * by).abs().max((ay * bx).abs());
    det > 1e-10 * scale
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_spiked_square, SpikeSpec};

    #[test]
    fn ear_clip_covers_area() {
        let s = make_spiked_square(SpikeSpec::PresetP(4.0), 3).unwrap();
        let pts = s.polygon.vertices();
        let tris = ear_clip(pts).unwrap();
        assert_eq!(tris.len(), pts.len() - 2);
        let area: f64 = tris
            .iter()
            .map(|t| 0.5 * orient(pts[t[0]], pts[t[1]], pts[t[2]]))
            .sum();
        assert!(tris.iter().all(|t| orient(pts[t[0]], pts[t[1]], pts[t[2]]) > 0.0));
        assert!((area - s.polygon.area()).abs() < 1e-14);
    }

    #[test]
    fn incircle_predicate() {
        let a = Point::new(0.0, 0.0);
        let b = Point::new(1.0, 0.0);
        let c = Point::new(0.0, 1.0);
        assert!(incircle_strict(a, b, c, Point::new(0.5, 0.5)));
        assert!(!incircle_strict(a, b, c, Point::new(1.0, 1.0)));
        assert!(!incircle_strict(a, b, c, Point::new(2.0, 2.0)));
    }

    #[test]
    fn quality_is_one_for_equilateral() {
        let q = shape_quality(
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(0.5, 3f64.sqrt() / 2.0),
        );
        assert!((q - 1.0).abs() < 1e-15);
    }
}
