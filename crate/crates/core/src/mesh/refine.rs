use std::collections::HashMap;

use super::{edge_key, BoundaryEdge, TriangleMesh};
use crate::error::Result;

/// Red refinement: every triangle splits into four through its edge
/// midpoints. Node count becomes `N + E`.
pub fn uniform_refine(mesh: &TriangleMesh) -> Result<TriangleMesh> {
    Ok(uniform_refine_with_parents(mesh)?.0)
}

/// As [`uniform_refine`], also returning the parent edge of every new node
/// (node `N + i` is the midpoint of `parents[i]`).
pub fn uniform_refine_with_parents(mesh: &TriangleMesh) -> Result<(TriangleMesh, Vec<[usize; 2]>)> {
    let mut nodes = mesh.nodes().to_vec();
    let mut parents = Vec::new();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<_>| -> usize {
        *mid.entry(edge_key(a, b)).or_insert_with(|| {
            let p = crate::geometry::Point::midpoint(nodes[a], nodes[b]);
            nodes.push(p);
            parents.push([a, b]);
            nodes.len() - 1
        })
    };
    let mut triangles = Vec::with_capacity(4 * mesh.triangle_count());
    for &[a, b, c] in mesh.triangles() {
        let ab = midpoint(a, b, &mut nodes);
        let bc = midpoint(b, c, &mut nodes);
        let ca = midpoint(c, a, &mut nodes);
        triangles.push([a, ab, ca]);
        triangles.push([ab, b, bc]);
        triangles.push([ca, bc, c]);
        triangles.push([ab, bc, ca]);
    }
    let mut boundary = Vec::with_capacity(2 * mesh.boundary_edges().len());
    for e in mesh.boundary_edges() {
        let m = midpoint(e.a, e.b, &mut nodes);
        boundary.push(BoundaryEdge { a: e.a, b: m, tag: e.tag });
        boundary.push(BoundaryEdge { a: m, b: e.b, tag: e.tag });
    }
    Ok((TriangleMesh::from_parts(nodes, triangles, boundary)?, parents))
}
