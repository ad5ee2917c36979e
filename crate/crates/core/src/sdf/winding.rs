//! Generalized winding number for inside/outside classification.
//!
//! w(p) = (1/4pi) * sum over triangles of the signed solid angle subtended
//! at p. For a closed, outward-oriented surface w is ~1 inside and ~0
//! outside; for open meshes it degrades gracefully, which is what makes the
//! sign assignment robust to non-watertight inputs.

use crate::geom::Vec3;
use crate::mesh::TriMesh;

/// Signed solid angle of triangle (a, b, c) as seen from `p`
/// (Van Oosterom & Strackee two-argument arctangent form).
#[inline]
pub fn triangle_solid_angle(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let ra = a - p;
    let rb = b - p;
    let rc = c - p;
    let la = ra.norm();
    let lb = rb.norm();
    let lc = rc.norm();
    let numer = ra.dot(rb.cross(rc));
    let denom = la * lb * lc + ra.dot(rb) * lc + rb.dot(rc) * la + rc.dot(ra) * lb;
    2.0 * numer.atan2(denom)
}

/// Generalized winding number of the mesh at `p`.
pub fn winding_number(mesh: &TriMesh, p: Vec3) -> f64 {
    winding_number_indexed(mesh.vertices(), mesh.triangles(), p)
}

/// Winding number over an explicit vertex/triangle view (hot path for grids).
pub fn winding_number_indexed(vertices: &[Vec3], triangles: &[[u32; 3]], p: Vec3) -> f64 {
    let mut total = 0.0;
    for t in triangles {
        total += triangle_solid_angle(
            p,
            vertices[t[0] as usize],
            vertices[t[1] as usize],
            vertices[t[2] as usize],
        );
    }
    total / (4.0 * std::f64::consts::PI)
}
