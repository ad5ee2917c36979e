//! Procedural mesh primitives with outward (counter-clockwise from outside)
//! orientation. Used to build synthetic datasets and test fixtures.

use std::collections::HashMap;

use crate::error::Result;
use crate::geom::Vec3;
use crate::mesh::TriMesh;

/// Axis-aligned box given by center and full extents, 12 triangles.
pub fn box_mesh(center: Vec3, extents: Vec3) -> Result<TriMesh> {
    let h = extents * 0.5;
    let corner = |dx: f64, dy: f64, dz: f64| {
        Vec3::new(center.x + dx * h.x, center.y + dy * h.y, center.z + dz * h.z)
    };
    let vertices = vec![
        corner(-1.0, -1.0, -1.0), // 0
        corner(1.0, -1.0, -1.0),  // 1
        corner(1.0, 1.0, -1.0),   // 2
        corner(-1.0, 1.0, -1.0),  // 3
        corner(-1.0, -1.0, 1.0),  // 4
        corner(1.0, -1.0, 1.0),   // 5
        corner(1.0, 1.0, 1.0),    // 6
        corner(-1.0, 1.0, 1.0),   // 7
    ];
    let triangles = vec![
        [0, 2, 1], // -z
        [0, 3, 2],
        [4, 5, 6], // +z
        [4, 6, 7],
        [0, 1, 5], // -y
        [0, 5, 4],
        [2, 3, 7], // +y
        [2, 7, 6],
        [0, 4, 7], // -x
        [0, 7, 3],
        [1, 2, 6], // +x
        [1, 6, 5],
    ];
    TriMesh::new(vertices, triangles)
}

/// Closed cylinder along +z with fan-capped ends.
pub fn cylinder_mesh(center: Vec3, radius: f64, height: f64, segments: usize) -> Result<TriMesh> {
    let n = segments.max(3);
    let z0 = center.z - height * 0.5;
    let z1 = center.z + height * 0.5;

    let mut vertices = Vec::with_capacity(2 * n + 2);
    for &z in &[z0, z1] {
        for i in 0..n {
            let theta = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
            vertices.push(Vec3::new(
                center.x + radius * theta.cos(),
                center.y + radius * theta.sin(),
                z,
            ));
        }
    }
    let bottom_center = vertices.len() as u32;
    vertices.push(Vec3::new(center.x, center.y, z0));
    let top_center = vertices.len() as u32;
    vertices.push(Vec3::new(center.x, center.y, z1));

    let mut triangles = Vec::with_capacity(4 * n);
    for i in 0..n as u32 {
        let j = (i + 1) % n as u32;
        let (b0, b1) = (i, j);
        let (t0, t1) = (i + n as u32, j + n as u32);
        // side quad, outward
        triangles.push([b0, b1, t1]);
        triangles.push([b0, t1, t0]);
        // caps: bottom faces -z, top faces +z
        triangles.push([bottom_center, b1, b0]);
        triangles.push([top_center, t0, t1]);
    }
    TriMesh::new(vertices, triangles)
}

/// Icosphere: subdivided icosahedron with vertices projected onto the sphere.
pub fn icosphere(center: Vec3, radius: f64, subdivisions: usize) -> Result<TriMesh> {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = vec![
        Vec3::new(-1.0, phi, 0.0),
        Vec3::new(1.0, phi, 0.0),
        Vec3::new(-1.0, -phi, 0.0),
        Vec3::new(1.0, -phi, 0.0),
        Vec3::new(0.0, -1.0, phi),
        Vec3::new(0.0, 1.0, phi),
        Vec3::new(0.0, -1.0, -phi),
        Vec3::new(0.0, 1.0, -phi),
        Vec3::new(phi, 0.0, -1.0),
        Vec3::new(phi, 0.0, 1.0),
        Vec3::new(-phi, 0.0, -1.0),
        Vec3::new(-phi, 0.0, 1.0),
    ];
    for v in &mut vertices {
        *v = *v / v.norm();
    }
    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for t in &triangles {
            let mid = |a: u32, b: u32, vertices: &mut Vec<Vec3>, midpoint: &mut HashMap<(u32, u32), u32>| {
                let key = (a.min(b), a.max(b));
                *midpoint.entry(key).or_insert_with(|| {
                    let m = (vertices[a as usize] + vertices[b as usize]) * 0.5;
                    vertices.push(m / m.norm());
                    (vertices.len() - 1) as u32
                })
            };
            let ab = mid(t[0], t[1], &mut vertices, &mut midpoint);
            let bc = mid(t[1], t[2], &mut vertices, &mut midpoint);
            let ca = mid(t[2], t[0], &mut vertices, &mut midpoint);
            next.push([t[0], ab, ca]);
            next.push([t[1], bc, ab]);
            next.push([t[2], ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }

    let vertices = vertices
        .into_iter()
        .map(|v| center + v * radius)
        .collect();
    TriMesh::new(vertices, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Signed volume via the divergence theorem; positive for outward
    /// orientation.
    pub(crate) fn signed_volume(mesh: &TriMesh) -> f64 {
        let mut v6 = 0.0;
        for i in 0..mesh.triangle_count() {
            let [a, b, c] = mesh.triangle_vertices(i);
            v6 += a.dot(b.cross(c));
        }
        v6 / 6.0
    }

    #[test]
    fn box_is_closed_and_outward() {
        let m = box_mesh(Vec3::ZERO, Vec3::new(1.0, 2.0, 3.0)).unwrap();
        assert_eq!(m.triangle_count(), 12);
        assert!((signed_volume(&m) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn cylinder_volume_approaches_analytic() {
        let m = cylinder_mesh(Vec3::ZERO, 0.5, 1.0, 64).unwrap();
        let analytic = std::f64::consts::PI * 0.25;
        assert!((signed_volume(&m) - analytic).abs() / analytic < 0.01);
    }

    #[test]
    fn icosphere_counts_and_volume() {
        let m = icosphere(Vec3::ZERO, 0.45, 3).unwrap();
        assert_eq!(m.triangle_count(), 20 * 4usize.pow(3));
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * 0.45f64.powi(3);
        // inscribed polyhedron: slightly below the analytic ball volume
        let v = signed_volume(&m);
        assert!(v > 0.98 * analytic && v < analytic);
    }
}
