//! Indexed triangle meshes: loading, validation, normalization, saving.
//!
//! Meshes are normalized into the canonical domain [-0.5, 0.5]^3 with the
//! largest bounding-box extent scaled to 0.9, leaving a 0.05 margin per side
//! so the zero level set stays away from grid boundaries during surface
//! extraction. Scaling is always isotropic so distances keep their meaning.

mod obj;
mod stl;

use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::{Aabb, Vec3};

/// Largest bounding-box extent after normalization.
pub const CANONICAL_EXTENT: f64 = 0.9;

/// Supported mesh file formats. OBJ is the canonical interchange format;
/// binary STL is import-only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Stl,
}

impl MeshFormat {
    /// Guess the format from a file extension.
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("obj") => Some(MeshFormat::Obj),
            Some("stl") => Some(MeshFormat::Stl),
            _ => None,
        }
    }
}

/// Affine map from original to canonical coordinates:
/// `canonical = (original - center) * scale`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Normalization {
    pub center: [f64; 3],
    pub scale: f64,
}

/// An indexed triangle mesh.
///
/// Invariants enforced at construction: all coordinates finite, all triangle
/// indices in range, no triangle with two equal indices.
#[derive(Debug, Clone, PartialEq)]
pub struct TriMesh {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    normalization: Option<Normalization>,
}

/// Result of loading a mesh from disk.
#[derive(Debug)]
pub struct LoadReport {
    pub mesh: TriMesh,
    /// Number of degenerate faces (two equal vertex indices) dropped.
    pub dropped_degenerate: usize,
}

impl TriMesh {
    /// Build a mesh, validating all invariants. Degenerate triangles are
    /// rejected here; loaders drop them before calling this.
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<TriMesh> {
        let n = vertices.len() as u32;
        for (i, v) in vertices.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidMesh(format!(
                    "vertex {} has non-finite coordinates",
                    i
                )));
            }
        }
        for (i, t) in triangles.iter().enumerate() {
            if t[0] >= n || t[1] >= n || t[2] >= n {
                return Err(Error::InvalidMesh(format!(
                    "triangle {} references vertex out of range (vertex count {})",
                    i, n
                )));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidMesh(format!(
                    "triangle {} has repeated vertex indices",
                    i
                )));
            }
        }
        Ok(TriMesh {
            vertices,
            triangles,
            normalization: None,
        })
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn normalization(&self) -> Option<Normalization> {
        self.normalization
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triangles.is_empty()
    }

    /// Corner positions of triangle `i`.
    #[inline]
    pub fn triangle_vertices(&self, i: usize) -> [Vec3; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn bounding_box(&self) -> Aabb {
        Aabb::from_points(self.vertices.iter().copied())
    }

    /// Reverse the orientation of every triangle.
    pub fn flip_orientation(&mut self) {
        for t in &mut self.triangles {
            t.swap(1, 2);
        }
    }

    /// Concatenate another mesh into this one (triangle soup union).
    pub fn append(&mut self, other: &TriMesh) {
        let offset = self.vertices.len() as u32;
        self.vertices.extend_from_slice(&other.vertices);
        self.triangles
            .extend(other.triangles.iter().map(|t| [t[0] + offset, t[1] + offset, t[2] + offset]));
    }
}

/// Center the mesh on the origin and scale its largest bounding-box extent to
/// 0.9, recording the map from original to canonical coordinates. Repeated
/// normalization composes the recorded transforms, so the record always maps
/// the original input coordinates.
pub fn normalize_mesh(mesh: &TriMesh) -> Result<TriMesh> {
    if mesh.vertices.is_empty() || mesh.triangles.is_empty() {
        return Err(Error::InvalidMesh("cannot normalize an empty mesh".into()));
    }
    let bbox = mesh.bounding_box();
    let ext = bbox.extent();
    let max_extent = ext.x.max(ext.y).max(ext.z);
    if max_extent <= 0.0 {
        return Err(Error::InvalidMesh(
            "all vertices coincident; mesh has zero extent".into(),
        ));
    }
    let center = bbox.center();
    let scale = CANONICAL_EXTENT / max_extent;

    let vertices = mesh
        .vertices
        .iter()
        .map(|&v| (v - center) * scale)
        .collect();

    let normalization = match mesh.normalization {
        // prior: canonical0 = (orig - c0) * s0; now: new = (canonical0 - c1) * s1
        // => new = (orig - (c0 + c1/s0)) * (s0 * s1)
        Some(prev) => {
            let c0 = Vec3::from(prev.center);
            let combined = c0 + center / prev.scale;
            Normalization {
                center: combined.into(),
                scale: prev.scale * scale,
            }
        }
        None => Normalization {
            center: center.into(),
            scale,
        },
    };

    Ok(TriMesh {
        vertices,
        triangles: mesh.triangles.clone(),
        normalization: Some(normalization),
    })
}

/// Load a mesh, dropping degenerate faces and reporting the drop count.
pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<LoadReport> {
    let (vertices, raw_triangles) = match format {
        MeshFormat::Obj => obj::read(path)?,
        MeshFormat::Stl => stl::read(path)?,
    };
    let n = vertices.len() as u32;
    let mut dropped = 0usize;
    let mut triangles = Vec::with_capacity(raw_triangles.len());
    for (i, t) in raw_triangles.into_iter().enumerate() {
        if t[0] >= n || t[1] >= n || t[2] >= n {
            return Err(Error::InvalidMesh(format!(
                "face {} references vertex out of range (vertex count {})",
                i, n
            )));
        }
        if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
            dropped += 1;
            continue;
        }
        triangles.push(t);
    }
    if triangles.is_empty() {
        return Err(Error::InvalidMesh(format!(
            "{}: no usable triangles after dropping {} degenerate faces",
            path.display(),
            dropped
        )));
    }
    let mesh = TriMesh::new(vertices, triangles)?;
    Ok(LoadReport {
        mesh,
        dropped_degenerate: dropped,
    })
}

/// Save a mesh. Serialization is canonical: saving a loaded mesh again
/// produces byte-identical output.
pub fn save_mesh(mesh: &TriMesh, path: &Path, format: MeshFormat) -> Result<()> {
    if mesh.is_empty() {
        return Err(Error::InvalidMesh("refusing to save an empty mesh".into()));
    }
    match format {
        MeshFormat::Obj => obj::write(mesh, path),
        MeshFormat::Stl => Err(Error::InvalidConfig(
            "STL output is not supported; use OBJ".into(),
        )),
    }
}
