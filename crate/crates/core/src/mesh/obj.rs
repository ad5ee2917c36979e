//! Wavefront OBJ subset: `v x y z` and `f i j k ...` with 1-based indices.
//! Polygon faces are fan-triangulated. Other line types are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::TriMesh;

pub(super) fn read(path: &Path) -> Result<(Vec<Vec3>, Vec<[u32; 3]>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    for (lineno, line) in reader.lines().enumerate() {
        let lineno = lineno + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        let mut fields = line.split_whitespace();
        match fields.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for c in &mut coords {
                    let tok = fields
                        .next()
                        .ok_or_else(|| Error::parse(path, lineno, "vertex needs 3 coordinates"))?;
                    *c = tok.parse().map_err(|_| {
                        Error::parse(path, lineno, format!("bad coordinate '{}'", tok))
                    })?;
                    if !c.is_finite() {
                        return Err(Error::parse(path, lineno, "non-finite coordinate"));
                    }
                }
                vertices.push(coords.into());
            }
            Some("f") => {
                let mut idx: Vec<u32> = Vec::with_capacity(4);
                for tok in fields {
                    idx.push(parse_face_index(tok, vertices.len(), path, lineno)?);
                }
                if idx.len() < 3 {
                    return Err(Error::parse(path, lineno, "face needs at least 3 indices"));
                }
                for i in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[i], idx[i + 1]]);
                }
            }
            // normals, texcoords, groups, materials, comments: skipped
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

/// Parse one face index token (`7`, `7/2`, `7//3`, `-1`), returning a
/// 0-based vertex index.
fn parse_face_index(tok: &str, vertex_count: usize, path: &Path, lineno: usize) -> Result<u32> {
    let first = tok.split('/').next().unwrap_or("");
    let raw: i64 = first
        .parse()
        .map_err(|_| Error::parse(path, lineno, format!("bad face index '{}'", tok)))?;
    let resolved = if raw > 0 {
        raw - 1
    } else if raw < 0 {
        vertex_count as i64 + raw
    } else {
        return Err(Error::parse(path, lineno, "face index 0 is not valid"));
    };
    if resolved < 0 || resolved >= vertex_count as i64 {
        return Err(Error::parse(
            path,
            lineno,
            format!("face index {} out of range ({} vertices)", raw, vertex_count),
        ));
    }
    Ok(resolved as u32)
}

pub(super) fn write(mesh: &TriMesh, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for v in mesh.vertices() {
        // f64 Display is shortest-roundtrip, so save -> load -> save is
        // byte-identical
        writeln!(w, "v {} {} {}", v.x, v.y, v.z).map_err(|e| Error::io(path, e))?;
    }
    for t in mesh.triangles() {
        writeln!(w, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1)
            .map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{load_mesh, save_mesh, MeshFormat};

    fn write_temp(content: &str) -> tempfile::TempPath {
        let mut f = tempfile::Builder::new()
            .suffix(".obj")
            .tempfile()
            .unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f.into_temp_path()
    }

    #[test]
    fn single_triangle() {
        let p = write_temp("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n");
        let report = load_mesh(&p, MeshFormat::Obj).unwrap();
        assert_eq!(report.mesh.vertex_count(), 3);
        assert_eq!(report.mesh.triangle_count(), 1);
        assert_eq!(report.dropped_degenerate, 0);
    }

    #[test]
    fn degenerate_face_dropped() {
        let p = write_temp("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 1 2\nf 1 2 3\n");
        let report = load_mesh(&p, MeshFormat::Obj).unwrap();
        assert_eq!(report.mesh.triangle_count(), 1);
        assert_eq!(report.dropped_degenerate, 1);
    }

    #[test]
    fn all_degenerate_is_error() {
        let p = write_temp("v 0 0 0\nv 1 0 0\nf 1 1 2\n");
        assert!(load_mesh(&p, MeshFormat::Obj).is_err());
    }

    #[test]
    fn unit_cube_parses() {
        let cube = "\
v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nv 0 0 1\nv 1 0 1\nv 1 1 1\nv 0 1 1\n\
f 1 3 2\nf 1 4 3\nf 5 6 7\nf 5 7 8\nf 1 2 6\nf 1 6 5\nf 3 4 8\nf 3 8 7\n\
f 1 5 8\nf 1 8 4\nf 2 3 7\nf 2 7 6\n";
        let p = write_temp(cube);
        let report = load_mesh(&p, MeshFormat::Obj).unwrap();
        assert_eq!(report.mesh.vertex_count(), 8);
        assert_eq!(report.mesh.triangle_count(), 12);
    }

    #[test]
    fn quad_faces_fan_triangulated() {
        let p = write_temp("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
        let report = load_mesh(&p, MeshFormat::Obj).unwrap();
        assert_eq!(report.mesh.triangle_count(), 2);
        assert_eq!(report.mesh.triangles()[0], [0, 1, 2]);
        assert_eq!(report.mesh.triangles()[1], [0, 2, 3]);
    }

    #[test]
    fn slash_and_negative_indices() {
        let p = write_temp("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1 2//2 -1\n");
        let report = load_mesh(&p, MeshFormat::Obj).unwrap();
        assert_eq!(report.mesh.triangles()[0], [0, 1, 2]);
    }

    #[test]
    fn parse_error_reports_line() {
        let p = write_temp("v 0 0 0\nv bogus 0 0\n");
        match load_mesh(&p, MeshFormat::Obj) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {:?}", other.map(|r| r.mesh)),
        }
    }

    #[test]
    fn out_of_range_index_is_parse_error() {
        let p = write_temp("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n");
        assert!(load_mesh(&p, MeshFormat::Obj).is_err());
    }

    #[test]
    fn save_load_save_byte_identical() {
        let mesh = crate::primitives::box_mesh(
            crate::geom::Vec3::new(0.1, -0.2, 0.3),
            crate::geom::Vec3::new(0.7, 0.31, 0.9),
        )
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.obj");
        let p2 = dir.path().join("b.obj");
        save_mesh(&mesh, &p1, MeshFormat::Obj).unwrap();
        let loaded = load_mesh(&p1, MeshFormat::Obj).unwrap().mesh;
        assert_eq!(loaded.triangle_count(), 12);
        save_mesh(&loaded, &p2, MeshFormat::Obj).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        // coordinates survive exactly under shortest-roundtrip formatting
        for (a, b) in mesh.vertices().iter().zip(loaded.vertices()) {
            assert!((*a - *b).norm() < 1e-6);
        }
        assert_eq!(mesh.triangles(), loaded.triangles());
    }
}
