//! Binary STL import: 80-byte header, u32 triangle count, 50-byte records
//! (normal, three vertices as f32 triples, u16 attribute), little-endian.
//! Vertices are welded by exact bit pattern to recover an indexed mesh.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::geom::Vec3;

pub(super) fn read(path: &Path) -> Result<(Vec<Vec3>, Vec<[u32; 3]>)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() < 84 {
        return Err(Error::parse(
            path,
            bytes.len(),
            "binary STL shorter than 84-byte preamble",
        ));
    }
    let count = u32::from_le_bytes(bytes[80..84].try_into().unwrap()) as usize;
    let expected = 84 + count * 50;
    if bytes.len() < expected {
        return Err(Error::parse(
            path,
            bytes.len(),
            format!(
                "triangle count {} implies {} bytes, file has {}",
                count,
                expected,
                bytes.len()
            ),
        ));
    }

    let mut vertices: Vec<Vec3> = Vec::new();
    let mut index: HashMap<[u32; 3], u32> = HashMap::new();
    let mut triangles: Vec<[u32; 3]> = Vec::with_capacity(count);

    for t in 0..count {
        let rec = 84 + t * 50;
        let mut tri = [0u32; 3];
        for (v, slot) in tri.iter_mut().enumerate() {
            // skip the 12-byte normal, then 12 bytes per vertex
            let off = rec + 12 + v * 12;
            let f32_bits = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
            let key = [f32_bits(off), f32_bits(off + 4), f32_bits(off + 8)];
            let coord = |bits: u32| f32::from_bits(bits) as f64;
            let p = Vec3::new(coord(key[0]), coord(key[1]), coord(key[2]));
            if !p.is_finite() {
                return Err(Error::parse(path, rec, "non-finite vertex coordinate"));
            }
            *slot = *index.entry(key).or_insert_with(|| {
                vertices.push(p);
                (vertices.len() - 1) as u32
            });
        }
        triangles.push(tri);
    }
    Ok((vertices, triangles))
}
