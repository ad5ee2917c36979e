//! "SDF1" grid file format.
//!
//! Layout (little-endian):
//!   magic `53 44 46 31` ("SDF1")
//!   u32 nx, ny, nz
//!   f32 origin x, y, z
//!   f32 spacing
//!   u8  sign convention (1 = positive inside)
//!   3 reserved zero bytes
//!   nx*ny*nz f32 values, x-fastest
//!
//! A JSON sidecar with the same basename and `.json` extension records
//! provenance (source mesh, resolution, threshold, tool version) and, for
//! band files, the band and cutoff.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::sdf::SdfGrid;

/// File magic: "SDF1".
pub const SDF_MAGIC: [u8; 4] = [0x53, 0x44, 0x46, 0x31];

/// Provenance record stored next to each grid file.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Sidecar {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolution: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    pub tool_version: String,
    /// "low" or "high" for band files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub band: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
    /// Truncation scale used when the grid came out of a generator.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symmetry: Option<String>,
}

impl Sidecar {
    pub fn new() -> Sidecar {
        Sidecar {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            ..Default::default()
        }
    }
}

fn sidecar_path(path: &Path) -> PathBuf {
    path.with_extension("json")
}

/// Write a grid and its sidecar. Values are stored as f32.
pub fn write_sdf(grid: &SdfGrid, path: &Path, sidecar: &Sidecar) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);

    w.write_all(&SDF_MAGIC).map_err(io_err)?;
    let [nx, ny, nz] = grid.dims();
    for n in [nx, ny, nz] {
        w.write_all(&(n as u32).to_le_bytes()).map_err(io_err)?;
    }
    let o = grid.origin();
    for c in [o.x, o.y, o.z, grid.spacing()] {
        w.write_all(&(c as f32).to_le_bytes()).map_err(io_err)?;
    }
    w.write_all(&[u8::from(grid.positive_inside()), 0, 0, 0])
        .map_err(io_err)?;
    for v in grid.values() {
        w.write_all(&(*v as f32).to_le_bytes()).map_err(io_err)?;
    }
    w.flush().map_err(io_err)?;

    let json = serde_json::to_string_pretty(sidecar)
        .map_err(|e| Error::InvalidConfig(format!("sidecar serialization: {}", e)))?;
    std::fs::write(sidecar_path(path), json + "\n").map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Read a grid and, when present, its sidecar.
pub fn read_sdf(path: &Path) -> Result<(SdfGrid, Option<Sidecar>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);
    let mut offset = 0usize;

    let mut read_exact = |buf: &mut [u8], offset: &mut usize| -> Result<()> {
        r.read_exact(buf).map_err(|_| {
            Error::parse(path, *offset, "truncated SDF1 file")
        })?;
        *offset += buf.len();
        Ok(())
    };

    let mut magic = [0u8; 4];
    read_exact(&mut magic, &mut offset)?;
    if magic != SDF_MAGIC {
        return Err(Error::parse(path, 0, "bad magic; not an SDF1 file"));
    }

    let mut u32buf = [0u8; 4];
    let mut dims = [0usize; 3];
    for d in &mut dims {
        read_exact(&mut u32buf, &mut offset)?;
        *d = u32::from_le_bytes(u32buf) as usize;
    }
    let mut f32buf = [0u8; 4];
    let mut geo = [0.0f64; 4];
    for g in &mut geo {
        read_exact(&mut f32buf, &mut offset)?;
        *g = f32::from_le_bytes(f32buf) as f64;
    }
    let mut flags = [0u8; 4];
    read_exact(&mut flags, &mut offset)?;
    let positive_inside = flags[0] == 1;

    let count = dims[0]
        .checked_mul(dims[1])
        .and_then(|v| v.checked_mul(dims[2]))
        .filter(|v| *v <= 1 << 30)
        .ok_or_else(|| {
            Error::parse(path, offset, format!("implausible dimensions {:?}", dims))
        })?;
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        read_exact(&mut f32buf, &mut offset)?;
        values.push(f32::from_le_bytes(f32buf) as f64);
    }

    let grid = SdfGrid::from_parts(
        dims,
        Vec3::new(geo[0], geo[1], geo[2]),
        geo[3],
        positive_inside,
        values,
    )?;

    let sc_path = sidecar_path(path);
    let sidecar = match std::fs::read_to_string(&sc_path) {
        Ok(text) => Some(serde_json::from_str(&text).map_err(|e| {
            Error::parse(&sc_path, e.line(), format!("sidecar: {}", e))
        })?),
        Err(_) => None,
    };
    Ok((grid, sidecar))
}
