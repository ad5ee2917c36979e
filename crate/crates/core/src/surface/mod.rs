//! Iso-surface extraction (marching cubes) and Laplacian mesh smoothing.

mod tables;

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::TriMesh;
use crate::sdf::SdfGrid;

/// Extraction and post-smoothing parameters.
#[derive(Debug, Clone, Copy)]
pub struct IsoSurfaceConfig {
    pub iso_value: f64,
    pub smoothing_iterations: usize,
    /// Step factor per smoothing iteration, in (0, 1].
    pub smoothing_lambda: f64,
}

impl Default for IsoSurfaceConfig {
    fn default() -> Self {
        IsoSurfaceConfig {
            iso_value: 0.0,
            smoothing_iterations: 5,
            smoothing_lambda: 0.5,
        }
    }
}

impl IsoSurfaceConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.smoothing_lambda > 0.0 && self.smoothing_lambda <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "smoothing lambda {} outside (0, 1]",
                self.smoothing_lambda
            )));
        }
        Ok(())
    }
}

/// Extract the iso-surface of `grid` at `iso` with marching cubes.
///
/// Vertices sit on cell edges at linearly interpolated crossings and are
/// merged by exact edge key (grid point index, axis), so shared edges never
/// split. Triangles are wound so normals point toward decreasing field
/// values, i.e. outward under the positive-inside convention. An iso value
/// outside the field's range yields an empty mesh, not an error.
pub fn marching_cubes(grid: &SdfGrid, iso: f64) -> Result<TriMesh> {
    let [nx, ny, nz] = grid.dims();
    if nx < 2 || ny < 2 || nz < 2 {
        return Err(Error::InvalidGrid(
            "marching cubes needs at least 2 points per axis".into(),
        ));
    }

    let mut vertices: Vec<Vec3> = Vec::new();
    // (index of the lower grid point, axis) -> vertex id
    let mut edge_vertices: HashMap<(usize, u8), u32> = HashMap::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    // map a cell-local edge id to its canonical grid key
    let edge_key = |cx: usize, cy: usize, cz: usize, edge: usize| -> (usize, u8) {
        let [a, b] = tables::EDGE_CORNERS[edge];
        let ca = tables::CORNERS[a];
        let cb = tables::CORNERS[b];
        let (pa, pb) = if (ca[0] + ca[1] + ca[2]) <= (cb[0] + cb[1] + cb[2]) {
            (ca, cb)
        } else {
            (cb, ca)
        };
        let axis = if pb[0] != pa[0] {
            0u8
        } else if pb[1] != pa[1] {
            1
        } else {
            2
        };
        let index = (cx + pa[0]) + nx * ((cy + pa[1]) + ny * (cz + pa[2]));
        (index, axis)
    };

    let mut corner_values = [0.0f64; 8];
    for cz in 0..nz - 1 {
        for cy in 0..ny - 1 {
            for cx in 0..nx - 1 {
                let mut cube_index = 0usize;
                for (i, c) in tables::CORNERS.iter().enumerate() {
                    let v = grid.at(cx + c[0], cy + c[1], cz + c[2]);
                    corner_values[i] = v;
                    if v < iso {
                        cube_index |= 1 << i;
                    }
                }
                if tables::EDGE_TABLE[cube_index] == 0 {
                    continue;
                }

                let mut cell_edge_vertex = [u32::MAX; 12];
                for (edge, slot) in cell_edge_vertex.iter_mut().enumerate() {
                    if tables::EDGE_TABLE[cube_index] & (1 << edge) == 0 {
                        continue;
                    }
                    let key = edge_key(cx, cy, cz, edge);
                    *slot = *edge_vertices.entry(key).or_insert_with(|| {
                        let [a, b] = tables::EDGE_CORNERS[edge];
                        let ca = tables::CORNERS[a];
                        let cb = tables::CORNERS[b];
                        let pa = grid.position(cx + ca[0], cy + ca[1], cz + ca[2]);
                        let pb = grid.position(cx + cb[0], cy + cb[1], cz + cb[2]);
                        let va = corner_values[a];
                        let vb = corner_values[b];
                        let t = if (vb - va).abs() < f64::MIN_POSITIVE {
                            0.5
                        } else {
                            ((iso - va) / (vb - va)).clamp(0.0, 1.0)
                        };
                        vertices.push(pa + (pb - pa) * t);
                        (vertices.len() - 1) as u32
                    });
                }

                let row = &tables::TRI_TABLE[cube_index];
                let mut k = 0;
                while row[k] >= 0 {
                    let tri = [
                        cell_edge_vertex[row[k] as usize],
                        cell_edge_vertex[row[k + 1] as usize],
                        cell_edge_vertex[row[k + 2] as usize],
                    ];
                    // iso exactly on a grid point can collapse two edge
                    // vertices onto it; drop the degenerate triangle
                    if tri[0] != tri[1] && tri[1] != tri[2] && tri[0] != tri[2] {
                        triangles.push(tri);
                    }
                    k += 3;
                }
            }
        }
    }

    TriMesh::new(vertices, triangles)
}

/// Uniform (umbrella) Laplacian smoothing with explicit integration.
///
/// Each iteration moves every vertex by `lambda * (neighbor centroid -
/// vertex)`. Connectivity is untouched; every new position is a convex
/// combination of old ones, so the bounding box never grows. Isolated
/// vertices stay fixed.
pub fn laplace_smooth(mesh: &TriMesh, iterations: usize, lambda: f64) -> Result<TriMesh> {
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "smoothing lambda {} outside (0, 1]",
            lambda
        )));
    }
    let n = mesh.vertex_count();
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new(); n];
    for t in mesh.triangles() {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            if !neighbors[a as usize].contains(&b) {
                neighbors[a as usize].push(b);
            }
            if !neighbors[b as usize].contains(&a) {
                neighbors[b as usize].push(a);
            }
        }
    }

    let mut positions: Vec<Vec3> = mesh.vertices().to_vec();
    let mut next = positions.clone();
    for _ in 0..iterations {
        for (i, p) in positions.iter().enumerate() {
            let nbrs = &neighbors[i];
            if nbrs.is_empty() {
                next[i] = *p;
                continue;
            }
            let mut centroid = Vec3::ZERO;
            for &j in nbrs {
                centroid = centroid + positions[j as usize];
            }
            centroid = centroid / nbrs.len() as f64;
            next[i] = *p + (centroid - *p) * lambda;
        }
        std::mem::swap(&mut positions, &mut next);
    }

    TriMesh::new(positions, mesh.triangles().to_vec())
}
