//! Gridded signed distance fields: conversion from triangle meshes and
//! verification of distance-field properties.
//!
//! The field is positive inside the solid and negative outside. Conversion
//! samples unsigned point-to-mesh distance through an AABB tree and signs
//! each sample by comparing the generalized winding number to a threshold,
//! which keeps the pipeline functional on non-watertight meshes.

pub mod aabb;
mod io;
pub mod winding;

pub use aabb::{point_triangle_distance, unsigned_distance, AabbTree, DEFAULT_LEAF_CAPACITY};
pub use io::{read_sdf, write_sdf, Sidecar, SDF_MAGIC};
pub use winding::{triangle_solid_angle, winding_number};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Vec3;
use crate::mesh::TriMesh;

/// Default winding threshold separating inside from outside.
pub const DEFAULT_WINDING_THRESHOLD: f64 = 0.5;

/// Scalar field sampled on a regular lattice, x-fastest ordering.
#[derive(Debug, Clone, PartialEq)]
pub struct SdfGrid {
    dims: [usize; 3],
    origin: Vec3,
    spacing: f64,
    positive_inside: bool,
    values: Vec<f64>,
}

impl SdfGrid {
    /// Grid covering the canonical domain [-0.5, 0.5]^3 inclusively with
    /// n points per axis: origin (-0.5, -0.5, -0.5), spacing 1/(n-1).
    pub fn canonical(n: usize) -> SdfGrid {
        SdfGrid {
            dims: [n, n, n],
            origin: Vec3::splat(-0.5),
            spacing: 1.0 / (n - 1) as f64,
            positive_inside: true,
            values: vec![0.0; n * n * n],
        }
    }

    pub fn from_parts(
        dims: [usize; 3],
        origin: Vec3,
        spacing: f64,
        positive_inside: bool,
        values: Vec<f64>,
    ) -> Result<SdfGrid> {
        if dims[0] == 0 || dims[1] == 0 || dims[2] == 0 {
            return Err(Error::InvalidGrid("zero-sized dimension".into()));
        }
        if spacing <= 0.0 || !spacing.is_finite() {
            return Err(Error::InvalidGrid(format!("bad spacing {}", spacing)));
        }
        if values.len() != dims[0] * dims[1] * dims[2] {
            return Err(Error::InvalidGrid(format!(
                "value count {} does not match dims {:?}",
                values.len(),
                dims
            )));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidGrid(format!("non-finite value {}", v)));
        }
        // no distance inside the grid can exceed its diagonal; the 1.2
        // allowance leaves room for the ringing of sharp-cut band fields
        let diag = spacing
            * (((dims[0] - 1).pow(2) + (dims[1] - 1).pow(2) + (dims[2] - 1).pow(2)) as f64)
                .sqrt();
        let bound = 1.2 * diag;
        if let Some(v) = values.iter().find(|v| v.abs() > bound) {
            return Err(Error::InvalidGrid(format!(
                "value {} exceeds the domain diagonal bound {}",
                v, bound
            )));
        }
        Ok(SdfGrid {
            dims,
            origin,
            spacing,
            positive_inside,
            values,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn origin(&self) -> Vec3 {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn positive_inside(&self) -> bool {
        self.positive_inside
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Replace the values, keeping geometry metadata.
    pub fn with_values(&self, values: Vec<f64>) -> Result<SdfGrid> {
        SdfGrid::from_parts(
            self.dims,
            self.origin,
            self.spacing,
            self.positive_inside,
            values,
        )
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, z: usize) -> f64 {
        self.values[self.index(x, y, z)]
    }

    /// World position of grid point (x, y, z).
    #[inline]
    pub fn position(&self, x: usize, y: usize, z: usize) -> Vec3 {
        self.origin
            + Vec3::new(
                x as f64 * self.spacing,
                y as f64 * self.spacing,
                z as f64 * self.spacing,
            )
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Trilinear interpolation at a world-space point inside the grid.
    pub fn sample_trilinear(&self, p: Vec3) -> f64 {
        let gx = ((p.x - self.origin.x) / self.spacing).clamp(0.0, (self.dims[0] - 1) as f64);
        let gy = ((p.y - self.origin.y) / self.spacing).clamp(0.0, (self.dims[1] - 1) as f64);
        let gz = ((p.z - self.origin.z) / self.spacing).clamp(0.0, (self.dims[2] - 1) as f64);
        let x0 = (gx as usize).min(self.dims[0].saturating_sub(2));
        let y0 = (gy as usize).min(self.dims[1].saturating_sub(2));
        let z0 = (gz as usize).min(self.dims[2].saturating_sub(2));
        let fx = gx - x0 as f64;
        let fy = gy - y0 as f64;
        let fz = gz - z0 as f64;
        let mut acc = 0.0;
        for (dz, wz) in [(0, 1.0 - fz), (1, fz)] {
            for (dy, wy) in [(0, 1.0 - fy), (1, fy)] {
                for (dx, wx) in [(0, 1.0 - fx), (1, fx)] {
                    acc += wz * wy * wx * self.at(x0 + dx, y0 + dy, z0 + dz);
                }
            }
        }
        acc
    }
}

/// Convert a normalized mesh to a signed distance grid at `resolution`^3.
///
/// The value at each grid point is +d when the winding number exceeds
/// `threshold` and -d otherwise. Per-point work is pure and runs in
/// parallel; results are independent of scheduling.
pub fn mesh_to_sdf(mesh: &TriMesh, resolution: usize, threshold: f64) -> Result<SdfGrid> {
    if resolution < 8 {
        return Err(Error::InvalidConfig(format!(
            "resolution {} below minimum 8",
            resolution
        )));
    }
    if mesh.is_empty() {
        return Err(Error::InvalidMesh("cannot convert an empty mesh".into()));
    }
    let bbox = mesh.bounding_box();
    let eps = 1e-9;
    if bbox.min.x < -0.5 - eps
        || bbox.min.y < -0.5 - eps
        || bbox.min.z < -0.5 - eps
        || bbox.max.x > 0.5 + eps
        || bbox.max.y > 0.5 + eps
        || bbox.max.z > 0.5 + eps
    {
        return Err(Error::InvalidMesh(
            "mesh exceeds the canonical domain; normalize it first".into(),
        ));
    }

    let tree = AabbTree::build(mesh, DEFAULT_LEAF_CAPACITY)?;
    let mut grid = SdfGrid::canonical(resolution);
    let [nx, ny, nz] = grid.dims;
    let origin = grid.origin;
    let spacing = grid.spacing;
    let vertices = mesh.vertices();
    let triangles = mesh.triangles();

    grid.values
        .par_chunks_mut(nx * ny)
        .enumerate()
        .for_each(|(z, slab)| {
            for y in 0..ny {
                for x in 0..nx {
                    let p = origin
                        + Vec3::new(
                            x as f64 * spacing,
                            y as f64 * spacing,
                            z as f64 * spacing,
                        );
                    let d = unsigned_distance(&tree, mesh, p);
                    let w = winding::winding_number_indexed(vertices, triangles, p);
                    slab[x + nx * y] = if w > threshold { d } else { -d };
                }
            }
        });
    debug_assert_eq!(nz, resolution);
    Ok(grid)
}

/// Statistics of | |grad f| - 1 | over interior grid points.
#[derive(Debug, Clone, Copy)]
pub struct EikonalStats {
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    /// Interior points excluded for sitting within 2h of a gradient flip
    /// (medial-axis proxy).
    pub excluded: usize,
    /// Interior points that entered the statistics.
    pub counted: usize,
}

/// Measure how far the field is from solving |grad f| = 1.
///
/// Gradients use central differences on interior points. True distance
/// fields are non-differentiable on the medial axis, so points within 2h of
/// a gradient-direction flip (adjacent gradients with negative dot product)
/// are excluded and counted separately.
pub fn eikonal_residual(grid: &SdfGrid) -> Result<EikonalStats> {
    let [nx, ny, nz] = grid.dims;
    if nx < 3 || ny < 3 || nz < 3 {
        return Err(Error::InvalidGrid(
            "eikonal residual needs at least 3 points per axis".into(),
        ));
    }
    let inv2h = 1.0 / (2.0 * grid.spacing);

    let gradient = |x: usize, y: usize, z: usize| -> Vec3 {
        Vec3::new(
            (grid.at(x + 1, y, z) - grid.at(x - 1, y, z)) * inv2h,
            (grid.at(x, y + 1, z) - grid.at(x, y - 1, z)) * inv2h,
            (grid.at(x, y, z + 1) - grid.at(x, y, z - 1)) * inv2h,
        )
    };

    // mark interior points adjacent to a gradient-direction flip
    let mut flip = vec![false; nx * ny * nz];
    for z in 1..nz - 1 {
        for y in 1..ny - 1 {
            for x in 1..nx - 1 {
                let g = gradient(x, y, z);
                let mut flipped = false;
                if x + 2 < nx {
                    flipped |= g.dot(gradient(x + 1, y, z)) < 0.0;
                }
                if y + 2 < ny {
                    flipped |= g.dot(gradient(x, y + 1, z)) < 0.0;
                }
                if z + 2 < nz {
                    flipped |= g.dot(gradient(x, y, z + 1)) < 0.0;
                }
                if flipped {
                    flip[grid.index(x, y, z)] = true;
                    if x + 1 < nx - 1 {
                        flip[grid.index(x + 1, y, z)] = true;
                    }
                    if y + 1 < ny - 1 {
                        flip[grid.index(x, y + 1, z)] = true;
                    }
                    if z + 1 < nz - 1 {
                        flip[grid.index(x, y, z + 1)] = true;
                    }
                }
            }
        }
    }

    // dilate the exclusion mask to a 2-cell (2h) band
    let near_flip = |x: usize, y: usize, z: usize| -> bool {
        let x0 = x.saturating_sub(2);
        let y0 = y.saturating_sub(2);
        let z0 = z.saturating_sub(2);
        for zz in z0..=(z + 2).min(nz - 1) {
            for yy in y0..=(y + 2).min(ny - 1) {
                for xx in x0..=(x + 2).min(nx - 1) {
                    if flip[grid.index(xx, yy, zz)] {
                        return true;
                    }
                }
            }
        }
        false
    };

    let mut residuals = Vec::new();
    let mut excluded = 0usize;
    for z in 1..nz - 1 {
        for y in 1..ny - 1 {
            for x in 1..nx - 1 {
                if near_flip(x, y, z) {
                    excluded += 1;
                    continue;
                }
                residuals.push((gradient(x, y, z).norm() - 1.0).abs());
            }
        }
    }
    if residuals.is_empty() {
        // every interior point sat inside the exclusion band; nothing to
        // measure, but that is a report, not a failure
        return Ok(EikonalStats {
            mean: f64::NAN,
            median: f64::NAN,
            p95: f64::NAN,
            excluded,
            counted: 0,
        });
    }
    residuals.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let counted = residuals.len();
    let mean = residuals.iter().sum::<f64>() / counted as f64;
    let median = residuals[counted / 2];
    let p95 = residuals[((counted as f64 * 0.95) as usize).min(counted - 1)];
    Ok(EikonalStats {
        mean,
        median,
        p95,
        excluded,
        counted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::normalize_mesh;
    use crate::primitives::{box_mesh, icosphere};

    /// Analytic positive-inside sphere SDF sampled on the canonical grid.
    fn analytic_sphere_grid(n: usize, radius: f64) -> SdfGrid {
        let mut g = SdfGrid::canonical(n);
        for z in 0..n {
            for y in 0..n {
                for x in 0..n {
                    let p = g.position(x, y, z);
                    let i = g.index(x, y, z);
                    g.values_mut()[i] = radius - p.norm();
                }
            }
        }
        g
    }

    #[test]
    fn icosphere_sdf_matches_analytic_everywhere() {
        let mesh = icosphere(Vec3::ZERO, 0.45, 3).unwrap();
        let grid = mesh_to_sdf(&mesh, 32, DEFAULT_WINDING_THRESHOLD).unwrap();
        // analytic oracle r - |p| at every grid point; only mesh faceting
        // error separates the two
        let [nx, ny, nz] = grid.dims();
        let mut max_err = 0.0f64;
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let p = grid.position(x, y, z);
                    max_err = max_err.max((grid.at(x, y, z) - (0.45 - p.norm())).abs());
                }
            }
        }
        assert!(max_err < 0.005, "max err {}", max_err);
        // corner probe: negative, magnitude sqrt(3)*0.5 - 0.45
        let corner = grid.at(0, 0, 0);
        let expected = -(3.0f64.sqrt() * 0.5 - 0.45);
        assert!((corner - expected).abs() < 0.005, "corner {}", corner);
    }

    #[test]
    fn cube_sdf_signs_match_analytic_box() {
        let mesh = box_mesh(Vec3::ZERO, Vec3::splat(0.9)).unwrap();
        let grid = mesh_to_sdf(&mesh, 16, DEFAULT_WINDING_THRESHOLD).unwrap();
        let h = grid.spacing();
        let [nx, ny, nz] = grid.dims();
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let p = grid.position(x, y, z);
                    // analytic box half extent 0.45; skip points within h
                    // of the surface
                    let q = Vec3::new(p.x.abs(), p.y.abs(), p.z.abs()) - Vec3::splat(0.45);
                    let outside = Vec3::new(q.x.max(0.0), q.y.max(0.0), q.z.max(0.0)).norm();
                    let inside = q.x.max(q.y).max(q.z).min(0.0);
                    let analytic = -(outside + inside); // positive inside
                    if analytic.abs() <= h {
                        continue;
                    }
                    assert_eq!(
                        grid.at(x, y, z) > 0.0,
                        analytic > 0.0,
                        "sign mismatch at {:?}",
                        p
                    );
                }
            }
        }
    }

    #[test]
    fn sign_flips_twice_along_lines_through_sphere() {
        let mesh = icosphere(Vec3::ZERO, 0.4, 2).unwrap();
        let grid = mesh_to_sdf(&mesh, 16, DEFAULT_WINDING_THRESHOLD).unwrap();
        let n = grid.dims()[0];
        let mid = n / 2;
        for (axis, fixed) in [(0usize, mid), (1, mid), (2, mid)] {
            let mut flips = 0;
            let mut prev: Option<bool> = None;
            for i in 0..n {
                let (x, y, z) = match axis {
                    0 => (i, fixed, fixed),
                    1 => (fixed, i, fixed),
                    _ => (fixed, fixed, i),
                };
                let s = grid.at(x, y, z) > 0.0;
                if let Some(p) = prev {
                    if p != s {
                        flips += 1;
                    }
                }
                prev = Some(s);
            }
            assert_eq!(flips, 2, "axis {}", axis);
        }
    }

    #[test]
    fn unnormalized_mesh_is_rejected() {
        let mesh = box_mesh(Vec3::ZERO, Vec3::splat(4.0)).unwrap();
        assert!(mesh_to_sdf(&mesh, 16, 0.5).is_err());
        let norm = normalize_mesh(&mesh).unwrap();
        assert!(mesh_to_sdf(&norm, 16, 0.5).is_ok());
    }

    #[test]
    fn resolution_below_eight_is_rejected() {
        let mesh = box_mesh(Vec3::ZERO, Vec3::splat(0.9)).unwrap();
        assert!(matches!(
            mesh_to_sdf(&mesh, 7, 0.5),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn eikonal_on_analytic_sphere_is_small() {
        let grid = analytic_sphere_grid(64, 0.3);
        let stats = eikonal_residual(&grid).unwrap();
        assert!(stats.median < 0.01, "median {}", stats.median);
    }

    #[test]
    fn eikonal_on_constant_field_is_one() {
        let grid = SdfGrid::canonical(8);
        let stats = eikonal_residual(&grid).unwrap();
        assert!((stats.mean - 1.0).abs() < 1e-12);
        assert!((stats.median - 1.0).abs() < 1e-12);
        assert_eq!(stats.excluded, 0);
    }

    #[test]
    fn eikonal_on_unit_slope_plane_is_zero() {
        let mut grid = SdfGrid::canonical(8);
        let [nx, ny, nz] = grid.dims();
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let p = grid.position(x, y, z);
                    let i = grid.index(x, y, z);
                    grid.values_mut()[i] = p.x;
                }
            }
        }
        let stats = eikonal_residual(&grid).unwrap();
        assert!(stats.mean < 1e-12);
        assert_eq!(stats.excluded, 0);
    }

    #[test]
    fn lipschitz_bound_on_icosphere_grid() {
        let mesh = icosphere(Vec3::ZERO, 0.45, 3).unwrap();
        let grid = mesh_to_sdf(&mesh, 16, DEFAULT_WINDING_THRESHOLD).unwrap();
        let h = grid.spacing();
        let [nx, ny, nz] = grid.dims();
        let tol = h + 0.005; // 2x faceting tolerance
        for z in 0..nz {
            for y in 0..ny {
                for x in 0..nx {
                    let v = grid.at(x, y, z);
                    if x + 1 < nx {
                        assert!((grid.at(x + 1, y, z) - v).abs() <= tol);
                    }
                    if y + 1 < ny {
                        assert!((grid.at(x, y + 1, z) - v).abs() <= tol);
                    }
                    if z + 1 < nz {
                        assert!((grid.at(x, y, z + 1) - v).abs() <= tol);
                    }
                }
            }
        }
    }
}
