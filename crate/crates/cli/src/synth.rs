//! Synthetic procedural datasets: boxes, cylinders, and chair-like
//! compositions (seat slab, four legs, back slab). A desk-scale stand-in
//! for large mesh collections, with learnable low-frequency structure and
//! sharp edges for the high-band generator to target.

use std::path::{Path, PathBuf};

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use sdfgen_core::error::{Error, Result};
use sdfgen_core::geom::Vec3;
use sdfgen_core::mesh::{normalize_mesh, save_mesh, MeshFormat, TriMesh};
use sdfgen_core::primitives::{box_mesh, cylinder_mesh};
use sdfgen_core::sdf::{mesh_to_sdf, write_sdf, Sidecar};

/// Shape family to sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Boxes,
    Cylinders,
    Chairs,
}

impl Family {
    pub fn parse(s: &str) -> Result<Family> {
        match s {
            "boxes" => Ok(Family::Boxes),
            "cylinders" => Ok(Family::Cylinders),
            "chairs" => Ok(Family::Chairs),
            other => Err(Error::InvalidConfig(format!(
                "unknown family '{}' (expected boxes, cylinders, chairs)",
                other
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Family::Boxes => "boxes",
            Family::Cylinders => "cylinders",
            Family::Chairs => "chairs",
        }
    }
}

/// Sampling ranges per family, in model units (meshes are normalized into
/// the canonical domain afterwards, so only proportions matter).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FamilyRanges {
    pub box_extent: (f64, f64),
    pub cylinder_radius: (f64, f64),
    pub cylinder_height: (f64, f64),
    pub seat_width: (f64, f64),
    pub seat_depth: (f64, f64),
    pub seat_thickness: (f64, f64),
    pub leg_height: (f64, f64),
    pub leg_thickness: (f64, f64),
    pub back_height: (f64, f64),
    pub back_thickness: (f64, f64),
}

impl Default for FamilyRanges {
    fn default() -> Self {
        // proportions sized so every feature spans at least ~1.5 cells at
        // 16^3 after normalization; thinner slabs vanish from the grid
        FamilyRanges {
            box_extent: (0.3, 1.0),
            cylinder_radius: (0.15, 0.5),
            cylinder_height: (0.3, 1.0),
            seat_width: (0.6, 0.95),
            seat_depth: (0.5, 0.85),
            seat_thickness: (0.16, 0.24),
            leg_height: (0.3, 0.5),
            leg_thickness: (0.12, 0.2),
            back_height: (0.35, 0.6),
            back_thickness: (0.12, 0.2),
        }
    }
}

/// Dataset construction request.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthSpec {
    pub family: Family,
    pub count: usize,
    pub seed: u64,
    pub resolution: usize,
    pub threshold: f64,
    pub ranges: FamilyRanges,
}

impl SynthSpec {
    pub fn new(family: Family, count: usize, seed: u64, resolution: usize) -> SynthSpec {
        SynthSpec {
            family,
            count,
            seed,
            resolution,
            threshold: 0.5,
            ranges: FamilyRanges::default(),
        }
    }
}

/// One manifest line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub family: String,
    pub params: serde_json::Value,
    pub obj: String,
    pub sdf: String,
    /// A canonical-domain point guaranteed inside the solid (the seat
    /// center for chairs, the body center otherwise).
    pub inside_probe: [f64; 3],
}

fn sample(rng: &mut ChaCha12Rng, range: (f64, f64)) -> f64 {
    rng.gen_range(range.0..range.1)
}

/// Mesh plus a strictly interior probe point, in model units.
fn build_shape(
    family: Family,
    ranges: &FamilyRanges,
    rng: &mut ChaCha12Rng,
) -> Result<(TriMesh, Vec3, serde_json::Value)> {
    match family {
        Family::Boxes => {
            let ext = Vec3::new(
                sample(rng, ranges.box_extent),
                sample(rng, ranges.box_extent),
                sample(rng, ranges.box_extent),
            );
            let mesh = box_mesh(Vec3::ZERO, ext)?;
            let params = serde_json::json!({"extent": [ext.x, ext.y, ext.z]});
            Ok((mesh, Vec3::ZERO, params))
        }
        Family::Cylinders => {
            let radius = sample(rng, ranges.cylinder_radius);
            let height = sample(rng, ranges.cylinder_height);
            let segments = rng.gen_range(12..33);
            let mesh = cylinder_mesh(Vec3::ZERO, radius, height, segments)?;
            let params = serde_json::json!({
                "radius": radius, "height": height, "segments": segments
            });
            Ok((mesh, Vec3::ZERO, params))
        }
        Family::Chairs => {
            let seat_w = sample(rng, ranges.seat_width);
            let seat_d = sample(rng, ranges.seat_depth);
            let seat_t = sample(rng, ranges.seat_thickness);
            let leg_h = sample(rng, ranges.leg_height);
            let leg_t = sample(rng, ranges.leg_thickness).min(seat_w / 3.0).min(seat_d / 3.0);
            let back_h = sample(rng, ranges.back_height);
            let back_t = sample(rng, ranges.back_thickness).min(seat_d / 2.0);

            // z up, y front-to-back, x left-right (the symmetry axis)
            let seat_center_z = leg_h + seat_t / 2.0;
            let mut mesh = box_mesh(
                Vec3::new(0.0, 0.0, seat_center_z),
                Vec3::new(seat_w, seat_d, seat_t),
            )?;
            // legs under the seat corners, embedded slightly into the slab
            let overlap = seat_t / 2.0;
            let leg_dx = (seat_w - leg_t) / 2.0;
            let leg_dy = (seat_d - leg_t) / 2.0;
            for (sx, sy) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
                let leg = box_mesh(
                    Vec3::new(sx * leg_dx, sy * leg_dy, (leg_h + overlap) / 2.0),
                    Vec3::new(leg_t, leg_t, leg_h + overlap),
                )?;
                mesh.append(&leg);
            }
            // back slab rising from the rear seat edge
            let back = box_mesh(
                Vec3::new(
                    0.0,
                    (seat_d - back_t) / 2.0,
                    leg_h + seat_t + (back_h - overlap) / 2.0,
                ),
                Vec3::new(seat_w, back_t, back_h + overlap),
            )?;
            mesh.append(&back);

            let params = serde_json::json!({
                "seat_width": seat_w, "seat_depth": seat_d, "seat_thickness": seat_t,
                "leg_height": leg_h, "leg_thickness": leg_t,
                "back_height": back_h, "back_thickness": back_t
            });
            Ok((mesh, Vec3::new(0.0, 0.0, seat_center_z), params))
        }
    }
}

/// Generate `spec.count` shapes: OBJ meshes, SDF1 grids, and a
/// line-delimited manifest. Deterministic under the seed.
pub fn synth_dataset(spec: &SynthSpec, out_dir: &Path) -> Result<Vec<SampleRecord>> {
    if spec.count == 0 {
        return Err(Error::InvalidConfig("count must be >= 1".into()));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let mut records = Vec::with_capacity(spec.count);

    for index in 0..spec.count {
        let (raw_mesh, probe, params) = build_shape(spec.family, &spec.ranges, &mut rng)?;
        let mesh = normalize_mesh(&raw_mesh)?;
        let rec = mesh.normalization().expect("normalized");
        let canonical_probe =
            (probe - Vec3::from(rec.center)) * rec.scale;

        let obj_name = format!("{}_{:04}.obj", spec.family.name(), index);
        let sdf_name = format!("{}_{:04}.sdf", spec.family.name(), index);
        let obj_path = out_dir.join(&obj_name);
        let sdf_path = out_dir.join(&sdf_name);

        save_mesh(&mesh, &obj_path, MeshFormat::Obj)?;
        let grid = mesh_to_sdf(&mesh, spec.resolution, spec.threshold)?;
        let mut sidecar = Sidecar::new();
        sidecar.source = Some(obj_name.clone());
        sidecar.resolution = Some(spec.resolution);
        sidecar.threshold = Some(spec.threshold);
        write_sdf(&grid, &sdf_path, &sidecar)?;

        records.push(SampleRecord {
            index,
            family: spec.family.name().to_string(),
            params,
            obj: obj_name,
            sdf: sdf_name,
            inside_probe: canonical_probe.into(),
        });
    }

    let manifest_path = manifest_path(out_dir);
    let mut lines = String::new();
    for r in &records {
        lines.push_str(
            &serde_json::to_string(r)
                .map_err(|e| Error::InvalidConfig(format!("manifest record: {}", e)))?,
        );
        lines.push('\n');
    }
    std::fs::write(&manifest_path, lines).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(records)
}

pub fn manifest_path(out_dir: &Path) -> PathBuf {
    out_dir.join("manifest.ldjson")
}

#[cfg(test)]
mod tests {
    use super::*;
    use sdfgen_core::sdf::winding_number;

    #[test]
    fn boxes_are_watertight_at_centroid() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec::new(Family::Boxes, 5, 42, 16);
        let records = synth_dataset(&spec, dir.path()).unwrap();
        assert_eq!(records.len(), 5);
        for r in &records {
            let report =
                sdfgen_core::load_mesh(&dir.path().join(&r.obj), MeshFormat::Obj).unwrap();
            let w = winding_number(&report.mesh, Vec3::from(r.inside_probe));
            assert!((w - 1.0).abs() < 1e-9, "w = {}", w);
        }
    }

    #[test]
    fn chair_probe_is_inside_the_field() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec::new(Family::Chairs, 3, 7, 16);
        let records = synth_dataset(&spec, dir.path()).unwrap();
        for r in &records {
            let (grid, _) = sdfgen_core::read_sdf(&dir.path().join(&r.sdf)).unwrap();
            let v = grid.sample_trilinear(Vec3::from(r.inside_probe));
            assert!(v > 0.0, "probe value {}", v);
        }
    }

    #[test]
    fn same_seed_gives_byte_identical_manifests() {
        let spec = SynthSpec::new(Family::Chairs, 3, 99, 16);
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        synth_dataset(&spec, d1.path()).unwrap();
        synth_dataset(&spec, d2.path()).unwrap();
        let m1 = std::fs::read(manifest_path(d1.path())).unwrap();
        let m2 = std::fs::read(manifest_path(d2.path())).unwrap();
        assert_eq!(m1, m2);
        // grids too
        let g1 = std::fs::read(d1.path().join("chairs_0000.sdf")).unwrap();
        let g2 = std::fs::read(d2.path().join("chairs_0000.sdf")).unwrap();
        assert_eq!(g1, g2);
    }

    #[test]
    fn cylinders_fit_canonical_domain() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec::new(Family::Cylinders, 4, 3, 16);
        let records = synth_dataset(&spec, dir.path()).unwrap();
        for r in &records {
            let report =
                sdfgen_core::load_mesh(&dir.path().join(&r.obj), MeshFormat::Obj).unwrap();
            let bbox = report.mesh.bounding_box();
            assert!(bbox.min.x >= -0.5 && bbox.max.x <= 0.5);
            assert!(bbox.min.z >= -0.5 && bbox.max.z <= 0.5);
        }
    }
}
