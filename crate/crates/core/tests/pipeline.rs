//! Cross-module integration and property tests.

use proptest::prelude::*;
use sdfgen_core::geom::Vec3;
use sdfgen_core::mesh::TriMesh;
use sdfgen_core::primitives::icosphere;
use sdfgen_core::sdf::{
    mesh_to_sdf, point_triangle_distance, unsigned_distance, winding_number, AabbTree,
};
use sdfgen_core::spectral::{low_pass, split_bands, FilterSpec};
use sdfgen_core::surface::marching_cubes;
use sdfgen_core::SdfGrid;

fn brute_force_distance(mesh: &TriMesh, p: Vec3) -> f64 {
    (0..mesh.triangle_count())
        .map(|i| {
            let [a, b, c] = mesh.triangle_vertices(i);
            point_triangle_distance(p, a, b, c).0
        })
        .fold(f64::INFINITY, f64::min)
}

/// Random non-degenerate triangle soup in the unit box.
fn arb_mesh() -> impl Strategy<Value = TriMesh> {
    let coord = -1.0..1.0f64;
    let vertex = (coord.clone(), coord.clone(), coord).prop_map(|(x, y, z)| Vec3::new(x, y, z));
    proptest::collection::vec(vertex, 3..60).prop_flat_map(|vertices| {
        let n = vertices.len() as u32;
        let tri = (0..n, 0..n, 0..n)
            .prop_filter_map("degenerate", |(a, b, c)| {
                (a != b && b != c && a != c).then_some([a, b, c])
            });
        proptest::collection::vec(tri, 1..40).prop_map(move |triangles| {
            TriMesh::new(vertices.clone(), triangles).expect("valid by construction")
        })
    })
}

fn arb_point() -> impl Strategy<Value = Vec3> {
    let coord = -1.5..1.5f64;
    (coord.clone(), coord.clone(), coord).prop_map(|(x, y, z)| Vec3::new(x, y, z))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn tree_equals_brute_force(mesh in arb_mesh(), points in proptest::collection::vec(arb_point(), 8)) {
        let tree = AabbTree::build(&mesh, 4).unwrap();
        for p in points {
            let fast = unsigned_distance(&tree, &mesh, p);
            let slow = brute_force_distance(&mesh, p);
            prop_assert!((fast - slow).abs() < 1e-12, "{} vs {}", fast, slow);
        }
    }

    #[test]
    fn winding_flips_sign_with_orientation(mesh in arb_mesh(), p in arb_point()) {
        let w = winding_number(&mesh, p);
        let mut flipped = mesh.clone();
        flipped.flip_orientation();
        let wf = winding_number(&flipped, p);
        prop_assert!((w + wf).abs() < 1e-9);
    }

    #[test]
    fn bands_always_sum_back(values in proptest::collection::vec(-1.0..1.0f64, 512), cutoff in 1usize..4) {
        let grid = SdfGrid::canonical(8).with_values(values).unwrap();
        let (low, high) = split_bands(&grid, FilterSpec::new(cutoff)).unwrap();
        for ((g, l), h) in grid.values().iter().zip(low.values()).zip(high.values()) {
            prop_assert!((g - (l + h)).abs() < 1e-10);
        }
        // and the low band is a projection
        let again = low_pass(&low, FilterSpec::new(cutoff)).unwrap();
        for (a, b) in low.values().iter().zip(again.values()) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn convert_then_extract_stays_within_two_cells() {
    // icosphere -> grid -> surface: symmetric point-sampled Hausdorff
    // distance below two grid cells
    let mesh = icosphere(Vec3::ZERO, 0.45, 3).unwrap();
    let grid = mesh_to_sdf(&mesh, 32, 0.5).unwrap();
    let extracted = marching_cubes(&grid, 0.0).unwrap();
    assert!(extracted.triangle_count() > 0);

    let h = grid.spacing();
    let tree_in = AabbTree::build(&mesh, 8).unwrap();
    let tree_out = AabbTree::build(&extracted, 8).unwrap();

    let mut hausdorff = 0.0f64;
    for v in extracted.vertices() {
        hausdorff = hausdorff.max(unsigned_distance(&tree_in, &mesh, *v));
    }
    for v in mesh.vertices() {
        hausdorff = hausdorff.max(unsigned_distance(&tree_out, &extracted, *v));
    }
    assert!(hausdorff < 2.0 * h, "hausdorff {} vs 2h {}", hausdorff, 2.0 * h);
}

#[test]
fn band_files_survive_the_pipeline() {
    // grid -> split -> write -> read: complementarity at f32 precision
    let mesh = icosphere(Vec3::ZERO, 0.4, 2).unwrap();
    let grid = mesh_to_sdf(&mesh, 16, 0.5).unwrap();
    let (low, high) = split_bands(&grid, FilterSpec::new(2)).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let (pl, ph) = (dir.path().join("l.sdf"), dir.path().join("h.sdf"));
    let mut sc = sdfgen_core::sdf::Sidecar::new();
    sc.band = Some("low".into());
    sc.cutoff = Some(2);
    sdfgen_core::write_sdf(&low, &pl, &sc).unwrap();
    sc.band = Some("high".into());
    sdfgen_core::write_sdf(&high, &ph, &sc).unwrap();

    let (low2, meta) = sdfgen_core::read_sdf(&pl).unwrap();
    let (high2, _) = sdfgen_core::read_sdf(&ph).unwrap();
    assert_eq!(meta.unwrap().band.as_deref(), Some("low"));
    for ((l, h), g) in low2
        .values()
        .iter()
        .zip(high2.values())
        .zip(grid.values())
    {
        // f32 storage quantizes each band separately
        assert!((l + h - g).abs() < 1e-6, "{} + {} vs {}", l, h, g);
    }
}
