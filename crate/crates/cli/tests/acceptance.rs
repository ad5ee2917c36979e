//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured values once its assertions hold.
//!
//! The heavy artifacts (the 64^3 icosphere conversion, the chair dataset,
//! the two training runs) are built once and shared through OnceLock.

use std::collections::HashMap;
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

use sdfgen_cli::synth::{synth_dataset, Family, SynthSpec};
use sdfgen_core::gan::hfg::HfgConfig;
use sdfgen_core::gan::lfg::LfgConfig;
use sdfgen_core::gan::train::{
    make_hfg_pairs, train_lfg, HfgTrainer, StepMetrics, TrainSchedule,
};
use sdfgen_core::geom::Vec3;
use sdfgen_core::mesh::TriMesh;
use sdfgen_core::nn::{Binder, Graph, Mode, Tensor, Var};
use sdfgen_core::primitives::{box_mesh, icosphere};
use sdfgen_core::sdf::{eikonal_residual, mesh_to_sdf, winding_number};
use sdfgen_core::spectral::{fft3, low_pass, split_bands, FilterSpec};
use sdfgen_core::surface::marching_cubes;
use sdfgen_core::SdfGrid;

// ---------------------------------------------------------------- fixtures

/// Icosphere r = 0.45, 3 subdivisions, converted at 64^3 on one thread.
fn icosphere_grid_64() -> &'static (SdfGrid, Duration) {
    static GRID: OnceLock<(SdfGrid, Duration)> = OnceLock::new();
    GRID.get_or_init(|| {
        let mesh = icosphere(Vec3::ZERO, 0.45, 3).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let start = Instant::now();
        let grid = pool.install(|| mesh_to_sdf(&mesh, 64, 0.5)).unwrap();
        (grid, start.elapsed())
    })
}

/// 20 synthetic chair grids at 16^3.
fn chair_dataset() -> &'static Vec<SdfGrid> {
    static DATA: OnceLock<Vec<SdfGrid>> = OnceLock::new();
    DATA.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec::new(Family::Chairs, 20, 2024, 16);
        let records = synth_dataset(&spec, dir.path()).unwrap();
        records
            .iter()
            .map(|r| sdfgen_core::read_sdf(&dir.path().join(&r.sdf)).unwrap().0)
            .collect()
    })
}

fn sphere_grid(n: usize, r: f64) -> SdfGrid {
    let mut g = SdfGrid::canonical(n);
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let p = g.position(x, y, z);
                let i = g.index(x, y, z);
                g.values_mut()[i] = r - p.norm();
            }
        }
    }
    g
}

fn sdfgen_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_sdfgen"))
}

fn run_bin(args: &[&str]) {
    let out = sdfgen_bin().args(args).output().expect("spawn sdfgen");
    assert!(
        out.status.success(),
        "sdfgen {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
}

// --------------------------------------------------------------- criteria

#[test]
fn criterion_01_geometry_oracle_suite() {
    let (grid, elapsed) = icosphere_grid_64();
    let [nx, ny, nz] = grid.dims();
    let mut max_err = 0.0f64;
    let mut sum_err = 0.0f64;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let p = grid.position(x, y, z);
                let analytic = 0.45 - p.norm();
                let err = (grid.at(x, y, z) - analytic).abs();
                max_err = max_err.max(err);
                sum_err += err;
            }
        }
    }
    let mean_err = sum_err / (nx * ny * nz) as f64;
    assert!(max_err < 0.01, "max abs error {} >= 0.01", max_err);
    assert!(mean_err < 0.003, "mean abs error {} >= 0.003", mean_err);
    assert!(
        *elapsed < Duration::from_secs(60),
        "single-threaded conversion took {:?} (>= 60 s)",
        elapsed
    );
    println!(
        "PASS criterion 1: icosphere 64^3 vs analytic oracle: max {:.5} (<0.01), mean {:.5} (<0.003), {:.1?} single-threaded (<60 s)",
        max_err, mean_err, elapsed
    );
}

#[test]
fn criterion_02_eikonal_property() {
    let (grid, _) = icosphere_grid_64();
    let stats = eikonal_residual(grid).unwrap();
    assert!(
        stats.median < 0.05,
        "median eikonal residual {} >= 0.05",
        stats.median
    );
    println!(
        "PASS criterion 2: median | |grad f| - 1 | = {:.4} (<0.05), {} interior points, {} excluded",
        stats.median, stats.counted, stats.excluded
    );
}

#[test]
fn criterion_03_winding_robustness_open_mesh() {
    // cube of extent 0.9 with the +x face removed
    let cube = box_mesh(Vec3::ZERO, Vec3::splat(0.9)).unwrap();
    let open_triangles: Vec<[u32; 3]> = cube
        .triangles()
        .iter()
        .copied()
        .filter(|t| {
            !t.iter()
                .all(|&i| (cube.vertices()[i as usize].x - 0.45).abs() < 1e-12)
        })
        .collect();
    assert_eq!(open_triangles.len(), 10, "exactly one face removed");
    let open_cube = TriMesh::new(cube.vertices().to_vec(), open_triangles).unwrap();

    // 10^3 probe lattice over the canonical domain, h = lattice spacing
    let n = 10usize;
    let h = 1.0 / (n - 1) as f64;
    let hole_distance = |p: Vec3| -> f64 {
        let dx = p.x - 0.45;
        let dy = (p.y.abs() - 0.45).max(0.0);
        let dz = (p.z.abs() - 0.45).max(0.0);
        (dx * dx + dy * dy + dz * dz).sqrt()
    };

    let mut checked = 0usize;
    let mut correct = 0usize;
    for iz in 0..n {
        for iy in 0..n {
            for ix in 0..n {
                let p = Vec3::new(
                    -0.5 + ix as f64 * h,
                    -0.5 + iy as f64 * h,
                    -0.5 + iz as f64 * h,
                );
                if hole_distance(p) < h {
                    continue; // near the hole: classification unconstrained
                }
                let inside_cube =
                    p.x.abs() < 0.45 && p.y.abs() < 0.45 && p.z.abs() < 0.45;
                let on_surface = !inside_cube
                    && p.x.abs() <= 0.45 + 1e-12
                    && p.y.abs() <= 0.45 + 1e-12
                    && p.z.abs() <= 0.45 + 1e-12;
                if on_surface {
                    continue; // lattice point exactly on the closed surface
                }
                let w = winding_number(&open_cube, p);
                let classified_inside = w > 0.5;
                checked += 1;
                if classified_inside == inside_cube {
                    correct += 1;
                }
            }
        }
    }
    assert!(checked > 500, "lattice unexpectedly small: {}", checked);
    assert_eq!(
        correct, checked,
        "{} of {} probes classified correctly",
        correct, checked
    );
    println!(
        "PASS criterion 3: open-cube winding classification {}/{} probes correct at threshold 0.5",
        correct, checked
    );
}

#[test]
fn criterion_04_spectral_contract() {
    // complementarity and idempotence on a real conversion at 16^3
    let mesh = icosphere(Vec3::ZERO, 0.4, 2).unwrap();
    let grid = mesh_to_sdf(&mesh, 16, 0.5).unwrap();
    let spec = FilterSpec::new(2);
    let (low, high) = split_bands(&grid, spec).unwrap();
    let mut max_comp = 0.0f64;
    for ((l, h), g) in low.values().iter().zip(high.values()).zip(grid.values()) {
        max_comp = max_comp.max((l + h - g).abs());
    }
    assert!(max_comp < 1e-10, "complementarity error {}", max_comp);

    let twice = low_pass(&low, spec).unwrap();
    let mut max_idem = 0.0f64;
    for (a, b) in low.values().iter().zip(twice.values()) {
        max_idem = max_idem.max((a - b).abs());
    }
    assert!(max_idem < 1e-10, "idempotence error {}", max_idem);

    // Parseval on the 16^3 field
    let f = fft3(&grid).unwrap();
    let space: f64 = grid.values().iter().map(|v| v * v).sum();
    let freq: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum::<f64>()
        / grid.values().len() as f64;
    let parseval = (space - freq).abs() / space.max(1.0);
    assert!(parseval < 1e-9, "parseval relative error {}", parseval);

    // naive DFT agreement on an 8^3 field
    let small = {
        let mut g = SdfGrid::canonical(8);
        let mut rng = ChaCha12Rng::seed_from_u64(44);
        for v in g.values_mut() {
            *v = rng.gen_range(-0.8..0.8);
        }
        g
    };
    let fast = fft3(&small).unwrap();
    let mut max_dft = 0.0f64;
    let n = 8usize;
    for kz in 0..n {
        for ky in 0..n {
            for kx in 0..n {
                let mut acc = sdfgen_core::spectral::Complex64::default();
                for z in 0..n {
                    for y in 0..n {
                        for x in 0..n {
                            let phase = -2.0
                                * std::f64::consts::PI
                                * ((kx * x) as f64 / n as f64
                                    + (ky * y) as f64 / n as f64
                                    + (kz * z) as f64 / n as f64);
                            acc += sdfgen_core::spectral::Complex64::from_polar(
                                small.at(x, y, z),
                                phase,
                            );
                        }
                    }
                }
                let diff = (fast.coeffs()[kx + n * (ky + n * kz)] - acc).norm();
                max_dft = max_dft.max(diff);
            }
        }
    }
    assert!(max_dft < 1e-9, "naive DFT disagreement {}", max_dft);
    println!(
        "PASS criterion 4: complementarity {:.2e} (<1e-10), idempotence {:.2e} (<1e-10), parseval {:.2e} (<1e-9), naive DFT {:.2e} (<1e-9)",
        max_comp, max_idem, parseval, max_dft
    );
}

#[test]
fn criterion_05_marching_cubes_sphere() {
    let grid = sphere_grid(64, 0.4);
    let mesh = marching_cubes(&grid, 0.0).unwrap();

    let mut edge_counts: HashMap<(u32, u32), usize> = HashMap::new();
    for t in mesh.triangles() {
        for (a, b) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
            *edge_counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
        }
    }
    assert!(
        edge_counts.values().all(|&c| c == 2),
        "surface is not a closed 2-manifold"
    );
    let euler =
        mesh.vertex_count() as i64 - edge_counts.len() as i64 + mesh.triangle_count() as i64;
    assert_eq!(euler, 2, "Euler characteristic {}", euler);

    let area: f64 = (0..mesh.triangle_count())
        .map(|i| {
            let [a, b, c] = mesh.triangle_vertices(i);
            (b - a).cross(c - a).norm() * 0.5
        })
        .sum();
    let analytic = 4.0 * std::f64::consts::PI * 0.4 * 0.4;
    let rel = (area - analytic).abs() / analytic;
    assert!(rel < 0.02, "area {} vs {} ({:.2}%)", area, analytic, rel * 100.0);
    println!(
        "PASS criterion 5: sphere surface closed, Euler characteristic 2, area {:.4} within {:.2}% of {:.4} (<2%)",
        area, rel * 100.0, analytic
    );
}

// finite-difference machinery for criterion 6

type OpBuilder = dyn Fn(&mut Graph, &[Var]) -> Var;

fn fd_loss(build: &OpBuilder, inputs: &[Tensor], weights: &Tensor) -> f64 {
    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), false)).collect();
    let out = build(&mut g, &vars);
    let w = g.leaf(weights.clone(), false);
    let prod = g.mul(out, w).unwrap();
    let loss = g.sum(prod).unwrap();
    g.value(loss).item()
}

/// Worst relative error between analytic and central-difference gradients.
fn fd_check(build: &OpBuilder, inputs: &[Tensor], rng: &mut ChaCha12Rng) -> f64 {
    let out_shape = {
        let mut g = Graph::new();
        let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), false)).collect();
        let out = build(&mut g, &vars);
        g.value(out).shape().to_vec()
    };
    let weights = Tensor::randn(&out_shape, 1.0, rng);

    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone(), true)).collect();
    let out = build(&mut g, &vars);
    let w = g.leaf(weights.clone(), false);
    let prod = g.mul(out, w).unwrap();
    let loss = g.sum(prod).unwrap();
    g.backward(loss).unwrap();

    let h = 1e-4;
    let mut worst = 0.0f64;
    for (i, input) in inputs.iter().enumerate() {
        let analytic = g.grad(vars[i]).expect("gradient exists");
        for e in 0..input.len() {
            let mut plus = inputs.to_vec();
            plus[i].data_mut()[e] += h;
            let mut minus = inputs.to_vec();
            minus[i].data_mut()[e] -= h;
            let fd = (fd_loss(build, &plus, &weights) - fd_loss(build, &minus, &weights))
                / (2.0 * h);
            let rel = (analytic.data()[e] - fd).abs() / fd.abs().max(1.0);
            worst = worst.max(rel);
        }
    }
    worst
}

#[test]
fn criterion_06_gradient_checks_all_layers() {
    let mut rng = ChaCha12Rng::seed_from_u64(0xacce97);
    let shapes_per_layer = 20;
    let mut worst_by_layer: Vec<(&str, f64)> = Vec::new();

    // linear
    let mut worst = 0.0f64;
    for _ in 0..shapes_per_layer {
        let (n, inf, outf) = (
            rng.gen_range(1..4),
            rng.gen_range(1..6),
            rng.gen_range(1..5),
        );
        let inputs = vec![
            Tensor::randn(&[n, inf], 1.0, &mut rng),
            Tensor::randn(&[outf, inf], 1.0, &mut rng),
            Tensor::randn(&[outf], 1.0, &mut rng),
        ];
        worst = worst.max(fd_check(
            &|g, v| g.linear(v[0], v[1], v[2]).unwrap(),
            &inputs,
            &mut rng,
        ));
    }
    worst_by_layer.push(("linear", worst));

    // conv3d
    let mut worst = 0.0f64;
    for _ in 0..shapes_per_layer {
        let (n, ci, co) = (
            rng.gen_range(1..3),
            rng.gen_range(1..3),
            rng.gen_range(1..3),
        );
        let k = [1usize, 2, 3][rng.gen_range(0..3)];
        let stride = rng.gen_range(1..3);
        let pad = rng.gen_range(0..k);
        let sp = rng.gen_range(k..k + 3);
        let inputs = vec![
            Tensor::randn(&[n, ci, sp, sp, sp], 1.0, &mut rng),
            Tensor::randn(&[co, ci, k, k, k], 1.0, &mut rng),
            Tensor::randn(&[co], 1.0, &mut rng),
        ];
        worst = worst.max(fd_check(
            &move |g, v| g.conv3d(v[0], v[1], v[2], stride, pad).unwrap(),
            &inputs,
            &mut rng,
        ));
    }
    worst_by_layer.push(("conv3d", worst));

    // upconv3d
    let mut worst = 0.0f64;
    for _ in 0..shapes_per_layer {
        let (n, ci, co) = (
            rng.gen_range(1..3),
            rng.gen_range(1..3),
            rng.gen_range(1..3),
        );
        let k = [2usize, 3, 5][rng.gen_range(0..3)];
        let stride = rng.gen_range(1..3);
        let pad = rng.gen_range(0..k.min(2));
        let op = if stride > 1 { rng.gen_range(0..stride) } else { 0 };
        let sp = rng.gen_range(2..4);
        if stride * (sp - 1) + k + op <= 2 * pad {
            continue;
        }
        let inputs = vec![
            Tensor::randn(&[n, ci, sp, sp, sp], 1.0, &mut rng),
            Tensor::randn(&[ci, co, k, k, k], 1.0, &mut rng),
            Tensor::randn(&[co], 1.0, &mut rng),
        ];
        worst = worst.max(fd_check(
            &move |g, v| g.convt3d(v[0], v[1], v[2], stride, pad, op).unwrap(),
            &inputs,
            &mut rng,
        ));
    }
    worst_by_layer.push(("upconv3d", worst));

    // batch norm (train mode, gradients through the batch statistics)
    let mut worst = 0.0f64;
    for _ in 0..shapes_per_layer {
        let (n, c, sp) = (
            rng.gen_range(2..4),
            rng.gen_range(1..3),
            rng.gen_range(1..3),
        );
        let inputs = vec![
            Tensor::randn(&[n, c, sp, sp, sp], 1.0, &mut rng),
            Tensor::randn(&[c], 0.5, &mut rng),
            Tensor::randn(&[c], 0.5, &mut rng),
        ];
        worst = worst.max(fd_check(
            &|g, v| g.batchnorm_train(v[0], v[1], v[2], 1e-5).unwrap().0,
            &inputs,
            &mut rng,
        ));
    }
    worst_by_layer.push(("batchnorm", worst));

    // activations, at inputs away from the kinks
    for (name, f) in [
        ("relu", 0usize),
        ("leaky_relu", 1),
        ("tanh", 2),
        ("sigmoid", 3),
    ] {
        let mut worst = 0.0f64;
        for _ in 0..shapes_per_layer {
            let len = rng.gen_range(3..12);
            let data: Vec<f64> = (0..len)
                .map(|_| {
                    let v: f64 = rng.gen_range(0.2..1.5);
                    if rng.gen_bool(0.5) {
                        v
                    } else {
                        -v
                    }
                })
                .collect();
            let x = Tensor::from_vec(&[len], data).unwrap();
            let builder: Box<OpBuilder> = match f {
                0 => Box::new(|g: &mut Graph, v: &[Var]| g.relu(v[0]).unwrap()),
                1 => Box::new(|g: &mut Graph, v: &[Var]| g.leaky_relu(v[0], 0.2).unwrap()),
                2 => Box::new(|g: &mut Graph, v: &[Var]| g.tanh(v[0]).unwrap()),
                _ => Box::new(|g: &mut Graph, v: &[Var]| g.sigmoid(v[0]).unwrap()),
            };
            worst = worst.max(fd_check(&*builder, &[x], &mut rng));
        }
        worst_by_layer.push((name, worst));
    }

    for (name, worst) in &worst_by_layer {
        assert!(
            *worst < 1e-4,
            "{}: worst relative gradient error {} >= 1e-4",
            name,
            worst
        );
    }

    // conv/upconv adjointness: <conv(x), y> == <x, convt(y)> with the
    // shared weight tensor
    let mut worst_adj = 0.0f64;
    for _ in 0..20 {
        let (ci, co) = (rng.gen_range(1..3), rng.gen_range(1..4));
        let k = [3usize, 5][rng.gen_range(0..2)];
        let stride = rng.gen_range(1..3);
        let pad = rng.gen_range(0..k.min(3));
        let sp = rng.gen_range(k..k + 4);
        let x = Tensor::randn(&[1, ci, sp, sp, sp], 1.0, &mut rng);
        let w = Tensor::randn(&[co, ci, k, k, k], 1.0, &mut rng);
        let cx = match sdfgen_core::nn::conv::conv3d_forward(&x, &w, None, stride, pad) {
            Ok(t) => t,
            Err(_) => continue, // kernel larger than padded input
        };
        let y = Tensor::randn(cx.shape(), 1.0, &mut rng);
        let lhs: f64 = cx.data().iter().zip(y.data()).map(|(a, b)| a * b).sum();
        let ty =
            sdfgen_core::nn::conv::conv3d_grad_input(&y, &w, stride, pad, [sp, sp, sp])
                .unwrap();
        let rhs: f64 = x.data().iter().zip(ty.data()).map(|(a, b)| a * b).sum();
        worst_adj = worst_adj.max((lhs - rhs).abs() / lhs.abs().max(1.0));
    }
    assert!(worst_adj < 1e-10, "adjointness error {}", worst_adj);

    let summary: Vec<String> = worst_by_layer
        .iter()
        .map(|(n, w)| format!("{} {:.1e}", n, w))
        .collect();
    println!(
        "PASS criterion 6: gradient checks over {} shapes/layer (<1e-4): {}; adjointness {:.1e} (<1e-10)",
        shapes_per_layer,
        summary.join(", "),
        worst_adj
    );
}

#[test]
fn criterion_07_architecture_shape_ladders() {
    // full-scale ladder as pure shape inference
    let full = LfgConfig::full_scale();
    let ladder = full.generator_shape_ladder().unwrap();
    let expected: Vec<Vec<usize>> = vec![
        vec![200],
        vec![512, 4, 4, 4],
        vec![256, 8, 8, 8],
        vec![128, 16, 16, 16],
        vec![64, 32, 32, 32],
        vec![1, 64, 64, 64],
    ];
    let got: Vec<Vec<usize>> = ladder.iter().map(|(_, s)| s.clone()).collect();
    assert_eq!(got, expected, "full-scale ladder mismatch");

    // desk ladder, inferred and actually executed
    let desk = LfgConfig::desk();
    let desk_ladder = desk.generator_shape_ladder().unwrap();
    assert_eq!(desk_ladder.last().unwrap().1, vec![1, 16, 16, 16]);

    let mut rng = ChaCha12Rng::seed_from_u64(77);
    let mut gen = sdfgen_core::gan::lfg::LfgGenerator::new(desk, &mut rng).unwrap();
    let mut g = Graph::new();
    let mut binder = Binder::frozen();
    let z = g.leaf(
        Tensor::rand_uniform(&[1, desk.latent_dim], -1.0, 1.0, &mut rng),
        false,
    );
    let out = gen.forward(&mut g, &mut binder, z, Mode::Eval).unwrap();
    assert_eq!(g.value(out).shape(), &[1, 1, 16, 16, 16]);
    for v in g.value(out).data() {
        assert!(*v > -1.0 && *v < 1.0);
    }
    println!(
        "PASS criterion 7: full ladder 200 -> 512x4^3 -> ... -> 64^3 verified; desk ladder executes to 16^3 in (-1, 1)"
    );
}

#[test]
fn criterion_08_discriminator_skip_rule() {
    let dataset = chair_dataset();
    let schedule = TrainSchedule {
        total_steps: 500,
        batch_size: 8,
        seed: 31,
        ..Default::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let log_path = dir.path().join("lfg_500.ldjson");
    let (_trainer, metrics) =
        train_lfg(dataset, LfgConfig::desk(), &schedule, Some(&log_path)).unwrap();
    assert_eq!(metrics.len(), 500);
    let log_lines = std::fs::read_to_string(&log_path).unwrap().lines().count();
    assert_eq!(log_lines, 500);

    let mut skips = 0usize;
    let mut non_skips = 0usize;
    for i in 0..metrics.len() {
        let m = &metrics[i];
        assert!(
            m.loss_d.is_finite() && m.loss_g.is_finite(),
            "step {}: non-finite loss",
            m.step
        );
        assert!(m.loss_g < 10.0, "step {}: loss_g {} >= 10", m.step, m.loss_g);
        if i > 0 {
            // the gate is the previous step's accuracy
            let expected_skip = metrics[i - 1].d_accuracy > 0.8;
            assert_eq!(
                m.d_skipped, expected_skip,
                "step {}: skip flag disagrees with previous accuracy {}",
                m.step,
                metrics[i - 1].d_accuracy
            );
            if m.d_skipped {
                assert_eq!(
                    m.d_checksum,
                    metrics[i - 1].d_checksum,
                    "step {}: discriminator changed during a skipped step",
                    m.step
                );
            }
        } else {
            assert!(!m.d_skipped, "first step cannot be skipped");
        }
        if m.d_skipped {
            skips += 1;
        } else {
            non_skips += 1;
        }
    }
    assert!(skips > 0, "no skipped step in 500");
    assert!(non_skips > 0, "no non-skipped step in 500");
    println!(
        "PASS criterion 8: 500-step run, {} skipped / {} trained discriminator steps, checksums frozen on every skip",
        skips, non_skips
    );
}

/// Mean |high - G(low)| over the whole training set, eval mode.
fn hfg_training_set_l1(
    trainer: &mut HfgTrainer,
    pairs: &[(Tensor, Tensor)],
) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for (low, high) in pairs {
        let mut g = Graph::new();
        let mut binder = Binder::frozen();
        let batch_low =
            Tensor::from_vec(&[1, 1, 16, 16, 16], low.data().to_vec()).unwrap();
        let lv = g.leaf(batch_low, false);
        let out = trainer
            .generator
            .forward(&mut g, &mut binder, lv, Mode::Eval)
            .unwrap();
        for (a, b) in g.value(out).data().iter().zip(high.data()) {
            total += (a - b).abs();
            count += 1;
        }
    }
    total / count as f64
}

#[test]
fn criterion_09_hfg_supervised_behavior() {
    let dataset = chair_dataset();
    let schedule = TrainSchedule {
        total_steps: 1000,
        batch_size: 8,
        seed: 67,
        ..Default::default()
    };
    let config = HfgConfig::desk();
    assert_eq!(config.cutoff, 2, "cutoff n/8 at 16^3");
    let pairs = make_hfg_pairs(dataset, 16, schedule.tau, config.cutoff).unwrap();
    assert_eq!(pairs.len(), 20);

    let start = Instant::now();
    let mut trainer = HfgTrainer::new(config, schedule.clone()).unwrap();
    let mut batch_rng = ChaCha12Rng::seed_from_u64(schedule.seed ^ 0x9e3779b97f4a7c15);
    let mut l1_at_50 = f64::NAN;
    let mut metrics: Vec<StepMetrics> = Vec::with_capacity(1000);
    for step in 1..=1000usize {
        let idx: Vec<usize> = (0..schedule.batch_size)
            .map(|_| batch_rng.gen_range(0..pairs.len()))
            .collect();
        let mut low_data = Vec::new();
        let mut high_data = Vec::new();
        for i in &idx {
            low_data.extend_from_slice(pairs[*i].0.data());
            high_data.extend_from_slice(pairs[*i].1.data());
        }
        let low =
            Tensor::from_vec(&[schedule.batch_size, 1, 16, 16, 16], low_data).unwrap();
        let high =
            Tensor::from_vec(&[schedule.batch_size, 1, 16, 16, 16], high_data).unwrap();
        metrics.push(trainer.train_step(&low, &high).unwrap());
        if step == 50 {
            l1_at_50 = hfg_training_set_l1(&mut trainer, &pairs);
        }
    }
    let elapsed = start.elapsed();
    let l1_final = hfg_training_set_l1(&mut trainer, &pairs);

    assert!(
        l1_final <= 0.5 * l1_at_50,
        "final training-set L1 {} > 50% of step-50 value {}",
        l1_final,
        l1_at_50
    );
    assert!(
        elapsed < Duration::from_secs(30 * 60),
        "1000 steps took {:?} (>= 30 min)",
        elapsed
    );

    // supervised-term trend: consecutive disjoint 200-step window means
    // non-increasing in at least 80% of transitions
    let window_means: Vec<f64> = metrics
        .chunks(200)
        .map(|w| w.iter().map(|m| m.l1.unwrap()).sum::<f64>() / w.len() as f64)
        .collect();
    let transitions = window_means.len() - 1;
    let non_increasing = window_means
        .windows(2)
        .filter(|w| w[1] <= w[0])
        .count();
    assert!(
        non_increasing as f64 >= 0.8 * transitions as f64,
        "L1 window means increased too often: {:?}",
        window_means
    );

    println!(
        "PASS criterion 9: training-set L1 {:.5} at step 50 -> {:.5} final ({:.1}%, <=50%), {:.1?} (<30 min), {}/{} windows non-increasing",
        l1_at_50,
        l1_final,
        100.0 * l1_final / l1_at_50,
        elapsed,
        non_increasing,
        transitions
    );
}

#[test]
fn criterion_10_composition_identity_and_symmetry() {
    use sdfgen_cli::{Axis, GeneratorStack};
    use sdfgen_core::gan::train::{
        save_hfg_checkpoint, save_lfg_checkpoint, train_hfg,
    };

    let dataset = chair_dataset();
    let schedule = TrainSchedule {
        total_steps: 2,
        batch_size: 4,
        seed: 13,
        ..Default::default()
    };
    let lfg_config = LfgConfig {
        latent_dim: 16,
        base_resolution: 2,
        base_channels: 16,
        n_upconv_layers: 3,
    };
    let (lfg_trainer, _) = train_lfg(dataset, lfg_config, &schedule, None).unwrap();
    let hfg_config = HfgConfig::desk();
    let pairs = make_hfg_pairs(dataset, 16, schedule.tau, hfg_config.cutoff).unwrap();
    let (mut hfg_trainer, _) = train_hfg(&pairs, hfg_config, &schedule, None).unwrap();
    hfg_trainer.generator.zero_parameters();

    let dir = tempfile::tempdir().unwrap();
    let lfg_path = dir.path().join("lfg.ckpt");
    let hfg_path = dir.path().join("hfg.ckpt");
    save_lfg_checkpoint(&lfg_trainer, &lfg_path).unwrap();
    save_hfg_checkpoint(&hfg_trainer, &hfg_path).unwrap();

    // zeroed high-band generator: the composition equals the low-passed
    // generator output bitwise
    let mut stack = GeneratorStack::load(&lfg_path, &hfg_path, None).unwrap();
    let z = stack.latent(99);
    let composed = stack.compose(&z, None).unwrap();

    // independent route to sigma(L(z)) * tau through a fresh model pair
    let (_, _, mut lfg_gen, _) =
        sdfgen_core::gan::train::load_lfg_checkpoint(&lfg_path).unwrap();
    let raw = {
        let mut g = Graph::new();
        let mut binder = Binder::frozen();
        let zv = g.leaf(z.clone(), false);
        let out = lfg_gen.forward(&mut g, &mut binder, zv, Mode::Eval).unwrap();
        g.value(out).clone()
    };
    let t_grid = SdfGrid::canonical(16)
        .with_values(raw.data().to_vec())
        .unwrap();
    let low = low_pass(&t_grid, FilterSpec::new(stack.cutoff)).unwrap();
    let mut bit_equal = true;
    for (c, l) in composed.values().iter().zip(low.values()) {
        if c.to_bits() != ((l + 0.0) * stack.tau).to_bits() {
            bit_equal = false;
            break;
        }
    }
    assert!(bit_equal, "zeroed-HFG composition differs from sigma(L(z))");

    // symmetry flag: reflection-invariance within 1e-12
    let symmetric = stack.compose(&z, Some(Axis::X)).unwrap();
    let n = 16usize;
    let mut max_asym = 0.0f64;
    for z_i in 0..n {
        for y in 0..n {
            for x in 0..n {
                let d = (symmetric.at(x, y, z_i) - symmetric.at(n - 1 - x, y, z_i)).abs();
                max_asym = max_asym.max(d);
            }
        }
    }
    assert!(max_asym < 1e-12, "asymmetry {}", max_asym);

    println!(
        "PASS criterion 10: zeroed-HFG composition bitwise equal to low-passed generator output; x-symmetrized field asymmetry {:.1e} (<1e-12)",
        max_asym
    );
}

#[test]
fn criterion_11_end_to_end_determinism() {
    let dir = tempfile::tempdir().unwrap();

    // convert: two runs, byte-identical grids
    let mesh = icosphere(Vec3::ZERO, 0.45, 2).unwrap();
    let obj = dir.path().join("sphere.obj");
    sdfgen_core::save_mesh(&mesh, &obj, sdfgen_core::MeshFormat::Obj).unwrap();
    let (c1, c2) = (dir.path().join("c1.sdf"), dir.path().join("c2.sdf"));
    run_bin(&[
        "convert",
        obj.to_str().unwrap(),
        c1.to_str().unwrap(),
        "--res",
        "16",
    ]);
    run_bin(&[
        "convert",
        obj.to_str().unwrap(),
        c2.to_str().unwrap(),
        "--res",
        "16",
    ]);
    assert_eq!(
        std::fs::read(&c1).unwrap(),
        std::fs::read(&c2).unwrap(),
        "convert is not deterministic"
    );

    // train: two runs with one seed, byte-identical checkpoints
    let data = dir.path().join("data");
    run_bin(&[
        "synth",
        data.to_str().unwrap(),
        "--family",
        "boxes",
        "--count",
        "4",
        "--seed",
        "3",
        "--res",
        "8",
    ]);
    let (t1, t2) = (dir.path().join("t1.ckpt"), dir.path().join("t2.ckpt"));
    for t in [&t1, &t2] {
        run_bin(&[
            "train-lfg",
            data.to_str().unwrap(),
            t.to_str().unwrap(),
            "--steps",
            "30",
            "--batch",
            "2",
            "--seed",
            "17",
            "--latent",
            "8",
            "--base-res",
            "2",
            "--base-channels",
            "8",
            "--layers",
            "2",
        ]);
    }
    assert_eq!(
        std::fs::read(&t1).unwrap(),
        std::fs::read(&t2).unwrap(),
        "training is not deterministic"
    );

    // generate: two runs from the same checkpoints and seed
    let hfg = dir.path().join("hfg.ckpt");
    run_bin(&[
        "train-hfg",
        data.to_str().unwrap(),
        hfg.to_str().unwrap(),
        "--steps",
        "5",
        "--batch",
        "2",
        "--seed",
        "17",
        "--base-channels",
        "2",
        "--depth",
        "2",
    ]);
    let (g1, g2) = (dir.path().join("g1.sdf"), dir.path().join("g2.sdf"));
    for g in [&g1, &g2] {
        run_bin(&[
            "generate",
            "--lfg",
            t1.to_str().unwrap(),
            "--hfg",
            hfg.to_str().unwrap(),
            "--seed",
            "5",
            "--symmetry",
            "x",
            "--sdf",
            g.to_str().unwrap(),
        ]);
    }
    assert_eq!(
        std::fs::read(&g1).unwrap(),
        std::fs::read(&g2).unwrap(),
        "generation is not deterministic"
    );
    println!(
        "PASS criterion 11: convert, train, and generate each byte-identical across two runs"
    );
}
