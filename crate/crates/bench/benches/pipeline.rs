use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use sdfgen_core::geom::Vec3;
use sdfgen_core::nn::conv::{conv3d_forward, convt3d_forward};
use sdfgen_core::nn::Tensor;
use sdfgen_core::primitives::icosphere;
use sdfgen_core::sdf::{mesh_to_sdf, unsigned_distance, winding_number, AabbTree};
use sdfgen_core::spectral::{low_pass, FilterSpec};
use sdfgen_core::surface::marching_cubes;
use sdfgen_core::SdfGrid;

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

fn bench_distance_queries(c: &mut Criterion) {
    let mesh = icosphere(Vec3::ZERO, 0.45, 3).unwrap();
    let tree = AabbTree::build(&mesh, 8).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(1);
    let points: Vec<Vec3> = (0..256)
        .map(|_| {
            use rand::Rng;
            Vec3::new(
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
                rng.gen_range(-0.5..0.5),
            )
        })
        .collect();

    c.bench_function("unsigned_distance_icosphere_256pts", |b| {
        b.iter(|| {
            points
                .iter()
                .map(|p| unsigned_distance(&tree, &mesh, *p))
                .sum::<f64>()
        })
    });
    c.bench_function("winding_number_icosphere_256pts", |b| {
        b.iter(|| points.iter().map(|p| winding_number(&mesh, *p)).sum::<f64>())
    });
}

fn bench_mesh_to_sdf(c: &mut Criterion) {
    let mesh = icosphere(Vec3::ZERO, 0.45, 2).unwrap();
    let mut group = c.benchmark_group("mesh_to_sdf");
    group.sample_size(10);
    for res in [16usize, 32] {
        group.bench_with_input(BenchmarkId::from_parameter(res), &res, |b, &res| {
            b.iter(|| mesh_to_sdf(&mesh, res, 0.5).unwrap())
        });
    }
    group.finish();
}

fn bench_spectral(c: &mut Criterion) {
    let grid = sphere_grid(64, 0.4);
    let mut group = c.benchmark_group("spectral");
    group.sample_size(20);
    group.bench_function("low_pass_64", |b| {
        b.iter(|| low_pass(&grid, FilterSpec::new(8)).unwrap())
    });
    group.finish();
}

fn bench_marching_cubes(c: &mut Criterion) {
    let grid = sphere_grid(64, 0.4);
    let mut group = c.benchmark_group("surface");
    group.sample_size(20);
    group.bench_function("marching_cubes_64", |b| {
        b.iter(|| marching_cubes(&grid, 0.0).unwrap())
    });
    group.finish();
}

fn bench_conv_kernels(c: &mut Criterion) {
    let mut rng = ChaCha12Rng::seed_from_u64(2);
    let x = Tensor::randn(&[4, 16, 8, 8, 8], 1.0, &mut rng);
    let w = Tensor::randn(&[32, 16, 5, 5, 5], 0.02, &mut rng);
    let bias = Tensor::zeros(&[32]);
    let xt = Tensor::randn(&[4, 32, 4, 4, 4], 1.0, &mut rng);
    let wt = Tensor::randn(&[32, 16, 5, 5, 5], 0.02, &mut rng);
    let bias_t = Tensor::zeros(&[16]);

    let mut group = c.benchmark_group("nn");
    group.sample_size(20);
    group.bench_function("conv3d_16to32ch_8cube", |b| {
        b.iter(|| conv3d_forward(&x, &w, Some(&bias), 2, 2).unwrap())
    });
    group.bench_function("convt3d_32to16ch_4to8cube", |b| {
        b.iter(|| convt3d_forward(&xt, &wt, Some(&bias_t), 2, 2, 1).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_distance_queries,
    bench_mesh_to_sdf,
    bench_spectral,
    bench_marching_cubes,
    bench_conv_kernels
);
criterion_main!(benches);
