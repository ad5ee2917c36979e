//! Composed shape generation, latent interpolation, and field verification.
//!
//! Generation composes the two trained networks exactly as
//! S = sigma(L(z)) + H(sigma(L(z))): the latent generator's output is
//! low-passed at the band cutoff, the conditional generator adds the high
//! band, optional mirror symmetry averages the field with its reflection,
//! and the truncation scale is inverted before surface extraction so iso 0
//! stays geometrically meaningful.

use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use sdfgen_core::error::{Error, Result};
use sdfgen_core::gan::hfg::HfgGenerator;
use sdfgen_core::gan::lfg::LfgGenerator;
use sdfgen_core::gan::train::{load_hfg_checkpoint, load_lfg_checkpoint};
use sdfgen_core::gan::TrainScheduleConfig;
use sdfgen_core::mesh::{save_mesh, MeshFormat, TriMesh};
use sdfgen_core::nn::{Binder, Graph, Mode, Tensor};
use sdfgen_core::sdf::{eikonal_residual, read_sdf, write_sdf, EikonalStats, Sidecar};
use sdfgen_core::spectral::{low_pass, FilterSpec};
use sdfgen_core::surface::{laplace_smooth, marching_cubes};
use sdfgen_core::SdfGrid;

/// Mirror axis for test-time symmetry enforcement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    pub fn parse(s: &str) -> Result<Axis> {
        match s {
            "x" => Ok(Axis::X),
            "y" => Ok(Axis::Y),
            "z" => Ok(Axis::Z),
            other => Err(Error::InvalidConfig(format!(
                "unknown axis '{}' (expected x, y, z)",
                other
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Axis::X => "x",
            Axis::Y => "y",
            Axis::Z => "z",
        }
    }
}

/// A generation request tying two checkpoints to one output.
#[derive(Debug, Clone)]
pub struct GenerationRequest {
    pub lfg_checkpoint: PathBuf,
    pub hfg_checkpoint: PathBuf,
    pub seed: u64,
    pub symmetry: Option<Axis>,
    /// Band cutoff; defaults to the cutoff the conditional generator was
    /// trained with, and must match it when given.
    pub cutoff: Option<usize>,
    pub sdf_out: Option<PathBuf>,
    pub mesh_out: Option<PathBuf>,
    pub smoothing_iterations: usize,
    pub smoothing_lambda: f64,
}

impl GenerationRequest {
    pub fn new(lfg: PathBuf, hfg: PathBuf, seed: u64) -> GenerationRequest {
        GenerationRequest {
            lfg_checkpoint: lfg,
            hfg_checkpoint: hfg,
            seed,
            symmetry: None,
            cutoff: None,
            sdf_out: None,
            mesh_out: None,
            smoothing_iterations: 0,
            smoothing_lambda: 0.5,
        }
    }
}

pub struct GenerationOutput {
    pub grid: SdfGrid,
    pub mesh: TriMesh,
}

/// Loaded generator pair ready to produce shapes.
pub struct GeneratorStack {
    lfg: LfgGenerator,
    hfg: HfgGenerator,
    pub resolution: usize,
    pub latent_dim: usize,
    pub cutoff: usize,
    pub tau: f64,
}

impl GeneratorStack {
    pub fn load(lfg_path: &Path, hfg_path: &Path, cutoff: Option<usize>) -> Result<GeneratorStack> {
        let (lfg_config, lfg_sched, lfg, _lfg_disc) = load_lfg_checkpoint(lfg_path)?;
        let (hfg_config, hfg_sched, hfg, _hfg_disc) = load_hfg_checkpoint(hfg_path)?;
        let resolution = lfg_config.output_resolution();
        if resolution != hfg_config.resolution {
            return Err(Error::InvalidConfig(format!(
                "checkpoint resolutions disagree: lfg outputs {}^3, hfg expects {}^3",
                resolution, hfg_config.resolution
            )));
        }
        if (lfg_sched.tau - hfg_sched.tau).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "checkpoint truncation scales disagree: {} vs {}",
                lfg_sched.tau, hfg_sched.tau
            )));
        }
        let cutoff = match cutoff {
            Some(c) if c != hfg_config.cutoff => {
                return Err(Error::InvalidConfig(format!(
                    "requested cutoff {} but the hfg checkpoint was trained at {}",
                    c, hfg_config.cutoff
                )));
            }
            Some(c) => c,
            None => hfg_config.cutoff,
        };
        if cutoff >= resolution / 2 {
            return Err(Error::InvalidConfig(format!(
                "cutoff {} not below {}/2",
                cutoff, resolution
            )));
        }
        Ok(GeneratorStack {
            lfg,
            hfg,
            resolution,
            latent_dim: lfg_config.latent_dim,
            cutoff,
            tau: lfg_sched.tau,
        })
    }

    /// Latent draw for a seed: i.i.d. uniform over [-1, 1].
    pub fn latent(&self, seed: u64) -> Tensor {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Tensor::rand_uniform(&[1, self.latent_dim], -1.0, 1.0, &mut rng)
    }

    /// S = sigma(L(z)) + H(sigma(L(z))), then optional symmetry averaging,
    /// then inversion of the truncation scale. Returned values are raw
    /// distances.
    pub fn compose(&mut self, z: &Tensor, symmetry: Option<Axis>) -> Result<SdfGrid> {
        let n = self.resolution;

        // L(z)
        let raw = {
            let mut g = Graph::new();
            let mut binder = Binder::frozen();
            let zv = g.leaf(z.clone(), false);
            let out = self.lfg.forward(&mut g, &mut binder, zv, Mode::Eval)?;
            g.value(out).clone()
        };

        // sigma: ideal low-pass at the band cutoff
        let full_grid = SdfGrid::canonical(n).with_values(raw.data().to_vec())?;
        let low_grid = low_pass(&full_grid, FilterSpec::new(self.cutoff))?;

        // H(sigma(L(z)))
        let high = {
            let low_tensor = Tensor::from_vec(&[1, 1, n, n, n], low_grid.values().to_vec())?;
            let mut g = Graph::new();
            let mut binder = Binder::frozen();
            let lv = g.leaf(low_tensor, false);
            let out = self.hfg.forward(&mut g, &mut binder, lv, Mode::Eval)?;
            g.value(out).clone()
        };

        // S = low + high, in exactly that order
        let mut s: Vec<f64> = low_grid
            .values()
            .iter()
            .zip(high.data())
            .map(|(l, h)| l + h)
            .collect();

        if let Some(axis) = symmetry {
            s = symmetrize(&s, n, axis);
        }

        // invert the truncation scale so iso 0 is geometric again
        for v in &mut s {
            *v *= self.tau;
        }
        SdfGrid::canonical(n).with_values(s)
    }
}

/// (field + its mirror image) / 2; an exact projection because addition
/// commutes, so applying it twice changes nothing.
pub fn symmetrize(values: &[f64], n: usize, axis: Axis) -> Vec<f64> {
    let mut out = vec![0.0; values.len()];
    for z in 0..n {
        for y in 0..n {
            for x in 0..n {
                let (mx, my, mz) = match axis {
                    Axis::X => (n - 1 - x, y, z),
                    Axis::Y => (x, n - 1 - y, z),
                    Axis::Z => (x, y, n - 1 - z),
                };
                let i = x + n * (y + n * z);
                let m = mx + n * (my + n * mz);
                out[i] = (values[i] + values[m]) / 2.0;
            }
        }
    }
    out
}

/// Run one generation request end to end.
pub fn generate(req: &GenerationRequest) -> Result<GenerationOutput> {
    let mut stack = GeneratorStack::load(&req.lfg_checkpoint, &req.hfg_checkpoint, req.cutoff)?;
    let z = stack.latent(req.seed);
    let grid = stack.compose(&z, req.symmetry)?;

    let mut mesh = marching_cubes(&grid, 0.0)?;
    if req.smoothing_iterations > 0 && !mesh.is_empty() {
        mesh = laplace_smooth(&mesh, req.smoothing_iterations, req.smoothing_lambda)?;
    }

    if let Some(path) = &req.sdf_out {
        let mut sidecar = Sidecar::new();
        sidecar.seed = Some(req.seed);
        sidecar.cutoff = Some(stack.cutoff);
        sidecar.tau = Some(stack.tau);
        sidecar.symmetry = req.symmetry.map(|a| a.name().to_string());
        write_sdf(&grid, path, &sidecar)?;
    }
    if let Some(path) = &req.mesh_out {
        if mesh.is_empty() {
            return Err(Error::InvalidMesh(
                "generated field has no zero crossing; nothing to export".into(),
            ));
        }
        save_mesh(&mesh, path, MeshFormat::Obj)?;
    }
    Ok(GenerationOutput { grid, mesh })
}

/// One interpolation frame on disk: the field always, the mesh whenever
/// the field has a zero crossing.
#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub index: usize,
    pub sdf: PathBuf,
    pub mesh: Option<PathBuf>,
}

/// Linear latent interpolation z_t = (1-t) z_a + t z_b over `steps` frames;
/// endpoints reproduce direct generation from either seed exactly.
pub fn interpolate(
    lfg_path: &Path,
    hfg_path: &Path,
    seed_a: u64,
    seed_b: u64,
    steps: usize,
    symmetry: Option<Axis>,
    out_dir: &Path,
) -> Result<Vec<FrameRecord>> {
    if steps < 2 {
        return Err(Error::InvalidConfig(format!(
            "interpolation needs at least 2 steps, got {}",
            steps
        )));
    }
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut stack = GeneratorStack::load(lfg_path, hfg_path, None)?;
    let za = stack.latent(seed_a);
    let zb = stack.latent(seed_b);

    let mut frames = Vec::with_capacity(steps);
    for i in 0..steps {
        let t = i as f64 / (steps - 1) as f64;
        let data: Vec<f64> = za
            .data()
            .iter()
            .zip(zb.data())
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        let z = Tensor::from_vec(za.shape(), data)?;
        let grid = stack.compose(&z, symmetry)?;

        let sdf_path = out_dir.join(format!("frame_{:03}.sdf", i));
        let mut sidecar = Sidecar::new();
        sidecar.cutoff = Some(stack.cutoff);
        sidecar.tau = Some(stack.tau);
        sidecar.symmetry = symmetry.map(|a| a.name().to_string());
        write_sdf(&grid, &sdf_path, &sidecar)?;

        let mesh = marching_cubes(&grid, 0.0)?;
        let mesh_path = if mesh.is_empty() {
            None
        } else {
            let p = out_dir.join(format!("frame_{:03}.obj", i));
            save_mesh(&mesh, &p, MeshFormat::Obj)?;
            Some(p)
        };
        frames.push(FrameRecord {
            index: i,
            sdf: sdf_path,
            mesh: mesh_path,
        });
    }
    Ok(frames)
}

/// Field verification report.
#[derive(Debug, Serialize)]
pub struct VerifyReport {
    pub path: String,
    pub dims: [usize; 3],
    pub spacing: f64,
    pub positive_inside: bool,
    pub min_value: f64,
    pub max_value: f64,
    /// All values finite and within the domain diagonal.
    pub values_in_range: bool,
    /// Eikonal statistics; absent when the gradient-flip exclusion band
    /// covered every interior point.
    pub eikonal_mean: Option<f64>,
    pub eikonal_median: Option<f64>,
    pub eikonal_p95: Option<f64>,
    pub eikonal_excluded: usize,
    pub eikonal_counted: usize,
    /// max |f(p) - f(q)| / h over axis neighbors; ~1 for a distance field.
    pub lipschitz_max_ratio: f64,
}

/// Check an SDF1 file: format, value range, Eikonal residual statistics,
/// and the neighbor Lipschitz ratio.
pub fn verify(path: &Path) -> Result<VerifyReport> {
    let (grid, _sidecar) = read_sdf(path)?;
    let stats: EikonalStats = eikonal_residual(&grid)?;
    let [nx, ny, nz] = grid.dims();
    let mut lipschitz: f64 = 0.0;
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let v = grid.at(x, y, z);
                if x + 1 < nx {
                    lipschitz = lipschitz.max((grid.at(x + 1, y, z) - v).abs());
                }
                if y + 1 < ny {
                    lipschitz = lipschitz.max((grid.at(x, y + 1, z) - v).abs());
                }
                if z + 1 < nz {
                    lipschitz = lipschitz.max((grid.at(x, y, z + 1) - v).abs());
                }
            }
        }
    }
    let diagonal = 3.0f64.sqrt();
    let opt = |v: f64| if v.is_finite() { Some(v) } else { None };
    Ok(VerifyReport {
        path: path.display().to_string(),
        dims: grid.dims(),
        spacing: grid.spacing(),
        positive_inside: grid.positive_inside(),
        min_value: grid.min_value(),
        max_value: grid.max_value(),
        values_in_range: grid.max_abs() <= diagonal + 1e-6,
        eikonal_mean: opt(stats.mean),
        eikonal_median: opt(stats.median),
        eikonal_p95: opt(stats.p95),
        eikonal_excluded: stats.excluded,
        eikonal_counted: stats.counted,
        lipschitz_max_ratio: lipschitz / grid.spacing(),
    })
}

pub use sdfgen_core::gan::train::TrainSchedule;

/// Shared helper: read every `.sdf` grid in a directory, sorted by name.
pub fn load_sdf_dir(dir: &Path) -> Result<Vec<SdfGrid>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("sdf"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::InvalidConfig(format!(
            "no .sdf files in {}",
            dir.display()
        )));
    }
    paths
        .iter()
        .map(|p| read_sdf(p).map(|(grid, _)| grid))
        .collect()
}

/// Schedule builder shared by the train subcommands.
pub fn schedule_from_args(
    steps: usize,
    batch: usize,
    seed: u64,
    tau: f64,
) -> TrainScheduleConfig {
    TrainScheduleConfig {
        total_steps: steps,
        batch_size: batch,
        seed,
        tau,
        ..Default::default()
    }
}
