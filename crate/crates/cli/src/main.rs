//! `sdfgen`: mesh-to-SDF conversion, band splitting, surface extraction,
//! synthetic datasets, GAN training, and composed shape generation.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use sdfgen_cli::pipeline::{self, schedule_from_args};
use sdfgen_cli::synth::{synth_dataset, Family, SynthSpec};
use sdfgen_cli::{Axis, GenerationRequest};
use sdfgen_core::error::{Error, Result};
use sdfgen_core::gan::hfg::HfgConfig;
use sdfgen_core::gan::lfg::LfgConfig;
use sdfgen_core::gan::train::{
    make_hfg_pairs, save_hfg_checkpoint, save_lfg_checkpoint, train_hfg, train_lfg,
};
use sdfgen_core::gan::DEFAULT_TAU;
use sdfgen_core::mesh::{load_mesh, save_mesh, MeshFormat};
use sdfgen_core::sdf::{mesh_to_sdf, read_sdf, write_sdf, Sidecar};
use sdfgen_core::spectral::{split_bands, FilterSpec};
use sdfgen_core::surface::{laplace_smooth, marching_cubes};
use sdfgen_core::normalize_mesh;

#[derive(Parser)]
#[command(
    name = "sdfgen",
    version,
    about = "Signed-distance-field shape generation pipeline"
)]
struct Cli {
    /// Worker thread count (also honors SDFGEN_THREADS; default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Convert a triangle mesh (OBJ or STL) to an SDF1 grid.
    Convert {
        input: PathBuf,
        output: PathBuf,
        /// Grid resolution per axis.
        #[arg(long, default_value_t = 64)]
        res: usize,
        /// Winding-number threshold separating inside from outside.
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Split a grid into complementary low/high frequency bands.
    Split {
        input: PathBuf,
        low: PathBuf,
        high: PathBuf,
        /// Largest retained mode index per axis.
        #[arg(long)]
        cutoff: usize,
    },
    /// Extract the iso-surface of a grid as an OBJ mesh.
    Extract {
        input: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        iso: f64,
        #[arg(long, default_value_t = 0)]
        smooth_iters: usize,
        #[arg(long, default_value_t = 0.5)]
        smooth_lambda: f64,
    },
    /// Generate a synthetic dataset (meshes + grids + manifest).
    Synth {
        out_dir: PathBuf,
        /// Shape family: boxes, cylinders, or chairs.
        #[arg(long, default_value = "chairs")]
        family: String,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        res: usize,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
    },
    /// Train the latent-vector generator on a directory of .sdf grids.
    TrainLfg {
        data_dir: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 8)]
        batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 64)]
        latent: usize,
        #[arg(long, default_value_t = 2)]
        base_res: usize,
        #[arg(long, default_value_t = 64)]
        base_channels: usize,
        /// Upconv layer count; the output resolution is base_res * 2^layers
        /// and must match the dataset grids.
        #[arg(long, default_value_t = 3)]
        layers: usize,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        /// Line-delimited JSON training log.
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Train the low-to-high band translator on a directory of .sdf grids.
    TrainHfg {
        data_dir: PathBuf,
        output: PathBuf,
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 8)]
        batch: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Band cutoff; defaults to resolution / 8.
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long, default_value_t = 8)]
        base_channels: usize,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 100.0)]
        l1_weight: f64,
        #[arg(long, default_value_t = DEFAULT_TAU)]
        tau: f64,
        #[arg(long)]
        log: Option<PathBuf>,
    },
    /// Compose the trained generators into a new shape.
    Generate {
        #[arg(long)]
        lfg: PathBuf,
        #[arg(long)]
        hfg: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Mirror-symmetry axis applied at test time (x, y, or z).
        #[arg(long)]
        symmetry: Option<String>,
        /// Band cutoff; must match the hfg checkpoint when given.
        #[arg(long)]
        cutoff: Option<usize>,
        #[arg(long)]
        sdf: Option<PathBuf>,
        #[arg(long)]
        mesh: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        smooth_iters: usize,
        #[arg(long, default_value_t = 0.5)]
        smooth_lambda: f64,
    },
    /// Morph between two latent seeds, writing one frame per step.
    Interpolate {
        out_dir: PathBuf,
        #[arg(long)]
        lfg: PathBuf,
        #[arg(long)]
        hfg: PathBuf,
        #[arg(long)]
        seed_a: u64,
        #[arg(long)]
        seed_b: u64,
        #[arg(long, default_value_t = 9)]
        steps: usize,
        #[arg(long)]
        symmetry: Option<String>,
    },
    /// Check an SDF1 file and report distance-field quality statistics.
    Verify {
        input: PathBuf,
        /// Fail (exit 1) when the median Eikonal residual exceeds this.
        #[arg(long)]
        max_median_eikonal: Option<f64>,
    },
}

fn init_threads(flag: Option<usize>) {
    let count = flag.or_else(|| {
        std::env::var("SDFGEN_THREADS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = count {
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convert {
            input,
            output,
            res,
            threshold,
        } => {
            let format = MeshFormat::from_path(&input).ok_or_else(|| {
                Error::InvalidConfig(format!(
                    "cannot infer mesh format from {}",
                    input.display()
                ))
            })?;
            let report = load_mesh(&input, format)?;
            if report.dropped_degenerate > 0 {
                eprintln!(
                    "warning: dropped {} degenerate faces",
                    report.dropped_degenerate
                );
            }
            let mesh = normalize_mesh(&report.mesh)?;
            let grid = mesh_to_sdf(&mesh, res, threshold)?;
            let mut sidecar = Sidecar::new();
            sidecar.source = Some(input.display().to_string());
            sidecar.resolution = Some(res);
            sidecar.threshold = Some(threshold);
            write_sdf(&grid, &output, &sidecar)?;
            println!("{}", output.display());
            Ok(())
        }
        Command::Split {
            input,
            low,
            high,
            cutoff,
        } => {
            let (grid, _) = read_sdf(&input)?;
            let (low_grid, high_grid) = split_bands(&grid, FilterSpec::new(cutoff))?;
            let mut sidecar = Sidecar::new();
            sidecar.source = Some(input.display().to_string());
            sidecar.cutoff = Some(cutoff);
            sidecar.band = Some("low".into());
            write_sdf(&low_grid, &low, &sidecar)?;
            sidecar.band = Some("high".into());
            write_sdf(&high_grid, &high, &sidecar)?;
            println!("{}\n{}", low.display(), high.display());
            Ok(())
        }
        Command::Extract {
            input,
            output,
            iso,
            smooth_iters,
            smooth_lambda,
        } => {
            let (grid, _) = read_sdf(&input)?;
            let mut mesh = marching_cubes(&grid, iso)?;
            if mesh.is_empty() {
                return Err(Error::InvalidMesh(format!(
                    "iso value {} produces no surface (field range [{}, {}])",
                    iso,
                    grid.min_value(),
                    grid.max_value()
                )));
            }
            if smooth_iters > 0 {
                mesh = laplace_smooth(&mesh, smooth_iters, smooth_lambda)?;
            }
            save_mesh(&mesh, &output, MeshFormat::Obj)?;
            println!("{}", output.display());
            Ok(())
        }
        Command::Synth {
            out_dir,
            family,
            count,
            seed,
            res,
            threshold,
        } => {
            let mut spec = SynthSpec::new(Family::parse(&family)?, count, seed, res);
            spec.threshold = threshold;
            let records = synth_dataset(&spec, &out_dir)?;
            println!("{} samples in {}", records.len(), out_dir.display());
            Ok(())
        }
        Command::TrainLfg {
            data_dir,
            output,
            steps,
            batch,
            seed,
            latent,
            base_res,
            base_channels,
            layers,
            tau,
            log,
        } => {
            let dataset = pipeline::load_sdf_dir(&data_dir)?;
            let config = LfgConfig {
                latent_dim: latent,
                base_resolution: base_res,
                base_channels,
                n_upconv_layers: layers,
            };
            let schedule = schedule_from_args(steps, batch, seed, tau);
            let (trainer, metrics) = train_lfg(&dataset, config, &schedule, log.as_deref())?;
            save_lfg_checkpoint(&trainer, &output)?;
            let last = metrics.last().expect("at least one step");
            println!(
                "{} ({} steps, final loss_d {:.4} loss_g {:.4})",
                output.display(),
                metrics.len(),
                last.loss_d,
                last.loss_g
            );
            Ok(())
        }
        Command::TrainHfg {
            data_dir,
            output,
            steps,
            batch,
            seed,
            cutoff,
            base_channels,
            depth,
            l1_weight,
            tau,
            log,
        } => {
            let dataset = pipeline::load_sdf_dir(&data_dir)?;
            let resolution = dataset[0].dims()[0];
            let mut config = HfgConfig::for_resolution(resolution, base_channels, depth);
            if let Some(c) = cutoff {
                config.cutoff = c;
            }
            config.l1_weight = l1_weight;
            let schedule = schedule_from_args(steps, batch, seed, tau);
            let pairs = make_hfg_pairs(&dataset, resolution, schedule.tau, config.cutoff)?;
            let (trainer, metrics) = train_hfg(&pairs, config, &schedule, log.as_deref())?;
            save_hfg_checkpoint(&trainer, &output)?;
            let last = metrics.last().expect("at least one step");
            println!(
                "{} ({} steps, final l1 {:.5})",
                output.display(),
                metrics.len(),
                last.l1.unwrap_or(f64::NAN)
            );
            Ok(())
        }
        Command::Generate {
            lfg,
            hfg,
            seed,
            symmetry,
            cutoff,
            sdf,
            mesh,
            smooth_iters,
            smooth_lambda,
        } => {
            let request = GenerationRequest {
                lfg_checkpoint: lfg,
                hfg_checkpoint: hfg,
                seed,
                symmetry: symmetry.as_deref().map(Axis::parse).transpose()?,
                cutoff,
                sdf_out: sdf,
                mesh_out: mesh,
                smoothing_iterations: smooth_iters,
                smoothing_lambda: smooth_lambda,
            };
            let out = sdfgen_cli::generate(&request)?;
            println!(
                "field range [{:.4}, {:.4}], {} triangles",
                out.grid.min_value(),
                out.grid.max_value(),
                out.mesh.triangle_count()
            );
            Ok(())
        }
        Command::Interpolate {
            out_dir,
            lfg,
            hfg,
            seed_a,
            seed_b,
            steps,
            symmetry,
        } => {
            let axis = symmetry.as_deref().map(Axis::parse).transpose()?;
            let frames =
                sdfgen_cli::interpolate(&lfg, &hfg, seed_a, seed_b, steps, axis, &out_dir)?;
            for f in &frames {
                match &f.mesh {
                    Some(m) => println!("{}", m.display()),
                    None => println!("{} (no surface)", f.sdf.display()),
                }
            }
            Ok(())
        }
        Command::Verify {
            input,
            max_median_eikonal,
        } => {
            let report = sdfgen_cli::verify(&input)?;
            let json = serde_json::to_string_pretty(&report)
                .map_err(|e| Error::InvalidConfig(format!("report: {}", e)))?;
            println!("{}", json);
            if let Some(limit) = max_median_eikonal {
                match report.eikonal_median {
                    Some(median) if median <= limit => {}
                    Some(median) => {
                        return Err(Error::InvalidGrid(format!(
                            "median Eikonal residual {:.4} exceeds limit {:.4}",
                            median, limit
                        )));
                    }
                    None => {
                        return Err(Error::InvalidGrid(
                            "no interior points survived the exclusion band".into(),
                        ));
                    }
                }
            }
            Ok(())
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Io { .. } => "io",
        Error::Parse { .. } => "parse",
        Error::InvalidMesh(_) => "invalid_mesh",
        Error::InvalidGrid(_) => "invalid_grid",
        Error::InvalidConfig(_) => "invalid_config",
        Error::NonFinite(_) => "non_finite",
        Error::ShapeMismatch(_) => "shape_mismatch",
        Error::GraphReuse => "graph_reuse",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let payload = serde_json::json!({
                "error": e.to_string(),
                "kind": error_kind(&e),
            });
            eprintln!("{}", payload);
            ExitCode::FAILURE
        }
    }
}
