//! Training loops for both generators.
//!
//! Each step trains the discriminator first (unless skipped by the
//! accuracy rule), then the generator. The skip rule compares the
//! *previous* step's classification accuracy against the threshold; on a
//! skipped step the discriminator is evaluated but nothing about it
//! changes, so its parameter checksum is bit-identical across the step.
//!
//! All randomness (weight init, latent draws, batch order) flows from the
//! schedule's seed; two runs with the same seed produce byte-identical
//! checkpoints and metric traces.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gan::hfg::{HfgConfig, HfgDiscriminator, HfgGenerator};
use crate::gan::lfg::{LfgConfig, LfgDiscriminator, LfgGenerator};
use crate::gan::loss::{gan_discriminator_loss, gan_generator_loss, l1_loss};

use crate::nn::checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader, TensorMeta};
use crate::nn::layers::{Binder, Mode, TensorEntry};
use crate::nn::{AdamParams, AdamState, Graph, Tensor};
use crate::sdf::SdfGrid;
use crate::spectral::{split_bands, FilterSpec};

pub use crate::gan::TrainScheduleConfig as TrainSchedule;

/// Per-step training metrics. `l1` is the unweighted supervised term,
/// present only for the conditional generator.
#[derive(Debug, Clone, Copy)]
pub struct StepMetrics {
    pub step: usize,
    pub loss_d: f64,
    pub loss_g: f64,
    pub d_accuracy: f64,
    pub d_skipped: bool,
    pub l1: Option<f64>,
    /// Checksum over every discriminator tensor after the step.
    pub d_checksum: u64,
}

/// Line format of the training log.
#[derive(Serialize, Deserialize)]
struct LogRecord {
    step: usize,
    loss_d: f64,
    loss_g: f64,
    d_accuracy: f64,
    d_skipped: bool,
}

/// Models that expose their tensors for optimization and checkpoints.
pub trait ModelTensors {
    fn entries(&self) -> Vec<TensorEntry<'_>>;
    fn tensors_mut(&mut self) -> Vec<&mut Tensor>;
}

macro_rules! impl_model_tensors {
    ($ty:ty) => {
        impl ModelTensors for $ty {
            fn entries(&self) -> Vec<TensorEntry<'_>> {
                <$ty>::entries(self)
            }
            fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
                <$ty>::tensors_mut(self)
            }
        }
    };
}

impl_model_tensors!(LfgGenerator);
impl_model_tensors!(LfgDiscriminator);
impl_model_tensors!(HfgGenerator);
impl_model_tensors!(HfgDiscriminator);

/// Checksum over every tensor of a model, buffers included.
pub fn model_checksum<M: ModelTensors>(model: &M) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for e in model.entries() {
        for chunk in [e.tensor.checksum()] {
            for b in chunk.to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x100000001b3);
            }
        }
    }
    h
}

/// Pull gradients out of `binder` in entry order and apply one Adam step.
fn optimize<M: ModelTensors>(
    model: &mut M,
    g: &Graph,
    binder: &Binder,
    opt: &mut AdamState,
) -> Result<()> {
    let meta: Vec<(String, bool)> = model
        .entries()
        .iter()
        .map(|e| (e.name.clone(), e.trainable))
        .collect();
    let grads: Vec<Tensor> = meta
        .iter()
        .filter(|(_, trainable)| *trainable)
        .map(|(name, _)| {
            binder
                .summed_grad(g, name)
                .ok_or_else(|| Error::InvalidConfig(format!("no gradient for {}", name)))
        })
        .collect::<Result<_>>()?;
    let tensors = model.tensors_mut();
    let mut params: Vec<&mut Tensor> = tensors
        .into_iter()
        .zip(meta.iter())
        .filter(|(_, (_, trainable))| *trainable)
        .map(|(t, _)| t)
        .collect();
    let grad_refs: Vec<&Tensor> = grads.iter().collect();
    opt.step(&mut params, &grad_refs)
}

/// Fraction of real samples scored above 0.5 plus fake samples scored
/// below 0.5, over twice the batch. Patch maps score by their mean.
fn classification_accuracy(d_real: &Tensor, d_fake: &Tensor) -> f64 {
    let n = d_real.shape()[0];
    let per = d_real.len() / n;
    let mut correct = 0usize;
    for s in 0..n {
        let mean: f64 =
            d_real.data()[s * per..(s + 1) * per].iter().sum::<f64>() / per as f64;
        if mean > 0.5 {
            correct += 1;
        }
    }
    let per_f = d_fake.len() / n;
    for s in 0..n {
        let mean: f64 =
            d_fake.data()[s * per_f..(s + 1) * per_f].iter().sum::<f64>() / per_f as f64;
        if mean < 0.5 {
            correct += 1;
        }
    }
    correct as f64 / (2 * n) as f64
}

fn check_finite_loss(name: &str, v: f64) -> Result<f64> {
    if !v.is_finite() {
        return Err(Error::NonFinite(format!("{} loss is {}", name, v)));
    }
    Ok(v)
}

/// clamp(f / tau, -1, 1) as a [1, d, h, w] tensor, z-major like the grid.
pub fn truncate_normalize(grid: &SdfGrid, tau: f64) -> Tensor {
    let [nx, ny, nz] = grid.dims();
    let data = grid
        .values()
        .iter()
        .map(|v| (v / tau).clamp(-1.0, 1.0))
        .collect();
    Tensor::from_vec(&[1, nz, ny, nx], data).expect("grid layout matches tensor layout")
}

/// Stack [1, d, h, w] samples into one [n, 1, d, h, w] batch.
fn stack_batch(items: &[&Tensor]) -> Result<Tensor> {
    let first = items
        .first()
        .ok_or_else(|| Error::InvalidConfig("empty batch".into()))?;
    let sp = first.shape().to_vec();
    let mut data = Vec::with_capacity(items.len() * first.len());
    for t in items {
        if t.shape() != sp {
            return Err(Error::ShapeMismatch(format!(
                "batch member {:?} vs {:?}",
                t.shape(),
                sp
            )));
        }
        data.extend_from_slice(t.data());
    }
    Tensor::from_vec(&[items.len(), 1, sp[1], sp[2], sp[3]], data)
}

/// Trainer state for the latent-vector generator.
pub struct LfgTrainer {
    pub generator: LfgGenerator,
    pub discriminator: LfgDiscriminator,
    pub schedule: TrainSchedule,
    opt_g: AdamState,
    opt_d: AdamState,
    rng: ChaCha12Rng,
    prev_accuracy: f64,
    step: usize,
}

impl LfgTrainer {
    pub fn new(config: LfgConfig, schedule: TrainSchedule) -> Result<LfgTrainer> {
        schedule.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(schedule.seed);
        let generator = LfgGenerator::new(config, &mut rng)?;
        let discriminator = LfgDiscriminator::new(config, &mut rng)?;
        Ok(LfgTrainer {
            generator,
            discriminator,
            opt_g: AdamState::new(AdamParams::with_lr(schedule.lr_generator)),
            opt_d: AdamState::new(AdamParams::with_lr(schedule.lr_discriminator)),
            rng,
            schedule,
            prev_accuracy: 0.0,
            step: 0,
        })
    }

    pub fn config(&self) -> LfgConfig {
        self.generator.config
    }

    /// One adversarial step on a [n, 1, r, r, r] batch of real fields.
    pub fn train_step(&mut self, real: &Tensor) -> Result<StepMetrics> {
        let n = real.shape()[0];
        if n == 0 {
            return Err(Error::InvalidConfig("empty batch".into()));
        }
        let latent = self.generator.config.latent_dim;
        let z = Tensor::rand_uniform(&[n, latent], -1.0, 1.0, &mut self.rng);
        let skip = self.prev_accuracy > self.schedule.skip_accuracy_threshold;

        // discriminator phase
        let (loss_d, accuracy) = {
            let mut g = Graph::new();
            let mut gen_binder = Binder::frozen();
            let mut d_binder = if skip {
                Binder::frozen()
            } else {
                Binder::trainable()
            };
            let d_mode = if skip { Mode::Frozen } else { Mode::Train };
            let zv = g.leaf(z.clone(), false);
            let fake = self
                .generator
                .forward(&mut g, &mut gen_binder, zv, Mode::Frozen)?;
            let xv = g.leaf(real.clone(), false);
            let d_real = self
                .discriminator
                .forward(&mut g, &mut d_binder, xv, d_mode)?;
            let d_fake = self
                .discriminator
                .forward(&mut g, &mut d_binder, fake, d_mode)?;
            let loss = gan_discriminator_loss(&mut g, d_real, d_fake)?;
            let loss_val = check_finite_loss("discriminator", g.value(loss).item())?;
            let accuracy = classification_accuracy(g.value(d_real), g.value(d_fake));
            if !skip {
                g.backward(loss)?;
                optimize(&mut self.discriminator, &g, &d_binder, &mut self.opt_d)?;
            }
            (loss_val, accuracy)
        };

        // generator phase
        let loss_g = {
            let mut g = Graph::new();
            let mut gen_binder = Binder::trainable();
            let mut d_binder = Binder::frozen();
            let zv = g.leaf(z, false);
            let fake = self
                .generator
                .forward(&mut g, &mut gen_binder, zv, Mode::Train)?;
            let d_fake = self
                .discriminator
                .forward(&mut g, &mut d_binder, fake, Mode::Frozen)?;
            let loss = gan_generator_loss(&mut g, d_fake)?;
            let loss_val = check_finite_loss("generator", g.value(loss).item())?;
            g.backward(loss)?;
            optimize(&mut self.generator, &g, &gen_binder, &mut self.opt_g)?;
            loss_val
        };

        self.prev_accuracy = accuracy;
        self.step += 1;
        Ok(StepMetrics {
            step: self.step,
            loss_d,
            loss_g,
            d_accuracy: accuracy,
            d_skipped: skip,
            l1: None,
            d_checksum: model_checksum(&self.discriminator),
        })
    }
}

/// Trainer state for the conditional low-to-high band generator.
pub struct HfgTrainer {
    pub generator: HfgGenerator,
    pub discriminator: HfgDiscriminator,
    pub schedule: TrainSchedule,
    opt_g: AdamState,
    opt_d: AdamState,
    prev_accuracy: f64,
    step: usize,
}

impl HfgTrainer {
    pub fn new(config: HfgConfig, schedule: TrainSchedule) -> Result<HfgTrainer> {
        schedule.validate()?;
        let mut rng = ChaCha12Rng::seed_from_u64(schedule.seed);
        let generator = HfgGenerator::new(config, &mut rng)?;
        let discriminator = HfgDiscriminator::new(config, &mut rng)?;
        Ok(HfgTrainer {
            generator,
            discriminator,
            opt_g: AdamState::new(AdamParams::with_lr(schedule.lr_generator)),
            opt_d: AdamState::new(AdamParams::with_lr(schedule.lr_discriminator)),
            schedule,
            prev_accuracy: 0.0,
            step: 0,
        })
    }

    pub fn config(&self) -> HfgConfig {
        self.generator.config
    }

    /// One adversarial step on aligned [n, 1, r, r, r] low/high batches.
    pub fn train_step(&mut self, low: &Tensor, high: &Tensor) -> Result<StepMetrics> {
        if low.shape() != high.shape() {
            return Err(Error::ShapeMismatch(format!(
                "low {:?} vs high {:?}",
                low.shape(),
                high.shape()
            )));
        }
        if low.shape()[0] == 0 {
            return Err(Error::InvalidConfig("empty batch".into()));
        }
        let skip = self.prev_accuracy > self.schedule.skip_accuracy_threshold;
        let l1_weight = self.generator.config.l1_weight;

        // discriminator phase: real pair (low, high) vs fake pair (low, G(low))
        let (loss_d, accuracy) = {
            let mut g = Graph::new();
            let mut gen_binder = Binder::frozen();
            let mut d_binder = if skip {
                Binder::frozen()
            } else {
                Binder::trainable()
            };
            let d_mode = if skip { Mode::Frozen } else { Mode::Train };
            let low_v = g.leaf(low.clone(), false);
            let high_v = g.leaf(high.clone(), false);
            let fake = self
                .generator
                .forward(&mut g, &mut gen_binder, low_v, Mode::Frozen)?;
            let d_real = self
                .discriminator
                .forward(&mut g, &mut d_binder, low_v, high_v, d_mode)?;
            let d_fake = self
                .discriminator
                .forward(&mut g, &mut d_binder, low_v, fake, d_mode)?;
            let loss = gan_discriminator_loss(&mut g, d_real, d_fake)?;
            let loss_val = check_finite_loss("discriminator", g.value(loss).item())?;
            let accuracy = classification_accuracy(g.value(d_real), g.value(d_fake));
            if !skip {
                g.backward(loss)?;
                optimize(&mut self.discriminator, &g, &d_binder, &mut self.opt_d)?;
            }
            (loss_val, accuracy)
        };

        // generator phase: adversarial term plus weighted L1 reconstruction
        let (loss_g, l1_val) = {
            let mut g = Graph::new();
            let mut gen_binder = Binder::trainable();
            let mut d_binder = Binder::frozen();
            let low_v = g.leaf(low.clone(), false);
            let high_v = g.leaf(high.clone(), false);
            let fake = self
                .generator
                .forward(&mut g, &mut gen_binder, low_v, Mode::Train)?;
            let d_fake = self
                .discriminator
                .forward(&mut g, &mut d_binder, low_v, fake, Mode::Frozen)?;
            let adv = gan_generator_loss(&mut g, d_fake)?;
            let l1 = l1_loss(&mut g, high_v, fake)?;
            let l1_val = g.value(l1).item();
            let weighted = g.scale(l1, l1_weight)?;
            let loss = g.add(adv, weighted)?;
            let loss_val = check_finite_loss("generator", g.value(loss).item())?;
            g.backward(loss)?;
            optimize(&mut self.generator, &g, &gen_binder, &mut self.opt_g)?;
            (loss_val, l1_val)
        };

        self.prev_accuracy = accuracy;
        self.step += 1;
        Ok(StepMetrics {
            step: self.step,
            loss_d,
            loss_g,
            d_accuracy: accuracy,
            d_skipped: skip,
            l1: Some(l1_val),
            d_checksum: model_checksum(&self.discriminator),
        })
    }
}

struct MetricsLog {
    writer: Option<BufWriter<File>>,
}

impl MetricsLog {
    fn open(path: Option<&Path>) -> Result<MetricsLog> {
        let writer = match path {
            Some(p) => Some(BufWriter::new(
                File::create(p).map_err(|e| Error::io(p, e))?,
            )),
            None => None,
        };
        Ok(MetricsLog { writer })
    }

    fn record(&mut self, m: &StepMetrics) -> Result<()> {
        if let Some(w) = &mut self.writer {
            let rec = LogRecord {
                step: m.step,
                loss_d: m.loss_d,
                loss_g: m.loss_g,
                d_accuracy: m.d_accuracy,
                d_skipped: m.d_skipped,
            };
            let line = serde_json::to_string(&rec)
                .map_err(|e| Error::InvalidConfig(format!("log record: {}", e)))?;
            writeln!(w, "{}", line).map_err(|e| Error::NonFinite(format!("log write: {}", e)))?;
        }
        Ok(())
    }

    fn finish(mut self) -> Result<()> {
        if let Some(w) = &mut self.writer {
            w.flush().map_err(|e| Error::NonFinite(format!("log flush: {}", e)))?;
        }
        Ok(())
    }
}

fn dataset_tensors(dataset: &[SdfGrid], resolution: usize, tau: f64) -> Result<Vec<Tensor>> {
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("empty dataset".into()));
    }
    dataset
        .iter()
        .map(|grid| {
            if grid.dims() != [resolution; 3] {
                return Err(Error::InvalidGrid(format!(
                    "dataset grid dims {:?} do not match resolution {}",
                    grid.dims(),
                    resolution
                )));
            }
            Ok(truncate_normalize(grid, tau))
        })
        .collect()
}

/// Deterministic with-replacement batch index stream.
fn batch_indices(rng: &mut ChaCha12Rng, len: usize, batch: usize) -> Vec<usize> {
    (0..batch).map(|_| rng.gen_range(0..len)).collect()
}

/// Train the latent-vector generator on raw distance grids. Fields are
/// truncation-normalized by the schedule's tau before training. Writes a
/// line-delimited log when a path is given.
pub fn train_lfg(
    dataset: &[SdfGrid],
    config: LfgConfig,
    schedule: &TrainSchedule,
    log_path: Option<&Path>,
) -> Result<(LfgTrainer, Vec<StepMetrics>)> {
    let samples = dataset_tensors(dataset, config.output_resolution(), schedule.tau)?;
    let mut trainer = LfgTrainer::new(config, schedule.clone())?;
    let mut batch_rng = ChaCha12Rng::seed_from_u64(schedule.seed ^ 0x9e3779b97f4a7c15);
    let mut log = MetricsLog::open(log_path)?;
    let mut metrics = Vec::with_capacity(schedule.total_steps);
    for _ in 0..schedule.total_steps {
        let idx = batch_indices(&mut batch_rng, samples.len(), schedule.batch_size);
        let members: Vec<&Tensor> = idx.iter().map(|i| &samples[*i]).collect();
        let batch = stack_batch(&members)?;
        let m = trainer.train_step(&batch)?;
        log.record(&m)?;
        metrics.push(m);
    }
    log.finish()?;
    Ok((trainer, metrics))
}

/// Split truncation-normalized fields into (low, high) band tensors at the
/// given cutoff; the training pairs for the conditional generator.
pub fn make_hfg_pairs(
    dataset: &[SdfGrid],
    resolution: usize,
    tau: f64,
    cutoff: usize,
) -> Result<Vec<(Tensor, Tensor)>> {
    if dataset.is_empty() {
        return Err(Error::InvalidConfig("empty dataset".into()));
    }
    let spec = FilterSpec::new(cutoff);
    dataset
        .iter()
        .map(|grid| {
            if grid.dims() != [resolution; 3] {
                return Err(Error::InvalidGrid(format!(
                    "dataset grid dims {:?} do not match resolution {}",
                    grid.dims(),
                    resolution
                )));
            }
            let t_values: Vec<f64> = grid
                .values()
                .iter()
                .map(|v| (v / tau).clamp(-1.0, 1.0))
                .collect();
            let t_grid = grid.with_values(t_values)?;
            let (low, high) = split_bands(&t_grid, spec)?;
            let [nx, ny, nz] = grid.dims();
            let low_t = Tensor::from_vec(&[1, nz, ny, nx], low.into_values())?;
            let high_t = Tensor::from_vec(&[1, nz, ny, nx], high.into_values())?;
            Ok((low_t, high_t))
        })
        .collect()
}

/// Train the conditional band translator on (low, high) pairs.
pub fn train_hfg(
    pairs: &[(Tensor, Tensor)],
    config: HfgConfig,
    schedule: &TrainSchedule,
    log_path: Option<&Path>,
) -> Result<(HfgTrainer, Vec<StepMetrics>)> {
    if pairs.is_empty() {
        return Err(Error::InvalidConfig("empty dataset".into()));
    }
    let mut trainer = HfgTrainer::new(config, schedule.clone())?;
    let mut batch_rng = ChaCha12Rng::seed_from_u64(schedule.seed ^ 0x9e3779b97f4a7c15);
    let mut log = MetricsLog::open(log_path)?;
    let mut metrics = Vec::with_capacity(schedule.total_steps);
    for _ in 0..schedule.total_steps {
        let idx = batch_indices(&mut batch_rng, pairs.len(), schedule.batch_size);
        let lows: Vec<&Tensor> = idx.iter().map(|i| &pairs[*i].0).collect();
        let highs: Vec<&Tensor> = idx.iter().map(|i| &pairs[*i].1).collect();
        let low = stack_batch(&lows)?;
        let high = stack_batch(&highs)?;
        let m = trainer.train_step(&low, &high)?;
        log.record(&m)?;
        metrics.push(m);
    }
    log.finish()?;
    Ok((trainer, metrics))
}

fn entries_meta(entries: &[TensorEntry<'_>]) -> Vec<TensorMeta> {
    entries
        .iter()
        .map(|e| TensorMeta {
            name: e.name.clone(),
            shape: e.tensor.shape().to_vec(),
            trainable: e.trainable,
        })
        .collect()
}

fn checkpoint_tensors<'a>(entries: &'a [TensorEntry<'a>]) -> Vec<&'a Tensor> {
    entries.iter().map(|e| e.tensor).collect()
}

/// Write generator + discriminator into one checkpoint.
pub fn save_lfg_checkpoint(trainer: &LfgTrainer, path: &Path) -> Result<()> {
    let gen_entries = trainer.generator.entries();
    let disc_entries = trainer.discriminator.entries();
    let mut tensors = entries_meta(&gen_entries);
    tensors.extend(entries_meta(&disc_entries));
    let header = CheckpointHeader {
        model: "lfg".into(),
        config: serde_json::to_value(trainer.generator.config)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        hyperparams: serde_json::to_value(&trainer.schedule)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        tensors,
    };
    let mut refs = checkpoint_tensors(&gen_entries);
    refs.extend(checkpoint_tensors(&disc_entries));
    write_checkpoint(path, &header, &refs)
}

pub fn save_hfg_checkpoint(trainer: &HfgTrainer, path: &Path) -> Result<()> {
    let gen_entries = trainer.generator.entries();
    let disc_entries = trainer.discriminator.entries();
    let mut tensors = entries_meta(&gen_entries);
    tensors.extend(entries_meta(&disc_entries));
    let header = CheckpointHeader {
        model: "hfg".into(),
        config: serde_json::to_value(trainer.generator.config)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        hyperparams: serde_json::to_value(&trainer.schedule)
            .map_err(|e| Error::InvalidConfig(e.to_string()))?,
        tensors,
    };
    let mut refs = checkpoint_tensors(&gen_entries);
    refs.extend(checkpoint_tensors(&disc_entries));
    write_checkpoint(path, &header, &refs)
}

fn fill_model<M: ModelTensors>(
    model: &mut M,
    metas: &[TensorMeta],
    tensors: &mut std::vec::IntoIter<Tensor>,
    consumed: &mut usize,
) -> Result<()> {
    let expected: Vec<(String, bool)> = model
        .entries()
        .iter()
        .map(|e| (e.name.clone(), e.trainable))
        .collect();
    let slots = model.tensors_mut();
    for (slot, (name, _)) in slots.into_iter().zip(&expected) {
        let meta = metas.get(*consumed).ok_or_else(|| {
            Error::InvalidConfig(format!("checkpoint missing tensor {}", name))
        })?;
        if &meta.name != name {
            return Err(Error::InvalidConfig(format!(
                "checkpoint tensor {} where {} expected",
                meta.name, name
            )));
        }
        let tensor = tensors
            .next()
            .ok_or_else(|| Error::InvalidConfig("checkpoint tensor block missing".into()))?;
        if tensor.shape() != slot.shape() {
            return Err(Error::ShapeMismatch(format!(
                "checkpoint tensor {}: {:?} vs model {:?}",
                name,
                tensor.shape(),
                slot.shape()
            )));
        }
        *slot = tensor;
        *consumed += 1;
    }
    Ok(())
}

/// Rebuild the generator/discriminator pair recorded in an LFG checkpoint.
pub fn load_lfg_checkpoint(
    path: &Path,
) -> Result<(LfgConfig, TrainSchedule, LfgGenerator, LfgDiscriminator)> {
    let (header, tensors) = read_checkpoint(path)?;
    if header.model != "lfg" {
        return Err(Error::InvalidConfig(format!(
            "expected an lfg checkpoint, found {}",
            header.model
        )));
    }
    let config: LfgConfig = serde_json::from_value(header.config.clone())
        .map_err(|e| Error::InvalidConfig(format!("lfg config: {}", e)))?;
    let schedule: TrainSchedule = serde_json::from_value(header.hyperparams.clone())
        .map_err(|e| Error::InvalidConfig(format!("lfg hyperparams: {}", e)))?;
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    let mut generator = LfgGenerator::new(config, &mut rng)?;
    let mut discriminator = LfgDiscriminator::new(config, &mut rng)?;
    let mut it = tensors.into_iter();
    let mut consumed = 0usize;
    fill_model(&mut generator, &header.tensors, &mut it, &mut consumed)?;
    fill_model(&mut discriminator, &header.tensors, &mut it, &mut consumed)?;
    Ok((config, schedule, generator, discriminator))
}

/// Rebuild the generator/discriminator pair recorded in an HFG checkpoint.
pub fn load_hfg_checkpoint(
    path: &Path,
) -> Result<(HfgConfig, TrainSchedule, HfgGenerator, HfgDiscriminator)> {
    let (header, tensors) = read_checkpoint(path)?;
    if header.model != "hfg" {
        return Err(Error::InvalidConfig(format!(
            "expected an hfg checkpoint, found {}",
            header.model
        )));
    }
    let config: HfgConfig = serde_json::from_value(header.config.clone())
        .map_err(|e| Error::InvalidConfig(format!("hfg config: {}", e)))?;
    let schedule: TrainSchedule = serde_json::from_value(header.hyperparams.clone())
        .map_err(|e| Error::InvalidConfig(format!("hfg hyperparams: {}", e)))?;
    let mut rng = ChaCha12Rng::seed_from_u64(0);
    let mut generator = HfgGenerator::new(config, &mut rng)?;
    let mut discriminator = HfgDiscriminator::new(config, &mut rng)?;
    let mut it = tensors.into_iter();
    let mut consumed = 0usize;
    fill_model(&mut generator, &header.tensors, &mut it, &mut consumed)?;
    fill_model(&mut discriminator, &header.tensors, &mut it, &mut consumed)?;
    Ok((config, schedule, generator, discriminator))
}
