//! Generator/discriminator assembly and training.
//!
//! Two networks are trained separately: a latent-vector generator that
//! learns whole fields, and a conditional encoder-decoder that maps a
//! field's low-frequency band to its high-frequency band. Both train
//! against mirrored convolutional discriminators with the same schedule:
//! Adam, discriminator learning rate 2e-4, generator 5e-4, and the
//! discriminator update skipped whenever its classification accuracy on
//! the previous batch exceeded 80%.
//!
//! Networks operate on truncated-normalized fields t = clamp(f / tau, -1, 1)
//! so the tanh output head can cover the target range; raw distances stay
//! the on-disk format.

pub mod hfg;
pub mod lfg;
pub mod loss;
pub mod train;

pub use hfg::{HfgConfig, HfgDiscriminator, HfgGenerator};
pub use lfg::{LfgConfig, LfgDiscriminator, LfgGenerator};
pub use loss::{
    gan_discriminator_loss, gan_generator_loss, hfg_loss, l1_loss, lfg_gan_loss,
    validate_probabilities,
};
pub use train::{
    make_hfg_pairs, train_hfg, train_lfg, truncate_normalize, HfgTrainer, LfgTrainer,
    StepMetrics, TrainSchedule,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default truncation scale for t = clamp(f / tau, -1, 1).
pub const DEFAULT_TAU: f64 = 0.2;

/// Training schedule shared by both networks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainScheduleConfig {
    pub lr_discriminator: f64,
    pub lr_generator: f64,
    pub skip_accuracy_threshold: f64,
    pub batch_size: usize,
    pub total_steps: usize,
    pub seed: u64,
    pub tau: f64,
}

impl Default for TrainScheduleConfig {
    fn default() -> Self {
        TrainScheduleConfig {
            lr_discriminator: 2e-4,
            lr_generator: 5e-4,
            skip_accuracy_threshold: 0.8,
            batch_size: 8,
            total_steps: 500,
            seed: 0,
            tau: DEFAULT_TAU,
        }
    }
}

impl TrainScheduleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.skip_accuracy_threshold > 0.0 && self.skip_accuracy_threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "skip accuracy threshold {} outside (0, 1)",
                self.skip_accuracy_threshold
            )));
        }
        if self.lr_discriminator <= 0.0 || self.lr_generator <= 0.0 {
            return Err(Error::InvalidConfig("learning rates must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if self.tau <= 0.0 {
            return Err(Error::InvalidConfig("tau must be positive".into()));
        }
        Ok(())
    }
}
