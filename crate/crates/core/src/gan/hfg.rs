//! High-frequency generator: conditional encoder-decoder with skip
//! connections translating a field's low band to its high band, plus a
//! patch-level discriminator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gan::lfg::LEAKY_SLOPE;
use crate::nn::layers::{BatchNorm3d, Binder, Conv3d, ConvT3d, Mode, TensorEntry};
use crate::nn::{Graph, Tensor, Var};

/// Architecture of the low-to-high band translator.
///
/// `depth` stride-2 encoder convolutions halve the resolution down to a
/// bottleneck; the decoder mirrors them with transposed convolutions,
/// concatenating the encoder activation of matching resolution before each
/// upsampling after the first. Encoder activations are leaky ReLU after
/// each convolution, decoder activations ReLU before each up-convolution,
/// tanh on the output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HfgConfig {
    pub resolution: usize,
    pub base_channels: usize,
    pub depth: usize,
    /// Band-split cutoff this network is trained against.
    pub cutoff: usize,
    /// Weight of the supervised L1 term in the generator loss.
    pub l1_weight: f64,
    /// Stride-2 convolution count in the patch discriminator; sets its
    /// receptive field (about a quarter of the volume side by default).
    pub patch_layers: usize,
}

impl HfgConfig {
    /// Desk-scale configuration for 16^3 fields split at cutoff 2.
    pub fn desk() -> HfgConfig {
        HfgConfig::for_resolution(16, 8, 3)
    }

    /// Derive the cutoff (n/8) and patch-discriminator depth from the
    /// resolution.
    pub fn for_resolution(resolution: usize, base_channels: usize, depth: usize) -> HfgConfig {
        // patch receptive field of L stride-2 k5 convs is 1 + 4*(2^L - 1);
        // choose L so it lands nearest resolution/4
        let target = (resolution / 4).max(2) as f64;
        let ideal = ((target - 1.0) / 4.0 + 1.0).log2().round().max(1.0);
        HfgConfig {
            resolution,
            base_channels,
            depth,
            cutoff: (resolution / 8).max(1),
            l1_weight: 100.0,
            patch_layers: ideal as usize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 || self.base_channels == 0 {
            return Err(Error::InvalidConfig(
                "depth and base channels must be >= 1".into(),
            ));
        }
        if self.resolution >> self.depth == 0 {
            return Err(Error::InvalidConfig(format!(
                "depth {} collapses resolution {}",
                self.depth, self.resolution
            )));
        }
        if self.patch_layers == 0 || self.resolution >> self.patch_layers == 0 {
            return Err(Error::InvalidConfig(format!(
                "patch discriminator depth {} invalid for resolution {}",
                self.patch_layers, self.resolution
            )));
        }
        if self.l1_weight < 0.0 {
            return Err(Error::InvalidConfig("l1 weight must be >= 0".into()));
        }
        Ok(())
    }

    /// Encoder output channels at stage i (0-based).
    fn enc_channels(&self, i: usize) -> usize {
        self.base_channels << i
    }
}

/// The encoder-decoder generator.
#[derive(Debug, Clone)]
pub struct HfgGenerator {
    pub config: HfgConfig,
    enc: Vec<(Conv3d, Option<BatchNorm3d>)>,
    dec: Vec<(ConvT3d, Option<BatchNorm3d>)>,
}

impl HfgGenerator {
    pub fn new(config: HfgConfig, rng: &mut impl Rng) -> Result<HfgGenerator> {
        config.validate()?;
        let d = config.depth;
        let mut enc = Vec::with_capacity(d);
        for i in 0..d {
            let c_in = if i == 0 { 1 } else { config.enc_channels(i - 1) };
            let c_out = config.enc_channels(i);
            let conv = Conv3d::new(c_in, c_out, 5, 2, 2, rng);
            let bn = if i == 0 { None } else { Some(BatchNorm3d::new(c_out)) };
            enc.push((conv, bn));
        }
        let mut dec = Vec::with_capacity(d);
        for i in 0..d {
            let last = i + 1 == d;
            // first decoder stage sees the bottleneck; later stages see the
            // previous decoder output concatenated with the skip activation
            let c_in = if i == 0 {
                config.enc_channels(d - 1)
            } else {
                2 * config.enc_channels(d - 1 - i)
            };
            let c_out = if last { 1 } else { config.enc_channels(d - 2 - i) };
            let convt = ConvT3d::doubling(c_in, c_out, rng);
            let bn = if last { None } else { Some(BatchNorm3d::new(c_out)) };
            dec.push((convt, bn));
        }
        Ok(HfgGenerator { config, enc, dec })
    }

    /// low band [n, 1, r, r, r] -> predicted high band, same shape.
    pub fn forward(
        &mut self,
        g: &mut Graph,
        binder: &mut Binder,
        x: Var,
        mode: Mode,
    ) -> Result<Var> {
        let s = g.value(x).shape();
        let r = self.config.resolution;
        if s.len() != 5 || s[1] != 1 || s[2] != r || s[3] != r || s[4] != r {
            return Err(Error::ShapeMismatch(format!(
                "input must be [n, 1, {r}, {r}, {r}], got {:?}",
                s
            )));
        }
        let mut skips: Vec<Var> = Vec::with_capacity(self.enc.len());
        let mut h = x;
        for (i, (conv, bn)) in self.enc.iter_mut().enumerate() {
            h = conv.forward(g, binder, &format!("g.enc{}", i), h)?;
            if let Some(bn) = bn {
                h = bn.forward(g, binder, &format!("g.enc{}.bn", i), h, mode)?;
            }
            h = g.leaky_relu(h, LEAKY_SLOPE)?;
            skips.push(h);
        }
        let depth = self.dec.len();
        for (i, (convt, bn)) in self.dec.iter_mut().enumerate() {
            if i > 0 {
                h = g.concat_channels(h, skips[depth - 1 - i])?;
            }
            h = g.relu(h)?;
            h = convt.forward(g, binder, &format!("g.dec{}", i), h)?;
            if let Some(bn) = bn {
                h = bn.forward(g, binder, &format!("g.dec{}.bn", i), h, mode)?;
            }
        }
        g.tanh(h)
    }

    pub fn entries(&self) -> Vec<TensorEntry<'_>> {
        let mut out = Vec::new();
        for (i, (conv, bn)) in self.enc.iter().enumerate() {
            out.extend(conv.entries(&format!("g.enc{}", i)));
            if let Some(bn) = bn {
                out.extend(bn.entries(&format!("g.enc{}.bn", i)));
            }
        }
        for (i, (convt, bn)) in self.dec.iter().enumerate() {
            out.extend(convt.entries(&format!("g.dec{}", i)));
            if let Some(bn) = bn {
                out.extend(bn.entries(&format!("g.dec{}.bn", i)));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for (conv, bn) in &mut self.enc {
            out.extend(conv.tensors_mut());
            if let Some(bn) = bn {
                out.extend(bn.tensors_mut());
            }
        }
        for (convt, bn) in &mut self.dec {
            out.extend(convt.tensors_mut());
            if let Some(bn) = bn {
                out.extend(bn.tensors_mut());
            }
        }
        out
    }

    /// Zero every parameter; the network then maps anything to exactly 0.
    pub fn zero_parameters(&mut self) {
        for t in self.tensors_mut() {
            for v in t.data_mut() {
                *v = 0.0;
            }
        }
    }
}

/// Patch-level discriminator: a fully convolutional network over the
/// (low, high) pair whose sigmoid map scores local patches; losses average
/// over the map.
#[derive(Debug, Clone)]
pub struct HfgDiscriminator {
    pub config: HfgConfig,
    convs: Vec<(Conv3d, Option<BatchNorm3d>)>,
    head: Conv3d,
}

impl HfgDiscriminator {
    pub fn new(config: HfgConfig, rng: &mut impl Rng) -> Result<HfgDiscriminator> {
        config.validate()?;
        let mut convs = Vec::with_capacity(config.patch_layers);
        for i in 0..config.patch_layers {
            let c_in = if i == 0 { 2 } else { 2 * config.enc_channels(i - 1) };
            let c_out = 2 * config.enc_channels(i);
            let conv = Conv3d::new(c_in, c_out, 5, 2, 2, rng);
            let bn = if i == 0 { None } else { Some(BatchNorm3d::new(c_out)) };
            convs.push((conv, bn));
        }
        let c_last = 2 * config.enc_channels(config.patch_layers - 1);
        let head = Conv3d::new(c_last, 1, 1, 1, 0, rng);
        Ok(HfgDiscriminator {
            config,
            convs,
            head,
        })
    }

    /// (low, high) pair -> patch probability map [n, 1, m, m, m].
    pub fn forward(
        &mut self,
        g: &mut Graph,
        binder: &mut Binder,
        low: Var,
        high: Var,
        mode: Mode,
    ) -> Result<Var> {
        let mut h = g.concat_channels(low, high)?;
        for (i, (conv, bn)) in self.convs.iter_mut().enumerate() {
            h = conv.forward(g, binder, &format!("d.conv{}", i), h)?;
            if let Some(bn) = bn {
                h = bn.forward(g, binder, &format!("d.conv{}.bn", i), h, mode)?;
            }
            h = g.leaky_relu(h, LEAKY_SLOPE)?;
        }
        h = self.head.forward(g, binder, "d.head", h)?;
        g.sigmoid(h)
    }

    pub fn entries(&self) -> Vec<TensorEntry<'_>> {
        let mut out = Vec::new();
        for (i, (conv, bn)) in self.convs.iter().enumerate() {
            out.extend(conv.entries(&format!("d.conv{}", i)));
            if let Some(bn) = bn {
                out.extend(bn.entries(&format!("d.conv{}.bn", i)));
            }
        }
        out.extend(self.head.entries("d.head"));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::new();
        for (conv, bn) in &mut self.convs {
            out.extend(conv.tensors_mut());
            if let Some(bn) = bn {
                out.extend(bn.tensors_mut());
            }
        }
        out.extend(self.head.tensors_mut());
        out
    }
}
