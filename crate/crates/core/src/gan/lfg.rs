//! Low-frequency generator: latent vector to gridded field, with its
//! mirrored discriminator.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::conv::convt3d_out_size;
use crate::nn::layers::{BatchNorm3d, Binder, Conv3d, ConvT3d, Linear, Mode, TensorEntry};
use crate::nn::{Graph, Tensor, Var};

/// Slope of the discriminator's leaky ReLU.
pub const LEAKY_SLOPE: f64 = 0.2;

/// Architecture of the latent-vector generator.
///
/// The generator projects the latent vector to `base_channels` at
/// `base_resolution`^3 with a linear layer, then applies
/// `n_upconv_layers` transposed convolutions (kernel 5, stride 2), each
/// doubling the resolution and halving the channel count, batch norm and
/// ReLU between them and a tanh head on the last. Output resolution is
/// `base_resolution * 2^n_upconv_layers`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LfgConfig {
    pub latent_dim: usize,
    pub base_resolution: usize,
    pub base_channels: usize,
    pub n_upconv_layers: usize,
}

impl LfgConfig {
    /// Full-scale configuration: 200-dim latent, 512x4^3 projection, four
    /// doublings to 64^3.
    pub fn full_scale() -> LfgConfig {
        LfgConfig {
            latent_dim: 200,
            base_resolution: 4,
            base_channels: 512,
            n_upconv_layers: 4,
        }
    }

    /// Desk-scale configuration: 64-dim latent, 64x2^3 projection, three
    /// doublings to 16^3.
    pub fn desk() -> LfgConfig {
        LfgConfig {
            latent_dim: 64,
            base_resolution: 2,
            base_channels: 64,
            n_upconv_layers: 3,
        }
    }

    pub fn output_resolution(&self) -> usize {
        self.base_resolution << self.n_upconv_layers
    }

    /// Channel count entering upconv stage `i`; the last stage emits 1.
    fn stage_channels(&self, i: usize) -> usize {
        (self.base_channels >> i).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 {
            return Err(Error::InvalidConfig("latent_dim must be >= 1".into()));
        }
        if self.base_resolution == 0 || self.n_upconv_layers == 0 {
            return Err(Error::InvalidConfig(
                "base resolution and upconv layer count must be >= 1".into(),
            ));
        }
        if self.stage_channels(self.n_upconv_layers - 1) < 2 {
            return Err(Error::InvalidConfig(format!(
                "base_channels {} too small for {} halvings",
                self.base_channels, self.n_upconv_layers
            )));
        }
        Ok(())
    }

    /// Pure shape inference of the generator ladder for one sample:
    /// [(stage name, shape)] from the latent vector to the output volume.
    /// Uses the same output-size arithmetic as the real ops.
    pub fn generator_shape_ladder(&self) -> Result<Vec<(String, Vec<usize>)>> {
        self.validate()?;
        let mut ladder = vec![("z".to_string(), vec![self.latent_dim])];
        let r = self.base_resolution;
        ladder.push((
            "project".to_string(),
            vec![self.base_channels, r, r, r],
        ));
        let mut res = r;
        for i in 0..self.n_upconv_layers {
            res = convt3d_out_size(res, 5, 2, 2, 1)?;
            let c_out = if i + 1 == self.n_upconv_layers {
                1
            } else {
                self.stage_channels(i + 1)
            };
            ladder.push((format!("up{}", i), vec![c_out, res, res, res]));
        }
        Ok(ladder)
    }
}

/// The generator network.
#[derive(Debug, Clone)]
pub struct LfgGenerator {
    pub config: LfgConfig,
    project: Linear,
    ups: Vec<(ConvT3d, Option<BatchNorm3d>)>,
}

impl LfgGenerator {
    pub fn new(config: LfgConfig, rng: &mut impl Rng) -> Result<LfgGenerator> {
        config.validate()?;
        let r = config.base_resolution;
        let project = Linear::new(config.latent_dim, config.base_channels * r * r * r, rng);
        let mut ups = Vec::with_capacity(config.n_upconv_layers);
        for i in 0..config.n_upconv_layers {
            let c_in = config.stage_channels(i);
            let last = i + 1 == config.n_upconv_layers;
            let c_out = if last { 1 } else { config.stage_channels(i + 1) };
            let convt = ConvT3d::doubling(c_in, c_out, rng);
            let bn = if last { None } else { Some(BatchNorm3d::new(c_out)) };
            ups.push((convt, bn));
        }
        Ok(LfgGenerator {
            config,
            project,
            ups,
        })
    }

    /// z [n, latent] -> field [n, 1, r, r, r] with values in (-1, 1).
    pub fn forward(
        &mut self,
        g: &mut Graph,
        binder: &mut Binder,
        z: Var,
        mode: Mode,
    ) -> Result<Var> {
        let zs = g.value(z).shape();
        if zs.len() != 2 || zs[1] != self.config.latent_dim {
            return Err(Error::ShapeMismatch(format!(
                "latent batch must be [n, {}], got {:?}",
                self.config.latent_dim, zs
            )));
        }
        let n = zs[0];
        let r = self.config.base_resolution;
        let mut h = self.project.forward(g, binder, "g.project", z)?;
        h = g.reshape(h, &[n, self.config.base_channels, r, r, r])?;
        let n_ups = self.ups.len();
        for (i, (convt, bn)) in self.ups.iter_mut().enumerate() {
            h = convt.forward(g, binder, &format!("g.up{}", i), h)?;
            if let Some(bn) = bn {
                h = bn.forward(g, binder, &format!("g.up{}.bn", i), h, mode)?;
                h = g.relu(h)?;
            } else {
                debug_assert_eq!(i + 1, n_ups);
                h = g.tanh(h)?;
            }
        }
        Ok(h)
    }

    pub fn entries(&self) -> Vec<TensorEntry<'_>> {
        let mut out = self.project.entries("g.project");
        for (i, (convt, bn)) in self.ups.iter().enumerate() {
            out.extend(convt.entries(&format!("g.up{}", i)));
            if let Some(bn) = bn {
                out.extend(bn.entries(&format!("g.up{}.bn", i)));
            }
        }
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = self.project.tensors_mut();
        for (convt, bn) in &mut self.ups {
            out.extend(convt.tensors_mut());
            if let Some(bn) = bn {
                out.extend(bn.tensors_mut());
            }
        }
        out
    }
}

/// Discriminator mirroring the generator ladder: stride-2 convolutions
/// with leaky ReLU down to the base resolution, then a linear layer and
/// sigmoid.
#[derive(Debug, Clone)]
pub struct LfgDiscriminator {
    pub config: LfgConfig,
    convs: Vec<(Conv3d, Option<BatchNorm3d>)>,
    head: Linear,
}

impl LfgDiscriminator {
    pub fn new(config: LfgConfig, rng: &mut impl Rng) -> Result<LfgDiscriminator> {
        config.validate()?;
        let layers = config.n_upconv_layers;
        let mut convs = Vec::with_capacity(layers);
        for i in 0..layers {
            // reversed generator ladder: 1 -> ch(L-1) -> ... -> ch(0)
            let c_in = if i == 0 {
                1
            } else {
                config.stage_channels(layers - i)
            };
            let c_out = config.stage_channels(layers - 1 - i);
            let conv = Conv3d::new(c_in, c_out, 5, 2, 2, rng);
            let bn = if i == 0 { None } else { Some(BatchNorm3d::new(c_out)) };
            convs.push((conv, bn));
        }
        let r = config.base_resolution;
        let head = Linear::new(config.base_channels * r * r * r, 1, rng);
        Ok(LfgDiscriminator {
            config,
            convs,
            head,
        })
    }

    /// field [n, 1, r, r, r] -> probability [n, 1].
    pub fn forward(
        &mut self,
        g: &mut Graph,
        binder: &mut Binder,
        x: Var,
        mode: Mode,
    ) -> Result<Var> {
        let n = g.value(x).shape()[0];
        let mut h = x;
        for (i, (conv, bn)) in self.convs.iter_mut().enumerate() {
            h = conv.forward(g, binder, &format!("d.conv{}", i), h)?;
            if let Some(bn) = bn {
                h = bn.forward(g, binder, &format!("d.conv{}.bn", i), h, mode)?;
            }
            h = g.leaky_relu(h, LEAKY_SLOPE)?;
        }
        let r = self.config.base_resolution;
        h = g.reshape(h, &[n, self.config.base_channels * r * r * r])?;
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
