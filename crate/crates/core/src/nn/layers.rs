//! Layer building blocks that own their parameters.
//!
//! A layer stages its tensors into a [`Graph`] as leaves each forward pass
//! through a [`Binder`], which records (name, var) pairs in staging order.
//! After `backward`, the trainer pulls gradients out of the binder by name,
//! so parameter identity never depends on graph node numbering.

use rand::Rng;

use crate::error::{Error, Result};
use crate::nn::graph::{Graph, Var};
use crate::nn::tensor::Tensor;

/// Weight initialization scale for conv/upconv/linear kernels.
pub const INIT_STD: f64 = 0.02;

/// Batch-norm running-stat momentum: running = m*running + (1-m)*batch.
pub const BN_MOMENTUM: f64 = 0.9;

/// Batch-norm variance guard.
pub const BN_EPS: f64 = 1e-5;

/// Forward mode.
///
/// `Train` normalizes with batch statistics and updates running stats.
/// `Frozen` also normalizes with batch statistics but leaves running stats
/// untouched; it is the mode for a network participating in another
/// network's training step (a frozen discriminator inside the generator
/// step, or a skipped discriminator update). `Eval` uses running stats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Frozen,
    Eval,
}

/// Records which graph leaf each named parameter was staged to.
#[derive(Default)]
pub struct Binder {
    trainable: bool,
    bindings: Vec<(String, Var)>,
}

impl Binder {
    /// Binder for a network being optimized this pass.
    pub fn trainable() -> Binder {
        Binder {
            trainable: true,
            bindings: Vec::new(),
        }
    }

    /// Binder for a network held fixed this pass (no gradients).
    pub fn frozen() -> Binder {
        Binder {
            trainable: false,
            bindings: Vec::new(),
        }
    }

    pub fn stage(&mut self, g: &mut Graph, name: String, t: &Tensor) -> Var {
        let var = g.leaf(t.clone(), self.trainable);
        self.bindings.push((name, var));
        var
    }

    /// Gradient of a staged parameter, by name.
    pub fn grad<'g>(&self, g: &'g Graph, name: &str) -> Option<&'g Tensor> {
        self.bindings
            .iter()
            .find(|(n, _)| n == name)
            .and_then(|(_, v)| g.grad(*v))
    }

    /// Total gradient of a parameter staged under `name`, summed over every
    /// staging (a discriminator is staged once per forward pass, e.g. once
    /// for the real batch and once for the fake batch).
    pub fn summed_grad(&self, g: &Graph, name: &str) -> Option<Tensor> {
        let mut total: Option<Tensor> = None;
        for (n, v) in &self.bindings {
            if n != name {
                continue;
            }
            if let Some(grad) = g.grad(*v) {
                match &mut total {
                    Some(t) => {
                        for (a, b) in t.data_mut().iter_mut().zip(grad.data()) {
                            *a += b;
                        }
                    }
                    None => total = Some(grad.clone()),
                }
            }
        }
        total
    }

    pub fn bindings(&self) -> &[(String, Var)] {
        &self.bindings
    }
}

/// Named view of a layer's tensors for checkpoints and optimizers.
pub struct TensorEntry<'a> {
    pub name: String,
    pub tensor: &'a Tensor,
    /// Buffers (running statistics) are saved but not optimized.
    pub trainable: bool,
}

/// Fully connected layer: x [n, in] -> [n, out].
#[derive(Debug, Clone)]
pub struct Linear {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl Linear {
    pub fn new(in_features: usize, out_features: usize, rng: &mut impl Rng) -> Linear {
        Linear {
            weight: Tensor::randn(&[out_features, in_features], INIT_STD, rng),
            bias: Tensor::zeros(&[out_features]),
        }
    }

    pub fn forward(&self, g: &mut Graph, binder: &mut Binder, prefix: &str, x: Var) -> Result<Var> {
        let w = binder.stage(g, format!("{}.w", prefix), &self.weight);
        let b = binder.stage(g, format!("{}.b", prefix), &self.bias);
        g.linear(x, w, b)
    }

    pub fn entries(&self, prefix: &str) -> Vec<TensorEntry<'_>> {
        vec![
            TensorEntry {
                name: format!("{}.w", prefix),
                tensor: &self.weight,
                trainable: true,
            },
            TensorEntry {
                name: format!("{}.b", prefix),
                tensor: &self.bias,
                trainable: true,
            },
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Strided 3D convolution, weight [c_out, c_in, k, k, k].
#[derive(Debug, Clone)]
pub struct Conv3d {
    pub weight: Tensor,
    pub bias: Tensor,
    pub stride: usize,
    pub padding: usize,
}

impl Conv3d {
    pub fn new(
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut impl Rng,
    ) -> Conv3d {
        Conv3d {
            weight: Tensor::randn(&[c_out, c_in, kernel, kernel, kernel], INIT_STD, rng),
            bias: Tensor::zeros(&[c_out]),
            stride,
            padding,
        }
    }

    pub fn forward(&self, g: &mut Graph, binder: &mut Binder, prefix: &str, x: Var) -> Result<Var> {
        let w = binder.stage(g, format!("{}.w", prefix), &self.weight);
        let b = binder.stage(g, format!("{}.b", prefix), &self.bias);
        g.conv3d(x, w, b, self.stride, self.padding)
    }

    pub fn entries(&self, prefix: &str) -> Vec<TensorEntry<'_>> {
        vec![
            TensorEntry {
                name: format!("{}.w", prefix),
                tensor: &self.weight,
                trainable: true,
            },
            TensorEntry {
                name: format!("{}.b", prefix),
                tensor: &self.bias,
                trainable: true,
            },
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Transposed 3D convolution, weight [c_in, c_out, k, k, k]. With kernel 5,
/// stride 2, padding 2, output padding 1 each application exactly doubles
/// the spatial dims.
#[derive(Debug, Clone)]
pub struct ConvT3d {
    pub weight: Tensor,
    pub bias: Tensor,
    pub stride: usize,
    pub padding: usize,
    pub output_padding: usize,
}

impl ConvT3d {
    /// The resolution-doubling configuration (k 5, stride 2, pad 2, output
    /// pad 1).
    pub fn doubling(c_in: usize, c_out: usize, rng: &mut impl Rng) -> ConvT3d {
        ConvT3d::new(c_in, c_out, 5, 2, 2, 1, rng)
    }

    pub fn new(
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        output_padding: usize,
        rng: &mut impl Rng,
    ) -> ConvT3d {
        ConvT3d {
            weight: Tensor::randn(&[c_in, c_out, kernel, kernel, kernel], INIT_STD, rng),
            bias: Tensor::zeros(&[c_out]),
            stride,
            padding,
            output_padding,
        }
    }

    pub fn forward(&self, g: &mut Graph, binder: &mut Binder, prefix: &str, x: Var) -> Result<Var> {
        let w = binder.stage(g, format!("{}.w", prefix), &self.weight);
        let b = binder.stage(g, format!("{}.b", prefix), &self.bias);
        g.convt3d(x, w, b, self.stride, self.padding, self.output_padding)
    }

    pub fn entries(&self, prefix: &str) -> Vec<TensorEntry<'_>> {
        vec![
            TensorEntry {
                name: format!("{}.w", prefix),
                tensor: &self.weight,
                trainable: true,
            },
            TensorEntry {
                name: format!("{}.b", prefix),
                tensor: &self.bias,
                trainable: true,
            },
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// Per-channel batch normalization with learned scale/shift and running
/// statistics for eval mode.
#[derive(Debug, Clone)]
pub struct BatchNorm3d {
    pub gamma: Tensor,
    pub beta: Tensor,
    pub running_mean: Tensor,
    pub running_var: Tensor,
}

impl BatchNorm3d {
    pub fn new(channels: usize) -> BatchNorm3d {
        BatchNorm3d {
            gamma: Tensor::full(&[channels], 1.0),
            beta: Tensor::zeros(&[channels]),
            running_mean: Tensor::zeros(&[channels]),
            running_var: Tensor::full(&[channels], 1.0),
        }
    }

    pub fn forward(
        &mut self,
        g: &mut Graph,
        binder: &mut Binder,
        prefix: &str,
        x: Var,
        mode: Mode,
    ) -> Result<Var> {
        let gamma = binder.stage(g, format!("{}.g", prefix), &self.gamma);
        let beta = binder.stage(g, format!("{}.b", prefix), &self.beta);
        match mode {
            Mode::Train => {
                let (y, stats) = g.batchnorm_train(x, gamma, beta, BN_EPS)?;
                for (r, b) in self
                    .running_mean
                    .data_mut()
                    .iter_mut()
                    .zip(stats.mean.iter())
                {
                    *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b;
                }
                for (r, b) in self
                    .running_var
                    .data_mut()
                    .iter_mut()
                    .zip(stats.var.iter())
                {
                    *r = BN_MOMENTUM * *r + (1.0 - BN_MOMENTUM) * b;
                }
                if self.running_var.data().iter().any(|v| *v <= 0.0) {
                    return Err(Error::InvalidConfig(
                        "running variance collapsed to zero".into(),
                    ));
                }
                Ok(y)
            }
            Mode::Frozen => {
                let (y, _) = g.batchnorm_train(x, gamma, beta, BN_EPS)?;
                Ok(y)
            }
            Mode::Eval => g.batchnorm_eval(
                x,
                gamma,
                beta,
                BN_EPS,
                self.running_mean.data(),
                self.running_var.data(),
            ),
        }
    }

    pub fn entries(&self, prefix: &str) -> Vec<TensorEntry<'_>> {
        vec![
            TensorEntry {
                name: format!("{}.g", prefix),
                tensor: &self.gamma,
                trainable: true,
            },
            TensorEntry {
                name: format!("{}.b", prefix),
                tensor: &self.beta,
                trainable: true,
            },
            TensorEntry {
                name: format!("{}.rm", prefix),
                tensor: &self.running_mean,
                trainable: false,
            },
            TensorEntry {
                name: format!("{}.rv", prefix),
                tensor: &self.running_var,
                trainable: false,
            },
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor> {
        vec![
            &mut self.gamma,
            &mut self.beta,
            &mut self.running_mean,
            &mut self.running_var,
        ]
    }
}
