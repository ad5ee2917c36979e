//! Minimal dense-tensor kernel with reverse-mode differentiation.
//!
//! Covers exactly the layer set the generators need: linear, 3D convolution,
//! 3D transposed convolution, batch normalization, ReLU, leaky ReLU, tanh,
//! sigmoid, plus the Adam optimizer and a binary checkpoint format.
//! Everything is f64 and deterministic: identical seeds and inputs give
//! bit-identical results.

pub mod adam;
pub mod checkpoint;
pub mod conv;
pub mod graph;
pub mod layers;
pub mod tensor;

pub use adam::{AdamParams, AdamState};
pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointHeader, TensorMeta};
pub use graph::{BatchStats, Graph, Var};
pub use layers::{BatchNorm3d, Binder, Conv3d, ConvT3d, Linear, Mode};
pub use tensor::Tensor;
