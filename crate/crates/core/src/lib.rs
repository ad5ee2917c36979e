//! Core library for SDF-based shape generation.
//!
//! The pipeline this crate implements: triangle meshes are normalized into
//! the canonical domain and converted to gridded signed distance fields
//! (AABB-tree distance queries signed by generalized winding numbers);
//! fields are split into low/high frequency bands with an ideal Fourier
//! low-pass; a latent-vector generator learns the low band and a
//! conditional encoder-decoder learns the low-to-high mapping; generated
//! fields are turned back into polygon meshes with marching cubes.
//!
//! Modules:
//! - [`mesh`]: OBJ/STL loading, validation, normalization, saving
//! - [`sdf`]: AABB tree, winding numbers, mesh-to-grid conversion, SDF1 files
//! - [`spectral`]: 3D FFT, ideal low-pass, band splitting
//! - [`surface`]: marching cubes and Laplacian smoothing
//! - [`nn`]: dense tensors, reverse-mode differentiation, Adam, checkpoints
//! - [`gan`]: generator/discriminator assembly, losses, training loops

pub mod error;
pub mod gan;
pub mod geom;
pub mod mesh;
pub mod nn;
pub mod primitives;
pub mod sdf;
pub mod spectral;
pub mod surface;

pub use error::{Error, Result};
pub use geom::{Aabb, Vec3};
pub use mesh::{load_mesh, normalize_mesh, save_mesh, MeshFormat, TriMesh};
pub use sdf::{eikonal_residual, mesh_to_sdf, read_sdf, write_sdf, SdfGrid};
pub use spectral::{fft3, ifft3, low_pass, split_bands, FilterSpec};
pub use surface::{laplace_smooth, marching_cubes, IsoSurfaceConfig};
