//! Pipeline operations behind the `sdfgen` command line: synthetic dataset
//! construction, composed generation, latent interpolation, and field
//! verification. The binary in `main.rs` is a thin argument layer over
//! this crate and `sdfgen-core`.

pub mod pipeline;
pub mod synth;

pub use pipeline::{
    generate, interpolate, load_sdf_dir, symmetrize, verify, Axis, FrameRecord,
    GenerationOutput, GenerationRequest, GeneratorStack, VerifyReport,
};
pub use synth::{synth_dataset, Family, FamilyRanges, SampleRecord, SynthSpec};
