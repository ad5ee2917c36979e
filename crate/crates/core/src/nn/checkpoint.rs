//! Model checkpoint format.
//!
//! Layout: magic "CKPT", little-endian u32 version, u32 header length, a
//! JSON architecture header (model kind, config, hyperparameters, tensor
//! list), then raw little-endian f64 parameter blocks in the header's
//! declaration order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::tensor::Tensor;

pub const CKPT_MAGIC: [u8; 4] = *b"CKPT";
pub const CKPT_VERSION: u32 = 1;

/// Shape and role of one serialized tensor.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TensorMeta {
    pub name: String,
    pub shape: Vec<usize>,
    pub trainable: bool,
}

/// JSON architecture header.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointHeader {
    /// Model kind, e.g. "lfg" or "hfg".
    pub model: String,
    /// Architecture configuration (model-specific).
    pub config: serde_json::Value,
    /// Training hyperparameters for provenance.
    pub hyperparams: serde_json::Value,
    pub tensors: Vec<TensorMeta>,
}

/// Write a checkpoint; tensor order must match `header.tensors`.
pub fn write_checkpoint(
    path: &Path,
    header: &CheckpointHeader,
    tensors: &[&Tensor],
) -> Result<()> {
    if header.tensors.len() != tensors.len() {
        return Err(Error::InvalidConfig(format!(
            "header lists {} tensors, got {}",
            header.tensors.len(),
            tensors.len()
        )));
    }
    for (meta, t) in header.tensors.iter().zip(tensors) {
        if meta.shape != t.shape() {
            return Err(Error::ShapeMismatch(format!(
                "tensor {}: header {:?} vs data {:?}",
                meta.name,
                meta.shape,
                t.shape()
            )));
        }
    }
    let json = serde_json::to_vec(header)
        .map_err(|e| Error::InvalidConfig(format!("header serialization: {}", e)))?;

    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(&CKPT_MAGIC).map_err(io_err)?;
    w.write_all(&CKPT_VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&(json.len() as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&json).map_err(io_err)?;
    for t in tensors {
        for v in t.data() {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Read a checkpoint back; tensors come out in declaration order.
pub fn read_checkpoint(path: &Path) -> Result<(CheckpointHeader, Vec<Tensor>)> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)
        .map_err(|_| Error::parse(path, 0, "truncated checkpoint"))?;
    if magic != CKPT_MAGIC {
        return Err(Error::parse(path, 0, "bad magic; not a checkpoint"));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf)
        .map_err(|_| Error::parse(path, 4, "truncated checkpoint"))?;
    let version = u32::from_le_bytes(u32buf);
    if version != CKPT_VERSION {
        return Err(Error::parse(
            path,
            4,
            format!("unsupported checkpoint version {}", version),
        ));
    }
    r.read_exact(&mut u32buf)
        .map_err(|_| Error::parse(path, 8, "truncated checkpoint"))?;
    let header_len = u32::from_le_bytes(u32buf) as usize;
    let mut json = vec![0u8; header_len];
    r.read_exact(&mut json)
        .map_err(|_| Error::parse(path, 12, "truncated checkpoint header"))?;
    let header: CheckpointHeader = serde_json::from_slice(&json)
        .map_err(|e| Error::parse(path, 12, format!("header: {}", e)))?;

    let mut tensors = Vec::with_capacity(header.tensors.len());
    let mut f64buf = [0u8; 8];
    for meta in &header.tensors {
        let count: usize = meta.shape.iter().product();
        let mut data = Vec::with_capacity(count);
        for _ in 0..count {
            r.read_exact(&mut f64buf).map_err(|_| {
                Error::parse(
                    path,
                    12 + header_len,
                    format!("truncated block for tensor {}", meta.name),
                )
            })?;
            data.push(f64::from_le_bytes(f64buf));
        }
        tensors.push(Tensor::from_vec(&meta.shape, data)?);
    }
    Ok((header, tensors))
}
