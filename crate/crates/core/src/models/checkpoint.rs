//! Binary parameter container.
//!
//! Layout: magic `SPCK`, `u32` version, `u64` header length, UTF-8 JSON
//! header, `u32` blob count, then per blob a `u32` name length, the name,
//! `u64` rows, `u64` cols and `rows·cols` row-major `f64` values. All
//! integers and floats are little-endian.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ModelConfig, ModelError};
use crate::autodiff::Parameters;

const MAGIC: &[u8; 4] = b"SPCK";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub model: ModelConfig,
    pub in_dim: usize,
    pub out_dim: usize,
    pub seed: u64,
    pub task: String,
}

pub fn save_checkpoint<W: Write>(
    mut w: W,
    header: &CheckpointHeader,
    params: &Parameters,
) -> Result<(), ModelError> {
    let json = serde_json::to_vec(header).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    w.write_all(MAGIC)?;
    w.write_u32::<LittleEndian>(CHECKPOINT_VERSION)?;
    w.write_u64::<LittleEndian>(json.len() as u64)?;
    w.write_all(&json)?;
    w.write_u32::<LittleEndian>(params.len() as u32)?;
    for (name, value) in params.iter() {
        w.write_u32::<LittleEndian>(name.len() as u32)?;
        w.write_all(name.as_bytes())?;
        w.write_u64::<LittleEndian>(value.nrows() as u64)?;
        w.write_u64::<LittleEndian>(value.ncols() as u64)?;
        for &v in value.iter() {
            w.write_f64::<LittleEndian>(v)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint<R: Read>(mut r: R) -> Result<(CheckpointHeader, Parameters), ModelError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(ModelError::Checkpoint("not a checkpoint file".into()));
    }
    let version = r.read_u32::<LittleEndian>()?;
    if version != CHECKPOINT_VERSION {
        return Err(ModelError::Checkpoint(format!(
            "unsupported version {version}"
        )));
    }
    let len = r.read_u64::<LittleEndian>()? as usize;
    let mut json = vec![0u8; len];
    r.read_exact(&mut json)?;
    let header: CheckpointHeader =
        serde_json::from_slice(&json).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
    let count = r.read_u32::<LittleEndian>()?;
    let mut params = Parameters::new();
    for _ in 0..count {
        let name_len = r.read_u32::<LittleEndian>()? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        let rows = r.read_u64::<LittleEndian>()? as usize;
        let cols = r.read_u64::<LittleEndian>()? as usize;
        let mut values = vec![0.0; rows * cols];
        r.read_f64_into::<LittleEndian>(&mut values)?;
        let value = Array2::from_shape_vec((rows, cols), values)
            .map_err(|e| ModelError::Checkpoint(e.to_string()))?;
        params.insert(name, value);
    }
    Ok((header, params))
}
