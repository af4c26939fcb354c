//! Binary key-frame feature file.
//!
//! Layout (little-endian): `"ALNF"`, version `u32`, dtype `u8` (0 = f32),
//! `n: u64`, `d: u64`, `n·d` row-major `f32` values, then `n` timestamps as
//! `u64` milliseconds.

use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::types::FrameFeatureSequence;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"ALNF";
pub const VERSION: u32 = 1;
pub const DTYPE_F32: u8 = 0;
const HEADER_LEN: usize = 4 + 4 + 1 + 8 + 8;

pub fn encode_features(frames: &FrameFeatureSequence) -> Vec<u8> {
    let (n, d) = frames.features.dim();
    let mut out = Vec::with_capacity(HEADER_LEN + n * d * 4 + n * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(DTYPE_F32);
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(d as u64).to_le_bytes());
    for v in frames.features.iter() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for t in &frames.timestamps {
        let ms = (t * 1000.0).round() as u64;
        out.extend_from_slice(&ms.to_le_bytes());
    }
    out
}

/// Decodes a feature file. Structural problems are [`Error::Format`];
/// content invariants (ordering, finiteness) are checked by the caller.
pub fn decode_features(bytes: &[u8], fps: f64, path: &Path) -> Result<FrameFeatureSequence> {
    let fail = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(fail("missing ALNF header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(fail(format!("unsupported version {version}")));
    }
    if bytes[8] != DTYPE_F32 {
        return Err(fail(format!("unsupported dtype code {}", bytes[8])));
    }
    let n = u64::from_le_bytes(bytes[9..17].try_into().unwrap()) as usize;
    let d = u64::from_le_bytes(bytes[17..25].try_into().unwrap()) as usize;
    let expected = n
        .checked_mul(d)
        .and_then(|nd| nd.checked_mul(4))
        .and_then(|b| b.checked_add(n * 8 + HEADER_LEN))
        .ok_or_else(|| fail(format!("implausible dimensions n={n}, d={d}")))?;
    if bytes.len() != expected {
        return Err(fail(format!(
            "expected {expected} bytes for n={n}, d={d}, found {}",
            bytes.len()
        )));
    }
    let body = &bytes[HEADER_LEN..];
    let values: Vec<f32> = body[..n * d * 4]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let timestamps: Vec<f64> = body[n * d * 4..]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()) as f64 / 1000.0)
        .collect();
    let features = Array2::from_shape_vec((n, d), values).expect("length checked above");
    Ok(FrameFeatureSequence {
        timestamps,
        features,
        fps,
    })
}

pub fn write_feature_file(path: impl AsRef<Path>, frames: &FrameFeatureSequence) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_features(frames)).map_err(|e| Error::io(path, e))
}

pub fn read_feature_file(path: impl AsRef<Path>, fps: f64) -> Result<FrameFeatureSequence> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_features(&bytes, fps, path)
}
