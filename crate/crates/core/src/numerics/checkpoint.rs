//! Checkpoint file for trained projection heads.
//!
//! Layout (little-endian): `"MTAC"`, version `u32`, `d_in`/`d_h`/`d_out` as
//! `u32`, the eight parameter blocks as `f32` in [`BLOCK_NAMES`] order, then
//! the training seed as `u64`.
//!
//! [`BLOCK_NAMES`]: super::head::BLOCK_NAMES

use std::fs;
use std::path::Path;

use super::head::{MlpHead, ProjectionHeads};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"MTAC";
pub const VERSION: u32 = 1;

pub fn encode_checkpoint(heads: &ProjectionHeads<f32>) -> Vec<u8> {
    let (d_in, d_h, d_out) = heads.dims();
    let mut out = Vec::with_capacity(24 + 4 * heads.num_params());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for d in [d_in, d_h, d_out] {
        out.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for block in heads.blocks() {
        for v in block {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out.extend_from_slice(&heads.seed.to_le_bytes());
    out
}

pub fn decode_checkpoint(bytes: &[u8], path: &Path) -> Result<ProjectionHeads<f32>> {
    let fail = |message: String| Error::Format {
        path: path.to_path_buf(),
        message,
    };
    if bytes.len() < 20 || &bytes[..4] != MAGIC {
        return Err(fail("missing MTAC header".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(fail(format!("unsupported checkpoint version {version}")));
    }
    let (d_in, d_h, d_out) = (u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize);
    let mut heads = ProjectionHeads {
        text: MlpHead::zeros(d_in, d_h, d_out),
        visual: MlpHead::zeros(d_in, d_h, d_out),
        seed: 0,
    };
    let expected = 20 + 4 * heads.num_params() + 8;
    if bytes.len() != expected {
        return Err(fail(format!(
            "expected {expected} bytes for dims {d_in}/{d_h}/{d_out}, found {}",
            bytes.len()
        )));
    }
    let mut offset = 20;
    for block in heads.blocks_mut() {
        for v in block.iter_mut() {
            *v = f32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap());
            offset += 4;
        }
    }
    heads.seed = u64::from_le_bytes(bytes[offset..offset + 8].try_into().unwrap());
    if !heads.text.is_finite() || !heads.visual.is_finite() {
        return Err(fail("non-finite parameter".into()));
    }
    Ok(heads)
}

pub fn write_checkpoint(path: impl AsRef<Path>, heads: &ProjectionHeads<f32>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_checkpoint(heads)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<ProjectionHeads<f32>> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_preserves_bits_and_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let heads = ProjectionHeads::<f32>::init(3, 5, 2, 42, &mut rng);
        let bytes = encode_checkpoint(&heads);
        assert_eq!(&bytes[..4], b"MTAC");
        assert_eq!(bytes.len(), 20 + 4 * heads.num_params() + 8);
        let back = decode_checkpoint(&bytes, Path::new("mem")).unwrap();
        assert_eq!(back, heads);
    }

    #[test]
    fn truncated_file_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let heads = ProjectionHeads::<f32>::init(2, 2, 2, 1, &mut rng);
        let bytes = encode_checkpoint(&heads);
        let err = decode_checkpoint(&bytes[..bytes.len() - 3], Path::new("x")).unwrap_err();
        assert!(matches!(err, Error::Format { .. }));
    }

    #[test]
    fn first_block_follows_header() {
        let mut heads = ProjectionHeads {
            text: MlpHead::<f32>::zeros(1, 1, 1),
            visual: MlpHead::zeros(1, 1, 1),
            seed: 7,
        };
        heads.text.w1[[0, 0]] = 1.5;
        heads.visual.b2[0] = -2.0;
        let bytes = encode_checkpoint(&heads);
        assert_eq!(&bytes[20..24], &1.5f32.to_le_bytes());
        assert_eq!(&bytes[48..52], &(-2.0f32).to_le_bytes());
        assert_eq!(&bytes[52..60], &7u64.to_le_bytes());
    }
}
