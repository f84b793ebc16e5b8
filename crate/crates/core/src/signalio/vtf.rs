//! VTF container.
//!
//! Layout (all little-endian):
//!
//! | bytes | content                        |
//! |-------|--------------------------------|
//! | 4     | magic `VTF1`                   |
//! | 16    | `u32` T, H, W, C               |
//! | 8     | `f64` frame rate               |
//! | 4·N   | `f32` payload, N = T·H·W·C     |
//!
//! Payload index order is t (slowest), y, x, c (fastest). Masks use the same
//! container with C = 1. Values are stored as `f32`, so a tensor round-trips
//! bitwise whenever its values are representable in `f32`.

use std::fs;
use std::path::Path;

use ndarray::{Array3, Array4};

use crate::error::{Error, Result};
use crate::scalar::Real;

use super::video::{MaskSequence, VideoTensor};

pub const MAGIC: &[u8; 4] = b"VTF1";
pub const HEADER_LEN: usize = 28;

struct Header {
    dims: [usize; 4],
    fps: f64,
}

fn encode<T: Real>(dims: [usize; 4], fps: f64, values: impl Iterator<Item = T>) -> Result<Vec<u8>> {
    let mut buf = Vec::with_capacity(HEADER_LEN + 4 * dims.iter().product::<usize>());
    buf.extend_from_slice(MAGIC);
    for d in dims {
        let d = u32::try_from(d).map_err(|_| Error::invalid(format!("dimension {d} exceeds u32")))?;
        buf.extend_from_slice(&d.to_le_bytes());
    }
    buf.extend_from_slice(&fps.to_le_bytes());
    for v in values {
        buf.extend_from_slice(&(v.as_f64() as f32).to_le_bytes());
    }
    Ok(buf)
}

fn decode_header(bytes: &[u8]) -> Result<Header> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::Format {
            offset: 0,
            reason: "bad magic, expected VTF1".into(),
        });
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            reason: "truncated header".into(),
        });
    }
    let mut dims = [0usize; 4];
    for (i, d) in dims.iter_mut().enumerate() {
        let off = 4 + 4 * i;
        *d = u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
    }
    let fps = f64::from_le_bytes(bytes[20..28].try_into().unwrap());
    Ok(Header { dims, fps })
}

fn decode_payload<T: Real>(bytes: &[u8], count: usize) -> Result<Vec<T>> {
    let expected = HEADER_LEN + 4 * count;
    if bytes.len() < expected {
        return Err(Error::Format {
            offset: bytes.len() as u64,
            reason: format!("truncated payload, expected {expected} bytes"),
        });
    }
    if bytes.len() > expected {
        return Err(Error::Format {
            offset: expected as u64,
            reason: format!("{} trailing bytes", bytes.len() - expected),
        });
    }
    let mut out = Vec::with_capacity(count);
    for (i, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(Error::Format {
                offset: (HEADER_LEN + 4 * i) as u64,
                reason: format!("non-finite value {v}"),
            });
        }
        out.push(T::lit(v as f64));
    }
    Ok(out)
}

fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn video_to_bytes<T: Real>(video: &VideoTensor<T>) -> Result<Vec<u8>> {
    let (t, h, w, c) = video.data().dim();
    encode([t, h, w, c], video.fps(), video.data().iter().copied())
}

pub fn video_from_bytes<T: Real>(bytes: &[u8]) -> Result<VideoTensor<T>> {
    let header = decode_header(bytes)?;
    let [t, h, w, c] = header.dims;
    let values = decode_payload(bytes, t * h * w * c)?;
    let data = Array4::from_shape_vec((t, h, w, c), values).expect("length checked");
    VideoTensor::new(data, header.fps).map_err(|e| Error::Format {
        offset: 4,
        reason: e.to_string(),
    })
}

pub fn write_video_tensor<T: Real>(video: &VideoTensor<T>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, video_to_bytes(video)?).map_err(|e| Error::io(path, e))
}

pub fn read_video_tensor<T: Real>(path: impl AsRef<Path>) -> Result<VideoTensor<T>> {
    video_from_bytes(&read_bytes(path.as_ref())?)
}

/// Masks carry no meaningful rate; `fps` is stored for provenance only.
pub fn write_mask_sequence<T: Real>(mask: &MaskSequence<T>, fps: f64, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (t, h, w) = mask.data().dim();
    let bytes = encode([t, h, w, 1], fps, mask.data().iter().copied())?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_mask_sequence<T: Real>(path: impl AsRef<Path>) -> Result<MaskSequence<T>> {
    let bytes = read_bytes(path.as_ref())?;
    let header = decode_header(&bytes)?;
    let [t, h, w, c] = header.dims;
    if c != 1 {
        return Err(Error::Format {
            offset: 16,
            reason: format!("mask files must have C = 1, got {c}"),
        });
    }
    let values = decode_payload(&bytes, t * h * w)?;
    let data = Array3::from_shape_vec((t, h, w), values).expect("length checked");
    MaskSequence::new(data).map_err(|e| Error::Format {
        offset: 4,
        reason: e.to_string(),
    })
}
