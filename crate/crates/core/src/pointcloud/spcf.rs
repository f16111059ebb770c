//! SPCF frame files.
//!
//! ```text
//! offset  size      field
//! 0       4         magic "SPC1"
//! 4       4         point count N, u32 LE
//! 8       24        bbox: min xyz, max xyz, f32 LE
//! 32      6N        quantized positions, 3 x u16 LE per point
//! 32+6N   3N        colors, RGB u8 per point
//! ```
//!
//! Positions are quantized inside the bbox: `q = round((p - min) / (max - min) * 65535)`
//! per axis, and `q = 0` on degenerate axes.

use glam::Vec3;

use super::{Aabb, PointCloudError, PointCloudFrame};

pub const SPCF_MAGIC: [u8; 4] = *b"SPC1";
pub const SPCF_HEADER_LEN: usize = 32;
const QMAX: f64 = 65535.0;

fn quantize(p: f32, min: f32, max: f32) -> u16 {
    if max <= min {
        return 0;
    }
    let t = (p as f64 - min as f64) / (max as f64 - min as f64);
    (t * QMAX).round().clamp(0.0, QMAX) as u16
}

fn dequantize(q: u16, min: f32, max: f32) -> f32 {
    (min as f64 + q as f64 / QMAX * (max as f64 - min as f64)) as f32
}

pub fn encode_spcf(frame: &PointCloudFrame) -> Vec<u8> {
    let n = frame.len();
    let count = u32::try_from(n).expect("SPCF frames hold fewer than 2^32 points");
    let Aabb { min, max } = *frame.bbox();

    let mut out = Vec::with_capacity(SPCF_HEADER_LEN + 9 * n);
    out.extend_from_slice(&SPCF_MAGIC);
    out.extend_from_slice(&count.to_le_bytes());
    for v in min.to_array().into_iter().chain(max.to_array()) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for p in frame.positions() {
        for axis in 0..3 {
            out.extend_from_slice(&quantize(p[axis], min[axis], max[axis]).to_le_bytes());
        }
    }
    for c in frame.colors() {
        out.extend_from_slice(c);
    }
    out
}

pub fn decode_spcf(bytes: &[u8]) -> Result<PointCloudFrame, PointCloudError> {
    if bytes.len() < 4 || bytes[..4] != SPCF_MAGIC {
        return Err(PointCloudError::BadMagic { found: bytes[..bytes.len().min(4)].to_vec() });
    }
    if bytes.len() < SPCF_HEADER_LEN {
        return Err(PointCloudError::Truncated { expected: SPCF_HEADER_LEN, actual: bytes.len() });
    }
    let u32_at = |at: usize| u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
    let f32_at = |at: usize| f32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());

    let n = u32_at(4) as usize;
    let expected = SPCF_HEADER_LEN + 9 * n;
    if bytes.len() < expected {
        return Err(PointCloudError::Truncated { expected, actual: bytes.len() });
    }
    if bytes.len() > expected {
        return Err(PointCloudError::TrailingBytes { expected, actual: bytes.len() });
    }
    let min = Vec3::new(f32_at(8), f32_at(12), f32_at(16));
    let max = Vec3::new(f32_at(20), f32_at(24), f32_at(28));
    let bbox = Aabb::new(min, max)?;

    let pos_bytes = &bytes[SPCF_HEADER_LEN..SPCF_HEADER_LEN + 6 * n];
    let positions = pos_bytes
        .chunks_exact(6)
        .map(|c| {
            let q = |axis: usize| u16::from_le_bytes([c[2 * axis], c[2 * axis + 1]]);
            Vec3::new(dequantize(q(0), min.x, max.x), dequantize(q(1), min.y, max.y), dequantize(q(2), min.z, max.z))
        })
        .collect();
    let colors = bytes[SPCF_HEADER_LEN + 6 * n..].chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    PointCloudFrame::new(bbox, positions, colors)
}
