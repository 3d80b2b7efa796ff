//! Raw float raster format: exact round-trip storage for intermediates.

use crate::error::{Error, Result};
use crate::image::Image;

const MAGIC: &[u8; 4] = b"IMGF";

pub fn encode(img: &Image) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + img.samples().len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(img.width() as u32).to_le_bytes());
    out.extend_from_slice(&(img.height() as u32).to_le_bytes());
    out.extend_from_slice(&(img.channels() as u32).to_le_bytes());
    for &s in img.samples() {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(Error::Format("truncated or mislabeled IMGF header".into()));
    }
    let width = read_u32(bytes, 4)? as usize;
    let height = read_u32(bytes, 8)? as usize;
    let channels = read_u32(bytes, 12)? as usize;
    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Error::Size("IMGF dimensions overflow".into()))?;
    let expected = 16 + count * 4;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "IMGF payload is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut samples = Vec::with_capacity(count);
    for i in 0..count {
        let o = 16 + i * 4;
        samples.push(f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()));
    }
    Image::new(width, height, channels, samples)
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32> {
    bytes
        .get(offset..offset + 4)
        .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
        .ok_or_else(|| Error::Format("IMGF header truncated".into()))
}
