//! Kernel-grid calibration file format.

use crate::error::{Error, Result};
use crate::psf::KernelLattice;

const MAGIC: &[u8; 4] = b"PSFG";
const VERSION: u32 = 1;

pub fn encode(lat: &KernelLattice) -> Vec<u8> {
    let mut out = Vec::with_capacity(32 + lat.kernels().len() * 4);
    out.extend_from_slice(MAGIC);
    for v in [
        VERSION,
        lat.grid_h() as u32,
        lat.grid_w() as u32,
        lat.kernel_k() as u32,
        lat.channels() as u32,
        lat.image_w() as u32,
        lat.image_h() as u32,
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &k in lat.kernels() {
        out.extend_from_slice(&k.to_le_bytes());
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<KernelLattice> {
    if bytes.len() < 32 || &bytes[..4] != MAGIC {
        return Err(Error::Format("truncated or mislabeled PSFG header".into()));
    }
    let mut fields = [0u32; 7];
    for (i, f) in fields.iter_mut().enumerate() {
        let o = 4 + i * 4;
        *f = u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    }
    let [version, grid_h, grid_w, kernel_k, channels, image_w, image_h] = fields;
    if version != VERSION {
        return Err(Error::Format(format!(
            "unsupported PSFG version {version}, expected {VERSION}"
        )));
    }
    let count = (grid_h as usize)
        .checked_mul(grid_w as usize)
        .and_then(|n| n.checked_mul(channels as usize))
        .and_then(|n| n.checked_mul((kernel_k as usize).checked_pow(2)?))
        .ok_or_else(|| Error::Size("PSFG dimensions overflow".into()))?;
    let expected = 32 + count * 4;
    if bytes.len() != expected {
        return Err(Error::Format(format!(
            "PSFG payload is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut kernels = Vec::with_capacity(count);
    for i in 0..count {
        let o = 32 + i * 4;
        kernels.push(f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()));
    }
    KernelLattice::new(
        grid_h as usize,
        grid_w as usize,
        kernel_k as usize,
        channels as usize,
        image_w as usize,
        image_h as usize,
        kernels,
    )
}
