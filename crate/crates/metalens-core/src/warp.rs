//! Geometric warping by inverse bilinear sampling.

use crate::boundary::BoundaryRule;
use crate::error::Result;
use crate::image::Image;
use crate::parallel::for_each_row;
use crate::transform::Transform2D;

/// Warps an image under `h`: output pixel `(x, y)` is the bilinear sample
/// of the input at `h^-1 * (x, y, 1)`. Out-of-bounds source coordinates
/// are replicate-clamped. Fails on a singular transform.
pub fn warp(img: &Image, h: &Transform2D, boundary: BoundaryRule) -> Result<Image> {
    let inv = h.inverse()?;
    let BoundaryRule::Replicate = boundary;
    Ok(sample_with_matrix(img, inv.matrix()))
}

/// Samples `img` at `m * (x, y, 1)` for every output pixel. Integer
/// lattice hits reproduce source samples exactly (zero-weight neighbors
/// contribute nothing).
pub(crate) fn sample_with_matrix(img: &Image, m: &[[f64; 3]; 3]) -> Image {
    let (w, h, channels) = (img.width(), img.height(), img.channels());
    let mut samples = vec![0.0f32; w * h * channels];
    for_each_row(&mut samples, w, |row_index, row| {
        let c = row_index / h;
        let y = row_index % h;
        let plane = img.plane(c);
        for (x, px) in row.iter_mut().enumerate() {
            let xf = x as f64;
            let yf = y as f64;
            let denom = m[2][0] * xf + m[2][1] * yf + m[2][2];
            let u = (m[0][0] * xf + m[0][1] * yf + m[0][2]) / denom;
            let v = (m[1][0] * xf + m[1][1] * yf + m[1][2]) / denom;
            *px = bilinear_replicate(plane, w, h, u, v);
        }
    });
    Image::from_vec_unchecked(w, h, channels, samples)
}

/// Bilinear sample with replicate clamping; exact at integer coordinates.
#[inline]
pub(crate) fn bilinear_replicate(plane: &[f32], w: usize, h: usize, u: f64, v: f64) -> f32 {
    let uc = u.clamp(0.0, (w - 1) as f64);
    let vc = v.clamp(0.0, (h - 1) as f64);
    let x0 = uc.floor();
    let y0 = vc.floor();
    let tx = uc - x0;
    let ty = vc - y0;
    let x0 = x0 as usize;
    let y0 = y0 as usize;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let p00 = plane[y0 * w + x0] as f64;
    if tx == 0.0 && ty == 0.0 {
        return p00 as f32;
    }
    let p01 = plane[y0 * w + x1] as f64;
    let p10 = plane[y1 * w + x0] as f64;
    let p11 = plane[y1 * w + x1] as f64;
    let top = p00 + tx * (p01 - p00);
    let bot = p10 + tx * (p11 - p10);
    (top + ty * (bot - top)) as f32
}
