//! Shared multi-scale primitives: 5-tap Gaussian prefilter, decimation,
//! bilinear upsampling. Used by both the alignment pyramid and the fusion
//! feature pyramids.

use crate::image::Image;
use crate::parallel::for_each_row;

/// Normalized 5-tap Gaussian, sigma = 1, evaluated at offsets -2..=2.
pub(crate) const GAUSS5: [f64; 5] = {
    // exp(-d^2/2) for d = 0, 1, 2; normalized at compile time is not
    // available for transcendental fns, so the constants are spelled out.
    // raw: [0.13533528, 0.60653066, 1.0, 0.60653066, 0.13533528], sum = 2.48373188
    [
        0.054_488_684_549_642_94,
        0.244_201_342_003_233_45,
        0.402_619_946_894_247_2,
        0.244_201_342_003_233_45,
        0.054_488_684_549_642_94,
    ]
};

/// Separable 5-tap Gaussian blur with replicate boundary. DC gain is 1, so
/// constants pass through unchanged up to rounding.
pub(crate) fn blur5(img: &Image) -> Image {
    let (w, h, channels) = (img.width(), img.height(), img.channels());
    // horizontal pass
    let mut tmp = vec![0.0f32; w * h * channels];
    for_each_row(&mut tmp, w, |row_index, row| {
        let c = row_index / h;
        let y = row_index % h;
        let plane = img.plane(c);
        let base = y * w;
        for (x, out) in row.iter_mut().enumerate() {
            let mut acc = 0.0f64;
            for (i, wt) in GAUSS5.iter().enumerate() {
                let sx = (x as isize + i as isize - 2).clamp(0, w as isize - 1) as usize;
                acc += wt * plane[base + sx] as f64;
            }
            *out = acc as f32;
        }
    });
    // vertical pass
    let mut out = vec![0.0f32; w * h * channels];
    for_each_row(&mut out, w, |row_index, row| {
        let c = row_index / h;
        let y = row_index % h;
        let plane = &tmp[c * w * h..(c + 1) * w * h];
        for (x, px) in row.iter_mut().enumerate() {
            let mut acc = 0.0f64;
            for (i, wt) in GAUSS5.iter().enumerate() {
                let sy = (y as isize + i as isize - 2).clamp(0, h as isize - 1) as usize;
                acc += wt * plane[sy * w + x] as f64;
            }
            *px = acc as f32;
        }
    });
    Image::from_vec_unchecked(w, h, channels, out)
}

/// Gaussian-prefiltered 2x decimation keeping even-indexed samples, so
/// coarse pixel `j` sits at fine coordinate `2j` and dimensions follow
/// `ceil(n / 2)`.
pub(crate) fn downsample2(img: &Image) -> Image {
    let filtered = blur5(img);
    let (w, h, channels) = (img.width(), img.height(), img.channels());
    let (dw, dh) = (w.div_ceil(2), h.div_ceil(2));
    let mut samples = Vec::with_capacity(dw * dh * channels);
    for c in 0..channels {
        let plane = filtered.plane(c);
        for y in 0..dh {
            for x in 0..dw {
                samples.push(plane[(2 * y) * w + 2 * x]);
            }
        }
    }
    Image::from_vec_unchecked(dw, dh, channels, samples)
}

/// Bilinear upsampling to an explicit target size, matching the
/// `coarse j <-> fine 2j` grid of [`downsample2`]. Constants are preserved.
pub(crate) fn upsample_bilinear(img: &Image, target_w: usize, target_h: usize) -> Image {
    let (w, h, channels) = (img.width(), img.height(), img.channels());
    let mut samples = vec![0.0f32; target_w * target_h * channels];
    for_each_row(&mut samples, target_w, |row_index, row| {
        let c = row_index / target_h;
        let y = row_index % target_h;
        let plane = img.plane(c);
        let v = y as f64 / 2.0;
        for (x, px) in row.iter_mut().enumerate() {
            let u = x as f64 / 2.0;
            *px = crate::warp::bilinear_replicate(plane, w, h, u, v);
        }
    });
    Image::from_vec_unchecked(target_w, target_h, channels, samples)
}
