//! Per-anchor FFT engine.
//!
//! The image plane is replicate-padded by the kernel radius, transformed
//! once, and circularly convolved with every anchor kernel (zero-padded,
//! center tap wrapped to the origin). Because padding keeps wrap-around
//! contributions out of the cropped interior, each per-anchor output equals
//! exact linear convolution with replicate boundary. The final image blends
//! the per-anchor outputs with the same bilinear anchor weights the direct
//! engine uses for kernels; the two engines compute the same map since the
//! weights do not depend on the kernel tap.

use rustfft::num_complex::Complex;

use crate::convolve::kernel_channel;
use crate::fft::Fft2;
use crate::image::Image;
use crate::parallel::{for_each_row, map_indexed};
use crate::psf::KernelLattice;

pub(crate) fn convolve(img: &Image, lat: &KernelLattice) -> Image {
    let (w, h, channels) = (img.width(), img.height(), img.channels());
    let k = lat.kernel_k();
    let r = lat.radius();
    let (he, we) = (h + 2 * r, w + 2 * r);
    let plan = Fft2::new(he, we);
    let anchors = lat.grid_h() * lat.grid_w();

    let mut samples = vec![0.0f32; w * h * channels];
    for c in 0..channels {
        let kc = kernel_channel(lat, c);

        // forward transform of the replicate-padded plane, computed once
        let plane = img.plane(c);
        let mut padded = vec![Complex::new(0.0, 0.0); he * we];
        for y in 0..he {
            let sy = (y as isize - r as isize).clamp(0, h as isize - 1) as usize;
            for x in 0..we {
                let sx = (x as isize - r as isize).clamp(0, w as isize - 1) as usize;
                padded[y * we + x] = Complex::new(plane[sy * w + sx] as f64, 0.0);
            }
        }
        plan.forward(&mut padded);

        // linear convolution with each anchor kernel, cropped to the plane
        let per_anchor: Vec<Vec<f64>> = map_indexed(anchors, |a| {
            let (gy, gx) = (a / lat.grid_w(), a % lat.grid_w());
            let kernel = lat.kernel(gy, gx, kc);
            let mut spec = vec![Complex::new(0.0, 0.0); he * we];
            for dy in 0..k {
                let py = (dy as isize - r as isize).rem_euclid(he as isize) as usize;
                for dx in 0..k {
                    let px = (dx as isize - r as isize).rem_euclid(we as isize) as usize;
                    spec[py * we + px] = Complex::new(kernel[dy * k + dx] as f64, 0.0);
                }
            }
            let anchor_plan = Fft2::new(he, we);
            anchor_plan.forward(&mut spec);
            for (s, p) in spec.iter_mut().zip(&padded) {
                *s *= p;
            }
            anchor_plan.inverse(&mut spec);
            let mut cropped = vec![0.0f64; w * h];
            for y in 0..h {
                for x in 0..w {
                    cropped[y * w + x] = spec[(y + r) * we + (x + r)].re;
                }
            }
            cropped
        });

        // bilinear blend of anchor outputs
        let out_plane = &mut samples[c * w * h..(c + 1) * w * h];
        for_each_row(out_plane, w, |y, row| {
            for (x, px) in row.iter_mut().enumerate() {
                let mut acc = 0.0f64;
                for (gy, gx, wt) in lat.anchor_weights(x, y) {
                    if wt != 0.0 {
                        acc += wt * per_anchor[gy * lat.grid_w() + gx][y * w + x];
                    }
                }
                *px = acc as f32;
            }
        });
    }
    Image::from_vec_unchecked(w, h, channels, samples)
}
