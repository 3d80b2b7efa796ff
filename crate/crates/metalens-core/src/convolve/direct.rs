//! Per-pixel reference engine: interpolate the kernel at every pixel,
//! accumulate taps in f64. Parallel over output rows; each row is written
//! by exactly one task, so results are bitwise independent of thread count.

use crate::convolve::kernel_channel;
use crate::image::Image;
use crate::parallel::for_each_row;
use crate::psf::KernelLattice;

pub(crate) fn convolve(img: &Image, lat: &KernelLattice) -> Image {
    let (w, h, channels) = (img.width(), img.height(), img.channels());
    let k = lat.kernel_k();
    let r = lat.radius() as isize;
    let mut samples = vec![0.0f32; w * h * channels];

    for_each_row(&mut samples, w, |row_index, row| {
        let c = row_index / h;
        let y = row_index % h;
        let kc = kernel_channel(lat, c);
        let plane = img.plane(c);
        let mut kbuf = vec![0.0f64; k * k];
        let interior_y = y as isize >= r && y as isize + r < h as isize;
        for (x, out_px) in row.iter_mut().enumerate() {
            lat.interpolate_kernel(x, y, kc, &mut kbuf);
            let mut acc = 0.0f64;
            if interior_y && x as isize >= r && x as isize + r < w as isize {
                // fast path: window fully inside the plane
                let mut ti = 0;
                for dy in 0..k {
                    let sy = y + r as usize - dy;
                    let base = sy * w + x + r as usize;
                    for dx in 0..k {
                        acc += kbuf[ti] * plane[base - dx] as f64;
                        ti += 1;
                    }
                }
            } else {
                for dy in 0..k {
                    let sy = (y as isize - dy as isize + r).clamp(0, h as isize - 1) as usize;
                    let base = sy * w;
                    for dx in 0..k {
                        let sx = (x as isize - dx as isize + r).clamp(0, w as isize - 1) as usize;
                        acc += kbuf[dy * k + dx] * plane[base + sx] as f64;
                    }
                }
            }
            *out_px = acc as f32;
        }
    });
    Image::from_vec_unchecked(w, h, channels, samples)
}
