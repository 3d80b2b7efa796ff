//! Transpose of the spatially varying convolution matrix.
//!
//! The forward map reads `img[clamp(y - dy + r)][clamp(x - dx + r)]`
//! weighted by the kernel interpolated at the *output* pixel. The adjoint
//! therefore scatters each input value through the kernel interpolated at
//! its own position, with replicate clamping folding border mass back onto
//! edge pixels. Channels are independent, so channel planes run in
//! parallel and each plane accumulates in a fixed scan order.

use crate::convolve::kernel_channel;
use crate::image::Image;
use crate::parallel::map_indexed;
use crate::psf::KernelLattice;

pub(crate) fn adjoint(img: &Image, lat: &KernelLattice) -> Image {
    let (w, h, channels) = (img.width(), img.height(), img.channels());
    let k = lat.kernel_k();
    let r = lat.radius() as isize;

    let planes: Vec<Vec<f64>> = map_indexed(channels, |c| {
        let kc = kernel_channel(lat, c);
        let plane = img.plane(c);
        let mut acc = vec![0.0f64; w * h];
        let mut kbuf = vec![0.0f64; k * k];
        for y in 0..h {
            for x in 0..w {
                let v = plane[y * w + x] as f64;
                if v == 0.0 {
                    continue;
                }
                lat.interpolate_kernel(x, y, kc, &mut kbuf);
                for dy in 0..k {
                    let ty = (y as isize - dy as isize + r).clamp(0, h as isize - 1) as usize;
                    let base = ty * w;
                    for dx in 0..k {
                        let tx = (x as isize - dx as isize + r).clamp(0, w as isize - 1) as usize;
                        acc[base + tx] += kbuf[dy * k + dx] * v;
                    }
                }
            }
        }
        acc
    });

    let mut samples = Vec::with_capacity(w * h * channels);
    for plane in planes {
        samples.extend(plane.into_iter().map(|v| v as f32));
    }
    Image::from_vec_unchecked(w, h, channels, samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::BoundaryRule;
    use crate::convolve::{sv_adjoint, sv_convolve, Engine};
    use crate::psf::delta_lattice;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn random_image(w: usize, h: usize, c: usize, seed: u64) -> Image {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Image::from_fn(w, h, c, |_, _, _| rng.random::<f32>() - 0.5)
    }

    fn dot(a: &Image, b: &Image) -> f64 {
        a.samples()
            .iter()
            .zip(b.samples())
            .map(|(&x, &y)| x as f64 * y as f64)
            .sum()
    }

    fn norm(a: &Image) -> f64 {
        dot(a, a).sqrt()
    }

    /// Dense matrix of the forward map on a single-channel image space,
    /// built by applying the operator to unit vectors.
    fn dense_matrix(lat: &KernelLattice, w: usize, h: usize) -> Vec<Vec<f64>> {
        let n = w * h;
        let mut cols = Vec::with_capacity(n);
        for j in 0..n {
            let mut e = Image::zeros(w, h, 1);
            e.samples_mut()[j] = 1.0;
            let col = sv_convolve(&e, lat, BoundaryRule::Replicate, Engine::Direct).unwrap();
            cols.push(col.samples().iter().map(|&v| v as f64).collect::<Vec<_>>());
        }
        // cols[j][i] = A[i][j]; transpose into row-major A
        let mut a = vec![vec![0.0f64; n]; n];
        for j in 0..n {
            for i in 0..n {
                a[i][j] = cols[j][i];
            }
        }
        a
    }

    #[test]
    fn delta_adjoint_is_identity() {
        let img = random_image(9, 7, 1, 21);
        let lat = delta_lattice(2, 2, 3, 1, 9, 7).unwrap();
        let out = sv_adjoint(&img, &lat, BoundaryRule::Replicate).unwrap();
        assert!(out.max_abs_diff(&img).unwrap() < 1e-6);
    }

    #[test]
    fn dot_product_identity_holds() {
        for seed in 0..20u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(3000 + seed);
            let w = rng.random_range(5..20);
            let h = rng.random_range(5..20);
            let gh = rng.random_range(1..4);
            let gw = rng.random_range(1..4);
            let k = 2 * rng.random_range(0..3) + 1;
            let lat = crate::convolve::tests::random_lattice(
                gh,
                gw,
                k,
                1,
                w,
                h,
                4000 + seed,
                true,
            );
            let u = random_image(w, h, 1, 5000 + seed);
            let v = random_image(w, h, 1, 6000 + seed);
            let au = sv_convolve(&u, &lat, BoundaryRule::Replicate, Engine::Direct).unwrap();
            let atv = sv_adjoint(&v, &lat, BoundaryRule::Replicate).unwrap();
            let lhs = dot(&au, &v);
            let rhs = dot(&u, &atv);
            let denom = norm(&au) * norm(&v);
            assert!(
                (lhs - rhs).abs() / denom.max(1e-30) < 1e-6,
                "seed {seed}: {lhs} vs {rhs}"
            );
        }
    }

    #[test]
    fn matches_dense_transpose() {
        let (w, h) = (12, 12);
        let lat = crate::convolve::tests::random_lattice(2, 2, 3, 1, w, h, 77, true);
        let a = dense_matrix(&lat, w, h);
        let n = w * h;
        // apply the adjoint to unit vectors and compare against A^T columns
        for j in (0..n).step_by(13) {
            let mut e = Image::zeros(w, h, 1);
            e.samples_mut()[j] = 1.0;
            let at_e = sv_adjoint(&e, &lat, BoundaryRule::Replicate).unwrap();
            for i in 0..n {
                let want = a[j][i]; // (A^T)[i][j] = A[j][i]
                assert!(
                    (at_e.samples()[i] as f64 - want).abs() < 1e-6,
                    "entry ({i},{j})"
                );
            }
        }
    }

    #[test]
    fn symmetric_kernel_gives_symmetric_interior() {
        // single anchor, centro-symmetric kernel: dense matrix restricted to
        // pixels at distance >= r from the border must be symmetric
        let (w, h) = (10, 10);
        let k = 3;
        let mut rng = ChaCha12Rng::seed_from_u64(88);
        let mut kern = vec![0.0f32; k * k];
        for dy in 0..k {
            for dx in 0..k {
                let v = rng.random::<f32>();
                kern[dy * k + dx] = v;
                kern[(k - 1 - dy) * k + (k - 1 - dx)] = v;
            }
        }
        let sum: f64 = kern.iter().map(|&v| v as f64).sum();
        for v in &mut kern {
            *v = (*v as f64 / sum) as f32;
        }
        let lat = KernelLattice::new(1, 1, k, 1, w, h, kern).unwrap();
        let a = dense_matrix(&lat, w, h);
        let r = 1usize;
        for iy in r..h - r {
            for ix in r..w - r {
                for jy in r..h - r {
                    for jx in r..w - r {
                        let i = iy * w + ix;
                        let j = jy * w + jx;
                        assert!((a[i][j] - a[j][i]).abs() < 1e-6);
                    }
                }
            }
        }
    }
}
