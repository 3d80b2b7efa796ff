//! Spatially varying convolution and its adjoint.
//!
//! The kernel acting at pixel `(y, x)` is the bilinear blend of the four
//! surrounding anchor kernels. Output pixel `(y, x)` of channel `c` is
//!
//! ```text
//! out[y][x] = sum_{dy,dx} k_{y,x}[dy][dx] * img[y - dy + r][x - dx + r]
//! ```
//!
//! with `r = (kernel_k - 1) / 2` and replicate padding (true convolution:
//! the kernel is flipped relative to correlation).
//!
//! Two engines produce the same map:
//! - [`Engine::Direct`] interpolates the kernel at every pixel and
//!   accumulates taps directly; exact reference, parallel over rows.
//! - [`Engine::Tiled`] convolves the whole image with each anchor kernel
//!   by FFT, then blends the per-anchor outputs with the same bilinear
//!   weights; identical up to FFT rounding because the weights do not
//!   depend on the kernel tap.

mod adjoint;
mod direct;
mod tiled;

use crate::boundary::BoundaryRule;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::psf::{KernelLattice, KernelSource};

/// Execution strategy for [`sv_convolve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Direct,
    Tiled,
}

impl std::str::FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Engine::Direct),
            "tiled" => Ok(Engine::Tiled),
            other => Err(Error::Parameter(format!(
                "unknown engine {other:?} (expected direct or tiled)"
            ))),
        }
    }
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Direct => "direct",
            Engine::Tiled => "tiled",
        })
    }
}

/// Checks image/lattice compatibility and returns the kernel channel used
/// for each image channel (shared kernel when the lattice is monochrome).
pub(crate) fn check_compat(img: &Image, lat: &KernelLattice) -> Result<()> {
    if img.width() != lat.image_w() || img.height() != lat.image_h() {
        return Err(Error::Shape(format!(
            "image {}x{} does not match kernel grid calibrated for {}x{}",
            img.width(),
            img.height(),
            lat.image_w(),
            lat.image_h()
        )));
    }
    if lat.channels() != img.channels() && lat.channels() != 1 {
        return Err(Error::Shape(format!(
            "kernel grid has {} channels, image has {} (grid must match or be monochrome)",
            lat.channels(),
            img.channels()
        )));
    }
    Ok(())
}

#[inline]
pub(crate) fn kernel_channel(lat: &KernelLattice, image_channel: usize) -> usize {
    if lat.channels() == 1 {
        0
    } else {
        image_channel
    }
}

/// Applies the spatially varying convolution defined by an anchor-kernel
/// grid. `BoundaryRule::Replicate` is the only boundary mode.
pub fn sv_convolve<K: KernelSource>(
    img: &Image,
    kernels: &K,
    boundary: BoundaryRule,
    engine: Engine,
) -> Result<Image> {
    let lat = kernels.lattice();
    check_compat(img, lat)?;
    let BoundaryRule::Replicate = boundary;
    match engine {
        Engine::Direct => Ok(direct::convolve(img, lat)),
        Engine::Tiled => Ok(tiled::convolve(img, lat)),
    }
}

/// Exact adjoint of [`sv_convolve`] as a linear map (the transpose of the
/// matrix realized by the direct engine, replicate folding included).
pub fn sv_adjoint<K: KernelSource>(
    img: &Image,
    kernels: &K,
    boundary: BoundaryRule,
) -> Result<Image> {
    let lat = kernels.lattice();
    check_compat(img, lat)?;
    let BoundaryRule::Replicate = boundary;
    Ok(adjoint::adjoint(img, lat))
}


#[cfg(test)]
pub(crate) mod tests {
    use super::test_oracle::oracle_convolve;
    use super::*;
    use crate::psf::{delta_lattice, KernelLattice};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    pub(crate) fn random_image(w: usize, h: usize, c: usize, seed: u64) -> Image {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        Image::from_fn(w, h, c, |_, _, _| rng.random::<f32>())
    }

    pub(crate) fn random_lattice(
        grid_h: usize,
        grid_w: usize,
        k: usize,
        channels: usize,
        w: usize,
        h: usize,
        seed: u64,
        normalized: bool,
    ) -> KernelLattice {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let count = grid_h * grid_w * channels * k * k;
        let mut kernels: Vec<f32> = (0..count).map(|_| rng.random::<f32>()).collect();
        if normalized {
            for a in 0..grid_h * grid_w * channels {
                let chunk = &mut kernels[a * k * k..(a + 1) * k * k];
                let sum: f64 = chunk.iter().map(|&v| v as f64).sum();
                for v in chunk {
                    *v = (*v as f64 / sum) as f32;
                }
            }
        }
        KernelLattice::new(grid_h, grid_w, k, channels, w, h, kernels).unwrap()
    }

    #[test]
    fn delta_grid_is_identity() {
        let img = random_image(17, 13, 3, 1);
        let lat = delta_lattice(2, 3, 5, 1, 17, 13).unwrap();
        for engine in [Engine::Direct, Engine::Tiled] {
            let out = sv_convolve(&img, &lat, BoundaryRule::Replicate, engine).unwrap();
            let tol = if engine == Engine::Direct { 0.0 } else { 1e-6 };
            assert!(out.max_abs_diff(&img).unwrap() <= tol, "{engine}");
        }
    }

    #[test]
    fn uniform_box_grid_matches_invariant_oracle() {
        // all anchors equal one 3x3 box kernel -> spatially invariant
        let (w, h) = (16, 16);
        let img = random_image(w, h, 1, 2);
        let v = 1.0f32 / 9.0;
        let lat = KernelLattice::new(2, 2, 3, 1, w, h, vec![v; 2 * 2 * 9]).unwrap();
        let out = sv_convolve(&img, &lat, BoundaryRule::Replicate, Engine::Direct).unwrap();
        // brute-force single-kernel convolution
        for y in 0..h {
            for x in 0..w {
                let mut acc = 0.0f64;
                for dy in -1i64..=1 {
                    for dx in -1i64..=1 {
                        let sy = (y as i64 - dy).clamp(0, h as i64 - 1) as usize;
                        let sx = (x as i64 - dx).clamp(0, w as i64 - 1) as usize;
                        acc += (1.0 / 9.0) * img.get(sx, sy, 0) as f64;
                    }
                }
                assert!((out.get(x, y, 0) as f64 - acc).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn constant_input_stays_constant() {
        let img = Image::from_fn(20, 12, 1, |_, _, _| 0.37);
        let lat = random_lattice(3, 2, 5, 1, 20, 12, 3, true);
        for engine in [Engine::Direct, Engine::Tiled] {
            let out = sv_convolve(&img, &lat, BoundaryRule::Replicate, engine).unwrap();
            for &v in out.samples() {
                assert!((v - 0.37).abs() < 1e-6, "{engine}");
            }
        }
    }

    #[test]
    fn distinct_delta_offsets_match_oracle() {
        // 2x2 anchors, each a delta shifted to a different tap
        let k = 3;
        let (w, h) = (12, 10);
        let mut kernels = vec![0.0f32; 4 * k * k];
        for (a, tap) in [(0usize, 0usize), (1, 2), (2, 6), (3, 8)] {
            kernels[a * k * k + tap] = 1.0;
        }
        let lat = KernelLattice::new(2, 2, k, 1, w, h, kernels).unwrap();
        let img = random_image(w, h, 1, 4);
        let out = sv_convolve(&img, &lat, BoundaryRule::Replicate, Engine::Direct).unwrap();
        let want = oracle_convolve(&img, &lat);
        assert!(out.max_abs_diff(&want).unwrap() < 1e-6);
    }

    #[test]
    fn direct_matches_oracle_on_random_instances() {
        for seed in 0..8u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(900 + seed);
            let w = rng.random_range(6..32);
            let h = rng.random_range(6..32);
            let gw = rng.random_range(1..4);
            let gh = rng.random_range(1..4);
            let k = 2 * rng.random_range(0..4) + 1;
            let ch = if rng.random::<bool>() { 1 } else { 3 };
            let kch = if rng.random::<bool>() { 1 } else { ch };
            let img = random_image(w, h, ch, seed * 7 + 1);
            let lat = random_lattice(gh, gw, k, kch, w, h, seed * 7 + 2, true);
            let out = sv_convolve(&img, &lat, BoundaryRule::Replicate, Engine::Direct).unwrap();
            let want = oracle_convolve(&img, &lat);
            assert!(
                out.max_abs_diff(&want).unwrap() < 1e-6,
                "seed {seed}: {w}x{h} grid {gh}x{gw} k {k}"
            );
        }
    }

    #[test]
    fn engines_agree() {
        for seed in 0..5u64 {
            let img = random_image(33, 29, 3, 100 + seed);
            let lat = random_lattice(3, 3, 7, 3, 33, 29, 200 + seed, true);
            let a = sv_convolve(&img, &lat, BoundaryRule::Replicate, Engine::Direct).unwrap();
            let b = sv_convolve(&img, &lat, BoundaryRule::Replicate, Engine::Tiled).unwrap();
            assert!(a.max_abs_diff(&b).unwrap() < 1e-5, "seed {seed}");
        }
    }

    #[test]
    fn linearity_in_the_image() {
        let lat = random_lattice(2, 2, 5, 1, 14, 11, 5, true);
        let u = random_image(14, 11, 1, 6);
        let v = random_image(14, 11, 1, 7);
        let (a, b) = (0.7f32, -1.3f32);
        let lhs = sv_convolve(
            &u.zip(&v, |x, y| a * x + b * y).unwrap(),
            &lat,
            BoundaryRule::Replicate,
            Engine::Direct,
        )
        .unwrap();
        let au = sv_convolve(&u, &lat, BoundaryRule::Replicate, Engine::Direct).unwrap();
        let av = sv_convolve(&v, &lat, BoundaryRule::Replicate, Engine::Direct).unwrap();
        let rhs = au.zip(&av, |x, y| a * x + b * y).unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-6);
    }

    #[test]
    fn degenerate_single_anchor_is_invariant() {
        let (w, h) = (15, 9);
        let img = random_image(w, h, 1, 8);
        let lat = random_lattice(1, 1, 5, 1, w, h, 9, true);
        let out = sv_convolve(&img, &lat, BoundaryRule::Replicate, Engine::Direct).unwrap();
        let want = oracle_convolve(&img, &lat);
        assert!(out.max_abs_diff(&want).unwrap() < 1e-6);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let img = random_image(8, 8, 1, 10);
        let lat = delta_lattice(1, 1, 3, 1, 9, 8).unwrap();
        assert!(matches!(
            sv_convolve(&img, &lat, BoundaryRule::Replicate, Engine::Direct),
            Err(Error::Shape(_))
        ));
        // 3-channel grid cannot act on 1-channel image
        let lat3 = delta_lattice(1, 1, 3, 3, 8, 8).unwrap();
        assert!(matches!(
            sv_convolve(&img, &lat3, BoundaryRule::Replicate, Engine::Direct),
            Err(Error::Shape(_))
        ));
    }
}
