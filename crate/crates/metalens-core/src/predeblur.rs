//! Coarse pre-deblurring via predicted deconvolution kernels.
//!
//! For every anchor of a calibrated blur grid, the regularized inverse
//! filter is computed in the frequency domain:
//!
//! ```text
//! g = IFFT( conj(H) / (|H|^2 + lambda) ),   lambda = scale * max(sigma^2, 1e-6)
//! ```
//!
//! with `H` the FFT of the zero-padded anchor kernel on a `P x P` grid
//! (`P` = next power of two >= `4 * kernel_k`). The inverse is cropped to
//! `k_out x k_out` around the origin and tapered by a raised-cosine
//! (Tukey, flat central half) window to suppress truncation ringing. The
//! resulting grid of kernels is applied through the same spatially varying
//! machinery as the forward blur.

use rustfft::num_complex::Complex;

use crate::boundary::BoundaryRule;
use crate::color::color_average;
use crate::convolve::{sv_convolve, Engine};
use crate::error::{Error, Result};
use crate::fft::{next_pow2, Fft2};
use crate::image::Image;
use crate::metrics::mse;
use crate::parallel::map_indexed;
use crate::psf::{KernelField, KernelLattice, PsfGrid};

/// Floor added below `sigma^2` so zeros of `H` never divide to infinity.
pub const LAMBDA_FLOOR: f64 = 1e-6;

/// Predicts per-anchor deconvolution kernels for a calibrated blur grid.
pub fn predict_kernels(
    grid: &PsfGrid,
    noise_sigma: f64,
    k_out: usize,
    lambda_scale: f64,
) -> Result<KernelField> {
    if k_out == 0 || k_out % 2 == 0 {
        return Err(Error::Parameter(format!(
            "output kernel side must be odd, got {k_out}"
        )));
    }
    if !(lambda_scale > 0.0) {
        return Err(Error::Parameter(format!(
            "lambda_scale must be > 0, got {lambda_scale}"
        )));
    }
    if !(noise_sigma >= 0.0) {
        return Err(Error::Parameter(format!(
            "noise sigma must be >= 0, got {noise_sigma}"
        )));
    }
    let lat = grid.lattice();
    let k = lat.kernel_k();
    let p = next_pow2((4 * k).max(k_out));
    let lambda = lambda_scale * (noise_sigma * noise_sigma).max(LAMBDA_FLOOR);
    let window = tukey_window(k_out);

    let jobs = lat.grid_h() * lat.grid_w() * lat.channels();
    let kernels_per: Vec<Vec<f32>> = map_indexed(jobs, |job| {
        let c = job % lat.channels();
        let a = job / lat.channels();
        let (gy, gx) = (a / lat.grid_w(), a % lat.grid_w());
        inverse_kernel(lat.kernel(gy, gx, c), k, p, lambda, k_out, &window)
    });

    let mut kernels = Vec::with_capacity(jobs * k_out * k_out);
    for job in kernels_per {
        kernels.extend(job);
    }
    KernelField::new(KernelLattice::new(
        lat.grid_h(),
        lat.grid_w(),
        k_out,
        lat.channels(),
        lat.image_w(),
        lat.image_h(),
        kernels,
    )?)
}

/// Regularized inverse of one anchor kernel; see module docs.
fn inverse_kernel(
    kernel: &[f32],
    k: usize,
    p: usize,
    lambda: f64,
    k_out: usize,
    window: &[f64],
) -> Vec<f32> {
    let spec = spectrum(kernel, k, p);
    let mut g = spec;
    for v in &mut g {
        let denom = v.norm_sqr() + lambda;
        *v = v.conj() / denom;
    }
    let plan = Fft2::new(p, p);
    plan.inverse(&mut g);
    crop_window(&g, p, k_out, window)
}

/// Zero-padded FFT of a centered kernel, with the center tap wrapped to
/// the origin so the inverse comes out centered as well.
fn spectrum(kernel: &[f32], k: usize, p: usize) -> Vec<Complex<f64>> {
    let r = (k - 1) as isize / 2;
    let mut buf = vec![Complex::new(0.0, 0.0); p * p];
    for dy in 0..k {
        let py = (dy as isize - r).rem_euclid(p as isize) as usize;
        for dx in 0..k {
            let px = (dx as isize - r).rem_euclid(p as isize) as usize;
            buf[py * p + px] = Complex::new(kernel[dy * k + dx] as f64, 0.0);
        }
    }
    Fft2::new(p, p).forward(&mut buf);
    buf
}

/// Crops `k_out x k_out` around the wrapped origin and applies the
/// separable window.
fn crop_window(g: &[Complex<f64>], p: usize, k_out: usize, window: &[f64]) -> Vec<f32> {
    let r = (k_out - 1) as isize / 2;
    let mut out = Vec::with_capacity(k_out * k_out);
    for oy in 0..k_out {
        let sy = (oy as isize - r).rem_euclid(p as isize) as usize;
        for ox in 0..k_out {
            let sx = (ox as isize - r).rem_euclid(p as isize) as usize;
            let v = g[sy * p + sx].re * window[oy] * window[ox];
            out.push(v as f32);
        }
    }
    out
}

/// Fraction of the half-support over which the taper is flat before the
/// cosine falloff begins.
const WINDOW_FLAT_FRACTION: f64 = 0.5;

/// Raised-cosine (Tukey) taper: unity over the central part of the
/// support, cosine falloff toward the edges.
fn tukey_window(k_out: usize) -> Vec<f64> {
    tukey_window_with(k_out, WINDOW_FLAT_FRACTION)
}

fn tukey_window_with(k_out: usize, flat: f64) -> Vec<f64> {
    let r = (k_out - 1) as f64 / 2.0;
    (0..k_out)
        .map(|i| {
            if r == 0.0 {
                return 1.0;
            }
            let rho = (i as f64 - r).abs() / (r + 1.0);
            if rho <= flat {
                1.0
            } else {
                0.5 * (1.0 + (std::f64::consts::PI * (rho - flat) / (1.0 - flat)).cos())
            }
        })
        .collect()
}

/// Applies a predicted kernel field; identical contract to the forward
/// spatially varying convolution.
pub fn apply_kernel_field(
    img: &Image,
    field: &KernelField,
    boundary: BoundaryRule,
    engine: Engine,
) -> Result<Image> {
    sv_convolve(img, field, boundary, engine)
}

/// Predict-then-apply convenience: the coarse deblurred estimate.
pub fn predeblur_image(
    y: &Image,
    grid: &PsfGrid,
    noise_sigma: f64,
    k_out: usize,
    lambda_scale: f64,
    boundary: BoundaryRule,
    engine: Engine,
) -> Result<Image> {
    let field = predict_kernels(grid, noise_sigma, k_out, lambda_scale)?;
    apply_kernel_field(y, &field, boundary, engine)
}

/// Sum of the two branch reconstruction MSEs. The structure branch is
/// monochrome, so it is compared against the channel-averaged target.
pub fn dkpn_loss(tilde_y_c: &Image, tilde_y_s: &Image, x: &Image) -> Result<f64> {
    if x.channels() != 3 || tilde_y_c.channels() != 3 {
        return Err(Error::Shape(
            "color branch and target must have 3 channels".into(),
        ));
    }
    if tilde_y_s.channels() != 1 {
        return Err(Error::Shape("structure branch must be monochrome".into()));
    }
    let gray = color_average(x)?;
    Ok(mse(tilde_y_c, x)? + mse(tilde_y_s, &gray)?)
}

/// Channel concatenation, deblurred planes first: the conditioning stack
/// handed to downstream encoders.
pub fn concat_condition(deblurred: &Image, original: &Image) -> Result<Image> {
    deblurred.concat_channels(original)
}
