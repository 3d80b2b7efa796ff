//! Synthetic calibration data: test scenes and parametric blur grids.
//!
//! Real calibration measures the point-spread function at a lattice of
//! field positions; the generators here produce the same file contents
//! parametrically. The `gaussian-ramp` family grows an isotropic Gaussian
//! width linearly from the field center to the edge; `astigmatic-ramp`
//! additionally stretches the kernel along the tangential direction with
//! eccentricity growing toward the edge, which mimics off-axis
//! aberration. A `delta` grid is the identity, useful for smoke tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::psf::{KernelLattice, PsfGrid};
use crate::pyramid::blur5;

/// Which kernel family to generate.
#[derive(Debug, Clone, PartialEq)]
pub enum PsfKind {
    Delta,
    GaussianRamp {
        sigma_center: f64,
        sigma_edge: f64,
    },
    AstigmaticRamp {
        sigma_center: f64,
        sigma_edge: f64,
        eccentricity: f64,
    },
}

/// Geometry of the grid to generate. `chroma_scale` multiplies the base
/// sigma per channel (empty means 1.0 for every channel).
#[derive(Debug, Clone, PartialEq)]
pub struct PsfGridSpec {
    pub grid_h: usize,
    pub grid_w: usize,
    pub kernel_k: usize,
    pub channels: usize,
    pub image_w: usize,
    pub image_h: usize,
    pub chroma_scale: Vec<f64>,
}

impl PsfGridSpec {
    fn chroma(&self, c: usize) -> f64 {
        if self.chroma_scale.is_empty() {
            1.0
        } else {
            self.chroma_scale[c]
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.chroma_scale.is_empty() && self.chroma_scale.len() != self.channels {
            return Err(Error::Parameter(format!(
                "{} chroma scales for {} channels",
                self.chroma_scale.len(),
                self.channels
            )));
        }
        if self.chroma_scale.iter().any(|&s| !(s > 0.0)) {
            return Err(Error::Parameter("chroma scales must be > 0".into()));
        }
        Ok(())
    }
}

/// Generates a calibration grid of the requested kind.
pub fn make_psf_grid(kind: &PsfKind, spec: &PsfGridSpec) -> Result<PsfGrid> {
    spec.validate()?;
    match kind {
        PsfKind::Delta => {
            let lat = crate::psf::delta_lattice(
                spec.grid_h,
                spec.grid_w,
                spec.kernel_k,
                spec.channels,
                spec.image_w,
                spec.image_h,
            )?;
            PsfGrid::new(lat)
        }
        PsfKind::GaussianRamp {
            sigma_center,
            sigma_edge,
        } => {
            check_sigmas(*sigma_center, *sigma_edge)?;
            generate(spec, |rf, _dir, c, spec_ref| {
                let sigma = ramp(*sigma_center, *sigma_edge, rf) * spec_ref.chroma(c);
                (sigma, sigma, (1.0, 0.0))
            })
        }
        PsfKind::AstigmaticRamp {
            sigma_center,
            sigma_edge,
            eccentricity,
        } => {
            check_sigmas(*sigma_center, *sigma_edge)?;
            if !(*eccentricity >= 0.0) {
                return Err(Error::Parameter(format!(
                    "eccentricity must be >= 0, got {eccentricity}"
                )));
            }
            generate(spec, |rf, dir, c, spec_ref| {
                let sigma = ramp(*sigma_center, *sigma_edge, rf) * spec_ref.chroma(c);
                // axis ratio grows with field radius; isotropic at center
                let rho = 1.0 + eccentricity * rf;
                let sigma_radial = sigma / rho.sqrt();
                let sigma_tangential = sigma * rho.sqrt();
                (sigma_radial, sigma_tangential, dir)
            })
        }
    }
}

fn check_sigmas(center: f64, edge: f64) -> Result<()> {
    if !(center > 0.0) || !(edge > 0.0) {
        return Err(Error::Parameter(format!(
            "sigmas must be > 0, got center {center}, edge {edge}"
        )));
    }
    Ok(())
}

fn ramp(center: f64, edge: f64, rf: f64) -> f64 {
    center + (edge - center) * rf
}

/// Shared generator: `f(field_radius_fraction, radial_unit_dir, channel)`
/// returns `(sigma_radial, sigma_tangential, radial_dir)` of an anchored
/// anisotropic Gaussian; kernels are normalized to unit mass.
fn generate(
    spec: &PsfGridSpec,
    f: impl Fn(f64, (f64, f64), usize, &PsfGridSpec) -> (f64, f64, (f64, f64)),
) -> Result<PsfGrid> {
    let k = spec.kernel_k;
    let r = (k as f64 - 1.0) / 2.0;
    let cy = (spec.image_h as f64 - 1.0) / 2.0;
    let cx = (spec.image_w as f64 - 1.0) / 2.0;

    // probe lattice geometry for anchor positions and the max field radius
    let probe = crate::psf::delta_lattice(
        spec.grid_h,
        spec.grid_w,
        spec.kernel_k,
        1,
        spec.image_w,
        spec.image_h,
    )?;
    let mut r_max = 0.0f64;
    for gy in 0..spec.grid_h {
        for gx in 0..spec.grid_w {
            let (ay, ax) = probe.anchor_pos(gy, gx);
            r_max = r_max.max(((ay - cy).powi(2) + (ax - cx).powi(2)).sqrt());
        }
    }

    let mut kernels = Vec::with_capacity(spec.grid_h * spec.grid_w * spec.channels * k * k);
    for gy in 0..spec.grid_h {
        for gx in 0..spec.grid_w {
            let (ay, ax) = probe.anchor_pos(gy, gx);
            let (dy, dx) = (ay - cy, ax - cx);
            let dist = (dy * dy + dx * dx).sqrt();
            let rf = if r_max > 0.0 { dist / r_max } else { 0.0 };
            // radial unit direction; arbitrary at the exact center where
            // the generators are isotropic anyway
            let dir = if dist > 1e-12 {
                (dy / dist, dx / dist)
            } else {
                (1.0, 0.0)
            };
            for c in 0..spec.channels {
                let (sig_r, sig_t, dir) = f(rf, dir, c, spec);
                let mut kernel = vec![0.0f64; k * k];
                let mut sum = 0.0f64;
                for ky in 0..k {
                    for kx in 0..k {
                        let py = ky as f64 - r;
                        let px = kx as f64 - r;
                        // decompose the offset into radial/tangential parts
                        let radial = py * dir.0 + px * dir.1;
                        let tangential = -py * dir.1 + px * dir.0;
                        let q = (radial / sig_r).powi(2) + (tangential / sig_t).powi(2);
                        let v = (-0.5 * q).exp();
                        kernel[ky * k + kx] = v;
                        sum += v;
                    }
                }
                kernels.extend(kernel.into_iter().map(|v| (v / sum) as f32));
            }
        }
    }
    PsfGrid::with_tolerance(
        KernelLattice::new(
            spec.grid_h,
            spec.grid_w,
            spec.kernel_k,
            spec.channels,
            spec.image_w,
            spec.image_h,
            kernels,
        )?,
        crate::psf::PSF_SUM_STRICT_TOL,
    )
}

/// Deterministic textured color scene: low-frequency color washes, smooth
/// random blobs, hard-edged shapes and a fine-texture band. Values stay
/// inside `[0.02, 0.98]`.
pub fn test_scene(width: usize, height: usize, seed: u64) -> Image {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let blobs = {
        let noise = Image::from_fn(width, height, 3, |_, _, _| rng.random::<f32>());
        blur5(&blur5(&noise))
    };
    let (wf, hf) = (width as f32, height as f32);
    // a few deterministic hard-edged shapes, scaled to the frame
    let disk = |x: f32, y: f32, cx: f32, cy: f32, rad: f32| -> bool {
        (x - cx).powi(2) + (y - cy).powi(2) < rad * rad
    };
    let img = Image::from_fn(width, height, 3, |x, y, c| {
        let (xf, yf) = (x as f32, y as f32);
        let phase = c as f32 * 2.1;
        // smooth color wash
        let wash = 0.45
            + 0.18 * (2.0 * std::f32::consts::PI * xf / wf + phase).sin()
            + 0.12 * (2.0 * std::f32::consts::PI * yf / hf - 0.7 * phase).cos();
        // smooth blobs
        let blob = 0.35 * (blobs.get(x, y, c) - 0.5);
        // hard shapes with channel-distinct albedo
        let mut shape = 0.0f32;
        if disk(xf, yf, 0.3 * wf, 0.35 * hf, 0.14 * wf.min(hf)) {
            shape += [0.32, -0.18, -0.1][c];
        }
        if disk(xf, yf, 0.72 * wf, 0.62 * hf, 0.1 * wf.min(hf)) {
            shape += [-0.2, 0.28, 0.05][c];
        }
        let in_bar = xf > 0.55 * wf && xf < 0.62 * wf && yf > 0.1 * hf && yf < 0.9 * hf;
        if in_bar {
            shape += [0.1, 0.12, 0.3][c];
        }
        // fine texture band in the lower third
        let tex = if yf > 0.7 * hf {
            0.1 * (0.9 * xf).sin() * (0.8 * yf).cos()
        } else {
            0.0
        };
        (wash + blob + shape + tex).clamp(0.02, 0.98)
    });
    img
}
