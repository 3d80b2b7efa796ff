//! Anchor grids of convolution kernels.
//!
//! A spatially varying blur is discretized as a uniform grid of anchor
//! kernels calibrated for one image plane. Anchor `(gy, gx)` sits at the
//! center of its grid cell:
//!
//! ```text
//! y = (gy + 0.5) * image_h / grid_h - 0.5
//! x = (gx + 0.5) * image_w / grid_w - 0.5
//! ```
//!
//! The kernel acting at an arbitrary pixel is the bilinear interpolation of
//! the (up to) four surrounding anchors, clamped at the grid border.
//!
//! [`PsfGrid`] holds measured point-spread functions (non-negative, unit
//! mass); [`KernelField`] holds predicted deconvolution kernels, which are
//! unconstrained reals. Both share the same lattice layout.

use crate::error::{Error, Result};

/// Kernel sums may drift from exactly 1 by this much before a grid is
/// rejected as miscalibrated (covers storage quantization of f32 files).
pub const PSF_SUM_LOAD_TOL: f64 = 1e-3;

/// Freshly generated or renormalized grids meet this tighter bound.
pub const PSF_SUM_STRICT_TOL: f64 = 1e-6;

/// Shared storage for anchor-kernel grids: metadata plus a flat kernel
/// array laid out `[gy][gx][c][ky][kx]`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelLattice {
    grid_h: usize,
    grid_w: usize,
    kernel_k: usize,
    channels: usize,
    image_w: usize,
    image_h: usize,
    kernels: Vec<f32>,
}

impl KernelLattice {
    pub fn new(
        grid_h: usize,
        grid_w: usize,
        kernel_k: usize,
        channels: usize,
        image_w: usize,
        image_h: usize,
        kernels: Vec<f32>,
    ) -> Result<Self> {
        if grid_h == 0 || grid_w == 0 {
            return Err(Error::Size("anchor grid must be at least 1x1".into()));
        }
        if kernel_k == 0 || kernel_k % 2 == 0 {
            return Err(Error::Format(format!(
                "kernel side must be odd and positive, got {kernel_k}"
            )));
        }
        if channels == 0 {
            return Err(Error::Shape("kernel grid needs at least one channel".into()));
        }
        if image_w == 0 || image_h == 0 {
            return Err(Error::Size("calibrated image plane must be non-empty".into()));
        }
        let expected = grid_h * grid_w * channels * kernel_k * kernel_k;
        if kernels.len() != expected {
            return Err(Error::Shape(format!(
                "kernel array length {} does not match {}x{}x{}x{}x{} = {expected}",
                kernels.len(),
                grid_h,
                grid_w,
                channels,
                kernel_k,
                kernel_k
            )));
        }
        if kernels.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("non-finite kernel entry".into()));
        }
        Ok(Self {
            grid_h,
            grid_w,
            kernel_k,
            channels,
            image_w,
            image_h,
            kernels,
        })
    }

    pub fn grid_h(&self) -> usize {
        self.grid_h
    }

    pub fn grid_w(&self) -> usize {
        self.grid_w
    }

    pub fn kernel_k(&self) -> usize {
        self.kernel_k
    }

    /// Kernel half-width `(kernel_k - 1) / 2`.
    pub fn radius(&self) -> usize {
        (self.kernel_k - 1) / 2
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn image_w(&self) -> usize {
        self.image_w
    }

    pub fn image_h(&self) -> usize {
        self.image_h
    }

    pub fn kernels(&self) -> &[f32] {
        &self.kernels
    }

    #[inline]
    fn kernel_offset(&self, gy: usize, gx: usize, c: usize) -> usize {
        (((gy * self.grid_w) + gx) * self.channels + c) * self.kernel_k * self.kernel_k
    }

    /// One anchor kernel as a `kernel_k * kernel_k` row-major slice.
    #[inline]
    pub fn kernel(&self, gy: usize, gx: usize, c: usize) -> &[f32] {
        let o = self.kernel_offset(gy, gx, c);
        &self.kernels[o..o + self.kernel_k * self.kernel_k]
    }

    pub fn kernel_mut(&mut self, gy: usize, gx: usize, c: usize) -> &mut [f32] {
        let o = self.kernel_offset(gy, gx, c);
        let k2 = self.kernel_k * self.kernel_k;
        &mut self.kernels[o..o + k2]
    }

    /// Image-plane position `(y, x)` of an anchor (cell center).
    pub fn anchor_pos(&self, gy: usize, gx: usize) -> (f64, f64) {
        let y = (gy as f64 + 0.5) * self.image_h as f64 / self.grid_h as f64 - 0.5;
        let x = (gx as f64 + 0.5) * self.image_w as f64 / self.grid_w as f64 - 0.5;
        (y, x)
    }

    /// Continuous anchor-grid coordinates of a pixel, clamped into the
    /// anchor hull so border pixels extend the nearest anchor row/column.
    #[inline]
    pub fn grid_coords(&self, x: usize, y: usize) -> (f64, f64) {
        let gy = (y as f64 + 0.5) * self.grid_h as f64 / self.image_h as f64 - 0.5;
        let gx = (x as f64 + 0.5) * self.grid_w as f64 / self.image_w as f64 - 0.5;
        (
            gy.clamp(0.0, (self.grid_h - 1) as f64),
            gx.clamp(0.0, (self.grid_w - 1) as f64),
        )
    }

    /// The up-to-four anchors surrounding pixel `(x, y)` with their bilinear
    /// weights. Always returns four entries; degenerate corners repeat an
    /// anchor with weight 0.
    #[inline]
    pub fn anchor_weights(&self, x: usize, y: usize) -> [(usize, usize, f64); 4] {
        let (gy, gx) = self.grid_coords(x, y);
        let y0 = gy.floor() as usize;
        let x0 = gx.floor() as usize;
        let y1 = (y0 + 1).min(self.grid_h - 1);
        let x1 = (x0 + 1).min(self.grid_w - 1);
        let ty = gy - y0 as f64;
        let tx = gx - x0 as f64;
        [
            (y0, x0, (1.0 - ty) * (1.0 - tx)),
            (y0, x1, (1.0 - ty) * tx),
            (y1, x0, ty * (1.0 - tx)),
            (y1, x1, ty * tx),
        ]
    }

    /// Interpolates the four surrounding anchor kernels of channel `c` into
    /// `out` (length `kernel_k^2`), accumulating in f64.
    pub fn interpolate_kernel(&self, x: usize, y: usize, c: usize, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.kernel_k * self.kernel_k);
        out.fill(0.0);
        for (gy, gx, w) in self.anchor_weights(x, y) {
            if w == 0.0 {
                continue;
            }
            let k = self.kernel(gy, gx, c);
            for (o, &v) in out.iter_mut().zip(k) {
                *o += w * v as f64;
            }
        }
    }
}

/// Calibrated grid of point-spread functions: non-negative kernels with
/// unit mass (energy conservation).
#[derive(Debug, Clone, PartialEq)]
pub struct PsfGrid(KernelLattice);

impl PsfGrid {
    /// Validates non-negativity and kernel mass against `PSF_SUM_LOAD_TOL`.
    pub fn new(lattice: KernelLattice) -> Result<Self> {
        Self::with_tolerance(lattice, PSF_SUM_LOAD_TOL)
    }

    pub fn with_tolerance(lattice: KernelLattice, sum_tol: f64) -> Result<Self> {
        if let Some(i) = lattice.kernels.iter().position(|&v| v < 0.0) {
            return Err(Error::Calibration(format!(
                "negative kernel entry at flat index {i}"
            )));
        }
        for gy in 0..lattice.grid_h {
            for gx in 0..lattice.grid_w {
                for c in 0..lattice.channels {
                    let sum: f64 = lattice.kernel(gy, gx, c).iter().map(|&v| v as f64).sum();
                    if (sum - 1.0).abs() > sum_tol {
                        return Err(Error::Calibration(format!(
                            "kernel ({gy},{gx}) channel {c} sums to {sum}, expected 1"
                        )));
                    }
                }
            }
        }
        Ok(Self(lattice))
    }

    /// Divides every kernel by its own sum, then validates at the strict
    /// tolerance. Zero-mass kernels cannot be rescued.
    pub fn renormalized(mut lattice: KernelLattice) -> Result<Self> {
        if let Some(i) = lattice.kernels.iter().position(|&v| v < 0.0) {
            return Err(Error::Calibration(format!(
                "negative kernel entry at flat index {i}"
            )));
        }
        for gy in 0..lattice.grid_h {
            for gx in 0..lattice.grid_w {
                for c in 0..lattice.channels {
                    let k = lattice.kernel_mut(gy, gx, c);
                    let sum: f64 = k.iter().map(|&v| v as f64).sum();
                    if sum <= 0.0 {
                        return Err(Error::Calibration(format!(
                            "kernel ({gy},{gx}) channel {c} has zero mass"
                        )));
                    }
                    for v in k {
                        *v = (*v as f64 / sum) as f32;
                    }
                }
            }
        }
        Self::with_tolerance(lattice, PSF_SUM_STRICT_TOL)
    }

    pub fn lattice(&self) -> &KernelLattice {
        &self.0
    }

    pub fn into_lattice(self) -> KernelLattice {
        self.0
    }
}

/// Grid of predicted deconvolution kernels: same layout as [`PsfGrid`] but
/// entries are unconstrained (negative lobes are expected).
#[derive(Debug, Clone, PartialEq)]
pub struct KernelField(KernelLattice);

impl KernelField {
    pub fn new(lattice: KernelLattice) -> Result<Self> {
        // finiteness is already enforced by the lattice constructor
        Ok(Self(lattice))
    }

    pub fn lattice(&self) -> &KernelLattice {
        &self.0
    }

    pub fn into_lattice(self) -> KernelLattice {
        self.0
    }
}

/// Anything that exposes an anchor-kernel lattice to the convolution
/// engines.
pub trait KernelSource {
    fn lattice(&self) -> &KernelLattice;
}

impl KernelSource for PsfGrid {
    fn lattice(&self) -> &KernelLattice {
        &self.0
    }
}

impl KernelSource for KernelField {
    fn lattice(&self) -> &KernelLattice {
        &self.0
    }
}

impl KernelSource for KernelLattice {
    fn lattice(&self) -> &KernelLattice {
        self
    }
}

/// Builds a lattice where every anchor kernel is a centered delta.
pub fn delta_lattice(
    grid_h: usize,
    grid_w: usize,
    kernel_k: usize,
    channels: usize,
    image_w: usize,
    image_h: usize,
) -> Result<KernelLattice> {
    let k2 = kernel_k * kernel_k;
    let mut kernels = vec![0.0f32; grid_h * grid_w * channels * k2];
    let center = (kernel_k / 2) * kernel_k + kernel_k / 2;
    for a in 0..grid_h * grid_w * channels {
        kernels[a * k2 + center] = 1.0;
    }
    KernelLattice::new(grid_h, grid_w, kernel_k, channels, image_w, image_h, kernels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn box_lattice(grid_h: usize, grid_w: usize, k: usize) -> KernelLattice {
        let k2 = k * k;
        let v = 1.0 / k2 as f32;
        KernelLattice::new(
            grid_h,
            grid_w,
            k,
            1,
            16,
            16,
            vec![v; grid_h * grid_w * k2],
        )
        .unwrap()
    }

    #[test]
    fn rejects_even_kernel() {
        let err = KernelLattice::new(1, 1, 4, 1, 8, 8, vec![0.0; 16]).unwrap_err();
        assert!(matches!(err, Error::Format(_)));
    }

    #[test]
    fn anchor_positions_are_cell_centers() {
        let lat = box_lattice(2, 4, 3);
        // image 16x16, grid 2x4: cell height 8, cell width 4
        assert_eq!(lat.anchor_pos(0, 0), (3.5, 1.5));
        assert_eq!(lat.anchor_pos(1, 3), (11.5, 13.5));
    }

    #[test]
    fn anchor_weights_sum_to_one() {
        let lat = box_lattice(3, 3, 3);
        for y in 0..16 {
            for x in 0..16 {
                let s: f64 = lat.anchor_weights(x, y).iter().map(|&(_, _, w)| w).sum();
                assert!((s - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn single_anchor_weight_is_unity() {
        let lat = box_lattice(1, 1, 3);
        let w = lat.anchor_weights(7, 3);
        assert_eq!(w[0].2, 1.0);
        assert_eq!(w[1].2 + w[2].2 + w[3].2, 0.0);
    }

    #[test]
    fn psf_grid_rejects_bad_mass() {
        let mut lat = box_lattice(1, 1, 3);
        for v in lat.kernel_mut(0, 0, 0) {
            *v *= 0.5;
        }
        assert!(matches!(
            PsfGrid::new(lat.clone()),
            Err(Error::Calibration(_))
        ));
        let grid = PsfGrid::renormalized(lat).unwrap();
        let sum: f64 = grid.lattice().kernel(0, 0, 0).iter().map(|&v| v as f64).sum();
        assert!((sum - 1.0).abs() < PSF_SUM_STRICT_TOL);
    }

    #[test]
    fn psf_grid_rejects_negative_entries() {
        let mut lat = box_lattice(1, 1, 3);
        lat.kernel_mut(0, 0, 0)[0] = -0.1;
        assert!(matches!(PsfGrid::new(lat), Err(Error::Calibration(_))));
    }

    #[test]
    fn interpolation_blends_anchors() {
        // two anchors along x with distinct delta kernels
        let k = 3;
        let mut kernels = vec![0.0f32; 2 * k * k];
        kernels[0] = 1.0; // anchor (0,0): top-left tap
        kernels[k * k + k * k - 1] = 1.0; // anchor (0,1): bottom-right tap
        let lat = KernelLattice::new(1, 2, k, 1, 16, 4, kernels).unwrap();
        let mut out = vec![0.0f64; k * k];
        // anchor centers at x = 3.5 and x = 11.5; midpoint x = 7 gives
        // grid coordinate (7 + 0.5) * 2 / 16 - 0.5 = 0.4375
        lat.interpolate_kernel(7, 0, 0, &mut out);
        assert!((out[0] - 0.5625).abs() < 1e-12);
        assert!((out[k * k - 1] - 0.4375).abs() < 1e-12);
    }
}
