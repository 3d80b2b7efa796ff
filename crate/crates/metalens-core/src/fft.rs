//! Thin 2D FFT wrapper over rustfft, double precision throughout.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse 2D FFT plans for one `h x w` buffer (row-major).
pub struct Fft2 {
    h: usize,
    w: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(h: usize, w: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            h,
            w,
            row_fwd: planner.plan_fft_forward(w),
            row_inv: planner.plan_fft_inverse(w),
            col_fwd: planner.plan_fft_forward(h),
            col_inv: planner.plan_fft_inverse(h),
        }
    }

    pub fn forward(&self, data: &mut [Complex<f64>]) {
        self.transform(data, false);
    }

    /// Inverse transform including the `1 / (h * w)` normalization.
    pub fn inverse(&self, data: &mut [Complex<f64>]) {
        self.transform(data, true);
        let scale = 1.0 / (self.h * self.w) as f64;
        for v in data {
            *v *= scale;
        }
    }

    fn transform(&self, data: &mut [Complex<f64>], inverse: bool) {
        assert_eq!(data.len(), self.h * self.w);
        let (row, col) = if inverse {
            (&self.row_inv, &self.col_inv)
        } else {
            (&self.row_fwd, &self.col_fwd)
        };
        row.process(data);
        let mut t = transpose(data, self.h, self.w);
        col.process(&mut t);
        let back = transpose(&t, self.w, self.h);
        data.copy_from_slice(&back);
    }
}

fn transpose(data: &[Complex<f64>], h: usize, w: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::new(0.0, 0.0); data.len()];
    for y in 0..h {
        for x in 0..w {
            out[x * h + y] = data[y * w + x];
        }
    }
    out
}

/// Next power of two >= `n`.
pub fn next_pow2(n: usize) -> usize {
    n.next_power_of_two()
}
