//! Frame alignment: estimates the projective transform taking the color
//! cue onto the structure image, then warps all color channels by it.
//!
//! The estimator is coarse-to-fine inverse-compositional Lucas-Kanade on
//! luminance, minimizing photometric MSE. The incremental warp is
//! parameterized around the image center for conditioning; template
//! gradients, Jacobians and the Gauss-Newton Hessian are precomputed once
//! per pyramid level.

use crate::boundary::BoundaryRule;
use crate::color::color_average;
use crate::error::{Error, Result};
use crate::image::Image;
use crate::pyramid::downsample2;
use crate::transform::Transform2D;
use crate::warp::{bilinear_replicate, warp};

/// Motion model for the estimated transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MotionModel {
    Translation,
    #[default]
    Affine,
    Homography,
}

impl MotionModel {
    fn param_count(self) -> usize {
        match self {
            MotionModel::Translation => 2,
            MotionModel::Affine => 6,
            MotionModel::Homography => 8,
        }
    }
}

impl std::str::FromStr for MotionModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "translation" => Ok(MotionModel::Translation),
            "affine" => Ok(MotionModel::Affine),
            "homography" => Ok(MotionModel::Homography),
            other => Err(Error::Parameter(format!(
                "unknown motion model {other:?} (expected translation, affine, or homography)"
            ))),
        }
    }
}

/// Estimator configuration.
#[derive(Debug, Clone)]
pub struct AlignConfig {
    pub model: MotionModel,
    pub pyramid_levels: usize,
    pub max_iters: usize,
    pub convergence_tol: f64,
}

impl Default for AlignConfig {
    fn default() -> Self {
        Self {
            model: MotionModel::Affine,
            pyramid_levels: 3,
            max_iters: 50,
            convergence_tol: 1e-6,
        }
    }
}

impl AlignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pyramid_levels == 0 {
            return Err(Error::Parameter("pyramid_levels must be >= 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::Parameter("convergence tolerance must be > 0".into()));
        }
        Ok(())
    }
}

/// Estimation outcome: the transform, whether the finest level converged
/// within the iteration budget, and the final interior MSE.
#[derive(Debug, Clone)]
pub struct EstimateResult {
    pub transform: Transform2D,
    pub converged: bool,
    pub final_mse: f64,
}

/// Estimates `H` such that `warp(moving, H)` photometrically matches
/// `fixed`. Multi-channel inputs are reduced to luminance first.
/// Non-convergence is reported through the flag, not as an error.
pub fn estimate_transform(
    moving: &Image,
    fixed: &Image,
    cfg: &AlignConfig,
) -> Result<EstimateResult> {
    cfg.validate()?;
    if !moving.same_dims(fixed) {
        return Err(Error::Shape(format!(
            "moving {}x{} vs fixed {}x{}",
            moving.width(),
            moving.height(),
            fixed.width(),
            fixed.height()
        )));
    }
    let moving_gray = to_gray(moving)?;
    let fixed_gray = to_gray(fixed)?;

    // build pyramids, clamping depth so the coarsest level keeps texture
    let mut levels = cfg.pyramid_levels;
    {
        let (mut w, mut h) = (fixed_gray.width(), fixed_gray.height());
        let mut usable = 1;
        while usable < levels && w.div_ceil(2) >= 12 && h.div_ceil(2) >= 12 {
            w = w.div_ceil(2);
            h = h.div_ceil(2);
            usable += 1;
        }
        levels = usable;
    }
    let mut fixed_pyr = vec![fixed_gray];
    let mut moving_pyr = vec![moving_gray];
    for l in 1..levels {
        fixed_pyr.push(downsample2(&fixed_pyr[l - 1]));
        moving_pyr.push(downsample2(&moving_pyr[l - 1]));
    }

    // coarse-to-fine refinement of g, which maps template (fixed)
    // coordinates into the moving image
    let mut g = identity3();
    let mut converged = false;
    let mut final_mse = f64::INFINITY;
    for l in (0..levels).rev() {
        if l < levels - 1 {
            g = level_up(&g);
        }
        let (g_new, conv, mse) = lk_level(
            &fixed_pyr[l],
            &moving_pyr[l],
            cfg.model,
            g,
            cfg.max_iters,
            cfg.convergence_tol,
        );
        g = g_new;
        if l == 0 {
            converged = conv;
            final_mse = mse;
        }
    }

    let g_t = Transform2D::new(g)?;
    Ok(EstimateResult {
        transform: g_t.inverse()?,
        converged,
        final_mse,
    })
}

/// Aligns the color cue to the structure image: estimates the transform
/// between `color_average(y_c)` and `y_s`, then warps every channel of
/// `y_c` by the same estimate.
pub fn align_color_to_structure(
    y_c: &Image,
    y_s: &Image,
    cfg: &AlignConfig,
) -> Result<(Image, EstimateResult)> {
    let est = estimate_transform(y_c, y_s, cfg)?;
    let aligned = warp(y_c, &est.transform, BoundaryRule::Replicate)?;
    Ok((aligned, est))
}

fn to_gray(img: &Image) -> Result<Image> {
    match img.channels() {
        1 => Ok(img.clone()),
        3 => color_average(img),
        c => Err(Error::Shape(format!(
            "alignment expects 1 or 3 channels, got {c}"
        ))),
    }
}

// --- inverse-compositional solver ------------------------------------------

type Mat3 = [[f64; 3]; 3];

fn identity3() -> Mat3 {
    [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
}

fn mul3(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j];
        }
    }
    out
}

fn inv3(m: &Mat3) -> Option<Mat3> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-15 {
        return None;
    }
    let adj = [
        [
            m[1][1] * m[2][2] - m[1][2] * m[2][1],
            m[0][2] * m[2][1] - m[0][1] * m[2][2],
            m[0][1] * m[1][2] - m[0][2] * m[1][1],
        ],
        [
            m[1][2] * m[2][0] - m[1][0] * m[2][2],
            m[0][0] * m[2][2] - m[0][2] * m[2][0],
            m[0][2] * m[1][0] - m[0][0] * m[1][2],
        ],
        [
            m[1][0] * m[2][1] - m[1][1] * m[2][0],
            m[0][1] * m[2][0] - m[0][0] * m[2][1],
            m[0][0] * m[1][1] - m[0][1] * m[1][0],
        ],
    ];
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = adj[i][j] / det;
        }
    }
    Some(out)
}

/// Rescales a transform estimated at level `l+1` to level `l`
/// (coordinates double): `D * g * D^-1` with `D = diag(2, 2, 1)`.
fn level_up(g: &Mat3) -> Mat3 {
    let d = [[2.0, 0.0, 0.0], [0.0, 2.0, 0.0], [0.0, 0.0, 1.0]];
    let dinv = [[0.5, 0.0, 0.0], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0]];
    mul3(&mul3(&d, g), &dinv)
}

/// Incremental warp for parameter step `dp`, in coordinates centered at
/// `(cx, cy)`, converted back to image coordinates.
fn incremental_warp(model: MotionModel, dp: &[f64], cx: f64, cy: f64) -> Mat3 {
    let wc: Mat3 = match model {
        MotionModel::Translation => [
            [1.0, 0.0, dp[0]],
            [0.0, 1.0, dp[1]],
            [0.0, 0.0, 1.0],
        ],
        MotionModel::Affine => [
            [1.0 + dp[0], dp[2], dp[4]],
            [dp[1], 1.0 + dp[3], dp[5]],
            [0.0, 0.0, 1.0],
        ],
        MotionModel::Homography => [
            [1.0 + dp[0], dp[2], dp[4]],
            [dp[1], 1.0 + dp[3], dp[5]],
            [dp[6], dp[7], 1.0],
        ],
    };
    // conjugate by the centering translation
    let c = [[1.0, 0.0, cx], [0.0, 1.0, cy], [0.0, 0.0, 1.0]];
    let cinv = [[1.0, 0.0, -cx], [0.0, 1.0, -cy], [0.0, 0.0, 1.0]];
    mul3(&mul3(&c, &wc), &cinv)
}

/// Steepest-descent row for one template pixel at centered coordinates.
fn jacobian_row(model: MotionModel, x: f64, y: f64, tx: f64, ty: f64, out: &mut [f64]) {
    match model {
        MotionModel::Translation => {
            out[0] = tx;
            out[1] = ty;
        }
        MotionModel::Affine => {
            out[0] = x * tx;
            out[1] = x * ty;
            out[2] = y * tx;
            out[3] = y * ty;
            out[4] = tx;
            out[5] = ty;
        }
        MotionModel::Homography => {
            out[0] = x * tx;
            out[1] = x * ty;
            out[2] = y * tx;
            out[3] = y * ty;
            out[4] = tx;
            out[5] = ty;
            out[6] = -x * x * tx - x * y * ty;
            out[7] = -x * y * tx - y * y * ty;
        }
    }
}

/// Gaussian elimination with partial pivoting for the small normal system.
fn solve_system(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Some(x)
}

/// One pyramid level of inverse-compositional refinement. Returns the
/// updated transform, whether the step norm dropped below `tol`, and the
/// MSE of the best iterate (which is what gets returned).
fn lk_level(
    template: &Image,
    moving: &Image,
    model: MotionModel,
    g0: Mat3,
    max_iters: usize,
    tol: f64,
) -> (Mat3, bool, f64) {
    let (w, h) = (template.width(), template.height());
    if w < 5 || h < 5 {
        return (g0, false, f64::INFINITY);
    }
    let n = model.param_count();
    let t_plane = template.plane(0);
    let m_plane = moving.plane(0);
    let cx = (w - 1) as f64 / 2.0;
    let cy = (h - 1) as f64 / 2.0;

    // precompute steepest-descent rows and the Gauss-Newton Hessian over
    // the interior; the border band is excluded because replicate padding
    // flattens warped-out content there and biases the residual
    let margin = 2.max(w.min(h) / 12);
    let mut rows: Vec<(usize, usize, Vec<f64>)> = Vec::with_capacity((w - 2) * (h - 2));
    let mut hess = vec![vec![0.0f64; n]; n];
    let mut jrow = vec![0.0f64; n];
    for y in margin..h - margin {
        for x in margin..w - margin {
            let tx = (t_plane[y * w + x + 1] as f64 - t_plane[y * w + x - 1] as f64) / 2.0;
            let ty = (t_plane[(y + 1) * w + x] as f64 - t_plane[(y - 1) * w + x] as f64) / 2.0;
            jacobian_row(model, x as f64 - cx, y as f64 - cy, tx, ty, &mut jrow);
            for i in 0..n {
                for j in i..n {
                    hess[i][j] += jrow[i] * jrow[j];
                }
            }
            rows.push((x, y, jrow.clone()));
        }
    }
    for i in 0..n {
        for j in 0..i {
            hess[i][j] = hess[j][i];
        }
        // tiny Tikhonov floor so a texture-poor level degrades gracefully
        hess[i][i] += 1e-12 * (1.0 + hess[i][i]);
    }

    let residual_mse = |g: &Mat3| -> f64 {
        let mut sum = 0.0f64;
        let mut count = 0usize;
        for &(x, y, _) in &rows {
            if let Some((u, v)) = map_point(g, x as f64, y as f64, w, h) {
                let e = bilinear_replicate(m_plane, w, h, u, v) as f64 - t_plane[y * w + x] as f64;
                sum += e * e;
                count += 1;
            }
        }
        if count == 0 {
            f64::INFINITY
        } else {
            sum / count as f64
        }
    };

    let mut g = g0;
    let mut best_g = g0;
    let mut best_mse = residual_mse(&g);
    let mut converged = false;
    for _ in 0..max_iters {
        // accumulate J^T e over valid pixels
        let mut b = vec![0.0f64; n];
        let mut valid = 0usize;
        for &(x, y, ref j) in &rows {
            if let Some((u, v)) = map_point(&g, x as f64, y as f64, w, h) {
                let e = bilinear_replicate(m_plane, w, h, u, v) as f64 - t_plane[y * w + x] as f64;
                for i in 0..n {
                    b[i] += j[i] * e;
                }
                valid += 1;
            }
        }
        if valid < n * 4 {
            break;
        }
        let Some(dp) = solve_system(hess.clone(), b) else {
            break;
        };
        let dw = incremental_warp(model, &dp, cx, cy);
        let Some(dw_inv) = inv3(&dw) else {
            break;
        };
        g = mul3(&g, &dw_inv);
        let mse = residual_mse(&g);
        if mse < best_mse {
            best_mse = mse;
            best_g = g;
        }
        let step: f64 = dp.iter().map(|v| v * v).sum::<f64>().sqrt();
        if step < tol {
            converged = true;
            break;
        }
    }
    (best_g, converged, best_mse)
}

/// Maps a template point through `g`, returning the source coordinates
/// only when bilinear sampling needs no extrapolation.
#[inline]
fn map_point(g: &Mat3, x: f64, y: f64, w: usize, h: usize) -> Option<(f64, f64)> {
    let d = g[2][0] * x + g[2][1] * y + g[2][2];
    let u = (g[0][0] * x + g[0][1] * y + g[0][2]) / d;
    let v = (g[1][0] * x + g[1][1] * y + g[1][2]) / d;
    if u >= 0.0 && u <= (w - 1) as f64 && v >= 0.0 && v <= (h - 1) as f64 {
        Some((u, v))
    } else {
        None
    }
}
