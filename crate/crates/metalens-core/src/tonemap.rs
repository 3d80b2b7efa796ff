//! Per-channel tone mapping: the domain-matching step that brings each
//! measurement branch into a common intensity domain before fusion.
//!
//! A map is `gain * max(v, 0)^gamma + bias` per channel. Fitting picks
//! `gamma` from a small grid, solves `gain`/`bias` in closed form so the
//! first two moments match the reference, and keeps the gamma whose
//! mapped skewness is closest to the reference skewness (gain is
//! positive, so skewness is invariant under the affine part and the
//! third moment is what the gamma actually controls).

use crate::error::{Error, Result};
use crate::image::{ChannelStats, Image};

/// Default gamma search grid.
pub const DEFAULT_GAMMA_GRID: [f64; 6] = [0.5, 0.75, 1.0, 1.5, 2.0, 2.2];

/// Per-channel tone-map parameters; `gain` and `gamma` are strictly
/// positive.
#[derive(Debug, Clone, PartialEq)]
pub struct ToneMapParams {
    pub gain: Vec<f64>,
    pub bias: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl ToneMapParams {
    pub fn identity(channels: usize) -> Self {
        Self {
            gain: vec![1.0; channels],
            bias: vec![0.0; channels],
            gamma: vec![1.0; channels],
        }
    }

    pub fn channels(&self) -> usize {
        self.gain.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.gain.len() != self.bias.len() || self.gain.len() != self.gamma.len() {
            return Err(Error::Parameter(
                "tone-map parameter vectors differ in length".into(),
            ));
        }
        for (i, (&g, &gm)) in self.gain.iter().zip(&self.gamma).enumerate() {
            if !(g > 0.0) || !(gm > 0.0) {
                return Err(Error::Parameter(format!(
                    "channel {i}: gain and gamma must be > 0 (gain {g}, gamma {gm})"
                )));
            }
        }
        if self.bias.iter().any(|b| !b.is_finite()) {
            return Err(Error::Parameter("non-finite tone-map bias".into()));
        }
        Ok(())
    }
}

/// Fits per-channel tone maps so `apply_tone_map(src, params)` matches the
/// reference moments. `ref_stats` must have one entry per source channel.
pub fn fit_tone_map(
    src: &Image,
    ref_stats: &[ChannelStats],
    gamma_grid: &[f64],
) -> Result<ToneMapParams> {
    if ref_stats.len() != src.channels() {
        return Err(Error::Shape(format!(
            "{} reference stats for {} channels",
            ref_stats.len(),
            src.channels()
        )));
    }
    if gamma_grid.is_empty() {
        return Err(Error::Parameter("gamma grid is empty".into()));
    }
    if gamma_grid.iter().any(|&g| !(g > 0.0)) {
        return Err(Error::Parameter("gamma grid entries must be > 0".into()));
    }
    let mut params = ToneMapParams {
        gain: Vec::new(),
        bias: Vec::new(),
        gamma: Vec::new(),
    };
    for (c, target) in ref_stats.iter().enumerate() {
        if !(target.std > 0.0) {
            return Err(Error::Degenerate(format!(
                "reference channel {c} has zero spread"
            )));
        }
        let plane = src.plane(c);
        let src_std = src.channel_stats(c).std;
        if src_std <= 1e-8 {
            return Err(Error::Degenerate(format!(
                "source channel {c} is constant (std {src_std:e})"
            )));
        }
        let mut best: Option<(f64, f64, f64, f64)> = None; // (mismatch, gamma, gain, bias)
        for &gamma in gamma_grid {
            let (mean, std, skew) = powered_stats(plane, gamma);
            if std <= 1e-12 {
                continue;
            }
            let gain = target.std / std;
            let bias = target.mean - gain * mean;
            // positive gain leaves skewness untouched
            let mismatch = (skew - target.skew).abs();
            if best.map(|(m, ..)| mismatch < m).unwrap_or(true) {
                best = Some((mismatch, gamma, gain, bias));
            }
        }
        let (_, gamma, gain, bias) = best.ok_or_else(|| {
            Error::Degenerate(format!("no usable gamma for channel {c}"))
        })?;
        params.gain.push(gain);
        params.bias.push(bias);
        params.gamma.push(gamma);
    }
    params.validate()?;
    Ok(params)
}

/// Applies `gain * max(v, 0)^gamma + bias` per channel.
pub fn apply_tone_map(img: &Image, params: &ToneMapParams) -> Result<Image> {
    params.validate()?;
    if params.channels() != img.channels() {
        return Err(Error::Shape(format!(
            "tone map has {} channels, image has {}",
            params.channels(),
            img.channels()
        )));
    }
    let mut out = img.clone();
    for c in 0..img.channels() {
        let (gain, bias, gamma) = (params.gain[c], params.bias[c], params.gamma[c]);
        for v in out.plane_mut(c) {
            let base = (*v as f64).max(0.0);
            *v = (gain * base.powf(gamma) + bias) as f32;
        }
    }
    Ok(out)
}

/// Analytic inverse on samples above `bias`; the round-trip partner of
/// [`apply_tone_map`] for strictly positive inputs.
pub fn invert_tone_map(img: &Image, params: &ToneMapParams) -> Result<Image> {
    params.validate()?;
    if params.channels() != img.channels() {
        return Err(Error::Shape(format!(
            "tone map has {} channels, image has {}",
            params.channels(),
            img.channels()
        )));
    }
    let mut out = img.clone();
    for c in 0..img.channels() {
        let (gain, bias, gamma) = (params.gain[c], params.bias[c], params.gamma[c]);
        for v in out.plane_mut(c) {
            let base = ((*v as f64 - bias) / gain).max(0.0);
            *v = base.powf(1.0 / gamma) as f32;
        }
    }
    Ok(out)
}

/// Moments of `max(v, 0)^gamma` accumulated in f64.
fn powered_stats(plane: &[f32], gamma: f64) -> (f64, f64, f64) {
    let n = plane.len() as f64;
    let powered: Vec<f64> = plane
        .iter()
        .map(|&v| (v as f64).max(0.0).powf(gamma))
        .collect();
    let mean = powered.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    for &u in &powered {
        let d = u - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    let std = m2.sqrt();
    let skew = if std > 0.0 { m3 / (std * std * std) } else { 0.0 };
    (mean, std, skew)
}
