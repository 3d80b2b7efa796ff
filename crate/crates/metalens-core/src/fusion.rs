//! Multi-scale feature pyramids and the gated fusion rule.
//!
//! Conditioning features are Gaussian pyramids. Fusion combines a base
//! pyramid with color and structure pyramids level by level as
//! `f_z + f_c * f_s`: the structure features gate where color features
//! are injected. A monochrome structure pyramid broadcasts its gate
//! across the color channels.

use crate::error::{Error, Result};
use crate::image::Image;
use crate::pyramid::{downsample2, upsample_bilinear};

/// Ordered list of images, level 0 at full resolution, each level halving
/// (ceiling) the previous one. All levels share a channel count.
#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePyramid {
    levels: Vec<Image>,
}

impl FeaturePyramid {
    pub fn new(levels: Vec<Image>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::Shape("pyramid needs at least one level".into()));
        }
        let channels = levels[0].channels();
        for i in 1..levels.len() {
            let (pw, ph) = (levels[i - 1].width(), levels[i - 1].height());
            let (w, h) = (levels[i].width(), levels[i].height());
            if w != pw.div_ceil(2) || h != ph.div_ceil(2) {
                return Err(Error::Shape(format!(
                    "level {i} is {w}x{h}, expected {}x{} (ceiling halving)",
                    pw.div_ceil(2),
                    ph.div_ceil(2)
                )));
            }
            if levels[i].channels() != channels {
                return Err(Error::Shape(format!(
                    "level {i} has {} channels, level 0 has {channels}",
                    levels[i].channels()
                )));
            }
        }
        Ok(Self { levels })
    }

    /// Constant-valued pyramid of the given geometry.
    pub fn flat(
        width: usize,
        height: usize,
        channels: usize,
        levels: usize,
        value: f32,
    ) -> Result<Self> {
        if levels == 0 {
            return Err(Error::Shape("pyramid needs at least one level".into()));
        }
        let mut out = Vec::with_capacity(levels);
        let (mut w, mut h) = (width, height);
        for i in 0..levels {
            if i > 0 {
                w = w.div_ceil(2);
                h = h.div_ceil(2);
            }
            out.push(Image::from_fn(w, h, channels, |_, _, _| value));
        }
        Self::new(out)
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn level(&self, i: usize) -> &Image {
        &self.levels[i]
    }

    pub fn levels(&self) -> &[Image] {
        &self.levels
    }

    pub fn channels(&self) -> usize {
        self.levels[0].channels()
    }
}

/// Builds an `levels`-deep Gaussian pyramid: level 0 is the image itself,
/// each next level is the 5-tap (sigma 1) prefiltered, 2x-decimated
/// previous level. Fails if the coarsest level would drop below 4 pixels
/// on either side.
pub fn build_pyramid(img: &Image, levels: usize) -> Result<FeaturePyramid> {
    if levels == 0 {
        return Err(Error::Parameter("pyramid needs at least one level".into()));
    }
    let (mut w, mut h) = (img.width(), img.height());
    for _ in 1..levels {
        w = w.div_ceil(2);
        h = h.div_ceil(2);
    }
    if w < 4 || h < 4 {
        return Err(Error::Size(format!(
            "image {}x{} too small for {levels} pyramid levels (coarsest would be {w}x{h})",
            img.width(),
            img.height()
        )));
    }
    let mut out = Vec::with_capacity(levels);
    out.push(img.clone());
    for i in 1..levels {
        out.push(downsample2(&out[i - 1]));
    }
    FeaturePyramid::new(out)
}

/// Level-wise gated fusion `f_z + f_c * f_s`. The structure pyramid may be
/// monochrome, in which case its gate is shared across the color channels.
pub fn gated_fuse(
    f_z: &FeaturePyramid,
    f_c: &FeaturePyramid,
    f_s: &FeaturePyramid,
) -> Result<FeaturePyramid> {
    if f_z.len() != f_c.len() || f_z.len() != f_s.len() {
        return Err(Error::Shape(format!(
            "pyramid depths differ: {} / {} / {}",
            f_z.len(),
            f_c.len(),
            f_s.len()
        )));
    }
    if f_c.channels() != f_z.channels() {
        return Err(Error::Shape(format!(
            "color pyramid has {} channels, base has {}",
            f_c.channels(),
            f_z.channels()
        )));
    }
    let broadcast = match f_s.channels() {
        c if c == f_z.channels() => false,
        1 => true,
        c => {
            return Err(Error::Shape(format!(
                "structure pyramid has {c} channels, expected 1 or {}",
                f_z.channels()
            )))
        }
    };
    let mut levels = Vec::with_capacity(f_z.len());
    for i in 0..f_z.len() {
        let (z, c, s) = (f_z.level(i), f_c.level(i), f_s.level(i));
        if !z.same_dims(c) || !z.same_dims(s) {
            return Err(Error::Shape(format!("level {i} dimensions differ")));
        }
        let mut out = z.clone();
        for ch in 0..z.channels() {
            let gate = s.plane(if broadcast { 0 } else { ch });
            let color = c.plane(ch);
            let base = out.plane_mut(ch);
            for ((o, &cc), &g) in base.iter_mut().zip(color).zip(gate) {
                *o += cc * g;
            }
        }
        levels.push(out);
    }
    FeaturePyramid::new(levels)
}

/// Collapses a pyramid back to image space. Walking up from the coarsest
/// level, each level contributes its own band residual (the level minus
/// the bilinear upsample of its prefiltered decimation) on top of the
/// upsampled running reconstruction:
///
/// ```text
/// acc <- upsample(acc) + p_i - upsample(downsample(p_i))
/// ```
///
/// For a pyramid built by [`build_pyramid`] the two upsample terms cancel
/// level by level, so the source image is restored up to rounding; for a
/// fused pyramid every coarse level feeds the low frequencies of the
/// result.
pub fn collapse_pyramid(p: &FeaturePyramid) -> Result<Image> {
    let l = p.len();
    let mut acc = p.level(l - 1).clone();
    for i in (0..l - 1).rev() {
        let target = p.level(i);
        let up_acc = upsample_bilinear(&acc, target.width(), target.height());
        let up_own = upsample_bilinear(&downsample2(target), target.width(), target.height());
        acc = Image::from_vec_unchecked(
            target.width(),
            target.height(),
            target.channels(),
            up_acc
                .samples()
                .iter()
                .zip(target.samples())
                .zip(up_own.samples())
                .map(|((&u, &t), &s)| u + (t - s))
                .collect(),
        );
    }
    Ok(acc)
}
