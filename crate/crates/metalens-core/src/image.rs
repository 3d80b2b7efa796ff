//! Planar multi-channel raster of linear intensities.
//!
//! Samples are stored channel-major (all of channel 0, then channel 1, ...),
//! row-major within a plane, matching the on-disk IMGF layout byte for byte.
//! Intensities are nominally in `[0, 1]` but intermediates (noisy
//! measurements, deconvolved estimates, diffusion states) may leave that
//! range; only finiteness is enforced.

use crate::error::{Error, Result};

/// Planar image. Channel counts 1 (monochrome) and 3 (color) are the ones
/// produced by capture and synthesis; channel concatenation for conditioning
/// stacks yields other counts, so the type itself only requires `channels >= 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    channels: usize,
    samples: Vec<f32>,
}

/// First three central moments of one channel, used by the tone-map fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelStats {
    pub mean: f64,
    pub std: f64,
    pub skew: f64,
}

impl Image {
    /// Builds an image from raw planar samples, validating dimensions and
    /// finiteness.
    pub fn new(width: usize, height: usize, channels: usize, samples: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Size(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if channels == 0 {
            return Err(Error::Shape("image must have at least one channel".into()));
        }
        let expected = width
            .checked_mul(height)
            .and_then(|n| n.checked_mul(channels))
            .ok_or_else(|| Error::Size("image dimensions overflow".into()))?;
        if samples.len() != expected {
            return Err(Error::Shape(format!(
                "sample count {} does not match {width}x{height}x{channels} = {expected}",
                samples.len()
            )));
        }
        let img = Self {
            width,
            height,
            channels,
            samples,
        };
        img.validate()?;
        Ok(img)
    }

    pub fn zeros(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            samples: vec![0.0; width * height * channels],
        }
    }

    /// Internal constructor for computed buffers whose length is correct by
    /// construction; skips the validation pass.
    pub(crate) fn from_vec_unchecked(
        width: usize,
        height: usize,
        channels: usize,
        samples: Vec<f32>,
    ) -> Self {
        debug_assert_eq!(samples.len(), width * height * channels);
        Self {
            width,
            height,
            channels,
            samples,
        }
    }

    /// Fills an image by evaluating `f(x, y, c)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        channels: usize,
        mut f: impl FnMut(usize, usize, usize) -> f32,
    ) -> Self {
        let mut samples = Vec::with_capacity(width * height * channels);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    samples.push(f(x, y, c));
                }
            }
        }
        Self {
            width,
            height,
            channels,
            samples,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn samples(&self) -> &[f32] {
        &self.samples
    }

    pub fn samples_mut(&mut self) -> &mut [f32] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<f32> {
        self.samples
    }

    pub fn plane(&self, c: usize) -> &[f32] {
        let n = self.width * self.height;
        &self.samples[c * n..(c + 1) * n]
    }

    pub fn plane_mut(&mut self, c: usize) -> &mut [f32] {
        let n = self.width * self.height;
        &mut self.samples[c * n..(c + 1) * n]
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, c: usize) -> usize {
        (c * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.samples[self.index(x, y, c)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        let i = self.index(x, y, c);
        self.samples[i] = v;
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    pub fn same_dims(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Rejects non-finite samples.
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.samples.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!(
                "non-finite sample at flat index {i}"
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(f32) -> f32) -> Image {
        Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Elementwise combination of two same-shape images.
    pub fn zip(&self, other: &Image, f: impl Fn(f32, f32) -> f32) -> Result<Image> {
        if !self.same_shape(other) {
            return Err(Error::Shape(format!(
                "shape mismatch: {}x{}x{} vs {}x{}x{}",
                self.width, self.height, self.channels, other.width, other.height, other.channels
            )));
        }
        Ok(Image {
            width: self.width,
            height: self.height,
            channels: self.channels,
            samples: self
                .samples
                .iter()
                .zip(&other.samples)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Returns a single-channel image borrowing plane `c`'s contents.
    pub fn extract_channel(&self, c: usize) -> Image {
        Image {
            width: self.width,
            height: self.height,
            channels: 1,
            samples: self.plane(c).to_vec(),
        }
    }

    /// Stacks the planes of `self` and `other` into one image,
    /// `self`'s channels first.
    pub fn concat_channels(&self, other: &Image) -> Result<Image> {
        if !self.same_dims(other) {
            return Err(Error::Shape(format!(
                "cannot concatenate {}x{} with {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let mut samples = Vec::with_capacity(self.samples.len() + other.samples.len());
        samples.extend_from_slice(&self.samples);
        samples.extend_from_slice(&other.samples);
        Ok(Image {
            width: self.width,
            height: self.height,
            channels: self.channels + other.channels,
            samples,
        })
    }

    /// Mean, population standard deviation and skewness of one plane,
    /// accumulated in f64.
    pub fn channel_stats(&self, c: usize) -> ChannelStats {
        let plane = self.plane(c);
        let n = plane.len() as f64;
        let mean = plane.iter().map(|&v| v as f64).sum::<f64>() / n;
        let mut m2 = 0.0;
        let mut m3 = 0.0;
        for &v in plane {
            let d = v as f64 - mean;
            m2 += d * d;
            m3 += d * d * d;
        }
        m2 /= n;
        m3 /= n;
        let std = m2.sqrt();
        let skew = if std > 0.0 { m3 / (std * std * std) } else { 0.0 };
        ChannelStats { mean, std, skew }
    }

    pub fn stats(&self) -> Vec<ChannelStats> {
        (0..self.channels).map(|c| self.channel_stats(c)).collect()
    }

    /// Maximum absolute per-sample difference; images must be same shape.
    pub fn max_abs_diff(&self, other: &Image) -> Result<f64> {
        if !self.same_shape(other) {
            return Err(Error::Shape("max_abs_diff shape mismatch".into()));
        }
        Ok(self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(&a, &b)| (a as f64 - b as f64).abs())
            .fold(0.0, f64::max))
    }
}
