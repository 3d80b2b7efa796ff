//! Channel averaging: the linear map taking a color image to the
//! monochrome plane seen by the structure branch.

use crate::error::{Error, Result};
use crate::image::Image;

/// Uniform channel average `(r + g + b) / 3`. The measurement operator of
/// the structure branch; uniform weights make averaging a replicated gray
/// image the identity.
pub fn color_average(img: &Image) -> Result<Image> {
    if img.channels() != 3 {
        return Err(Error::Shape(format!(
            "color_average expects 3 channels, got {}",
            img.channels()
        )));
    }
    weighted_average(img, [1.0 / 3.0; 3])
}

/// Weighted channel combination; weights are applied in f64. Exposed so a
/// luminance-style weighting can be configured instead of the uniform
/// average.
pub fn weighted_average(img: &Image, weights: [f64; 3]) -> Result<Image> {
    if img.channels() != 3 {
        return Err(Error::Shape(format!(
            "weighted_average expects 3 channels, got {}",
            img.channels()
        )));
    }
    let (w, h) = (img.width(), img.height());
    let r = img.plane(0);
    let g = img.plane(1);
    let b = img.plane(2);
    let samples: Vec<f32> = (0..w * h)
        .map(|i| {
            (weights[0] * r[i] as f64 + weights[1] * g[i] as f64 + weights[2] * b[i] as f64) as f32
        })
        .collect();
    Image::new(w, h, 1, samples)
}

/// Replicates a monochrome plane across `channels` planes.
pub fn replicate_gray(img: &Image, channels: usize) -> Result<Image> {
    if img.channels() != 1 {
        return Err(Error::Shape(format!(
            "replicate_gray expects 1 channel, got {}",
            img.channels()
        )));
    }
    let mut samples = Vec::with_capacity(img.samples().len() * channels);
    for _ in 0..channels {
        samples.extend_from_slice(img.samples());
    }
    Image::new(img.width(), img.height(), channels, samples)
}
