//! Seeded additive Gaussian noise.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::image::Image;

/// Additive white Gaussian noise with standard deviation `sigma` in
/// intensity units, drawn from a ChaCha stream seeded by `seed`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseModel {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseModel {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma >= 0.0) {
            return Err(Error::Parameter(format!(
                "noise sigma must be >= 0, got {sigma}"
            )));
        }
        Ok(Self { sigma, seed })
    }

    /// Derives an independent sub-stream seed (splitmix64 step).
    pub fn substream(&self, stream: u64) -> NoiseModel {
        NoiseModel {
            sigma: self.sigma,
            seed: mix_seed(self.seed, stream),
        }
    }
}

/// splitmix64 finalizer over `base + stream`; used to decorrelate the
/// per-measurement noise draws from one user-facing seed.
pub fn mix_seed(base: u64, stream: u64) -> u64 {
    let mut z = base
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `out = img + sigma * eps` with `eps` i.i.d. standard normal in sample
/// storage order. `sigma == 0` returns the input unchanged.
pub fn add_gaussian_noise(img: &Image, noise: &NoiseModel) -> Result<Image> {
    if !(noise.sigma >= 0.0) {
        return Err(Error::Parameter(format!(
            "noise sigma must be >= 0, got {}",
            noise.sigma
        )));
    }
    if noise.sigma == 0.0 {
        return Ok(img.clone());
    }
    let mut rng = ChaCha12Rng::seed_from_u64(noise.seed);
    let normal = StandardNormal;
    let samples: Vec<f32> = img
        .samples()
        .iter()
        .map(|&v| {
            let e: f64 = normal.sample(&mut rng);
            (v as f64 + noise.sigma * e) as f32
        })
        .collect();
    Image::new(img.width(), img.height(), img.channels(), samples)
}

/// Standard-normal image of the given shape, used for diffusion noising.
pub fn standard_normal_image(
    width: usize,
    height: usize,
    channels: usize,
    seed: u64,
) -> Image {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let normal = StandardNormal;
    let samples: Vec<f32> = (0..width * height * channels)
        .map(|_| {
            let e: f64 = normal.sample(&mut rng);
            e as f32
        })
        .collect();
    Image::new(width, height, channels, samples).expect("normal draws are finite")
}
