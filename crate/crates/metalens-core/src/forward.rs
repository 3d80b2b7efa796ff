//! Measurement synthesis: produces the two degraded captures from a
//! ground-truth scene.
//!
//! The color cue is the scene under the color-branch blur grid; the
//! structure image is the channel-averaged scene under the (sharper)
//! structure-branch grid. Both receive independent additive Gaussian
//! noise draws derived from one seed. Measurements are *not* clamped to
//! `[0, 1]`, keeping the operator exactly linear.

use crate::boundary::BoundaryRule;
use crate::color::color_average;
use crate::convolve::{sv_convolve, Engine};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::noise::{add_gaussian_noise, NoiseModel};
use crate::psf::PsfGrid;

/// Synthesizes `(y_c, y_s)` from scene `x`.
///
/// `grid_c` may be 3-channel (chromatic blur) or monochrome (shared across
/// channels); `grid_s` must be monochrome.
pub fn synthesize_measurements(
    x: &Image,
    grid_c: &PsfGrid,
    grid_s: &PsfGrid,
    noise: &NoiseModel,
    boundary: BoundaryRule,
    engine: Engine,
) -> Result<(Image, Image)> {
    if x.channels() != 3 {
        return Err(Error::Shape(format!(
            "scene must have 3 channels, got {}",
            x.channels()
        )));
    }
    if grid_s.lattice().channels() != 1 {
        return Err(Error::Shape(format!(
            "structure grid must be monochrome, got {} channels",
            grid_s.lattice().channels()
        )));
    }
    let blurred_c = sv_convolve(x, grid_c, boundary, engine)?;
    let gray = color_average(x)?;
    let blurred_s = sv_convolve(&gray, grid_s, boundary, engine)?;
    let y_c = add_gaussian_noise(&blurred_c, &noise.substream(1))?;
    let y_s = add_gaussian_noise(&blurred_s, &noise.substream(2))?;
    Ok((y_c, y_s))
}
