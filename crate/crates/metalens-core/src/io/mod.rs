//! Bit-exact file I/O: IMGF rasters, PSFG kernel grids, binary PPM/PGM.
//!
//! Formats:
//! - IMGF: magic `IMGF`, three u32-LE (width, height, channels), then
//!   `width*height*channels` f32-LE samples, planar channel-major,
//!   row-major within a plane.
//! - PSFG: magic `PSFG`, seven u32-LE (version = 1, grid_h, grid_w,
//!   kernel_k, channels, image_w, image_h), then f32-LE kernels in
//!   `[gy][gx][c][ky][kx]` order.
//! - PPM/PGM: binary `P5`/`P6`, maxval 255 or 65535.
//!
//! Loading dispatches on the magic bytes; saving picks IMGF for the
//! `.imgf` extension and 16-bit PNM otherwise.

mod imgf;
mod pnm;
mod psfg;

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::Image;
use crate::psf::PsfGrid;

pub use pnm::{SRGB_EIGHT_BIT_MID, srgb_to_linear};

/// Transfer interpretation applied when loading 8/16-bit PNM files.
/// IMGF files are always loaded verbatim.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Colorspace {
    #[default]
    Linear,
    Srgb,
}

/// Loads an image, auto-detecting IMGF vs PPM/PGM from the magic bytes.
pub fn load_image(path: &Path, colorspace: Colorspace) -> Result<Image> {
    let bytes = fs::read(path)?;
    if bytes.starts_with(b"IMGF") {
        imgf::decode(&bytes)
    } else if bytes.starts_with(b"P5") || bytes.starts_with(b"P6") {
        pnm::decode(&bytes, colorspace)
    } else {
        Err(Error::Format(format!(
            "{}: unrecognized magic bytes (want IMGF, P5, or P6)",
            path.display()
        )))
    }
}

/// Saves IMGF for the `.imgf` extension, 16-bit PNM (values clamped to
/// `[0, 1]`) otherwise.
pub fn save_image(img: &Image, path: &Path) -> Result<()> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let bytes = match ext.as_deref() {
        Some("imgf") => imgf::encode(img),
        _ => pnm::encode16(img)?,
    };
    fs::write(path, bytes)?;
    Ok(())
}

/// Loads a PSFG grid, validating calibration invariants. With
/// `renormalize`, kernels are rescaled to unit mass instead of rejected.
pub fn load_psf_grid(path: &Path, renormalize: bool) -> Result<PsfGrid> {
    let bytes = fs::read(path)?;
    let lattice = psfg::decode(&bytes)?;
    if renormalize {
        PsfGrid::renormalized(lattice)
    } else {
        PsfGrid::new(lattice)
    }
}

pub fn save_psf_grid(grid: &PsfGrid, path: &Path) -> Result<()> {
    fs::write(path, psfg::encode(grid.lattice()))?;
    Ok(())
}

/// In-memory encoders/decoders, exposed for tests and manifest hashing.
pub mod raw {
    pub use super::imgf::{decode as imgf_decode, encode as imgf_encode};
    pub use super::pnm::{decode as pnm_decode, encode16 as pnm_encode16};
    pub use super::psfg::{decode as psfg_decode, encode as psfg_encode};
}
