//! Metalens imaging simulation and restoration toolkit.
//!
//! The measurement side synthesizes the two degraded captures of a
//! dual-branch metalens system from a ground-truth scene: a chromatically
//! aberrated color cue and a bandpass monochrome structure image, both
//! under spatially varying blur described by anchor grids of point-spread
//! functions. The restoration side aligns the color cue to the structure
//! image, applies regularized-inverse kernel fields for a coarse
//! pre-deblur, tone-maps the branches into a common domain, fuses
//! multi-scale features through a multiplicative gate, and refines the
//! result with a pluggable-predictor diffusion sampler.
//!
//! Data-parallel inner loops use rayon when the `parallel` feature
//! (default) is enabled; without it, every operation falls back to
//! sequential code with identical results.

pub mod align;
pub mod boundary;
pub mod color;
pub mod convolve;
pub mod diffusion;
pub mod error;
pub(crate) mod fft;
pub mod forward;
pub mod fusion;
pub mod image;
pub mod io;
pub mod metrics;
pub mod noise;
pub mod predeblur;
pub mod psf;
pub(crate) mod pyramid;
pub mod synthetic;
pub mod tonemap;
pub mod transform;
pub mod warp;

pub use error::{Error, Result};
pub use image::{ChannelStats, Image};
pub use psf::{KernelField, KernelLattice, KernelSource, PsfGrid};
pub use transform::Transform2D;

pub(crate) mod parallel {
    //! Row/task helpers that dispatch to rayon under the `parallel`
    //! feature and to plain iterators otherwise. Work is partitioned by
    //! fixed indices, so results are bitwise independent of thread count.

    #[cfg(feature = "parallel")]
    pub fn for_each_row<F>(samples: &mut [f32], width: usize, f: F)
    where
        F: Fn(usize, &mut [f32]) + Sync,
    {
        use rayon::prelude::*;
        samples
            .par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }

    #[cfg(not(feature = "parallel"))]
    pub fn for_each_row<F>(samples: &mut [f32], width: usize, f: F)
    where
        F: Fn(usize, &mut [f32]) + Sync,
    {
        samples
            .chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }

    #[cfg(feature = "parallel")]
    pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        (0..n).map(f).collect()
    }
}
