//! Boundary handling for convolution and sampling.

/// How taps outside the image plane are resolved. Replicate padding is the
/// only mode for now; it preserves constants, so normalized kernels keep
/// flat fields flat all the way to the border.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryRule {
    #[default]
    Replicate,
}

