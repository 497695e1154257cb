//! Lossy side: entropy-constrained vector quantization, its
//! component-coding variant, fixed-lattice quantization, and the Gaussian
//! rate-distortion reference.

pub mod ecvq;
pub mod lattice;

pub use ecvq::{bica_ecvq, ecvq, QuantizerModel};
pub use lattice::{lattice_quantize, LatticeFamily, LatticeQuantization, LatticeSpec};

use crate::error::{Error, Result};

/// Rate-distortion lower bound for a standard `d`-dimensional normal
/// source under squared error `D` (summed over dimensions):
/// `max{(d/2) log2(d/D), 0}` bits.
pub fn gaussian_rate_distortion(d: u32, distortion: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("need d >= 1".into()));
    }
    if distortion <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "distortion must be positive, got {distortion}"
        )));
    }
    Ok((d as f64 / 2.0 * (d as f64 / distortion).log2()).max(0.0))
}
