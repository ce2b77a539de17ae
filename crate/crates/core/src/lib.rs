//! Power-law spectral statistics of images and CNN activation maps.
//!
//! * [`tensorio`]: NPY tensors and dataset manifests.
//! * [`spectrum`]: 2D transforms, radial spectra, power-law and correlation fits.
//! * [`scaling`]: average pooling and spectrum invariance under it.
//! * [`theory`]: 3×3 kernel spectra and the multi-layer depth simulation.
//! * [`distill`]: Fourier-L1 and cross-power-spectrum losses.
//! * [`synth`]: seeded synthetic ensembles.

pub mod distill;
pub mod error;
pub mod scaling;
pub mod spectrum;
pub mod synth;
pub mod tensorio;
pub mod theory;

pub use error::{Error, Result};
pub use tensorio::Tensor;
