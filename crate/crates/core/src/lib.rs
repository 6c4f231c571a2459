//! Image subset selection with Gabor filter features and a small
//! feed-forward network.
//!
//! This crate holds the numerical core and is `no_std` (it needs `alloc`):
//!
//! * [`preprocess`]: grayscale conversion, bilinear resize, contrast-limited
//!   adaptive histogram equalization and `[-1, 1]` normalization.
//! * [`gabor`]: complex Gabor kernels and frequency/orientation banks.
//! * [`fft`] and [`features`]: FFT circular convolution and the
//!   mean/std magnitude feature vector.
//! * [`network`]: a `tanh` MLP trained with scaled conjugate gradient.
//! * [`classify`]: per-neuron thresholding into matched/unmatched verdicts.
//! * [`metrics`]: confusion counts, precision/recall/accuracy/F1.
//!
//! File formats, image decoding and the command line live in the companion
//! `gaborset` crate.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod classify;
mod error;
pub mod features;
pub mod fft;
pub mod gabor;
mod math;
pub mod metrics;
pub mod network;
pub mod preprocess;

pub use error::{Error, Result};

/// Complex sample type used by kernels, spectra and responses.
pub type Complex = num_complex::Complex64;
