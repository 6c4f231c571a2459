//! Complex Gabor kernels
//!
//! `G(x, y) = exp(-(α²·x_p² + β²·y_p²)) · exp(j·2π·f0·x_p)` with the
//! rotated coordinates `x_p = x cosθ + y sinθ`, `y_p = -x sinθ + y cosθ`.
//! The envelope is evaluated verbatim, so kernels carry a nonzero DC term.

use alloc::format;
use alloc::vec::Vec;
use core::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Complex, Error, Result};
use crate::math;

/// Default carrier frequencies in cycles per pixel.
pub const DEFAULT_FREQUENCIES: [f64; 5] = [0.05, 0.08, 0.125, 0.2, 0.3];
pub const DEFAULT_ORIENTATIONS: usize = 10;
pub const DEFAULT_KERNEL_SIZE: usize = 31;
pub const DEFAULT_ENVELOPE_RATIO: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaborParams {
    /// Carrier frequency, cycles per pixel.
    pub f0: f64,
    /// Orientation in radians, `[0, π)`.
    pub theta: f64,
    /// Envelope sharpness along the carrier axis, 1/pixels.
    pub alpha: f64,
    /// Envelope sharpness across the carrier axis, 1/pixels.
    pub beta: f64,
}

impl GaborParams {
    pub fn new(f0: f64, theta: f64, alpha: f64, beta: f64) -> Result<Self> {
        let p = Self { f0, theta, alpha, beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.f0) || !positive(self.alpha) || !positive(self.beta) {
            return Err(Error::InvalidParams(format!(
                "Gabor f0/alpha/beta must be positive: {self:?}"
            )));
        }
        if !(self.theta >= 0.0 && self.theta < PI) {
            return Err(Error::InvalidParams(format!(
                "Gabor orientation {} outside [0, pi)",
                self.theta
            )));
        }
        Ok(())
    }

    /// Rotates `(x, y)` into the kernel frame, returning `(x_p, y_p)`.
    #[inline]
    pub fn rotate(&self, x: f64, y: f64) -> (f64, f64) {
        let (s, c) = math::sin_cos(self.theta);
        (x * c + y * s, -x * s + y * c)
    }

    /// Gaussian envelope magnitude at `(x, y)`.
    #[inline]
    pub fn envelope(&self, x: f64, y: f64) -> f64 {
        let (xp, yp) = self.rotate(x, y);
        math::exp(-(self.alpha * self.alpha * xp * xp + self.beta * self.beta * yp * yp))
    }
}

/// Evaluates the kernel at a continuous point.
pub fn kernel_value(p: &GaborParams, x: f64, y: f64) -> Complex {
    let (xp, yp) = p.rotate(x, y);
    let envelope = math::exp(-(p.alpha * p.alpha * xp * xp + p.beta * p.beta * yp * yp));
    // sin/cos on |phase| so that G(-x,-y) is the exact conjugate of G(x,y).
    let phase = 2.0 * PI * p.f0 * xp;
    let (s, c) = math::sin_cos(phase.abs());
    let s = if phase < 0.0 { -s } else { s };
    Complex::new(envelope * c, envelope * s)
}

/// A `size × size` sampled kernel centred on the origin, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborKernel {
    params: GaborParams,
    size: usize,
    data: Vec<Complex>,
}

impl GaborKernel {
    pub fn params(&self) -> &GaborParams {
        &self.params
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Half-width `(size - 1) / 2`.
    pub fn radius(&self) -> usize {
        (self.size - 1) / 2
    }

    pub fn data(&self) -> &[Complex] {
        &self.data
    }

    /// Sample at integer offset `(dx, dy)` from the centre.
    pub fn at(&self, dx: isize, dy: isize) -> Complex {
        let r = self.radius() as isize;
        debug_assert!(dx.abs() <= r && dy.abs() <= r);
        self.data[((dy + r) as usize) * self.size + (dx + r) as usize]
    }

    pub fn sum(&self) -> Complex {
        self.data.iter().sum()
    }
}

pub fn make_kernel(p: &GaborParams, size: usize) -> Result<GaborKernel> {
    if size < 3 || size.is_multiple_of(2) {
        return Err(Error::InvalidKernelSize(size));
    }
    p.validate()?;
    let r = ((size - 1) / 2) as isize;
    let mut data = Vec::with_capacity(size * size);
    for y in -r..=r {
        for x in -r..=r {
            data.push(kernel_value(p, x as f64, y as f64));
        }
    }
    Ok(GaborKernel { params: *p, size, data })
}

/// `n` orientations spaced uniformly over `[0, π)`: `θ_i = iπ/n`.
pub fn uniform_orientations(n: usize) -> Vec<f64> {
    (0..n).map(|i| i as f64 * PI / n as f64).collect()
}

/// Kernels for every (frequency, orientation) pair, frequency-major.
///
/// Feature slots are indexed by position in this bank, so the order must not
/// change.
#[derive(Debug, Clone, PartialEq)]
pub struct GaborBank {
    kernels: Vec<GaborKernel>,
    frequencies: Vec<f64>,
    orientations: Vec<f64>,
}

impl GaborBank {
    pub fn kernels(&self) -> &[GaborKernel] {
        &self.kernels
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn orientations(&self) -> &[f64] {
        &self.orientations
    }

    pub fn len(&self) -> usize {
        self.kernels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kernels.is_empty()
    }

    pub fn kernel_size(&self) -> usize {
        self.kernels[0].size
    }

    /// Index of the kernel for frequency `fi` and orientation `oi`.
    pub fn index_of(&self, fi: usize, oi: usize) -> usize {
        fi * self.orientations.len() + oi
    }

    /// Length of the feature vector this bank produces.
    pub fn feature_len(&self) -> usize {
        2 * self.kernels.len()
    }

    /// Reorders kernels by `order` (a permutation of `0..len`).
    ///
    /// The result no longer follows frequency-major ordering; it exists to
    /// check the feature index contract.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        let mut seen = alloc::vec![false; self.len()];
        if order.len() != self.len() {
            return Err(Error::InvalidBank("permutation length differs from bank".into()));
        }
        for &i in order {
            if i >= self.len() || core::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidBank("not a permutation".into()));
            }
        }
        Ok(Self {
            kernels: order.iter().map(|&i| self.kernels[i].clone()).collect(),
            frequencies: self.frequencies.clone(),
            orientations: self.orientations.clone(),
        })
    }
}

/// Builds the bank with self-similar envelopes `α = β = envelope_ratio·f0`.
pub fn make_bank(
    frequencies: &[f64],
    orientations: &[f64],
    size: usize,
    envelope_ratio: f64,
) -> Result<GaborBank> {
    if frequencies.is_empty() || orientations.is_empty() {
        return Err(Error::InvalidBank("frequency and orientation lists must be nonempty".into()));
    }
    if let Some(f) = frequencies.iter().find(|&&f| !(f > 0.0 && f <= 0.5)) {
        return Err(Error::InvalidBank(format!("frequency {f} outside (0, 0.5]")));
    }
    if !(envelope_ratio.is_finite() && envelope_ratio > 0.0) {
        return Err(Error::InvalidBank(format!("envelope ratio {envelope_ratio} must be positive")));
    }
    let mut kernels = Vec::with_capacity(frequencies.len() * orientations.len());
    for &f0 in frequencies {
        for &theta in orientations {
            let alpha = envelope_ratio * f0;
            kernels.push(make_kernel(&GaborParams::new(f0, theta, alpha, alpha)?, size)?);
        }
    }
    Ok(GaborBank {
        kernels,
        frequencies: frequencies.to_vec(),
        orientations: orientations.to_vec(),
    })
}

/// 5 frequencies × 10 orientations, 31×31 kernels: 50 kernels, 100 features.
pub fn default_bank() -> GaborBank {
    make_bank(
        &DEFAULT_FREQUENCIES,
        &uniform_orientations(DEFAULT_ORIENTATIONS),
        DEFAULT_KERNEL_SIZE,
        DEFAULT_ENVELOPE_RATIO,
    )
    .expect("default bank parameters are valid")
}
