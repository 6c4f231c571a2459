//! Gabor responses by FFT circular convolution and the magnitude-statistics
//! feature vector.
//!
//! For kernel `i` of the bank, slot `2i` holds the mean of `|response|` and
//! slot `2i + 1` its population standard deviation.

use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::fft::Fft2d;
use crate::gabor::{GaborBank, GaborKernel};
use crate::preprocess::GrayImage;
use crate::{Complex, Error, Result};
use crate::math;

/// `|c|` without the overflow guarding of `hypot`; responses are far from
/// the range where it matters.
fn magnitude(c: Complex) -> f64 {
    math::sqrt(c.re * c.re + c.im * c.im)
}

/// Complex filter response, same size as the filtered image.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    side: usize,
    kernel_index: usize,
    data: Vec<Complex>,
}

impl ResponseMap {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn kernel_index(&self) -> usize {
        self.kernel_index
    }

    pub fn data(&self) -> &[Complex] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> Complex {
        self.data[y * self.side + x]
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.data.iter().map(|&c| magnitude(c)).collect()
    }

    /// Mean and population standard deviation of the magnitudes.
    pub fn magnitude_stats(&self) -> (f64, f64) {
        let mags = self.magnitudes();
        let n = mags.len() as f64;
        let mean = mags.iter().sum::<f64>() / n;
        let var = mags.iter().map(|m| (m - mean) * (m - mean)).sum::<f64>() / n;
        (mean, math::sqrt(var))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature vector"));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn mean_slot(&self, kernel: usize) -> f64 {
        self.0[2 * kernel]
    }

    pub fn std_slot(&self, kernel: usize) -> f64 {
        self.0[2 * kernel + 1]
    }
}

/// Lays the kernel out on a `side × side` torus with its centre at `(0, 0)`.
pub fn wrap_kernel(kernel: &GaborKernel, side: usize) -> Result<Vec<Complex>> {
    if kernel.size() > side {
        return Err(Error::SizeMismatch { image: side, kernel: kernel.size() });
    }
    let r = kernel.radius() as isize;
    let s = side as isize;
    let mut buf = vec![Complex::new(0.0, 0.0); side * side];
    for dy in -r..=r {
        for dx in -r..=r {
            let x = dx.rem_euclid(s) as usize;
            let y = dy.rem_euclid(s) as usize;
            buf[y * side + x] = kernel.at(dx, dy);
        }
    }
    Ok(buf)
}

fn image_spectrum(img: &GrayImage, plan: &Fft2d) -> Vec<Complex> {
    let mut buf: Vec<Complex> = img.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
    plan.forward(&mut buf);
    buf
}

/// Circular convolution `IFFT(FFT(kernel) ⊙ FFT(image))`.
///
/// `out(x, y) = Σ image(x - dx, y - dy) · kernel(dx, dy)`, indices mod side,
/// so a unit impulse at `p` reproduces the kernel centred on `p`.
pub fn fft_convolve(img: &GrayImage, kernel: &GaborKernel) -> Result<ResponseMap> {
    let side = img.side();
    let plan = Fft2d::square(side);
    let mut spectrum = wrap_kernel(kernel, side)?;
    plan.forward(&mut spectrum);
    let image = image_spectrum(img, &plan);
    for (k, i) in spectrum.iter_mut().zip(&image) {
        *k *= i;
    }
    plan.inverse(&mut spectrum);
    Ok(ResponseMap { side, kernel_index: 0, data: spectrum })
}

/// A bank with kernel spectra precomputed for one image side.
///
/// Shareable across threads; filtering an image costs one forward FFT plus
/// one inverse FFT per kernel.
#[derive(Debug, Clone)]
pub struct BankFilter {
    side: usize,
    plan: Fft2d,
    spectra: Vec<Vec<Complex>>,
}

impl BankFilter {
    pub fn new(bank: &GaborBank, side: usize) -> Result<Self> {
        if bank.is_empty() {
            return Err(Error::InvalidBank("empty bank".into()));
        }
        let plan = Fft2d::square(side);
        let spectra = bank
            .kernels()
            .iter()
            .map(|k| {
                let mut s = wrap_kernel(k, side)?;
                plan.forward(&mut s);
                Ok(s)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { side, plan, spectra })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn kernel_count(&self) -> usize {
        self.spectra.len()
    }

    pub fn feature_len(&self) -> usize {
        2 * self.spectra.len()
    }

    fn check(&self, img: &GrayImage) -> Result<()> {
        if img.side() != self.side {
            return Err(Error::ShapeError { expected: self.side, got: img.side() });
        }
        Ok(())
    }

    fn response(&self, image: &[Complex], index: usize) -> ResponseMap {
        let mut buf: Vec<Complex> =
            self.spectra[index].iter().zip(image).map(|(k, i)| k * i).collect();
        self.plan.inverse(&mut buf);
        ResponseMap { side: self.side, kernel_index: index, data: buf }
    }

    pub fn responses(&self, img: &GrayImage) -> Result<Vec<ResponseMap>> {
        self.check(img)?;
        let image = image_spectrum(img, &self.plan);
        Ok((0..self.spectra.len()).map(|i| self.response(&image, i)).collect())
    }

    pub fn extract(&self, img: &GrayImage) -> Result<FeatureVector> {
        self.check(img)?;
        let image = image_spectrum(img, &self.plan);
        let mut values = Vec::with_capacity(self.feature_len());
        for i in 0..self.spectra.len() {
            let (mean, std) = self.response(&image, i).magnitude_stats();
            values.push(mean);
            values.push(std);
        }
        FeatureVector::new(values)
    }
}

/// Convolves with every kernel of the bank and reduces to mean/std slots.
pub fn extract_features(img: &GrayImage, bank: &GaborBank) -> Result<FeatureVector> {
    BankFilter::new(bank, img.side())?.extract(img)
}
