//! Complex FFTs of arbitrary length.
//!
//! Powers of two use an iterative radix-2 transform; other lengths go
//! through Bluestein's chirp-z algorithm on a padded power-of-two transform.
//! Forward transforms are unnormalized, inverse transforms scale by `1/n`.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::Complex;
use crate::math;

#[derive(Debug, Clone)]
pub struct Fft {
    n: usize,
    kind: Kind,
}

#[derive(Debug, Clone)]
enum Kind {
    Trivial,
    Radix2(Radix2),
    Bluestein(Bluestein),
}

#[derive(Debug, Clone)]
struct Radix2 {
    /// `exp(-2πi·k/n)` for `k < n/2`.
    twiddles: Vec<Complex>,
    rev: Vec<usize>,
}

#[derive(Debug, Clone)]
struct Bluestein {
    inner: Radix2,
    m: usize,
    /// `exp(-πi·k²/n)`.
    chirp: Vec<Complex>,
    /// Forward transform of the conjugate chirp, wrapped to length `m`.
    kernel_spectrum: Vec<Complex>,
}

fn unit(angle: f64) -> Complex {
    let (s, c) = math::sin_cos(angle);
    Complex::new(c, s)
}

impl Radix2 {
    fn new(n: usize) -> Self {
        debug_assert!(n.is_power_of_two() && n >= 2);
        let bits = n.trailing_zeros();
        let rev = (0..n).map(|i| i.reverse_bits() >> (usize::BITS - bits)).collect();
        let twiddles = (0..n / 2).map(|k| unit(-2.0 * PI * k as f64 / n as f64)).collect();
        Self { twiddles, rev }
    }

    fn twiddle(&self, k: usize, inverse: bool) -> Complex {
        let w = self.twiddles[k];
        if inverse {
            w.conj()
        } else {
            w
        }
    }

    /// Unnormalized transform; `inverse` uses conjugate twiddles.
    fn transform(&self, buf: &mut [Complex], inverse: bool) {
        let n = buf.len();
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                let (lo, hi) = buf[start..start + len].split_at_mut(half);
                for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
                    let t = *b * self.twiddle(k * stride, inverse);
                    *b = *a - t;
                    *a += t;
                }
            }
            len <<= 1;
        }
    }

    /// Transforms every column of a row-major `width × n` buffer at once,
    /// running each butterfly over whole rows so memory is read in order.
    fn transform_columns(&self, buf: &mut [Complex], width: usize, inverse: bool) {
        let n = buf.len() / width;
        for i in 0..n {
            let j = self.rev[i];
            if i < j {
                let (head, tail) = buf.split_at_mut(j * width);
                head[i * width..(i + 1) * width].swap_with_slice(&mut tail[..width]);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let w = self.twiddle(k * stride, inverse);
                    let (top, bottom) = buf.split_at_mut((start + k + half) * width);
                    let a_row = &mut top[(start + k) * width..(start + k + 1) * width];
                    let b_row = &mut bottom[..width];
                    for (a, b) in a_row.iter_mut().zip(b_row.iter_mut()) {
                        let t = *b * w;
                        *b = *a - t;
                        *a += t;
                    }
                }
            }
            len <<= 1;
        }
    }
}

impl Bluestein {
    fn new(n: usize) -> Self {
        let m = (2 * n - 1).next_power_of_two();
        let inner = Radix2::new(m);
        // k² mod 2n keeps the chirp angle small and exact in integers.
        let chirp: Vec<Complex> = (0..n)
            .map(|k| {
                let k2 = (k as u128 * k as u128 % (2 * n as u128)) as f64;
                unit(-PI * k2 / n as f64)
            })
            .collect();
        let mut kernel = vec![Complex::new(0.0, 0.0); m];
        kernel[0] = chirp[0].conj();
        for k in 1..n {
            kernel[k] = chirp[k].conj();
            kernel[m - k] = chirp[k].conj();
        }
        inner.transform(&mut kernel, false);
        Self { inner, m, chirp, kernel_spectrum: kernel }
    }

    fn forward(&self, buf: &mut [Complex]) {
        let n = buf.len();
        let mut work = vec![Complex::new(0.0, 0.0); self.m];
        for k in 0..n {
            work[k] = buf[k] * self.chirp[k];
        }
        self.inner.transform(&mut work, false);
        for (w, k) in work.iter_mut().zip(&self.kernel_spectrum) {
            *w = (*w * k).conj();
        }
        // Inverse via conjugation: ifft(x) = conj(fft(conj(x))) / m.
        self.inner.transform(&mut work, false);
        let scale = 1.0 / self.m as f64;
        for k in 0..n {
            buf[k] = work[k].conj() * scale * self.chirp[k];
        }
    }
}

impl Fft {
    pub fn new(n: usize) -> Self {
        assert!(n > 0, "FFT length must be positive");
        let kind = if n == 1 {
            Kind::Trivial
        } else if n.is_power_of_two() {
            Kind::Radix2(Radix2::new(n))
        } else {
            Kind::Bluestein(Bluestein::new(n))
        };
        Self { n, kind }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn forward(&self, buf: &mut [Complex]) {
        self.unscaled(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex]) {
        self.unscaled(buf, true);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|v| *v *= scale);
    }

    fn unscaled(&self, buf: &mut [Complex], inverse: bool) {
        assert_eq!(buf.len(), self.n, "buffer length differs from FFT length");
        match &self.kind {
            Kind::Trivial => {}
            Kind::Radix2(r) => r.transform(buf, inverse),
            Kind::Bluestein(b) => {
                if inverse {
                    buf.iter_mut().for_each(|v| *v = v.conj());
                    b.forward(buf);
                    buf.iter_mut().for_each(|v| *v = v.conj());
                } else {
                    b.forward(buf);
                }
            }
        }
    }
}

/// Row-column 2-D transform over a row-major `width × height` buffer.
#[derive(Debug, Clone)]
pub struct Fft2d {
    width: usize,
    height: usize,
    rows: Fft,
    cols: Fft,
}

impl Fft2d {
    pub fn new(width: usize, height: usize) -> Self {
        Self { width, height, rows: Fft::new(width), cols: Fft::new(height) }
    }

    pub fn square(side: usize) -> Self {
        Self::new(side, side)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn forward(&self, buf: &mut [Complex]) {
        self.apply(buf, false);
    }

    pub fn inverse(&self, buf: &mut [Complex]) {
        self.apply(buf, true);
    }

    fn apply(&self, buf: &mut [Complex], inverse: bool) {
        assert_eq!(buf.len(), self.width * self.height, "buffer size differs from plan");
        for row in buf.chunks_exact_mut(self.width) {
            self.rows.unscaled(row, inverse);
        }
        if let Kind::Radix2(r) = &self.cols.kind {
            r.transform_columns(buf, self.width, inverse);
        } else {
            let mut column = vec![Complex::new(0.0, 0.0); self.height];
            for x in 0..self.width {
                for (y, c) in column.iter_mut().enumerate() {
                    *c = buf[y * self.width + x];
                }
                self.cols.unscaled(&mut column, inverse);
                for (y, c) in column.iter().enumerate() {
                    buf[y * self.width + x] = *c;
                }
            }
        }
        if inverse {
            let scale = 1.0 / buf.len() as f64;
            buf.iter_mut().for_each(|v| *v *= scale);
        }
    }
}
