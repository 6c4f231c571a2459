//! Photo normalization ahead of Gabor filtering.
//!
//! The chain is `to_grayscale` → `resize` → `equalize_adaptive` →
//! `normalize`; every stage is a pure function of its input.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};
use crate::math;

/// Smallest common side accepted by [`PreprocessParams`].
pub const MIN_SIDE: usize = 8;

/// An 8-bit image as decoded from disk, row-major, interleaved channels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImage {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<u8>,
}

impl RawImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidImage(format!("empty image {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidImage(format!(
                "unsupported channel count {channels}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidImage(format!(
                "expected {} samples, got {}",
                width * height * channels,
                data.len()
            )));
        }
        Ok(Self { width, height, channels, data })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    /// Copies out the pixel rectangle `[x, x + w) × [y, y + h)`.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<Self> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::InvalidImage(format!(
                "crop {w}x{h}+{x}+{y} outside {}x{}",
                self.width, self.height
            )));
        }
        let c = self.channels;
        let mut data = Vec::with_capacity(w * h * c);
        for row in y..y + h {
            let start = (row * self.width + x) * c;
            data.extend_from_slice(&self.data[start..start + w * c]);
        }
        Self::new(w, h, c, data)
    }

    /// Crops a rectangle given as fractions of the image dimensions.
    ///
    /// Edges are rounded to the nearest pixel; the result is at least one
    /// pixel wide and tall.
    pub fn crop_fraction(&self, fx: f64, fy: f64, fw: f64, fh: f64) -> Result<Self> {
        let ok = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !(ok(fx) && ok(fy) && ok(fw) && ok(fh)) || fw <= 0.0 || fh <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "fractional crop ({fx}, {fy}, {fw}, {fh}) outside the unit square"
            )));
        }
        let edge = |f: f64, n: usize| math::round(f * n as f64).clamp(0.0, n as f64) as usize;
        let x0 = edge(fx, self.width).min(self.width - 1);
        let y0 = edge(fy, self.height).min(self.height - 1);
        let x1 = edge(fx + fw, self.width).max(x0 + 1).min(self.width);
        let y1 = edge(fy + fh, self.height).max(y0 + 1).min(self.height);
        self.crop(x0, y0, x1 - x0, y1 - y0)
    }
}

/// Square real-valued image at the common working size.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    side: usize,
    data: Vec<f64>,
}

impl GrayImage {
    pub fn from_vec(side: usize, data: Vec<f64>) -> Result<Self> {
        if side == 0 || data.len() != side * side {
            return Err(Error::InvalidImage(format!(
                "side {side} needs {} samples, got {}",
                side * side,
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gray image"));
        }
        Ok(Self { side, data })
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        let mut data = Vec::with_capacity(side * side);
        for y in 0..side {
            for x in 0..side {
                data.push(f(x, y));
            }
        }
        Self::from_vec(side, data)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.side + x]
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Contrast-limited adaptive histogram equalization settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AheParams {
    pub tiles_x: usize,
    pub tiles_y: usize,
    /// Per-bin count ceiling as a fraction of the tile's pixel count.
    pub clip_limit: f64,
    pub bins: usize,
}

impl Default for AheParams {
    fn default() -> Self {
        Self { tiles_x: 8, tiles_y: 8, clip_limit: 0.01, bins: 256 }
    }
}

impl AheParams {
    pub fn validate(&self) -> Result<()> {
        if self.tiles_x == 0 || self.tiles_y == 0 {
            return Err(Error::InvalidParams("AHE needs at least one tile per axis".into()));
        }
        if !(self.clip_limit > 0.0 && self.clip_limit <= 1.0) {
            return Err(Error::InvalidParams(format!(
                "AHE clip limit {} not in (0, 1]",
                self.clip_limit
            )));
        }
        if self.bins < 2 {
            return Err(Error::InvalidParams("AHE needs at least 2 bins".into()));
        }
        Ok(())
    }
}

/// Everything the preprocessing chain needs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PreprocessParams {
    pub size: usize,
    pub ahe: AheParams,
}

impl Default for PreprocessParams {
    fn default() -> Self {
        Self { size: 128, ahe: AheParams::default() }
    }
}

impl PreprocessParams {
    pub fn validate(&self) -> Result<()> {
        if self.size < MIN_SIDE {
            return Err(Error::InvalidParams(format!(
                "common size {} below minimum {MIN_SIDE}",
                self.size
            )));
        }
        if self.ahe.tiles_x > self.size || self.ahe.tiles_y > self.size {
            return Err(Error::InvalidParams("more AHE tiles than pixels".into()));
        }
        self.ahe.validate()
    }
}

/// Converts to a single channel with Rec. 601 luma weights.
pub fn to_grayscale(img: &RawImage) -> Result<RawImage> {
    match img.channels {
        1 => Ok(img.clone()),
        3 => {
            let data = img
                .data
                .chunks_exact(3)
                .map(|px| {
                    let luma = 0.299 * f64::from(px[0])
                        + 0.587 * f64::from(px[1])
                        + 0.114 * f64::from(px[2]);
                    math::round(luma).clamp(0.0, 255.0) as u8
                })
                .collect();
            RawImage::new(img.width, img.height, 1, data)
        }
        c => Err(Error::InvalidImage(format!("unsupported channel count {c}"))),
    }
}

/// Bilinear resize of a single-channel image to `side × side`.
///
/// Uses half-pixel alignment (`src = (dst + 0.5)·scale − 0.5`) with
/// edge clamping, so resizing to the same size is the identity.
pub fn resize(img: &RawImage, side: usize) -> Result<GrayImage> {
    if img.channels != 1 {
        return Err(Error::InvalidImage("resize expects a grayscale image".into()));
    }
    if side == 0 {
        return Err(Error::InvalidParams("resize target side must be positive".into()));
    }
    let (w, h) = (img.width, img.height);
    let sx = w as f64 / side as f64;
    let sy = h as f64 / side as f64;
    let src = |x: usize, y: usize| f64::from(img.data[y * w + x]);
    let axis = |dst: usize, scale: f64, n: usize| -> (usize, usize, f64) {
        let pos = ((dst as f64 + 0.5) * scale - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = math::floor(pos) as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, pos - i0 as f64)
    };
    GrayImage::from_fn(side, |x, y| {
        let (x0, x1, fx) = axis(x, sx, w);
        let (y0, y1, fy) = axis(y, sy, h);
        let top = src(x0, y0) * (1.0 - fx) + src(x1, y0) * fx;
        let bottom = src(x0, y1) * (1.0 - fx) + src(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    })
}

#[derive(Debug, Clone, PartialEq)]
enum TileLut {
    /// Tile holds a single intensity bin.
    Identity,
    Table(Vec<f64>),
}

/// Per-tile equalization lookups plus the bilinear blending geometry.
#[derive(Debug, Clone, PartialEq)]
pub struct AheMapping {
    side: usize,
    tiles_x: usize,
    tiles_y: usize,
    bins: usize,
    luts: Vec<TileLut>,
}

#[inline]
fn bin_of(v: f64, bins: usize) -> usize {
    let b = math::floor(v * bins as f64 / 256.0);
    if b <= 0.0 {
        0
    } else {
        (b as usize).min(bins - 1)
    }
}

/// Integer partition of `n` pixels into `parts` contiguous spans.
#[inline]
fn span(i: usize, parts: usize, n: usize) -> (usize, usize) {
    (i * n / parts, (i + 1) * n / parts)
}

impl AheMapping {
    pub fn build(img: &GrayImage, p: &AheParams) -> Result<Self> {
        p.validate()?;
        let side = img.side;
        if p.tiles_x > side || p.tiles_y > side {
            return Err(Error::InvalidParams("more AHE tiles than pixels".into()));
        }
        let mut luts = Vec::with_capacity(p.tiles_x * p.tiles_y);
        let mut hist = vec![0.0f64; p.bins];
        for ty in 0..p.tiles_y {
            let (y0, y1) = span(ty, p.tiles_y, side);
            for tx in 0..p.tiles_x {
                let (x0, x1) = span(tx, p.tiles_x, side);
                hist.iter_mut().for_each(|c| *c = 0.0);
                for y in y0..y1 {
                    for x in x0..x1 {
                        hist[bin_of(img.get(x, y), p.bins)] += 1.0;
                    }
                }
                let n = ((x1 - x0) * (y1 - y0)) as f64;
                luts.push(tile_lut(&mut hist, n, p.clip_limit));
            }
        }
        Ok(Self { side, tiles_x: p.tiles_x, tiles_y: p.tiles_y, bins: p.bins, luts })
    }

    fn lut_value(&self, tx: usize, ty: usize, v: f64) -> f64 {
        match &self.luts[ty * self.tiles_x + tx] {
            TileLut::Identity => v,
            TileLut::Table(t) => t[bin_of(v, self.bins)],
        }
    }

    /// Equalized value of intensity `v` at pixel `(x, y)`.
    ///
    /// For a fixed position this is a convex blend of monotone lookups and
    /// hence monotone in `v`.
    pub fn apply(&self, x: usize, y: usize, v: f64) -> f64 {
        let axis = |p: usize, tiles: usize| -> (usize, usize, f64) {
            let tile = self.side as f64 / tiles as f64;
            let g = ((p as f64 + 0.5) / tile - 0.5).clamp(0.0, (tiles - 1) as f64);
            let i0 = math::floor(g) as usize;
            (i0, (i0 + 1).min(tiles - 1), g - i0 as f64)
        };
        let (tx0, tx1, wx) = axis(x, self.tiles_x);
        let (ty0, ty1, wy) = axis(y, self.tiles_y);
        let top = self.lut_value(tx0, ty0, v) * (1.0 - wx) + self.lut_value(tx1, ty0, v) * wx;
        let bottom = self.lut_value(tx0, ty1, v) * (1.0 - wx) + self.lut_value(tx1, ty1, v) * wx;
        (top * (1.0 - wy) + bottom * wy).clamp(0.0, 255.0)
    }
}

fn tile_lut(hist: &mut [f64], n: f64, clip_limit: f64) -> TileLut {
    let occupied: Vec<usize> = (0..hist.len()).filter(|&b| hist[b] > 0.0).collect();
    let first = match occupied.as_slice() {
        [] | [_] => return TileLut::Identity,
        [first, ..] => *first,
    };
    let ceiling = clip_limit * n;
    let mut excess = 0.0;
    for c in hist.iter_mut() {
        if *c > ceiling {
            excess += *c - ceiling;
            *c = ceiling;
        }
    }
    let share = excess / hist.len() as f64;
    let mut cdf = 0.0;
    let cdf_table: Vec<f64> = hist
        .iter()
        .map(|&c| {
            cdf += c + share;
            cdf
        })
        .collect();
    let base = cdf_table[first];
    let denom = n - base;
    if denom <= 0.0 {
        return TileLut::Identity;
    }
    TileLut::Table(
        cdf_table
            .iter()
            .map(|&c| (255.0 * (c - base) / denom).clamp(0.0, 255.0))
            .collect(),
    )
}

/// Tile-based contrast-limited AHE with bilinear blending between tiles.
///
/// Input is expected in `[0, 255]`; output stays in `[0, 255]`.
pub fn equalize_adaptive(img: &GrayImage, p: &AheParams) -> Result<GrayImage> {
    let mapping = AheMapping::build(img, p)?;
    let side = img.side;
    GrayImage::from_fn(side, |x, y| mapping.apply(x, y, img.get(x, y)))
}

/// Affine min-max map onto `[-1, 1]`; a constant image maps to zeros.
pub fn normalize(img: &GrayImage) -> GrayImage {
    let (lo, hi) = img.min_max();
    let range = hi - lo;
    let data = if range > 0.0 {
        img.data.iter().map(|&v| 2.0 * (v - lo) / range - 1.0).collect()
    } else {
        vec![0.0; img.data.len()]
    };
    GrayImage { side: img.side, data }
}

/// Full chain: grayscale, resize, AHE, normalize.
pub fn preprocess(img: &RawImage, p: &PreprocessParams) -> Result<GrayImage> {
    p.validate()?;
    let gray = to_grayscale(img)?;
    let resized = resize(&gray, p.size)?;
    let equalized = equalize_adaptive(&resized, &p.ahe)?;
    Ok(normalize(&equalized))
}
