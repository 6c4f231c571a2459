//! Image decoding, directory listing and PNG dumps.

use std::path::{Path, PathBuf};

use gaborset_core::preprocess::RawImage;
use image::{DynamicImage, GrayImage as PngGray, ImageReader};

use crate::error::{Error, Result};

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "jpg", "jpeg"];

pub fn is_image_path(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
}

/// PNG/JPEG files directly inside `dir`, sorted by path.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        if path.is_file() && is_image_path(&path) {
            paths.push(path);
        }
    }
    paths.sort();
    Ok(paths)
}

/// Decodes by content (not extension) into an 8-bit gray or RGB image.
pub fn load_image(path: &Path) -> Result<RawImage> {
    let image_err = |source| Error::Image { path: path.to_path_buf(), source };
    let decoded = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?
        .decode()
        .map_err(image_err)?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    let raw = if decoded.color().has_color() {
        RawImage::new(w, h, 3, DynamicImage::ImageRgb8(decoded.to_rgb8()).into_bytes())
    } else {
        RawImage::new(w, h, 1, decoded.to_luma8().into_raw())
    };
    raw.map_err(|e| Error::Data(format!("{}: {e}", path.display())))
}

pub fn save_gray_u8(path: &Path, width: usize, height: usize, data: Vec<u8>) -> Result<()> {
    let img = PngGray::from_raw(width as u32, height as u32, data)
        .ok_or_else(|| Error::Data(format!("{}: buffer size mismatch", path.display())))?;
    img.save(path).map_err(|source| Error::Image { path: path.to_path_buf(), source })
}

/// Writes `values` (row-major, `side × side`) as a PNG, min-max stretched to
/// `0..=255`; constant input becomes mid-gray.
pub fn save_scaled_png(path: &Path, side: usize, values: &[f64]) -> Result<()> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    let data = values
        .iter()
        .map(|&v| if span > 0.0 { (255.0 * (v - lo) / span).round() as u8 } else { 128 })
        .collect();
    save_gray_u8(path, side, side, data)
}

pub fn ensure_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}
