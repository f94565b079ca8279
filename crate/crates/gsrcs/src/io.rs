//! Grayscale image files.
//!
//! Anything the `image` crate decodes as PNG or PNM is accepted and reduced
//! to 8-bit luma. Output format follows the file extension.

use std::path::Path;

use gsrcs_core::Image;
use image::{GrayImage, ImageFormat};

use crate::error::{HarnessError, Result};

pub fn read_image(path: &Path) -> Result<Image> {
    let decoded = image::open(path).map_err(|source| HarnessError::Image {
        path: path.to_owned(),
        source,
    })?;
    let gray = decoded.into_luma8();
    let (w, h) = gray.dimensions();
    let pixels = gray.into_raw().into_iter().map(f64::from).collect();
    Ok(Image::new(w as usize, h as usize, pixels)?)
}

/// Writes `img` rounded and clamped to `[0, 255]`.
pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    let buf = GrayImage::from_raw(img.width() as u32, img.height() as u32, img.to_u8())
        .expect("buffer length matches dimensions");
    let format = ImageFormat::from_path(path).unwrap_or(ImageFormat::Png);
    buf.save_with_format(path, format)
        .map_err(|source| HarnessError::Image {
            path: path.to_owned(),
            source,
        })
}

/// File stem used to label results, e.g. `camera128` for `fixtures/camera128.pgm`.
pub fn image_name(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
