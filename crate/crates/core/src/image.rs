use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Grayscale raster, row-major, intensities nominally in `[0, 255]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::Shape(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if let Some(i) = pixels.iter().position(|p| !p.is_finite()) {
            return Err(Error::Data(format!("pixel {i} is not finite")));
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Image {
            width,
            height,
            pixels: alloc::vec![value; width * height],
        }
    }

    /// `f(row, col)`
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Image {
            width,
            height,
            pixels,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.pixels[row * self.width + col] = value;
    }

    #[inline]
    pub fn row(&self, row: usize) -> &[f64] {
        &self.pixels[row * self.width..(row + 1) * self.width]
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn is_finite(&self) -> bool {
        self.pixels.iter().all(|p| p.is_finite())
    }

    /// Top-left `height × width` sub-image.
    pub fn crop(&self, height: usize, width: usize) -> Result<Image> {
        if height > self.height || width > self.width {
            return Err(Error::Shape(format!(
                "cannot crop {}x{} to {width}x{height}",
                self.width, self.height
            )));
        }
        Ok(Image::from_fn(width, height, |r, c| self.get(r, c)))
    }

    pub fn squared_distance(&self, other: &Image) -> Result<f64> {
        self.check_same_shape(other)?;
        Ok(self
            .pixels
            .iter()
            .zip(&other.pixels)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    pub fn norm(&self) -> f64 {
        libm::sqrt(self.pixels.iter().map(|p| p * p).sum())
    }

    /// Intensities clamped to `[0, 255]` and rounded.
    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|&p| libm::round(p.clamp(0.0, 255.0)) as u8)
            .collect()
    }
}

/// An image padded to block-size multiples, remembering its original size.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedImage {
    pub image: Image,
    pub original_height: usize,
    pub original_width: usize,
}

impl PaddedImage {
    pub fn crop(&self, img: &Image) -> Result<Image> {
        img.crop(self.original_height, self.original_width)
    }
}

/// Pads by edge replication so both sides are multiples of `block_size`.
pub fn pad_image(img: &Image, block_size: usize) -> PaddedImage {
    let round_up = |n: usize| n.div_ceil(block_size.max(1)) * block_size.max(1);
    let (h, w) = (round_up(img.height), round_up(img.width));
    let image = if (h, w) == (img.height, img.width) || img.is_empty() {
        img.clone()
    } else {
        Image::from_fn(w, h, |r, c| {
            img.get(r.min(img.height - 1), c.min(img.width - 1))
        })
    };
    PaddedImage {
        image,
        original_height: img.height,
        original_width: img.width,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |r, c| (r * 1000 + c) as f64)
    }

    #[test]
    fn pad_keeps_aligned_images() {
        let img = ramp(64, 64);
        let padded = pad_image(&img, 32);
        assert_eq!(padded.image, img);
        assert_eq!((padded.original_height, padded.original_width), (64, 64));
    }

    #[test]
    fn pad_replicates_last_row() {
        // 33 rows x 64 cols
        let img = ramp(64, 33);
        let padded = pad_image(&img, 32);
        assert_eq!((padded.image.height(), padded.image.width()), (64, 64));
        for r in 33..64 {
            assert_eq!(padded.image.row(r), img.row(32));
        }
        assert_eq!(padded.crop(&padded.image).unwrap(), img);
    }

    #[test]
    fn pad_to_next_multiple() {
        let padded = pad_image(&ramp(40, 40), 32);
        assert_eq!((padded.image.height(), padded.image.width()), (64, 64));
        assert_eq!(padded.image.get(63, 63), padded.image.get(39, 39));
    }

    #[test]
    fn rejects_bad_buffers() {
        assert!(matches!(
            Image::new(2, 2, alloc::vec![0.0; 3]),
            Err(Error::Shape(_))
        ));
        assert!(matches!(
            Image::new(1, 2, alloc::vec![0.0, f64::NAN]),
            Err(Error::Data(_))
        ));
    }
}
