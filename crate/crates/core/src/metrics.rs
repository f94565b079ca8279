use crate::error::Result;
use crate::image::Image;

pub const PEAK: f64 = 255.0;

/// Peak signal-to-noise ratio in dB with peak 255. Identical images give
/// `f64::INFINITY`.
pub fn psnr(reference: &Image, test: &Image) -> Result<f64> {
    let sq = reference.squared_distance(test)?;
    if sq == 0.0 {
        return Ok(f64::INFINITY);
    }
    let mse = sq / reference.len() as f64;
    Ok(10.0 * libm::log10(PEAK * PEAK / mse))
}
