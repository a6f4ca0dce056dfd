//! Dataset noise diagnostics: background noise sigma and background colour
//! instability.

use serde::{Deserialize, Serialize};

use super::filter::gaussian_blur;
use super::{normalize_alpha, ImagingError, RasterImage, Result};

/// Side of the square tiles used to find flat regions.
pub const TILE_SIZE: usize = 16;
/// A tile is flat when the standard deviation of its blurred intensities is
/// below this many intensity units.
pub const FLATNESS_CUTOFF: f64 = 8.0;
pub const NOISE_BLUR_SIGMA: f32 = 2.0;
/// Minimum CIELAB L* of a light background pixel.
pub const LIGHTNESS_CUTOFF: f64 = 80.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub background_noise_sigma: f64,
    pub color_instability_mu: f64,
}

pub fn noise_report(img: &RasterImage) -> Result<NoiseReport> {
    Ok(NoiseReport {
        background_noise_sigma: background_noise_sigma(img)?,
        color_instability_mu: color_instability(img),
    })
}

fn std_dev(values: impl Iterator<Item = f64> + Clone) -> f64 {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    if n == 0 {
        return 0.0;
    }
    let mean = sum / n as f64;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
    var.sqrt()
}

/// Standard deviation of the high-pass residual `img - blur(img)` pooled over
/// flat tiles.
///
/// Flatness is judged on the blurred tile so that sensor noise itself does
/// not disqualify a background region.
pub fn background_noise_sigma(img: &RasterImage) -> Result<f64> {
    let (w, h) = (img.width() as usize, img.height() as usize);
    if w < TILE_SIZE || h < TILE_SIZE {
        return Err(ImagingError::Diagnostics(format!(
            "image {w}x{h} is smaller than one {TILE_SIZE}x{TILE_SIZE} tile"
        )));
    }
    let luma = img.luma();
    let radius = (3.0 * NOISE_BLUR_SIGMA).ceil() as usize;
    let blurred = gaussian_blur(&luma, w, h, NOISE_BLUR_SIGMA, radius);

    let mut residual = Vec::new();
    for ty in 0..h / TILE_SIZE {
        for tx in 0..w / TILE_SIZE {
            let idx = move || {
                (0..TILE_SIZE).flat_map(move |dy| {
                    (0..TILE_SIZE).map(move |dx| (ty * TILE_SIZE + dy) * w + tx * TILE_SIZE + dx)
                })
            };
            let flat = std_dev(idx().map(|i| blurred[i] as f64)) < FLATNESS_CUTOFF;
            if flat {
                residual.extend(idx().map(|i| luma[i] as f64 - blurred[i] as f64));
            }
        }
    }
    Ok(std_dev(residual.iter().copied()))
}

fn srgb_to_linear(c: u8) -> f64 {
    let v = c as f64 / 255.0;
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

/// sRGB to CIELAB under D65.
pub(crate) fn srgb_to_lab(rgb: [u8; 3]) -> [f64; 3] {
    let [r, g, b] = rgb.map(srgb_to_linear);
    let x = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
    let y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
    let z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
    let (xn, yn, zn) = (0.95047, 1.0, 1.08883);
    let f = |t: f64| {
        let delta: f64 = 6.0 / 29.0;
        if t > delta.powi(3) {
            t.cbrt()
        } else {
            t / (3.0 * delta * delta) + 4.0 / 29.0
        }
    };
    let (fx, fy, fz) = (f(x / xn), f(y / yn), f(z / zn));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

/// Mean Euclidean distance of (a*, b*) from its centroid over pixels with
/// L* above [`LIGHTNESS_CUTOFF`]. Zero when fewer than two pixels qualify.
pub fn color_instability(img: &RasterImage) -> f64 {
    let rgb = normalize_alpha(img);
    let chroma: Vec<(f64, f64)> = rgb
        .data()
        .chunks_exact(3)
        .map(|p| srgb_to_lab([p[0], p[1], p[2]]))
        .filter(|lab| lab[0] > LIGHTNESS_CUTOFF)
        .map(|lab| (lab[1], lab[2]))
        .collect();
    if chroma.len() < 2 {
        return 0.0;
    }
    let n = chroma.len() as f64;
    let (ma, mb) = chroma
        .iter()
        .fold((0.0, 0.0), |(sa, sb), (a, b)| (sa + a, sb + b));
    let (ma, mb) = (ma / n, mb / n);
    chroma
        .iter()
        .map(|(a, b)| ((a - ma).powi(2) + (b - mb).powi(2)).sqrt())
        .sum::<f64>()
        / n
}
