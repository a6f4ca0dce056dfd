//! Four-stage Canny edge detection: Gaussian smoothing, Sobel gradients,
//! non-maximum suppression and two-threshold hysteresis.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::filter::{gaussian_blur, separable};
use super::{normalize_alpha, EdgeMap, ImagingError, PixelLayout, RasterImage, Result};

/// Hysteresis thresholds plus Sobel aperture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    pub low: f32,
    pub high: f32,
    pub aperture: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_id: Option<String>,
}

impl CannyParams {
    pub fn new(low: f32, high: f32, aperture: u32) -> Result<Self> {
        let p = Self {
            low,
            high,
            aperture,
            config_id: None,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.config_id = Some(id.into());
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !matches!(self.aperture, 3 | 5 | 7) {
            return Err(ImagingError::Params(format!(
                "aperture must be 3, 5 or 7, got {}",
                self.aperture
            )));
        }
        if !(self.low.is_finite() && self.high.is_finite()) || self.low < 0.0 {
            return Err(ImagingError::Params(format!(
                "thresholds must be finite and non-negative, got {}/{}",
                self.low, self.high
            )));
        }
        if self.low > self.high {
            return Err(ImagingError::Params(format!(
                "low threshold {} exceeds high threshold {}",
                self.low, self.high
            )));
        }
        Ok(())
    }

    /// Pre-smoothing sigma: 1.4 at aperture 3, proportional to the aperture.
    pub fn smoothing_sigma(&self) -> f32 {
        1.4 * self.aperture as f32 / 3.0
    }

    /// Pre-smoothing kernel radius: 2 at aperture 3, `aperture - 1` in general.
    pub fn smoothing_radius(&self) -> usize {
        self.aperture as usize - 1
    }

    /// Parses `low,high,aperture`.
    pub fn parse_triple(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(ImagingError::Params(format!(
                "expected low,high,aperture but got {s:?}"
            )));
        }
        let num = |v: &str| {
            v.parse::<f32>()
                .map_err(|_| ImagingError::Params(format!("not a number: {v:?}")))
        };
        let aperture = parts[2]
            .parse::<u32>()
            .map_err(|_| ImagingError::Params(format!("aperture not an integer: {:?}", parts[2])))?;
        Self::new(num(parts[0])?, num(parts[1])?, aperture)
    }
}

impl fmt::Display for CannyParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(id) = &self.config_id {
            write!(f, "{id} ")?;
        }
        write!(f, "({},{},{})", self.low, self.high, self.aperture)
    }
}

/// Smoothing and derivative taps of an `aperture`-sized Sobel operator
/// (binomial smoothing, binomial-smoothed central difference). Taps are
/// unnormalized so gradient magnitudes match the usual threshold scale.
fn sobel_taps(aperture: u32) -> (Vec<f32>, Vec<f32>) {
    match aperture {
        3 => (vec![1.0, 2.0, 1.0], vec![-1.0, 0.0, 1.0]),
        5 => (
            vec![1.0, 4.0, 6.0, 4.0, 1.0],
            vec![-1.0, -2.0, 0.0, 2.0, 1.0],
        ),
        7 => (
            vec![1.0, 6.0, 15.0, 20.0, 15.0, 6.0, 1.0],
            vec![-1.0, -4.0, -5.0, 0.0, 5.0, 4.0, 1.0],
        ),
        _ => unreachable!("aperture validated"),
    }
}

/// Gradient components and L2 magnitude of a luma plane.
pub(crate) struct Gradients {
    pub gx: Vec<f32>,
    pub gy: Vec<f32>,
    pub magnitude: Vec<f32>,
}

pub(crate) fn gradients(plane: &[f32], width: usize, height: usize, aperture: u32) -> Gradients {
    let (smooth, deriv) = sobel_taps(aperture);
    let gx = separable(plane, width, height, &deriv, &smooth);
    let gy = separable(plane, width, height, &smooth, &deriv);
    let magnitude = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
    Gradients { gx, gy, magnitude }
}

/// Keeps pixels that are maxima along their quantized gradient direction.
/// The outermost ring is always suppressed.
fn non_maximum_suppression(g: &Gradients, width: usize, height: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; width * height];
    if width < 3 || height < 3 {
        return out;
    }
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let i = y * width + x;
            let m = g.magnitude[i];
            if m <= 0.0 {
                continue;
            }
            let mut angle = g.gy[i].atan2(g.gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            // (dx, dy) toward the neighbour on the positive gradient side.
            let (dx, dy): (isize, isize) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let at = |ox: isize, oy: isize| {
                g.magnitude[(y as isize + oy) as usize * width + (x as isize + ox) as usize]
            };
            let behind = at(-dx, -dy);
            let ahead = at(dx, dy);
            // Strict on one side so two-pixel plateaus thin to one pixel.
            if m > behind && m >= ahead {
                out[i] = m;
            }
        }
    }
    out
}

/// Strong pixels (>= high) seed an 8-connected flood through weak pixels
/// (>= low).
fn hysteresis(thin: &[f32], width: usize, height: usize, low: f32, high: f32) -> Vec<u8> {
    let mut out = vec![0u8; width * height];
    let candidate = |v: f32| v > 0.0 && v >= low;
    let mut stack = Vec::new();
    for i in 0..thin.len() {
        if out[i] == 0 && thin[i] > 0.0 && thin[i] >= high {
            out[i] = 255;
            stack.push(i);
            while let Some(j) = stack.pop() {
                let (jx, jy) = ((j % width) as isize, (j / width) as isize);
                for oy in -1..=1isize {
                    for ox in -1..=1isize {
                        let (nx, ny) = (jx + ox, jy + oy);
                        if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                            continue;
                        }
                        let n = ny as usize * width + nx as usize;
                        if out[n] == 0 && candidate(thin[n]) {
                            out[n] = 255;
                            stack.push(n);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Runs Canny on the luma of `img`. RGBA input is composited over white
/// first.
pub fn canny(img: &RasterImage, params: &CannyParams) -> Result<EdgeMap> {
    params.validate()?;
    let luma = if img.layout() == PixelLayout::Rgba8 {
        normalize_alpha(img).luma()
    } else {
        img.luma()
    };
    let (w, h) = (img.width() as usize, img.height() as usize);
    let smoothed = gaussian_blur(
        &luma,
        w,
        h,
        params.smoothing_sigma(),
        params.smoothing_radius(),
    );
    let grads = gradients(&smoothed, w, h, params.aperture);
    let thin = non_maximum_suppression(&grads, w, h);
    let data = hysteresis(&thin, w, h, params.low, params.high);
    EdgeMap::new(img.width(), img.height(), data)
}
