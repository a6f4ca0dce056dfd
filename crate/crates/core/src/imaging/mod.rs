//! Raster handling for flowchart images: preprocessing, Canny edge maps and
//! input noise diagnostics.

mod canny;
mod filter;
mod noise;
mod preprocess;

use std::path::Path;

use image::{DynamicImage, GrayImage, ImageBuffer, Luma, Rgb, Rgba};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use canny::{canny, CannyParams};
pub use noise::{
    background_noise_sigma, color_instability, noise_report, NoiseReport, FLATNESS_CUTOFF,
    LIGHTNESS_CUTOFF, NOISE_BLUR_SIGMA, TILE_SIZE,
};
pub use preprocess::{adaptive_rescale, normalize_alpha, preprocess, DEFAULT_MAX_DIM};

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("decode error: {0}")]
    Decode(String),
    #[error("invalid Canny parameters: {0}")]
    Params(String),
    #[error("diagnostics error: {0}")]
    Diagnostics(String),
    #[error("image io: {0}")]
    Io(#[from] image::ImageError),
}

pub type Result<T> = std::result::Result<T, ImagingError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PixelLayout {
    Gray8,
    Rgb8,
    Rgba8,
}

impl PixelLayout {
    pub fn channels(self) -> usize {
        match self {
            PixelLayout::Gray8 => 1,
            PixelLayout::Rgb8 => 3,
            PixelLayout::Rgba8 => 4,
        }
    }

    pub fn from_channels(channels: usize) -> Option<Self> {
        match channels {
            1 => Some(PixelLayout::Gray8),
            3 => Some(PixelLayout::Rgb8),
            4 => Some(PixelLayout::Rgba8),
            _ => None,
        }
    }
}

/// A decoded 8-bit pixel grid in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    layout: PixelLayout,
    data: Vec<u8>,
}

impl RasterImage {
    pub fn new(width: u32, height: u32, layout: PixelLayout, data: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(ImagingError::Decode(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        let expected = width as usize * height as usize * layout.channels();
        if data.len() != expected {
            return Err(ImagingError::Decode(format!(
                "pixel buffer holds {} bytes, expected {expected} for {width}x{height} {layout:?}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            layout,
            data,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel; `f` returns
    /// `layout.channels()` values.
    pub fn from_fn(
        width: u32,
        height: u32,
        layout: PixelLayout,
        mut f: impl FnMut(u32, u32) -> Vec<u8>,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width as usize * height as usize * layout.channels());
        for y in 0..height {
            for x in 0..width {
                let px = f(x, y);
                if px.len() != layout.channels() {
                    return Err(ImagingError::Decode(format!(
                        "pixel ({x},{y}) has {} channels, expected {}",
                        px.len(),
                        layout.channels()
                    )));
                }
                data.extend_from_slice(&px);
            }
        }
        Self::new(width, height, layout, data)
    }

    pub fn filled(width: u32, height: u32, layout: PixelLayout, value: &[u8]) -> Result<Self> {
        Self::from_fn(width, height, layout, |_, _| value.to_vec())
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn layout(&self) -> PixelLayout {
        self.layout
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> &[u8] {
        let c = self.layout.channels();
        let i = (y as usize * self.width as usize + x as usize) * c;
        &self.data[i..i + c]
    }

    /// ITU-R 601 luma per pixel. Alpha, when present, is ignored.
    pub fn luma(&self) -> Vec<f32> {
        match self.layout {
            PixelLayout::Gray8 => self.data.iter().map(|&v| v as f32).collect(),
            PixelLayout::Rgb8 | PixelLayout::Rgba8 => self
                .data
                .chunks_exact(self.layout.channels())
                .map(|p| 0.299 * p[0] as f32 + 0.587 * p[1] as f32 + 0.114 * p[2] as f32)
                .collect(),
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path.as_ref())?;
        Ok(Self::from_dynamic(img))
    }

    pub fn from_dynamic(img: DynamicImage) -> Self {
        let (width, height) = (img.width(), img.height());
        let (layout, data) = match img {
            DynamicImage::ImageLuma8(b) => (PixelLayout::Gray8, b.into_raw()),
            DynamicImage::ImageRgb8(b) => (PixelLayout::Rgb8, b.into_raw()),
            DynamicImage::ImageRgba8(b) => (PixelLayout::Rgba8, b.into_raw()),
            other if other.color().has_alpha() => (PixelLayout::Rgba8, other.to_rgba8().into_raw()),
            other if other.color().channel_count() <= 2 => {
                (PixelLayout::Gray8, other.to_luma8().into_raw())
            }
            other => (PixelLayout::Rgb8, other.to_rgb8().into_raw()),
        };
        Self {
            width,
            height,
            layout,
            data,
        }
    }

    pub fn to_dynamic(&self) -> DynamicImage {
        let (w, h) = (self.width, self.height);
        let data = self.data.clone();
        // Buffer lengths are checked at construction.
        match self.layout {
            PixelLayout::Gray8 => DynamicImage::ImageLuma8(
                ImageBuffer::<Luma<u8>, _>::from_raw(w, h, data).expect("gray buffer"),
            ),
            PixelLayout::Rgb8 => DynamicImage::ImageRgb8(
                ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, data).expect("rgb buffer"),
            ),
            PixelLayout::Rgba8 => DynamicImage::ImageRgba8(
                ImageBuffer::<Rgba<u8>, _>::from_raw(w, h, data).expect("rgba buffer"),
            ),
        }
    }

    /// Lossless PNG encoding of the pixel grid.
    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        let mut out = std::io::Cursor::new(Vec::new());
        self.to_dynamic()
            .write_to(&mut out, image::ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        self.to_dynamic()
            .save_with_format(path.as_ref(), image::ImageFormat::Png)?;
        Ok(())
    }
}

/// Binary edge map; every pixel is 0 or 255.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl EdgeMap {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self> {
        if data.len() != width as usize * height as usize {
            return Err(ImagingError::Decode(format!(
                "edge map holds {} bytes, expected {}",
                data.len(),
                width as usize * height as usize
            )));
        }
        if let Some(v) = data.iter().find(|&&v| v != 0 && v != 255) {
            return Err(ImagingError::Decode(format!(
                "edge map pixel value {v} is not binary"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn is_edge(&self, x: u32, y: u32) -> bool {
        self.data[y as usize * self.width as usize + x as usize] == 255
    }

    pub fn edge_count(&self) -> usize {
        self.data.iter().filter(|&&v| v == 255).count()
    }

    pub fn to_raster(&self) -> RasterImage {
        RasterImage {
            width: self.width,
            height: self.height,
            layout: PixelLayout::Gray8,
            data: self.data.clone(),
        }
    }

    pub fn to_png_bytes(&self) -> Result<Vec<u8>> {
        self.to_raster().to_png_bytes()
    }

    /// Writes a single-channel 8-bit PNG.
    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let buf = GrayImage::from_raw(self.width, self.height, self.data.clone())
            .expect("edge map buffer");
        buf.save_with_format(path.as_ref(), image::ImageFormat::Png)?;
        Ok(())
    }

    pub fn load_png(path: impl AsRef<Path>) -> Result<Self> {
        let img = image::open(path.as_ref())?;
        let gray = match img {
            DynamicImage::ImageLuma8(b) => b,
            other => {
                return Err(ImagingError::Decode(format!(
                    "edge map must be single-channel 8-bit, found {:?}",
                    other.color()
                )))
            }
        };
        let (w, h) = gray.dimensions();
        Self::new(w, h, gray.into_raw())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_length_mismatch() {
        let err = RasterImage::new(2, 2, PixelLayout::Rgb8, vec![0; 11]).unwrap_err();
        assert!(matches!(err, ImagingError::Decode(_)));
        assert!(RasterImage::new(0, 2, PixelLayout::Gray8, vec![]).is_err());
    }

    #[test]
    fn edge_map_rejects_non_binary() {
        assert!(EdgeMap::new(2, 1, vec![0, 128]).is_err());
        assert!(EdgeMap::new(2, 1, vec![0, 255]).is_ok());
    }

    #[test]
    fn edge_map_png_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("edges.png");
        let data: Vec<u8> = (0..37 * 23)
            .map(|i| if (i * 7919) % 5 == 0 { 255 } else { 0 })
            .collect();
        let map = EdgeMap::new(37, 23, data).unwrap();
        map.save_png(&path).unwrap();
        let back = EdgeMap::load_png(&path).unwrap();
        assert_eq!(map, back);
    }

    #[test]
    fn luma_uses_601_weights() {
        let img = RasterImage::new(1, 1, PixelLayout::Rgb8, vec![255, 0, 0]).unwrap();
        assert!((img.luma()[0] - 0.299 * 255.0).abs() < 1e-3);
    }
}
