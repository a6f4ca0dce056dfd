use image::imageops::FilterType;

use super::{PixelLayout, RasterImage, Result};

pub const DEFAULT_MAX_DIM: u32 = 4000;

/// Composites onto opaque white and returns RGB8. RGB input is returned
/// unchanged; gray input is replicated into three channels.
pub fn normalize_alpha(img: &RasterImage) -> RasterImage {
    let data: Vec<u8> = match img.layout() {
        PixelLayout::Rgb8 => return img.clone(),
        PixelLayout::Gray8 => img.data().iter().flat_map(|&v| [v, v, v]).collect(),
        PixelLayout::Rgba8 => img
            .data()
            .chunks_exact(4)
            .flat_map(|p| {
                let alpha = p[3] as f64 / 255.0;
                let blend = |c: u8| (alpha * c as f64 + (1.0 - alpha) * 255.0).round() as u8;
                [blend(p[0]), blend(p[1]), blend(p[2])]
            })
            .collect(),
    };
    RasterImage::new(img.width(), img.height(), PixelLayout::Rgb8, data)
        .expect("same dimensions, three channels")
}

/// Downscales so neither side exceeds `max_dim`, using Catmull-Rom bicubic
/// interpolation. Images already within bounds are returned unchanged.
pub fn adaptive_rescale(img: &RasterImage, max_dim: u32) -> RasterImage {
    let (w, h) = (img.width(), img.height());
    let longest = w.max(h);
    if longest <= max_dim {
        return img.clone();
    }
    let scale = max_dim as f64 / longest as f64;
    let target = |v: u32| ((v as f64 * scale).round() as u32).clamp(1, max_dim);
    let (nw, nh) = (target(w), target(h));
    let resized = img.to_dynamic().resize_exact(nw, nh, FilterType::CatmullRom);
    RasterImage::from_dynamic(resized)
}

/// Alpha normalization followed by adaptive rescaling.
pub fn preprocess(img: &RasterImage, max_dim: u32) -> Result<RasterImage> {
    Ok(adaptive_rescale(&normalize_alpha(img), max_dim))
}
