//! Separable convolution over `f32` planes with replicated borders.

/// Normalized 1-D Gaussian taps over `[-radius, radius]`.
pub(crate) fn gaussian_kernel(sigma: f32, radius: usize) -> Vec<f32> {
    let r = radius as i64;
    let two_s2 = 2.0 * sigma * sigma;
    let mut taps: Vec<f32> = (-r..=r)
        .map(|i| (-((i * i) as f32) / two_s2).exp())
        .collect();
    let sum: f32 = taps.iter().sum();
    for t in &mut taps {
        *t /= sum;
    }
    taps
}

/// Convolves `plane` with `row_kernel` along x and then `col_kernel` along y.
/// Kernels must have odd length. Pixels outside the image replicate the
/// nearest border pixel.
pub(crate) fn separable(
    plane: &[f32],
    width: usize,
    height: usize,
    row_kernel: &[f32],
    col_kernel: &[f32],
) -> Vec<f32> {
    debug_assert_eq!(plane.len(), width * height);
    let rr = (row_kernel.len() / 2) as isize;
    let cr = (col_kernel.len() / 2) as isize;
    let clamp = |v: isize, hi: usize| v.clamp(0, hi as isize - 1) as usize;

    let mut tmp = vec![0.0f32; plane.len()];
    for y in 0..height {
        let row = &plane[y * width..(y + 1) * width];
        for x in 0..width {
            let mut acc = 0.0f32;
            for (k, w) in row_kernel.iter().enumerate() {
                let sx = clamp(x as isize + k as isize - rr, width);
                acc += w * row[sx];
            }
            tmp[y * width + x] = acc;
        }
    }

    let mut out = vec![0.0f32; plane.len()];
    for y in 0..height {
        for x in 0..width {
            let mut acc = 0.0f32;
            for (k, w) in col_kernel.iter().enumerate() {
                let sy = clamp(y as isize + k as isize - cr, height);
                acc += w * tmp[sy * width + x];
            }
            out[y * width + x] = acc;
        }
    }
    out
}

pub(crate) fn gaussian_blur(
    plane: &[f32],
    width: usize,
    height: usize,
    sigma: f32,
    radius: usize,
) -> Vec<f32> {
    let k = gaussian_kernel(sigma, radius);
    separable(plane, width, height, &k, &k)
}
