//! 5×5 Sobel-Feldman gradients with replicate padding.

use crate::error::{Error, Result};
use crate::imaging::Image;

pub const SMOOTH: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];
pub const DERIV: [f64; 5] = [-1.0, -2.0, 0.0, 2.0, 1.0];
/// Response of either kernel to a unit-slope ramp.
pub const RAMP_RESPONSE: f64 = 128.0;

#[inline]
fn clamp_index(i: isize, n: usize) -> usize {
    i.clamp(0, n as isize - 1) as usize
}

/// Separable correlation `out(y, x) = Σ_ij ky[i] kx[j] img(y+i−2, x+j−2)`.
fn correlate(src: &[f64], w: usize, h: usize, kx: &[f64; 5], ky: &[f64; 5]) -> Vec<f64> {
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (j, k) in kx.iter().enumerate() {
                acc += k * src[y * w + clamp_index(x as isize + j as isize - 2, w)];
            }
            rows[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (i, k) in ky.iter().enumerate() {
                acc += k * rows[clamp_index(y as isize + i as isize - 2, h) * w + x];
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Adjoint of [`correlate`], scattering through the clamped indices.
pub(crate) fn correlate_adjoint(g: &[f64], w: usize, h: usize, kx: &[f64; 5], ky: &[f64; 5]) -> Vec<f64> {
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let v = g[y * w + x];
            if v == 0.0 {
                continue;
            }
            for (i, k) in ky.iter().enumerate() {
                rows[clamp_index(y as isize + i as isize - 2, h) * w + x] += k * v;
            }
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let v = rows[y * w + x];
            if v == 0.0 {
                continue;
            }
            for (j, k) in kx.iter().enumerate() {
                out[y * w + clamp_index(x as isize + j as isize - 2, w)] += k * v;
            }
        }
    }
    out
}

pub(crate) fn sobel_plane(src: &[f64], w: usize, h: usize) -> (Vec<f64>, Vec<f64>) {
    (correlate(src, w, h, &DERIV, &SMOOTH), correlate(src, w, h, &SMOOTH, &DERIV))
}

/// Horizontal and vertical gradients. RGB input is reduced to luminance
/// first, so outputs are single-channel.
pub fn sobel_gradients_5x5(image: &Image) -> Result<(Image, Image)> {
    if image.width < 5 || image.height < 5 {
        return Err(Error::ImageTooSmall {
            width: image.width,
            height: image.height,
            min: 5,
        });
    }
    let lum = image.luminance();
    let (gx, gy) = sobel_plane(&lum.data, lum.width, lum.height);
    Ok((
        Image::from_data(lum.width, lum.height, 1, gx),
        Image::from_data(lum.width, lum.height, 1, gy),
    ))
}
