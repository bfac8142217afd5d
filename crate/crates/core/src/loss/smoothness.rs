use super::mask::ProximityMask;
use super::sobel::{correlate_adjoint, sobel_plane, DERIV, RAMP_RESPONSE, SMOOTH};
use crate::error::{Error, Result};
use crate::imaging::Image;

#[inline]
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Edge-aware depth smoothness, weighted per pixel by `mask`.
///
/// Sobel responses are divided by [`RAMP_RESPONSE`] so that a unit-slope
/// ramp has gradient 1, which keeps `beta` in luminance-per-pixel units.
/// Returns the loss and its gradient with respect to `depth`.
pub fn edge_aware_smoothness(
    depth: &[f64],
    image: &Image,
    beta: f64,
    mask: &ProximityMask,
) -> Result<(f64, Vec<f64>)> {
    let (w, h) = (image.width, image.height);
    if depth.len() != w * h || mask.width != w || mask.height != h {
        return Err(Error::ShapeMismatch(format!(
            "depth {} / mask {}x{} vs image {w}x{h}",
            depth.len(),
            mask.width,
            mask.height
        )));
    }
    if w < 5 || h < 5 {
        return Err(Error::ImageTooSmall { width: w, height: h, min: 5 });
    }
    let lum = image.luminance();
    let (ix, iy) = sobel_plane(&lum.data, w, h);
    let (dx, dy) = sobel_plane(depth, w, h);
    let n = (w * h) as f64;
    let mut loss = 0.0;
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for p in 0..w * h {
        let m = mask.weights[p];
        let ex = (-beta * (ix[p] / RAMP_RESPONSE).abs()).exp();
        let ey = (-beta * (iy[p] / RAMP_RESPONSE).abs()).exp();
        let ddx = dx[p] / RAMP_RESPONSE;
        let ddy = dy[p] / RAMP_RESPONSE;
        loss += m * (ddx.abs() * ex + ddy.abs() * ey);
        gx[p] = m * ex * sign(ddx) / (n * RAMP_RESPONSE);
        gy[p] = m * ey * sign(ddy) / (n * RAMP_RESPONSE);
    }
    let ax = correlate_adjoint(&gx, w, h, &DERIV, &SMOOTH);
    let ay = correlate_adjoint(&gy, w, h, &SMOOTH, &DERIV);
    let grad = ax.iter().zip(&ay).map(|(a, b)| a + b).collect();
    Ok((loss / n, grad))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::mask::MaskVariant;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rand_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.random()).collect()
    }

    #[test]
    fn constant_depth_is_free() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let img = Image::from_data(10, 9, 3, rand_vec(&mut rng, 270));
        let (l, g) = edge_aware_smoothness(&[2.5; 90], &img, 10.0, &ProximityMask::ones(10, 9, MaskVariant::Decay)).unwrap();
        assert!(l.abs() < 1e-12);
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn depth_step_on_image_edge_is_suppressed() {
        let (w, h) = (16, 12);
        let step: Vec<f64> = (0..w * h).map(|p| if p % w < 8 { 1.0 } else { 3.0 }).collect();
        let img = Image::from_data(w, h, 1, (0..w * h).map(|p| if p % w < 8 { 0.0 } else { 1.0 }).collect());
        let flat = Image::new(w, h, 1);
        let mask = ProximityMask::ones(w, h, MaskVariant::Decay);
        let (edge, _) = edge_aware_smoothness(&step, &img, 200.0, &mask).unwrap();
        let (plain, _) = edge_aware_smoothness(&step, &flat, 200.0, &mask).unwrap();
        assert!(plain > 0.1);
        assert!(edge < 1e-9 * plain);
    }

    #[test]
    fn unmasked_zero_beta_is_total_variation() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let (w, h) = (11, 8);
        let depth = rand_vec(&mut rng, w * h);
        let img = Image::from_data(w, h, 3, rand_vec(&mut rng, w * h * 3));
        let (l, _) = edge_aware_smoothness(&depth, &img, 0.0, &ProximityMask::ones(w, h, MaskVariant::Decay)).unwrap();
        let (dx, dy) = sobel_plane(&depth, w, h);
        let tv: f64 = dx.iter().zip(&dy).map(|(a, b)| (a.abs() + b.abs()) / RAMP_RESPONSE).sum::<f64>() / (w * h) as f64;
        assert!((l - tv).abs() < 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        let (w, h) = (9, 10);
        let depth = rand_vec(&mut rng, w * h);
        let img = Image::from_data(w, h, 3, rand_vec(&mut rng, w * h * 3));
        let mask = ProximityMask {
            width: w,
            height: h,
            weights: rand_vec(&mut rng, w * h),
            variant: MaskVariant::Decay,
        };
        let (_, g) = edge_aware_smoothness(&depth, &img, 10.0, &mask).unwrap();
        let step = 1e-7;
        for p in 0..w * h {
            let mut up = depth.clone();
            up[p] += step;
            let mut dn = depth.clone();
            dn[p] -= step;
            let fd = (edge_aware_smoothness(&up, &img, 10.0, &mask).unwrap().0
                - edge_aware_smoothness(&dn, &img, 10.0, &mask).unwrap().0)
                / (2.0 * step);
            assert!((g[p] - fd).abs() <= 1e-4 * fd.abs().max(1e-6), "{p}: {} vs {fd}", g[p]);
        }
    }

    #[test]
    fn shape_mismatch() {
        let img = Image::new(8, 8, 3);
        assert!(edge_aware_smoothness(&[0.0; 63], &img, 1.0, &ProximityMask::ones(8, 8, MaskVariant::Decay)).is_err());
    }
}
