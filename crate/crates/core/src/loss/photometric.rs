use super::ssim::ssim_with_grad;
use crate::error::{Error, Result};
use crate::imaging::Image;

/// `(1 − λ)·L1 + λ·(1 − SSIM)` and its gradient with respect to `rendered`.
pub fn photometric_loss(rendered: &Image, target: &Image, lambda_ssim: f64) -> Result<(f64, Image)> {
    if !rendered.same_shape(target) {
        return Err(Error::ShapeMismatch(format!(
            "rendered {}x{}x{} vs target {}x{}x{}",
            rendered.width, rendered.height, rendered.channels, target.width, target.height, target.channels
        )));
    }
    let n = rendered.data.len() as f64;
    let mut grad = Image::new(rendered.width, rendered.height, rendered.channels);
    let mut l1 = 0.0;
    for ((g, r), t) in grad.data.iter_mut().zip(&rendered.data).zip(&target.data) {
        let d = r - t;
        l1 += d.abs();
        // sign(0) = 0
        *g = (1.0 - lambda_ssim) * if d > 0.0 { 1.0 } else if d < 0.0 { -1.0 } else { 0.0 } / n;
    }
    l1 /= n;
    let mut loss = (1.0 - lambda_ssim) * l1;
    if lambda_ssim != 0.0 {
        let (s, sg) = ssim_with_grad(rendered, target, true)?;
        loss += lambda_ssim * (1.0 - s);
        for (g, d) in grad.data.iter_mut().zip(&sg.unwrap().data) {
            *g -= lambda_ssim * d;
        }
    }
    Ok((loss, grad))
}
