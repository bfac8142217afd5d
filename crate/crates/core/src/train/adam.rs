//! Adam with bias correction, one moment pair per learnable scalar.

use crate::gaussians::GaussianSet;
use crate::raster::GradientSet;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-15;
/// Higher SH bands learn this many times slower than the DC band.
pub const SH_REST_LR_DIVISOR: f64 = 20.0;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Moments {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Moments {
    fn zeros(n: usize) -> Self {
        Moments {
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn retain_rows(&mut self, keep: &[bool], stride: usize) {
        for buf in [&mut self.m, &mut self.v] {
            let mut w = 0;
            for (r, &k) in keep.iter().enumerate() {
                if k {
                    buf.copy_within(r * stride..(r + 1) * stride, w * stride);
                    w += 1;
                }
            }
            buf.truncate(w * stride);
        }
    }

    fn grow(&mut self, extra: usize) {
        self.m.extend(std::iter::repeat_n(0.0, extra));
        self.v.extend(std::iter::repeat_n(0.0, extra));
    }

    fn reset(&mut self) {
        self.m.fill(0.0);
        self.v.fill(0.0);
    }
}

/// Per-group learning rates for one step.
#[derive(Clone, Copy, Debug)]
pub struct LearningRates {
    pub means: f64,
    pub rotations: f64,
    pub log_scales: f64,
    pub opacity: f64,
    pub sh: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub means: Moments,
    pub rotations: Moments,
    pub log_scales: Moments,
    pub opacity: Moments,
    pub sh: Moments,
    sh_stride: usize,
    /// Steps taken so far; shared by every group.
    pub step: u64,
}

fn update(params: &mut [f64], grads: &[f64], mom: &mut Moments, lr: impl Fn(usize) -> f64, c1: f64, c2: f64) {
    debug_assert_eq!(params.len(), grads.len());
    debug_assert_eq!(params.len(), mom.m.len());
    for (i, ((p, &g), (m, v))) in params
        .iter_mut()
        .zip(grads)
        .zip(mom.m.iter_mut().zip(mom.v.iter_mut()))
        .enumerate()
    {
        *m = BETA1 * *m + (1.0 - BETA1) * g;
        *v = BETA2 * *v + (1.0 - BETA2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p -= lr(i) * m_hat / (v_hat.sqrt() + EPSILON);
    }
}

impl Adam {
    pub fn new(g: &GaussianSet) -> Self {
        let n = g.len();
        Adam {
            means: Moments::zeros(3 * n),
            rotations: Moments::zeros(4 * n),
            log_scales: Moments::zeros(3 * n),
            opacity: Moments::zeros(n),
            sh: Moments::zeros(g.sh_stride() * n),
            sh_stride: g.sh_stride(),
            step: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.opacity.m.len()
    }

    pub fn step(&mut self, g: &mut GaussianSet, grads: &GradientSet, lr: &LearningRates) {
        assert_eq!(g.len(), self.rows(), "optimizer rows out of sync");
        assert_eq!(grads.len(), g.len(), "gradient rows out of sync");
        self.step += 1;
        let c1 = 1.0 - BETA1.powi(self.step as i32);
        let c2 = 1.0 - BETA2.powi(self.step as i32);
        update(
            g.means.as_flattened_mut(),
            grads.means.as_flattened(),
            &mut self.means,
            |_| lr.means,
            c1,
            c2,
        );
        update(
            g.rotations.as_flattened_mut(),
            grads.rotations.as_flattened(),
            &mut self.rotations,
            |_| lr.rotations,
            c1,
            c2,
        );
        update(
            g.log_scales.as_flattened_mut(),
            grads.log_scales.as_flattened(),
            &mut self.log_scales,
            |_| lr.log_scales,
            c1,
            c2,
        );
        update(&mut g.opacity_logits, &grads.opacity_logits, &mut self.opacity, |_| lr.opacity, c1, c2);
        let stride = self.sh_stride;
        update(
            &mut g.sh_coeffs,
            &grads.sh_coeffs,
            &mut self.sh,
            |i| if i % stride < 3 { lr.sh } else { lr.sh / SH_REST_LR_DIVISOR },
            c1,
            c2,
        );
    }

    /// Drops rows whose `keep` flag is false.
    pub fn retain_mask(&mut self, keep: &[bool]) {
        assert_eq!(keep.len(), self.rows());
        self.means.retain_rows(keep, 3);
        self.rotations.retain_rows(keep, 4);
        self.log_scales.retain_rows(keep, 3);
        self.opacity.retain_rows(keep, 1);
        self.sh.retain_rows(keep, self.sh_stride);
    }

    /// Appends `extra` zero-moment rows.
    pub fn grow(&mut self, extra: usize) {
        self.means.grow(3 * extra);
        self.rotations.grow(4 * extra);
        self.log_scales.grow(3 * extra);
        self.opacity.grow(extra);
        self.sh.grow(self.sh_stride * extra);
    }

    pub fn reset_opacity(&mut self) {
        self.opacity.reset();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussians::SetTag;

    fn one(x: f64) -> GaussianSet {
        let mut g = GaussianSet::new(1);
        g.push_rgb([x, 0.0, 0.0], [1.0, 0.0, 0.0, 0.0], [0.0; 3], 0.0, [0.5; 3], SetTag::Vision);
        g
    }

    fn lrs(v: f64) -> LearningRates {
        LearningRates {
            means: v,
            rotations: v,
            log_scales: v,
            opacity: v,
            sh: v,
        }
    }

    #[test]
    fn first_step_moves_by_lr() {
        // With bias correction the first update is lr·sign(g).
        let mut g = one(1.0);
        let mut adam = Adam::new(&g);
        let mut grads = GradientSet::zeros_like(&g);
        grads.means[0] = [3.0, -0.5, 0.0];
        adam.step(&mut g, &grads, &lrs(0.01));
        assert!((g.means[0][0] - 0.99).abs() < 1e-12);
        assert!((g.means[0][1] - 0.01).abs() < 1e-12);
        assert_eq!(g.means[0][2], 0.0);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut g = one(2.0);
        let mut adam = Adam::new(&g);
        for _ in 0..2000 {
            let mut grads = GradientSet::zeros_like(&g);
            grads.means[0][0] = 2.0 * (g.means[0][0] - 0.5);
            adam.step(&mut g, &grads, &lrs(0.01));
        }
        assert!((g.means[0][0] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn sh_rest_bands_are_slower() {
        let mut g = one(0.0);
        let mut adam = Adam::new(&g);
        let mut grads = GradientSet::zeros_like(&g);
        grads.sh_coeffs.fill(1.0);
        let before = g.sh_coeffs.clone();
        adam.step(&mut g, &grads, &lrs(0.02));
        assert!((before[0] - g.sh_coeffs[0] - 0.02).abs() < 1e-12);
        assert!((before[5] - g.sh_coeffs[5] - 0.001).abs() < 1e-12);
    }

    #[test]
    fn rows_track_retain_and_grow() {
        let mut g = one(0.0);
        g.duplicate(0);
        g.duplicate(0);
        let mut adam = Adam::new(&g);
        adam.opacity.m = vec![1.0, 2.0, 3.0];
        adam.retain_mask(&[true, false, true]);
        assert_eq!(adam.opacity.m, vec![1.0, 3.0]);
        adam.grow(2);
        assert_eq!(adam.rows(), 4);
        assert_eq!(adam.sh.m.len(), 4 * 12);
        assert_eq!(adam.opacity.m, vec![1.0, 3.0, 0.0, 0.0]);
    }
}
