//! Adaptive density control: clone, split, prune and opacity reset.

use nalgebra::Vector3;
use rand::Rng;
use rand_distr::StandardNormal;

use super::adam::Adam;
use crate::gaussians::GaussianSet;
use crate::geometry::{logit, quat_to_rotation, sigmoid};
use crate::raster::GradientSet;

/// Split children shrink their parent's scale by this factor.
pub const SPLIT_SCALE_DIVISOR: f64 = 1.6;
pub const SPLIT_CHILDREN: usize = 2;
/// Opacity ceiling applied by a reset.
pub const RESET_OPACITY: f64 = 0.01;

/// Running screen-space gradient statistics per Gaussian.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DensityStats {
    pub grad_norm_sum: Vec<f64>,
    pub count: Vec<u32>,
}

impl DensityStats {
    pub fn new(n: usize) -> Self {
        DensityStats {
            grad_norm_sum: vec![0.0; n],
            count: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.count.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count.is_empty()
    }

    /// Adds the gradient norm of every visible projected mean, converted
    /// from pixels to normalized device coordinates.
    pub fn accumulate(&mut self, grads: &GradientSet, width: usize, height: usize) {
        assert_eq!(grads.len(), self.len(), "stats rows out of sync");
        let (sx, sy) = (0.5 * width as f64, 0.5 * height as f64);
        for i in 0..grads.len() {
            if grads.visible[i] {
                let [gx, gy] = grads.mean2d[i];
                self.grad_norm_sum[i] += (gx * sx).hypot(gy * sy);
                self.count[i] += 1;
            }
        }
    }

    pub fn mean(&self, i: usize) -> f64 {
        if self.count[i] == 0 {
            0.0
        } else {
            self.grad_norm_sum[i] / self.count[i] as f64
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct DensifyParams {
    pub grad_threshold: f64,
    /// Absolute world-space scale separating clone from split.
    pub split_scale: f64,
    pub prune_opacity: f64,
    /// Gaussians whose largest world-space scale exceeds this are removed.
    pub prune_scale: f64,
    pub max_gaussians: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct DensifyReport {
    pub cloned: usize,
    pub split: usize,
    pub pruned: usize,
}

/// One density-control event. Gaussians with a large mean screen-space
/// gradient are cloned (small) or split in two (large); then the split
/// parents, near-transparent Gaussians and oversized Gaussians are removed. New rows get zero
/// optimizer moments and inherit the parent's tag. Statistics are reset.
pub fn densify_and_prune<R: Rng>(
    g: &mut GaussianSet,
    adam: &mut Adam,
    stats: &mut DensityStats,
    params: &DensifyParams,
    rng: &mut R,
) -> DensifyReport {
    let n = g.len();
    assert_eq!(adam.rows(), n, "optimizer rows out of sync");
    assert_eq!(stats.len(), n, "stats rows out of sync");
    let mut report = DensifyReport::default();
    let mut budget = params.max_gaussians.saturating_sub(n);
    let mut split_parent = vec![false; n];

    for i in 0..n {
        if stats.mean(i) < params.grad_threshold || stats.count[i] == 0 {
            continue;
        }
        if g.max_scale(i) <= params.split_scale {
            if budget == 0 {
                continue;
            }
            g.duplicate(i);
            budget -= 1;
            report.cloned += 1;
        } else {
            // Splitting replaces one Gaussian with two.
            if budget < SPLIT_CHILDREN - 1 {
                continue;
            }
            let rot = quat_to_rotation(&g.rotations[i]);
            let scale = Vector3::from(g.log_scales[i].map(f64::exp));
            let mean = g.mean(i);
            for _ in 0..SPLIT_CHILDREN {
                let z = Vector3::new(
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                    rng.sample::<f64, _>(StandardNormal),
                );
                let p = mean + rot * scale.component_mul(&z);
                let c = g.duplicate(i);
                g.means[c] = [p.x, p.y, p.z];
                g.log_scales[c] = g.log_scales[i].map(|s| s - SPLIT_SCALE_DIVISOR.ln());
            }
            split_parent[i] = true;
            budget -= SPLIT_CHILDREN - 1;
            report.split += 1;
        }
    }
    adam.grow(g.len() - n);

    let keep: Vec<bool> = (0..g.len())
        .map(|i| {
            let parent = i < n && split_parent[i];
            !parent
                && sigmoid(g.opacity_logits[i]) >= params.prune_opacity
                && g.max_scale(i) <= params.prune_scale
        })
        .collect();
    report.pruned = keep.iter().filter(|&&k| !k).count() - report.split;
    g.retain_mask(&keep);
    adam.retain_mask(&keep);
    *stats = DensityStats::new(g.len());
    report
}

/// Clamps every opacity to at most [`RESET_OPACITY`] and clears the
/// opacity moments.
pub fn reset_opacity(g: &mut GaussianSet, adam: &mut Adam) {
    let cap = logit(RESET_OPACITY);
    for o in &mut g.opacity_logits {
        *o = o.min(cap);
    }
    adam.reset_opacity();
}
