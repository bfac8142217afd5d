//! Average 3D transmittance of the Gaussians around touch points.

use nalgebra::Vector3;
use rayon::prelude::*;

use super::TouchPointSet;
use crate::error::{Error, Result};
use crate::gaussians::GaussianSet;
use crate::geometry::{influence_with_grad, rotation_grad_to_quat, sigmoid};
use crate::raster::GradientSet;

/// Upper bound on grid cells per axis; the cell size grows past `d_max`
/// if the scene would need more.
const MAX_CELLS_PER_AXIS: usize = 128;

/// Uniform grid over Gaussian means for radius queries.
pub struct MeanGrid {
    origin: Vector3<f64>,
    cell: f64,
    dims: [usize; 3],
    starts: Vec<usize>,
    items: Vec<u32>,
    radius: f64,
}

impl MeanGrid {
    pub fn build(means: &[[f64; 3]], radius: f64) -> Self {
        let mut lo = Vector3::repeat(f64::INFINITY);
        let mut hi = Vector3::repeat(f64::NEG_INFINITY);
        for m in means {
            for k in 0..3 {
                lo[k] = lo[k].min(m[k]);
                hi[k] = hi[k].max(m[k]);
            }
        }
        if means.is_empty() {
            lo = Vector3::zeros();
            hi = Vector3::zeros();
        }
        let extent = (hi - lo).max();
        let mut cell = radius.max(1e-12);
        if extent / cell > MAX_CELLS_PER_AXIS as f64 {
            cell = extent / MAX_CELLS_PER_AXIS as f64;
        }
        let dims = [0, 1, 2].map(|k| ((hi[k] - lo[k]) / cell).floor() as usize + 1);
        let n_cells = dims[0] * dims[1] * dims[2];
        let mut counts = vec![0usize; n_cells + 1];
        let cell_of = |m: &[f64; 3]| {
            let c = [0, 1, 2].map(|k| (((m[k] - lo[k]) / cell).floor() as usize).min(dims[k] - 1));
            (c[2] * dims[1] + c[1]) * dims[0] + c[0]
        };
        let ids: Vec<usize> = means.iter().map(cell_of).collect();
        for &c in &ids {
            counts[c + 1] += 1;
        }
        for i in 0..n_cells {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut items = vec![0u32; means.len()];
        for (i, &c) in ids.iter().enumerate() {
            items[fill[c]] = i as u32;
            fill[c] += 1;
        }
        MeanGrid {
            origin: lo,
            cell,
            dims,
            starts: counts,
            items,
            radius,
        }
    }

    /// Indices of means within `radius` of `p`, ascending.
    pub fn query(&self, means: &[[f64; 3]], p: &Vector3<f64>) -> Vec<u32> {
        let mut out = Vec::new();
        let r = self.radius;
        let mut lo_c = [0usize; 3];
        let mut hi_c = [0usize; 3];
        for k in 0..3 {
            let a = ((p[k] - r - self.origin[k]) / self.cell).floor();
            let b = ((p[k] + r - self.origin[k]) / self.cell).floor();
            if b < 0.0 || a > (self.dims[k] - 1) as f64 {
                return out;
            }
            lo_c[k] = a.max(0.0) as usize;
            hi_c[k] = (b as usize).min(self.dims[k] - 1);
        }
        let r2 = r * r;
        for z in lo_c[2]..=hi_c[2] {
            for y in lo_c[1]..=hi_c[1] {
                for x in lo_c[0]..=hi_c[0] {
                    let c = (z * self.dims[1] + y) * self.dims[0] + x;
                    for &i in &self.items[self.starts[c]..self.starts[c + 1]] {
                        let m = means[i as usize];
                        let d2 = (m[0] - p[0]).powi(2) + (m[1] - p[1]).powi(2) + (m[2] - p[2]).powi(2);
                        if d2 <= r2 {
                            out.push(i);
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// Gaussians kept for one touch point, with their influence `f·α`.
fn select(gaussians: &GaussianSet, grid: &MeanGrid, p: &Vector3<f64>, k: usize) -> Vec<(u32, f64)> {
    let mut cand: Vec<(u32, f64)> = grid
        .query(&gaussians.means, p)
        .into_iter()
        .map(|i| {
            let j = i as usize;
            let f = influence_with_grad(p, &gaussians.mean(j), &gaussians.rotations[j], &gaussians.log_scales[j]).value;
            (i, f * gaussians.opacity(j))
        })
        .collect();
    // Descending influence; ties keep the lower index first.
    cand.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    cand.truncate(k);
    cand
}

pub fn transmittance_at_point(p: &Vector3<f64>, gaussians: &GaussianSet, k: usize, d_max: f64) -> f64 {
    let grid = MeanGrid::build(&gaussians.means, d_max);
    transmittance_with_grid(p, gaussians, &grid, k)
}

fn transmittance_with_grid(p: &Vector3<f64>, gaussians: &GaussianSet, grid: &MeanGrid, k: usize) -> f64 {
    let sel = select(gaussians, grid, p, k);
    if sel.is_empty() {
        return 1.0;
    }
    sel.iter().map(|(_, fa)| 1.0 - fa).sum::<f64>() / sel.len() as f64
}

/// Per-Gaussian gradient pieces from one touch point.
struct PointGrad {
    index: u32,
    mean: [f64; 3],
    rotation: [f64; 4],
    log_scale: [f64; 3],
    opacity_logit: f64,
}

fn point_grads(p: &Vector3<f64>, gaussians: &GaussianSet, grid: &MeanGrid, k: usize) -> (f64, Vec<PointGrad>) {
    let sel = select(gaussians, grid, p, k);
    if sel.is_empty() {
        return (1.0, Vec::new());
    }
    let n = sel.len() as f64;
    let mut t = 0.0;
    let mut grads = Vec::with_capacity(sel.len());
    for &(i, _) in &sel {
        let j = i as usize;
        let inf = influence_with_grad(p, &gaussians.mean(j), &gaussians.rotations[j], &gaussians.log_scales[j]);
        let alpha = sigmoid(gaussians.opacity_logits[j]);
        t += 1.0 - inf.value * alpha;
        // ∂T̂/∂f = −α/N, ∂T̂/∂α = −f/N
        let df = -alpha / n;
        let dq = rotation_grad_to_quat(&gaussians.rotations[j], &(inf.d_rotation * df));
        grads.push(PointGrad {
            index: i,
            mean: [inf.d_mean[0] * df, inf.d_mean[1] * df, inf.d_mean[2] * df],
            rotation: dq,
            log_scale: inf.d_log_scale.map(|v| v * df),
            opacity_logit: -inf.value / n * alpha * (1.0 - alpha),
        });
    }
    (t / n, grads)
}

/// `L_T = (1/P) Σ T̂(p)` and its gradient. Top-K membership is held fixed
/// during differentiation.
pub fn transmittance_loss(
    touch: &TouchPointSet,
    gaussians: &GaussianSet,
    k: usize,
    d_max: f64,
) -> Result<(f64, GradientSet)> {
    if touch.is_empty() {
        return Err(Error::EmptyTouchSet);
    }
    let grid = MeanGrid::build(&gaussians.means, d_max);
    let per_point: Vec<(f64, Vec<PointGrad>)> = touch
        .points
        .par_iter()
        .map(|p| point_grads(&Vector3::from(*p), gaussians, &grid, k))
        .collect();
    let inv_p = 1.0 / touch.len() as f64;
    let mut grads = GradientSet::zeros_like(gaussians);
    let mut loss = 0.0;
    for (t, pg) in &per_point {
        loss += t;
        for g in pg {
            let j = g.index as usize;
            for a in 0..3 {
                grads.means[j][a] += g.mean[a] * inv_p;
                grads.log_scales[j][a] += g.log_scale[a] * inv_p;
            }
            for a in 0..4 {
                grads.rotations[j][a] += g.rotation[a] * inv_p;
            }
            grads.opacity_logits[j] += g.opacity_logit * inv_p;
        }
    }
    Ok((loss * inv_p, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::logit;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_scene(rng: &mut ChaCha8Rng, n: usize) -> GaussianSet {
        let mut g = GaussianSet::new(0);
        for _ in 0..n {
            let q = [rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5];
            g.push_rgb(
                [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)],
                q,
                [rng.random_range(-2.0..-0.5), rng.random_range(-2.0..-0.5), rng.random_range(-2.0..-0.5)],
                rng.random_range(-2.0..2.0),
                [0.5; 3],
                crate::SetTag::Touch,
            );
        }
        g
    }

    /// Exhaustive scan over every Gaussian with explicit distance filter.
    fn brute_force(p: &Vector3<f64>, g: &GaussianSet, k: usize, d_max: f64) -> f64 {
        let mut cand = Vec::new();
        for j in 0..g.len() {
            if (g.mean(j) - p).norm() <= d_max {
                let f = crate::geometry::gaussian_influence_3d(p, &g.mean(j), &g.covariance(j));
                cand.push((j, f * g.opacity(j)));
            }
        }
        cand.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
        cand.truncate(k);
        if cand.is_empty() {
            return 1.0;
        }
        cand.iter().map(|c| 1.0 - c.1).sum::<f64>() / cand.len() as f64
    }

    fn at(p: [f64; 3], opacity: f64) -> GaussianSet {
        let mut g = GaussianSet::new(0);
        g.push_rgb(p, [1.0, 0.0, 0.0, 0.0], [-2.0; 3], logit(opacity), [0.5; 3], crate::SetTag::Touch);
        g
    }

    #[test]
    fn single_gaussian_at_point() {
        let g = at([0.1, 0.2, 0.3], 0.8);
        let t = transmittance_at_point(&Vector3::new(0.1, 0.2, 0.3), &g, 1, 1.0);
        assert!((t - 0.2).abs() < 1e-9);
    }

    #[test]
    fn two_half_opaque_gaussians() {
        let mut g = at([0.0; 3], 0.5);
        g.push_rgb([0.0; 3], [1.0, 0.0, 0.0, 0.0], [-1.0; 3], 0.0, [0.5; 3], crate::SetTag::Vision);
        let t = transmittance_at_point(&Vector3::zeros(), &g, 2, 1.0);
        assert!((t - 0.5).abs() < 1e-12);
    }

    #[test]
    fn empty_candidates_give_one() {
        let g = at([5.0, 0.0, 0.0], 0.9);
        let touch = TouchPointSet::new(vec![[0.0; 3], [0.0, 1.0, 0.0]]);
        let (l, grads) = transmittance_loss(&touch, &g, 5, 1.0).unwrap();
        assert_eq!(l, 1.0);
        assert_eq!(grads.max_abs(), 0.0);
    }

    #[test]
    fn opaque_coverage_drives_loss_to_zero() {
        let pts = vec![[0.0, 0.0, 0.0], [0.5, 0.0, 0.0]];
        let mut g = GaussianSet::new(0);
        for p in &pts {
            g.push_rgb(*p, [1.0, 0.0, 0.0, 0.0], [-3.0; 3], 30.0, [0.5; 3], crate::SetTag::Touch);
        }
        let (l, _) = transmittance_loss(&TouchPointSet::new(pts), &g, 1, 0.1).unwrap();
        assert!(l < 1e-9);
    }

    #[test]
    fn empty_touch_set_is_error() {
        let g = at([0.0; 3], 0.5);
        assert!(matches!(
            transmittance_loss(&TouchPointSet::new(vec![]), &g, 1, 1.0),
            Err(Error::EmptyTouchSet)
        ));
    }

    #[test]
    fn grid_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = random_scene(&mut rng, 100);
        for _ in 0..50 {
            let p = Vector3::new(rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2));
            let a = transmittance_at_point(&p, &g, 10, 0.5);
            let b = brute_force(&p, &g, 10, 0.5);
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        use crate::gradcheck::{all_params, central_difference, grad_of, relative_error};
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let g = random_scene(&mut rng, 30);
        let touch = TouchPointSet::new(
            (0..8)
                .map(|_| [rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8), rng.random_range(-0.8..0.8)])
                .collect(),
        );
        let (k, d_max) = (4, 0.9);
        let (_, grads) = transmittance_loss(&touch, &g, k, d_max).unwrap();
        // Freeze the selection so the oracle differentiates the same sum.
        let grid = MeanGrid::build(&g.means, d_max);
        let frozen: Vec<Vec<u32>> = touch
            .points
            .iter()
            .map(|p| select(&g, &grid, &Vector3::from(*p), k).into_iter().map(|s| s.0).collect())
            .collect();
        let eval = |h: &GaussianSet| {
            let mut s = 0.0;
            for (p, sel) in touch.points.iter().zip(&frozen) {
                if sel.is_empty() {
                    s += 1.0;
                    continue;
                }
                let p = Vector3::from(*p);
                s += sel
                    .iter()
                    .map(|&j| {
                        let j = j as usize;
                        1.0 - crate::geometry::gaussian_influence_3d(&p, &h.mean(j), &h.covariance(j)) * h.opacity(j)
                    })
                    .sum::<f64>()
                    / sel.len() as f64;
            }
            s / touch.len() as f64
        };
        let mut worst: f64 = 0.0;
        for id in all_params(&g) {
            let an = grad_of(&grads, g.sh_stride(), id);
            let num = central_difference(&g, id, 1e-6, &eval);
            worst = worst.max(relative_error(an, num, 1e-7));
        }
        assert!(worst < 1e-4, "worst relative error {worst}");
    }

    #[test]
    fn permutation_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let g = random_scene(&mut rng, 40);
        let pts: Vec<[f64; 3]> = (0..10)
            .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
            .collect();
        let (a, _) = transmittance_loss(&TouchPointSet::new(pts.clone()), &g, 5, 0.6).unwrap();
        let mut rev = pts;
        rev.reverse();
        let (b, _) = transmittance_loss(&TouchPointSet::new(rev), &g, 5, 0.6).unwrap();
        assert!((a - b).abs() < 1e-12);
    }
}
