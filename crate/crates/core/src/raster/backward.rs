use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2, Vector3};
use rayon::prelude::*;

use super::{RenderOutput, Splat};
use crate::camera::Camera;
use crate::gaussians::GaussianSet;
use crate::geometry::covariance_grad_to_params;
use crate::sh;

/// Gradients with the same layout as the learnable fields of a
/// [`GaussianSet`], plus screen-space statistics for density control.
#[derive(Clone, Debug, PartialEq)]
pub struct GradientSet {
    pub means: Vec<[f64; 3]>,
    pub rotations: Vec<[f64; 4]>,
    pub log_scales: Vec<[f64; 3]>,
    pub opacity_logits: Vec<f64>,
    pub sh_coeffs: Vec<f64>,
    /// ∂L/∂(projected mean) in pixels, per Gaussian.
    pub mean2d: Vec<[f64; 2]>,
    /// Whether the Gaussian was projected (not culled) in the pass.
    pub visible: Vec<bool>,
}

impl GradientSet {
    pub fn zeros(n: usize, sh_stride: usize) -> Self {
        GradientSet {
            means: vec![[0.0; 3]; n],
            rotations: vec![[0.0; 4]; n],
            log_scales: vec![[0.0; 3]; n],
            opacity_logits: vec![0.0; n],
            sh_coeffs: vec![0.0; n * sh_stride],
            mean2d: vec![[0.0; 2]; n],
            visible: vec![false; n],
        }
    }

    pub fn zeros_like(g: &GaussianSet) -> Self {
        Self::zeros(g.len(), g.sh_stride())
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// `self += scale · other` on the parameter gradients. Screen-space
    /// statistics are left untouched.
    pub fn add_scaled(&mut self, other: &GradientSet, scale: f64) {
        assert_eq!(self.len(), other.len());
        fn axpy<const N: usize>(a: &mut [[f64; N]], b: &[[f64; N]], s: f64) {
            for (x, y) in a.iter_mut().zip(b) {
                for k in 0..N {
                    x[k] += s * y[k];
                }
            }
        }
        axpy(&mut self.means, &other.means, scale);
        axpy(&mut self.rotations, &other.rotations, scale);
        axpy(&mut self.log_scales, &other.log_scales, scale);
        for (x, y) in self.opacity_logits.iter_mut().zip(&other.opacity_logits) {
            *x += scale * y;
        }
        for (x, y) in self.sh_coeffs.iter_mut().zip(&other.sh_coeffs) {
            *x += scale * y;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.means.iter().flatten().all(|v| v.is_finite())
            && self.rotations.iter().flatten().all(|v| v.is_finite())
            && self.log_scales.iter().flatten().all(|v| v.is_finite())
            && self.opacity_logits.iter().all(|v| v.is_finite())
            && self.sh_coeffs.iter().all(|v| v.is_finite())
            && self.mean2d.iter().flatten().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.means
            .iter()
            .flatten()
            .chain(self.rotations.iter().flatten())
            .chain(self.log_scales.iter().flatten())
            .chain(self.opacity_logits.iter())
            .chain(self.sh_coeffs.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Screen-space cotangents of one splat.
#[derive(Clone, Copy, Debug, Default)]
struct SplatGrad {
    mean2d: Vector2<f64>,
    conic: Matrix2<f64>,
    color: [f64; 3],
    opacity: f64,
    depth: f64,
}

impl SplatGrad {
    fn add(&mut self, o: &SplatGrad) {
        self.mean2d += o.mean2d;
        self.conic += o.conic;
        for k in 0..3 {
            self.color[k] += o.color[k];
        }
        self.opacity += o.opacity;
        self.depth += o.depth;
    }
}

/// Exact reverse pass of [`super::rasterize`] given cotangents of the
/// composited color (`H·W` RGB triples) and depth (`H·W`).
pub fn rasterize_backward(
    gaussians: &GaussianSet,
    camera: &Camera,
    render: &RenderOutput,
    dl_dcolor: &[[f64; 3]],
    dl_ddepth: &[f64],
) -> GradientSet {
    let (w, h) = (render.width, render.height);
    assert_eq!(dl_dcolor.len(), w * h, "color cotangent shape");
    assert_eq!(dl_ddepth.len(), w * h, "depth cotangent shape");
    assert_eq!(render.splats.len(), gaussians.len(), "render/scene mismatch");
    let ts = render.tile_size;
    let tx = render.tiles_x();

    let tile_grads: Vec<Vec<SplatGrad>> = render
        .tile_lists
        .par_iter()
        .enumerate()
        .map(|(t, list)| {
            let mut acc = vec![SplatGrad::default(); list.len()];
            if list.is_empty() {
                return acc;
            }
            let (txi, tyi) = (t % tx, t / tx);
            for y in tyi * ts..((tyi + 1) * ts).min(h) {
                for x in txi * ts..((txi + 1) * ts).min(w) {
                    let p = y * w + x;
                    backward_pixel(render, p, x, y, &dl_dcolor[p], dl_ddepth[p], &mut acc);
                }
            }
            acc
        })
        .collect();

    // Merge in fixed tile order so results do not depend on scheduling.
    let mut screen = vec![SplatGrad::default(); gaussians.len()];
    for (list, grads) in render.tile_lists.iter().zip(&tile_grads) {
        for (&gi, g) in list.iter().zip(grads) {
            screen[gi as usize].add(g);
        }
    }

    let degree = render.sh_degree.min(gaussians.sh_degree);
    let stride = gaussians.sh_stride();
    let center = camera.center();
    let w_rot = camera.rotation();

    let per_gaussian: Vec<Option<(usize, PerGaussian)>> = (0..gaussians.len())
        .into_par_iter()
        .map(|i| {
            let splat = render.splats[i].as_ref()?;
            Some((i, chain_to_params(gaussians, i, splat, &screen[i], camera, &w_rot, &center, degree)))
        })
        .collect();

    let mut out = GradientSet::zeros(gaussians.len(), stride);
    for (i, g) in per_gaussian.into_iter().flatten() {
        out.means[i] = g.mean;
        out.rotations[i] = g.rotation;
        out.log_scales[i] = g.log_scale;
        out.opacity_logits[i] = g.opacity_logit;
        out.sh_coeffs[i * stride..(i + 1) * stride].copy_from_slice(&g.sh);
        out.mean2d[i] = [screen[i].mean2d.x, screen[i].mean2d.y];
        out.visible[i] = true;
    }
    out
}

fn backward_pixel(
    render: &RenderOutput,
    p: usize,
    x: usize,
    y: usize,
    dl_dc: &[f64; 3],
    dl_dd: f64,
    acc: &mut [SplatGrad],
) {
    let list = render.pixel_contribs(p);
    if list.is_empty() {
        return;
    }
    let t_final = 1.0 - render.acc_alpha[p];
    // Everything behind the current term: Σ_{k>i} c_k a_k T_k + T_N·bg.
    let mut behind_c = render.background.map(|b| b * t_final);
    let mut behind_d = 0.0;
    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
    for c in list.iter().rev() {
        let s = render.splats[c.gaussian as usize].as_ref().unwrap();
        let g = &mut acc[c.slot as usize];
        let wgt = c.alpha * c.transmittance;
        let mut dl_da = 0.0;
        for k in 0..3 {
            g.color[k] += dl_dc[k] * wgt;
            dl_da += dl_dc[k] * (s.color[k] * c.transmittance - behind_c[k] / (1.0 - c.alpha));
            behind_c[k] += s.color[k] * wgt;
        }
        g.depth += dl_dd * wgt;
        dl_da += dl_dd * (s.depth * c.transmittance - behind_d / (1.0 - c.alpha));
        behind_d += s.depth * wgt;

        if c.clamped {
            continue;
        }
        g.opacity += dl_da * c.f2d;
        let dl_df = dl_da * s.opacity;
        let d = Vector2::new(px - s.mean2d.x, py - s.mean2d.y);
        // f = exp(−½ dᵀ A d), d = p − m
        g.mean2d += s.conic * d * (dl_df * c.f2d);
        g.conic += d * d.transpose() * (-0.5 * dl_df * c.f2d);
    }
}

struct PerGaussian {
    mean: [f64; 3],
    rotation: [f64; 4],
    log_scale: [f64; 3],
    opacity_logit: f64,
    sh: Vec<f64>,
}

#[allow(clippy::too_many_arguments)]
fn chain_to_params(
    gaussians: &GaussianSet,
    i: usize,
    s: &Splat,
    g: &SplatGrad,
    camera: &Camera,
    w_rot: &Matrix3<f64>,
    center: &Vector3<f64>,
    degree: usize,
) -> PerGaussian {
    let stride = gaussians.sh_stride();
    let mean = gaussians.mean(i);

    // Color → SH coefficients and view direction.
    let mut d_sh = vec![0.0; stride];
    let view = mean - center;
    let dist = view.norm();
    let dir = view / dist;
    let (basis, basis_grad) = sh::basis_with_grad(degree, &dir);
    let coeffs = gaussians.sh(i);
    let mut d_dir = Vector3::zeros();
    for ch in 0..3 {
        if s.color_clamped[ch] {
            continue;
        }
        let gc = g.color[ch];
        for k in 0..sh::num_coeffs(degree) {
            d_sh[k * 3 + ch] = gc * basis[k];
            let ck = coeffs[k * 3 + ch];
            for a in 0..3 {
                d_dir[a] += gc * ck * basis_grad[k][a];
            }
        }
    }
    let mut d_mean = (d_dir - dir * dir.dot(&d_dir)) / dist;

    // Opacity through the sigmoid.
    let d_logit = g.opacity * s.opacity * (1.0 - s.opacity);

    // Conic → screen covariance: A = Σ₂⁻¹, dΣ₂ = −Aᵀ dA Aᵀ.
    let a = s.conic;
    let d_cov2 = -(a.transpose() * g.conic * a.transpose());

    let t = s.cam_point;
    let j = camera.projection_jacobian(&t);
    let cov3 = gaussians.covariance(i);
    let m = w_rot * cov3 * w_rot.transpose();
    // Σ₂ = J M Jᵀ + 0.3 I
    let d_m = j.transpose() * d_cov2 * j;
    let d_j: Matrix2x3<f64> = d_cov2 * j * m.transpose() + d_cov2.transpose() * j * m;

    // J(t) = [[fx/z, 0, −fx x/z²], [0, fy/z, −fy y/z²]]
    let (fx, fy) = (camera.fx, camera.fy);
    let iz = 1.0 / t.z;
    let iz2 = iz * iz;
    let iz3 = iz2 * iz;
    let mut d_t = Vector3::new(
        -fx * iz2 * d_j[(0, 2)],
        -fy * iz2 * d_j[(1, 2)],
        -fx * iz2 * d_j[(0, 0)] + 2.0 * fx * t.x * iz3 * d_j[(0, 2)] - fy * iz2 * d_j[(1, 1)]
            + 2.0 * fy * t.y * iz3 * d_j[(1, 2)],
    );
    // Projected mean and depth.
    d_t += j.transpose() * g.mean2d;
    d_t.z += g.depth;
    d_mean += w_rot.transpose() * d_t;

    let d_cov3 = w_rot.transpose() * d_m * w_rot;
    let (d_rot, d_log) = covariance_grad_to_params(&gaussians.rotations[i], &gaussians.log_scales[i], &d_cov3);

    PerGaussian {
        mean: [d_mean.x, d_mean.y, d_mean.z],
        rotation: d_rot,
        log_scale: d_log,
        opacity_logit: d_logit,
        sh: d_sh,
    }
}
