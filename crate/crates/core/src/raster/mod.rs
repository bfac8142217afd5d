//! Tile-based front-to-back alpha compositing of projected Gaussians.
//!
//! Every pixel composites color and depth over the Gaussians that overlap
//! its tile, in global depth order:
//!
//! ```text
//! C(p) = Σᵢ cᵢ aᵢ Tᵢ + T_N · background      aᵢ = min(0.99, f2D(p)·αᵢ)
//! D(p) = Σᵢ dᵢ aᵢ Tᵢ                          Tᵢ = Πⱼ<ᵢ (1 − aⱼ)
//! ```
//!
//! Depth is deliberately left unnormalized by the accumulated opacity.

mod backward;
pub mod reference;

pub use backward::{rasterize_backward, GradientSet};

use nalgebra::{Matrix2, Vector2, Vector3};
use rayon::prelude::*;

use crate::camera::Camera;
use crate::gaussians::GaussianSet;
use crate::projection::{max_eigenvalue_2x2, project_gaussian};
use crate::sh;

/// Contributions with f2D·α below this are skipped.
pub const ALPHA_CUTOFF: f64 = 1.0 / 255.0;
pub const MAX_ALPHA: f64 = 0.99;
/// Compositing stops once remaining transmittance drops below this.
pub const MIN_TRANSMITTANCE: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct RenderOptions {
    pub tile_size: usize,
    pub background: [f64; 3],
    /// Active SH degree; clamped to the set's storage degree.
    pub sh_degree: usize,
}

impl Default for RenderOptions {
    fn default() -> Self {
        RenderOptions {
            tile_size: 16,
            background: [0.0; 3],
            sh_degree: sh::MAX_SH_DEGREE,
        }
    }
}

/// A Gaussian after projection and color evaluation for one camera.
#[derive(Clone, Copy, Debug)]
pub struct Splat {
    pub mean2d: Vector2<f64>,
    pub conic: Matrix2<f64>,
    pub cov2d: Matrix2<f64>,
    pub depth: f64,
    pub cam_point: Vector3<f64>,
    pub color: [f64; 3],
    /// Channels whose SH color hit the zero clamp.
    pub color_clamped: [bool; 3],
    pub opacity: f64,
    /// Half-width in pixels of the square that bounds every pixel this
    /// splat can reach above [`ALPHA_CUTOFF`].
    pub radius: f64,
}

impl Splat {
    /// f2D at a pixel center, or `None` when the contribution is culled.
    #[inline]
    pub fn alpha_at(&self, px: f64, py: f64) -> Option<(f64, f64)> {
        let dx = px - self.mean2d.x;
        let dy = py - self.mean2d.y;
        let power = -0.5
            * (self.conic[(0, 0)] * dx * dx
                + (self.conic[(0, 1)] + self.conic[(1, 0)]) * dx * dy
                + self.conic[(1, 1)] * dy * dy);
        if power > 0.0 {
            return None;
        }
        let f = power.exp();
        let a = f * self.opacity;
        if a < ALPHA_CUTOFF {
            return None;
        }
        Some((f, a.min(MAX_ALPHA)))
    }
}

/// One composited term, recorded for the backward pass.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contrib {
    pub gaussian: u32,
    /// Position of the Gaussian in its tile's list.
    pub slot: u32,
    pub f2d: f64,
    pub alpha: f64,
    /// Transmittance in front of this Gaussian.
    pub transmittance: f64,
    pub clamped: bool,
}

#[derive(Clone, Debug)]
pub struct RenderOutput {
    pub width: usize,
    pub height: usize,
    pub tile_size: usize,
    pub background: [f64; 3],
    pub sh_degree: usize,
    pub color: Vec<[f64; 3]>,
    pub depth: Vec<f64>,
    pub acc_alpha: Vec<f64>,
    /// Per-pixel contributions live in `contribs[contrib_offsets[p]..contrib_offsets[p + 1]]`,
    /// front to back.
    pub contrib_offsets: Vec<usize>,
    pub contribs: Vec<Contrib>,
    pub splats: Vec<Option<Splat>>,
    /// Gaussian indices per tile, in depth order.
    pub tile_lists: Vec<Vec<u32>>,
}

impl RenderOutput {
    pub fn pixel_contribs(&self, pixel: usize) -> &[Contrib] {
        &self.contribs[self.contrib_offsets[pixel]..self.contrib_offsets[pixel + 1]]
    }

    pub fn tiles_x(&self) -> usize {
        self.width.div_ceil(self.tile_size)
    }

    /// Flattened RGB in row-major order.
    pub fn color_flat(&self) -> Vec<f64> {
        self.color.iter().flatten().copied().collect()
    }
}

/// Projects every Gaussian and evaluates its view-dependent color. Culled
/// Gaussians map to `None`.
pub fn prepare_splats(gaussians: &GaussianSet, camera: &Camera, sh_degree: usize) -> Vec<Option<Splat>> {
    let degree = sh_degree.min(gaussians.sh_degree);
    let center = camera.center();
    (0..gaussians.len())
        .into_par_iter()
        .map(|i| {
            let opacity = gaussians.opacity(i);
            if opacity * 255.0 <= 1.0 {
                return None;
            }
            let mean = gaussians.mean(i);
            let proj = project_gaussian(&mean, &gaussians.covariance(i), camera).ok()?;
            let conic = proj.cov2d.try_inverse()?;
            let lambda = max_eigenvalue_2x2(&proj.cov2d);
            let cutoff_radius = (2.0 * lambda * (255.0 * opacity).ln()).sqrt();
            let radius = (3.0 * lambda.sqrt()).max(cutoff_radius) * (1.0 + 1e-6) + 1e-6;
            let dir = (mean - center).normalize();
            let coeffs = gaussians.sh(i);
            let b = sh::basis(degree, &dir);
            let mut raw = [0.5; 3];
            for (k, bk) in b.iter().enumerate().take(sh::num_coeffs(degree)) {
                for (c, v) in raw.iter_mut().enumerate() {
                    *v += coeffs[k * 3 + c] * bk;
                }
            }
            let color_clamped = raw.map(|v| v < 0.0);
            Some(Splat {
                mean2d: proj.mean2d,
                conic,
                cov2d: proj.cov2d,
                depth: proj.depth,
                cam_point: proj.cam_point,
                color: raw.map(|v| v.max(0.0)),
                color_clamped,
                opacity,
                radius,
            })
        })
        .collect()
}

/// Visible Gaussian indices sorted by depth, ties broken by index.
pub fn depth_order(splats: &[Option<Splat>]) -> Vec<u32> {
    let mut order: Vec<u32> = splats
        .iter()
        .enumerate()
        .filter_map(|(i, s)| s.map(|_| i as u32))
        .collect();
    order.sort_by(|&a, &b| {
        let da = splats[a as usize].unwrap().depth;
        let db = splats[b as usize].unwrap().depth;
        da.total_cmp(&db).then(a.cmp(&b))
    });
    order
}

struct TilePixels {
    color: Vec<[f64; 3]>,
    depth: Vec<f64>,
    acc: Vec<f64>,
    contribs: Vec<Vec<Contrib>>,
}

pub fn rasterize(gaussians: &GaussianSet, camera: &Camera, options: &RenderOptions) -> RenderOutput {
    let (w, h) = (camera.width, camera.height);
    let ts = options.tile_size.max(1);
    let (tx, ty) = (w.div_ceil(ts), h.div_ceil(ts));
    let splats = prepare_splats(gaussians, camera, options.sh_degree);
    let order = depth_order(&splats);

    let mut tile_lists: Vec<Vec<u32>> = vec![Vec::new(); tx * ty];
    for &gi in &order {
        let s = splats[gi as usize].as_ref().unwrap();
        // Pixel centers i + 0.5 inside [m − r, m + r].
        let x0 = (s.mean2d.x - s.radius - 0.5).ceil().max(0.0);
        let x1 = (s.mean2d.x + s.radius - 0.5).floor().min(w as f64 - 1.0);
        let y0 = (s.mean2d.y - s.radius - 0.5).ceil().max(0.0);
        let y1 = (s.mean2d.y + s.radius - 0.5).floor().min(h as f64 - 1.0);
        if !(x0 <= x1 && y0 <= y1) {
            continue;
        }
        let (tx0, tx1) = (x0 as usize / ts, x1 as usize / ts);
        let (ty0, ty1) = (y0 as usize / ts, y1 as usize / ts);
        for tyi in ty0..=ty1 {
            for txi in tx0..=tx1 {
                tile_lists[tyi * tx + txi].push(gi);
            }
        }
    }

    let tiles: Vec<TilePixels> = (0..tx * ty)
        .into_par_iter()
        .map(|t| {
            let (txi, tyi) = (t % tx, t / tx);
            let list = &tile_lists[t];
            let xs = txi * ts..((txi + 1) * ts).min(w);
            let ys = tyi * ts..((tyi + 1) * ts).min(h);
            let n = xs.len() * ys.len();
            let mut out = TilePixels {
                color: Vec::with_capacity(n),
                depth: Vec::with_capacity(n),
                acc: Vec::with_capacity(n),
                contribs: Vec::with_capacity(n),
            };
            for y in ys {
                for x in xs.clone() {
                    let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
                    let mut t_rem = 1.0;
                    let mut c = [0.0; 3];
                    let mut d = 0.0;
                    let mut rec = Vec::new();
                    for (slot, &gi) in list.iter().enumerate() {
                        let s = splats[gi as usize].as_ref().unwrap();
                        let Some((f, a)) = s.alpha_at(px, py) else { continue };
                        let wgt = a * t_rem;
                        for k in 0..3 {
                            c[k] += s.color[k] * wgt;
                        }
                        d += s.depth * wgt;
                        rec.push(Contrib {
                            gaussian: gi,
                            slot: slot as u32,
                            f2d: f,
                            alpha: a,
                            transmittance: t_rem,
                            clamped: f * s.opacity > MAX_ALPHA,
                        });
                        t_rem *= 1.0 - a;
                        if t_rem < MIN_TRANSMITTANCE {
                            break;
                        }
                    }
                    for k in 0..3 {
                        c[k] += t_rem * options.background[k];
                    }
                    out.color.push(c);
                    out.depth.push(if rec.is_empty() { 0.0 } else { d });
                    out.acc.push(1.0 - t_rem);
                    out.contribs.push(rec);
                }
            }
            out
        })
        .collect();

    let n = w * h;
    let mut color = vec![[0.0; 3]; n];
    let mut depth = vec![0.0; n];
    let mut acc_alpha = vec![0.0; n];
    let mut per_pixel: Vec<Vec<Contrib>> = vec![Vec::new(); n];
    for (t, tile) in tiles.into_iter().enumerate() {
        let (txi, tyi) = (t % tx, t / tx);
        let x_start = txi * ts;
        let tile_w = ((txi + 1) * ts).min(w) - x_start;
        for (k, rec) in tile.contribs.into_iter().enumerate() {
            let p = (tyi * ts + k / tile_w) * w + x_start + k % tile_w;
            color[p] = tile.color[k];
            depth[p] = tile.depth[k];
            acc_alpha[p] = tile.acc[k];
            per_pixel[p] = rec;
        }
    }
    let mut contrib_offsets = Vec::with_capacity(n + 1);
    contrib_offsets.push(0);
    let mut contribs = Vec::with_capacity(per_pixel.iter().map(Vec::len).sum());
    for rec in per_pixel {
        contribs.extend(rec);
        contrib_offsets.push(contribs.len());
    }

    RenderOutput {
        width: w,
        height: h,
        tile_size: ts,
        background: options.background,
        sh_degree: options.sh_degree.min(gaussians.sh_degree),
        color,
        depth,
        acc_alpha,
        contrib_offsets,
        contribs,
        splats,
        tile_lists,
    }
}

/// Composited depth only.
pub fn render_depth_only(gaussians: &GaussianSet, camera: &Camera) -> Vec<f64> {
    rasterize(gaussians, camera, &RenderOptions::default()).depth
}
