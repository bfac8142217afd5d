//! Optimization loop over the training views.

pub mod adam;
pub mod config;
pub mod density;
pub mod init;

pub use config::{Mode, TrainConfig};
pub use init::initialize_scene;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::eval::psnr;
use crate::gaussians::{GaussianSet, SetTag};
use crate::imaging::Image;
use crate::loss::{
    edge_aware_smoothness, photometric_loss, proximity_mask, transmittance_loss, LossWeights, ProximityMask,
    TouchPointSet,
};
use crate::nearest::{median, nearest_other_distances};
use crate::raster::{rasterize, rasterize_backward, GradientSet, RenderOptions};
use crate::synth::PointCloud;
use crate::touch::{touch_points, TouchPatch};
use adam::{Adam, LearningRates};
use density::{densify_and_prune, reset_opacity, DensifyParams, DensityStats};

/// Touch candidate radius as a multiple of the initial point spacing.
pub const D_MAX_SPACING_FACTOR: f64 = 4.0;
/// Accumulated opacity below which a pixel counts as empty for the mask.
const EMPTY_PIXEL_ALPHA: f64 = 1e-6;

/// One training image with its camera.
#[derive(Clone, Debug)]
pub struct TrainView {
    pub camera: Camera,
    pub image: Image,
    /// Foreground coverage in [0,1]; `image` is then premultiplied over black.
    pub alpha: Option<Vec<f64>>,
}

impl TrainView {
    pub fn new(camera: Camera, image: Image) -> Self {
        TrainView { camera, image, alpha: None }
    }

    pub fn with_alpha(mut self, alpha: Vec<f64>) -> Self {
        self.alpha = Some(alpha);
        self
    }

    /// The target image composited over `background`.
    fn over(&self, background: [f64; 3]) -> Option<TrainView> {
        let alpha = self.alpha.as_ref()?;
        let mut image = self.image.clone();
        let c = image.channels;
        for (px, &a) in image.data.chunks_exact_mut(c).zip(alpha) {
            for (v, b) in px.iter_mut().zip(background) {
                *v += (1.0 - a) * b;
            }
        }
        Some(TrainView {
            camera: self.camera.clone(),
            image,
            alpha: None,
        })
    }
}

/// Scalars logged per iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct StepLog {
    pub iteration: usize,
    pub view: usize,
    pub l_photo: f64,
    pub l_t: f64,
    pub l_s: f64,
    pub total: f64,
    pub n_gaussians: usize,
    pub n_touch: usize,
    /// PSNR of the rendered training view, NaN when not logged.
    pub psnr: f64,
}

pub const LOG_HEADER: &str = "iteration,view,l_photo,l_t,l_s,total,n_gaussians,n_touch,psnr";

impl StepLog {
    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.iteration,
            self.view,
            self.l_photo,
            self.l_t,
            self.l_s,
            self.total,
            self.n_gaussians,
            self.n_touch,
            self.psnr
        )
    }
}

pub fn logs_to_csv(logs: &[StepLog]) -> String {
    let mut s = String::from(LOG_HEADER);
    s.push('\n');
    for l in logs {
        s.push_str(&l.csv_row());
        s.push('\n');
    }
    s
}

/// 1.1 × the largest camera distance from the mean camera center.
pub fn scene_extent(cameras: &[Camera]) -> f64 {
    if cameras.is_empty() {
        return 1.0;
    }
    let centers: Vec<_> = cameras.iter().map(|c| c.center()).collect();
    let mean = centers.iter().fold(nalgebra::Vector3::zeros(), |a, c| a + c) / centers.len() as f64;
    let radius = centers.iter().map(|c| (c - mean).norm()).fold(0.0, f64::max);
    if radius > 0.0 {
        1.1 * radius
    } else {
        1.0
    }
}

/// Candidate radius for the transmittance loss: a multiple of the median
/// nearest-neighbor spacing of the initial means.
pub fn default_d_max(g: &GaussianSet) -> f64 {
    match nearest_other_distances(&g.means) {
        Some(d) => {
            let m = median(&d);
            if m > 0.0 {
                D_MAX_SPACING_FACTOR * m
            } else {
                1e-3
            }
        }
        None => 1e-3,
    }
}

/// Everything the loop owns between steps.
#[derive(Clone, Debug)]
pub struct TrainState {
    pub gaussians: GaussianSet,
    pub adam: Adam,
    pub stats: DensityStats,
    pub iteration: usize,
    pub extent: f64,
    pub d_max: f64,
    view_order: Vec<usize>,
    view_cursor: usize,
    rng: ChaCha8Rng,
}

impl TrainState {
    pub fn new(gaussians: GaussianSet, cameras: &[Camera], config: &TrainConfig) -> Self {
        let d_max = config.loss.d_max.unwrap_or_else(|| default_d_max(&gaussians));
        TrainState {
            adam: Adam::new(&gaussians),
            stats: DensityStats::new(gaussians.len()),
            iteration: 0,
            extent: scene_extent(cameras),
            d_max,
            view_order: Vec::new(),
            view_cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            gaussians,
        }
    }

    fn next_view(&mut self, n_views: usize, shuffle: bool) -> usize {
        if self.view_cursor >= self.view_order.len() {
            self.view_order = (0..n_views).collect();
            if shuffle {
                self.view_order.shuffle(&mut self.rng);
            }
            self.view_cursor = 0;
        }
        let v = self.view_order[self.view_cursor];
        self.view_cursor += 1;
        v
    }
}

/// Loss values and the combined parameter gradient for one view.
pub struct LossEval {
    pub l_photo: f64,
    pub l_t: f64,
    pub l_s: f64,
    pub total: f64,
    pub grads: GradientSet,
    pub psnr: f64,
}

/// Depth divided by accumulated opacity; 0 on empty pixels.
pub fn normalized_depth(depth: &[f64], acc: &[f64]) -> Vec<f64> {
    depth
        .iter()
        .zip(acc)
        .map(|(&d, &a)| if a > EMPTY_PIXEL_ALPHA { d / a } else { 0.0 })
        .collect()
}

/// Renders `view` and evaluates the full objective with gradients.
pub fn evaluate_losses(
    g: &GaussianSet,
    view: &TrainView,
    touch: &TouchPointSet,
    weights: &LossWeights,
    d_max: f64,
    options: &RenderOptions,
    want_psnr: bool,
) -> Result<LossEval> {
    let cam = &view.camera;
    let render = rasterize(g, cam, options);
    let rendered = Image::from_rgb(render.width, render.height, &render.color);
    let (l_photo, d_img) = photometric_loss(&rendered, &view.image, weights.lambda_photo_ssim)?;
    let d_color = d_img.to_rgb();
    let mut d_depth = vec![0.0; render.depth.len()];

    let mut l_s = 0.0;
    if weights.lambda_s > 0.0 {
        let mask = if weights.use_mask && !touch.is_empty() {
            let surface = normalized_depth(&render.depth, &render.acc_alpha);
            proximity_mask(touch, cam, &surface, weights.sigma_mask, weights.mask_variant)
        } else {
            ProximityMask::ones(cam.width, cam.height, weights.mask_variant)
        };
        let (ls, grad) = edge_aware_smoothness(&render.depth, &view.image, weights.beta, &mask)?;
        l_s = ls;
        for (d, s) in d_depth.iter_mut().zip(grad) {
            *d = weights.lambda_s * s;
        }
    }
    let mut grads = rasterize_backward(g, cam, &render, &d_color, &d_depth);

    let mut l_t = 0.0;
    if weights.lambda_t > 0.0 && !touch.is_empty() && !g.is_empty() {
        let (lt, mut gt) = transmittance_loss(touch, g, weights.k, d_max)?;
        if weights.restrict_lt_to_touch_set {
            zero_rows_except(&mut gt, g, SetTag::Touch);
        }
        grads.add_scaled(&gt, weights.lambda_t);
        l_t = lt;
    }
    let total = l_photo + weights.lambda_s * l_s + weights.lambda_t * l_t;
    let psnr = if want_psnr {
        psnr(&rendered, &view.image)?
    } else {
        f64::NAN
    };
    Ok(LossEval {
        l_photo,
        l_t,
        l_s,
        total,
        grads,
        psnr,
    })
}

fn zero_rows_except(grads: &mut GradientSet, g: &GaussianSet, keep: SetTag) {
    let stride = g.sh_stride();
    for i in 0..g.len() {
        if g.tag(i) != keep {
            grads.means[i] = [0.0; 3];
            grads.rotations[i] = [0.0; 4];
            grads.log_scales[i] = [0.0; 3];
            grads.opacity_logits[i] = 0.0;
            grads.sh_coeffs[i * stride..(i + 1) * stride].fill(0.0);
        }
    }
}

/// One optimization step on the next view in the schedule, followed by
/// density control when due.
pub fn train_step(
    state: &mut TrainState,
    views: &[TrainView],
    touch: &TouchPointSet,
    config: &TrainConfig,
) -> Result<StepLog> {
    if views.is_empty() {
        return Err(Error::Validation("no training views".into()));
    }
    let it = state.iteration;
    let v = state.next_view(views.len(), config.shuffle_views);
    let weights = config.effective_loss();
    let sh_degree = if config.sh_increase_interval == 0 {
        config.sh_degree
    } else {
        (it / config.sh_increase_interval).min(config.sh_degree)
    };
    let mut background = config.background;
    let composited = if config.random_background && views[v].alpha.is_some() {
        background = [(); 3].map(|_| state.rng.random::<f64>());
        views[v].over(background)
    } else {
        None
    };
    let view = composited.as_ref().unwrap_or(&views[v]);
    let options = RenderOptions {
        tile_size: config.tile_size,
        background,
        sh_degree,
    };
    let eval = evaluate_losses(
        &state.gaussians,
        view,
        touch,
        &weights,
        state.d_max,
        &options,
        config.log_train_psnr,
    )?;
    if !eval.total.is_finite() || !eval.grads.all_finite() {
        return Err(Error::NonFiniteLoss(it));
    }

    let densify_until = config.densify_until();
    if it < densify_until {
        state
            .stats
            .accumulate(&eval.grads, views[v].camera.width, views[v].camera.height);
    }
    let lr = LearningRates {
        means: config.lr_means_at(it) * state.extent,
        rotations: config.lr_rotations,
        log_scales: config.lr_scales,
        opacity: config.lr_opacity,
        sh: config.lr_sh,
    };
    state.adam.step(&mut state.gaussians, &eval.grads, &lr);
    state.iteration += 1;

    let done = state.iteration;
    if done < densify_until {
        if config.densify_interval > 0 && done > config.densify_from && done % config.densify_interval == 0 {
            let params = DensifyParams {
                grad_threshold: config.densify_grad_threshold,
                split_scale: config.scale_split_threshold * state.extent,
                prune_opacity: config.opacity_prune_threshold,
                prune_scale: config.scale_prune_threshold * state.extent,
                max_gaussians: config.max_gaussians,
            };
            let report = densify_and_prune(
                &mut state.gaussians,
                &mut state.adam,
                &mut state.stats,
                &params,
                &mut state.rng,
            );
            log::debug!("iteration {done}: {report:?}, {} Gaussians", state.gaussians.len());
        }
        if config.opacity_reset_interval > 0 && done % config.opacity_reset_interval == 0 {
            reset_opacity(&mut state.gaussians, &mut state.adam);
        }
    }
    if state.gaussians.is_empty() {
        return Err(Error::Validation(format!("every Gaussian was pruned by iteration {done}")));
    }

    Ok(StepLog {
        iteration: it,
        view: v,
        l_photo: eval.l_photo,
        l_t: eval.l_t,
        l_s: eval.l_s,
        total: eval.total,
        n_gaussians: state.gaussians.len(),
        n_touch: state.gaussians.count_tag(SetTag::Touch),
        psnr: eval.psnr,
    })
}

/// Runs `config.iterations` steps from `initial`, calling `on_step` after
/// each one.
pub fn train(
    initial: GaussianSet,
    views: &[TrainView],
    touch: &TouchPointSet,
    config: &TrainConfig,
    mut on_step: impl FnMut(&TrainState, &StepLog) -> Result<()>,
) -> Result<(GaussianSet, Vec<StepLog>)> {
    config.validate()?;
    touch.validate()?;
    let cameras: Vec<Camera> = views.iter().map(|v| v.camera.clone()).collect();
    let mut state = TrainState::new(initial, &cameras, config);
    let mut logs = Vec::with_capacity(config.iterations);
    for _ in 0..config.iterations {
        let log = train_step(&mut state, views, touch, config)?;
        on_step(&state, &log)?;
        logs.push(log);
    }
    Ok((state.gaussians, logs))
}

/// Seeds the Gaussians per the mode and trains. Touch patches are ignored
/// by the modes that do not use touch.
pub fn fit(
    views: &[TrainView],
    vision: &PointCloud,
    patches: &[TouchPatch],
    config: &TrainConfig,
) -> Result<(GaussianSet, Vec<StepLog>)> {
    let patches = if config.mode.uses_touch() { patches } else { &[] };
    let initial = initialize_scene(vision, patches, config)?;
    let touch = touch_points(patches);
    train(initial, views, &touch, config, |_, _| Ok(()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::logit;
    use crate::loss::transmittance_at_point;
    use nalgebra::Vector3;

    fn camera(size: usize) -> Camera {
        Camera::look_at(
            Vector3::new(0.0, 0.0, -3.0),
            Vector3::zeros(),
            Vector3::new(0.0, -1.0, 0.0),
            0.8,
            size,
            size,
        )
        .unwrap()
    }

    fn blob_scene(n: usize) -> GaussianSet {
        let mut g = GaussianSet::new(1);
        for i in 0..n {
            let a = i as f64 * 2.4;
            let r = 0.1 * (i as f64).sqrt();
            g.push_rgb(
                [r * a.cos(), r * a.sin(), 0.05 * (i % 3) as f64],
                [1.0, 0.1 * (i % 4) as f64, 0.0, 0.0],
                [-2.0; 3],
                logit(0.3),
                [0.2 + 0.05 * (i % 5) as f64, 0.4, 0.6],
                if i % 4 == 0 { SetTag::Touch } else { SetTag::Vision },
            );
        }
        g
    }

    fn target(size: usize) -> Image {
        let data = (0..size * size * 3)
            .map(|k| {
                let p = k / 3;
                let (x, y) = ((p % size) as f64, (p / size) as f64);
                if (x - 12.0).powi(2) + (y - 12.0).powi(2) < 40.0 { 0.8 } else { 0.0 }
            })
            .collect();
        Image::from_data(size, size, 3, data)
    }

    fn quick_config() -> TrainConfig {
        TrainConfig {
            iterations: 40,
            densify_from: 5,
            densify_interval: 10,
            densify_grad_threshold: 1e-6,
            scale_prune_threshold: 1.0,
            opacity_reset_interval: 25,
            sh_increase_interval: 10,
            sh_degree: 1,
            log_train_psnr: false,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn zero_weights_reproduce_baseline_exactly() {
        let views = vec![
            TrainView::new(camera(24), target(24)),
            TrainView {
                camera: Camera::look_at(
                    Vector3::new(1.0, 0.5, -2.8),
                    Vector3::zeros(),
                    Vector3::new(0.0, -1.0, 0.0),
                    0.8,
                    24,
                    24,
                )
                .unwrap(),
                image: target(24),
                alpha: Some(vec![0.5; 24 * 24]),
            },
        ];
        let baseline = TrainConfig { mode: Mode::Baseline, ..quick_config() };
        let mut zeroed = TrainConfig { mode: Mode::Full, ..quick_config() };
        zeroed.loss.lambda_t = 0.0;
        zeroed.loss.lambda_s = 0.0;
        let touch = TouchPointSet::new(vec![[0.0, 0.0, 0.0], [0.1, 0.0, 0.0]]);
        let a = train(blob_scene(12), &views, &TouchPointSet::default(), &baseline, |_, _| Ok(())).unwrap();
        let b = train(blob_scene(12), &views, &touch, &zeroed, |_, _| Ok(())).unwrap();
        assert_eq!(a.0, b.0);
        assert_eq!(logs_to_csv(&a.1), logs_to_csv(&b.1));
        assert!(a.1.iter().any(|l| l.n_gaussians != 12), "densification never fired");
    }

    #[test]
    fn color_only_loss_decreases() {
        let mut g = GaussianSet::new(0);
        g.push_rgb([0.0; 3], [1.0, 0.0, 0.0, 0.0], [-1.0; 3], logit(0.9), [0.2, 0.2, 0.2], SetTag::Vision);
        let views = vec![TrainView::new(camera(16), Image::from_data(16, 16, 3, vec![0.7; 768]))];
        let cfg = TrainConfig {
            iterations: 50,
            mode: Mode::Baseline,
            densify_interval: 0,
            opacity_reset_interval: 0,
            sh_degree: 0,
            lr_means_init: 1e-12,
            lr_means_final: 1e-12,
            lr_rotations: 1e-12,
            lr_scales: 1e-12,
            lr_opacity: 1e-12,
            lr_sh: 1e-2,
            loss: LossWeights { lambda_photo_ssim: 0.0, ..LossWeights::default() },
            ..TrainConfig::default()
        };
        let (_, logs) = train(g, &views, &TouchPointSet::default(), &cfg, |_, _| Ok(())).unwrap();
        for w in logs.windows(2) {
            assert!(w[1].total < w[0].total, "{} -> {}", w[0].total, w[1].total);
        }
    }

    #[test]
    fn transmittance_raises_nearby_opacity() {
        // The Gaussian sits behind the camera, so only L_T acts on it.
        let mut g = GaussianSet::new(0);
        g.push_rgb([0.0, 0.0, -5.0], [1.0, 0.0, 0.0, 0.0], [-2.0; 3], logit(0.2), [0.5; 3], SetTag::Touch);
        let touch = TouchPointSet::new(vec![[0.05, 0.0, -5.0]]);
        let views = vec![TrainView::new(camera(16), Image::new(16, 16, 3))];
        let mut cfg = TrainConfig {
            iterations: 30,
            mode: Mode::Touch,
            densify_interval: 0,
            opacity_reset_interval: 0,
            sh_degree: 0,
            ..TrainConfig::default()
        };
        cfg.loss.lambda_t = 100.0;
        cfg.loss.k = 1;
        cfg.loss.d_max = Some(1.0);

        // Sign check against a finite difference of the transmittance.
        let p = Vector3::new(0.05, 0.0, -5.0);
        let h = 1e-6;
        let mut gp = g.clone();
        gp.opacity_logits[0] += h;
        let mut gm = g.clone();
        gm.opacity_logits[0] -= h;
        let fd = (transmittance_at_point(&p, &gp, 1, 1.0) - transmittance_at_point(&p, &gm, 1, 1.0)) / (2.0 * h);
        assert!(fd < 0.0);

        let mut last = g.opacity(0);
        train(g, &views, &touch, &cfg, |s, _| {
            let o = s.gaussians.opacity(0);
            assert!(o > last, "{last} -> {o}");
            last = o;
            Ok(())
        })
        .unwrap();
    }

    #[test]
    fn non_finite_loss_is_reported() {
        let mut g = blob_scene(3);
        g.sh_coeffs[0] = f64::NAN;
        let views = vec![TrainView::new(camera(16), Image::new(16, 16, 3))];
        let cfg = TrainConfig { iterations: 3, ..quick_config() };
        let r = train(g, &views, &TouchPointSet::default(), &cfg, |_, _| Ok(()));
        assert!(matches!(r, Err(Error::NonFiniteLoss(0))));
    }

    #[test]
    fn view_schedule_covers_each_epoch() {
        let g = blob_scene(2);
        let cams: Vec<Camera> = (0..3).map(|_| camera(8)).collect();
        let mut s = TrainState::new(g, &cams, &TrainConfig::default());
        let mut seen: Vec<usize> = (0..6).map(|_| s.next_view(3, true)).collect();
        seen[..3].sort();
        seen[3..].sort();
        assert_eq!(seen, vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn extent_of_orbit() {
        let cams: Vec<Camera> = (0..8)
            .map(|k| {
                let a = k as f64 * std::f64::consts::TAU / 8.0;
                Camera::look_at(
                    Vector3::new(2.0 * a.cos(), 2.0 * a.sin(), 0.0),
                    Vector3::zeros(),
                    Vector3::z(),
                    0.8,
                    8,
                    8,
                )
                .unwrap()
            })
            .collect();
        assert!((scene_extent(&cams) - 2.2).abs() < 1e-9);
    }
}
