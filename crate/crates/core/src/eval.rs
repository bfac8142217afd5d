//! Metrics: Chamfer distance on back-projected depth, PSNR, SSIM, and the
//! touch-count sweep.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde_json::{json, Value};

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::gaussians::GaussianSet;
use crate::imaging::Image;
use crate::mesh::Surface;
use crate::nearest::PointIndex;
use crate::raster::{rasterize, RenderOptions};
use crate::synth::PointCloud;
use crate::touch::{sample_grasps, TouchPatch};
use crate::train::{fit, Mode, TrainConfig, TrainView};

pub use crate::loss::ssim;

pub const DEFAULT_ALPHA_THRESHOLD: f64 = 0.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ChamferVariant {
    /// Mean squared nearest-neighbor distance, summed over both directions.
    #[default]
    Squared,
    /// Mean nearest-neighbor distance, summed over both directions.
    Absolute,
}

impl fmt::Display for ChamferVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ChamferVariant::Squared => "squared",
            ChamferVariant::Absolute => "absolute",
        })
    }
}

impl FromStr for ChamferVariant {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "squared" => Ok(ChamferVariant::Squared),
            "absolute" => Ok(ChamferVariant::Absolute),
            _ => Err(format!("unknown Chamfer variant `{s}`")),
        }
    }
}

fn one_sided(from: &[[f64; 3]], to: &PointIndex, variant: ChamferVariant) -> f64 {
    let d: Vec<f64> = from
        .par_iter()
        .map(|p| {
            let sq = to.nearest_sq(p);
            match variant {
                ChamferVariant::Squared => sq,
                ChamferVariant::Absolute => sq.sqrt(),
            }
        })
        .collect();
    d.iter().sum::<f64>() / d.len() as f64
}

/// Symmetric Chamfer distance with exact nearest neighbors.
pub fn chamfer_distance(a: &[[f64; 3]], b: &[[f64; 3]], variant: ChamferVariant) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyCloud);
    }
    let (ia, ib) = (PointIndex::new(a), PointIndex::new(b));
    Ok(one_sided(a, &ib, variant) + one_sided(b, &ia, variant))
}

/// `10·log10(1/MSE)`; identical images give `+∞`.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    if !a.same_shape(b) {
        return Err(Error::ShapeMismatch(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width, a.height, a.channels, b.width, b.height, b.channels
        )));
    }
    if a.data.is_empty() {
        return Err(Error::ShapeMismatch("empty image".into()));
    }
    let mse = a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

/// Back-projects every pixel whose accumulated opacity exceeds
/// `alpha_threshold`, after dividing the composited depth by that opacity.
/// Every `stride`-th surviving pixel is kept.
pub fn predicted_pointcloud(
    g: &GaussianSet,
    cameras: &[Camera],
    alpha_threshold: f64,
    stride: usize,
) -> Vec<[f64; 3]> {
    let stride = stride.max(1);
    let per_view: Vec<Vec<[f64; 3]>> = cameras
        .iter()
        .map(|cam| {
            let r = rasterize(g, cam, &RenderOptions::default());
            let mut pts = Vec::new();
            for (p, (&d, &a)) in r.depth.iter().zip(&r.acc_alpha).enumerate() {
                if a > alpha_threshold && a > 0.0 {
                    let u = (p % cam.width) as f64 + 0.5;
                    let v = (p / cam.width) as f64 + 0.5;
                    let q = cam.unproject(u, v, d / a);
                    pts.push([q.x, q.y, q.z]);
                }
            }
            pts
        })
        .collect();
    per_view
        .into_iter()
        .flatten()
        .enumerate()
        .filter(|(k, _)| k % stride == 0)
        .map(|(_, p)| p)
        .collect()
}

/// Stride that brings `n` points down to about `target`.
pub fn stride_for_target(n: usize, target: usize) -> usize {
    if target == 0 {
        return 1;
    }
    n.div_ceil(target).max(1)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Chamfer,
    Psnr,
    Ssim,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Chamfer => "cd",
            Metric::Psnr => "psnr",
            Metric::Ssim => "ssim",
        }
    }
}

impl FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "cd" => Ok(Metric::Chamfer),
            "psnr" => Ok(Metric::Psnr),
            "ssim" => Ok(Metric::Ssim),
            other => Err(format!("unknown metric `{other}` (expected cd, psnr or ssim)")),
        }
    }
}

/// Named metric values for one object.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricReport {
    pub object: String,
    pub chamfer_variant: ChamferVariant,
    pub values: Vec<(String, f64)>,
}

fn number(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else if v > 0.0 {
        json!("+inf")
    } else if v < 0.0 {
        json!("-inf")
    } else {
        json!("nan")
    }
}

impl MetricReport {
    pub fn get(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(n, _)| n == name).map(|(_, v)| *v)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("metric,object,value\n");
        for (name, v) in &self.values {
            s.push_str(&format!("{name},{},{v}\n", self.object));
        }
        s
    }

    /// Non-finite values are written as the strings `+inf`, `-inf`, `nan`.
    pub fn to_json(&self) -> String {
        let metrics: serde_json::Map<String, Value> =
            self.values.iter().map(|(n, v)| (n.clone(), number(*v))).collect();
        let doc = json!({
            "object": self.object,
            "chamfer_variant": self.chamfer_variant.to_string(),
            "metrics": metrics,
        });
        serde_json::to_string_pretty(&doc).expect("report serializes") + "\n"
    }
}

/// Test-set inputs for [`evaluate`].
pub struct EvalSet<'a> {
    pub cameras: &'a [Camera],
    pub images: &'a [Image],
    pub gt_points: &'a [[f64; 3]],
}

#[derive(Clone, Copy, Debug)]
pub struct EvalOptions {
    pub variant: ChamferVariant,
    pub alpha_threshold: f64,
    /// Cap on the predicted cloud size (strided down past this).
    pub target_points: usize,
    pub background: [f64; 3],
}

impl Default for EvalOptions {
    fn default() -> Self {
        EvalOptions {
            variant: ChamferVariant::Squared,
            alpha_threshold: DEFAULT_ALPHA_THRESHOLD,
            target_points: 500_000,
            background: [0.0; 3],
        }
    }
}

/// Computes the requested metrics; image metrics are averaged over views.
/// An empty predicted cloud is reported as an infinite Chamfer distance.
pub fn evaluate(
    g: &GaussianSet,
    set: &EvalSet,
    metrics: &[Metric],
    object: &str,
    opts: &EvalOptions,
) -> Result<MetricReport> {
    if set.cameras.len() != set.images.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} test cameras but {} images",
            set.cameras.len(),
            set.images.len()
        )));
    }
    let mut values = Vec::new();
    if metrics.contains(&Metric::Chamfer) {
        let total: usize = set.cameras.iter().map(Camera::num_pixels).sum();
        let pred = predicted_pointcloud(
            g,
            set.cameras,
            opts.alpha_threshold,
            stride_for_target(total, opts.target_points),
        );
        let cd = match chamfer_distance(&pred, set.gt_points, opts.variant) {
            Ok(v) => v,
            Err(Error::EmptyCloud) if set.gt_points.is_empty() => return Err(Error::EmptyCloud),
            Err(Error::EmptyCloud) => f64::INFINITY,
            Err(e) => return Err(e),
        };
        values.push(("cd".to_string(), cd));
        values.push(("cd_points".to_string(), pred.len() as f64));
    }
    let want_images = metrics.contains(&Metric::Psnr) || metrics.contains(&Metric::Ssim);
    if want_images && !set.cameras.is_empty() {
        let options = RenderOptions {
            background: opts.background,
            ..RenderOptions::default()
        };
        let mut scores = Vec::new();
        for (cam, target) in set.cameras.iter().zip(set.images) {
            let r = rasterize(g, cam, &options);
            let img = Image::from_rgb(r.width, r.height, &r.color);
            let p = if metrics.contains(&Metric::Psnr) { psnr(&img, target)? } else { 0.0 };
            let s = if metrics.contains(&Metric::Ssim) { ssim(&img, target)? } else { 0.0 };
            scores.push((p, s));
        }
        let n = scores.len() as f64;
        if metrics.contains(&Metric::Psnr) {
            values.push(("psnr".to_string(), scores.iter().map(|s| s.0).sum::<f64>() / n));
        }
        if metrics.contains(&Metric::Ssim) {
            values.push(("ssim".to_string(), scores.iter().map(|s| s.1).sum::<f64>() / n));
        }
    }
    Ok(MetricReport {
        object: object.to_string(),
        chamfer_variant: opts.variant,
        values,
    })
}

/// How touches are simulated for a sweep.
#[derive(Clone, Copy, Debug)]
pub struct TouchSim {
    pub fingers_per_grasp: usize,
    pub patch_radius: f64,
    pub points_per_patch: usize,
}

/// The first `count` readings of `ceil(count / fingers)` grasps.
pub fn simulate_touches(surface: &dyn Surface, count: usize, sim: &TouchSim, seed: u64) -> Result<Vec<TouchPatch>> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let fingers = sim.fingers_per_grasp.max(1);
    let mut patches = sample_grasps(
        surface,
        count.div_ceil(fingers),
        fingers,
        sim.patch_radius,
        sim.points_per_patch,
        seed,
    )?;
    patches.truncate(count);
    Ok(patches)
}

#[derive(Clone, Debug, PartialEq)]
pub struct AblationRow {
    pub count: usize,
    pub runs: Vec<f64>,
    pub mean: f64,
    /// Sample standard deviation (0 for a single run).
    pub std: f64,
}

pub fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let std = if v.len() > 1 {
        (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

pub fn ablation_csv(rows: &[AblationRow]) -> String {
    let mut s = String::from("count,mean,std\n");
    for r in rows {
        s.push_str(&format!("{},{},{}\n", r.count, r.mean, r.std));
    }
    s
}

/// Least-squares slope of `y` against `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Inputs shared by every run of a sweep.
pub struct AblationScene<'a> {
    pub views: &'a [TrainView],
    pub vision: &'a PointCloud,
    pub surface: &'a dyn Surface,
    pub eval: EvalSet<'a>,
}

/// Seed of run `s` in a sweep based at `base`.
pub fn run_seed(base: u64, s: usize) -> u64 {
    base.wrapping_add(s as u64)
}

/// Trains one model per (count, seed) and reports mean/std Chamfer
/// distance per count. Zero touches trains the photometric-only baseline;
/// other counts train `config.mode`.
pub fn touch_ablation(
    scene: &AblationScene,
    counts: &[usize],
    seeds_per_count: usize,
    config: &TrainConfig,
    sim: &TouchSim,
    opts: &EvalOptions,
) -> Result<Vec<AblationRow>> {
    if seeds_per_count == 0 {
        return Err(Error::Validation("seeds_per_count must be >= 1".into()));
    }
    let jobs: Vec<(usize, usize)> = counts
        .iter()
        .flat_map(|&c| (0..seeds_per_count).map(move |s| (c, s)))
        .collect();
    let results: Vec<Result<f64>> = jobs
        .par_iter()
        .map(|&(count, s)| {
            let seed = run_seed(config.seed, s);
            let mut cfg = config.clone();
            cfg.seed = seed;
            if count == 0 {
                cfg.mode = Mode::Baseline;
            }
            let patches = simulate_touches(scene.surface, count, sim, seed)?;
            let (g, _) = fit(scene.views, scene.vision, &patches, &cfg)?;
            let report = evaluate(&g, &scene.eval, &[Metric::Chamfer], "ablation", opts)?;
            log::info!("ablation count {count} seed {seed}: cd {}", report.get("cd").unwrap_or(f64::NAN));
            Ok(report.get("cd").unwrap_or(f64::INFINITY))
        })
        .collect();
    let mut cds = Vec::with_capacity(results.len());
    for r in results {
        cds.push(r?);
    }
    Ok(counts
        .iter()
        .enumerate()
        .map(|(i, &count)| {
            let runs = cds[i * seeds_per_count..(i + 1) * seeds_per_count].to_vec();
            let (mean, std) = mean_std(&runs);
            AblationRow { count, runs, mean, std }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussians::SetTag;
    use crate::geometry::logit;
    use nalgebra::{Matrix4, Vector3};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cloud(rng: &mut ChaCha8Rng, n: usize) -> Vec<[f64; 3]> {
        (0..n).map(|_| [rng.random(), rng.random(), rng.random()]).collect()
    }

    fn brute(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
        let side = |x: &[[f64; 3]], y: &[[f64; 3]]| {
            x.iter()
                .map(|p| {
                    y.iter()
                        .map(|q| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>())
                        .fold(f64::INFINITY, f64::min)
                })
                .sum::<f64>()
                / x.len() as f64
        };
        side(a, b) + side(b, a)
    }

    #[test]
    fn chamfer_basics() {
        let a = [[0.0, 0.0, 0.0]];
        let b = [[1.0, 0.0, 0.0]];
        assert_eq!(chamfer_distance(&a, &b, ChamferVariant::Squared).unwrap(), 2.0);
        assert_eq!(chamfer_distance(&a, &a, ChamferVariant::Squared).unwrap(), 0.0);
        assert!(matches!(chamfer_distance(&a, &[], ChamferVariant::Squared), Err(Error::EmptyCloud)));
        let c = [[0.0, 3.0, 4.0]];
        assert_eq!(chamfer_distance(&a, &c, ChamferVariant::Absolute).unwrap(), 10.0);
    }

    #[test]
    fn chamfer_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = cloud(&mut rng, 1000);
        let b = cloud(&mut rng, 1000);
        let fast = chamfer_distance(&a, &b, ChamferVariant::Squared).unwrap();
        assert!((fast - brute(&a, &b)).abs() < 1e-12);
        let ba = chamfer_distance(&b, &a, ChamferVariant::Squared).unwrap();
        assert!((fast - ba).abs() < 1e-15);
    }

    #[test]
    fn chamfer_rigid_invariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = cloud(&mut rng, 300);
        let b = cloud(&mut rng, 200);
        let r = nalgebra::Rotation3::from_euler_angles(0.3, -1.1, 2.0);
        let t = Vector3::new(5.0, -2.0, 0.5);
        let move_all = |c: &[[f64; 3]]| -> Vec<[f64; 3]> {
            c.iter()
                .map(|p| {
                    let q = r * Vector3::from(*p) + t;
                    [q.x, q.y, q.z]
                })
                .collect()
        };
        let d0 = chamfer_distance(&a, &b, ChamferVariant::Squared).unwrap();
        let d1 = chamfer_distance(&move_all(&a), &move_all(&b), ChamferVariant::Squared).unwrap();
        assert!((d0 - d1).abs() < 1e-9);
    }

    #[test]
    fn psnr_values() {
        let a = Image::from_data(4, 4, 3, vec![0.3; 48]);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);
        let b = Image::from_data(4, 4, 3, vec![0.4; 48]);
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-9);
        let c = Image::from_data(4, 2, 3, vec![0.4; 24]);
        assert!(matches!(psnr(&a, &c), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn psnr_matches_formula_and_is_monotone_in_noise() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = Image::from_data(8, 8, 3, (0..192).map(|_| rng.random()).collect());
        let b = Image::from_data(8, 8, 3, (0..192).map(|_| rng.random()).collect());
        let mse: f64 = a.data.iter().zip(&b.data).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / 192.0;
        assert!((psnr(&a, &b).unwrap() - (-10.0 * mse.log10())).abs() < 1e-12);
        let noise: Vec<f64> = (0..192).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut last = f64::INFINITY;
        for amp in [0.01, 0.02, 0.05, 0.1, 0.2] {
            let n = Image::from_data(8, 8, 3, a.data.iter().zip(&noise).map(|(x, e)| x + amp * e).collect());
            let p = psnr(&a, &n).unwrap();
            assert!(p < last);
            last = p;
        }
    }

    #[test]
    fn ssim_checkerboard_negative() {
        let data: Vec<f64> = (0..16 * 16 * 3).map(|i| (((i / 3) % 16 + (i / 3) / 16) % 2) as f64).collect();
        let a = Image::from_data(16, 16, 3, data.clone());
        let b = Image::from_data(16, 16, 3, data.iter().map(|v| 1.0 - v).collect());
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        assert!(ssim(&a, &b).unwrap() < 0.0);
    }

    fn plane_scene() -> (GaussianSet, Camera) {
        // Dense opaque flat Gaussians on z = 2 in front of an identity camera.
        let mut g = GaussianSet::new(0);
        for i in -40..=40 {
            for j in -40..=40 {
                g.push_rgb(
                    [i as f64 * 0.05, j as f64 * 0.05, 2.0],
                    [1.0, 0.0, 0.0, 0.0],
                    [0.05f64.ln(), 0.05f64.ln(), 1e-4f64.ln()],
                    logit(0.99),
                    [0.5; 3],
                    SetTag::Vision,
                );
            }
        }
        let cam = Camera::new(20.0, 20.0, 16.0, 16.0, Matrix4::identity(), 32, 32).unwrap();
        (g, cam)
    }

    #[test]
    fn opaque_plane_back_projects_onto_plane() {
        let (g, cam) = plane_scene();
        let pts = predicted_pointcloud(&g, std::slice::from_ref(&cam), 0.5, 1);
        assert_eq!(pts.len(), 32 * 32);
        for p in &pts {
            assert!((p[2] - 2.0).abs() < 1e-3, "{p:?}");
        }
        assert!(predicted_pointcloud(&g, &[cam], 1.0 + 1e-9, 1).is_empty());
    }

    #[test]
    fn report_serialization() {
        let r = MetricReport {
            object: "sphere".into(),
            chamfer_variant: ChamferVariant::Squared,
            values: vec![("cd".into(), 0.25), ("psnr".into(), f64::INFINITY)],
        };
        assert_eq!(r.to_csv(), "metric,object,value\ncd,sphere,0.25\npsnr,sphere,inf\n");
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["metrics"]["psnr"], "+inf");
        assert_eq!(v["metrics"]["cd"], 0.25);
        assert_eq!(v["chamfer_variant"], "squared");
    }

    #[test]
    fn slope_and_stats() {
        assert!((slope(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]) - 2.0).abs() < 1e-12);
        let (m, s) = mean_std(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((s - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(stride_for_target(1000, 500), 2);
        assert_eq!(stride_for_target(10, 500), 1);
    }
}
