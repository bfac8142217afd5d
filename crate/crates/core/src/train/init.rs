//! Seeding the vision and touch Gaussian sets.

use nalgebra::{UnitQuaternion, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use crate::error::{Error, Result};
use crate::gaussians::{GaussianSet, SetTag};
use crate::geometry::logit;
use crate::nearest::{median, nearest_other_distances, PointIndex};
use crate::synth::PointCloud;
use crate::touch::TouchPatch;

const IDENTITY: [f64; 4] = [1.0, 0.0, 0.0, 0.0];
/// Floor on initial scales so coincident points stay renderable.
const MIN_SCALE: f64 = 1e-7;
/// Scale used when a set has a single point and no neighbors.
const LONE_POINT_SCALE: f64 = 0.01;

/// Mean distance to the three nearest other points, per point.
fn mean_knn3_distance(points: &[[f64; 3]]) -> Vec<f64> {
    if points.len() < 2 {
        return vec![LONE_POINT_SCALE; points.len()];
    }
    let index = PointIndex::new(points);
    points
        .iter()
        .map(|p| {
            // The query point itself is among the results at distance 0.
            let d = index.knn_sq(p, 4);
            let others = &d[1..];
            others.iter().map(|v| v.sqrt()).sum::<f64>() / others.len() as f64
        })
        .collect()
}

/// Vision Gaussians at `vision` points colored by the cloud, touch
/// Gaussians at every patch point with random colors, oriented by the
/// sensor normal; all with the same initial opacity.
pub fn initialize_scene(vision: &PointCloud, patches: &[TouchPatch], config: &TrainConfig) -> Result<GaussianSet> {
    let touch_points: usize = patches.iter().map(|p| p.points.len()).sum();
    if vision.is_empty() && touch_points == 0 {
        return Err(Error::EmptyScene);
    }
    if vision.colors.len() != vision.points.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} vision points but {} colors",
            vision.points.len(),
            vision.colors.len()
        )));
    }
    let op = logit(config.init_opacity);
    let mut g = GaussianSet::new(config.sh_degree);
    for (p, (c, d)) in vision
        .points
        .iter()
        .zip(vision.colors.iter().zip(mean_knn3_distance(&vision.points)))
    {
        g.push_rgb(*p, IDENTITY, [d.max(MIN_SCALE).ln(); 3], op, *c, SetTag::Vision);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ 0x7e57_0000_0000_0001);
    let jitter = config.touch_scale_jitter;
    for patch in patches {
        // Local z follows the sensor normal so a flattened Gaussian lies in the contact plane.
        let q = UnitQuaternion::rotation_between(&Vector3::z(), &patch.inward_normal())
            .unwrap_or_else(|| UnitQuaternion::from_axis_angle(&Vector3::x_axis(), std::f64::consts::PI));
        let rot = [q.w, q.i, q.j, q.k];
        let base = match nearest_other_distances(&patch.points) {
            Some(d) => median(&d),
            None => patch.patch_radius,
        };
        let base = if base > 0.0 { base } else { LONE_POINT_SCALE };
        for p in &patch.points {
            let s = base * (1.0 + jitter * rng.random_range(-1.0..=1.0));
            let rgb = [rng.random::<f64>(), rng.random::<f64>(), rng.random::<f64>()];
            let s = s.max(MIN_SCALE);
            let thin = (s * config.touch_flatness).max(MIN_SCALE);
            g.push_rgb(*p, rot, [s.ln(), s.ln(), thin.ln()], op, rgb, SetTag::Touch);
        }
    }
    Ok(g)
}
