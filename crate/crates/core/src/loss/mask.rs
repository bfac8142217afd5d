use nalgebra::Vector3;

use super::distance::distance_transform;
use super::TouchPointSet;
use crate::camera::{Camera, NEAR_PLANE};

/// Touch projections behind the rendered surface by more than this many
/// scene units are treated as occluded.
pub const OCCLUSION_MARGIN: f64 = 0.05;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MaskVariant {
    /// `1 − exp(−d²/2σ²)`
    #[default]
    Decay,
    /// 0 within σ pixels, 1 beyond.
    Threshold,
}

impl std::fmt::Display for MaskVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MaskVariant::Decay => "decay",
            MaskVariant::Threshold => "threshold",
        })
    }
}

impl std::str::FromStr for MaskVariant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "decay" => Ok(MaskVariant::Decay),
            "threshold" => Ok(MaskVariant::Threshold),
            _ => Err(format!("unknown mask variant `{s}`")),
        }
    }
}

/// Per-pixel weight for the smoothness term: near 0 at visible touch
/// projections, 1 far from them.
#[derive(Clone, Debug, PartialEq)]
pub struct ProximityMask {
    pub width: usize,
    pub height: usize,
    pub weights: Vec<f64>,
    pub variant: MaskVariant,
}

impl ProximityMask {
    pub fn ones(width: usize, height: usize, variant: MaskVariant) -> Self {
        ProximityMask {
            width,
            height,
            weights: vec![1.0; width * height],
            variant,
        }
    }
}

/// Pixels containing a visible touch projection.
pub fn visible_touch_pixels(touch: &TouchPointSet, camera: &Camera, depth: &[f64]) -> Vec<bool> {
    let (w, h) = (camera.width, camera.height);
    let mut seeds = vec![false; w * h];
    for p in &touch.points {
        let c = camera.world_to_cam(&Vector3::from(*p));
        if c.z <= NEAR_PLANE {
            continue;
        }
        let uv = camera.cam_to_pixel(&c);
        if !(uv.x >= 0.0 && uv.y >= 0.0 && uv.x < w as f64 && uv.y < h as f64) {
            continue;
        }
        let pix = uv.y as usize * w + uv.x as usize;
        let surface = depth[pix];
        // No rendered surface means nothing can hide the touch.
        if surface > 0.0 && c.z > surface + OCCLUSION_MARGIN {
            continue;
        }
        seeds[pix] = true;
    }
    seeds
}

/// `rendered_depth` is the per-pixel surface depth (0 where empty).
pub fn proximity_mask(
    touch: &TouchPointSet,
    camera: &Camera,
    rendered_depth: &[f64],
    sigma_mask: f64,
    variant: MaskVariant,
) -> ProximityMask {
    let (w, h) = (camera.width, camera.height);
    assert_eq!(rendered_depth.len(), w * h, "depth buffer size");
    let seeds = visible_touch_pixels(touch, camera, rendered_depth);
    if !seeds.iter().any(|&s| s) {
        return ProximityMask::ones(w, h, variant);
    }
    let dist = distance_transform(&seeds, w, h);
    let weights = dist
        .iter()
        .map(|&d| match variant {
            MaskVariant::Decay => {
                if sigma_mask <= 0.0 {
                    if d > 0.0 { 1.0 } else { 0.0 }
                } else {
                    1.0 - (-d * d / (2.0 * sigma_mask * sigma_mask)).exp()
                }
            }
            MaskVariant::Threshold => {
                if d <= sigma_mask {
                    0.0
                } else {
                    1.0
                }
            }
        })
        .collect();
    ProximityMask {
        width: w,
        height: h,
        weights,
        variant,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::loss::distance::tests::brute_force;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn camera(w: usize, h: usize) -> Camera {
        Camera::look_at(
            Vector3::new(0.0, 0.0, -3.0),
            Vector3::zeros(),
            Vector3::new(0.0, -1.0, 0.0),
            0.8,
            w,
            h,
        )
        .unwrap()
    }

    #[test]
    fn single_center_touch_decay() {
        let cam = camera(33, 33);
        let touch = TouchPointSet::new(vec![[0.0, 0.0, 0.0]]);
        let m = proximity_mask(&touch, &cam, &vec![0.0; 33 * 33], 5.0, MaskVariant::Decay);
        assert_eq!(m.weights[16 * 33 + 16], 0.0);
        assert!(m.weights[0] > 0.9999);
        // radial symmetry
        for (a, b) in [((10, 16), (16, 10)), ((12, 12), (20, 20)), ((16, 22), (22, 16))] {
            let wa = m.weights[a.1 * 33 + a.0];
            let wb = m.weights[b.1 * 33 + b.0];
            assert!((wa - wb).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_threshold_marks_only_projection_pixels() {
        let cam = camera(20, 20);
        let touch = TouchPointSet::new(vec![[0.0, 0.0, 0.0], [0.3, 0.2, 0.0]]);
        let depth = vec![0.0; 400];
        let m = proximity_mask(&touch, &cam, &depth, 0.0, MaskVariant::Threshold);
        let seeds = visible_touch_pixels(&touch, &cam, &depth);
        assert_eq!(seeds.iter().filter(|&&s| s).count(), 2);
        for (w, s) in m.weights.iter().zip(&seeds) {
            assert_eq!(*w, if *s { 0.0 } else { 1.0 });
        }
    }

    #[test]
    fn no_visible_touches_gives_ones() {
        let cam = camera(16, 16);
        // behind the camera
        let touch = TouchPointSet::new(vec![[0.0, 0.0, -5.0]]);
        let m = proximity_mask(&touch, &cam, &vec![0.0; 256], 3.0, MaskVariant::Decay);
        assert!(m.weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn occluded_touch_is_ignored() {
        let cam = camera(16, 16);
        let touch = TouchPointSet::new(vec![[0.0, 0.0, 0.0]]);
        // a surface at depth 2, touch sits at depth 3
        let m = proximity_mask(&touch, &cam, &vec![2.0; 256], 3.0, MaskVariant::Decay);
        assert!(m.weights.iter().all(|&w| w == 1.0));
        let m = proximity_mask(&touch, &cam, &vec![2.96; 256], 3.0, MaskVariant::Decay);
        assert!(m.weights.iter().any(|&w| w == 0.0));
    }

    #[test]
    fn distance_field_matches_exhaustive_scan() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cam = camera(64, 64);
        let touch = TouchPointSet::new(
            (0..10)
                .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-0.5..0.5)])
                .collect(),
        );
        let depth = vec![0.0; 64 * 64];
        let seeds = visible_touch_pixels(&touch, &cam, &depth);
        let sigma: f64 = 6.0;
        let m = proximity_mask(&touch, &cam, &depth, sigma, MaskVariant::Decay);
        for (w, d2) in m.weights.iter().zip(brute_force(&seeds, 64, 64)) {
            let expect = 1.0 - (-d2 / (2.0 * sigma * sigma)).exp();
            assert!((w - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn decay_is_monotone_in_distance() {
        let cam = camera(40, 30);
        let touch = TouchPointSet::new(vec![[0.2, -0.1, 0.0]]);
        let depth = vec![0.0; 1200];
        let m = proximity_mask(&touch, &cam, &depth, 4.0, MaskVariant::Decay);
        let d = distance_transform(&visible_touch_pixels(&touch, &cam, &depth), 40, 30);
        let mut pairs: Vec<(f64, f64)> = d.into_iter().zip(m.weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert!(pairs.windows(2).all(|p| p[1].1 >= p[0].1));
    }
}
