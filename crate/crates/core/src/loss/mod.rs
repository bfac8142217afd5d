//! Training objectives.

pub mod distance;
pub mod mask;
pub mod photometric;
pub mod smoothness;
pub mod sobel;
pub mod ssim;
pub mod transmittance;

pub use mask::{proximity_mask, MaskVariant, ProximityMask};
pub use photometric::photometric_loss;
pub use smoothness::edge_aware_smoothness;
pub use sobel::sobel_gradients_5x5;
pub use ssim::ssim;
pub use transmittance::{transmittance_at_point, transmittance_loss};

use crate::error::{Error, Result};

/// World-space contact points, each tagged with the patch it came from.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TouchPointSet {
    pub points: Vec<[f64; 3]>,
    pub source_patch: Vec<usize>,
}

impl TouchPointSet {
    /// All points attributed to patch 0.
    pub fn new(points: Vec<[f64; 3]>) -> Self {
        let source_patch = vec![0; points.len()];
        TouchPointSet { points, source_patch }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn push_patch(&mut self, patch: usize, points: &[[f64; 3]]) {
        self.points.extend_from_slice(points);
        self.source_patch.extend(std::iter::repeat_n(patch, points.len()));
    }

    pub fn validate(&self) -> Result<()> {
        if self.source_patch.len() != self.points.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} points but {} patch indices",
                self.points.len(),
                self.source_patch.len()
            )));
        }
        if self.points.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Validation("non-finite touch point".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossWeights {
    /// SSIM share inside the photometric loss.
    pub lambda_photo_ssim: f64,
    pub lambda_t: f64,
    pub lambda_s: f64,
    pub beta: f64,
    pub k: usize,
    /// Candidate radius around touch points; `None` picks 4× the median
    /// nearest-neighbor spacing of the initial cloud.
    pub d_max: Option<f64>,
    /// Mask decay width in pixels.
    pub sigma_mask: f64,
    pub mask_variant: MaskVariant,
    /// Apply transmittance gradients to touch Gaussians only.
    pub restrict_lt_to_touch_set: bool,
    /// Apply the proximity mask to the smoothness term.
    pub use_mask: bool,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            lambda_photo_ssim: 0.2,
            lambda_t: 0.5,
            lambda_s: 0.1,
            beta: 10.0,
            k: 20,
            d_max: None,
            sigma_mask: 20.0,
            mask_variant: MaskVariant::Decay,
            restrict_lt_to_touch_set: false,
            use_mask: true,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        let scalars = [
            ("lambda_photo_ssim", self.lambda_photo_ssim),
            ("lambda_t", self.lambda_t),
            ("lambda_s", self.lambda_s),
            ("beta", self.beta),
            ("sigma_mask", self.sigma_mask),
            ("d_max", self.d_max.unwrap_or(0.0)),
        ];
        for (name, v) in scalars {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        if self.lambda_photo_ssim > 1.0 {
            return Err(Error::Config("lambda_photo_ssim must be <= 1".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        Ok(())
    }
}
