use nalgebra::{Matrix3, Vector3};

use crate::geometry::{self, Quat};
use crate::sh;

/// Which input a Gaussian was seeded from. Children of densification keep
/// their parent's tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SetTag {
    Vision,
    Touch,
}

impl SetTag {
    pub fn as_u8(self) -> u8 {
        match self {
            SetTag::Vision => 0,
            SetTag::Touch => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<SetTag> {
        match v {
            0 => Some(SetTag::Vision),
            1 => Some(SetTag::Touch),
            _ => None,
        }
    }
}

/// Structure-of-arrays storage for every learnable Gaussian parameter.
///
/// `sh_coeffs` always holds `3 * (sh_degree + 1)²` values per Gaussian.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianSet {
    pub means: Vec<[f64; 3]>,
    pub rotations: Vec<Quat>,
    pub log_scales: Vec<[f64; 3]>,
    pub opacity_logits: Vec<f64>,
    pub sh_coeffs: Vec<f64>,
    pub sh_degree: usize,
    tags: Vec<SetTag>,
}

impl GaussianSet {
    pub fn new(sh_degree: usize) -> Self {
        assert!(sh_degree <= sh::MAX_SH_DEGREE, "SH degree above 3");
        GaussianSet {
            means: Vec::new(),
            rotations: Vec::new(),
            log_scales: Vec::new(),
            opacity_logits: Vec::new(),
            sh_coeffs: Vec::new(),
            sh_degree,
            tags: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }

    /// SH coefficients per Gaussian (all three channels).
    pub fn sh_stride(&self) -> usize {
        3 * sh::num_coeffs(self.sh_degree)
    }

    pub fn push(
        &mut self,
        mean: [f64; 3],
        rotation: Quat,
        log_scale: [f64; 3],
        opacity_logit: f64,
        sh: &[f64],
        tag: SetTag,
    ) {
        assert_eq!(sh.len(), self.sh_stride(), "SH coefficient count");
        self.means.push(mean);
        self.rotations.push(rotation);
        self.log_scales.push(log_scale);
        self.opacity_logits.push(opacity_logit);
        self.sh_coeffs.extend_from_slice(sh);
        self.tags.push(tag);
    }

    /// Appends a Gaussian with a constant color (DC band only).
    pub fn push_rgb(
        &mut self,
        mean: [f64; 3],
        rotation: Quat,
        log_scale: [f64; 3],
        opacity_logit: f64,
        rgb: [f64; 3],
        tag: SetTag,
    ) {
        let mut coeffs = vec![0.0; self.sh_stride()];
        for c in 0..3 {
            coeffs[c] = rgb_to_dc(rgb[c]);
        }
        self.push(mean, rotation, log_scale, opacity_logit, &coeffs, tag);
    }

    pub fn tag(&self, i: usize) -> SetTag {
        self.tags[i]
    }

    pub fn tags(&self) -> &[SetTag] {
        &self.tags
    }

    pub fn count_tag(&self, tag: SetTag) -> usize {
        self.tags.iter().filter(|&&t| t == tag).count()
    }

    pub fn sh(&self, i: usize) -> &[f64] {
        let s = self.sh_stride();
        &self.sh_coeffs[i * s..(i + 1) * s]
    }

    pub fn sh_mut(&mut self, i: usize) -> &mut [f64] {
        let s = self.sh_stride();
        &mut self.sh_coeffs[i * s..(i + 1) * s]
    }

    pub fn mean(&self, i: usize) -> Vector3<f64> {
        Vector3::from(self.means[i])
    }

    pub fn opacity(&self, i: usize) -> f64 {
        geometry::sigmoid(self.opacity_logits[i])
    }

    pub fn covariance(&self, i: usize) -> Matrix3<f64> {
        geometry::covariance_from_params(&self.rotations[i], &self.log_scales[i])
    }

    pub fn max_scale(&self, i: usize) -> f64 {
        self.log_scales[i].iter().copied().fold(f64::NEG_INFINITY, f64::max).exp()
    }

    /// Keeps Gaussians where `keep[i]` is true, preserving order.
    pub fn retain_mask(&mut self, keep: &[bool]) {
        assert_eq!(keep.len(), self.len());
        let stride = self.sh_stride();
        let mut w = 0;
        for r in 0..keep.len() {
            if !keep[r] {
                continue;
            }
            if w != r {
                self.means[w] = self.means[r];
                self.rotations[w] = self.rotations[r];
                self.log_scales[w] = self.log_scales[r];
                self.opacity_logits[w] = self.opacity_logits[r];
                self.tags[w] = self.tags[r];
                self.sh_coeffs.copy_within(r * stride..(r + 1) * stride, w * stride);
            }
            w += 1;
        }
        self.means.truncate(w);
        self.rotations.truncate(w);
        self.log_scales.truncate(w);
        self.opacity_logits.truncate(w);
        self.tags.truncate(w);
        self.sh_coeffs.truncate(w * stride);
    }

    /// Appends a copy of Gaussian `i`, inheriting its tag.
    pub fn duplicate(&mut self, i: usize) -> usize {
        let sh = self.sh(i).to_vec();
        self.push(
            self.means[i],
            self.rotations[i],
            self.log_scales[i],
            self.opacity_logits[i],
            &sh,
            self.tags[i],
        );
        self.len() - 1
    }

    /// Builds a set from raw parts; used by loaders.
    pub fn from_parts(
        means: Vec<[f64; 3]>,
        rotations: Vec<Quat>,
        log_scales: Vec<[f64; 3]>,
        opacity_logits: Vec<f64>,
        sh_coeffs: Vec<f64>,
        sh_degree: usize,
        tags: Vec<SetTag>,
    ) -> Self {
        let n = means.len();
        assert!(rotations.len() == n && log_scales.len() == n && opacity_logits.len() == n && tags.len() == n);
        assert_eq!(sh_coeffs.len(), n * 3 * sh::num_coeffs(sh_degree));
        GaussianSet {
            means,
            rotations,
            log_scales,
            opacity_logits,
            sh_coeffs,
            sh_degree,
            tags,
        }
    }

    pub fn all_finite(&self) -> bool {
        self.means.iter().flatten().all(|v| v.is_finite())
            && self.rotations.iter().flatten().all(|v| v.is_finite())
            && self.log_scales.iter().flatten().all(|v| v.is_finite())
            && self.opacity_logits.iter().all(|v| v.is_finite())
            && self.sh_coeffs.iter().all(|v| v.is_finite())
    }
}

pub fn rgb_to_dc(c: f64) -> f64 {
    (c - 0.5) / sh::SH_C0
}

pub fn dc_to_rgb(dc: f64) -> f64 {
    dc * sh::SH_C0 + 0.5
}
