//! Training configuration and its flat `key = value` text form.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::loss::{LossWeights, MaskVariant};

/// Which regularizers are active. Touch Gaussians are only seeded in the
/// modes that use touches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Photometric loss only.
    Baseline,
    /// Plus unmasked edge-aware smoothness.
    Smooth,
    /// Plus touch Gaussians and the transmittance loss.
    Touch,
    /// Touch Gaussians, transmittance, and masked smoothness.
    #[default]
    Full,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Baseline, Mode::Smooth, Mode::Touch, Mode::Full];

    pub fn uses_touch(self) -> bool {
        matches!(self, Mode::Touch | Mode::Full)
    }

    pub fn name(self) -> &'static str {
        match self {
            Mode::Baseline => "3dgs",
            Mode::Smooth => "3dgs+s",
            Mode::Touch => "3dgs+t",
            Mode::Full => "full",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Mode::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown mode `{s}` (expected 3dgs, 3dgs+s, 3dgs+t or full)"))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub iterations: usize,
    pub mode: Mode,
    pub seed: u64,
    /// Reshuffle the view order every epoch; otherwise cycle in order.
    pub shuffle_views: bool,
    pub lr_means_init: f64,
    pub lr_means_final: f64,
    pub lr_sh: f64,
    pub lr_opacity: f64,
    pub lr_scales: f64,
    pub lr_rotations: f64,
    pub densify_from: usize,
    /// `None` stops densifying at 60% of the iterations.
    pub densify_until: Option<usize>,
    pub densify_interval: usize,
    /// Threshold on the mean normalized-device-coordinate gradient norm.
    pub densify_grad_threshold: f64,
    pub opacity_prune_threshold: f64,
    pub opacity_reset_interval: usize,
    /// Fraction of the scene extent separating clone from split.
    pub scale_split_threshold: f64,
    /// Fraction of the scene extent above which a Gaussian is pruned.
    pub scale_prune_threshold: f64,
    /// Composite views that carry alpha over a fresh random color each step.
    pub random_background: bool,
    /// Densification stops adding Gaussians past this count.
    pub max_gaussians: usize,
    pub sh_degree: usize,
    /// One SH band is unlocked every this many iterations.
    pub sh_increase_interval: usize,
    pub init_opacity: f64,
    /// Relative jitter on the initial touch-Gaussian scale.
    pub touch_scale_jitter: f64,
    /// Normal-axis scale of a touch Gaussian relative to its in-plane scale.
    pub touch_flatness: f64,
    pub tile_size: usize,
    pub background: [f64; 3],
    /// Checkpoint every this many iterations (0 = final only).
    pub checkpoint_interval: usize,
    /// Log PSNR of the rendered training view.
    pub log_train_psnr: bool,
    pub loss: LossWeights,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            iterations: 7000,
            mode: Mode::Full,
            seed: 0,
            shuffle_views: true,
            lr_means_init: 1.6e-4,
            lr_means_final: 1.6e-6,
            lr_sh: 2.5e-3,
            lr_opacity: 5e-2,
            lr_scales: 5e-3,
            lr_rotations: 1e-3,
            densify_from: 500,
            densify_until: None,
            densify_interval: 100,
            densify_grad_threshold: 2e-4,
            opacity_prune_threshold: 5e-3,
            opacity_reset_interval: 3000,
            scale_split_threshold: 0.01,
            scale_prune_threshold: 0.1,
            random_background: true,
            max_gaussians: 200_000,
            sh_degree: 3,
            sh_increase_interval: 1000,
            init_opacity: 0.1,
            touch_scale_jitter: 0.2,
            touch_flatness: 0.1,
            tile_size: 16,
            background: [0.0; 3],
            checkpoint_interval: 0,
            log_train_psnr: true,
            loss: LossWeights::default(),
        }
    }
}

fn parse<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("bad value `{v}` for `{key}`")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(Error::Config(format!("bad boolean `{v}` for `{key}`"))),
    }
}

impl TrainConfig {
    pub fn densify_until(&self) -> usize {
        self.densify_until
            .unwrap_or((0.6 * self.iterations as f64).round() as usize)
    }

    /// Loss weights after applying the mode gating.
    pub fn effective_loss(&self) -> LossWeights {
        let mut w = self.loss.clone();
        match self.mode {
            Mode::Baseline => {
                w.lambda_t = 0.0;
                w.lambda_s = 0.0;
            }
            Mode::Smooth => {
                w.lambda_t = 0.0;
                w.use_mask = false;
            }
            Mode::Touch => w.lambda_s = 0.0,
            Mode::Full => {}
        }
        w
    }

    /// Means learning rate at `step`, log-linear from init to final.
    pub fn lr_means_at(&self, step: usize) -> f64 {
        if self.iterations <= 1 {
            return self.lr_means_init;
        }
        let t = (step as f64 / self.iterations as f64).clamp(0.0, 1.0);
        (self.lr_means_init.ln() * (1.0 - t) + self.lr_means_final.ln() * t).exp()
    }

    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("lr_means_init", self.lr_means_init),
            ("lr_means_final", self.lr_means_final),
            ("lr_sh", self.lr_sh),
            ("lr_opacity", self.lr_opacity),
            ("lr_scales", self.lr_scales),
            ("lr_rotations", self.lr_rotations),
        ];
        for (name, v) in rates {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be > 0, got {v}")));
            }
        }
        let fractions = [
            ("densify_grad_threshold", self.densify_grad_threshold),
            ("opacity_prune_threshold", self.opacity_prune_threshold),
            ("scale_split_threshold", self.scale_split_threshold),
            ("scale_prune_threshold", self.scale_prune_threshold),
            ("touch_scale_jitter", self.touch_scale_jitter),
            ("touch_flatness", self.touch_flatness),
        ];
        for (name, v) in fractions {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be >= 0, got {v}")));
            }
        }
        if !(self.init_opacity > 0.0 && self.init_opacity < 1.0) {
            return Err(Error::Config(format!("init_opacity must be in (0, 1), got {}", self.init_opacity)));
        }
        if self.sh_degree > crate::sh::MAX_SH_DEGREE {
            return Err(Error::Config(format!("sh_degree must be <= 3, got {}", self.sh_degree)));
        }
        if self.tile_size == 0 {
            return Err(Error::Config("tile_size must be >= 1".into()));
        }
        self.loss.validate()
    }

    /// Sets one field by name.
    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let v = v.trim();
        match key.trim() {
            "iterations" => self.iterations = parse(key, v)?,
            "mode" => self.mode = v.parse().map_err(Error::Config)?,
            "seed" => self.seed = parse(key, v)?,
            "shuffle_views" => self.shuffle_views = parse_bool(key, v)?,
            "lr_means_init" => self.lr_means_init = parse(key, v)?,
            "lr_means_final" => self.lr_means_final = parse(key, v)?,
            "lr_sh" => self.lr_sh = parse(key, v)?,
            "lr_opacity" => self.lr_opacity = parse(key, v)?,
            "lr_scales" => self.lr_scales = parse(key, v)?,
            "lr_rotations" => self.lr_rotations = parse(key, v)?,
            "densify_from" => self.densify_from = parse(key, v)?,
            "densify_until" => {
                self.densify_until = if v == "auto" { None } else { Some(parse(key, v)?) }
            }
            "densify_interval" => self.densify_interval = parse(key, v)?,
            "densify_grad_threshold" => self.densify_grad_threshold = parse(key, v)?,
            "opacity_prune_threshold" => self.opacity_prune_threshold = parse(key, v)?,
            "opacity_reset_interval" => self.opacity_reset_interval = parse(key, v)?,
            "scale_split_threshold" => self.scale_split_threshold = parse(key, v)?,
            "scale_prune_threshold" => self.scale_prune_threshold = parse(key, v)?,
            "max_gaussians" => self.max_gaussians = parse(key, v)?,
            "sh_degree" => self.sh_degree = parse(key, v)?,
            "sh_increase_interval" => self.sh_increase_interval = parse(key, v)?,
            "init_opacity" => self.init_opacity = parse(key, v)?,
            "touch_scale_jitter" => self.touch_scale_jitter = parse(key, v)?,
            "touch_flatness" => self.touch_flatness = parse(key, v)?,
            "tile_size" => self.tile_size = parse(key, v)?,
            "background" => {
                let parts: Vec<f64> = v
                    .split(',')
                    .map(|p| parse(key, p.trim()))
                    .collect::<Result<_>>()?;
                self.background = parts
                    .try_into()
                    .map_err(|_| Error::Config(format!("background needs 3 values, got `{v}`")))?;
            }
            "checkpoint_interval" => self.checkpoint_interval = parse(key, v)?,
            "log_train_psnr" => self.log_train_psnr = parse_bool(key, v)?,
            "random_background" => self.random_background = parse_bool(key, v)?,
            "lambda_photo_ssim" => self.loss.lambda_photo_ssim = parse(key, v)?,
            "lambda_t" => self.loss.lambda_t = parse(key, v)?,
            "lambda_s" => self.loss.lambda_s = parse(key, v)?,
            "beta" => self.loss.beta = parse(key, v)?,
            "k" => self.loss.k = parse(key, v)?,
            "d_max" => self.loss.d_max = if v == "auto" { None } else { Some(parse(key, v)?) },
            "sigma_mask" => self.loss.sigma_mask = parse(key, v)?,
            "mask_variant" => self.loss.mask_variant = v.parse::<MaskVariant>().map_err(Error::Config)?,
            "restrict_lt_to_touch_set" => self.loss.restrict_lt_to_touch_set = parse_bool(key, v)?,
            "use_mask" => self.loss.use_mask = parse_bool(key, v)?,
            other => return Err(Error::Config(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Every field as `(key, value)`, in a stable order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let opt = |o: Option<usize>| o.map_or("auto".to_string(), |v| v.to_string());
        let l = &self.loss;
        vec![
            ("iterations", self.iterations.to_string()),
            ("mode", self.mode.to_string()),
            ("seed", self.seed.to_string()),
            ("shuffle_views", self.shuffle_views.to_string()),
            ("lr_means_init", self.lr_means_init.to_string()),
            ("lr_means_final", self.lr_means_final.to_string()),
            ("lr_sh", self.lr_sh.to_string()),
            ("lr_opacity", self.lr_opacity.to_string()),
            ("lr_scales", self.lr_scales.to_string()),
            ("lr_rotations", self.lr_rotations.to_string()),
            ("densify_from", self.densify_from.to_string()),
            ("densify_until", opt(self.densify_until)),
            ("densify_interval", self.densify_interval.to_string()),
            ("densify_grad_threshold", self.densify_grad_threshold.to_string()),
            ("opacity_prune_threshold", self.opacity_prune_threshold.to_string()),
            ("opacity_reset_interval", self.opacity_reset_interval.to_string()),
            ("scale_split_threshold", self.scale_split_threshold.to_string()),
            ("scale_prune_threshold", self.scale_prune_threshold.to_string()),
            ("max_gaussians", self.max_gaussians.to_string()),
            ("sh_degree", self.sh_degree.to_string()),
            ("sh_increase_interval", self.sh_increase_interval.to_string()),
            ("init_opacity", self.init_opacity.to_string()),
            ("touch_scale_jitter", self.touch_scale_jitter.to_string()),
            ("touch_flatness", self.touch_flatness.to_string()),
            ("tile_size", self.tile_size.to_string()),
            (
                "background",
                format!("{},{},{}", self.background[0], self.background[1], self.background[2]),
            ),
            ("checkpoint_interval", self.checkpoint_interval.to_string()),
            ("log_train_psnr", self.log_train_psnr.to_string()),
            ("random_background", self.random_background.to_string()),
            ("lambda_photo_ssim", l.lambda_photo_ssim.to_string()),
            ("lambda_t", l.lambda_t.to_string()),
            ("lambda_s", l.lambda_s.to_string()),
            ("beta", l.beta.to_string()),
            ("k", l.k.to_string()),
            ("d_max", l.d_max.map_or("auto".to_string(), |v| v.to_string())),
            ("sigma_mask", l.sigma_mask.to_string()),
            ("mask_variant", l.mask_variant.to_string()),
            ("restrict_lt_to_touch_set", l.restrict_lt_to_touch_set.to_string()),
            ("use_mask", l.use_mask.to_string()),
        ]
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", n + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut c = TrainConfig::default();
        c.apply_text(text)?;
        Ok(c)
    }

    pub fn to_text(&self) -> String {
        self.to_pairs()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut c = TrainConfig::default();
        c.iterations = 123;
        c.mode = Mode::Smooth;
        c.densify_until = Some(77);
        c.background = [0.25, 0.5, 1.0];
        c.loss.d_max = Some(0.125);
        c.loss.mask_variant = MaskVariant::Threshold;
        c.loss.lambda_t = 0.3;
        let back = TrainConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn every_echoed_key_is_settable() {
        let c = TrainConfig::default();
        for (k, v) in c.to_pairs() {
            let mut d = TrainConfig::default();
            d.set(k, &v).unwrap();
            assert_eq!(d, c, "{k}");
        }
    }

    #[test]
    fn comments_and_errors() {
        let c = TrainConfig::from_text("# header\n\niterations = 10 # short\nmode=3dgs+t\n").unwrap();
        assert_eq!((c.iterations, c.mode), (10, Mode::Touch));
        assert!(matches!(TrainConfig::from_text("bogus = 1"), Err(Error::Config(_))));
        assert!(matches!(TrainConfig::from_text("iterations"), Err(Error::Config(_))));
        assert!(matches!(TrainConfig::from_text("iterations = -1"), Err(Error::Config(_))));
        assert!(matches!(TrainConfig::from_text("mode = nerf"), Err(Error::Config(_))));
    }

    #[test]
    fn mode_gating() {
        let c = TrainConfig::default();
        let gate = |m: Mode| {
            let w = TrainConfig { mode: m, ..c.clone() }.effective_loss();
            (w.lambda_s > 0.0, w.lambda_t > 0.0, w.use_mask)
        };
        assert_eq!(gate(Mode::Baseline), (false, false, true));
        assert_eq!(gate(Mode::Smooth), (true, false, false));
        assert_eq!(gate(Mode::Touch), (false, true, true));
        assert_eq!(gate(Mode::Full), (true, true, true));
        assert!(!Mode::Smooth.uses_touch() && Mode::Full.uses_touch());
    }

    #[test]
    fn means_schedule_endpoints() {
        let c = TrainConfig::default();
        assert!((c.lr_means_at(0) - 1.6e-4).abs() < 1e-18);
        assert!((c.lr_means_at(c.iterations) - 1.6e-6).abs() < 1e-18);
        assert!(c.lr_means_at(100) > c.lr_means_at(200));
        assert_eq!(c.densify_until(), 4200);
    }

    #[test]
    fn rejects_bad_rates() {
        let mut c = TrainConfig::default();
        c.lr_sh = 0.0;
        assert!(c.validate().is_err());
        let mut c = TrainConfig::default();
        c.init_opacity = 1.0;
        assert!(c.validate().is_err());
    }
}
