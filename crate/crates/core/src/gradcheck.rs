//! Flat parameter views and central finite differences, for checking the
//! analytic backward passes.

use crate::gaussians::GaussianSet;
use crate::raster::{GradientSet, RenderOutput};

/// Parameter groups in flat order.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ParamGroup {
    Mean,
    Rotation,
    LogScale,
    Opacity,
    Sh,
}

/// Identifies one scalar parameter: group, Gaussian index, component.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId {
    pub group: ParamGroup,
    pub gaussian: usize,
    pub component: usize,
}

pub fn all_params(g: &GaussianSet) -> Vec<ParamId> {
    let mut out = Vec::new();
    for i in 0..g.len() {
        let mut push = |group, n| {
            for component in 0..n {
                out.push(ParamId { group, gaussian: i, component });
            }
        };
        push(ParamGroup::Mean, 3);
        push(ParamGroup::Rotation, 4);
        push(ParamGroup::LogScale, 3);
        push(ParamGroup::Opacity, 1);
        push(ParamGroup::Sh, g.sh_stride());
    }
    out
}

pub fn param_mut(g: &mut GaussianSet, id: ParamId) -> &mut f64 {
    match id.group {
        ParamGroup::Mean => &mut g.means[id.gaussian][id.component],
        ParamGroup::Rotation => &mut g.rotations[id.gaussian][id.component],
        ParamGroup::LogScale => &mut g.log_scales[id.gaussian][id.component],
        ParamGroup::Opacity => &mut g.opacity_logits[id.gaussian],
        ParamGroup::Sh => &mut g.sh_mut(id.gaussian)[id.component],
    }
}

pub fn grad_of(grads: &GradientSet, sh_stride: usize, id: ParamId) -> f64 {
    match id.group {
        ParamGroup::Mean => grads.means[id.gaussian][id.component],
        ParamGroup::Rotation => grads.rotations[id.gaussian][id.component],
        ParamGroup::LogScale => grads.log_scales[id.gaussian][id.component],
        ParamGroup::Opacity => grads.opacity_logits[id.gaussian],
        ParamGroup::Sh => grads.sh_coeffs[id.gaussian * sh_stride + id.component],
    }
}

/// Central difference of `f` with respect to one parameter.
pub fn central_difference<F>(g: &GaussianSet, id: ParamId, step: f64, mut f: F) -> f64
where
    F: FnMut(&GaussianSet) -> f64,
{
    let mut probe = g.clone();
    let base = *param_mut(&mut probe, id);
    *param_mut(&mut probe, id) = base + step;
    let up = f(&probe);
    *param_mut(&mut probe, id) = base - step;
    let down = f(&probe);
    (up - down) / (2.0 * step)
}

/// Relative error with an absolute floor on the denominator.
pub fn relative_error(analytic: f64, numeric: f64, abs_floor: f64) -> f64 {
    let diff = (analytic - numeric).abs();
    if diff <= abs_floor {
        return 0.0;
    }
    diff / analytic.abs().max(numeric.abs()).max(abs_floor)
}

/// Signature of the discrete structure of a render: which Gaussians
/// contribute to which pixel, and whether their alpha was clamped. Finite
/// differences are only meaningful when this does not change.
pub fn contrib_signature(r: &RenderOutput) -> Vec<(u32, bool)> {
    let mut sig = Vec::with_capacity(r.contribs.len() + r.width * r.height);
    for p in 0..r.width * r.height {
        sig.extend(r.pixel_contribs(p).iter().map(|c| (c.gaussian, c.clamped)));
        sig.push((u32::MAX, false));
    }
    sig
}

/// Whether any SH color channel sits at its zero clamp.
pub fn color_clamp_signature(r: &RenderOutput) -> Vec<[bool; 3]> {
    r.splats.iter().map(|s| s.map(|s| s.color_clamped).unwrap_or([false; 3])).collect()
}
