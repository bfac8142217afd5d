//! Brute-force compositor: every pixel walks every visible Gaussian in
//! global depth order, with no tiling. Slow; exists to check the tiled path.

use super::{depth_order, prepare_splats, RenderOptions, MIN_TRANSMITTANCE};
use crate::camera::Camera;
use crate::gaussians::GaussianSet;

pub struct BruteForceImage {
    pub color: Vec<[f64; 3]>,
    pub depth: Vec<f64>,
    pub acc_alpha: Vec<f64>,
}

pub fn rasterize_brute_force(gaussians: &GaussianSet, camera: &Camera, options: &RenderOptions) -> BruteForceImage {
    let splats = prepare_splats(gaussians, camera, options.sh_degree);
    let order = depth_order(&splats);
    let n = camera.num_pixels();
    let mut out = BruteForceImage {
        color: vec![[0.0; 3]; n],
        depth: vec![0.0; n],
        acc_alpha: vec![0.0; n],
    };
    for y in 0..camera.height {
        for x in 0..camera.width {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let mut t = 1.0;
            let mut c = [0.0; 3];
            let mut d = 0.0;
            for &gi in &order {
                let s = splats[gi as usize].as_ref().unwrap();
                let Some((_, a)) = s.alpha_at(px, py) else { continue };
                for k in 0..3 {
                    c[k] += s.color[k] * a * t;
                }
                d += s.depth * a * t;
                t *= 1.0 - a;
                if t < MIN_TRANSMITTANCE {
                    break;
                }
            }
            let p = y * camera.width + x;
            for k in 0..3 {
                out.color[p][k] = c[k] + t * options.background[k];
            }
            out.depth[p] = d;
            out.acc_alpha[p] = 1.0 - t;
        }
    }
    out
}
