//! Screen-space projection of 3D Gaussians (EWA splatting).

use nalgebra::{Matrix2, Matrix3, Vector2, Vector3};

use crate::camera::{Camera, NEAR_PLANE};

/// Low-pass dilation added to every projected covariance, in pixels².
pub const SCREEN_DILATION: f64 = 0.3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct BehindCamera;

#[derive(Clone, Copy, Debug)]
pub struct Projection {
    pub mean2d: Vector2<f64>,
    /// J W Σ Wᵀ Jᵀ
    pub cov2d_raw: Matrix2<f64>,
    /// `cov2d_raw + 0.3·I`
    pub cov2d: Matrix2<f64>,
    /// Camera-space z.
    pub depth: f64,
    pub cam_point: Vector3<f64>,
}

pub fn project_gaussian(
    mean: &Vector3<f64>,
    cov: &Matrix3<f64>,
    camera: &Camera,
) -> Result<Projection, BehindCamera> {
    let t = camera.world_to_cam(mean);
    if !(t.z > NEAR_PLANE) {
        return Err(BehindCamera);
    }
    let w = camera.rotation();
    let j = camera.projection_jacobian(&t);
    let cam_cov = w * cov * w.transpose();
    let raw = j * cam_cov * j.transpose();
    let raw = (raw + raw.transpose()) * 0.5;
    Ok(Projection {
        mean2d: camera.cam_to_pixel(&t),
        cov2d_raw: raw,
        cov2d: raw + Matrix2::identity() * SCREEN_DILATION,
        depth: t.z,
        cam_point: t,
    })
}

/// Largest eigenvalue of a symmetric 2×2 matrix.
pub fn max_eigenvalue_2x2(m: &Matrix2<f64>) -> f64 {
    let mid = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    mid + (mid * mid - det).max(0.0).sqrt()
}
