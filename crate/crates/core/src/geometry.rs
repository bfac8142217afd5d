//! Quaternion rotations, covariance construction, and the unnormalized 3D
//! Gaussian influence function.
//!
//! Quaternions are stored scalar-first, `[w, x, y, z]`, and are never assumed
//! to be unit length: every consumer goes through [`normalize_quat`].

use nalgebra::{Matrix3, Vector3};

pub type Quat = [f64; 4];

const IDENTITY_QUAT: Quat = [1.0, 0.0, 0.0, 0.0];

pub fn normalize_quat(q: &Quat) -> Quat {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if n < 1e-300 || !n.is_finite() {
        return IDENTITY_QUAT;
    }
    [q[0] / n, q[1] / n, q[2] / n, q[3] / n]
}

/// Rotation matrix of a unit quaternion. The input is renormalized first.
pub fn quat_to_rotation(q: &Quat) -> Matrix3<f64> {
    let [w, x, y, z] = normalize_quat(q);
    Matrix3::new(
        1.0 - 2.0 * (y * y + z * z),
        2.0 * (x * y - w * z),
        2.0 * (x * z + w * y),
        2.0 * (x * y + w * z),
        1.0 - 2.0 * (x * x + z * z),
        2.0 * (y * z - w * x),
        2.0 * (x * z - w * y),
        2.0 * (y * z + w * x),
        1.0 - 2.0 * (x * x + y * y),
    )
}

/// Pulls a gradient on the rotation matrix back to the raw (unnormalized)
/// quaternion, including the normalization step.
pub fn rotation_grad_to_quat(q: &Quat, d_rot: &Matrix3<f64>) -> Quat {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if n < 1e-300 || !n.is_finite() {
        return [0.0; 4];
    }
    let [w, x, y, z] = [q[0] / n, q[1] / n, q[2] / n, q[3] / n];
    let g = d_rot;
    // dR/dw, dR/dx, dR/dy, dR/dz contracted with g.
    let gw = 2.0 * (-z * g[(0, 1)] + y * g[(0, 2)] + z * g[(1, 0)] - x * g[(1, 2)] - y * g[(2, 0)]
        + x * g[(2, 1)]);
    let gx = 2.0
        * (y * g[(0, 1)] + z * g[(0, 2)] + y * g[(1, 0)] - 2.0 * x * g[(1, 1)] - w * g[(1, 2)]
            + z * g[(2, 0)]
            + w * g[(2, 1)]
            - 2.0 * x * g[(2, 2)]);
    let gy = 2.0
        * (-2.0 * y * g[(0, 0)] + x * g[(0, 1)] + w * g[(0, 2)] + x * g[(1, 0)] + z * g[(1, 2)]
            - w * g[(2, 0)]
            + z * g[(2, 1)]
            - 2.0 * y * g[(2, 2)]);
    let gz = 2.0
        * (-2.0 * z * g[(0, 0)] - w * g[(0, 1)] + x * g[(0, 2)] + w * g[(1, 0)]
            - 2.0 * z * g[(1, 1)]
            + y * g[(1, 2)]
            + x * g[(2, 0)]
            + y * g[(2, 1)]);
    let gu = [gw, gx, gy, gz];
    let unit = [w, x, y, z];
    let dot: f64 = gu.iter().zip(unit.iter()).map(|(a, b)| a * b).sum();
    [
        (gu[0] - dot * unit[0]) / n,
        (gu[1] - dot * unit[1]) / n,
        (gu[2] - dot * unit[2]) / n,
        (gu[3] - dot * unit[3]) / n,
    ]
}

pub fn scale_matrix(log_scale: &[f64; 3]) -> Matrix3<f64> {
    Matrix3::from_diagonal(&Vector3::new(
        log_scale[0].exp(),
        log_scale[1].exp(),
        log_scale[2].exp(),
    ))
}

/// Σ = R S Sᵀ Rᵀ with S = diag(exp(log_scale)).
pub fn covariance_from_params(rotation: &Quat, log_scale: &[f64; 3]) -> Matrix3<f64> {
    let m = quat_to_rotation(rotation) * scale_matrix(log_scale);
    let cov = m * m.transpose();
    // Exact symmetry regardless of rounding in the product.
    (cov + cov.transpose()) * 0.5
}

/// Σ⁻¹ = R S⁻² Rᵀ, exact for any finite log-scale.
pub fn inverse_covariance_from_params(rotation: &Quat, log_scale: &[f64; 3]) -> Matrix3<f64> {
    let r = quat_to_rotation(rotation);
    let inv_s2 = Matrix3::from_diagonal(&Vector3::new(
        (-2.0 * log_scale[0]).exp(),
        (-2.0 * log_scale[1]).exp(),
        (-2.0 * log_scale[2]).exp(),
    ));
    r * inv_s2 * r.transpose()
}

/// Backpropagates a gradient on Σ (treated as a full 3×3 matrix) into the
/// raw quaternion and log-scales.
pub fn covariance_grad_to_params(
    rotation: &Quat,
    log_scale: &[f64; 3],
    d_cov: &Matrix3<f64>,
) -> (Quat, [f64; 3]) {
    let r = quat_to_rotation(rotation);
    let s = scale_matrix(log_scale);
    let m = r * s;
    let d_m = (d_cov + d_cov.transpose()) * m;
    // M = R S: dR = dM Sᵀ, dS_kk = Σ_i dM_ik R_ik.
    let d_r = d_m * s;
    let mut d_log = [0.0; 3];
    for k in 0..3 {
        let mut acc = 0.0;
        for i in 0..3 {
            acc += d_m[(i, k)] * r[(i, k)];
        }
        d_log[k] = acc * s[(k, k)];
    }
    (rotation_grad_to_quat(rotation, &d_r), d_log)
}

/// exp(−½ (x−μ)ᵀ Σ⁻¹ (x−μ)), without the normalizing determinant.
///
/// A singular Σ is regularized with 1e-9·I before inversion.
pub fn gaussian_influence_3d(x: &Vector3<f64>, mean: &Vector3<f64>, cov: &Matrix3<f64>) -> f64 {
    let inv = cov
        .try_inverse()
        .filter(|m| m.iter().all(|v| v.is_finite()))
        .unwrap_or_else(|| {
            (cov + Matrix3::identity() * 1e-9)
                .try_inverse()
                .unwrap_or_else(Matrix3::zeros)
        });
    let d = x - mean;
    (-0.5 * d.dot(&(inv * d))).exp()
}

/// Influence of a Gaussian given directly by its parameters, plus the pieces
/// needed for differentiation.
#[derive(Clone, Copy, Debug)]
pub struct ParamInfluence {
    pub value: f64,
    /// ∂f/∂μ
    pub d_mean: Vector3<f64>,
    /// ∂f/∂R (rotation matrix of the normalized quaternion)
    pub d_rotation: Matrix3<f64>,
    /// ∂f/∂log_scale
    pub d_log_scale: [f64; 3],
}

/// Evaluates f(x; μ, Σ(q, s)) and its partial derivatives using the
/// eigen-decomposed form q = Σ_k ((Rᵀd)_k / s_k)².
pub fn influence_with_grad(
    x: &Vector3<f64>,
    mean: &Vector3<f64>,
    rotation: &Quat,
    log_scale: &[f64; 3],
) -> ParamInfluence {
    let r = quat_to_rotation(rotation);
    let d = x - mean;
    let e = r.transpose() * d;
    let inv_s2 = [
        (-2.0 * log_scale[0]).exp(),
        (-2.0 * log_scale[1]).exp(),
        (-2.0 * log_scale[2]).exp(),
    ];
    let q: f64 = (0..3).map(|k| e[k] * e[k] * inv_s2[k]).sum();
    let f = (-0.5 * q).exp();
    // df = −½ f dq
    let w = Vector3::new(e[0] * inv_s2[0], e[1] * inv_s2[1], e[2] * inv_s2[2]);
    // dq/dd = 2 R w, dd/dμ = −I
    let d_mean = r * w * f;
    let mut d_rotation = Matrix3::zeros();
    for i in 0..3 {
        for k in 0..3 {
            d_rotation[(i, k)] = -f * d[i] * w[k];
        }
    }
    let d_log_scale = [
        f * e[0] * e[0] * inv_s2[0],
        f * e[1] * e[1] * inv_s2[1],
        f * e[2] * e[2] * inv_s2[2],
    ];
    ParamInfluence {
        value: f,
        d_mean,
        d_rotation,
        d_log_scale,
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn logit(p: f64) -> f64 {
    let p = p.clamp(1e-12, 1.0 - 1e-12);
    (p / (1.0 - p)).ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn textbook_rotation(q: &Quat) -> Matrix3<f64> {
        // Axis-angle route: R = cos θ I + sin θ [k]× + (1 − cos θ) k kᵀ.
        let [w, x, y, z] = normalize_quat(q);
        let s = (x * x + y * y + z * z).sqrt();
        if s < 1e-15 {
            return Matrix3::identity();
        }
        let theta = 2.0 * s.atan2(w);
        let k = Vector3::new(x, y, z) / s;
        let kx = Matrix3::new(0.0, -k.z, k.y, k.z, 0.0, -k.x, -k.y, k.x, 0.0);
        Matrix3::identity() * theta.cos() + kx * theta.sin() + k * k.transpose() * (1.0 - theta.cos())
    }

    fn random_quat(rng: &mut ChaCha8Rng) -> Quat {
        [
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        ]
    }

    #[test]
    fn identity_covariance() {
        let cov = covariance_from_params(&[1.0, 0.0, 0.0, 0.0], &[0.0; 3]);
        assert_eq!(cov, Matrix3::identity());
    }

    #[test]
    fn scale_is_squared() {
        let cov = covariance_from_params(&[1.0, 0.0, 0.0, 0.0], &[2f64.ln(), 0.0, 0.0]);
        assert_relative_eq!(cov, Matrix3::from_diagonal(&Vector3::new(4.0, 1.0, 1.0)), epsilon = 1e-14);
    }

    #[test]
    fn covariance_matches_explicit_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let q = random_quat(&mut rng);
            let ls: [f64; 3] = [rng.random_range(-2.0..1.0), rng.random_range(-2.0..1.0), rng.random_range(-2.0..1.0)];
            let r = textbook_rotation(&q);
            let s = Matrix3::from_diagonal(&Vector3::new(ls[0].exp(), ls[1].exp(), ls[2].exp()));
            let expected = r * s * s.transpose() * r.transpose();
            assert_relative_eq!(covariance_from_params(&q, &ls), expected, epsilon = 1e-12);
        }
    }

    #[test]
    fn influence_analytic_values() {
        let mu = Vector3::new(0.3, -0.2, 1.0);
        assert_eq!(gaussian_influence_3d(&mu, &mu, &Matrix3::identity()), 1.0);
        let x = mu + Vector3::new(1.0, 1.0, 0.0);
        assert_relative_eq!(
            gaussian_influence_3d(&x, &mu, &Matrix3::identity()),
            (-1.0f64).exp(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn influence_matches_linear_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let q = random_quat(&mut rng);
            let ls = [rng.random_range(-1.0..0.5), rng.random_range(-1.0..0.5), rng.random_range(-1.0..0.5)];
            let cov = covariance_from_params(&q, &ls);
            let mu = Vector3::new(rng.random(), rng.random(), rng.random());
            let x = mu + Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let sol = cov.lu().solve(&(x - mu)).unwrap();
            let expected = (-0.5 * (x - mu).dot(&sol)).exp();
            assert_relative_eq!(gaussian_influence_3d(&x, &mu, &cov), expected, max_relative = 1e-10);
            let p = influence_with_grad(&x, &mu, &q, &ls);
            assert_relative_eq!(p.value, expected, max_relative = 1e-10);
        }
    }

    #[test]
    fn singular_covariance_is_regularized() {
        let v = gaussian_influence_3d(&Vector3::new(0.0, 0.0, 1e-6), &Vector3::zeros(), &Matrix3::zeros());
        assert!(v.is_finite() && (0.0..=1.0).contains(&v));
    }

    #[test]
    fn influence_gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = 1e-6;
        for _ in 0..20 {
            let q = random_quat(&mut rng);
            let ls = [rng.random_range(-1.0..0.0), rng.random_range(-1.0..0.0), rng.random_range(-1.0..0.0)];
            let mu = Vector3::new(rng.random(), rng.random(), rng.random());
            let x = mu + Vector3::new(rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5));
            let g = influence_with_grad(&x, &mu, &q, &ls);
            for a in 0..3 {
                let mut mp = mu;
                mp[a] += h;
                let mut mm = mu;
                mm[a] -= h;
                let fd = (influence_with_grad(&x, &mp, &q, &ls).value
                    - influence_with_grad(&x, &mm, &q, &ls).value)
                    / (2.0 * h);
                assert_relative_eq!(g.d_mean[a], fd, epsilon = 1e-8, max_relative = 1e-5);
                let mut lp = ls;
                lp[a] += h;
                let mut lm = ls;
                lm[a] -= h;
                let fd = (influence_with_grad(&x, &mu, &q, &lp).value
                    - influence_with_grad(&x, &mu, &q, &lm).value)
                    / (2.0 * h);
                assert_relative_eq!(g.d_log_scale[a], fd, epsilon = 1e-8, max_relative = 1e-5);
            }
            let dq = rotation_grad_to_quat(&q, &g.d_rotation);
            for a in 0..4 {
                let mut qp = q;
                qp[a] += h;
                let mut qm = q;
                qm[a] -= h;
                let fd = (influence_with_grad(&x, &mu, &qp, &ls).value
                    - influence_with_grad(&x, &mu, &qm, &ls).value)
                    / (2.0 * h);
                assert_relative_eq!(dq[a], fd, epsilon = 1e-8, max_relative = 1e-5);
            }
        }
    }

    #[test]
    fn covariance_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let h = 1e-6;
        let weights = Matrix3::from_fn(|_, _| rng.random_range(-1.0..1.0));
        let q = random_quat(&mut rng);
        let ls = [-0.3, 0.2, -0.7];
        let loss = |q: &Quat, ls: &[f64; 3]| covariance_from_params(q, ls).component_mul(&weights).sum();
        let (dq, dls) = covariance_grad_to_params(&q, &ls, &weights);
        for a in 0..4 {
            let mut qp = q;
            qp[a] += h;
            let mut qm = q;
            qm[a] -= h;
            let fd = (loss(&qp, &ls) - loss(&qm, &ls)) / (2.0 * h);
            assert_relative_eq!(dq[a], fd, epsilon = 1e-8, max_relative = 1e-6);
        }
        for a in 0..3 {
            let mut lp = ls;
            lp[a] += h;
            let mut lm = ls;
            lm[a] -= h;
            let fd = (loss(&q, &lp) - loss(&q, &lm)) / (2.0 * h);
            assert_relative_eq!(dls[a], fd, epsilon = 1e-8, max_relative = 1e-6);
        }
    }

    proptest! {
        #[test]
        fn quaternion_sign_flip_is_exact(
            w in -1.0f64..1.0, x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0,
            s0 in -3.0f64..2.0, s1 in -3.0f64..2.0, s2 in -3.0f64..2.0,
        ) {
            let q = [w, x, y, z];
            let nq = [-w, -x, -y, -z];
            let ls = [s0, s1, s2];
            prop_assert_eq!(covariance_from_params(&q, &ls), covariance_from_params(&nq, &ls));
        }

        #[test]
        fn covariance_is_symmetric_psd(
            w in -1.0f64..1.0, x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0,
            s0 in -4.0f64..2.0, s1 in -4.0f64..2.0, s2 in -4.0f64..2.0,
        ) {
            let q = [w, x, y, z];
            let n = normalize_quat(&q);
            let norm = n.iter().map(|v| v * v).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() < 1e-9);
            let cov = covariance_from_params(&q, &[s0, s1, s2]);
            prop_assert_eq!(cov, cov.transpose());
            let eig = cov.symmetric_eigenvalues();
            prop_assert!(eig.iter().all(|&e| e >= -1e-12));
        }

        #[test]
        fn influence_is_rigid_invariant(
            w in -1.0f64..1.0, x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0,
            tx in -2.0f64..2.0, ty in -2.0f64..2.0, tz in -2.0f64..2.0,
            px in -1.0f64..1.0, py in -1.0f64..1.0, pz in -1.0f64..1.0,
        ) {
            let cov = covariance_from_params(&[0.3, 0.1, -0.4, 0.8], &[-0.2, 0.1, -0.5]);
            let mu = Vector3::new(0.1, 0.2, 0.3);
            let p = Vector3::new(px, py, pz);
            let r = quat_to_rotation(&[w, x, y, z]);
            let t = Vector3::new(tx, ty, tz);
            let before = gaussian_influence_3d(&p, &mu, &cov);
            let after = gaussian_influence_3d(&(r * p + t), &(r * mu + t), &(r * cov * r.transpose()));
            prop_assert!((before - after).abs() < 1e-10);
        }
    }
}
