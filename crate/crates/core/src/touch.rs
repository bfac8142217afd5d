//! Simulated tactile readings: grasps of several fingers, each producing a
//! local surface point cloud by orthographic ray casting.

use nalgebra::{Matrix3, Matrix4, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::loss::TouchPointSet;
use crate::mesh::{orthonormal_basis, Surface};

pub const DEFAULT_POINTS_PER_PATCH: usize = 256;
/// Finger contacts are spread over a ball of this many patch radii.
pub const FINGER_SPREAD: f64 = 4.0;
const PLACEMENT_ATTEMPTS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct TouchPatch {
    pub grasp_id: usize,
    pub finger_id: usize,
    /// Sensor-to-world; origin at the contact, z along the inward normal.
    pub sensor_pose: Matrix4<f64>,
    pub patch_radius: f64,
    pub points: Vec<[f64; 3]>,
}

impl TouchPatch {
    pub fn contact(&self) -> Vector3<f64> {
        self.sensor_pose.fixed_view::<3, 1>(0, 3).into()
    }

    pub fn inward_normal(&self) -> Vector3<f64> {
        self.sensor_pose.fixed_view::<3, 1>(0, 2).into()
    }
}

/// 2% of the bounding-box diagonal.
pub fn default_patch_radius(surface: &dyn Surface) -> f64 {
    0.02 * surface.bounds().diagonal()
}

/// Union of all patch points, remembering which patch each came from.
pub fn touch_points(patches: &[TouchPatch]) -> TouchPointSet {
    let mut set = TouchPointSet::default();
    for (i, p) in patches.iter().enumerate() {
        set.push_patch(i, &p.points);
    }
    set
}

fn derive_seed(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix-style mixing so neighbouring ids give unrelated streams
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Contacts for one grasp: an area-uniform center plus fingers scattered in
/// a tangent disk and snapped back onto the surface along the normal.
fn place_fingers(
    surface: &dyn Surface,
    fingers: usize,
    patch_radius: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<(Vector3<f64>, Vector3<f64>)> {
    let spread = FINGER_SPREAD * patch_radius;
    // Centers buried inside another part of the object cannot be touched.
    let mut sampled = surface.sample_surface(rng);
    for _ in 0..PLACEMENT_ATTEMPTS {
        let (c, n) = sampled;
        let visible = surface
            .intersect(&(c + n * (2.0 * spread).max(1e-6)), &-n)
            .is_some_and(|h| (h.point - c).norm() < 1e-9);
        if visible {
            break;
        }
        sampled = surface.sample_surface(rng);
    }
    let (center, n) = sampled;
    let (e1, e2) = orthonormal_basis(&n);
    (0..fingers)
        .map(|_| {
            for _ in 0..PLACEMENT_ATTEMPTS {
                let r = spread * rng.random::<f64>().sqrt();
                let a = rng.random_range(0.0..std::f64::consts::TAU);
                let q = center + e1 * (r * a.cos()) + e2 * (r * a.sin());
                let origin = q + n * (2.0 * spread).max(1e-6);
                if let Some(hit) = surface.intersect(&origin, &-n) {
                    if (hit.point - center).norm() <= spread {
                        return (hit.point, hit.normal);
                    }
                }
            }
            (center, n)
        })
        .collect()
}

pub fn sample_grasps(
    surface: &dyn Surface,
    n_grasps: usize,
    fingers_per_grasp: usize,
    patch_radius: f64,
    points_per_patch: usize,
    seed: u64,
) -> Result<Vec<TouchPatch>> {
    if n_grasps == 0 {
        return Ok(Vec::new());
    }
    if fingers_per_grasp == 0 || points_per_patch == 0 {
        return Err(Error::Validation("fingers and points per patch must be >= 1".into()));
    }
    if !(patch_radius >= 0.0 && patch_radius.is_finite()) {
        return Err(Error::Validation(format!("bad patch radius {patch_radius}")));
    }
    if surface.surface_area() <= 0.0 {
        return Err(Error::MeshEmpty);
    }
    let contacts: Vec<(usize, usize, Vector3<f64>, Vector3<f64>)> = (0..n_grasps)
        .flat_map(|g| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, g as u64, u64::MAX));
            place_fingers(surface, fingers_per_grasp, patch_radius, &mut rng)
                .into_iter()
                .enumerate()
                .map(move |(f, (p, n))| (g, f, p, n))
        })
        .collect();
    contacts
        .par_iter()
        .map(|&(g, f, p, n)| {
            let mut patch = sample_patch(
                surface,
                &p,
                &-n,
                patch_radius,
                points_per_patch,
                derive_seed(seed, g as u64, f as u64),
            )?;
            patch.grasp_id = g;
            patch.finger_id = f;
            Ok(patch)
        })
        .collect()
}

/// Casts a √M × √M orthographic grid of side 2r along `inward_normal` from
/// a standoff of 2r and keeps hits within r of the contact.
pub fn sample_patch(
    surface: &dyn Surface,
    contact: &Vector3<f64>,
    inward_normal: &Vector3<f64>,
    patch_radius: f64,
    points_per_patch: usize,
    seed: u64,
) -> Result<TouchPatch> {
    let z = inward_normal.normalize();
    let (b1, b2) = orthonormal_basis(&z);
    // Random roll of the sensor about its axis.
    let roll = ChaCha8Rng::seed_from_u64(seed).random_range(0.0..std::f64::consts::TAU);
    let x = b1 * roll.cos() + b2 * roll.sin();
    let y = z.cross(&x);
    let n = ((points_per_patch as f64).sqrt().round() as usize).max(1);
    let single = n == 1 || patch_radius <= 0.0;
    let standoff = (2.0 * patch_radius).max(1e-6);
    let offsets: Vec<(f64, f64)> = if single {
        vec![(0.0, 0.0)]
    } else {
        (0..n * n)
            .map(|k| {
                let (i, j) = (k % n, k / n);
                let u = ((i as f64 + 0.5) / n as f64 - 0.5) * 2.0 * patch_radius;
                let v = ((j as f64 + 0.5) / n as f64 - 0.5) * 2.0 * patch_radius;
                (u, v)
            })
            .collect()
    };
    let keep_radius = patch_radius * (1.0 + 1e-12) + 1e-12;
    let points: Vec<[f64; 3]> = offsets
        .iter()
        .filter_map(|&(u, v)| {
            let origin = contact + x * u + y * v - z * standoff;
            let hit = surface.intersect(&origin, &z)?;
            ((hit.point - contact).norm() <= keep_radius).then(|| [hit.point.x, hit.point.y, hit.point.z])
        })
        .collect();
    if points.is_empty() {
        return Err(Error::NoContact);
    }
    let rot = Matrix3::from_columns(&[x, y, z]);
    let mut pose = Matrix4::identity();
    pose.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
    pose.fixed_view_mut::<3, 1>(0, 3).copy_from(contact);
    Ok(TouchPatch {
        grasp_id: 0,
        finger_id: 0,
        sensor_pose: pose,
        patch_radius,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{Sphere, TriangleMesh};

    fn unit_sphere() -> Sphere {
        Sphere {
            center: Vector3::zeros(),
            radius: 1.0,
        }
    }

    #[test]
    fn five_by_five_grasps() {
        let s = unit_sphere();
        let patches = sample_grasps(&s, 5, 5, 0.05, 64, 1).unwrap();
        assert_eq!(patches.len(), 25);
        for (k, p) in patches.iter().enumerate() {
            assert_eq!((p.grasp_id, p.finger_id), (k / 5, k % 5));
        }
    }

    #[test]
    fn single_grasp_single_finger() {
        let patches = sample_grasps(&unit_sphere(), 1, 1, 0.05, 64, 3).unwrap();
        assert_eq!(patches.len(), 1);
        assert_eq!((patches[0].grasp_id, patches[0].finger_id), (0, 0));
    }

    #[test]
    fn seeded_runs_repeat() {
        let m = TriangleMesh::cuboid(Vector3::zeros(), Vector3::repeat(0.7)).unwrap();
        let a = sample_grasps(&m, 3, 4, 0.05, 49, 9).unwrap();
        let b = sample_grasps(&m, 3, 4, 0.05, 49, 9).unwrap();
        assert_eq!(a, b);
        let c = sample_grasps(&m, 3, 4, 0.05, 49, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn north_pole_patch_follows_sphere_height_field() {
        let s = unit_sphere();
        let pole = Vector3::new(0.0, 0.0, 1.0);
        let r = 0.1;
        let p = sample_patch(&s, &pole, &Vector3::new(0.0, 0.0, -1.0), r, 256, 0).unwrap();
        assert!(p.points.len() > 150);
        for q in &p.points {
            let q = Vector3::from(*q);
            assert!((q - pole).norm() <= r + 1e-12);
            let expect = (1.0 - q.x * q.x - q.y * q.y).sqrt();
            assert!((q.z - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn flat_patch_is_coplanar() {
        let m = TriangleMesh::cuboid(Vector3::zeros(), Vector3::new(1.0, 1.0, 0.2)).unwrap();
        let c = Vector3::new(0.1, -0.2, 0.2);
        let p = sample_patch(&m, &c, &Vector3::new(0.0, 0.0, -1.0), 0.15, 100, 4).unwrap();
        assert!(p.points.iter().all(|q| (q[2] - 0.2).abs() < 1e-9));
    }

    #[test]
    fn zero_radius_gives_contact_point() {
        let s = unit_sphere();
        let c = Vector3::new(0.6, 0.0, 0.8);
        let p = sample_patch(&s, &c, &-c, 0.0, 256, 0).unwrap();
        assert_eq!(p.points.len(), 1);
        assert!((Vector3::from(p.points[0]) - c).norm() < 1e-9);
    }

    #[test]
    fn no_contact_in_empty_space() {
        let s = unit_sphere();
        let far = Vector3::new(5.0, 0.0, 0.0);
        assert!(matches!(
            sample_patch(&s, &far, &Vector3::new(0.0, 1.0, 0.0), 0.1, 16, 0),
            Err(Error::NoContact)
        ));
    }

    #[test]
    fn patch_points_lie_on_mesh() {
        let m = TriangleMesh::merge(&[
            TriangleMesh::ellipsoid(Vector3::zeros(), Vector3::new(1.0, 0.8, 0.7), 16, 24).unwrap(),
            TriangleMesh::torus(Vector3::new(1.0, 0.0, 0.0), Vector3::new(0.0, 1.0, 0.0), 0.35, 0.08, 16, 8).unwrap(),
        ])
        .unwrap();
        let patches = sample_grasps(&m, 4, 5, 0.04, 64, 5).unwrap();
        for p in &patches {
            assert!(!p.points.is_empty());
            let c = p.contact();
            for q in &p.points {
                let q = Vector3::from(*q);
                assert!(m.distance(&q) < 1e-6);
                assert!((q - c).norm() <= p.patch_radius + 1e-9);
            }
            let r = p.sensor_pose.fixed_view::<3, 3>(0, 0).into_owned();
            crate::camera::check_rotation(&r, 1e-9).unwrap();
        }
    }
}
