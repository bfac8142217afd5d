//! Ray-traced Phong fixtures: a stand-in for glossy benchmark objects at
//! toy scale, with exact depth for evaluation.

use nalgebra::{Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::camera::Camera;
use crate::error::{Error, Result};
use crate::imaging::Image;
use crate::mesh::{Aabb, Hit, Sphere, Surface, TriangleMesh};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    Sphere,
    Cube,
    TeapotLike,
}

impl std::str::FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "sphere" => Ok(Preset::Sphere),
            "cube" => Ok(Preset::Cube),
            "teapot-like" | "teapot" => Ok(Preset::TeapotLike),
            _ => Err(format!("unknown preset `{s}` (sphere|cube|teapot-like)")),
        }
    }
}

impl std::fmt::Display for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Preset::Sphere => "sphere",
            Preset::Cube => "cube",
            Preset::TeapotLike => "teapot-like",
        })
    }
}

/// Ground-truth geometry of a fixture.
#[derive(Clone, Debug)]
pub enum SceneObject {
    Sphere(Sphere),
    Mesh(TriangleMesh),
}

impl SceneObject {
    pub fn preset(p: Preset) -> Result<Self> {
        Ok(match p {
            Preset::Sphere => SceneObject::Sphere(Sphere {
                center: Vector3::zeros(),
                radius: 1.0,
            }),
            Preset::Cube => {
                let m = TriangleMesh::cuboid(Vector3::zeros(), Vector3::repeat(0.75))?;
                let rot = Rotation3::from_axis_angle(&Vector3::z_axis(), 25f64.to_radians());
                let v = m.vertices.iter().map(|p| rot * p).collect();
                SceneObject::Mesh(TriangleMesh::new(v, m.triangles)?)
            }
            Preset::TeapotLike => SceneObject::Mesh(teapot_like()?),
        })
    }

    /// Tessellated stand-in for analytic shapes, for the on-disk mesh.
    pub fn to_mesh(&self) -> Result<TriangleMesh> {
        match self {
            SceneObject::Sphere(s) => TriangleMesh::ellipsoid(s.center, Vector3::repeat(s.radius), 32, 48),
            SceneObject::Mesh(m) => Ok(m.clone()),
        }
    }

    pub fn surface(&self) -> &dyn Surface {
        match self {
            SceneObject::Sphere(s) => s,
            SceneObject::Mesh(m) => m,
        }
    }
}

/// Body, lid, handle and spout built from primitives.
fn teapot_like() -> Result<TriangleMesh> {
    let y = Vector3::new(0.0, 1.0, 0.0);
    TriangleMesh::merge(&[
        TriangleMesh::ellipsoid(Vector3::zeros(), Vector3::new(0.9, 0.9, 0.7), 24, 36)?,
        TriangleMesh::ellipsoid(Vector3::new(0.0, 0.0, 0.68), Vector3::new(0.35, 0.35, 0.14), 8, 16)?,
        TriangleMesh::ellipsoid(Vector3::new(0.0, 0.0, 0.86), Vector3::repeat(0.08), 6, 10)?,
        TriangleMesh::torus(Vector3::new(-0.95, 0.0, 0.05), y, 0.3, 0.07, 24, 10)?,
        TriangleMesh::frustum(Vector3::new(0.7, 0.0, 0.0), Vector3::new(1.35, 0.0, 0.5), 0.17, 0.06, 16)?,
    ])
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Material {
    pub diffuse: [f64; 3],
    pub kd: f64,
    pub ks: f64,
    pub shininess: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointLight {
    pub position: [f64; 3],
    pub intensity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CameraRig {
    pub count: usize,
    pub radius: f64,
    pub elevation: f64,
    pub width: usize,
    pub height: usize,
    pub fov_y: f64,
    /// Added to every azimuth, radians.
    pub azimuth_offset: f64,
}

impl CameraRig {
    pub fn cameras(&self, target: Vector3<f64>) -> Result<Vec<Camera>> {
        orbit_cameras(
            self.count,
            self.radius,
            self.elevation,
            target,
            self.width,
            self.height,
            self.fov_y,
            self.azimuth_offset,
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub preset: Preset,
    pub material: Material,
    pub lights: Vec<PointLight>,
    pub background: [f64; 3],
    pub train_rig: CameraRig,
    pub test_rig: CameraRig,
    /// Simulated structure-from-motion points per training view.
    pub sparse_points_per_view: usize,
    /// Standard deviation of the position noise on those points.
    pub sparse_noise: f64,
    pub seed: u64,
}

impl SceneSpec {
    pub fn new(preset: Preset, views: usize, test_views: usize, ks: f64, size: usize) -> Self {
        let rig = CameraRig {
            count: views,
            radius: 4.0,
            elevation: 25f64.to_radians(),
            width: size,
            height: size,
            fov_y: 40f64.to_radians(),
            azimuth_offset: 0.0,
        };
        SceneSpec {
            preset,
            material: Material {
                diffuse: [0.75, 0.35, 0.2],
                kd: 1.0,
                ks,
                shininess: 40.0,
            },
            lights: vec![
                PointLight { position: [3.0, 2.0, 4.0], intensity: 0.75 },
                PointLight { position: [-3.0, -2.5, 3.0], intensity: 0.5 },
                PointLight { position: [0.5, -3.5, -2.0], intensity: 0.35 },
            ],
            background: [0.0; 3],
            train_rig: rig,
            test_rig: CameraRig {
                count: test_views,
                elevation: 10f64.to_radians(),
                azimuth_offset: 0.37,
                ..rig
            },
            sparse_points_per_view: 40,
            sparse_noise: 0.03,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = &self.material;
        if !(m.ks >= 0.0 && m.kd >= 0.0 && m.shininess >= 1.0) {
            return Err(Error::Validation("material needs ks, kd >= 0 and shininess >= 1".into()));
        }
        if self.train_rig.count == 0 {
            return Err(Error::Validation("at least one training view is required".into()));
        }
        Ok(())
    }
}

/// One rendered view with its exact depth (0 on background).
#[derive(Clone, Debug)]
pub struct View {
    pub camera: Camera,
    pub image: Image,
    pub depth: Vec<f64>,
}

impl View {
    /// 1 where the object was hit, 0 on background.
    pub fn alpha(&self) -> Vec<f64> {
        self.depth.iter().map(|&d| if d > 0.0 { 1.0 } else { 0.0 }).collect()
    }
}

/// Cameras evenly spaced in azimuth on a circle, looking at `target`, z up.
#[allow(clippy::too_many_arguments)]
pub fn orbit_cameras(
    count: usize,
    radius: f64,
    elevation: f64,
    target: Vector3<f64>,
    width: usize,
    height: usize,
    fov_y: f64,
    azimuth_offset: f64,
) -> Result<Vec<Camera>> {
    (0..count)
        .map(|i| {
            let az = azimuth_offset + std::f64::consts::TAU * i as f64 / count as f64;
            let eye = target
                + Vector3::new(
                    elevation.cos() * az.cos(),
                    elevation.cos() * az.sin(),
                    elevation.sin(),
                ) * radius;
            Camera::look_at(eye, target, Vector3::z(), fov_y, width, height)
        })
        .collect()
}

fn shade(hit: &Hit, eye: &Vector3<f64>, spec: &SceneSpec) -> [f64; 3] {
    let v = (eye - hit.point).normalize();
    let mut n = hit.normal;
    if n.dot(&v) < 0.0 {
        n = -n;
    }
    let m = &spec.material;
    let mut out = [0.0; 3];
    for light in &spec.lights {
        let l = (Vector3::from(light.position) - hit.point).normalize();
        let ndl = n.dot(&l).max(0.0);
        let r = n * (2.0 * n.dot(&l)) - l;
        let s = if ndl > 0.0 { m.ks * r.dot(&v).max(0.0).powf(m.shininess) } else { 0.0 };
        for c in 0..3 {
            out[c] += light.intensity * (m.kd * ndl * m.diffuse[c] + s);
        }
    }
    out.map(|c| c.clamp(0.0, 1.0))
}

pub fn render_view(object: &SceneObject, camera: &Camera, spec: &SceneSpec) -> View {
    let surface = object.surface();
    let eye = camera.center();
    let (w, h) = (camera.width, camera.height);
    let rows: Vec<(Vec<[f64; 3]>, Vec<f64>)> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut colors = Vec::with_capacity(w);
            let mut depths = Vec::with_capacity(w);
            for x in 0..w {
                let dir = camera.ray_direction(x as f64 + 0.5, y as f64 + 0.5);
                match surface.intersect(&eye, &dir) {
                    Some(hit) => {
                        colors.push(shade(&hit, &eye, spec));
                        depths.push(camera.world_to_cam(&hit.point).z);
                    }
                    None => {
                        colors.push(spec.background);
                        depths.push(0.0);
                    }
                }
            }
            (colors, depths)
        })
        .collect();
    let mut rgb = Vec::with_capacity(w * h);
    let mut depth = Vec::with_capacity(w * h);
    for (c, d) in rows {
        rgb.extend(c);
        depth.extend(d);
    }
    View {
        camera: camera.clone(),
        image: Image::from_rgb(w, h, &rgb),
        depth,
    }
}

pub fn render_ground_truth(object: &SceneObject, cameras: &[Camera], spec: &SceneSpec) -> Vec<View> {
    cameras.iter().map(|c| render_view(object, c, spec)).collect()
}

/// Back-projects every pixel with positive depth, keeping every
/// `stride`-th point of the concatenation.
pub fn ground_truth_pointcloud(depths: &[&[f64]], cameras: &[Camera], stride: usize) -> Vec<[f64; 3]> {
    assert_eq!(depths.len(), cameras.len());
    let stride = stride.max(1);
    let mut out = Vec::new();
    let mut k = 0usize;
    for (depth, cam) in depths.iter().zip(cameras) {
        for (p, &d) in depth.iter().enumerate() {
            if d > 0.0 {
                if k % stride == 0 {
                    let u = (p % cam.width) as f64 + 0.5;
                    let v = (p / cam.width) as f64 + 0.5;
                    let q = cam.unproject(u, v, d);
                    out.push([q.x, q.y, q.z]);
                }
                k += 1;
            }
        }
    }
    out
}

/// Colored point cloud.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<[f64; 3]>,
    pub colors: Vec<[f64; 3]>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Stand-in for a structure-from-motion reconstruction: random foreground
/// pixels of the training views, back-projected with Gaussian position
/// noise and colored by the observed pixel.
pub fn sparse_points(views: &[View], per_view: usize, noise: f64, seed: u64) -> PointCloud {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, noise.max(0.0)).unwrap();
    let mut cloud = PointCloud::default();
    for view in views {
        let fg: Vec<usize> = (0..view.depth.len()).filter(|&p| view.depth[p] > 0.0).collect();
        if fg.is_empty() {
            continue;
        }
        for _ in 0..per_view {
            let p = fg[rng.random_range(0..fg.len())];
            let cam = &view.camera;
            let q = cam.unproject((p % cam.width) as f64 + 0.5, (p / cam.width) as f64 + 0.5, view.depth[p]);
            let jitter = Vector3::new(normal.sample(&mut rng), normal.sample(&mut rng), normal.sample(&mut rng));
            let q = q + jitter;
            cloud.points.push([q.x, q.y, q.z]);
            let c = &view.image.data[p * 3..p * 3 + 3];
            cloud.colors.push([c[0], c[1], c[2]]);
        }
    }
    cloud
}

/// Everything a fixture produces in memory.
#[derive(Clone, Debug)]
pub struct SyntheticScene {
    pub spec: SceneSpec,
    pub object: SceneObject,
    pub train: Vec<View>,
    pub test: Vec<View>,
    pub sparse: PointCloud,
}

impl SyntheticScene {
    pub fn generate(spec: &SceneSpec) -> Result<Self> {
        spec.validate()?;
        let object = SceneObject::preset(spec.preset)?;
        let target = object.surface().bounds().center();
        let train = render_ground_truth(&object, &spec.train_rig.cameras(target)?, spec);
        let test = render_ground_truth(&object, &spec.test_rig.cameras(target)?, spec);
        let sparse = sparse_points(&train, spec.sparse_points_per_view, spec.sparse_noise, spec.seed);
        Ok(SyntheticScene {
            spec: spec.clone(),
            object,
            train,
            test,
            sparse,
        })
    }

    pub fn bounds(&self) -> Aabb {
        self.object.surface().bounds()
    }

    /// Ground-truth cloud from the test-view depth maps.
    pub fn gt_pointcloud(&self, stride: usize) -> Vec<[f64; 3]> {
        let depths: Vec<&[f64]> = self.test.iter().map(|v| v.depth.as_slice()).collect();
        let cams: Vec<Camera> = self.test.iter().map(|v| v.camera.clone()).collect();
        ground_truth_pointcloud(&depths, &cams, stride)
    }
}
