//! Persistence: dataset directories, Gaussian checkpoints, point clouds and
//! touch patches.
//!
//! A scene directory holds `transforms_train.json`, `transforms_test.json`,
//! `images/*.png`, `depth/*.png` (16-bit, divided by `depth_scale`),
//! `touches.json`, `gt_points.ply`, `sparse_points.ply`, `mesh.obj` and a
//! `scene.json` describing how it was generated.

pub mod ply;

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use image::{ImageBuffer, Luma, Rgb, Rgba};
use nalgebra::{Matrix4, Vector3};
use serde::{Deserialize, Serialize};

use crate::camera::{check_rotation, Camera};
use crate::error::{Error, Result};
use crate::gaussians::{GaussianSet, SetTag};
use crate::imaging::Image;
use crate::sh;
use crate::synth::{PointCloud, Preset, SyntheticScene, View};
use crate::touch::TouchPatch;
use ply::{ScalarType, VertexTable};

pub const DEFAULT_DEPTH_SCALE: f64 = 1000.0;

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            std::fs::create_dir_all(dir)?;
        }
    }
    Ok(BufWriter::new(File::create(path)?))
}

// ---------------------------------------------------------------- checkpoints

fn checkpoint_properties(degree: usize) -> Vec<(String, ScalarType)> {
    let mut p: Vec<(String, ScalarType)> = ["x", "y", "z"].iter().map(|n| (n.to_string(), ScalarType::F64)).collect();
    for c in 0..3 {
        p.push((format!("f_dc_{c}"), ScalarType::F64));
    }
    for k in 0..3 * (sh::num_coeffs(degree) - 1) {
        p.push((format!("f_rest_{k}"), ScalarType::F64));
    }
    p.push(("opacity".into(), ScalarType::F64));
    for k in 0..3 {
        p.push((format!("scale_{k}"), ScalarType::F64));
    }
    for k in 0..4 {
        p.push((format!("rot_{k}"), ScalarType::F64));
    }
    p.push(("set_tag".into(), ScalarType::U8));
    p
}

/// Binary little-endian PLY in the usual splat layout, plus a `set_tag`
/// byte. Higher SH bands are stored channel-major as `f_rest_*`.
pub fn save_checkpoint(g: &GaussianSet, path: &Path) -> Result<()> {
    let props = checkpoint_properties(g.sh_degree);
    let b = sh::num_coeffs(g.sh_degree);
    let mut data = Vec::with_capacity(g.len() * props.len());
    for i in 0..g.len() {
        data.extend_from_slice(&g.means[i]);
        let s = g.sh(i);
        data.extend_from_slice(&s[..3]);
        for c in 0..3 {
            for k in 1..b {
                data.push(s[k * 3 + c]);
            }
        }
        data.push(g.opacity_logits[i]);
        data.extend_from_slice(&g.log_scales[i]);
        data.extend_from_slice(&g.rotations[i]);
        data.push(g.tag(i).as_u8() as f64);
    }
    let table = VertexTable {
        properties: props,
        rows: g.len(),
        data,
    };
    let mut w = create(path)?;
    ply::write_binary(&mut w, &table)?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<GaussianSet> {
    let table = ply::read(BufReader::new(open(path)?))?;
    checkpoint_from_table(&table)
}

fn checkpoint_from_table(t: &VertexTable) -> Result<GaussianSet> {
    let n_rest = (0..)
        .take_while(|k| t.column(&format!("f_rest_{k}")).is_some())
        .count();
    let degree = (0..=sh::MAX_SH_DEGREE)
        .find(|&d| 3 * (sh::num_coeffs(d) - 1) == n_rest)
        .ok_or_else(|| Error::MalformedPly(format!("{n_rest} f_rest properties do not match any SH degree")))?;
    let b = sh::num_coeffs(degree);
    let col = |name: &str| t.require(name);
    let xyz = [col("x")?, col("y")?, col("z")?];
    let dc = [col("f_dc_0")?, col("f_dc_1")?, col("f_dc_2")?];
    let rest: Vec<usize> = (0..n_rest).map(|k| col(&format!("f_rest_{k}"))).collect::<Result<_>>()?;
    let op = col("opacity")?;
    let sc = [col("scale_0")?, col("scale_1")?, col("scale_2")?];
    let rot = [col("rot_0")?, col("rot_1")?, col("rot_2")?, col("rot_3")?];
    let tag_col = t.column("set_tag");
    if tag_col.is_none() {
        log::warn!("checkpoint has no set_tag property; treating every Gaussian as vision");
    }
    let n = t.rows;
    let mut means = Vec::with_capacity(n);
    let mut rotations = Vec::with_capacity(n);
    let mut log_scales = Vec::with_capacity(n);
    let mut opacity = Vec::with_capacity(n);
    let mut coeffs = Vec::with_capacity(n * 3 * b);
    let mut tags = Vec::with_capacity(n);
    for i in 0..n {
        means.push(xyz.map(|c| t.get(i, c)));
        let mut s = vec![0.0; 3 * b];
        for c in 0..3 {
            s[c] = t.get(i, dc[c]);
            for k in 1..b {
                s[k * 3 + c] = t.get(i, rest[c * (b - 1) + k - 1]);
            }
        }
        coeffs.extend(s);
        opacity.push(t.get(i, op));
        log_scales.push(sc.map(|c| t.get(i, c)));
        rotations.push(rot.map(|c| t.get(i, c)));
        tags.push(match tag_col {
            None => SetTag::Vision,
            Some(c) => {
                let v = t.get(i, c);
                SetTag::from_u8(v as u8)
                    .filter(|_| v.fract() == 0.0)
                    .ok_or_else(|| Error::MalformedPly(format!("vertex {i}: invalid set_tag {v}")))?
            }
        });
    }
    let g = GaussianSet::from_parts(means, rotations, log_scales, opacity, coeffs, degree, tags);
    if !g.all_finite() {
        return Err(Error::MalformedPly("non-finite Gaussian parameter".into()));
    }
    if g.rotations.iter().any(|q| q.iter().all(|&v| v == 0.0)) {
        return Err(Error::MalformedPly("zero quaternion".into()));
    }
    Ok(g)
}

// ---------------------------------------------------------------- point clouds

pub fn save_pointcloud(cloud: &PointCloud, path: &Path) -> Result<()> {
    let with_color = cloud.colors.len() == cloud.points.len() && !cloud.points.is_empty();
    let mut properties: Vec<(String, ScalarType)> =
        ["x", "y", "z"].iter().map(|n| (n.to_string(), ScalarType::F64)).collect();
    if with_color {
        for n in ["red", "green", "blue"] {
            properties.push((n.into(), ScalarType::U8));
        }
    }
    let mut data = Vec::new();
    for (i, p) in cloud.points.iter().enumerate() {
        data.extend_from_slice(p);
        if with_color {
            data.extend(cloud.colors[i].map(|c| (c.clamp(0.0, 1.0) * 255.0).round()));
        }
    }
    let mut w = create(path)?;
    ply::write_binary(
        &mut w,
        &VertexTable {
            properties,
            rows: cloud.points.len(),
            data,
        },
    )?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}

/// Colors default to mid-grey when the file has none.
pub fn load_pointcloud(path: &Path) -> Result<PointCloud> {
    let t = ply::read(BufReader::new(open(path)?))?;
    let xyz = [t.require("x")?, t.require("y")?, t.require("z")?];
    let rgb = match (t.column("red"), t.column("green"), t.column("blue")) {
        (Some(r), Some(g), Some(b)) => Some([r, g, b]),
        _ => None,
    };
    let scale = |c: usize| match t.properties[c].1 {
        ScalarType::F32 | ScalarType::F64 => 1.0,
        _ => 1.0 / 255.0,
    };
    let mut cloud = PointCloud::default();
    for i in 0..t.rows {
        cloud.points.push(xyz.map(|c| t.get(i, c)));
        cloud.colors.push(match rgb {
            Some(cols) => cols.map(|c| t.get(i, c) * scale(c)),
            None => [0.5; 3],
        });
    }
    Ok(cloud)
}

// ---------------------------------------------------------------- touches

#[derive(Serialize, Deserialize)]
struct TouchRecord {
    grasp_id: usize,
    finger_id: usize,
    sensor_pose: Vec<f64>,
    patch_radius: f64,
    points: Vec<f64>,
}

pub fn touches_to_json(patches: &[TouchPatch]) -> String {
    let records: Vec<TouchRecord> = patches
        .iter()
        .map(|p| TouchRecord {
            grasp_id: p.grasp_id,
            finger_id: p.finger_id,
            sensor_pose: (0..16).map(|k| p.sensor_pose[(k / 4, k % 4)]).collect(),
            patch_radius: p.patch_radius,
            points: p.points.iter().flatten().copied().collect(),
        })
        .collect();
    serde_json::to_string_pretty(&records).expect("touch records serialize")
}

pub fn touches_from_json(text: &str) -> Result<Vec<TouchPatch>> {
    let records: Vec<TouchRecord> = serde_json::from_str(text).map_err(|e| Error::MalformedJson(e.to_string()))?;
    records
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            if r.sensor_pose.len() != 16 {
                return Err(Error::MalformedJson(format!("patch {i}: sensor_pose needs 16 values")));
            }
            if r.points.len() % 3 != 0 {
                return Err(Error::MalformedJson(format!("patch {i}: points length not a multiple of 3")));
            }
            let pose = Matrix4::from_row_slice(&r.sensor_pose);
            check_rotation(&pose.fixed_view::<3, 3>(0, 0).into_owned(), 1e-6)
                .map_err(|e| Error::Validation(format!("patch {i}: {e}")))?;
            Ok(TouchPatch {
                grasp_id: r.grasp_id,
                finger_id: r.finger_id,
                sensor_pose: pose,
                patch_radius: r.patch_radius,
                points: r.points.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect(),
            })
        })
        .collect()
}

pub fn save_touches(patches: &[TouchPatch], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    std::io::Write::write_all(&mut w, touches_to_json(patches).as_bytes())?;
    std::io::Write::flush(&mut w)?;
    Ok(())
}

pub fn load_touches(path: &Path) -> Result<Vec<TouchPatch>> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
        _ => Error::Io(e),
    })?;
    touches_from_json(&text)
}

// ---------------------------------------------------------------- images

pub fn save_png(image: &Image, path: &Path) -> Result<()> {
    let to8 = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    match image.channels {
        3 => {
            let buf: ImageBuffer<Rgb<u8>, Vec<u8>> = ImageBuffer::from_raw(
                image.width as u32,
                image.height as u32,
                image.data.iter().map(|&v| to8(v)).collect(),
            )
            .expect("buffer size");
            buf.save(path)?;
        }
        1 => {
            let buf: ImageBuffer<Luma<u8>, Vec<u8>> = ImageBuffer::from_raw(
                image.width as u32,
                image.height as u32,
                image.data.iter().map(|&v| to8(v)).collect(),
            )
            .expect("buffer size");
            buf.save(path)?;
        }
        n => return Err(Error::Validation(format!("cannot save a {n}-channel image"))),
    }
    Ok(())
}

/// Writes straight RGB with the given coverage as the alpha channel.
pub fn save_rgba_png(image: &Image, alpha: &[f64], path: &Path) -> Result<()> {
    if image.channels != 3 || alpha.len() != image.width * image.height {
        return Err(Error::Validation("RGBA output needs RGB data and one alpha per pixel".into()));
    }
    let to8 = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
    let data = image
        .data
        .chunks_exact(3)
        .zip(alpha)
        .flat_map(|(px, &a)| [to8(px[0]), to8(px[1]), to8(px[2]), to8(a)])
        .collect();
    let buf: ImageBuffer<Rgba<u8>, Vec<u8>> =
        ImageBuffer::from_raw(image.width as u32, image.height as u32, data).expect("buffer size");
    buf.save(path)?;
    Ok(())
}

/// Decodes to RGB in [0,1] composited over black, plus the alpha channel
/// when the file has one.
pub fn load_png_with_alpha(path: &Path) -> Result<(Image, Option<Vec<f64>>)> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let img = image::open(path)?;
    if !img.color().has_alpha() {
        return Ok((load_png(path)?, None));
    }
    let img = img.to_rgba8();
    let (w, h) = img.dimensions();
    let mut rgb = Vec::with_capacity(3 * (w * h) as usize);
    let mut alpha = Vec::with_capacity((w * h) as usize);
    for px in img.pixels() {
        let a = px[3] as f64 / 255.0;
        rgb.extend(px.0[..3].iter().map(|&v| a * v as f64 / 255.0));
        alpha.push(a);
    }
    Ok((Image::from_data(w as usize, h as usize, 3, rgb), Some(alpha)))
}

/// Decodes to RGB in [0,1]; alpha, if present, is dropped.
pub fn load_png(path: &Path) -> Result<Image> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let img = image::open(path)?.to_rgb8();
    let (w, h) = img.dimensions();
    Ok(Image::from_data(
        w as usize,
        h as usize,
        3,
        img.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
    ))
}

pub fn save_depth_png(depth: &[f64], width: usize, height: usize, scale: f64, path: &Path) -> Result<()> {
    let buf: ImageBuffer<Luma<u16>, Vec<u16>> = ImageBuffer::from_raw(
        width as u32,
        height as u32,
        depth.iter().map(|&d| (d * scale).round().clamp(0.0, u16::MAX as f64) as u16).collect(),
    )
    .expect("buffer size");
    buf.save(path)?;
    Ok(())
}

pub fn load_depth_png(path: &Path, scale: f64) -> Result<(Vec<f64>, usize, usize)> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let img = image::open(path)?.to_luma16();
    let (w, h) = img.dimensions();
    Ok((
        img.into_raw().into_iter().map(|v| v as f64 / scale).collect(),
        w as usize,
        h as usize,
    ))
}

// ---------------------------------------------------------------- datasets

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FrameRecord {
    pub file_path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub depth_path: Option<String>,
    /// Camera-to-world, row-major, −z forward and +y up.
    pub transform_matrix: [[f64; 4]; 4],
}

/// `transforms_*.json`. `camera_angle_x` is the horizontal field of view;
/// the optional explicit intrinsics take precedence when present.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub camera_angle_x: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fl_x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fl_y: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cx: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cy: Option<f64>,
    #[serde(default = "default_depth_scale")]
    pub depth_scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<Split>,
    pub frames: Vec<FrameRecord>,
}

fn default_depth_scale() -> f64 {
    DEFAULT_DEPTH_SCALE
}

/// Flips y and z between the OpenGL-style file convention and the
/// x-right, y-down, z-forward camera frame used internally.
fn flip_yz() -> Matrix4<f64> {
    Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, -1.0, -1.0, 1.0))
}

pub fn camera_to_transform(camera: &Camera) -> [[f64; 4]; 4] {
    let c2w = camera.world_to_camera.try_inverse().expect("rigid transform") * flip_yz();
    let mut out = [[0.0; 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (c, v) in row.iter_mut().enumerate() {
            *v = c2w[(r, c)];
        }
    }
    out
}

pub fn transform_to_world_to_camera(m: &[[f64; 4]; 4]) -> Result<Matrix4<f64>> {
    let c2w = Matrix4::from_fn(|r, c| m[r][c]) * flip_yz();
    check_rotation(&c2w.fixed_view::<3, 3>(0, 0).into_owned(), 1e-6)?;
    let r = c2w.fixed_view::<3, 3>(0, 0).into_owned();
    let t: Vector3<f64> = c2w.fixed_view::<3, 1>(0, 3).into();
    let mut w2c = Matrix4::identity();
    w2c.fixed_view_mut::<3, 3>(0, 0).copy_from(&r.transpose());
    w2c.fixed_view_mut::<3, 1>(0, 3).copy_from(&(-(r.transpose() * t)));
    Ok(w2c)
}

#[derive(Clone, Debug)]
pub struct Frame {
    pub camera: Camera,
    /// Composited over black when `alpha` is present.
    pub image: Image,
    pub alpha: Option<Vec<f64>>,
    pub depth: Option<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub root: PathBuf,
    pub train: Vec<Frame>,
    pub test: Vec<Frame>,
}

impl Dataset {
    pub fn train_cameras(&self) -> Vec<Camera> {
        self.train.iter().map(|f| f.camera.clone()).collect()
    }

    pub fn test_cameras(&self) -> Vec<Camera> {
        self.test.iter().map(|f| f.camera.clone()).collect()
    }
}

pub fn load_split(root: &Path, split: Split) -> Result<Vec<Frame>> {
    let path = root.join(format!("transforms_{}.json", split.name()));
    let text = std::fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingFile(path.clone()),
        _ => Error::Io(e),
    })?;
    let malformed = |detail: String| Error::MalformedManifest {
        path: path.clone(),
        detail,
    };
    let manifest: DatasetManifest = serde_json::from_str(&text).map_err(|e| malformed(e.to_string()))?;
    if !(manifest.depth_scale > 0.0) {
        return Err(malformed("depth_scale must be positive".into()));
    }
    let mut frames = Vec::with_capacity(manifest.frames.len());
    for (i, f) in manifest.frames.iter().enumerate() {
        let (image, alpha) = load_png_with_alpha(&root.join(&f.file_path))?;
        let w2c = transform_to_world_to_camera(&f.transform_matrix)
            .map_err(|e| malformed(format!("frames[{i}].transform_matrix: {e}")))?;
        let (w, h) = (image.width, image.height);
        let fx = manifest
            .fl_x
            .unwrap_or(0.5 * w as f64 / (0.5 * manifest.camera_angle_x).tan());
        let fy = manifest.fl_y.unwrap_or(fx);
        let camera = Camera::new(
            fx,
            fy,
            manifest.cx.unwrap_or(w as f64 / 2.0),
            manifest.cy.unwrap_or(h as f64 / 2.0),
            w2c,
            w,
            h,
        )
        .map_err(|e| malformed(format!("frames[{i}]: {e}")))?;
        let depth = match &f.depth_path {
            Some(p) => {
                let (d, dw, dh) = load_depth_png(&root.join(p), manifest.depth_scale)?;
                if (dw, dh) != (w, h) {
                    return Err(malformed(format!("frames[{i}]: depth size {dw}x{dh} != image {w}x{h}")));
                }
                Some(d)
            }
            None => None,
        };
        frames.push(Frame {
            camera,
            image,
            alpha,
            depth,
        });
    }
    Ok(frames)
}

pub fn load_dataset(root: &Path) -> Result<Dataset> {
    let train = load_split(root, Split::Train)?;
    let test_path = root.join("transforms_test.json");
    let test = if test_path.exists() {
        load_split(root, Split::Test)?
    } else {
        Vec::new()
    };
    Ok(Dataset {
        root: root.to_path_buf(),
        train,
        test,
    })
}

fn write_split(root: &Path, split: Split, views: &[View], depth_scale: f64) -> Result<()> {
    std::fs::create_dir_all(root.join("images"))?;
    std::fs::create_dir_all(root.join("depth"))?;
    let mut frames = Vec::with_capacity(views.len());
    for (i, v) in views.iter().enumerate() {
        let file_path = format!("images/{}_{i:03}.png", split.name());
        let depth_path = format!("depth/{}_{i:03}.png", split.name());
        save_rgba_png(&v.image, &v.alpha(), &root.join(&file_path))?;
        save_depth_png(&v.depth, v.camera.width, v.camera.height, depth_scale, &root.join(&depth_path))?;
        frames.push(FrameRecord {
            file_path,
            depth_path: Some(depth_path),
            transform_matrix: camera_to_transform(&v.camera),
        });
    }
    let cam = views.first().map(|v| &v.camera);
    let manifest = DatasetManifest {
        camera_angle_x: cam.map_or(0.0, |c| 2.0 * (0.5 * c.width as f64 / c.fx).atan()),
        fl_x: cam.map(|c| c.fx),
        fl_y: cam.map(|c| c.fy),
        cx: cam.map(|c| c.cx),
        cy: cam.map(|c| c.cy),
        depth_scale,
        split: Some(split),
        frames,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    std::fs::write(root.join(format!("transforms_{}.json", split.name())), text)?;
    Ok(())
}

/// Generation parameters recorded next to the data.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SceneInfo {
    pub preset: String,
    pub views: usize,
    pub test_views: usize,
    pub image_size: usize,
    pub glossy_ks: f64,
    pub seed: u64,
    pub bounds_min: [f64; 3],
    pub bounds_max: [f64; 3],
}

impl SceneInfo {
    pub fn preset(&self) -> Option<Preset> {
        self.preset.parse().ok()
    }
}

pub fn load_scene_info(root: &Path) -> Result<SceneInfo> {
    let path = root.join("scene.json");
    let text = std::fs::read_to_string(&path).map_err(|_| Error::MissingFile(path.clone()))?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedManifest {
        path,
        detail: e.to_string(),
    })
}

/// Writes the full directory layout for a generated scene.
pub fn save_synthetic_scene(scene: &SyntheticScene, root: &Path, gt_stride: usize) -> Result<()> {
    std::fs::create_dir_all(root)?;
    write_split(root, Split::Train, &scene.train, DEFAULT_DEPTH_SCALE)?;
    write_split(root, Split::Test, &scene.test, DEFAULT_DEPTH_SCALE)?;
    save_pointcloud(
        &PointCloud {
            points: scene.gt_pointcloud(gt_stride),
            colors: Vec::new(),
        },
        &root.join("gt_points.ply"),
    )?;
    save_pointcloud(&scene.sparse, &root.join("sparse_points.ply"))?;
    scene.object.to_mesh()?.save_obj(&root.join("mesh.obj"))?;
    let b = scene.bounds();
    let spec = &scene.spec;
    let info = SceneInfo {
        preset: spec.preset.to_string(),
        views: spec.train_rig.count,
        test_views: spec.test_rig.count,
        image_size: spec.train_rig.width,
        glossy_ks: spec.material.ks,
        seed: spec.seed,
        bounds_min: [b.min.x, b.min.y, b.min.z],
        bounds_max: [b.max.x, b.max.y, b.max.z],
    };
    std::fs::write(root.join("scene.json"), serde_json::to_string_pretty(&info).expect("info serializes"))?;
    Ok(())
}
