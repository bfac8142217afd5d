//! Triangle meshes with a BVH, analytic spheres, and the shared
//! ray-casting interface used by the touch simulator and the renderer.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;
use rand::Rng;

use crate::error::{Error, Result};

/// Triangles with area below this are dropped at construction.
const MIN_TRIANGLE_AREA: f64 = 1e-14;
const LEAF_SIZE: usize = 4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hit {
    pub t: f64,
    /// Triangle index; 0 for analytic surfaces.
    pub primitive: u32,
    pub point: Vector3<f64>,
    /// Unit outward geometric normal.
    pub normal: Vector3<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aabb {
    pub min: Vector3<f64>,
    pub max: Vector3<f64>,
}

impl Aabb {
    pub fn empty() -> Self {
        Aabb {
            min: Vector3::repeat(f64::INFINITY),
            max: Vector3::repeat(f64::NEG_INFINITY),
        }
    }

    pub fn grow(&mut self, p: &Vector3<f64>) {
        self.min = self.min.inf(p);
        self.max = self.max.sup(p);
    }

    pub fn merge(&mut self, o: &Aabb) {
        self.min = self.min.inf(&o.min);
        self.max = self.max.sup(&o.max);
    }

    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).norm()
    }

    pub fn center(&self) -> Vector3<f64> {
        (self.min + self.max) * 0.5
    }

    /// Entry distance of the ray into the box, if it enters before `t_max`.
    fn ray_entry(&self, origin: &Vector3<f64>, inv_dir: &Vector3<f64>, t_max: f64) -> Option<f64> {
        let mut t0: f64 = 0.0;
        let mut t1 = t_max;
        for k in 0..3 {
            let a = (self.min[k] - origin[k]) * inv_dir[k];
            let b = (self.max[k] - origin[k]) * inv_dir[k];
            let (near, far) = if a <= b { (a, b) } else { (b, a) };
            // NaN (0·∞) leaves the bounds untouched
            if near > t0 {
                t0 = near;
            }
            if far < t1 {
                t1 = far;
            }
        }
        // Slack so boxes never reject a hit the exact triangle test accepts.
        let slack = 1e-9 * (1.0 + t1.abs());
        (t0 <= t1 + slack).then_some(t0)
    }
}

/// Anything a ray can be cast against and sampled on.
pub trait Surface: Sync {
    fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit>;
    fn bounds(&self) -> Aabb;
    /// Point drawn uniformly by area, with its outward normal.
    fn sample_surface(&self, rng: &mut dyn rand::RngCore) -> (Vector3<f64>, Vector3<f64>);
    fn surface_area(&self) -> f64;
    /// Euclidean distance from `p` to the surface.
    fn distance(&self, p: &Vector3<f64>) -> f64;
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sphere {
    pub center: Vector3<f64>,
    pub radius: f64,
}

impl Surface for Sphere {
    fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        let oc = origin - self.center;
        let a = dir.dot(dir);
        let half_b = oc.dot(dir);
        let c = oc.dot(&oc) - self.radius * self.radius;
        let disc = half_b * half_b - a * c;
        if disc < 0.0 {
            return None;
        }
        let sq = disc.sqrt();
        // Numerically stable roots.
        let q = if half_b > 0.0 { -(half_b + sq) } else { -half_b + sq };
        let (mut t0, mut t1) = (q / a, if q != 0.0 { c / q } else { 0.0 });
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        let t = if t0 > 0.0 {
            t0
        } else if t1 > 0.0 {
            t1
        } else {
            return None;
        };
        let point = origin + dir * t;
        Some(Hit {
            t,
            primitive: 0,
            point,
            normal: (point - self.center) / self.radius,
        })
    }

    fn bounds(&self) -> Aabb {
        Aabb {
            min: self.center - Vector3::repeat(self.radius),
            max: self.center + Vector3::repeat(self.radius),
        }
    }

    fn sample_surface(&self, rng: &mut dyn rand::RngCore) -> (Vector3<f64>, Vector3<f64>) {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let s = (1.0 - z * z).max(0.0).sqrt();
        let n = Vector3::new(s * phi.cos(), s * phi.sin(), z);
        (self.center + n * self.radius, n)
    }

    fn surface_area(&self) -> f64 {
        4.0 * std::f64::consts::PI * self.radius * self.radius
    }

    fn distance(&self, p: &Vector3<f64>) -> f64 {
        ((p - self.center).norm() - self.radius).abs()
    }
}

#[derive(Clone, Debug)]
enum BvhNode {
    Leaf { bounds: Aabb, start: usize, count: usize },
    Inner { bounds: Aabb, left: usize, right: usize },
}

impl BvhNode {
    fn bounds(&self) -> &Aabb {
        match self {
            BvhNode::Leaf { bounds, .. } | BvhNode::Inner { bounds, .. } => bounds,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TriangleMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[u32; 3]>,
    nodes: Vec<BvhNode>,
    /// Triangle ids in leaf order.
    order: Vec<u32>,
    /// Prefix sums of triangle areas, for area-uniform sampling.
    cdf: Vec<f64>,
}

/// Per-ray precomputation for the watertight triangle test.
struct ShearedRay {
    origin: Vector3<f64>,
    k: [usize; 3],
    s: [f64; 3],
}

impl ShearedRay {
    fn new(origin: &Vector3<f64>, dir: &Vector3<f64>) -> Self {
        let kz = dir.iamax();
        let mut kx = (kz + 1) % 3;
        let mut ky = (kx + 1) % 3;
        if dir[kz] < 0.0 {
            std::mem::swap(&mut kx, &mut ky);
        }
        ShearedRay {
            origin: *origin,
            k: [kx, ky, kz],
            s: [dir[kx] / dir[kz], dir[ky] / dir[kz], 1.0 / dir[kz]],
        }
    }

    /// Distance along the ray to the triangle, for hits at t > 0.
    fn hit(&self, a: &Vector3<f64>, b: &Vector3<f64>, c: &Vector3<f64>) -> Option<f64> {
        let [kx, ky, kz] = self.k;
        let [sx, sy, sz] = self.s;
        let a = a - self.origin;
        let b = b - self.origin;
        let c = c - self.origin;
        let ax = a[kx] - sx * a[kz];
        let ay = a[ky] - sy * a[kz];
        let bx = b[kx] - sx * b[kz];
        let by = b[ky] - sy * b[kz];
        let cx = c[kx] - sx * c[kz];
        let cy = c[ky] - sy * c[kz];
        let u = cx * by - cy * bx;
        let v = ax * cy - ay * cx;
        let w = bx * ay - by * ax;
        if (u < 0.0 || v < 0.0 || w < 0.0) && (u > 0.0 || v > 0.0 || w > 0.0) {
            return None;
        }
        let det = u + v + w;
        if det == 0.0 {
            return None;
        }
        let t_scaled = u * (sz * a[kz]) + v * (sz * b[kz]) + w * (sz * c[kz]);
        if (det > 0.0 && t_scaled <= 0.0) || (det < 0.0 && t_scaled >= 0.0) {
            return None;
        }
        Some(t_scaled / det)
    }
}

fn closer(t: f64, id: u32, best: &Option<(f64, u32)>) -> bool {
    match best {
        None => true,
        Some((bt, bid)) => t < *bt || (t == *bt && id < *bid),
    }
}

impl TriangleMesh {
    /// Builds the mesh, dropping zero-area triangles.
    pub fn new(vertices: Vec<Vector3<f64>>, triangles: Vec<[u32; 3]>) -> Result<Self> {
        if let Some(bad) = triangles.iter().flatten().find(|&&i| i as usize >= vertices.len()) {
            return Err(Error::MalformedObj(format!(
                "vertex index {bad} out of range ({} vertices)",
                vertices.len()
            )));
        }
        if vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::MalformedObj("non-finite vertex".into()));
        }
        let triangles: Vec<[u32; 3]> = triangles
            .into_iter()
            .filter(|t| {
                let [a, b, c] = t.map(|i| vertices[i as usize]);
                0.5 * (b - a).cross(&(c - a)).norm() > MIN_TRIANGLE_AREA
            })
            .collect();
        if triangles.is_empty() {
            return Err(Error::MeshEmpty);
        }
        let mut mesh = TriangleMesh {
            vertices,
            triangles,
            nodes: Vec::new(),
            order: Vec::new(),
            cdf: Vec::new(),
        };
        mesh.build_bvh();
        let mut acc = 0.0;
        mesh.cdf = (0..mesh.triangles.len())
            .map(|i| {
                acc += mesh.triangle_area(i);
                acc
            })
            .collect();
        Ok(mesh)
    }

    pub fn triangle_vertices(&self, i: usize) -> [Vector3<f64>; 3] {
        self.triangles[i].map(|v| self.vertices[v as usize])
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.triangle_vertices(i);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    /// Unit normal following counter-clockwise winding.
    pub fn triangle_normal(&self, i: usize) -> Vector3<f64> {
        let [a, b, c] = self.triangle_vertices(i);
        (b - a).cross(&(c - a)).normalize()
    }

    fn triangle_bounds(&self, i: usize) -> Aabb {
        let mut b = Aabb::empty();
        for v in self.triangle_vertices(i) {
            b.grow(&v);
        }
        b
    }

    fn build_bvh(&mut self) {
        let n = self.triangles.len();
        let centroids: Vec<Vector3<f64>> = (0..n)
            .map(|i| {
                let [a, b, c] = self.triangle_vertices(i);
                (a + b + c) / 3.0
            })
            .collect();
        let boxes: Vec<Aabb> = (0..n).map(|i| self.triangle_bounds(i)).collect();
        let mut order: Vec<u32> = (0..n as u32).collect();
        let mut nodes = Vec::new();
        build_node(&mut nodes, &mut order, 0, n, &centroids, &boxes);
        self.nodes = nodes;
        self.order = order;
    }

    pub fn bounding_box(&self) -> Aabb {
        *self.nodes[0].bounds()
    }

    /// Nearest hit with t > 0; ties go to the lowest triangle id.
    pub fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        let ray = ShearedRay::new(origin, dir);
        let inv = dir.map(|d| 1.0 / d);
        let mut best: Option<(f64, u32)> = None;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let limit = best.map_or(f64::INFINITY, |b| b.0);
            let node = &self.nodes[ni];
            if node.bounds().ray_entry(origin, &inv, limit).is_none() {
                continue;
            }
            match node {
                BvhNode::Leaf { start, count, .. } => {
                    for &tri in &self.order[*start..start + count] {
                        let [a, b, c] = self.triangle_vertices(tri as usize);
                        if let Some(t) = ray.hit(&a, &b, &c) {
                            if closer(t, tri, &best) {
                                best = Some((t, tri));
                            }
                        }
                    }
                }
                BvhNode::Inner { left, right, .. } => {
                    let tl = self.nodes[*left].bounds().ray_entry(origin, &inv, limit);
                    let tr = self.nodes[*right].bounds().ray_entry(origin, &inv, limit);
                    // Push the farther child first so the nearer is visited first.
                    match (tl, tr) {
                        (Some(a), Some(b)) if a <= b => {
                            stack.push(*right);
                            stack.push(*left);
                        }
                        (Some(_), Some(_)) => {
                            stack.push(*left);
                            stack.push(*right);
                        }
                        (Some(_), None) => stack.push(*left),
                        (None, Some(_)) => stack.push(*right),
                        (None, None) => {}
                    }
                }
            }
        }
        best.map(|(t, id)| self.make_hit(origin, dir, t, id))
    }

    /// Exhaustive scan over every triangle.
    pub fn intersect_brute_force(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        let ray = ShearedRay::new(origin, dir);
        let mut best: Option<(f64, u32)> = None;
        for id in 0..self.triangles.len() as u32 {
            let [a, b, c] = self.triangle_vertices(id as usize);
            if let Some(t) = ray.hit(&a, &b, &c) {
                if closer(t, id, &best) {
                    best = Some((t, id));
                }
            }
        }
        best.map(|(t, id)| self.make_hit(origin, dir, t, id))
    }

    fn make_hit(&self, origin: &Vector3<f64>, dir: &Vector3<f64>, t: f64, id: u32) -> Hit {
        Hit {
            t,
            primitive: id,
            point: origin + dir * t,
            normal: self.triangle_normal(id as usize),
        }
    }

    pub fn parse_obj(text: &str) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            let mut parts = line.split_whitespace();
            let err = |what: &str| Error::MalformedObj(format!("line {}: {what}", lineno + 1));
            match parts.next() {
                Some("v") => {
                    let c: Vec<f64> = parts
                        .take(3)
                        .map(|s| s.parse::<f64>().map_err(|_| err("bad vertex coordinate")))
                        .collect::<Result<_>>()?;
                    if c.len() != 3 {
                        return Err(err("vertex needs 3 coordinates"));
                    }
                    vertices.push(Vector3::new(c[0], c[1], c[2]));
                }
                Some("f") => {
                    let idx: Vec<u32> = parts
                        .map(|tok| {
                            let first = tok.split('/').next().unwrap_or("");
                            let i: i64 = first.parse().map_err(|_| err("bad face index"))?;
                            let resolved = if i < 0 { vertices.len() as i64 + i } else { i - 1 };
                            if resolved < 0 {
                                return Err(err("face index out of range"));
                            }
                            Ok(resolved as u32)
                        })
                        .collect::<Result<_>>()?;
                    if idx.len() != 3 {
                        return Err(err("only triangular faces are supported"));
                    }
                    triangles.push([idx[0], idx[1], idx[2]]);
                }
                _ => {}
            }
        }
        TriangleMesh::new(vertices, triangles)
    }

    pub fn load_obj(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => Error::MissingFile(path.to_path_buf()),
            _ => Error::Io(e),
        })?;
        Self::parse_obj(&text)
    }

    pub fn to_obj(&self) -> String {
        let mut s = String::new();
        for v in &self.vertices {
            let _ = writeln!(s, "v {:?} {:?} {:?}", v.x, v.y, v.z);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
        }
        s
    }

    pub fn save_obj(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_obj())?;
        Ok(())
    }

    /// Concatenates meshes into one.
    pub fn merge(parts: &[TriangleMesh]) -> Result<Self> {
        let mut vertices = Vec::new();
        let mut triangles = Vec::new();
        for m in parts {
            let base = vertices.len() as u32;
            vertices.extend_from_slice(&m.vertices);
            triangles.extend(m.triangles.iter().map(|t| t.map(|i| i + base)));
        }
        TriangleMesh::new(vertices, triangles)
    }

    /// Axis-aligned box with outward-facing triangles.
    pub fn cuboid(center: Vector3<f64>, half: Vector3<f64>) -> Result<Self> {
        let mut v = Vec::with_capacity(8);
        for i in 0..8 {
            let s = Vector3::new(
                if i & 1 == 0 { -1.0 } else { 1.0 },
                if i & 2 == 0 { -1.0 } else { 1.0 },
                if i & 4 == 0 { -1.0 } else { 1.0 },
            );
            v.push(center + half.component_mul(&s));
        }
        let quads = [
            [0, 2, 3, 1], // -z
            [4, 5, 7, 6], // +z
            [0, 1, 5, 4], // -y
            [2, 6, 7, 3], // +y
            [0, 4, 6, 2], // -x
            [1, 3, 7, 5], // +x
        ];
        let mut t = Vec::new();
        for q in quads {
            t.push([q[0], q[1], q[2]]);
            t.push([q[0], q[2], q[3]]);
        }
        TriangleMesh::new(v, t)
    }

    /// Latitude-longitude ellipsoid.
    pub fn ellipsoid(center: Vector3<f64>, radii: Vector3<f64>, stacks: usize, slices: usize) -> Result<Self> {
        let point = |theta: f64, phi: f64| {
            center
                + Vector3::new(
                    radii.x * theta.sin() * phi.cos(),
                    radii.y * theta.sin() * phi.sin(),
                    radii.z * theta.cos(),
                )
        };
        lattice(stacks, slices, true, |i, j| {
            let theta = std::f64::consts::PI * i as f64 / stacks as f64;
            let phi = std::f64::consts::TAU * j as f64 / slices as f64;
            point(theta, phi)
        })
    }

    /// Torus around the axis `axis` (unit), centered at `center`.
    pub fn torus(
        center: Vector3<f64>,
        axis: Vector3<f64>,
        major: f64,
        minor: f64,
        rings: usize,
        sides: usize,
    ) -> Result<Self> {
        let (e1, e2) = orthonormal_basis(&axis);
        lattice(rings, sides, false, |i, j| {
            let u = std::f64::consts::TAU * i as f64 / rings as f64;
            let v = std::f64::consts::TAU * j as f64 / sides as f64;
            let radial = e1 * u.cos() + e2 * u.sin();
            center + radial * (major + minor * v.cos()) + axis * (minor * v.sin())
        })
    }

    /// Closed truncated cone from `base` (radius `r0`) to `tip` (radius `r1`).
    pub fn frustum(base: Vector3<f64>, tip: Vector3<f64>, r0: f64, r1: f64, slices: usize) -> Result<Self> {
        let axis = (tip - base).normalize();
        let (e1, e2) = orthonormal_basis(&axis);
        let mut v = vec![base, tip];
        for j in 0..slices {
            let a = std::f64::consts::TAU * j as f64 / slices as f64;
            let d = e1 * a.cos() + e2 * a.sin();
            v.push(base + d * r0);
            v.push(tip + d * r1);
        }
        let mut t = Vec::new();
        for j in 0..slices as u32 {
            let k = (j + 1) % slices as u32;
            let (b0, t0, b1, t1) = (2 + 2 * j, 3 + 2 * j, 2 + 2 * k, 3 + 2 * k);
            t.push([b0, b1, t1]);
            t.push([b0, t1, t0]);
            t.push([0, b1, b0]);
            t.push([1, t0, t1]);
        }
        TriangleMesh::new(v, t)
    }

    /// Nearest-surface distance by exhaustive scan.
    pub fn distance_brute_force(&self, p: &Vector3<f64>) -> f64 {
        (0..self.triangles.len())
            .map(|i| {
                let [a, b, c] = self.triangle_vertices(i);
                (closest_point_on_triangle(p, &a, &b, &c) - p).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }
}

impl Surface for TriangleMesh {
    fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<Hit> {
        TriangleMesh::intersect(self, origin, dir)
    }

    fn bounds(&self) -> Aabb {
        self.bounding_box()
    }

    fn sample_surface(&self, rng: &mut dyn rand::RngCore) -> (Vector3<f64>, Vector3<f64>) {
        let total = *self.cdf.last().unwrap();
        let x = rng.random_range(0.0..total);
        let i = self.cdf.partition_point(|&c| c <= x).min(self.triangles.len() - 1);
        let [a, b, c] = self.triangle_vertices(i);
        let (mut u, mut v): (f64, f64) = (rng.random(), rng.random());
        if u + v > 1.0 {
            u = 1.0 - u;
            v = 1.0 - v;
        }
        (a + (b - a) * u + (c - a) * v, self.triangle_normal(i))
    }

    fn surface_area(&self) -> f64 {
        *self.cdf.last().unwrap()
    }

    fn distance(&self, p: &Vector3<f64>) -> f64 {
        // Traverse the BVH, pruning boxes farther than the best so far.
        let mut best = f64::INFINITY;
        let mut stack = vec![0usize];
        while let Some(ni) = stack.pop() {
            let node = &self.nodes[ni];
            let b = node.bounds();
            let q = p.sup(&b.min).inf(&b.max);
            if (q - p).norm() > best {
                continue;
            }
            match node {
                BvhNode::Leaf { start, count, .. } => {
                    for &tri in &self.order[*start..start + count] {
                        let [a, b, c] = self.triangle_vertices(tri as usize);
                        best = best.min((closest_point_on_triangle(p, &a, &b, &c) - p).norm());
                    }
                }
                BvhNode::Inner { left, right, .. } => {
                    stack.push(*left);
                    stack.push(*right);
                }
            }
        }
        best
    }
}

fn build_node(
    nodes: &mut Vec<BvhNode>,
    order: &mut [u32],
    start: usize,
    end: usize,
    centroids: &[Vector3<f64>],
    boxes: &[Aabb],
) -> usize {
    let mut bounds = Aabb::empty();
    let mut cbounds = Aabb::empty();
    for &t in &order[start..end] {
        bounds.merge(&boxes[t as usize]);
        cbounds.grow(&centroids[t as usize]);
    }
    let idx = nodes.len();
    let extent = cbounds.max - cbounds.min;
    if end - start <= LEAF_SIZE || extent.max() <= 0.0 {
        nodes.push(BvhNode::Leaf {
            bounds,
            start,
            count: end - start,
        });
        return idx;
    }
    let axis = extent.imax();
    let mid = (start + end) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |a, b| {
        centroids[*a as usize][axis]
            .total_cmp(&centroids[*b as usize][axis])
            .then(a.cmp(b))
    });
    nodes.push(BvhNode::Leaf {
        bounds,
        start: 0,
        count: 0,
    });
    let left = build_node(nodes, order, start, mid, centroids, boxes);
    let right = build_node(nodes, order, mid, end, centroids, boxes);
    nodes[idx] = BvhNode::Inner { bounds, left, right };
    idx
}

/// Grid of `(rows+1) × cols` points wrapped in the column direction.
/// With `poles`, the first and last rows collapse to single points.
fn lattice<F>(rows: usize, cols: usize, poles: bool, point: F) -> Result<TriangleMesh>
where
    F: Fn(usize, usize) -> Vector3<f64>,
{
    let n_rows = if poles { rows + 1 } else { rows };
    let mut v = Vec::with_capacity(n_rows * cols);
    for i in 0..n_rows {
        for j in 0..cols {
            v.push(point(i, j));
        }
    }
    let id = |i: usize, j: usize| ((i % n_rows) * cols + j % cols) as u32;
    let mut t = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            let (a, b, c, d) = (id(i, j), id(i, j + 1), id(i + 1, j), id(i + 1, j + 1));
            t.push([a, c, d]);
            t.push([a, d, b]);
        }
    }
    // Degenerate pole triangles are removed by the constructor.
    TriangleMesh::new(v, t)
}

pub fn orthonormal_basis(n: &Vector3<f64>) -> (Vector3<f64>, Vector3<f64>) {
    let helper = if n.x.abs() < 0.9 {
        Vector3::new(1.0, 0.0, 0.0)
    } else {
        Vector3::new(0.0, 1.0, 0.0)
    };
    let e1 = n.cross(&helper).normalize();
    let e2 = n.cross(&e1);
    (e1, e2)
}

/// Closest point on triangle abc to p (Ericson's region classification).
pub fn closest_point_on_triangle(
    p: &Vector3<f64>,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
    c: &Vector3<f64>,
) -> Vector3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return a + ab * (d1 / (d1 - d3));
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return a + ac * (d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
    }
    let denom = 1.0 / (va + vb + vc);
    a + ab * (vb * denom) + ac * (vc * denom)
}
