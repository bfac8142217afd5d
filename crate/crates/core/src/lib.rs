//! CPU differentiable 3D Gaussian splatting with tactile supervision.
//!
//! Vision Gaussians are seeded from a sparse point cloud, touch Gaussians
//! from simulated tactile patches. Training combines the photometric loss
//! with a 3D transmittance loss at touch points and an edge-aware depth
//! smoothness term that is masked out near projected touches.

pub mod camera;
pub mod error;
pub mod eval;
pub mod gaussians;
pub mod geometry;
pub mod gradcheck;
pub mod imaging;
pub mod loss;
pub mod mesh;
pub mod nearest;
pub mod projection;
pub mod raster;
pub mod scene_io;
pub mod sh;
pub mod synth;
pub mod touch;
pub mod train;

pub use camera::Camera;
pub use error::{Error, Result};
pub use gaussians::{GaussianSet, SetTag};
pub use raster::{rasterize, rasterize_backward, render_depth_only, GradientSet, RenderOptions, RenderOutput};
