use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{info, warn};

use tacsplat::eval::{
    ablation_csv, evaluate, touch_ablation, AblationScene, ChamferVariant, EvalOptions, EvalSet, Metric, TouchSim,
};
use tacsplat::mesh::{Surface, TriangleMesh};
use tacsplat::scene_io::{self, Dataset};
use tacsplat::synth::{Preset, SceneObject, SceneSpec, SyntheticScene};
use tacsplat::touch::{default_patch_radius, sample_grasps, touch_points, TouchPatch, DEFAULT_POINTS_PER_PATCH};
use tacsplat::train::{initialize_scene, logs_to_csv, train, Mode, TrainConfig, TrainView};
use tacsplat::imaging::Image;
use tacsplat::Error;

#[derive(Parser)]
#[command(name = "tacsplat", version, about = "Gaussian splatting with simulated touch")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic dataset directory.
    MakeScene {
        #[arg(long, default_value = "sphere")]
        preset: Preset,
        #[arg(long, default_value_t = 5)]
        views: usize,
        #[arg(long, default_value_t = 24)]
        test_views: usize,
        /// Specular coefficient of the material.
        #[arg(long, default_value_t = 0.6)]
        glossy: f64,
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Keep every n-th ground-truth point.
        #[arg(long, default_value_t = 1)]
        gt_stride: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate grasps on the scene object and write touches.json.
    TouchSim {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value_t = 5)]
        grasps: usize,
        #[arg(long, default_value_t = 5)]
        fingers: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Patch radius; defaults to 2% of the bounding-box diagonal.
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_POINTS_PER_PATCH)]
        points: usize,
        /// Output file (default: <scene>/touches.json).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train a model and write the checkpoint and loss log.
    Train {
        #[arg(long)]
        scene: PathBuf,
        /// Flat `key = value` config file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        out: PathBuf,
        /// Touch file (default: <scene>/touches.json when present).
        #[arg(long)]
        touches: Option<PathBuf>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Extra config overrides, `key=value`.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Evaluate a checkpoint on the test split.
    Eval {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long, default_value = "cd,psnr,ssim", value_delimiter = ',')]
        metrics: Vec<Metric>,
        #[arg(long, default_value = "squared")]
        variant: ChamferVariant,
        /// Write the JSON report here as well as to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write the `metric,object,value` CSV here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Render test views of a checkpoint to PNG.
    Render {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Chamfer distance as a function of the number of touches.
    AblateTouches {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long, default_value = "0,1,5,10,20", value_delimiter = ',')]
        counts: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        seeds: usize,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        #[arg(long, default_value_t = 5)]
        fingers: usize,
        #[arg(long)]
        radius: Option<f64>,
        #[arg(long, default_value_t = DEFAULT_POINTS_PER_PATCH)]
        points: usize,
        /// CSV output (default: stdout only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Failure classes mapped to process exit codes.
enum Failure {
    Usage(String),
    Io(String),
    Numeric(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Io(_) => 3,
            Failure::Numeric(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Io(m) | Failure::Numeric(m) => m,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let m = e.to_string();
        match e {
            Error::NonFiniteLoss(_) => Failure::Numeric(m),
            Error::Config(_) | Error::Validation(_) => Failure::Usage(m),
            _ => Failure::Io(m),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    Failure::Io(format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    std::fs::write(path, contents).map_err(|e| io_err(path, e))
}

fn load_config(file: Option<&Path>, overrides: &[String]) -> Result<TrainConfig, Failure> {
    let mut cfg = TrainConfig::default();
    if let Some(f) = file {
        let text = std::fs::read_to_string(f).map_err(|e| io_err(f, e))?;
        cfg.apply_text(&text)?;
    }
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("override `{o}` is not KEY=VALUE")))?;
        cfg.set(k, v)?;
    }
    Ok(cfg)
}

/// The analytic preset object when the scene records one, else the mesh.
fn scene_surface(scene: &Path) -> Result<Box<dyn Surface>, Failure> {
    if let Ok(info) = scene_io::load_scene_info(scene) {
        if let Some(p) = info.preset() {
            return Ok(match SceneObject::preset(p)? {
                SceneObject::Sphere(s) => Box::new(s),
                SceneObject::Mesh(m) => Box::new(m),
            });
        }
    }
    Ok(Box::new(TriangleMesh::load_obj(&scene.join("mesh.obj"))?))
}

fn train_views(ds: &Dataset) -> Vec<TrainView> {
    ds.train
        .iter()
        .map(|f| TrainView {
            camera: f.camera.clone(),
            image: f.image.clone(),
            alpha: f.alpha.clone(),
        })
        .collect()
}

fn test_images(ds: &Dataset) -> Vec<Image> {
    ds.test.iter().map(|f| f.image.clone()).collect()
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::MakeScene {
            preset,
            views,
            test_views,
            glossy,
            size,
            seed,
            gt_stride,
            out,
        } => {
            let mut spec = SceneSpec::new(preset, views, test_views, glossy, size);
            spec.seed = seed;
            let scene = SyntheticScene::generate(&spec)?;
            scene_io::save_synthetic_scene(&scene, &out, gt_stride)?;
            info!("wrote {} train / {} test views to {}", views, test_views, out.display());
        }
        Command::TouchSim {
            scene,
            grasps,
            fingers,
            seed,
            radius,
            points,
            out,
        } => {
            let surface = scene_surface(&scene)?;
            let r = radius.unwrap_or_else(|| default_patch_radius(surface.as_ref()));
            if grasps == 0 {
                warn!("--grasps 0: writing an empty touch file");
            }
            let patches = sample_grasps(surface.as_ref(), grasps, fingers, r, points, seed)?;
            let out = out.unwrap_or_else(|| scene.join("touches.json"));
            scene_io::save_touches(&patches, &out)?;
            info!("wrote {} patches to {}", patches.len(), out.display());
        }
        Command::Train {
            scene,
            config,
            mode,
            out,
            touches,
            iterations,
            seed,
            overrides,
        } => {
            let mut cfg = load_config(config.as_deref(), &overrides)?;
            if let Some(m) = mode {
                cfg.mode = m;
            }
            if let Some(n) = iterations {
                cfg.iterations = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            cfg.validate()?;
            std::fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
            write(&out.join("config.txt"), &cfg.to_text())?;

            let ds = scene_io::load_dataset(&scene)?;
            let vision = scene_io::load_pointcloud(&scene.join("sparse_points.ply"))?;
            let patches: Vec<TouchPatch> = if cfg.mode.uses_touch() {
                let path = touches.unwrap_or_else(|| scene.join("touches.json"));
                if path.exists() {
                    scene_io::load_touches(&path)?
                } else {
                    warn!("mode {} without {}: training without touches", cfg.mode, path.display());
                    Vec::new()
                }
            } else {
                Vec::new()
            };
            let views = train_views(&ds);
            let initial = initialize_scene(&vision, &patches, &cfg)?;
            let touch = touch_points(&patches);
            info!(
                "training {} on {} views: {} Gaussians ({} touch points)",
                cfg.mode,
                views.len(),
                initial.len(),
                touch.len()
            );
            let ckpt_dir = out.join("checkpoints");
            let interval = cfg.checkpoint_interval;
            let (g, logs) = train(initial, &views, &touch, &cfg, |state, log| {
                if log.iteration % 100 == 0 {
                    info!(
                        "it {} total {:.5} photo {:.5} T {:.5} S {:.5} n {}",
                        log.iteration, log.total, log.l_photo, log.l_t, log.l_s, log.n_gaussians
                    );
                }
                if interval > 0 && state.iteration % interval == 0 && state.iteration < cfg.iterations {
                    std::fs::create_dir_all(&ckpt_dir)?;
                    scene_io::save_checkpoint(
                        &state.gaussians,
                        &ckpt_dir.join(format!("iter_{:06}.ply", state.iteration)),
                    )?;
                }
                Ok(())
            })?;
            scene_io::save_checkpoint(&g, &out.join("checkpoint.ply"))?;
            write(&out.join("loss.csv"), &logs_to_csv(&logs))?;
            info!("wrote {}", out.join("checkpoint.ply").display());
        }
        Command::Eval {
            scene,
            ckpt,
            metrics,
            variant,
            out,
            csv,
        } => {
            let g = scene_io::load_checkpoint(&ckpt)?;
            let ds = scene_io::load_dataset(&scene)?;
            let gt = if metrics.contains(&Metric::Chamfer) {
                scene_io::load_pointcloud(&scene.join("gt_points.ply"))?.points
            } else {
                Vec::new()
            };
            let cams = ds.test_cameras();
            let imgs = test_images(&ds);
            let object = scene_io::load_scene_info(&scene)
                .map(|i| i.preset)
                .unwrap_or_else(|_| scene.file_name().map_or("scene".into(), |n| n.to_string_lossy().into_owned()));
            let opts = EvalOptions {
                variant,
                ..EvalOptions::default()
            };
            let set = EvalSet {
                cameras: &cams,
                images: &imgs,
                gt_points: &gt,
            };
            let report = evaluate(&g, &set, &metrics, &object, &opts)?;
            let json = report.to_json();
            print!("{json}");
            if let Some(p) = out {
                write(&p, &json)?;
            }
            if let Some(p) = csv {
                write(&p, &report.to_csv())?;
            }
        }
        Command::Render { scene, ckpt, out } => {
            let g = scene_io::load_checkpoint(&ckpt)?;
            let ds = scene_io::load_dataset(&scene)?;
            std::fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
            for (i, cam) in ds.test_cameras().iter().enumerate() {
                let r = tacsplat::rasterize(&g, cam, &tacsplat::RenderOptions::default());
                let img = Image::from_rgb(r.width, r.height, &r.color);
                scene_io::save_png(&img, &out.join(format!("r_{i:03}.png")))?;
            }
        }
        Command::AblateTouches {
            scene,
            counts,
            seeds,
            config,
            overrides,
            fingers,
            radius,
            points,
            out,
        } => {
            let cfg = load_config(config.as_deref(), &overrides)?;
            cfg.validate()?;
            if seeds == 0 {
                return Err(Failure::Usage("--seeds must be >= 1".into()));
            }
            let ds = scene_io::load_dataset(&scene)?;
            let vision = scene_io::load_pointcloud(&scene.join("sparse_points.ply"))?;
            let gt = scene_io::load_pointcloud(&scene.join("gt_points.ply"))?.points;
            let surface = scene_surface(&scene)?;
            let views = train_views(&ds);
            let cams = ds.test_cameras();
            let imgs = test_images(&ds);
            let sim = TouchSim {
                fingers_per_grasp: fingers,
                patch_radius: radius.unwrap_or_else(|| default_patch_radius(surface.as_ref())),
                points_per_patch: points,
            };
            let ab = AblationScene {
                views: &views,
                vision: &vision,
                surface: surface.as_ref(),
                eval: EvalSet {
                    cameras: &cams,
                    images: &imgs,
                    gt_points: &gt,
                },
            };
            let rows = touch_ablation(&ab, &counts, seeds, &cfg, &sim, &EvalOptions::default())?;
            let text = ablation_csv(&rows);
            print!("{text}");
            if let Some(p) = out {
                write(&p, &text)?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be >= 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: thread pool: {e}");
            return ExitCode::from(2);
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
