use std::path::Path;
use std::process::{Command, Output};

fn tacsplat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tacsplat"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn tacsplat")
}

fn ok(args: &[&str]) -> Output {
    let out = tacsplat(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn make_scene(dir: &Path, views: usize) {
    ok(&[
        "make-scene",
        "--preset",
        "sphere",
        "--views",
        &views.to_string(),
        "--test-views",
        "2",
        "--size",
        "24",
        "--out",
        s(dir),
    ]);
}

fn count_frames(manifest: &Path) -> usize {
    std::fs::read_to_string(manifest).unwrap().matches("\"file_path\"").count()
}

#[test]
fn make_scene_writes_requested_views() {
    let dir = tempfile::tempdir().unwrap();
    make_scene(dir.path(), 5);
    assert_eq!(count_frames(&dir.path().join("transforms_train.json")), 5);
    assert_eq!(count_frames(&dir.path().join("transforms_test.json")), 2);
    for f in ["sparse_points.ply", "gt_points.ply", "mesh.obj", "scene.json"] {
        assert!(dir.path().join(f).exists(), "missing {f}");
    }
}

#[test]
fn missing_out_is_a_usage_error() {
    let out = tacsplat(&["make-scene", "--views", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    make_scene(dir.path(), 2);
    let out = tacsplat(&[
        "train",
        "--scene",
        s(dir.path()),
        "--out",
        s(&dir.path().join("run")),
        "--set",
        "no_such_key=1",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_scene_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = tacsplat(&[
        "train",
        "--scene",
        s(&dir.path().join("nope")),
        "--out",
        s(&dir.path().join("run")),
        "--iterations",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn touch_sim_counts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    make_scene(dir.path(), 2);
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for out in [&a, &b] {
        ok(&[
            "touch-sim", "--scene", s(dir.path()), "--grasps", "5", "--fingers", "5", "--points", "16", "--seed", "3",
            "--out", s(out),
        ]);
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text.matches("\"grasp_id\"").count(), 25);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn zero_grasps_give_an_empty_touch_file() {
    let dir = tempfile::tempdir().unwrap();
    make_scene(dir.path(), 2);
    let out = dir.path().join("t.json");
    ok(&["touch-sim", "--scene", s(dir.path()), "--grasps", "0", "--out", s(&out)]);
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.matches("\"grasp_id\"").count(), 0);
}

fn train(scene: &Path, out: &Path, mode: &str, threads: &str) {
    ok(&[
        "--threads",
        threads,
        "train",
        "--scene",
        s(scene),
        "--mode",
        mode,
        "--iterations",
        "30",
        "--out",
        s(out),
        "--set",
        "densify_from=5",
        "--set",
        "densify_interval=10",
        "--set",
        "checkpoint_interval=10",
    ]);
}

#[test]
fn every_mode_trains_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene");
    make_scene(&scene, 3);
    ok(&["touch-sim", "--scene", s(&scene), "--grasps", "1", "--points", "16"]);
    for mode in ["3dgs", "3dgs+s", "3dgs+t", "full"] {
        let run = dir.path().join(mode);
        train(&scene, &run, mode, "1");
        for f in ["checkpoint.ply", "loss.csv", "config.txt", "checkpoints/iter_000010.ply"] {
            assert!(run.join(f).exists(), "{mode}: missing {f}");
        }
        let csv = std::fs::read_to_string(run.join("loss.csv")).unwrap();
        assert_eq!(csv.lines().count(), 31);
        let config = std::fs::read_to_string(run.join("config.txt")).unwrap();
        assert!(config.contains(&format!("mode = {mode}")));
    }
    let ckpt = dir.path().join("full/checkpoint.ply");
    let eval = |out: &Path| {
        ok(&[
            "eval", "--scene", s(&scene), "--ckpt", s(&ckpt), "--metrics", "cd,psnr,ssim", "--out", s(out),
        ])
    };
    let a = eval(&dir.path().join("a.json"));
    let b = eval(&dir.path().join("b.json"));
    assert_eq!(a.stdout, b.stdout);
    let json = String::from_utf8(a.stdout).unwrap();
    for key in ["\"cd\"", "\"psnr\"", "\"ssim\""] {
        assert!(json.contains(key), "{json}");
    }
    let renders = dir.path().join("renders");
    ok(&["render", "--scene", s(&scene), "--ckpt", s(&ckpt), "--out", s(&renders)]);
    assert_eq!(std::fs::read_dir(&renders).unwrap().count(), 2);
}

#[test]
fn training_is_bit_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene");
    make_scene(&scene, 3);
    ok(&["touch-sim", "--scene", s(&scene), "--grasps", "1", "--points", "16"]);
    let one = dir.path().join("one");
    let four = dir.path().join("four");
    train(&scene, &one, "full", "1");
    train(&scene, &four, "full", "4");
    for f in ["checkpoint.ply", "loss.csv"] {
        assert_eq!(std::fs::read(one.join(f)).unwrap(), std::fs::read(four.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn ablation_writes_one_row_per_count() {
    let dir = tempfile::tempdir().unwrap();
    let scene = dir.path().join("scene");
    make_scene(&scene, 3);
    let csv = dir.path().join("ablation.csv");
    ok(&[
        "ablate-touches", "--scene", s(&scene), "--counts", "0,1,5,10", "--seeds", "2", "--points", "9",
        "--set", "iterations=5", "--out", s(&csv),
    ]);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "count,mean,std");
    assert_eq!(lines.len(), 5);
    for (line, count) in lines[1..].iter().zip(["0", "1", "5", "10"]) {
        assert!(line.starts_with(&format!("{count},")), "{line}");
    }
}
