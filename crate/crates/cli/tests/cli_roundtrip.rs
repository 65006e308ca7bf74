//! End-to-end checks of the shadowscan binary: subcommand behavior, exit
//! codes, and file round-trips, driven over small synthetic scenes.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_shadowscan")
}

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(bin())
        .args(args)
        .current_dir(cwd)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawn shadowscan")
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

const SPEC: &str = "seed=42\nground_z=-1.73\nsensor_height=1.73\nscan.mode=dense_ground\n\
object.0.class=Car\nobject.0.center=12,0,-0.98\nobject.0.dims=4,2,1.5\nobject.0.yaw=0.2\n\
object.1.class=Pole\nobject.1.center=20,-3,-0.73\nobject.1.dims=0.4,0.4,2\n";

struct SynthScene {
    dir: tempfile::TempDir,
}

impl SynthScene {
    fn generate() -> Self {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("scene.spec"), SPEC).unwrap();
        let out = run(
            &["synth", "--spec", "scene.spec", "--out-dir", "data", "--id", "000000"],
            dir.path(),
        );
        assert_eq!(code(&out), 0, "synth failed: {}", String::from_utf8_lossy(&out.stderr));
        Self { dir }
    }

    fn path(&self, rel: &str) -> PathBuf {
        self.dir.path().join(rel)
    }

    fn detect_args<'a>(&self) -> Vec<String> {
        vec![
            "detect".into(),
            "--cloud".into(),
            "data/velodyne/000000.bin".into(),
            "--calib".into(),
            "data/calib/000000.txt".into(),
            "--labels".into(),
            "data/label_2/000000.txt".into(),
            "--set".into(),
            "roi.ground_mode=percentile".into(),
        ]
    }
}

#[test]
fn synth_writes_kitti_layout_and_oracle() {
    let scene = SynthScene::generate();
    for rel in [
        "data/velodyne/000000.bin",
        "data/label_2/000000.txt",
        "data/calib/000000.txt",
        "data/oracle/000000.txt",
    ] {
        assert!(scene.path(rel).exists(), "{rel} missing");
    }
    let oracle = std::fs::read_to_string(scene.path("data/oracle/000000.txt")).unwrap();
    assert!(oracle.lines().count() > 50);
    for line in oracle.lines().take(5) {
        let (ix, iy) = line.split_once(',').expect("ix,iy");
        ix.parse::<usize>().unwrap();
        iy.parse::<usize>().unwrap();
    }
}

#[test]
fn synth_is_byte_reproducible() {
    let a = SynthScene::generate();
    let b = SynthScene::generate();
    for rel in [
        "data/velodyne/000000.bin",
        "data/label_2/000000.txt",
        "data/calib/000000.txt",
        "data/oracle/000000.txt",
    ] {
        assert_eq!(
            std::fs::read(a.path(rel)).unwrap(),
            std::fs::read(b.path(rel)).unwrap(),
            "{rel} differs between identical synth runs"
        );
    }
}

#[test]
fn synth_empty_spec_gives_empty_labels_and_oracle() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("empty.spec"), "seed=1\n").unwrap();
    let out = run(
        &["synth", "--spec", "empty.spec", "--out-dir", "data"],
        dir.path(),
    );
    assert_eq!(code(&out), 0);
    let labels = std::fs::read_to_string(dir.path().join("data/label_2/000000.txt")).unwrap();
    assert!(labels.is_empty());
    let oracle = std::fs::read_to_string(dir.path().join("data/oracle/000000.txt")).unwrap();
    assert!(oracle.is_empty());
}

#[test]
fn synth_invalid_spec_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // object below ground
    std::fs::write(
        dir.path().join("bad.spec"),
        "object.0.center=10,0,-5\nobject.0.dims=4,2,1.5\n",
    )
    .unwrap();
    let out = run(&["synth", "--spec", "bad.spec", "--out-dir", "data"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn detect_writes_result_with_attribution_and_render() {
    let scene = SynthScene::generate();
    let mut args = scene.detect_args();
    args.extend(["--out".into(), "result.txt".into(), "--render".into(), "fig.svg".into()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = run(&args, scene.dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let result = std::fs::read_to_string(scene.path("result.txt")).unwrap();
    assert!(result.contains("schema: shadowscan.result.v1"));
    assert!(result.contains("attributed.0:"), "car not attributed:\n{result}");
    let svg = std::fs::read_to_string(scene.path("fig.svg")).unwrap();
    assert!(svg.contains("</svg>"));
}

#[test]
fn detect_hide_unknown_id_exits_one_without_output() {
    let scene = SynthScene::generate();
    let mut args = scene.detect_args();
    args.extend(["--hide".into(), "77".into(), "--out".into(), "nope.txt".into()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = run(&args, scene.dir.path());
    assert_eq!(code(&out), 1);
    assert!(!scene.path("nope.txt").exists());
}

#[test]
fn detect_missing_cloud_exits_two() {
    let scene = SynthScene::generate();
    let out = run(
        &[
            "detect",
            "--cloud",
            "data/velodyne/missing.bin",
            "--calib",
            "data/calib/000000.txt",
        ],
        scene.dir.path(),
    );
    assert_eq!(code(&out), 2);
}

#[test]
fn detect_corrupt_cloud_exits_one() {
    let scene = SynthScene::generate();
    std::fs::write(scene.path("bad.bin"), [0u8; 17]).unwrap();
    let out = run(
        &["detect", "--cloud", "bad.bin", "--calib", "data/calib/000000.txt"],
        scene.dir.path(),
    );
    assert_eq!(code(&out), 1);
}

#[test]
fn detect_bad_config_key_exits_one() {
    let scene = SynthScene::generate();
    let mut args = scene.detect_args();
    args.extend(["--set".into(), "roi.bogus=1".into()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let out = run(&args, scene.dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn render_from_result_file_without_cloud() {
    let scene = SynthScene::generate();
    let mut args = scene.detect_args();
    args.extend(["--out".into(), "result.txt".into()]);
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    assert_eq!(code(&run(&args, scene.dir.path())), 0);

    // re-render from the result alone, then with the gt layers
    let out = run(
        &["render", "--result", "result.txt", "--out", "bare.svg"],
        scene.dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(
        &[
            "render",
            "--result",
            "result.txt",
            "--out",
            "full.svg",
            "--cloud",
            "data/velodyne/000000.bin",
            "--calib",
            "data/calib/000000.txt",
            "--labels",
            "data/label_2/000000.txt",
        ],
        scene.dir.path(),
    );
    assert_eq!(code(&out), 0);
    let bare = std::fs::read_to_string(scene.path("bare.svg")).unwrap();
    let full = std::fs::read_to_string(scene.path("full.svg")).unwrap();
    assert!(full.len() > bare.len(), "gt/cloud layers should add elements");
}

#[test]
fn evaluate_small_dataset_and_policies() {
    let scene = SynthScene::generate();
    let out = run(
        &[
            "evaluate",
            "--dataset",
            "data",
            "--out-dir",
            "out_none",
            "--set",
            "roi.ground_mode=percentile",
        ],
        scene.dir.path(),
    );
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("tpr: 1.000000"), "summary:\n{stdout}");
    assert!(scene.path("out_none/summary.txt").exists());
    let csv = std::fs::read_to_string(scene.path("out_none/objects.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3, "header + 2 objects:\n{csv}");

    let out = run(
        &[
            "evaluate",
            "--dataset",
            "data",
            "--out-dir",
            "out_hidden",
            "--hidden-policy",
            "hide_all_in_roi",
            "--set",
            "roi.ground_mode=percentile",
        ],
        scene.dir.path(),
    );
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("tpr: 1.000000"), "hidden objects must still match:\n{stdout}");
    assert!(stdout.contains("mean_iou:"));
    let mean_edge = stdout
        .lines()
        .find_map(|l| l.strip_prefix("mean_edge_error_m: "))
        .unwrap()
        .parse::<f64>()
        .unwrap();
    assert!(mean_edge < 0.5, "edge error {mean_edge}");
}

#[test]
fn evaluate_empty_dataset_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::create_dir_all(dir.path().join("data/velodyne")).unwrap();
    let out = run(&["evaluate", "--dataset", "data"], dir.path());
    assert_eq!(code(&out), 1);
}

#[test]
fn evaluate_unreadable_scene_is_skipped_not_fatal() {
    let scene = SynthScene::generate();
    // add a second, corrupt scene
    std::fs::write(scene.path("data/velodyne/000001.bin"), [1u8; 7]).unwrap();
    std::fs::write(scene.path("data/label_2/000001.txt"), "").unwrap();
    std::fs::copy(
        scene.path("data/calib/000000.txt"),
        scene.path("data/calib/000001.txt"),
    )
    .unwrap();
    let out = run(
        &[
            "evaluate",
            "--dataset",
            "data",
            "--out-dir",
            "out_skip",
            "--set",
            "roi.ground_mode=percentile",
        ],
        scene.dir.path(),
    );
    assert_eq!(code(&out), 0);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("scenes: 2"));
    assert!(stdout.contains("scenes_skipped: 1"), "{stdout}");
}
