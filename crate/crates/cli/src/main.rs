//! shadowscan: obstacle detection from 3D shadows in LiDAR point clouds.
//!
//! Subcommands: `detect` (one scene), `evaluate` (a dataset), `synth`
//! (generate a synthetic KITTI-layout scene with a shadow oracle sidecar),
//! and `render` (BEV figure from a result file).
//!
//! Exit codes: 0 success, 1 parse/config error, 2 I/O error.

mod config;
mod render;
mod result_file;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use shadowscan_core::eval::{evaluate_dataset, render_summary, write_report, EvalError, SceneEntry};
use shadowscan_core::eval::HiddenPolicy;
use shadowscan_core::pipeline::run_pipeline;
use shadowscan_core::scene_io::{
    calib_to_text, cloud_to_bytes, label_line, load_scene, parse_calib, parse_labels,
    parse_velodyne, Calibration, SceneError,
};
use shadowscan_core::shadow::extract_slab;
use shadowscan_core::synth::{hide_objects, oracle_shadow_cells, raycast_scene};

use config::RunConfig;
use result_file::ResultFile;

#[derive(Parser)]
#[command(name = "shadowscan", version, about = "Obstacle detection from LiDAR shadow regions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detection pipeline on one scene and write a result file.
    Detect(DetectArgs),
    /// Evaluate a dataset and write summary + per-object reports.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic scene in KITTI layout with an oracle sidecar.
    Synth(SynthArgs),
    /// Render a BEV figure from a result file.
    Render(RenderArgs),
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Config file of dotted keys (e.g. roi.cell=0.3).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override one config key (repeatable); beats the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn build(&self) -> Result<RunConfig, AppError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            cfg.apply_file(path).map_err(AppError::Config)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| AppError::Config(anyhow!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.apply(k.trim(), v.trim()).map_err(AppError::Config)?;
        }
        cfg.validate().map_err(AppError::Config)?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct DetectArgs {
    /// Velodyne binary scan.
    #[arg(long)]
    cloud: PathBuf,
    /// KITTI calibration file.
    #[arg(long)]
    calib: PathBuf,
    /// KITTI label file (omit to run unlabeled).
    #[arg(long)]
    labels: Option<PathBuf>,
    /// Scene id recorded in the result (defaults to the cloud file stem).
    #[arg(long)]
    scene_id: Option<String>,
    /// Comma-separated label ids to hide before attribution.
    #[arg(long)]
    hide: Option<String>,
    /// Result file to write.
    #[arg(long, default_value = "result.txt")]
    out: PathBuf,
    /// Also render a BEV figure to this path.
    #[arg(long)]
    render: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Dataset root containing velodyne/, label_2/ and calib/ directories.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// none | hide_all_in_roi (overrides the config file).
    #[arg(long)]
    hidden_policy: Option<String>,
    /// Comma-separated ids to hide in every scene.
    #[arg(long)]
    hide_ids: Option<String>,
    /// File listing scene ids to evaluate (one per line).
    #[arg(long)]
    scenes: Option<PathBuf>,
    /// Evaluate at most this many scenes.
    #[arg(long)]
    limit: Option<usize>,
    /// Worker threads for the scene loop.
    #[arg(long)]
    parallel: Option<usize>,
    /// Directory for summary.txt and objects.csv.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene spec file.
    #[arg(long)]
    spec: PathBuf,
    /// Output dataset root (KITTI layout is created under it).
    #[arg(long)]
    out_dir: PathBuf,
    /// Scene id used for the generated file names.
    #[arg(long, default_value = "000000")]
    id: String,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Args)]
struct RenderArgs {
    /// Result file produced by `detect`.
    #[arg(long)]
    result: PathBuf,
    /// Output SVG path.
    #[arg(long)]
    out: PathBuf,
    /// Optional velodyne scan for the slab-point layer.
    #[arg(long)]
    cloud: Option<PathBuf>,
    /// Calibration for the ground-truth layer.
    #[arg(long)]
    calib: Option<PathBuf>,
    /// Labels for the ground-truth layer.
    #[arg(long)]
    labels: Option<PathBuf>,
}

enum AppError {
    Config(anyhow::Error),
    Io(anyhow::Error),
}

impl AppError {
    fn exit_code(&self) -> u8 {
        match self {
            AppError::Config(_) => 1,
            AppError::Io(_) => 2,
        }
    }

    fn message(&self) -> &anyhow::Error {
        match self {
            AppError::Config(e) | AppError::Io(e) => e,
        }
    }
}

fn scene_err(e: SceneError) -> AppError {
    match e {
        SceneError::Io { .. } => AppError::Io(anyhow!(e)),
        other => AppError::Config(anyhow!(other)),
    }
}

fn parse_id_list(s: &str) -> Result<BTreeSet<u32>, AppError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|e| AppError::Config(anyhow!("bad id {t:?}: {e}")))
        })
        .collect()
}

fn cmd_detect(args: &DetectArgs) -> Result<(), AppError> {
    let cfg = args.config.build()?;
    let scene_id = args
        .scene_id
        .clone()
        .unwrap_or_else(|| {
            args.cloud
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "scene".into())
        });
    let label_path = args.labels.clone().unwrap_or_else(|| PathBuf::from(""));
    let load = shadowscan_core::scene_io::LoadOptions {
        allow_unlabeled: args.labels.is_none() || cfg.load.allow_unlabeled,
        class_filter: cfg.load.class_filter.clone(),
    };
    let scene = load_scene(&args.cloud, &label_path, &args.calib, &scene_id, &load)
        .map_err(scene_err)?;

    let visible = match &args.hide {
        Some(ids) => {
            let hidden = parse_id_list(ids)?;
            hide_objects(&scene.labels, &hidden).map_err(|e| AppError::Config(anyhow!(e)))?
        }
        None => scene.labels.clone(),
    };

    let result = run_pipeline(&scene, &visible, &cfg.pipeline);
    let rf = ResultFile::from_result(&scene_id, &result);
    result_file::write_result(&rf, &args.out).map_err(AppError::Io)?;
    log::info!(
        "scene {scene_id}: {} shadow clusters, {} attributed objects, {} obstacles in {:.3}s",
        rf.shadow_clusters.len(),
        rf.attributed.len(),
        rf.obstacles.len(),
        rf.timing.total
    );

    if let Some(figure) = &args.render {
        let slab = extract_slab(&scene.cloud, &cfg.pipeline.roi);
        render::render_bev(&slab.points, &rf, &scene.labels, figure).map_err(AppError::Io)?;
    }
    Ok(())
}

fn discover_scenes(
    root: &Path,
    list: Option<&Path>,
    limit: Option<usize>,
) -> Result<Vec<SceneEntry>, AppError> {
    let velodyne_dir = root.join("velodyne");
    let ids: Vec<String> = match list {
        Some(list_path) => std::fs::read_to_string(list_path)
            .with_context(|| format!("reading scene list {}", list_path.display()))
            .map_err(AppError::Io)?
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect(),
        None => {
            let mut ids = Vec::new();
            let entries = std::fs::read_dir(&velodyne_dir)
                .with_context(|| format!("listing {}", velodyne_dir.display()))
                .map_err(AppError::Io)?;
            for entry in entries {
                let entry = entry.map_err(|e| AppError::Io(anyhow!(e)))?;
                let path = entry.path();
                if path.extension().is_some_and(|e| e == "bin") {
                    if let Some(stem) = path.file_stem() {
                        ids.push(stem.to_string_lossy().into_owned());
                    }
                }
            }
            ids.sort();
            ids
        }
    };
    let ids = match limit {
        Some(n) => ids.into_iter().take(n).collect(),
        None => ids,
    };
    Ok(ids
        .into_iter()
        .map(|id| SceneEntry {
            velodyne: velodyne_dir.join(format!("{id}.bin")),
            labels: root.join("label_2").join(format!("{id}.txt")),
            calib: root.join("calib").join(format!("{id}.txt")),
            scene_id: id,
        })
        .collect())
}

fn cmd_evaluate(args: &EvaluateArgs) -> Result<(), AppError> {
    let mut cfg = args.config.build()?;
    if let Some(policy) = &args.hidden_policy {
        cfg.apply("hidden.policy", policy).map_err(AppError::Config)?;
    }
    if let Some(ids) = &args.hide_ids {
        cfg.hidden_policy = HiddenPolicy::Explicit(parse_id_list(ids)?);
    }
    if let Some(p) = args.parallel {
        cfg.parallelism = p.max(1);
    }
    if let Some(l) = args.limit {
        cfg.limit = Some(l);
    }
    if let Some(dir) = &args.out_dir {
        cfg.out_dir = dir.clone();
    }
    let root = args
        .dataset
        .clone()
        .or(cfg.dataset_root.clone())
        .ok_or_else(|| AppError::Config(anyhow!("no dataset root given (--dataset)")))?;
    let scene_list = args.scenes.clone().or(cfg.scene_list.clone());

    let entries = discover_scenes(&root, scene_list.as_deref(), cfg.limit)?;
    if entries.is_empty() {
        return Err(AppError::Config(anyhow!(
            "dataset {} contains no scenes",
            root.display()
        )));
    }

    let (metrics, reports) = evaluate_dataset(
        &entries,
        &cfg.hidden_policy,
        &cfg.pipeline,
        &cfg.load,
        cfg.parallelism,
    )
    .map_err(|e| match e {
        EvalError::EmptyDataset => AppError::Config(anyhow!(e)),
        EvalError::Io { .. } => AppError::Io(anyhow!(e)),
        other => AppError::Config(anyhow!(other)),
    })?;

    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))
        .map_err(AppError::Io)?;
    let summary_path = cfg.out_dir.join("summary.txt");
    let csv_path = cfg.out_dir.join("objects.csv");
    write_report(&metrics, &reports, &summary_path, &csv_path).map_err(|e| match e {
        EvalError::Io { .. } => AppError::Io(anyhow!(e)),
        other => AppError::Config(anyhow!(other)),
    })?;
    print!("{}", render_summary(&metrics, false));
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<(), AppError> {
    let cfg = args.config.build()?;
    let text = std::fs::read_to_string(&args.spec)
        .with_context(|| format!("reading spec {}", args.spec.display()))
        .map_err(AppError::Io)?;
    let spec = config::parse_scene_spec(&text).map_err(AppError::Config)?;

    let roi = cfg.pipeline.roi;
    let scene = raycast_scene(&spec, &roi);
    let oracle = oracle_shadow_cells(&spec, &roi);
    let calib = Calibration::standard();

    let write = |rel: &str, bytes: Vec<u8>| -> Result<(), AppError> {
        let path = args.out_dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))
                .map_err(AppError::Io)?;
        }
        std::fs::write(&path, bytes)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(AppError::Io)
    };

    write(
        &format!("velodyne/{}.bin", args.id),
        cloud_to_bytes(&scene.cloud),
    )?;
    let mut labels = String::new();
    for obj in &scene.labels {
        labels.push_str(&label_line(obj, &calib));
        labels.push('\n');
    }
    write(&format!("label_2/{}.txt", args.id), labels.into_bytes())?;
    write(
        &format!("calib/{}.txt", args.id),
        calib_to_text(&calib).into_bytes(),
    )?;
    let mut sidecar = String::new();
    for (ix, iy) in &oracle {
        sidecar.push_str(&format!("{ix},{iy}\n"));
    }
    write(&format!("oracle/{}.txt", args.id), sidecar.into_bytes())?;
    log::info!(
        "scene {}: {} points, {} labels, {} oracle shadow cells",
        args.id,
        scene.cloud.len(),
        scene.labels.len(),
        oracle.len()
    );
    Ok(())
}

fn cmd_render(args: &RenderArgs) -> Result<(), AppError> {
    let rf = if args.result.exists() {
        result_file::read_result(&args.result).map_err(AppError::Config)?
    } else {
        return Err(AppError::Io(anyhow!(
            "result file {} does not exist",
            args.result.display()
        )));
    };

    let slab_points = match &args.cloud {
        Some(cloud_path) => {
            let bytes = std::fs::read(cloud_path)
                .with_context(|| format!("reading {}", cloud_path.display()))
                .map_err(AppError::Io)?;
            let cloud = parse_velodyne(&bytes).map_err(scene_err)?;
            extract_slab(&cloud, &rf.config.roi).points
        }
        None => Vec::new(),
    };
    let gt = match (&args.calib, &args.labels) {
        (Some(calib_path), Some(label_path)) => {
            let calib_text = std::fs::read_to_string(calib_path)
                .with_context(|| format!("reading {}", calib_path.display()))
                .map_err(AppError::Io)?;
            let label_text = std::fs::read_to_string(label_path)
                .with_context(|| format!("reading {}", label_path.display()))
                .map_err(AppError::Io)?;
            let calib = parse_calib(&calib_text).map_err(scene_err)?;
            parse_labels(&label_text, &calib).map_err(scene_err)?
        }
        _ => Vec::new(),
    };
    render::render_bev(&slab_points, &rf, &gt, &args.out).map_err(AppError::Io)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Detect(args) => cmd_detect(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Synth(args) => cmd_synth(args),
        Command::Render(args) => cmd_render(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}
