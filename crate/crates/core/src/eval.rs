//! Dataset evaluation: match detections against ground truth the way the
//! study protocol does, aggregate accuracy/localization/runtime statistics,
//! and write the summary and per-object reports.
//!
//! Two interpretation choices the protocol leaves open are pinned here and
//! flagged in the report header: a ground-truth object counts as matched if
//! it has attributed frustum points *or* any obstacle box overlaps it
//! (BEV IoU > 0), and the false-positive rate is FP obstacles over all
//! detected obstacles.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::geometry::{bev_iou, nearest_edge_distance, point_in_convex};
use crate::pipeline::{run_pipeline, DetectionResult, PipelineConfig, StageTiming};
use crate::scene_io::{load_scene, LabeledObject, LoadOptions};
use crate::shadow::RoiConfig;
use crate::synth::{hide_objects, HiddenSet};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("detection result was produced under a different configuration")]
    ConfigMismatch,
    #[error("dataset is empty")]
    EmptyDataset,
    #[error(transparent)]
    Synth(#[from] crate::synth::SynthError),
    #[error("i/o error writing {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Whether a ground-truth object falls in the analyzed region: its BEV center
/// inside the RoI rectangle (closed lower bounds, open upper bounds).
pub fn in_roi(obj: &LabeledObject, roi: &RoiConfig) -> bool {
    roi.contains_bev(obj.bbox.center[0], obj.bbox.center[1])
}

/// Match outcome for one in-RoI ground-truth object.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMatch {
    pub matched: bool,
    /// Best obstacle-box IoU against this object (0 when nothing overlaps).
    pub best_iou: f64,
    /// |nearest-edge distance of the best obstacle - that of the GT box|;
    /// absent when the object was matched by attribution only.
    pub edge_distance_error: Option<f64>,
}

/// Per-scene matching report.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub tp_ids: BTreeSet<u32>,
    pub fn_ids: BTreeSet<u32>,
    pub fp_obstacle_ids: BTreeSet<u32>,
    pub per_object: BTreeMap<u32, ObjectMatch>,
}

/// Matches one scene's detections against all ground-truth labels (visible or
/// hidden). `gt_all` must be the scene's full label set.
pub fn match_scene(
    result: &DetectionResult,
    gt_all: &[LabeledObject],
    cfg: &PipelineConfig,
) -> Result<MatchReport, EvalError> {
    if result.config != *cfg {
        return Err(EvalError::ConfigMismatch);
    }
    let gt_in_roi: Vec<&LabeledObject> = gt_all.iter().filter(|o| in_roi(o, &cfg.roi)).collect();

    let mut report = MatchReport {
        tp_ids: BTreeSet::new(),
        fn_ids: BTreeSet::new(),
        fp_obstacle_ids: BTreeSet::new(),
        per_object: BTreeMap::new(),
    };

    for obj in &gt_in_roi {
        let attributed = result.attributed.get(&obj.id).copied().unwrap_or(0) as usize;
        let mut best_iou = 0.0;
        let mut best_edge = None;
        for obstacle in &result.obstacles {
            let iou = bev_iou(&obstacle.bbox.to_oriented(), &obj.bbox);
            if iou > best_iou {
                best_iou = iou;
                let pred = nearest_edge_distance(&obstacle.bbox.footprint());
                let gt = nearest_edge_distance(&obj.bbox.footprint());
                best_edge = Some((pred - gt).abs());
            }
        }
        let matched = attributed >= cfg.match_min_points || best_iou > 0.0;
        if matched {
            report.tp_ids.insert(obj.id);
        } else {
            report.fn_ids.insert(obj.id);
        }
        report.per_object.insert(
            obj.id,
            ObjectMatch {
                matched,
                best_iou,
                edge_distance_error: best_edge,
            },
        );
    }

    for obstacle in &result.obstacles {
        let overlaps = gt_in_roi
            .iter()
            .any(|o| bev_iou(&obstacle.bbox.to_oriented(), &o.bbox) > 0.0);
        if overlaps {
            continue;
        }
        let c = obstacle.bbox.to_oriented().center;
        let center_inside = gt_all
            .iter()
            .any(|o| point_in_convex([c[0], c[1]], &o.bbox.footprint()));
        if !center_inside {
            report.fp_obstacle_ids.insert(obstacle.id);
        }
    }
    Ok(report)
}

/// How the emulated attacker chooses targets during evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum HiddenPolicy {
    /// Benign run: every label stays visible.
    None,
    /// Hide every object whose center is inside the RoI.
    HideAllInRoi,
    /// Hide these ids in every scene (ids outside a scene's range are ignored).
    Explicit(HiddenSet),
}

/// One scene of a dataset, by file paths.
#[derive(Debug, Clone)]
pub struct SceneEntry {
    pub scene_id: String,
    pub velodyne: PathBuf,
    pub labels: PathBuf,
    pub calib: PathBuf,
}

/// Per-object output row.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectRow {
    pub object_id: u32,
    pub class_name: String,
    pub matched: bool,
    pub best_iou: f64,
    pub edge_error: Option<f64>,
}

/// Everything recorded for one evaluated scene.
#[derive(Debug, Clone)]
pub struct SceneReport {
    pub scene_id: String,
    /// Present when the scene could not be processed; such scenes are counted
    /// but contribute nothing to the metrics.
    pub skipped: Option<String>,
    pub objects: Vec<ObjectRow>,
    pub fp_obstacles: usize,
    pub total_obstacles: usize,
    pub runtime: f64,
    pub timing: StageTiming,
}

/// Aggregated dataset metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub scenes: usize,
    pub scenes_skipped: usize,
    pub objects_in_roi: usize,
    pub tp: usize,
    pub fn_: usize,
    pub fp_obstacles: usize,
    pub total_obstacles: usize,
    pub tpr: f64,
    pub fnr: f64,
    /// FP obstacles / total detected obstacles.
    pub fpr: f64,
    pub mean_iou: f64,
    pub mean_edge_error: f64,
    pub std_edge_error: f64,
    pub mean_runtime: f64,
    pub std_runtime: f64,
    pub stage_means: Vec<(&'static str, f64)>,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl Metrics {
    pub fn from_reports(reports: &[SceneReport]) -> Self {
        let mut tp = 0;
        let mut fn_ = 0;
        let mut fp = 0;
        let mut total_obstacles = 0;
        let mut objects_in_roi = 0;
        let mut ious = Vec::new();
        let mut edges = Vec::new();
        let mut runtimes = Vec::new();
        let mut stage_sums: BTreeMap<&'static str, f64> = BTreeMap::new();
        let mut skipped = 0;
        for r in reports {
            if r.skipped.is_some() {
                skipped += 1;
                continue;
            }
            for o in &r.objects {
                objects_in_roi += 1;
                if o.matched {
                    tp += 1;
                } else {
                    fn_ += 1;
                }
                if o.best_iou > 0.0 {
                    ious.push(o.best_iou);
                }
                if let Some(e) = o.edge_error {
                    edges.push(e);
                }
            }
            fp += r.fp_obstacles;
            total_obstacles += r.total_obstacles;
            runtimes.push(r.runtime);
            for (name, secs) in r.timing.stages() {
                *stage_sums.entry(name).or_insert(0.0) += secs;
            }
        }
        let evaluated = reports.len() - skipped;
        let (mean_edge_error, std_edge_error) = mean_std(&edges);
        let (mean_runtime, std_runtime) = mean_std(&runtimes);
        let (mean_iou, _) = mean_std(&ious);
        let stage_means = StageTiming::default()
            .stages()
            .iter()
            .map(|(name, _)| {
                (
                    *name,
                    stage_sums.get(name).copied().unwrap_or(0.0) / (evaluated.max(1) as f64),
                )
            })
            .collect();
        Metrics {
            scenes: reports.len(),
            scenes_skipped: skipped,
            objects_in_roi,
            tp,
            fn_,
            fp_obstacles: fp,
            total_obstacles,
            tpr: if tp + fn_ > 0 {
                tp as f64 / (tp + fn_) as f64
            } else {
                1.0
            },
            fnr: if tp + fn_ > 0 {
                fn_ as f64 / (tp + fn_) as f64
            } else {
                0.0
            },
            fpr: if total_obstacles > 0 {
                fp as f64 / total_obstacles as f64
            } else {
                0.0
            },
            mean_iou,
            mean_edge_error,
            std_edge_error,
            mean_runtime,
            std_runtime,
            stage_means,
        }
    }
}

/// Evaluates one loaded scene under a hidden policy.
pub fn evaluate_scene(
    scene: &crate::scene_io::Scene,
    policy: &HiddenPolicy,
    cfg: &PipelineConfig,
) -> Result<SceneReport, EvalError> {
    let hidden: HiddenSet = match policy {
        HiddenPolicy::None => HiddenSet::new(),
        HiddenPolicy::HideAllInRoi => scene
            .labels
            .iter()
            .filter(|o| in_roi(o, &cfg.roi))
            .map(|o| o.id)
            .collect(),
        HiddenPolicy::Explicit(ids) => ids
            .iter()
            .copied()
            .filter(|id| scene.labels.iter().any(|l| l.id == *id))
            .collect(),
    };
    let visible = hide_objects(&scene.labels, &hidden)?;
    let result = run_pipeline(scene, &visible, cfg);
    let report = match_scene(&result, &scene.labels, cfg)?;
    let objects = scene
        .labels
        .iter()
        .filter(|o| in_roi(o, &cfg.roi))
        .map(|o| {
            let m = &report.per_object[&o.id];
            ObjectRow {
                object_id: o.id,
                class_name: o.class_name.clone(),
                matched: m.matched,
                best_iou: m.best_iou,
                edge_error: m.edge_distance_error,
            }
        })
        .collect();
    Ok(SceneReport {
        scene_id: scene.scene_id.clone(),
        skipped: None,
        objects,
        fp_obstacles: report.fp_obstacle_ids.len(),
        total_obstacles: result.obstacles.len(),
        runtime: result.timing.total,
        timing: result.timing,
    })
}

/// Runs the pipeline over every entry, evaluating scenes in parallel.
/// Unreadable scenes are recorded as skipped rather than aborting the run.
/// Output (aside from runtime fields) is independent of `parallelism`.
pub fn evaluate_dataset(
    entries: &[SceneEntry],
    policy: &HiddenPolicy,
    cfg: &PipelineConfig,
    load: &LoadOptions,
    parallelism: usize,
) -> Result<(Metrics, Vec<SceneReport>), EvalError> {
    if entries.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(parallelism.max(1))
        .build()
        .expect("thread pool");
    let reports: Vec<SceneReport> = pool.install(|| {
        entries
            .par_iter()
            .map(|entry| {
                let scene = match load_scene(
                    &entry.velodyne,
                    &entry.labels,
                    &entry.calib,
                    &entry.scene_id,
                    load,
                ) {
                    Ok(s) => s,
                    Err(e) => {
                        return SceneReport {
                            scene_id: entry.scene_id.clone(),
                            skipped: Some(e.to_string()),
                            objects: Vec::new(),
                            fp_obstacles: 0,
                            total_obstacles: 0,
                            runtime: 0.0,
                            timing: StageTiming::default(),
                        }
                    }
                };
                match evaluate_scene(&scene, policy, cfg) {
                    Ok(r) => r,
                    Err(e) => SceneReport {
                        scene_id: entry.scene_id.clone(),
                        skipped: Some(e.to_string()),
                        objects: Vec::new(),
                        fp_obstacles: 0,
                        total_obstacles: 0,
                        runtime: 0.0,
                        timing: StageTiming::default(),
                    },
                }
            })
            .collect()
    });
    Ok((Metrics::from_reports(&reports), reports))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> EvalError + '_ {
    move |source| EvalError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes the structured-text summary and the per-object CSV. Reruns on the
/// same inputs produce byte-identical files except for the timestamp and
/// runtime fields.
pub fn write_report(
    metrics: &Metrics,
    reports: &[SceneReport],
    summary_path: &Path,
    csv_path: &Path,
) -> Result<(), EvalError> {
    let mut summary = String::new();
    summary.push_str(&render_summary(metrics, true));
    std::fs::write(summary_path, summary).map_err(io_err(summary_path))?;

    let mut csv = std::io::BufWriter::new(
        std::fs::File::create(csv_path).map_err(io_err(csv_path))?,
    );
    (|| -> std::io::Result<()> {
        writeln!(csv, "scene_id,object_id,class,matched,best_iou,edge_error,runtime")?;
        for r in reports {
            for o in &r.objects {
                let edge = o
                    .edge_error
                    .map(|e| format!("{e:.6}"))
                    .unwrap_or_default();
                writeln!(
                    csv,
                    "{},{},{},{},{:.6},{},{:.6}",
                    r.scene_id, o.object_id, o.class_name, o.matched, o.best_iou, edge, r.runtime
                )?;
            }
        }
        csv.flush()
    })()
    .map_err(io_err(csv_path))?;
    Ok(())
}

/// Renders the metrics as "key: value" lines, with the interpretation choices
/// flagged up front.
pub fn render_summary(m: &Metrics, with_timestamp: bool) -> String {
    use std::fmt::Write;
    let mut s = String::new();
    s.push_str("# obstacle detection evaluation summary\n");
    s.push_str("# match predicate: attributed frustum points >= threshold, or any obstacle with BEV IoU > 0\n");
    s.push_str("# fpr denominator: total detected obstacles across the dataset\n");
    s.push_str("# mean_iou: averaged over objects matched by an obstacle box (IoU > 0)\n");
    if with_timestamp {
        let ts = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let _ = writeln!(s, "timestamp: {ts}");
    }
    let _ = writeln!(s, "scenes: {}", m.scenes);
    let _ = writeln!(s, "scenes_skipped: {}", m.scenes_skipped);
    let _ = writeln!(s, "objects_in_roi: {}", m.objects_in_roi);
    let _ = writeln!(s, "tp: {}", m.tp);
    let _ = writeln!(s, "fn: {}", m.fn_);
    let _ = writeln!(s, "fp_obstacles: {}", m.fp_obstacles);
    let _ = writeln!(s, "total_obstacles: {}", m.total_obstacles);
    let _ = writeln!(s, "tpr: {:.6}", m.tpr);
    let _ = writeln!(s, "fnr: {:.6}", m.fnr);
    let _ = writeln!(s, "fpr: {:.6}", m.fpr);
    let _ = writeln!(s, "mean_iou: {:.6}", m.mean_iou);
    let _ = writeln!(s, "mean_edge_error_m: {:.6}", m.mean_edge_error);
    let _ = writeln!(s, "std_edge_error_m: {:.6}", m.std_edge_error);
    let _ = writeln!(s, "mean_runtime_s: {:.6}", m.mean_runtime);
    let _ = writeln!(s, "std_runtime_s: {:.6}", m.std_runtime);
    for (name, secs) in &m.stage_means {
        let _ = writeln!(s, "stage_mean_s.{name}: {secs:.6}");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb3, OrientedBox3};
    use crate::pipeline::Obstacle;
    use std::collections::BTreeMap;

    fn obj(id: u32, center: [f64; 3]) -> LabeledObject {
        LabeledObject {
            id,
            class_name: "Car".into(),
            bbox: OrientedBox3::new(center, [4.0, 2.0, 1.5], 0.0),
        }
    }

    fn empty_result(cfg: &PipelineConfig) -> DetectionResult {
        DetectionResult {
            config: cfg.clone(),
            shadow_clusters: vec![],
            attributed: BTreeMap::new(),
            obstacles: vec![],
            timing: StageTiming::default(),
        }
    }

    #[test]
    fn in_roi_boundaries() {
        let roi = RoiConfig::default();
        assert!(in_roi(&obj(0, [15.0, 0.0, 0.0]), &roi));
        assert!(!in_roi(&obj(0, [15.0, 6.0, 0.0]), &roi));
        assert!(in_roi(&obj(0, [0.0, 0.0, 0.0]), &roi));
        assert!(!in_roi(&obj(0, [30.0, 0.0, 0.0]), &roi));
    }

    #[test]
    fn match_by_attribution_only() {
        let cfg = PipelineConfig::default();
        let mut result = empty_result(&cfg);
        result.attributed.insert(0, 50);
        let gt = vec![obj(0, [15.0, 0.0, -0.9])];
        let report = match_scene(&result, &gt, &cfg).unwrap();
        assert_eq!(report.tp_ids, BTreeSet::from([0]));
        assert!(report.fn_ids.is_empty());
        assert!(report.fp_obstacle_ids.is_empty());
        assert!(report.per_object[&0].edge_distance_error.is_none());
    }

    #[test]
    fn match_by_obstacle_overlap() {
        let cfg = PipelineConfig::default();
        let mut result = empty_result(&cfg);
        result.obstacles.push(Obstacle {
            id: 0,
            points: vec![],
            bbox: Aabb3 {
                min: [13.2, -0.8, -1.5],
                max: [14.5, 0.8, -0.3],
            },
            source_shadow_ids: BTreeSet::new(),
        });
        let gt = vec![obj(0, [15.0, 0.0, -0.9])]; // box spans x in [13, 17]
        let report = match_scene(&result, &gt, &cfg).unwrap();
        assert_eq!(report.tp_ids, BTreeSet::from([0]));
        let m = &report.per_object[&0];
        assert!(m.best_iou > 0.0);
        // gt nearest edge at 13, obstacle nearest edge at 13.2
        let err = m.edge_distance_error.unwrap();
        assert!((err - 0.2).abs() < 1e-9, "edge error {err}");
    }

    #[test]
    fn unmatched_obstacle_is_fp() {
        let cfg = PipelineConfig::default();
        let mut result = empty_result(&cfg);
        result.obstacles.push(Obstacle {
            id: 0,
            points: vec![],
            bbox: Aabb3 {
                min: [25.0, 4.0, -1.5],
                max: [25.4, 4.4, -0.5],
            },
            source_shadow_ids: BTreeSet::new(),
        });
        let gt = vec![obj(0, [10.0, 0.0, -0.9])];
        let report = match_scene(&result, &gt, &cfg).unwrap();
        assert_eq!(report.fn_ids, BTreeSet::from([0]));
        assert_eq!(report.fp_obstacle_ids, BTreeSet::from([0]));
    }

    #[test]
    fn degenerate_obstacle_inside_gt_is_not_fp() {
        let cfg = PipelineConfig::default();
        let mut result = empty_result(&cfg);
        // a zero-width sliver inside the gt box footprint
        result.obstacles.push(Obstacle {
            id: 0,
            points: vec![],
            bbox: Aabb3 {
                min: [15.0, -0.5, -1.5],
                max: [15.0, 0.5, -0.5],
            },
            source_shadow_ids: BTreeSet::new(),
        });
        let gt = vec![obj(0, [15.0, 0.0, -0.9])];
        let report = match_scene(&result, &gt, &cfg).unwrap();
        assert!(report.fp_obstacle_ids.is_empty());
    }

    #[test]
    fn cfg_mismatch_is_an_error() {
        let cfg = PipelineConfig::default();
        let result = empty_result(&cfg);
        let other = PipelineConfig {
            min_cells: 7,
            ..PipelineConfig::default()
        };
        assert!(matches!(
            match_scene(&result, &[], &other),
            Err(EvalError::ConfigMismatch)
        ));
    }

    #[test]
    fn tp_fn_partition_in_roi_objects() {
        let cfg = PipelineConfig::default();
        let mut result = empty_result(&cfg);
        result.attributed.insert(0, 10);
        let gt = vec![
            obj(0, [15.0, 0.0, -0.9]),
            obj(1, [20.0, 2.0, -0.9]),
            obj(2, [50.0, 0.0, -0.9]), // out of RoI
        ];
        let report = match_scene(&result, &gt, &cfg).unwrap();
        let union: BTreeSet<u32> = report.tp_ids.union(&report.fn_ids).copied().collect();
        assert_eq!(union, BTreeSet::from([0, 1]));
        assert!(report.tp_ids.is_disjoint(&report.fn_ids));
    }

    #[test]
    fn metrics_identities() {
        let reports = vec![SceneReport {
            scene_id: "a".into(),
            skipped: None,
            objects: vec![
                ObjectRow {
                    object_id: 0,
                    class_name: "Car".into(),
                    matched: true,
                    best_iou: 0.5,
                    edge_error: Some(0.2),
                },
                ObjectRow {
                    object_id: 1,
                    class_name: "Car".into(),
                    matched: false,
                    best_iou: 0.0,
                    edge_error: None,
                },
            ],
            fp_obstacles: 1,
            total_obstacles: 3,
            runtime: 0.01,
            timing: StageTiming::default(),
        }];
        let m = Metrics::from_reports(&reports);
        assert_eq!(m.objects_in_roi, 2);
        assert!((m.tpr + m.fnr - 1.0).abs() < 1e-9);
        assert!((m.fpr - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.mean_iou - 0.5).abs() < 1e-12);
        for v in [m.tpr, m.fnr, m.fpr, m.mean_iou] {
            assert!((0.0..=1.0).contains(&v));
        }
    }

    #[test]
    fn metrics_order_independent() {
        let mk = |id: &str, matched: bool| SceneReport {
            scene_id: id.into(),
            skipped: None,
            objects: vec![ObjectRow {
                object_id: 0,
                class_name: "Car".into(),
                matched,
                best_iou: if matched { 0.4 } else { 0.0 },
                edge_error: matched.then_some(0.3),
            }],
            fp_obstacles: usize::from(!matched),
            total_obstacles: 1,
            runtime: 0.02,
            timing: StageTiming::default(),
        };
        let fwd = vec![mk("a", true), mk("b", false), mk("c", true)];
        let rev: Vec<SceneReport> = fwd.iter().rev().cloned().collect();
        assert_eq!(Metrics::from_reports(&fwd), Metrics::from_reports(&rev));
    }

    #[test]
    fn report_files_deterministic_except_timestamp() {
        let dir = tempfile::tempdir().unwrap();
        let reports = vec![SceneReport {
            scene_id: "000001".into(),
            skipped: None,
            objects: vec![ObjectRow {
                object_id: 0,
                class_name: "Car".into(),
                matched: true,
                best_iou: 0.42,
                edge_error: Some(0.11),
            }],
            fp_obstacles: 0,
            total_obstacles: 1,
            runtime: 0.0,
            timing: StageTiming::default(),
        }];
        let m = Metrics::from_reports(&reports);
        let s1 = dir.path().join("s1.txt");
        let c1 = dir.path().join("c1.csv");
        let s2 = dir.path().join("s2.txt");
        let c2 = dir.path().join("c2.csv");
        write_report(&m, &reports, &s1, &c1).unwrap();
        write_report(&m, &reports, &s2, &c2).unwrap();
        let strip = |p: &std::path::Path| {
            std::fs::read_to_string(p)
                .unwrap()
                .lines()
                .filter(|l| !l.starts_with("timestamp:"))
                .collect::<Vec<_>>()
                .join("\n")
        };
        assert_eq!(strip(&s1), strip(&s2));
        assert_eq!(
            std::fs::read_to_string(&c1).unwrap(),
            std::fs::read_to_string(&c2).unwrap()
        );
        let csv = std::fs::read_to_string(&c1).unwrap();
        assert!(csv.starts_with("scene_id,object_id,class,matched,best_iou,edge_error,runtime"));
        assert_eq!(csv.lines().count(), 2);

        // zero scenes: header-only file
        let m0 = Metrics::from_reports(&[]);
        let s0 = dir.path().join("s0.txt");
        let c0 = dir.path().join("c0.csv");
        write_report(&m0, &[], &s0, &c0).unwrap();
        assert_eq!(std::fs::read_to_string(&c0).unwrap().lines().count(), 1);
        assert!(std::fs::read_to_string(&s0).unwrap().contains("scenes: 0"));
    }
}
