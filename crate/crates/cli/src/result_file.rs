//! The structured-text detection result file: self-describing "key: value"
//! lines carrying the configuration, shadow-cluster cells, attribution map,
//! obstacle boxes, and per-stage timing. A result file can be re-read and
//! re-rendered without recomputing anything from the cloud.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use shadowscan_core::clustering::{DbscanParams, Metric};
use shadowscan_core::geometry::Aabb3;
use shadowscan_core::pipeline::{DetectionResult, PipelineConfig, StageTiming};
use shadowscan_core::shadow::{GroundMode, ShadowCluster};

const SCHEMA: &str = "shadowscan.result.v1";

/// An obstacle as stored on disk: the box and counts, without the per-point
/// indices (those are cloud-relative).
#[derive(Debug, Clone, PartialEq)]
pub struct StoredObstacle {
    pub id: u32,
    pub point_count: usize,
    pub bbox: Aabb3,
    pub source_shadow_ids: BTreeSet<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultFile {
    pub scene_id: String,
    pub config: PipelineConfig,
    pub shadow_clusters: Vec<ShadowCluster>,
    pub attributed: BTreeMap<u32, u32>,
    pub obstacles: Vec<StoredObstacle>,
    pub timing: StageTiming,
}

impl ResultFile {
    pub fn from_result(scene_id: &str, result: &DetectionResult) -> Self {
        Self {
            scene_id: scene_id.to_string(),
            config: result.config.clone(),
            shadow_clusters: result.shadow_clusters.clone(),
            attributed: result.attributed.clone(),
            obstacles: result
                .obstacles
                .iter()
                .map(|o| StoredObstacle {
                    id: o.id,
                    point_count: o.points.len(),
                    bbox: o.bbox,
                    source_shadow_ids: o.source_shadow_ids.clone(),
                })
                .collect(),
            timing: result.timing,
        }
    }
}

fn metric_name(m: Metric) -> &'static str {
    match m {
        Metric::Euclidean3d => "euclidean_3d",
        Metric::Euclidean2d => "euclidean_2d",
        Metric::ChebyshevGrid => "chebyshev_grid",
    }
}

pub fn render_result(rf: &ResultFile) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "schema: {SCHEMA}");
    let _ = writeln!(s, "scene_id: {}", rf.scene_id);
    let p = &rf.config;
    let _ = writeln!(s, "config.roi.x_min: {}", p.roi.x_min);
    let _ = writeln!(s, "config.roi.x_max: {}", p.roi.x_max);
    let _ = writeln!(s, "config.roi.y_half_width: {}", p.roi.y_half_width);
    let _ = writeln!(s, "config.roi.cell: {}", p.roi.cell);
    let _ = writeln!(s, "config.roi.slab_z_min: {}", p.roi.slab_z_min);
    let _ = writeln!(s, "config.roi.slab_z_max: {}", p.roi.slab_z_max);
    let ground_mode = match p.roi.ground_mode {
        GroundMode::Fixed => "fixed",
        GroundMode::Percentile => "percentile",
    };
    let _ = writeln!(s, "config.roi.ground_mode: {ground_mode}");
    let _ = writeln!(s, "config.cell_dbscan.eps: {}", p.cell_dbscan.eps);
    let _ = writeln!(s, "config.cell_dbscan.min_pts: {}", p.cell_dbscan.min_pts);
    let _ = writeln!(s, "config.cell_dbscan.metric: {}", metric_name(p.cell_dbscan.metric));
    let _ = writeln!(s, "config.point_dbscan.eps: {}", p.point_dbscan.eps);
    let _ = writeln!(s, "config.point_dbscan.min_pts: {}", p.point_dbscan.min_pts);
    let _ = writeln!(s, "config.point_dbscan.metric: {}", metric_name(p.point_dbscan.metric));
    let _ = writeln!(s, "config.min_cells: {}", p.min_cells);
    let _ = writeln!(s, "config.range_min: {}", p.range_min);
    let _ = writeln!(s, "config.ground_clearance: {}", p.ground_clearance);
    let _ = writeln!(s, "config.min_obstacle_height: {}", p.min_obstacle_height);
    let _ = writeln!(s, "config.match_min_points: {}", p.match_min_points);
    let _ = writeln!(s, "config.cell_stride: {}", p.cell_stride);
    let _ = writeln!(s, "timing.slab_s: {:.6}", rf.timing.slab);
    let _ = writeln!(s, "timing.occupancy_s: {:.6}", rf.timing.occupancy);
    let _ = writeln!(s, "timing.cluster_cells_s: {:.6}", rf.timing.cluster_cells);
    let _ = writeln!(s, "timing.wedges_s: {:.6}", rf.timing.wedges);
    let _ = writeln!(s, "timing.collect_s: {:.6}", rf.timing.collect);
    let _ = writeln!(s, "timing.attribute_s: {:.6}", rf.timing.attribute);
    let _ = writeln!(s, "timing.cluster_points_s: {:.6}", rf.timing.cluster_points);
    let _ = writeln!(s, "timing.total_s: {:.6}", rf.timing.total);
    let _ = writeln!(s, "shadow_clusters: {}", rf.shadow_clusters.len());
    for c in &rf.shadow_clusters {
        let cells: Vec<String> = c.cells.iter().map(|(ix, iy)| format!("{ix},{iy}")).collect();
        let _ = writeln!(s, "shadow_cluster.{}.cells: {}", c.id, cells.join(";"));
    }
    for (id, count) in &rf.attributed {
        let _ = writeln!(s, "attributed.{id}: {count}");
    }
    let _ = writeln!(s, "obstacles: {}", rf.obstacles.len());
    for o in &rf.obstacles {
        let _ = writeln!(
            s,
            "obstacle.{}.min: {},{},{}",
            o.id, o.bbox.min[0], o.bbox.min[1], o.bbox.min[2]
        );
        let _ = writeln!(
            s,
            "obstacle.{}.max: {},{},{}",
            o.id, o.bbox.max[0], o.bbox.max[1], o.bbox.max[2]
        );
        let _ = writeln!(s, "obstacle.{}.point_count: {}", o.id, o.point_count);
        let ids: Vec<String> = o.source_shadow_ids.iter().map(|i| i.to_string()).collect();
        let _ = writeln!(s, "obstacle.{}.shadow_ids: {}", o.id, ids.join(";"));
    }
    s
}

pub fn write_result(rf: &ResultFile, path: &Path) -> Result<()> {
    std::fs::write(path, render_result(rf))
        .with_context(|| format!("writing result {}", path.display()))
}

pub fn read_result(path: &Path) -> Result<ResultFile> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading result {}", path.display()))?;
    parse_result(&text).with_context(|| format!("parsing result {}", path.display()))
}

pub fn parse_result(text: &str) -> Result<ResultFile> {
    let mut map: BTreeMap<String, String> = BTreeMap::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once(':')
            .ok_or_else(|| anyhow!("expected key: value, got {line:?}"))?;
        map.insert(k.trim().to_string(), v.trim().to_string());
    }
    let get = |k: &str| -> Result<&String> { map.get(k).ok_or_else(|| anyhow!("missing key {k}")) };
    if get("schema")? != SCHEMA {
        bail!("unsupported schema {:?}", map.get("schema"));
    }
    let f = |k: &str| -> Result<f64> { Ok(get(k)?.parse()?) };
    let n = |k: &str| -> Result<usize> { Ok(get(k)?.parse()?) };
    let metric = |k: &str| -> Result<Metric> {
        Ok(match get(k)?.as_str() {
            "euclidean_3d" => Metric::Euclidean3d,
            "euclidean_2d" => Metric::Euclidean2d,
            "chebyshev_grid" => Metric::ChebyshevGrid,
            other => bail!("unknown metric {other:?}"),
        })
    };

    let mut config = PipelineConfig::default();
    config.roi.x_min = f("config.roi.x_min")?;
    config.roi.x_max = f("config.roi.x_max")?;
    config.roi.y_half_width = f("config.roi.y_half_width")?;
    config.roi.cell = f("config.roi.cell")?;
    config.roi.slab_z_min = f("config.roi.slab_z_min")?;
    config.roi.slab_z_max = f("config.roi.slab_z_max")?;
    config.roi.ground_mode = match get("config.roi.ground_mode")?.as_str() {
        "fixed" => GroundMode::Fixed,
        "percentile" => GroundMode::Percentile,
        other => bail!("unknown ground_mode {other:?}"),
    };
    config.cell_dbscan = DbscanParams::new(
        f("config.cell_dbscan.eps")?,
        n("config.cell_dbscan.min_pts")?,
        metric("config.cell_dbscan.metric")?,
    );
    config.point_dbscan = DbscanParams::new(
        f("config.point_dbscan.eps")?,
        n("config.point_dbscan.min_pts")?,
        metric("config.point_dbscan.metric")?,
    );
    config.min_cells = n("config.min_cells")?;
    config.range_min = f("config.range_min")?;
    config.ground_clearance = f("config.ground_clearance")?;
    config.min_obstacle_height = f("config.min_obstacle_height")?;
    config.match_min_points = n("config.match_min_points")?;
    config.cell_stride = n("config.cell_stride")?;

    let timing = StageTiming {
        slab: f("timing.slab_s")?,
        occupancy: f("timing.occupancy_s")?,
        cluster_cells: f("timing.cluster_cells_s")?,
        wedges: f("timing.wedges_s")?,
        collect: f("timing.collect_s")?,
        attribute: f("timing.attribute_s")?,
        cluster_points: f("timing.cluster_points_s")?,
        total: f("timing.total_s")?,
    };

    let mut shadow_clusters = Vec::new();
    for id in 0..n("shadow_clusters")? {
        let key = format!("shadow_cluster.{id}.cells");
        let cells = map
            .get(&key)
            .ok_or_else(|| anyhow!("missing {key}"))?
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|pair| -> Result<(usize, usize)> {
                let (ix, iy) = pair
                    .split_once(',')
                    .ok_or_else(|| anyhow!("bad cell {pair:?}"))?;
                Ok((ix.parse()?, iy.parse()?))
            })
            .collect::<Result<Vec<_>>>()?;
        shadow_clusters.push(ShadowCluster { id: id as u32, cells });
    }

    let mut attributed = BTreeMap::new();
    for (k, v) in &map {
        if let Some(id) = k.strip_prefix("attributed.") {
            attributed.insert(id.parse::<u32>()?, v.parse::<u32>()?);
        }
    }

    let mut obstacles = Vec::new();
    for id in 0..n("obstacles")? {
        let vec3 = |k: String| -> Result<[f64; 3]> {
            let v = map.get(&k).ok_or_else(|| anyhow!("missing {k}"))?;
            let parts: Vec<f64> = v
                .split(',')
                .map(|s| s.parse::<f64>().map_err(|e| anyhow!("{e}")))
                .collect::<Result<_>>()?;
            if parts.len() != 3 {
                bail!("{k}: expected 3 numbers");
            }
            Ok([parts[0], parts[1], parts[2]])
        };
        let source_shadow_ids = map
            .get(&format!("obstacle.{id}.shadow_ids"))
            .ok_or_else(|| anyhow!("missing obstacle.{id}.shadow_ids"))?
            .split(';')
            .filter(|s| !s.is_empty())
            .map(|s| Ok(s.parse::<u32>()?))
            .collect::<Result<BTreeSet<u32>>>()?;
        obstacles.push(StoredObstacle {
            id: id as u32,
            point_count: n(&format!("obstacle.{id}.point_count"))?,
            bbox: Aabb3 {
                min: vec3(format!("obstacle.{id}.min"))?,
                max: vec3(format!("obstacle.{id}.max"))?,
            },
            source_shadow_ids,
        });
    }

    Ok(ResultFile {
        scene_id: get("scene_id")?.clone(),
        config,
        shadow_clusters,
        attributed,
        obstacles,
        timing,
    })
}
