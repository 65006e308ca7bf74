//! Run configuration as flat dotted keys ("roi.cell=0.3"), loadable from a
//! file and overridable with --set flags: flags beat the file, the file beats
//! the defaults. An empty config reproduces default behavior exactly.
//!
//! Scene specs for the synthetic generator use the same key syntax.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use shadowscan_core::clustering::Metric;
use shadowscan_core::eval::HiddenPolicy;
use shadowscan_core::geometry::OrientedBox3;
use shadowscan_core::scene_io::LoadOptions;
use shadowscan_core::shadow::GroundMode;
use shadowscan_core::synth::{ScanMode, SceneSpec};
use shadowscan_core::PipelineConfig;

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub load: LoadOptions,
    pub hidden_policy: HiddenPolicy,
    pub dataset_root: Option<PathBuf>,
    pub scene_list: Option<PathBuf>,
    pub limit: Option<usize>,
    pub out_dir: PathBuf,
    pub parallelism: usize,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            pipeline: PipelineConfig::default(),
            load: LoadOptions::default(),
            hidden_policy: HiddenPolicy::None,
            dataset_root: None,
            scene_list: None,
            limit: None,
            out_dir: PathBuf::from("out"),
            parallelism: 1,
            seed: 0,
        }
    }
}

/// Splits "key=value" lines, ignoring blanks and '#' comments.
pub fn parse_kv_lines(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key=value, got {line:?}", lineno + 1))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn parse_metric(v: &str) -> Result<Metric> {
    match v {
        "euclidean_3d" => Ok(Metric::Euclidean3d),
        "euclidean_2d" => Ok(Metric::Euclidean2d),
        "chebyshev_grid" => Ok(Metric::ChebyshevGrid),
        other => bail!("unknown metric {other:?}"),
    }
}

fn parse_ids(v: &str) -> Result<BTreeSet<u32>> {
    v.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<u32>().map_err(|e| anyhow!("bad id {s:?}: {e}")))
        .collect()
}

impl RunConfig {
    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        for (k, v) in parse_kv_lines(&text)? {
            self.apply(&k, &v)
                .with_context(|| format!("config {}", path.display()))?;
        }
        Ok(())
    }

    pub fn apply(&mut self, key: &str, value: &str) -> Result<()> {
        let f = || -> Result<f64> { Ok(value.parse()?) };
        let n = || -> Result<usize> { Ok(value.parse()?) };
        let p = &mut self.pipeline;
        match key {
            "roi.x_min" => p.roi.x_min = f()?,
            "roi.x_max" => p.roi.x_max = f()?,
            "roi.y_half_width" => p.roi.y_half_width = f()?,
            "roi.cell" => p.roi.cell = f()?,
            "roi.slab_z_min" => p.roi.slab_z_min = f()?,
            "roi.slab_z_max" => p.roi.slab_z_max = f()?,
            "roi.ground_mode" => {
                p.roi.ground_mode = match value {
                    "fixed" => GroundMode::Fixed,
                    "percentile" => GroundMode::Percentile,
                    other => bail!("unknown ground_mode {other:?}"),
                }
            }
            "cell_dbscan.eps" => p.cell_dbscan.eps = f()?,
            "cell_dbscan.min_pts" => p.cell_dbscan.min_pts = n()?,
            "cell_dbscan.metric" => p.cell_dbscan.metric = parse_metric(value)?,
            "point_dbscan.eps" => p.point_dbscan.eps = f()?,
            "point_dbscan.min_pts" => p.point_dbscan.min_pts = n()?,
            "point_dbscan.metric" => p.point_dbscan.metric = parse_metric(value)?,
            "min_cells" => p.min_cells = n()?,
            "range_min" => p.range_min = f()?,
            "ground_clearance" => p.ground_clearance = f()?,
            "min_obstacle_height" => p.min_obstacle_height = f()?,
            "match_min_points" => p.match_min_points = n()?,
            "cell_stride" => p.cell_stride = n()?,
            "hidden.policy" => {
                self.hidden_policy = match value {
                    "none" => HiddenPolicy::None,
                    "hide_all_in_roi" => HiddenPolicy::HideAllInRoi,
                    "explicit" => HiddenPolicy::Explicit(BTreeSet::new()),
                    other => bail!("unknown hidden policy {other:?}"),
                }
            }
            "hidden.ids" => self.hidden_policy = HiddenPolicy::Explicit(parse_ids(value)?),
            "dataset.root" => self.dataset_root = Some(PathBuf::from(value)),
            "dataset.scenes" => self.scene_list = Some(PathBuf::from(value)),
            "dataset.limit" => self.limit = Some(n()?),
            "out.dir" => self.out_dir = PathBuf::from(value),
            "parallelism" => self.parallelism = n()?.max(1),
            "seed" => self.seed = value.parse()?,
            "load.allow_unlabeled" => self.load.allow_unlabeled = value.parse()?,
            "load.class_filter" => {
                let set: BTreeSet<String> = value
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect();
                self.load.class_filter = if set.is_empty() { None } else { Some(set) };
            }
            other => bail!("unknown config key {other:?}"),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.pipeline;
        if p.roi.x_max <= p.roi.x_min || p.roi.y_half_width <= 0.0 || p.roi.cell <= 0.0 {
            bail!("invalid RoI bounds");
        }
        if p.roi.slab_z_max <= p.roi.slab_z_min {
            bail!("slab_z_max must exceed slab_z_min");
        }
        if p.cell_dbscan.eps <= 0.0 || p.point_dbscan.eps <= 0.0 {
            bail!("dbscan eps must be positive");
        }
        if p.cell_dbscan.min_pts == 0 || p.point_dbscan.min_pts == 0 {
            bail!("dbscan min_pts must be at least 1");
        }
        if p.range_min < 0.0 || p.min_obstacle_height < 0.0 || p.ground_clearance < 0.0 {
            bail!("distances must be non-negative");
        }
        if p.cell_stride == 0 {
            bail!("cell_stride must be at least 1");
        }
        Ok(())
    }
}

/// Parses a scene spec file for the synthetic generator. Objects are numbered
/// `object.N.*`; elevations accept either a comma list or "lo:hi:n" linspace.
pub fn parse_scene_spec(text: &str) -> Result<SceneSpec> {
    use std::collections::BTreeMap;

    #[derive(Default)]
    struct PartialBox {
        class: Option<String>,
        center: Option<[f64; 3]>,
        dims: Option<[f64; 3]>,
        yaw: f64,
    }

    let mut spec = SceneSpec::default();
    let mut boxes: BTreeMap<usize, PartialBox> = BTreeMap::new();
    let triple = |v: &str| -> Result<[f64; 3]> {
        let parts: Vec<f64> = v
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("bad number {s:?}: {e}")))
            .collect::<Result<_>>()?;
        if parts.len() != 3 {
            bail!("expected three comma-separated numbers, got {v:?}");
        }
        Ok([parts[0], parts[1], parts[2]])
    };

    for (k, v) in parse_kv_lines(text)? {
        match k.as_str() {
            "seed" => spec.seed = v.parse()?,
            "ground_z" => spec.ground_z = v.parse()?,
            "sensor_height" => spec.sensor_height = v.parse()?,
            "scan.mode" => {
                spec.scan.mode = match v.as_str() {
                    "beams" => ScanMode::Beams,
                    "dense_ground" => ScanMode::DenseGround,
                    other => bail!("unknown scan mode {other:?}"),
                }
            }
            "scan.azimuth_step_deg" => spec.scan.azimuth_step_deg = v.parse()?,
            "scan.max_range" => spec.scan.max_range = v.parse()?,
            "scan.ground_grid_step" => spec.scan.ground_grid_step = v.parse()?,
            "scan.noise_sigma" => spec.scan.noise_sigma = v.parse()?,
            "scan.elevations_deg" => {
                spec.scan.elevations_deg = if let Some((range, count)) = v.rsplit_once(':') {
                    if let Some((lo, hi)) = range.split_once(':') {
                        let (lo, hi): (f64, f64) = (lo.trim().parse()?, hi.trim().parse()?);
                        let count: usize = count.trim().parse()?;
                        if count < 2 {
                            bail!("linspace needs at least 2 beams");
                        }
                        (0..count)
                            .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
                            .collect()
                    } else {
                        bail!("elevations linspace must be lo:hi:n, got {v:?}");
                    }
                } else {
                    v.split(',')
                        .map(|s| s.trim().parse::<f64>().map_err(|e| anyhow!("{e}")))
                        .collect::<Result<_>>()?
                }
            }
            other => {
                let rest = other
                    .strip_prefix("object.")
                    .ok_or_else(|| anyhow!("unknown spec key {other:?}"))?;
                let (idx, field) = rest
                    .split_once('.')
                    .ok_or_else(|| anyhow!("object key must be object.N.field: {other:?}"))?;
                let idx: usize = idx.parse().context("object index")?;
                let entry = boxes.entry(idx).or_default();
                match field {
                    "class" => entry.class = Some(v),
                    "center" => entry.center = Some(triple(&v)?),
                    "dims" => entry.dims = Some(triple(&v)?),
                    "yaw" => entry.yaw = v.parse()?,
                    other => bail!("unknown object field {other:?}"),
                }
            }
        }
    }

    for (idx, b) in boxes {
        let class = b.class.unwrap_or_else(|| "Car".to_string());
        let center = b.center.ok_or_else(|| anyhow!("object.{idx}.center missing"))?;
        let dims = b.dims.ok_or_else(|| anyhow!("object.{idx}.dims missing"))?;
        if dims.iter().any(|d| *d <= 0.0) {
            bail!("object.{idx}: dims must be positive");
        }
        spec.objects.push((class, OrientedBox3::new(center, dims, b.yaw)));
    }
    spec.validate().map_err(|e| anyhow!("{e}"))?;
    Ok(spec)
}
