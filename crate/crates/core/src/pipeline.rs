//! Per-scene obstacle detection: shadow clusters are turned into wedges back
//! toward the sensor, the points inside those wedges are attributed to known
//! objects by bounding-box containment, and whatever points remain are
//! clustered into obstacles with enclosing boxes.
//!
//! `run_pipeline` is a pure function of (scene, visible objects, config);
//! shadows depend only on the point cloud, so hiding labels never changes the
//! shadow clusters.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use crate::clustering::{dbscan, DbscanParams, Metric};
use crate::geometry::{
    aabb_of_points, nearest_edge_distance, point_in_obox, point_in_wedge, wedge_of_footprint,
    Aabb3, Wedge,
};
use crate::scene_io::{LabeledObject, PointCloud, Scene};
use crate::shadow::{
    cell_footprint, extract_slab, find_shadow_clusters, occupancy_grid, RoiConfig, ShadowCluster,
};

/// Full pipeline configuration. Defaults are the values the detector was
/// designed around; everything is tunable from the run config.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub roi: RoiConfig,
    /// Empty-cell clustering: chebyshev on integer cell indices, eps 1 is
    /// 8-connectivity.
    pub cell_dbscan: DbscanParams,
    /// Frustum-point clustering in 3D.
    pub point_dbscan: DbscanParams,
    /// Shadow clusters smaller than this many cells are discarded as speckle.
    pub min_cells: usize,
    /// Sensor blanking radius: wedge contents closer than this are ignored
    /// (ego-vehicle returns).
    pub range_min: f64,
    /// Residue points within this height of the slab bottom are treated as
    /// ground returns, not obstacle evidence.
    pub ground_clearance: f64,
    /// Minimum obstacle box z-extent.
    pub min_obstacle_height: f64,
    /// Frustum points inside an object's box needed to call it attributed.
    pub match_min_points: usize,
    /// Sample every n-th cell of each shadow cluster when generating wedges
    /// (1 = every cell).
    pub cell_stride: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            roi: RoiConfig::default(),
            cell_dbscan: DbscanParams::new(1.0, 3, Metric::ChebyshevGrid),
            point_dbscan: DbscanParams::new(0.6, 8, Metric::Euclidean3d),
            min_cells: 6,
            range_min: 2.5,
            ground_clearance: 0.2,
            min_obstacle_height: 0.3,
            match_min_points: 1,
            cell_stride: 1,
        }
    }
}

/// A cluster of unattributed frustum points with its enclosing box: a
/// candidate hidden object.
#[derive(Debug, Clone, PartialEq)]
pub struct Obstacle {
    pub id: u32,
    /// Indices into the scene cloud, ascending.
    pub points: Vec<usize>,
    pub bbox: Aabb3,
    /// Shadow clusters whose wedges collected this obstacle's points.
    pub source_shadow_ids: BTreeSet<u32>,
}

/// Wall-clock seconds per stage.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTiming {
    pub slab: f64,
    pub occupancy: f64,
    pub cluster_cells: f64,
    pub wedges: f64,
    pub collect: f64,
    pub attribute: f64,
    pub cluster_points: f64,
    pub total: f64,
}

impl StageTiming {
    pub fn stages(&self) -> [(&'static str, f64); 7] {
        [
            ("slab", self.slab),
            ("occupancy", self.occupancy),
            ("cluster_cells", self.cluster_cells),
            ("wedges", self.wedges),
            ("collect", self.collect),
            ("attribute", self.attribute),
            ("cluster_points", self.cluster_points),
        ]
    }
}

/// Everything the detector produces for one scene.
#[derive(Debug, Clone)]
pub struct DetectionResult {
    pub config: PipelineConfig,
    pub shadow_clusters: Vec<ShadowCluster>,
    /// Frustum-point containment counts per visible object id (only ids with
    /// at least one contained point appear).
    pub attributed: BTreeMap<u32, u32>,
    pub obstacles: Vec<Obstacle>,
    pub timing: StageTiming,
}

impl DetectionResult {
    /// Equality over everything except the timing fields.
    pub fn same_detection(&self, other: &Self) -> bool {
        self.config == other.config
            && self.shadow_clusters == other.shadow_clusters
            && self.attributed == other.attributed
            && self.obstacles == other.obstacles
    }
}

/// One wedge per sampled cell of the cluster, in canonical cell order. Cells
/// whose footprint touches the origin or sits inside the blanking radius are
/// skipped with a warning.
pub fn wedges_of_cluster(
    cluster: &ShadowCluster,
    roi: &RoiConfig,
    range_min: f64,
    stride: usize,
) -> Vec<Wedge> {
    let stride = stride.max(1);
    let mut out = Vec::with_capacity(cluster.cells.len() / stride + 1);
    let mut skipped = 0usize;
    for &(ix, iy) in cluster.cells.iter().step_by(stride) {
        let footprint = match cell_footprint(ix, iy, roi) {
            Ok(f) => f,
            Err(_) => continue,
        };
        match wedge_of_footprint(&footprint, range_min) {
            Ok(w) => out.push(w),
            Err(_) => skipped += 1,
        }
    }
    if skipped > 0 {
        log::warn!(
            "shadow cluster {}: skipped {skipped} degenerate cells near the sensor",
            cluster.id
        );
    }
    out
}

/// Azimuth-sorted view of a cloud for fast wedge queries. Query results are
/// exactly the points satisfying `point_in_wedge`.
pub struct AzimuthIndex {
    /// (azimuth, range, point index), sorted by azimuth.
    entries: Vec<(f64, f64, u32)>,
}

impl AzimuthIndex {
    pub fn build(cloud: &PointCloud) -> Self {
        let mut entries: Vec<(f64, f64, u32)> = cloud
            .points
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let x = p.x as f64;
                let y = p.y as f64;
                (y.atan2(x), x.hypot(y), i as u32)
            })
            .collect();
        entries.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        Self { entries }
    }

    /// Pushes the indices of all points inside `w` (deduplicated by `hit`).
    fn collect_into(&self, cloud: &PointCloud, w: &Wedge, hit: &mut [bool], out: &mut Vec<usize>) {
        // normalize the unwrapped interval into pieces of (-pi, pi]
        let span = w.az_max - w.az_min;
        let lo = crate::geometry::normalize_angle(w.az_min);
        let mut pieces: Vec<(f64, f64)> = Vec::with_capacity(2);
        if lo + span <= std::f64::consts::PI {
            pieces.push((lo, lo + span));
        } else {
            pieces.push((lo, std::f64::consts::PI));
            pieces.push((
                -std::f64::consts::PI,
                lo + span - std::f64::consts::TAU,
            ));
        }
        for (a, b) in pieces {
            let start = self.entries.partition_point(|e| e.0 < a);
            let end = self.entries.partition_point(|e| e.0 <= b);
            for &(_, r, idx) in &self.entries[start..end] {
                let idx = idx as usize;
                if r < w.range_min || r >= w.range_max || hit[idx] {
                    continue;
                }
                let p = cloud.points[idx].xyz();
                if point_in_wedge(p, w) {
                    hit[idx] = true;
                    out.push(idx);
                }
            }
        }
    }
}

/// Union of wedge contents over the whole cloud; each index appears once,
/// ascending.
pub fn collect_frustum_points(cloud: &PointCloud, wedges: &[Wedge]) -> Vec<usize> {
    let index = AzimuthIndex::build(cloud);
    let mut hit = vec![false; cloud.len()];
    let mut out = Vec::new();
    for w in wedges {
        index.collect_into(cloud, w, &mut hit, &mut out);
    }
    out.sort_unstable();
    out
}

/// Splits frustum points into per-object containment counts and the residue
/// that belongs to no visible object. A point inside several boxes counts for
/// each of them but is claimed (kept out of the residue) by the first.
pub fn split_by_objects(
    cloud: &PointCloud,
    frustum_points: &[usize],
    objects: &[LabeledObject],
) -> (BTreeMap<u32, u32>, Vec<usize>) {
    let mut attributed: BTreeMap<u32, u32> = BTreeMap::new();
    let mut residue = Vec::new();
    for &i in frustum_points {
        let p = cloud.points[i].xyz();
        let mut claimed = false;
        for obj in objects {
            if point_in_obox(p, &obj.bbox) {
                *attributed.entry(obj.id).or_insert(0) += 1;
                claimed = true;
            }
        }
        if !claimed {
            residue.push(i);
        }
    }
    (attributed, residue)
}

/// Clusters residue points into obstacles. Ground returns (below the slab
/// bottom plus clearance) are excluded first; clusters whose box is shorter
/// than the minimum obstacle height are dropped; survivors are ordered by
/// nearest-edge distance.
pub fn detect_obstacles(
    cloud: &PointCloud,
    residue: &[usize],
    cfg: &PipelineConfig,
    slab_z_min: f64,
) -> Vec<Obstacle> {
    let floor = slab_z_min + cfg.ground_clearance;
    let kept: Vec<usize> = residue
        .iter()
        .copied()
        .filter(|&i| cloud.points[i].z as f64 >= floor)
        .collect();
    let items: Vec<[f64; 3]> = kept.iter().map(|&i| cloud.points[i].xyz()).collect();
    let labels = dbscan(&items, &cfg.point_dbscan);

    let mut obstacles: Vec<Obstacle> = labels
        .members()
        .into_iter()
        .filter_map(|member_idxs| {
            let points: Vec<usize> = member_idxs.iter().map(|&j| kept[j]).collect();
            let bbox = aabb_of_points(member_idxs.iter().map(|&j| items[j])).ok()?;
            if bbox.z_extent() < cfg.min_obstacle_height {
                return None;
            }
            Some(Obstacle {
                id: 0,
                points,
                bbox,
                source_shadow_ids: BTreeSet::new(),
            })
        })
        .collect();
    obstacles.sort_by(|a, b| {
        let da = nearest_edge_distance(&a.bbox.footprint());
        let db = nearest_edge_distance(&b.bbox.footprint());
        da.partial_cmp(&db)
            .unwrap()
            .then_with(|| a.bbox.min.partial_cmp(&b.bbox.min).unwrap())
    });
    for (i, o) in obstacles.iter_mut().enumerate() {
        o.id = i as u32;
    }
    obstacles
}

/// Runs the full per-scene pipeline against the currently visible objects.
/// `visible_objects` must be a subset of the scene's labels (attack emulation
/// may have removed some); the shadow stages never look at it.
pub fn run_pipeline(
    scene: &Scene,
    visible_objects: &[LabeledObject],
    cfg: &PipelineConfig,
) -> DetectionResult {
    if scene.cloud.is_empty() {
        log::warn!("scene {}: empty point cloud", scene.scene_id);
    }
    let t_start = Instant::now();
    let mut timing = StageTiming::default();

    let t = Instant::now();
    let slab = extract_slab(&scene.cloud, &cfg.roi);
    timing.slab = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let grid = occupancy_grid(&slab, &cfg.roi);
    timing.occupancy = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let shadow_clusters = find_shadow_clusters(&grid, &cfg.cell_dbscan, cfg.min_cells);
    timing.cluster_cells = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let cluster_wedges: Vec<(u32, Vec<Wedge>)> = shadow_clusters
        .iter()
        .map(|c| (c.id, wedges_of_cluster(c, &cfg.roi, cfg.range_min, cfg.cell_stride)))
        .collect();
    timing.wedges = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let index = AzimuthIndex::build(&scene.cloud);
    let mut sources: BTreeMap<usize, BTreeSet<u32>> = BTreeMap::new();
    let mut frustum_points: Vec<usize> = Vec::new();
    for (cluster_id, wedges) in &cluster_wedges {
        let mut hit = vec![false; scene.cloud.len()];
        let mut collected = Vec::new();
        for w in wedges {
            index.collect_into(&scene.cloud, w, &mut hit, &mut collected);
        }
        for idx in collected {
            let entry = sources.entry(idx).or_default();
            if entry.is_empty() {
                frustum_points.push(idx);
            }
            entry.insert(*cluster_id);
        }
    }
    frustum_points.sort_unstable();
    timing.collect = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let (attributed, residue) = split_by_objects(&scene.cloud, &frustum_points, visible_objects);
    timing.attribute = t.elapsed().as_secs_f64();

    let t = Instant::now();
    let mut obstacles = detect_obstacles(&scene.cloud, &residue, cfg, slab.z_min);
    for o in obstacles.iter_mut() {
        for p in &o.points {
            if let Some(ids) = sources.get(p) {
                o.source_shadow_ids.extend(ids.iter().copied());
            }
        }
    }
    timing.cluster_points = t.elapsed().as_secs_f64();

    timing.total = t_start.elapsed().as_secs_f64();
    DetectionResult {
        config: cfg.clone(),
        shadow_clusters,
        attributed,
        obstacles,
        timing,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene_io::PointXyzi;
    use crate::shadow::ShadowCluster;

    fn cloud_of(points: &[[f64; 3]]) -> PointCloud {
        PointCloud {
            points: points
                .iter()
                .map(|p| PointXyzi {
                    x: p[0] as f32,
                    y: p[1] as f32,
                    z: p[2] as f32,
                    intensity: 0.0,
                })
                .collect(),
            rejected: 0,
        }
    }

    fn obj(id: u32, center: [f64; 3], dims: [f64; 3]) -> LabeledObject {
        LabeledObject {
            id,
            class_name: "Car".into(),
            bbox: crate::geometry::OrientedBox3::new(center, dims, 0.0),
        }
    }

    #[test]
    fn wedges_match_cell_count_and_order() {
        let roi = RoiConfig::default();
        let cluster = ShadowCluster {
            id: 0,
            cells: vec![(40, 10), (40, 11), (41, 10)],
        };
        let wedges = wedges_of_cluster(&cluster, &roi, 2.5, 1);
        assert_eq!(wedges.len(), 3);
        // first wedge corresponds to cell (40, 10)
        let fp = cell_footprint(40, 10, &roi).unwrap();
        let expect = wedge_of_footprint(&fp, 2.5).unwrap();
        assert_eq!(wedges[0], expect);

        let single = ShadowCluster {
            id: 1,
            cells: vec![(50, 16)],
        };
        assert_eq!(wedges_of_cluster(&single, &roi, 2.5, 1).len(), 1);
    }

    #[test]
    fn wedge_straddling_forward_axis() {
        let roi = RoiConfig::default();
        // iy 16 spans y in [-0.2, 0.1): straddles y = 0
        let cluster = ShadowCluster {
            id: 0,
            cells: vec![(50, 16)],
        };
        let w = &wedges_of_cluster(&cluster, &roi, 2.5, 1)[0];
        assert!(w.az_min < 0.0 && 0.0 < w.az_max);
    }

    #[test]
    fn wedges_skip_cells_at_the_sensor() {
        let roi = RoiConfig::default();
        // cell (0, 16) has corners at x=0 straddling y=0: degenerate
        let cluster = ShadowCluster {
            id: 0,
            cells: vec![(0, 16), (50, 16)],
        };
        let wedges = wedges_of_cluster(&cluster, &roi, 2.5, 1);
        assert_eq!(wedges.len(), 1);
    }

    #[test]
    fn collect_empty_wedges() {
        let cloud = cloud_of(&[[10.0, 0.0, 0.0]]);
        assert!(collect_frustum_points(&cloud, &[]).is_empty());
    }

    #[test]
    fn collect_union_semantics() {
        let cloud = cloud_of(&[[10.0, 0.0, 0.5]]);
        let w1 = Wedge {
            az_min: -0.1,
            az_max: 0.1,
            range_min: 2.5,
            range_max: 14.0,
        };
        let w2 = Wedge {
            az_min: -0.05,
            az_max: 0.2,
            range_min: 2.5,
            range_max: 12.0,
        };
        assert_eq!(collect_frustum_points(&cloud, &[w1, w2]), vec![0]);
    }

    #[test]
    fn collect_matches_brute_force() {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(31);
        let pts: Vec<[f64; 3]> = (0..2000)
            .map(|_| {
                [
                    rng.random_range(-30.0..30.0),
                    rng.random_range(-30.0..30.0),
                    rng.random_range(-2.0..2.0),
                ]
            })
            .collect();
        let cloud = cloud_of(&pts);
        let wedges: Vec<Wedge> = (0..40)
            .map(|_| {
                let center = rng.random_range(-3.2..3.2);
                let half = rng.random_range(0.001..0.4);
                let rmin = rng.random_range(0.0..3.0);
                Wedge {
                    az_min: center - half,
                    az_max: center + half,
                    range_min: rmin,
                    range_max: rmin + rng.random_range(0.5..30.0),
                }
            })
            .collect();
        let got = collect_frustum_points(&cloud, &wedges);
        let mut want: Vec<usize> = (0..pts.len())
            .filter(|&i| wedges.iter().any(|w| point_in_wedge(pts[i], w)))
            .collect();
        want.sort_unstable();
        assert_eq!(got, want);
    }

    #[test]
    fn split_with_no_objects_is_all_residue() {
        let cloud = cloud_of(&[[10.0, 0.0, 0.0], [11.0, 0.0, 0.0]]);
        let (attributed, residue) = split_by_objects(&cloud, &[0, 1], &[]);
        assert!(attributed.is_empty());
        assert_eq!(residue, vec![0, 1]);
    }

    #[test]
    fn split_all_inside_one_box() {
        let cloud = cloud_of(&[[10.0, 0.0, 0.0], [10.5, 0.3, 0.2]]);
        let objects = vec![obj(3, [10.0, 0.0, 0.0], [4.0, 2.0, 1.5])];
        let (attributed, residue) = split_by_objects(&cloud, &[0, 1], &objects);
        assert!(residue.is_empty());
        assert_eq!(attributed.get(&3), Some(&2));
    }

    #[test]
    fn hidden_object_points_move_to_residue() {
        let cloud = cloud_of(&[[10.0, 0.0, 0.0], [10.5, 0.3, 0.2], [20.0, 2.0, 0.0]]);
        let objects = vec![obj(0, [10.0, 0.0, 0.0], [4.0, 2.0, 1.5])];
        let all = [0usize, 1, 2];
        let (attr_vis, residue_vis) = split_by_objects(&cloud, &all, &objects);
        assert_eq!(attr_vis.get(&0), Some(&2));
        assert_eq!(residue_vis, vec![2]);

        let (attr_hid, residue_hid) = split_by_objects(&cloud, &all, &[]);
        assert!(attr_hid.get(&0).is_none());
        assert_eq!(residue_hid, vec![0, 1, 2]);
        // residue growth: hiding never shrinks the residue
        assert!(residue_vis.iter().all(|i| residue_hid.contains(i)));
    }

    #[test]
    fn obstacles_from_box_face_points() {
        // 200 points on a vertical face at x = 10
        let mut pts = Vec::new();
        for i in 0..200 {
            let y = -1.0 + 2.0 * (i as f64) / 199.0;
            let z = -1.4 + 1.2 * ((i * 7) % 200) as f64 / 199.0;
            pts.push([10.0, y, z]);
        }
        let cloud = cloud_of(&pts);
        let residue: Vec<usize> = (0..200).collect();
        let cfg = PipelineConfig::default();
        let obstacles = detect_obstacles(&cloud, &residue, &cfg, -2.0);
        assert_eq!(obstacles.len(), 1);
        assert_eq!(obstacles[0].points.len(), 200);
        for &i in &obstacles[0].points {
            let p = cloud.points[i].xyz();
            for k in 0..3 {
                assert!(obstacles[0].bbox.min[k] <= p[k] && p[k] <= obstacles[0].bbox.max[k]);
            }
        }
    }

    #[test]
    fn obstacles_empty_cases() {
        let cfg = PipelineConfig::default();
        let cloud = cloud_of(&[]);
        assert!(detect_obstacles(&cloud, &[], &cfg, -2.0).is_empty());

        // sparse ground-ring points below the clearance
        let pts: Vec<[f64; 3]> = (0..50).map(|i| [5.0 + i as f64 * 0.3, 0.0, -1.9]).collect();
        let cloud = cloud_of(&pts);
        let residue: Vec<usize> = (0..50).collect();
        assert!(detect_obstacles(&cloud, &residue, &cfg, -2.0).is_empty());
    }

    #[test]
    fn short_clusters_are_dropped() {
        // dense blob with z-extent 0.1 < min_obstacle_height
        let mut pts = Vec::new();
        for i in 0..30 {
            pts.push([12.0 + (i % 6) as f64 * 0.1, (i / 6) as f64 * 0.1, -1.0 - (i % 3) as f64 * 0.05]);
        }
        let cloud = cloud_of(&pts);
        let residue: Vec<usize> = (0..30).collect();
        let cfg = PipelineConfig::default();
        assert!(detect_obstacles(&cloud, &residue, &cfg, -2.0).is_empty());
    }

    #[test]
    fn pipeline_on_empty_cloud() {
        let scene = Scene {
            scene_id: "empty".into(),
            cloud: PointCloud::default(),
            labels: vec![],
        };
        let cfg = PipelineConfig::default();
        let result = run_pipeline(&scene, &[], &cfg);
        assert_eq!(result.shadow_clusters.len(), 1);
        assert_eq!(result.shadow_clusters[0].cells.len(), 100 * 34);
        assert!(result.attributed.is_empty());
        assert!(result.obstacles.is_empty());
    }

    #[test]
    fn pipeline_is_deterministic() {
        let spec = crate::synth::SceneSpec {
            objects: vec![
                ("Car".into(), crate::geometry::OrientedBox3::new([12.0, 1.0, -0.98], [4.0, 2.0, 1.5], 0.2)),
                ("Pole".into(), crate::geometry::OrientedBox3::new([18.0, -3.0, -0.73], [0.4, 0.4, 2.0], 0.0)),
            ],
            seed: 5,
            ..Default::default()
        };
        let cfg = PipelineConfig::default();
        let scene = crate::synth::raycast_scene(&spec, &cfg.roi);
        let a = run_pipeline(&scene, &scene.labels, &cfg);
        let b = run_pipeline(&scene, &scene.labels, &cfg);
        assert!(a.same_detection(&b));
        assert_eq!(a.shadow_clusters, b.shadow_clusters);
        assert_eq!(a.obstacles, b.obstacles);
    }
}
