//! Attack emulation and synthetic scene generation.
//!
//! Object hiding attacks leave the point cloud untouched and only remove the
//! target's label from the detector output, so they are emulated by label
//! removal. The ray-cast generator produces scenes with a matching analytic
//! shadow oracle, giving the pipeline tests an independent ground truth.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::geometry::OrientedBox3;
use crate::scene_io::{LabeledObject, PointCloud, PointXyzi, Scene};
use crate::shadow::{cell_center, RoiConfig};

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("unknown object id {0}")]
    UnknownId(u32),
    #[error("invalid scene spec: {0}")]
    InvalidSpec(String),
}

/// Ids of objects the emulated attacker hides.
pub type HiddenSet = BTreeSet<u32>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScanMode {
    /// Spinning-beam emulation: fixed elevations swept over azimuth.
    Beams,
    /// Ground-plane lattice sampling dense enough that every RoI cell gets a
    /// return unless occluded. Used for oracle-based verification.
    DenseGround,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPattern {
    pub mode: ScanMode,
    pub azimuth_step_deg: f64,
    pub elevations_deg: Vec<f64>,
    pub max_range: f64,
    pub ground_grid_step: f64,
    /// Gaussian range noise sigma in meters; zero disables noise.
    pub noise_sigma: f64,
}

impl ScanPattern {
    pub fn beams() -> Self {
        Self {
            mode: ScanMode::Beams,
            ..Self::default()
        }
    }

    pub fn dense_ground() -> Self {
        Self::default()
    }
}

impl Default for ScanPattern {
    fn default() -> Self {
        let n = 64;
        let (lo, hi) = (-24.8, 2.0);
        let elevations_deg = (0..n)
            .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
            .collect();
        Self {
            mode: ScanMode::DenseGround,
            azimuth_step_deg: 0.2,
            elevations_deg,
            max_range: 80.0,
            ground_grid_step: 0.1,
            noise_sigma: 0.01,
        }
    }
}

/// A synthetic scene: boxes standing on a flat ground plane, observed from a
/// sensor at the origin. `ground_z` is the plane height in the sensor frame
/// (so `sensor_height` above it means `ground_z = -sensor_height`).
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub objects: Vec<(String, OrientedBox3)>,
    pub ground_z: f64,
    pub sensor_height: f64,
    pub scan: ScanPattern,
    pub seed: u64,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            objects: Vec::new(),
            ground_z: -1.73,
            sensor_height: 1.73,
            scan: ScanPattern::default(),
            seed: 0,
        }
    }
}

impl SceneSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.scan.azimuth_step_deg <= 0.0 {
            return Err(SynthError::InvalidSpec("azimuth_step must be positive".into()));
        }
        if self.scan.mode == ScanMode::Beams && self.scan.elevations_deg.is_empty() {
            return Err(SynthError::InvalidSpec("beams mode needs elevations".into()));
        }
        if self.scan.ground_grid_step <= 0.0 || self.scan.max_range <= 0.0 {
            return Err(SynthError::InvalidSpec("scan steps must be positive".into()));
        }
        if (self.ground_z + self.sensor_height).abs() > 1e-6 {
            return Err(SynthError::InvalidSpec(format!(
                "sensor_height {} and ground_z {} disagree (sensor sits at the origin)",
                self.sensor_height, self.ground_z
            )));
        }
        for (name, b) in &self.objects {
            let bottom = b.center[2] - b.dims[2] / 2.0;
            if bottom < self.ground_z - 1e-6 {
                return Err(SynthError::InvalidSpec(format!(
                    "object {name} extends below ground ({bottom} < {})",
                    self.ground_z
                )));
            }
            if b.dims.iter().any(|d| *d <= 0.0) {
                return Err(SynthError::InvalidSpec(format!("object {name} has non-positive dims")));
            }
        }
        Ok(())
    }
}

/// Removes the hidden labels, leaving everything else (the point cloud in
/// particular) untouched.
pub fn hide_objects(
    labels: &[LabeledObject],
    hidden: &HiddenSet,
) -> Result<Vec<LabeledObject>, SynthError> {
    for id in hidden {
        if !labels.iter().any(|l| l.id == *id) {
            return Err(SynthError::UnknownId(*id));
        }
    }
    Ok(labels
        .iter()
        .filter(|l| !hidden.contains(&l.id))
        .cloned()
        .collect())
}

/// Parametric ray/segment vs oriented box: returns the entry and exit
/// parameters when the line o + t*d crosses the box, intersected with t >= 0.
fn ray_box(o: [f64; 3], d: [f64; 3], b: &OrientedBox3) -> Option<(f64, f64)> {
    let (s, c) = b.yaw.sin_cos();
    let rel = [o[0] - b.center[0], o[1] - b.center[1], o[2] - b.center[2]];
    let lo = [c * rel[0] + s * rel[1], -s * rel[0] + c * rel[1], rel[2]];
    let ld = [c * d[0] + s * d[1], -s * d[0] + c * d[1], d[2]];
    let half = [b.dims[0] / 2.0, b.dims[1] / 2.0, b.dims[2] / 2.0];
    let mut t_enter = 0.0f64;
    let mut t_exit = f64::INFINITY;
    for k in 0..3 {
        if ld[k].abs() < 1e-15 {
            if lo[k].abs() > half[k] {
                return None;
            }
            continue;
        }
        let mut t0 = (-half[k] - lo[k]) / ld[k];
        let mut t1 = (half[k] - lo[k]) / ld[k];
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        t_enter = t_enter.max(t0);
        t_exit = t_exit.min(t1);
        if t_enter > t_exit {
            return None;
        }
    }
    Some((t_enter, t_exit))
}

/// First box hit along o + t*d with t in (0, t_max), if any.
fn nearest_box_hit(
    o: [f64; 3],
    d: [f64; 3],
    t_max: f64,
    boxes: &[(String, OrientedBox3)],
) -> Option<f64> {
    let mut best: Option<f64> = None;
    for (_, b) in boxes {
        if let Some((t_enter, _)) = ray_box(o, d, b) {
            if t_enter > 0.0 && t_enter < t_max && best.is_none_or(|cur| t_enter < cur) {
                best = Some(t_enter);
            }
        }
    }
    best
}

/// Generates a scene by casting rays against the ground plane and the spec's
/// boxes. Beams mode orders points azimuth-major then by elevation; dense
/// mode walks the ground lattice row-major over `roi`. Gaussian range noise
/// is applied per emitted point from the spec's seed, so output is a pure
/// function of (spec, roi).
pub fn raycast_scene(spec: &SceneSpec, roi: &RoiConfig) -> Scene {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = if spec.scan.noise_sigma > 0.0 {
        Some(Normal::new(0.0, spec.scan.noise_sigma).expect("sigma checked positive"))
    } else {
        None
    };
    let origin = [0.0, 0.0, 0.0];
    let mut points: Vec<PointXyzi> = Vec::new();
    let mut emit = |p: [f64; 3], dir: [f64; 3], dir_norm: f64, intensity: f32, rng: &mut ChaCha8Rng| {
        let dt = noise.map_or(0.0, |n| n.sample(rng)) / dir_norm;
        points.push(PointXyzi {
            x: (p[0] + dt * dir[0]) as f32,
            y: (p[1] + dt * dir[1]) as f32,
            z: (p[2] + dt * dir[2]) as f32,
            intensity,
        });
    };

    match spec.scan.mode {
        ScanMode::Beams => {
            let n_az = (360.0 / spec.scan.azimuth_step_deg).round() as usize;
            for i_az in 0..n_az {
                let az = (i_az as f64 * spec.scan.azimuth_step_deg).to_radians();
                for el_deg in &spec.scan.elevations_deg {
                    let el = el_deg.to_radians();
                    let dir = [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()];
                    let t_ground = if dir[2] < -1e-12 {
                        spec.ground_z / dir[2]
                    } else {
                        f64::INFINITY
                    };
                    let t_box = nearest_box_hit(origin, dir, f64::INFINITY, &spec.objects);
                    let (t, intensity) = match t_box {
                        Some(tb) if tb < t_ground => (tb, 0.8),
                        _ => (t_ground, 0.2),
                    };
                    if t.is_finite() && t <= spec.scan.max_range {
                        let p = [t * dir[0], t * dir[1], t * dir[2]];
                        emit(p, dir, 1.0, intensity, &mut rng);
                    }
                }
            }
        }
        ScanMode::DenseGround => {
            let step = spec.scan.ground_grid_step;
            let nx = ((roi.x_max - roi.x_min) / step).ceil() as usize;
            let ny = (2.0 * roi.y_half_width / step).ceil() as usize;
            for ix in 0..nx {
                let x = roi.x_min + (ix as f64 + 0.5) * step;
                for iy in 0..ny {
                    let y = -roi.y_half_width + (iy as f64 + 0.5) * step;
                    let g = [x, y, spec.ground_z];
                    let dir = g; // segment origin -> g, t in [0, 1]
                    let dir_norm = (dir[0] * dir[0] + dir[1] * dir[1] + dir[2] * dir[2]).sqrt();
                    if dir_norm > spec.scan.max_range {
                        continue;
                    }
                    match nearest_box_hit(origin, dir, 1.0, &spec.objects) {
                        Some(t) => {
                            let p = [t * dir[0], t * dir[1], t * dir[2]];
                            emit(p, dir, dir_norm, 0.8, &mut rng);
                        }
                        None => emit(g, dir, dir_norm, 0.2, &mut rng),
                    }
                }
            }
        }
    }

    let labels = spec
        .objects
        .iter()
        .enumerate()
        .map(|(i, (class_name, bbox))| LabeledObject {
            id: i as u32,
            class_name: class_name.clone(),
            bbox: *bbox,
        })
        .collect();
    Scene {
        scene_id: format!("synth-{:08}", spec.seed),
        cloud: PointCloud {
            points,
            rejected: 0,
        },
        labels,
    }
}

/// Analytic shadow ground truth: a cell is shadowed iff the segment from the
/// sensor to the cell-center ground point crosses some object box strictly
/// before reaching the ground.
pub fn oracle_shadow_cells(spec: &SceneSpec, roi: &RoiConfig) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for ix in 0..roi.nx() {
        for iy in 0..roi.ny() {
            let c = cell_center(ix, iy, roi);
            let g = [c[0], c[1], spec.ground_z];
            if nearest_box_hit([0.0, 0.0, 0.0], g, 1.0 - 1e-12, &spec.objects).is_some() {
                out.insert((ix, iy));
            }
        }
    }
    out
}

/// Distance from a point to the surface of an oriented box (0 on the surface,
/// positive outside and inside).
pub fn box_surface_distance(p: [f64; 3], b: &OrientedBox3) -> f64 {
    let (s, c) = b.yaw.sin_cos();
    let rel = [p[0] - b.center[0], p[1] - b.center[1], p[2] - b.center[2]];
    let l = [c * rel[0] + s * rel[1], -s * rel[0] + c * rel[1], rel[2]];
    let half = [b.dims[0] / 2.0, b.dims[1] / 2.0, b.dims[2] / 2.0];
    let d = [l[0].abs() - half[0], l[1].abs() - half[1], l[2].abs() - half[2]];
    let outside = (0..3)
        .map(|k| d[k].max(0.0).powi(2))
        .sum::<f64>()
        .sqrt();
    if outside > 0.0 {
        outside
    } else {
        // inside: distance to the nearest face
        -d.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }
}
