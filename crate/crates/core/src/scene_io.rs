//! KITTI-format scene ingest: velodyne binary scans, calibration files, and
//! object labels, with labels transformed from the rectified camera frame into
//! the sensor frame (x forward, y left, z up, origin at the LiDAR unit).
//!
//! All parsers are pure functions over immutable inputs and may run on many
//! scenes concurrently.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

use crate::geometry::{normalize_angle, OrientedBox3};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("malformed input at line {line}: {msg}")]
    MalformedLine { line: usize, msg: String },
    #[error("i/o error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One LiDAR return. Stored as f32 to match the on-disk record exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointXyzi {
    pub x: f32,
    pub y: f32,
    pub z: f32,
    pub intensity: f32,
}

impl PointXyzi {
    pub fn xyz(&self) -> [f64; 3] {
        [self.x as f64, self.y as f64, self.z as f64]
    }
}

/// Flat point-cloud measurement in the sensor frame. `rejected` counts
/// non-finite records dropped at parse time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<PointXyzi>,
    pub rejected: usize,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// KITTI calibration: LiDAR-to-camera rigid transform plus the rectification
/// rotation applied to camera coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    /// Rotation part of Tr_velo_to_cam.
    pub velo_to_cam_r: Matrix3<f64>,
    /// Translation part of Tr_velo_to_cam.
    pub velo_to_cam_t: Vector3<f64>,
    /// R0_rect rectification rotation.
    pub rect: Matrix3<f64>,
}

impl Calibration {
    /// Calibration whose camera frame equals the sensor frame.
    pub fn identity() -> Self {
        Self {
            velo_to_cam_r: Matrix3::identity(),
            velo_to_cam_t: Vector3::zeros(),
            rect: Matrix3::identity(),
        }
    }

    /// The standard KITTI axis relation with no offset: camera x right = -y,
    /// camera y down = -z, camera z forward = x.
    pub fn standard() -> Self {
        Self {
            velo_to_cam_r: Matrix3::new(0.0, -1.0, 0.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0),
            velo_to_cam_t: Vector3::zeros(),
            rect: Matrix3::identity(),
        }
    }

    fn validate(&self) -> Result<(), SceneError> {
        for (name, m) in [("Tr_velo_to_cam", &self.velo_to_cam_r), ("R0_rect", &self.rect)] {
            let err = (m.transpose() * m - Matrix3::identity()).norm();
            if err > 1e-4 {
                return Err(SceneError::Malformed(format!(
                    "{name} rotation part is not orthonormal (frobenius deviation {err:.2e})"
                )));
            }
        }
        if self.velo_to_cam_r.try_inverse().is_none() {
            return Err(SceneError::Malformed(
                "Tr_velo_to_cam is not invertible".into(),
            ));
        }
        Ok(())
    }

    /// Rectified-camera point -> sensor (velodyne) frame.
    pub fn sensor_from_camera(&self, p_cam: Vector3<f64>) -> Vector3<f64> {
        let rect_inv = self.rect.try_inverse().expect("validated at parse");
        let r_inv = self.velo_to_cam_r.try_inverse().expect("validated at parse");
        r_inv * (rect_inv * p_cam - self.velo_to_cam_t)
    }

    /// Sensor (velodyne) point -> rectified-camera frame.
    pub fn camera_from_sensor(&self, p: Vector3<f64>) -> Vector3<f64> {
        self.rect * (self.velo_to_cam_r * p + self.velo_to_cam_t)
    }
}

/// A ground-truth object in the sensor frame.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledObject {
    /// Scene-unique id, assigned in label-file order.
    pub id: u32,
    pub class_name: String,
    pub bbox: OrientedBox3,
}

/// A complete scene: one scan plus its labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    pub cloud: PointCloud,
    pub labels: Vec<LabeledObject>,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Treat a missing label file as an empty label set.
    pub allow_unlabeled: bool,
    /// Keep only these classes when set. DontCare is always dropped.
    pub class_filter: Option<BTreeSet<String>>,
}

const VELODYNE_RECORD: usize = 16;

/// Parses a velodyne binary scan: N records of four little-endian f32
/// (x, y, z, intensity). Records with non-finite coordinates are dropped and
/// counted in `rejected`.
pub fn parse_velodyne(bytes: &[u8]) -> Result<PointCloud, SceneError> {
    if bytes.len() % VELODYNE_RECORD != 0 {
        return Err(SceneError::Malformed(format!(
            "velodyne byte length {} is not a multiple of {VELODYNE_RECORD}",
            bytes.len()
        )));
    }
    let mut cloud = PointCloud {
        points: Vec::with_capacity(bytes.len() / VELODYNE_RECORD),
        rejected: 0,
    };
    for rec in bytes.chunks_exact(VELODYNE_RECORD) {
        let f = |i: usize| f32::from_le_bytes([rec[i], rec[i + 1], rec[i + 2], rec[i + 3]]);
        let p = PointXyzi {
            x: f(0),
            y: f(4),
            z: f(8),
            intensity: f(12),
        };
        if p.x.is_finite() && p.y.is_finite() && p.z.is_finite() {
            cloud.points.push(p);
        } else {
            cloud.rejected += 1;
        }
    }
    if cloud.rejected > 0 {
        log::warn!("dropped {} non-finite velodyne records", cloud.rejected);
    }
    Ok(cloud)
}

/// Serializes a point cloud back to the velodyne binary layout.
pub fn cloud_to_bytes(cloud: &PointCloud) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.points.len() * VELODYNE_RECORD);
    for p in &cloud.points {
        out.extend_from_slice(&p.x.to_le_bytes());
        out.extend_from_slice(&p.y.to_le_bytes());
        out.extend_from_slice(&p.z.to_le_bytes());
        out.extend_from_slice(&p.intensity.to_le_bytes());
    }
    out
}

/// Parses a KITTI calib file. Requires Tr_velo_to_cam (12 values) and R0_rect
/// (9 values); other keys are ignored.
pub fn parse_calib(text: &str) -> Result<Calibration, SceneError> {
    let mut velo_to_cam: Option<Vec<f64>> = None;
    let mut rect: Option<Vec<f64>> = None;
    for line in text.lines() {
        let Some((key, rest)) = line.split_once(':') else {
            continue;
        };
        let key = key.trim();
        if key != "Tr_velo_to_cam" && key != "R0_rect" {
            continue;
        }
        let vals: Result<Vec<f64>, _> = rest.split_whitespace().map(str::parse::<f64>).collect();
        let vals = vals.map_err(|e| {
            SceneError::Malformed(format!("bad float in calib key {key}: {e}"))
        })?;
        let expect = if key == "Tr_velo_to_cam" { 12 } else { 9 };
        if vals.len() != expect {
            return Err(SceneError::Malformed(format!(
                "calib key {key} has {} values, expected {expect}",
                vals.len()
            )));
        }
        if key == "Tr_velo_to_cam" {
            velo_to_cam = Some(vals);
        } else {
            rect = Some(vals);
        }
    }
    let tr = velo_to_cam
        .ok_or_else(|| SceneError::Malformed("calib is missing Tr_velo_to_cam".into()))?;
    let r0 = rect.ok_or_else(|| SceneError::Malformed("calib is missing R0_rect".into()))?;
    let calib = Calibration {
        velo_to_cam_r: Matrix3::new(tr[0], tr[1], tr[2], tr[4], tr[5], tr[6], tr[8], tr[9], tr[10]),
        velo_to_cam_t: Vector3::new(tr[3], tr[7], tr[11]),
        rect: Matrix3::from_row_slice(&r0),
    };
    calib.validate()?;
    Ok(calib)
}

/// Renders a calibration back to the KITTI text layout.
pub fn calib_to_text(calib: &Calibration) -> String {
    let mut s = String::new();
    let r = &calib.velo_to_cam_r;
    let t = &calib.velo_to_cam_t;
    let _ = write!(s, "Tr_velo_to_cam:");
    for row in 0..3 {
        for col in 0..3 {
            let _ = write!(s, " {}", r[(row, col)]);
        }
        let _ = write!(s, " {}", t[row]);
    }
    s.push('\n');
    let _ = write!(s, "R0_rect:");
    for row in 0..3 {
        for col in 0..3 {
            let _ = write!(s, " {}", calib.rect[(row, col)]);
        }
    }
    s.push('\n');
    s
}

/// Parses a KITTI object-label file into sensor-frame objects. DontCare lines
/// are dropped; ids are assigned sequentially over the kept lines.
pub fn parse_labels(text: &str, calib: &Calibration) -> Result<Vec<LabeledObject>, SceneError> {
    parse_labels_filtered(text, calib, None)
}

pub fn parse_labels_filtered(
    text: &str,
    calib: &Calibration,
    class_filter: Option<&BTreeSet<String>>,
) -> Result<Vec<LabeledObject>, SceneError> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        // 15 ground-truth fields; a trailing detector score is tolerated
        if fields.len() != 15 && fields.len() != 16 {
            return Err(SceneError::MalformedLine {
                line: lineno + 1,
                msg: format!("expected 15 label fields, found {}", fields.len()),
            });
        }
        let class_name = fields[0];
        if class_name == "DontCare" {
            continue;
        }
        if let Some(filter) = class_filter {
            if !filter.contains(class_name) {
                continue;
            }
        }
        let num = |i: usize| -> Result<f64, SceneError> {
            fields[i].parse::<f64>().map_err(|e| SceneError::MalformedLine {
                line: lineno + 1,
                msg: format!("field {i}: {e}"),
            })
        };
        let (h, w, l) = (num(8)?, num(9)?, num(10)?);
        if h <= 0.0 || w <= 0.0 || l <= 0.0 {
            return Err(SceneError::MalformedLine {
                line: lineno + 1,
                msg: format!("non-positive box dimensions h={h} w={w} l={l}"),
            });
        }
        let loc_cam = Vector3::new(num(11)?, num(12)?, num(13)?);
        let rotation_y = num(14)?;
        // label location is the bottom center of the box in rectified camera
        // coordinates; lift it to the box center after mapping
        let bottom = calib.sensor_from_camera(loc_cam);
        let center = [bottom.x, bottom.y, bottom.z + h / 2.0];
        let yaw = normalize_angle(-rotation_y - std::f64::consts::FRAC_PI_2);
        out.push(LabeledObject {
            id: out.len() as u32,
            class_name: class_name.to_string(),
            bbox: OrientedBox3::new(center, [l, w, h], yaw),
        });
    }
    Ok(out)
}

/// Renders one sensor-frame object as a KITTI label line (image-plane fields
/// zeroed, since no camera is involved).
pub fn label_line(obj: &LabeledObject, calib: &Calibration) -> String {
    let [l, w, h] = obj.bbox.dims;
    let bottom = Vector3::new(
        obj.bbox.center[0],
        obj.bbox.center[1],
        obj.bbox.center[2] - h / 2.0,
    );
    let loc = calib.camera_from_sensor(bottom);
    let ry = normalize_angle(-obj.bbox.yaw - std::f64::consts::FRAC_PI_2);
    format!(
        "{} 0 0 0 0 0 50 50 {} {} {} {} {} {} {}",
        obj.class_name, h, w, l, loc.x, loc.y, loc.z, ry
    )
}

fn read_file(path: &Path) -> Result<Vec<u8>, SceneError> {
    std::fs::read(path).map_err(|source| SceneError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn read_text(path: &Path) -> Result<String, SceneError> {
    String::from_utf8(read_file(path)?)
        .map_err(|e| SceneError::Malformed(format!("{}: not utf-8: {e}", path.display())))
}

/// Loads a complete scene from a KITTI velodyne/label/calib triple. Either
/// all parts parse or an error is returned; there is no partial scene.
pub fn load_scene(
    velodyne_path: &Path,
    label_path: &Path,
    calib_path: &Path,
    scene_id: &str,
    options: &LoadOptions,
) -> Result<Scene, SceneError> {
    let cloud = parse_velodyne(&read_file(velodyne_path)?)?;
    let calib = parse_calib(&read_text(calib_path)?)?;
    let labels = if !label_path.exists() && options.allow_unlabeled {
        Vec::new()
    } else {
        parse_labels_filtered(
            &read_text(label_path)?,
            &calib,
            options.class_filter.as_ref(),
        )?
    };
    Ok(Scene {
        scene_id: scene_id.to_string(),
        cloud,
        labels,
    })
}
