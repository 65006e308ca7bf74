//! Obstacle detection from 3D shadows in LiDAR point clouds.
//!
//! Opaque objects occlude LiDAR pulses and leave void regions ("shadows") in
//! the measured cloud. An object hidden from a 3D object detector still casts
//! its shadow, so the shadow is usable as a physical invariant: this crate
//! searches a front-near region of interest for void regions, attributes them
//! to known objects by tracing wedges back to the sensor, and flags the
//! leftovers as unidentified obstacles — candidate object-hiding attacks.
//!
//! The stages, in order:
//!
//! 1. [`shadow::extract_slab`] — thin ground-level volume of the RoI
//! 2. [`shadow::occupancy_grid`] — 0.3 m cell lattice, occupancy checked
//! 3. [`shadow::find_shadow_clusters`] — DBSCAN over empty cells
//! 4. [`pipeline::wedges_of_cluster`] — sensor-facing wedges per shadow cell
//! 5. [`pipeline::collect_frustum_points`] / [`pipeline::split_by_objects`] —
//!    attribute wedge contents to detected objects
//! 6. [`pipeline::detect_obstacles`] — cluster the residue, box the clusters
//!
//! [`eval`] reproduces the evaluation protocol (matching accuracy, BEV IoU,
//! nearest-edge distance, runtime); [`synth`] emulates object-hiding attacks
//! by label removal and generates ray-cast scenes with an analytic shadow
//! oracle for verification.

pub mod clustering;
pub mod eval;
pub mod geometry;
pub mod pipeline;
pub mod scene_io;
pub mod shadow;
pub mod synth;

pub use clustering::{dbscan, ClusterLabels, DbscanParams, Metric};
pub use eval::{evaluate_dataset, match_scene, HiddenPolicy, Metrics, SceneEntry};
pub use geometry::{bev_iou, nearest_edge_distance, Aabb3, OrientedBox3, Wedge};
pub use pipeline::{run_pipeline, DetectionResult, Obstacle, PipelineConfig};
pub use scene_io::{Calibration, LabeledObject, PointCloud, Scene};
pub use shadow::{OccupancyGrid, RoiConfig, ShadowCluster};
pub use synth::{hide_objects, oracle_shadow_cells, raycast_scene, SceneSpec};
