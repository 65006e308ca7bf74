//! Shared scene builders for the pipeline benchmarks.

use shadowscan_core::geometry::OrientedBox3;
use shadowscan_core::scene_io::Scene;
use shadowscan_core::shadow::RoiConfig;
use shadowscan_core::synth::{raycast_scene, ScanMode, ScanPattern, SceneSpec};

/// A 64-beam spin at 0.2 degree azimuth steps: ~115k rays, matching a typical
/// automotive scan size.
pub fn beams_scene(seed: u64, cars: usize) -> Scene {
    let objects = (0..cars)
        .map(|i| {
            let x = 8.0 + 4.5 * i as f64;
            let y = if i % 2 == 0 { 2.8 } else { -2.8 };
            (
                "Car".to_string(),
                OrientedBox3::new([x, y, -0.98], [4.0, 2.0, 1.5], 0.0),
            )
        })
        .collect();
    let spec = SceneSpec {
        objects,
        seed,
        scan: ScanPattern {
            mode: ScanMode::Beams,
            ..ScanPattern::default()
        },
        ..Default::default()
    };
    raycast_scene(&spec, &RoiConfig::default())
}

/// Dense ground lattice scene used by the oracle-driven tests.
pub fn dense_scene(seed: u64, cars: usize) -> Scene {
    let objects = (0..cars)
        .map(|i| {
            let x = 8.0 + 5.0 * i as f64;
            let y = if i % 2 == 0 { 2.8 } else { -2.8 };
            (
                "Car".to_string(),
                OrientedBox3::new([x, y, -0.98], [4.0, 2.0, 1.5], 0.0),
            )
        })
        .collect();
    let spec = SceneSpec {
        objects,
        seed,
        ..Default::default()
    };
    raycast_scene(&spec, &RoiConfig::default())
}
