//! Shadow-region search: extract the ground slab inside the region of
//! interest, rasterize it into an occupancy grid of cubic cells, and cluster
//! the empty cells into shadow candidates.

use thiserror::Error;

use crate::clustering::{dbscan, DbscanParams};
use crate::scene_io::PointCloud;

#[derive(Debug, Error, PartialEq)]
pub enum GridError {
    #[error("cell index ({0}, {1}) outside grid {2}x{3}")]
    IndexOutOfRange(usize, usize, usize, usize),
}

/// How the slab's vertical placement is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GroundMode {
    /// Use `slab_z_min`/`slab_z_max` as configured.
    #[default]
    Fixed,
    /// Re-center the slab on the 2nd percentile of z over RoI points, keeping
    /// the configured thickness. For sloped or non-standard sensor heights.
    Percentile,
}

/// Region-of-interest and discretization parameters. Defaults follow the
/// front-near region: 30 m long, 10 m wide, 0.3 m cubic cells, with the slab
/// bracketing the ground for a sensor about 1.73 m above it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoiConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub y_half_width: f64,
    pub cell: f64,
    pub slab_z_min: f64,
    pub slab_z_max: f64,
    pub ground_mode: GroundMode,
}

impl Default for RoiConfig {
    fn default() -> Self {
        Self {
            x_min: 0.0,
            x_max: 30.0,
            y_half_width: 5.0,
            cell: 0.3,
            slab_z_min: -2.0,
            slab_z_max: -1.4,
            ground_mode: GroundMode::Fixed,
        }
    }
}

impl RoiConfig {
    pub fn nx(&self) -> usize {
        ((self.x_max - self.x_min) / self.cell).ceil() as usize
    }

    pub fn ny(&self) -> usize {
        (2.0 * self.y_half_width / self.cell).ceil() as usize
    }

    /// Whether a BEV position lies inside the RoI rectangle (half-open upper
    /// bounds, like the cell lattice).
    pub fn contains_bev(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x < self.x_max && y >= -self.y_half_width && y < self.y_half_width
    }
}

/// The ground slab: RoI points inside the vertical band, plus the effective
/// band actually used (percentile mode shifts it).
#[derive(Debug, Clone, PartialEq)]
pub struct Slab {
    pub points: Vec<[f64; 3]>,
    pub z_min: f64,
    pub z_max: f64,
}

/// Boolean cell lattice over the RoI.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    pub nx: usize,
    pub ny: usize,
    pub occupied: Vec<bool>,
    pub roi: RoiConfig,
}

impl OccupancyGrid {
    pub fn is_occupied(&self, ix: usize, iy: usize) -> bool {
        self.occupied[ix * self.ny + iy]
    }

    pub fn empty_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for ix in 0..self.nx {
            for iy in 0..self.ny {
                if !self.occupied[ix * self.ny + iy] {
                    out.push((ix, iy));
                }
            }
        }
        out
    }
}

/// One void region: a connected set of empty cells.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowCluster {
    pub id: u32,
    /// Cell indices, sorted ascending by (ix, iy).
    pub cells: Vec<(usize, usize)>,
}

/// Extracts the thin ground-level volume of the cloud inside the RoI.
///
/// Bounds are half-open ([lo, hi)) so that cell assignment partitions space.
/// In percentile mode the slab is re-centered so its bottom sits half a cell
/// below the 2nd percentile of z over all RoI points.
pub fn extract_slab(cloud: &PointCloud, roi: &RoiConfig) -> Slab {
    let (z_min, z_max) = match roi.ground_mode {
        GroundMode::Fixed => (roi.slab_z_min, roi.slab_z_max),
        GroundMode::Percentile => {
            let mut zs: Vec<f64> = cloud
                .points
                .iter()
                .map(|p| p.xyz())
                .filter(|p| roi.contains_bev(p[0], p[1]))
                .map(|p| p[2])
                .collect();
            if zs.is_empty() {
                (roi.slab_z_min, roi.slab_z_max)
            } else {
                zs.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
                let p2 = zs[(zs.len() * 2 / 100).min(zs.len() - 1)];
                let z_min = p2 - roi.cell / 2.0;
                (z_min, z_min + (roi.slab_z_max - roi.slab_z_min))
            }
        }
    };
    let points = cloud
        .points
        .iter()
        .map(|p| p.xyz())
        .filter(|p| roi.contains_bev(p[0], p[1]) && p[2] >= z_min && p[2] < z_max)
        .collect();
    Slab {
        points,
        z_min,
        z_max,
    }
}

/// Rasterizes slab points into the occupancy lattice.
pub fn occupancy_grid(slab: &Slab, roi: &RoiConfig) -> OccupancyGrid {
    let (nx, ny) = (roi.nx(), roi.ny());
    let mut occupied = vec![false; nx * ny];
    for p in &slab.points {
        let ix = ((p[0] - roi.x_min) / roi.cell).floor() as usize;
        let iy = ((p[1] + roi.y_half_width) / roi.cell).floor() as usize;
        debug_assert!(ix < nx && iy < ny, "slab point outside its own RoI");
        if ix < nx && iy < ny {
            occupied[ix * ny + iy] = true;
        }
    }
    OccupancyGrid {
        nx,
        ny,
        occupied,
        roi: *roi,
    }
}

/// Clusters the grid's empty cells into shadow candidates. Clusters smaller
/// than `min_cells` are discarded as speckle; survivors are renumbered in
/// ascending (min ix, min iy) order.
pub fn find_shadow_clusters(
    grid: &OccupancyGrid,
    params: &DbscanParams,
    min_cells: usize,
) -> Vec<ShadowCluster> {
    let empty = grid.empty_cells();
    let items: Vec<[f64; 3]> = empty
        .iter()
        .map(|&(ix, iy)| [ix as f64, iy as f64, 0.0])
        .collect();
    let labels = dbscan(&items, params);
    let mut clusters: Vec<Vec<(usize, usize)>> = vec![Vec::new(); labels.num_clusters()];
    for (i, a) in labels.assignment.iter().enumerate() {
        if let Some(c) = a {
            clusters[*c as usize].push(empty[i]);
        }
    }
    let mut kept: Vec<Vec<(usize, usize)>> = clusters
        .into_iter()
        .filter(|c| c.len() >= min_cells)
        .collect();
    for c in kept.iter_mut() {
        c.sort_unstable();
    }
    kept.sort_by_key(|c| {
        let min_ix = c.iter().map(|&(ix, _)| ix).min().unwrap();
        let min_iy = c.iter().map(|&(_, iy)| iy).min().unwrap();
        (min_ix, min_iy)
    });
    kept.into_iter()
        .enumerate()
        .map(|(id, cells)| ShadowCluster {
            id: id as u32,
            cells,
        })
        .collect()
}

/// BEV corners of one grid cell, counter-clockwise.
pub fn cell_footprint(
    ix: usize,
    iy: usize,
    roi: &RoiConfig,
) -> Result<[[f64; 2]; 4], GridError> {
    if ix >= roi.nx() || iy >= roi.ny() {
        return Err(GridError::IndexOutOfRange(ix, iy, roi.nx(), roi.ny()));
    }
    let x0 = roi.x_min + ix as f64 * roi.cell;
    let y0 = -roi.y_half_width + iy as f64 * roi.cell;
    let (x1, y1) = (x0 + roi.cell, y0 + roi.cell);
    Ok([[x1, y1], [x0, y1], [x0, y0], [x1, y0]])
}

/// BEV center of one grid cell.
pub fn cell_center(ix: usize, iy: usize, roi: &RoiConfig) -> [f64; 2] {
    [
        roi.x_min + (ix as f64 + 0.5) * roi.cell,
        -roi.y_half_width + (iy as f64 + 0.5) * roi.cell,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::Metric;
    use crate::scene_io::PointXyzi;

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

    fn cell_params() -> DbscanParams {
        DbscanParams::new(1.0, 3, Metric::ChebyshevGrid)
    }

    #[test]
    fn default_grid_dimensions() {
        let roi = RoiConfig::default();
        assert_eq!(roi.nx(), 100);
        assert_eq!(roi.ny(), 34);
    }

    #[test]
    fn slab_bounds() {
        let roi = RoiConfig::default();
        let cloud = cloud_of(&[
            [15.0, 0.05, -1.7], // inside
            [15.0, 0.05, 0.0],  // above slab
            [31.0, 0.0, -1.7],  // beyond x_max
            [15.0, 5.0, -1.7],  // y at the open upper bound
            [15.0, -5.0, -1.7], // y at the closed lower bound
        ]);
        let slab = extract_slab(&cloud, &roi);
        assert_eq!(slab.points.len(), 2);
        assert_eq!(slab.z_min, roi.slab_z_min);
    }

    #[test]
    fn slab_percentile_recenters() {
        let mut roi = RoiConfig {
            ground_mode: GroundMode::Percentile,
            ..Default::default()
        };
        // ground sits at -1.0, far outside the configured fixed band
        let pts: Vec<[f64; 3]> = (0..100)
            .map(|i| [5.0 + (i as f64) * 0.2, 0.0, -1.0])
            .collect();
        let slab = extract_slab(&cloud_of(&pts), &roi);
        assert!((slab.z_min - (-1.0 - 0.15)).abs() < 1e-9);
        assert!((slab.z_max - slab.z_min - 0.6).abs() < 1e-9);
        assert_eq!(slab.points.len(), pts.iter().filter(|p| p[0] < 25.0).count());

        // empty RoI falls back to the fixed band
        roi.ground_mode = GroundMode::Percentile;
        let slab = extract_slab(&cloud_of(&[]), &roi);
        assert_eq!(slab.z_min, roi.slab_z_min);
    }

    #[test]
    fn occupancy_single_point_cell() {
        let roi = RoiConfig::default();
        let slab = extract_slab(&cloud_of(&[[15.1, 0.05, -1.7]]), &roi);
        let grid = occupancy_grid(&slab, &roi);
        assert!(grid.is_occupied(50, 16));
        assert_eq!(grid.occupied.iter().filter(|&&b| b).count(), 1);
    }

    #[test]
    fn occupancy_empty_and_idempotent() {
        let roi = RoiConfig::default();
        let grid = occupancy_grid(&extract_slab(&cloud_of(&[]), &roi), &roi);
        assert_eq!(grid.occupied.iter().filter(|&&b| b).count(), 0);
        assert_eq!(grid.occupied.len(), 100 * 34);

        let slab = extract_slab(
            &cloud_of(&[[15.1, 0.05, -1.7], [15.12, 0.06, -1.75]]),
            &roi,
        );
        let grid = occupancy_grid(&slab, &roi);
        assert_eq!(grid.occupied.iter().filter(|&&b| b).count(), 1);
    }

    #[test]
    fn adding_points_never_clears_cells() {
        let roi = RoiConfig::default();
        let base = vec![[10.0, 1.0, -1.7], [20.0, -2.0, -1.6]];
        let grid_a = occupancy_grid(&extract_slab(&cloud_of(&base), &roi), &roi);
        let mut more = base.clone();
        more.push([12.0, 0.0, -1.5]);
        more.push([10.0, 1.02, -1.71]);
        let grid_b = occupancy_grid(&extract_slab(&cloud_of(&more), &roi), &roi);
        for i in 0..grid_a.occupied.len() {
            assert!(!grid_a.occupied[i] || grid_b.occupied[i]);
        }
    }

    /// A cell-center point, nudged inside the RoI bounds for the boundary
    /// cells that overhang them (ceil rounding makes the lattice slightly
    /// wider than the RoI).
    fn occupant(ix: usize, iy: usize, roi: &RoiConfig) -> [f64; 3] {
        let c = cell_center(ix, iy, roi);
        [
            c[0].min(roi.x_max - 1e-6),
            c[1].min(roi.y_half_width - 1e-6),
            -1.7,
        ]
    }

    #[test]
    fn fully_occupied_grid_has_no_clusters() {
        let roi = RoiConfig::default();
        let mut pts = Vec::new();
        for ix in 0..roi.nx() {
            for iy in 0..roi.ny() {
                pts.push(occupant(ix, iy, &roi));
            }
        }
        let grid = occupancy_grid(&extract_slab(&cloud_of(&pts), &roi), &roi);
        assert!(find_shadow_clusters(&grid, &cell_params(), 6).is_empty());
    }

    #[test]
    fn fully_empty_grid_is_one_cluster() {
        let roi = RoiConfig::default();
        let grid = occupancy_grid(&extract_slab(&cloud_of(&[]), &roi), &roi);
        let clusters = find_shadow_clusters(&grid, &cell_params(), 6);
        assert_eq!(clusters.len(), 1);
        assert_eq!(clusters[0].cells.len(), 100 * 34);
        assert_eq!(clusters[0].id, 0);
    }

    #[test]
    fn clusters_are_disjoint_and_partition_holds() {
        let roi = RoiConfig::default();
        // occupy everything except two separated rectangles and one speck
        let mut pts = Vec::new();
        let hole_a = |ix: usize, iy: usize| (10..14).contains(&ix) && (5..9).contains(&iy);
        let hole_b = |ix: usize, iy: usize| (40..46).contains(&ix) && (20..26).contains(&iy);
        let speck = |ix: usize, iy: usize| ix == 80 && iy == 2;
        for ix in 0..roi.nx() {
            for iy in 0..roi.ny() {
                if !(hole_a(ix, iy) || hole_b(ix, iy) || speck(ix, iy)) {
                    pts.push(occupant(ix, iy, &roi));
                }
            }
        }
        let grid = occupancy_grid(&extract_slab(&cloud_of(&pts), &roi), &roi);
        let clusters = find_shadow_clusters(&grid, &cell_params(), 6);
        assert_eq!(clusters.len(), 2);
        // ordering by (min ix, min iy)
        assert!(clusters[0].cells[0].0 < clusters[1].cells[0].0);
        // disjoint
        let mut seen = std::collections::HashSet::new();
        for c in &clusters {
            for cell in &c.cells {
                assert!(seen.insert(*cell), "cell {cell:?} in two clusters");
            }
        }
        // every cell is occupied, clustered, or discarded speckle
        let clustered: usize = clusters.iter().map(|c| c.cells.len()).sum();
        let occupied = grid.occupied.iter().filter(|&&b| b).count();
        assert_eq!(clustered + occupied + 1, 100 * 34);
    }

    #[test]
    fn cell_footprint_formula_and_bounds() {
        let roi = RoiConfig::default();
        let fp = cell_footprint(0, 0, &roi).unwrap();
        assert_eq!(fp[2], [0.0, -5.0]);
        assert_eq!(fp[0], [0.3, -4.7]);

        let fp = cell_footprint(50, 16, &roi).unwrap();
        assert!((fp[2][0] - 15.0).abs() < 1e-12);
        assert!((fp[2][1] - (-0.2)).abs() < 1e-12);
        assert!((fp[0][0] - 15.3).abs() < 1e-12);
        assert!((fp[0][1] - 0.1).abs() < 1e-9);

        assert!(cell_footprint(100, 0, &roi).is_err());
        assert!(cell_footprint(0, 34, &roi).is_err());
    }
}
