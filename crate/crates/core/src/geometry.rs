//! BEV and box geometry: oriented boxes, containment tests, footprint IoU via
//! convex clipping, nearest-edge distance, and the azimuth wedges that stand in
//! for full 3D frustums.
//!
//! Conventions used throughout the crate:
//! * sensor frame: x forward, y left, z up, origin at the LiDAR unit
//! * BEV = projection onto the z=0 plane
//! * all containment tests are closed (boundary counts as inside)

use thiserror::Error;

/// Absolute half-plane classification epsilon for polygon clipping, in meters.
const CLIP_EPS: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum GeometryError {
    #[error("footprint is degenerate for wedge construction: {0}")]
    DegenerateFootprint(String),
    #[error("empty point set")]
    EmptyPointSet,
}

/// 3D box with a BEV yaw about +z. `dims` is (length, width, height): length
/// spans the local x axis, width the local y axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedBox3 {
    pub center: [f64; 3],
    pub dims: [f64; 3],
    pub yaw: f64,
}

impl OrientedBox3 {
    /// Builds a box with the yaw normalized to (-pi, pi].
    pub fn new(center: [f64; 3], dims: [f64; 3], yaw: f64) -> Self {
        debug_assert!(dims.iter().all(|d| *d > 0.0), "box dims must be positive");
        Self {
            center,
            dims,
            yaw: normalize_angle(yaw),
        }
    }

    /// BEV footprint corners in counter-clockwise order.
    pub fn footprint(&self) -> [[f64; 2]; 4] {
        let (hl, hw) = (self.dims[0] / 2.0, self.dims[1] / 2.0);
        let (s, c) = self.yaw.sin_cos();
        let rot = |x: f64, y: f64| {
            [
                self.center[0] + c * x - s * y,
                self.center[1] + s * x + c * y,
            ]
        };
        [rot(hl, hw), rot(-hl, hw), rot(-hl, -hw), rot(hl, -hw)]
    }

    pub fn bev_area(&self) -> f64 {
        self.dims[0] * self.dims[1]
    }

    /// The eight corners, bottom face first, matching `footprint` order.
    pub fn corners(&self) -> [[f64; 3]; 8] {
        let fp = self.footprint();
        let (z_lo, z_hi) = (
            self.center[2] - self.dims[2] / 2.0,
            self.center[2] + self.dims[2] / 2.0,
        );
        let mut out = [[0.0; 3]; 8];
        for (i, [x, y]) in fp.iter().enumerate() {
            out[i] = [*x, *y, z_lo];
            out[i + 4] = [*x, *y, z_hi];
        }
        out
    }
}

/// Axis-aligned 3D box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb3 {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl Aabb3 {
    pub fn footprint(&self) -> [[f64; 2]; 4] {
        [
            [self.max[0], self.max[1]],
            [self.min[0], self.max[1]],
            [self.min[0], self.min[1]],
            [self.max[0], self.min[1]],
        ]
    }

    /// Equivalent oriented box (yaw 0). Degenerate extents are widened to a
    /// hair above zero so the footprint stays a valid polygon.
    pub fn to_oriented(&self) -> OrientedBox3 {
        let dims = [
            (self.max[0] - self.min[0]).max(1e-12),
            (self.max[1] - self.min[1]).max(1e-12),
            (self.max[2] - self.min[2]).max(1e-12),
        ];
        let center = [
            (self.min[0] + self.max[0]) / 2.0,
            (self.min[1] + self.max[1]) / 2.0,
            (self.min[2] + self.max[2]) / 2.0,
        ];
        OrientedBox3 {
            center,
            dims,
            yaw: 0.0,
        }
    }

    pub fn z_extent(&self) -> f64 {
        self.max[2] - self.min[2]
    }
}

/// BEV azimuth sector with radial bounds, as seen from the sensor origin.
/// Stands in for the 3D frustum from the sensor to a shadow cell: z is left
/// unconstrained because occluders extend upward out of the ground slab.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wedge {
    pub az_min: f64,
    pub az_max: f64,
    pub range_min: f64,
    pub range_max: f64,
}

/// Normalizes an angle to (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let t = a.rem_euclid(std::f64::consts::TAU);
    if t > std::f64::consts::PI {
        t - std::f64::consts::TAU
    } else {
        t
    }
}

/// Shifts `a` by a multiple of 2*pi so it lands within pi of `center`.
fn unwrap_near(a: f64, center: f64) -> f64 {
    a - std::f64::consts::TAU * ((a - center) / std::f64::consts::TAU).round()
}

/// Closed containment of a point in an oriented box (local-frame slab test).
pub fn point_in_obox(p: [f64; 3], b: &OrientedBox3) -> bool {
    let dx = p[0] - b.center[0];
    let dy = p[1] - b.center[1];
    let dz = p[2] - b.center[2];
    let (s, c) = b.yaw.sin_cos();
    let lx = c * dx + s * dy;
    let ly = -s * dx + c * dy;
    lx.abs() <= b.dims[0] / 2.0 && ly.abs() <= b.dims[1] / 2.0 && dz.abs() <= b.dims[2] / 2.0
}

/// Closed containment of a BEV point in a convex CCW polygon.
pub fn point_in_convex(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let n = poly.len();
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        if cross < -CLIP_EPS {
            return false;
        }
    }
    true
}

/// Signed area of a polygon (positive for CCW winding).
pub fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let mut sum = 0.0;
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        sum += a[0] * b[1] - b[0] * a[1];
    }
    sum / 2.0
}

/// Clips `poly` against the left half-plane of the directed edge a->b.
/// Classification uses an absolute distance epsilon so grid-aligned inputs
/// behave deterministically.
fn clip_halfplane(poly: &[[f64; 2]], a: [f64; 2], b: [f64; 2]) -> Vec<[f64; 2]> {
    let ex = b[0] - a[0];
    let ey = b[1] - a[1];
    let len = (ex * ex + ey * ey).sqrt();
    if len < 1e-300 || poly.len() < 3 {
        return poly.to_vec();
    }
    let dist = |p: [f64; 2]| (ex * (p[1] - a[1]) - ey * (p[0] - a[0])) / len;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let s = poly[i];
        let e = poly[(i + 1) % poly.len()];
        let sd = dist(s);
        let ed = dist(e);
        let s_in = sd >= -CLIP_EPS;
        let e_in = ed >= -CLIP_EPS;
        match (s_in, e_in) {
            (true, true) => out.push(e),
            (true, false) | (false, true) => {
                let denom = sd - ed;
                if denom.abs() > 1e-300 {
                    let t = sd / denom;
                    out.push([s[0] + (e[0] - s[0]) * t, s[1] + (e[1] - s[1]) * t]);
                }
                if e_in {
                    out.push(e);
                }
            }
            (false, false) => {}
        }
    }
    out
}

/// Intersection area of two convex CCW polygons (Sutherland-Hodgman).
pub fn convex_intersection_area(subject: &[[f64; 2]], clip: &[[f64; 2]]) -> f64 {
    let mut poly = subject.to_vec();
    for i in 0..clip.len() {
        poly = clip_halfplane(&poly, clip[i], clip[(i + 1) % clip.len()]);
        if poly.len() < 3 {
            return 0.0;
        }
    }
    polygon_area(&poly).abs()
}

/// Birds-eye-view intersection-over-union of two oriented box footprints.
pub fn bev_iou(a: &OrientedBox3, b: &OrientedBox3) -> f64 {
    let fa = a.footprint();
    let fb = b.footprint();
    let inter = convex_intersection_area(&fa, &fb);
    let union = a.bev_area() + b.bev_area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let abx = b[0] - a[0];
    let aby = b[1] - a[1];
    let apx = p[0] - a[0];
    let apy = p[1] - a[1];
    let len2 = abx * abx + aby * aby;
    let t = if len2 > 0.0 {
        ((apx * abx + apy * aby) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let cx = a[0] + t * abx - p[0];
    let cy = a[1] + t * aby - p[1];
    (cx * cx + cy * cy).sqrt()
}

/// Minimum BEV distance from the sensor origin to a footprint's edges.
/// Zero when the origin lies inside the footprint.
pub fn nearest_edge_distance(footprint: &[[f64; 2]; 4]) -> f64 {
    if point_in_convex([0.0, 0.0], footprint) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    for i in 0..4 {
        let d = point_segment_distance([0.0, 0.0], footprint[i], footprint[(i + 1) % 4]);
        if d < best {
            best = d;
        }
    }
    best
}

/// Builds the wedge covering a BEV footprint as seen from the origin.
///
/// The azimuth interval spans all corners (unwrapped around the footprint's
/// mean azimuth); `range_max` is the distance to the *nearest* corner, so the
/// wedge stops short of the footprint itself. `range_min` is the sensor
/// blanking radius and is passed through.
pub fn wedge_of_footprint(corners: &[[f64; 2]; 4], range_min: f64) -> Result<Wedge, GeometryError> {
    let mut ranges = [0.0; 4];
    for (i, c) in corners.iter().enumerate() {
        ranges[i] = (c[0] * c[0] + c[1] * c[1]).sqrt();
        if ranges[i] <= 1e-12 {
            return Err(GeometryError::DegenerateFootprint(
                "corner at the origin".into(),
            ));
        }
    }
    if point_in_convex([0.0, 0.0], corners) {
        return Err(GeometryError::DegenerateFootprint(
            "footprint contains the origin".into(),
        ));
    }
    let mx = corners.iter().map(|c| c[0]).sum::<f64>() / 4.0;
    let my = corners.iter().map(|c| c[1]).sum::<f64>() / 4.0;
    let mean_az = my.atan2(mx);
    let mut az_min = f64::INFINITY;
    let mut az_max = f64::NEG_INFINITY;
    for c in corners {
        let az = unwrap_near(c[1].atan2(c[0]), mean_az);
        az_min = az_min.min(az);
        az_max = az_max.max(az);
    }
    if az_max - az_min >= std::f64::consts::PI {
        return Err(GeometryError::DegenerateFootprint(
            "azimuth span exceeds a half turn".into(),
        ));
    }
    let range_max = ranges.iter().cloned().fold(f64::INFINITY, f64::min);
    if range_max <= range_min {
        return Err(GeometryError::DegenerateFootprint(
            "footprint inside the blanking radius".into(),
        ));
    }
    Ok(Wedge {
        az_min,
        az_max,
        range_min,
        range_max,
    })
}

/// Wedge membership: `range_min <= r < range_max` and azimuth within the
/// closed interval. z is deliberately ignored.
pub fn point_in_wedge(p: [f64; 3], w: &Wedge) -> bool {
    let r = (p[0] * p[0] + p[1] * p[1]).sqrt();
    if r < w.range_min || r >= w.range_max {
        return false;
    }
    let az = unwrap_near(p[1].atan2(p[0]), (w.az_min + w.az_max) / 2.0);
    w.az_min <= az && az <= w.az_max
}

/// Componentwise bounding box of a nonempty point set.
pub fn aabb_of_points<I>(points: I) -> Result<Aabb3, GeometryError>
where
    I: IntoIterator<Item = [f64; 3]>,
{
    let mut it = points.into_iter();
    let first = it.next().ok_or(GeometryError::EmptyPointSet)?;
    let mut min = first;
    let mut max = first;
    for p in it {
        for k in 0..3 {
            min[k] = min[k].min(p[k]);
            max[k] = max[k].max(p[k]);
        }
    }
    Ok(Aabb3 { min, max })
}
