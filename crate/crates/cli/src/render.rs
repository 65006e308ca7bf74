//! BEV figure rendering to SVG: slab points, shadow cells, wedges back to the
//! sensor, ground-truth boxes, and obstacle boxes, over a 1 m grid with the
//! sensor origin marked. Output is deterministic: fixed element order and
//! fixed-precision coordinates.

use std::fmt::Write as _;
use std::path::Path;

use anyhow::{Context, Result};
use shadowscan_core::geometry::OrientedBox3;
use shadowscan_core::pipeline::wedges_of_cluster;
use shadowscan_core::scene_io::LabeledObject;
use shadowscan_core::shadow::{cell_footprint, RoiConfig};

use crate::result_file::ResultFile;

/// Pixels per meter.
const SCALE: f64 = 30.0;
/// Margin around the drawn region, meters.
const MARGIN: f64 = 1.0;

struct Frame {
    roi: RoiConfig,
    width: f64,
    height: f64,
}

impl Frame {
    fn new(roi: &RoiConfig) -> Self {
        let x_lo = roi.x_min.min(0.0) - MARGIN;
        let x_hi = roi.x_max + MARGIN;
        let y_hi = roi.y_half_width + MARGIN;
        Self {
            roi: *roi,
            width: 2.0 * y_hi * SCALE,
            height: (x_hi - x_lo) * SCALE,
        }
    }

    /// World (x forward, y left) to SVG pixels: forward is up, left is left.
    fn map(&self, x: f64, y: f64) -> (f64, f64) {
        let u = (self.roi.y_half_width + MARGIN - y) * SCALE;
        let v = (self.roi.x_max + MARGIN - x) * SCALE;
        (u, v)
    }

    fn polygon_points(&self, corners: &[[f64; 2]]) -> String {
        let mut s = String::new();
        for (i, c) in corners.iter().enumerate() {
            let (u, v) = self.map(c[0], c[1]);
            if i > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{u:.2},{v:.2}");
        }
        s
    }
}

/// Renders the figure. `slab_points` may be empty (e.g. when re-rendering
/// from a result file without the original cloud); `gt` likewise.
pub fn render_bev(
    slab_points: &[[f64; 3]],
    rf: &ResultFile,
    gt: &[LabeledObject],
    path: &Path,
) -> Result<()> {
    let svg = render_bev_string(slab_points, rf, gt);
    std::fs::write(path, svg).with_context(|| format!("writing figure {}", path.display()))
}

pub fn render_bev_string(slab_points: &[[f64; 3]], rf: &ResultFile, gt: &[LabeledObject]) -> String {
    let roi = rf.config.roi;
    let frame = Frame::new(&roi);
    let mut s = String::new();
    let _ = writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{:.0}" height="{:.0}" viewBox="0 0 {:.0} {:.0}">"#,
        frame.width, frame.height, frame.width, frame.height
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);

    // 1 m grid
    let _ = writeln!(s, r##"<g stroke="#dddddd" stroke-width="0.5">"##);
    let mut gx = roi.x_min.min(0.0).floor();
    while gx <= roi.x_max + MARGIN {
        let (u0, v) = frame.map(gx, -roi.y_half_width - MARGIN);
        let (u1, _) = frame.map(gx, roi.y_half_width + MARGIN);
        let _ = writeln!(s, r#"<line x1="{u1:.2}" y1="{v:.2}" x2="{u0:.2}" y2="{v:.2}"/>"#);
        gx += 1.0;
    }
    let mut gy = (-roi.y_half_width - MARGIN).floor();
    while gy <= roi.y_half_width + MARGIN {
        let (u, v0) = frame.map(roi.x_min.min(0.0) - MARGIN, gy);
        let (_, v1) = frame.map(roi.x_max + MARGIN, gy);
        let _ = writeln!(s, r#"<line x1="{u:.2}" y1="{v1:.2}" x2="{u:.2}" y2="{v0:.2}"/>"#);
        gy += 1.0;
    }
    let _ = writeln!(s, "</g>");

    // RoI outline
    let corners = [
        [roi.x_min, -roi.y_half_width],
        [roi.x_max, -roi.y_half_width],
        [roi.x_max, roi.y_half_width],
        [roi.x_min, roi.y_half_width],
    ];
    let _ = writeln!(
        s,
        r##"<polygon points="{}" fill="none" stroke="#888888" stroke-width="1"/>"##,
        frame.polygon_points(&corners)
    );

    // shadow cells
    let _ = writeln!(s, r##"<g fill="#4882b4" fill-opacity="0.45" stroke="none">"##);
    for cluster in &rf.shadow_clusters {
        for &(ix, iy) in &cluster.cells {
            if let Ok(fp) = cell_footprint(ix, iy, &roi) {
                let _ = writeln!(s, r#"<polygon points="{}"/>"#, frame.polygon_points(&fp));
            }
        }
    }
    let _ = writeln!(s, "</g>");

    // wedges, regenerated from the shadow cells
    let _ = writeln!(s, r##"<g fill="#e8a33d" fill-opacity="0.05" stroke="none">"##);
    for cluster in &rf.shadow_clusters {
        for w in wedges_of_cluster(cluster, &roi, rf.config.range_min, rf.config.cell_stride) {
            let mut pts: Vec<[f64; 2]> = Vec::new();
            let steps = ((w.az_max - w.az_min) / 0.05).ceil().max(1.0) as usize;
            for i in 0..=steps {
                let a = w.az_min + (w.az_max - w.az_min) * i as f64 / steps as f64;
                pts.push([w.range_max * a.cos(), w.range_max * a.sin()]);
            }
            for i in (0..=steps).rev() {
                let a = w.az_min + (w.az_max - w.az_min) * i as f64 / steps as f64;
                pts.push([w.range_min * a.cos(), w.range_min * a.sin()]);
            }
            let _ = writeln!(s, r#"<polygon points="{}"/>"#, frame.polygon_points(&pts));
        }
    }
    let _ = writeln!(s, "</g>");

    // slab points
    let _ = writeln!(s, r##"<g fill="#555555">"##);
    for p in slab_points {
        let (u, v) = frame.map(p[0], p[1]);
        let _ = writeln!(s, r#"<circle cx="{u:.2}" cy="{v:.2}" r="1"/>"#);
    }
    let _ = writeln!(s, "</g>");

    // ground-truth boxes
    let _ = writeln!(s, r##"<g fill="none" stroke="#2e8b57" stroke-width="1.5">"##);
    for obj in gt {
        let fp = obj.bbox.footprint();
        let _ = writeln!(s, r#"<polygon points="{}"/>"#, frame.polygon_points(&fp));
    }
    let _ = writeln!(s, "</g>");

    // obstacle boxes
    let _ = writeln!(
        s,
        r##"<g fill="none" stroke="#cc2222" stroke-width="1.5" stroke-dasharray="4 2">"##
    );
    for o in &rf.obstacles {
        let b: OrientedBox3 = o.bbox.to_oriented();
        let fp = b.footprint();
        let _ = writeln!(s, r#"<polygon points="{}"/>"#, frame.polygon_points(&fp));
    }
    let _ = writeln!(s, "</g>");

    // sensor origin
    let (u, v) = frame.map(0.0, 0.0);
    let _ = writeln!(
        s,
        r#"<circle cx="{u:.2}" cy="{v:.2}" r="4" fill="black"/><text x="{:.2}" y="{v:.2}" font-size="10" fill="black">sensor</text>"#,
        u + 7.0
    );
    let _ = writeln!(s, "</svg>");
    s
}
