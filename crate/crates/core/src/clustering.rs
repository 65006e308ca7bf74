//! Deterministic DBSCAN over 3D items, used twice by the pipeline: on empty
//! occupancy-grid cells (chebyshev metric, 8-connectivity) and on frustum
//! points (euclidean). Neighbor queries run through a uniform hash grid with
//! bucket size eps; results are identical to a linear scan.
//!
//! Determinism contract: items are visited in input order, seed queues are
//! FIFO over ascending neighbor indices, and border points belong to the
//! cluster of the first core point that reaches them in that order. Cluster
//! indices are then canonicalized by each cluster's lexicographically smallest
//! member coordinate, so equal inputs always produce bit-identical labels.

use std::collections::{HashMap, VecDeque};

/// Distance metric for neighbor queries. The 2D variants ignore z.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Euclidean3d,
    Euclidean2d,
    /// Chebyshev (max-axis) distance on the first two coordinates; eps = 1 on
    /// integer grid indices gives 8-connectivity.
    ChebyshevGrid,
}

impl Metric {
    pub fn distance(&self, a: &[f64; 3], b: &[f64; 3]) -> f64 {
        match self {
            Metric::Euclidean3d => {
                let d = [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
                (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
            }
            Metric::Euclidean2d => {
                let d = [a[0] - b[0], a[1] - b[1]];
                (d[0] * d[0] + d[1] * d[1]).sqrt()
            }
            Metric::ChebyshevGrid => (a[0] - b[0]).abs().max((a[1] - b[1]).abs()),
        }
    }

    fn uses_z(&self) -> bool {
        matches!(self, Metric::Euclidean3d)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DbscanParams {
    pub eps: f64,
    pub min_pts: usize,
    pub metric: Metric,
}

impl DbscanParams {
    pub fn new(eps: f64, min_pts: usize, metric: Metric) -> Self {
        assert!(eps > 0.0, "eps must be positive");
        assert!(min_pts >= 1, "min_pts must be at least 1");
        Self {
            eps,
            min_pts,
            metric,
        }
    }
}

/// Per-item cluster assignment. `None` marks noise; cluster indices are
/// contiguous starting at 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    pub assignment: Vec<Option<u32>>,
    pub core: Vec<bool>,
}

impl ClusterLabels {
    pub fn num_clusters(&self) -> usize {
        self.assignment
            .iter()
            .flatten()
            .map(|&c| c as usize + 1)
            .max()
            .unwrap_or(0)
    }

    pub fn noise_count(&self) -> usize {
        self.assignment.iter().filter(|a| a.is_none()).count()
    }

    /// Member indices per cluster, each list ascending.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.num_clusters()];
        for (i, a) in self.assignment.iter().enumerate() {
            if let Some(c) = a {
                out[*c as usize].push(i);
            }
        }
        out
    }
}

/// Uniform hash grid for eps-neighborhood queries.
pub struct NeighborGrid<'a> {
    items: &'a [[f64; 3]],
    eps: f64,
    metric: Metric,
    buckets: HashMap<(i64, i64, i64), Vec<u32>>,
}

impl<'a> NeighborGrid<'a> {
    pub fn new(items: &'a [[f64; 3]], eps: f64, metric: Metric) -> Self {
        let mut buckets: HashMap<(i64, i64, i64), Vec<u32>> = HashMap::new();
        for (i, p) in items.iter().enumerate() {
            buckets
                .entry(Self::key(p, eps, metric))
                .or_default()
                .push(i as u32);
        }
        Self {
            items,
            eps,
            metric,
            buckets,
        }
    }

    fn key(p: &[f64; 3], eps: f64, metric: Metric) -> (i64, i64, i64) {
        let q = |v: f64| (v / eps).floor() as i64;
        (
            q(p[0]),
            q(p[1]),
            if metric.uses_z() { q(p[2]) } else { 0 },
        )
    }

    /// Indices within eps of `items[center]` (center included), ascending.
    pub fn region_query(&self, center: usize) -> Vec<usize> {
        let p = &self.items[center];
        let (kx, ky, kz) = Self::key(p, self.eps, self.metric);
        let z_span: &[i64] = if self.metric.uses_z() {
            &[-1, 0, 1]
        } else {
            &[0]
        };
        let mut out = Vec::new();
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in z_span {
                    if let Some(bucket) = self.buckets.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &j in bucket {
                            if self.metric.distance(p, &self.items[j as usize]) <= self.eps {
                                out.push(j as usize);
                            }
                        }
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

/// All indices within eps of `items[center]`, by plain linear scan.
pub fn region_query_linear(
    items: &[[f64; 3]],
    center: usize,
    eps: f64,
    metric: Metric,
) -> Vec<usize> {
    let p = &items[center];
    (0..items.len())
        .filter(|&j| metric.distance(p, &items[j]) <= eps)
        .collect()
}

/// Classic DBSCAN over the items. Empty input yields empty labels.
pub fn dbscan(items: &[[f64; 3]], params: &DbscanParams) -> ClusterLabels {
    let n = items.len();
    if n == 0 {
        return ClusterLabels {
            assignment: Vec::new(),
            core: Vec::new(),
        };
    }
    let grid = NeighborGrid::new(items, params.eps, params.metric);
    let core: Vec<bool> = (0..n)
        .map(|i| grid.region_query(i).len() >= params.min_pts)
        .collect();

    let mut assignment: Vec<Option<u32>> = vec![None; n];
    let mut visited = vec![false; n];
    let mut next = 0u32;
    for i in 0..n {
        if visited[i] {
            continue;
        }
        visited[i] = true;
        if !core[i] {
            continue; // noise unless a later core reaches it
        }
        assignment[i] = Some(next);
        let mut queue: VecDeque<usize> = grid.region_query(i).into();
        while let Some(q) = queue.pop_front() {
            if !visited[q] {
                visited[q] = true;
                assignment[q] = Some(next);
                if core[q] {
                    queue.extend(grid.region_query(q));
                }
            } else if assignment[q].is_none() {
                assignment[q] = Some(next); // border upgrade of an earlier noise mark
            }
        }
        next += 1;
    }

    canonicalize(items, &mut assignment, next as usize);
    ClusterLabels { assignment, core }
}

/// Renumbers clusters by ascending lexicographic minimum member coordinate.
fn canonicalize(items: &[[f64; 3]], assignment: &mut [Option<u32>], k: usize) {
    if k == 0 {
        return;
    }
    let mut mins: Vec<[f64; 3]> = vec![[f64::INFINITY; 3]; k];
    for (i, a) in assignment.iter().enumerate() {
        if let Some(c) = a {
            let c = *c as usize;
            if lex_less(&items[i], &mins[c]) {
                mins[c] = items[i];
            }
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        if lex_less(&mins[a], &mins[b]) {
            std::cmp::Ordering::Less
        } else if lex_less(&mins[b], &mins[a]) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    let mut remap = vec![0u32; k];
    for (new, &old) in order.iter().enumerate() {
        remap[old] = new as u32;
    }
    for a in assignment.iter_mut() {
        if let Some(c) = a {
            *c = remap[*c as usize];
        }
    }
}

fn lex_less(a: &[f64; 3], b: &[f64; 3]) -> bool {
    for k in 0..3 {
        if a[k] < b[k] {
            return true;
        }
        if a[k] > b[k] {
            return false;
        }
    }
    false
}
