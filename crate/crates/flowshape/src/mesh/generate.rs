//! Structured mesh generation: a graded quad-ring annulus between obstacle
//! and tunnel (split into triangles), and a plain rectangle grid fixture.

use super::{Marker, Rect, TriMesh};
use crate::{Error, Result};

/// Marker scheme for `generate_rectangle_mesh`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RectMarkers {
    /// left = inflow, right = outflow, bottom/top = wall
    Channel,
    AllWall,
}

/// Growth of ring widths away from the obstacle, capped so far-field rings
/// stay within 4 obstacle edge lengths.
fn grading(i: usize) -> f64 {
    (1.05f64).powi(i as i32 - 1).min(4.0)
}

/// Splits `total` loop segments over the four sides of `rect` proportionally
/// to side length (largest remainder, every side at least one segment).
/// Order: bottom, right, top, left.
fn side_counts(rect: &Rect, total: usize) -> [usize; 4] {
    let lens = [rect.width(), rect.height(), rect.width(), rect.height()];
    let perimeter: f64 = lens.iter().sum();
    let ideal: Vec<f64> = lens.iter().map(|l| total as f64 * l / perimeter).collect();
    let mut counts = [0usize; 4];
    let mut rem: Vec<(f64, usize)> = Vec::new();
    let mut assigned = 0;
    for k in 0..4 {
        counts[k] = ideal[k].floor() as usize;
        assigned += counts[k];
        rem.push((ideal[k] - ideal[k].floor(), k));
    }
    rem.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    for i in 0..(total - assigned) {
        counts[rem[i % 4].1] += 1;
    }
    loop {
        let Some(zero) = (0..4).find(|&k| counts[k] == 0) else {
            break;
        };
        let max = (0..4).max_by_key(|&k| counts[k]).unwrap();
        counts[zero] += 1;
        counts[max] -= 1;
    }
    counts
}

/// Nodes of a rectangle loop, counter-clockwise from the bottom-left corner,
/// with `counts[k]` uniform segments on side k (bottom, right, top, left).
fn loop_nodes(rect: &Rect, counts: [usize; 4]) -> Vec<[f64; 2]> {
    let corners = [
        [rect.xmin, rect.ymin],
        [rect.xmax, rect.ymin],
        [rect.xmax, rect.ymax],
        [rect.xmin, rect.ymax],
    ];
    let mut nodes = Vec::with_capacity(counts.iter().sum());
    for side in 0..4 {
        let a = corners[side];
        let b = corners[(side + 1) % 4];
        let n = counts[side];
        for i in 0..n {
            let t = i as f64 / n as f64;
            nodes.push([a[0] * (1.0 - t) + b[0] * t, a[1] * (1.0 - t) + b[1] * t]);
        }
    }
    nodes
}

/// Meshes the channel `tunnel` minus the closed `obstacle` with a structured
/// annulus: both rectangle loops carry `resolution` nodes with matched
/// corners, joined by `rings` linearly blended intermediate loops (graded,
/// auto-sized to the smallest obstacle-tunnel gap when not given). Cell
/// count is exactly `2 * resolution * rings`.
pub fn generate_channel_mesh(
    tunnel: Rect,
    obstacle: Rect,
    resolution: usize,
    rings: Option<usize>,
) -> Result<TriMesh> {
    if tunnel.degenerate() || obstacle.degenerate() {
        return Err(Error::Input(format!(
            "degenerate rectangle: tunnel {tunnel:?}, obstacle {obstacle:?}"
        )));
    }
    if resolution < 8 || resolution % 4 != 0 {
        return Err(Error::Input(format!(
            "resolution {resolution} must be >= 8 and a multiple of 4"
        )));
    }
    let gaps = [
        obstacle.xmin - tunnel.xmin,
        tunnel.xmax - obstacle.xmax,
        obstacle.ymin - tunnel.ymin,
        tunnel.ymax - obstacle.ymax,
    ];
    let min_gap = gaps.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min_gap > 0.0) {
        return Err(Error::Geometry(format!(
            "obstacle must lie strictly inside the tunnel (gaps {gaps:?})"
        )));
    }

    let counts = side_counts(&obstacle, resolution);
    let inner = loop_nodes(&obstacle, counts);
    let outer = loop_nodes(&tunnel, counts);

    let h_obs = 2.0 * (obstacle.width() + obstacle.height()) / resolution as f64;
    let rings = rings.unwrap_or_else(|| {
        let mut r = 0;
        let mut covered = 0.0;
        while covered < min_gap {
            r += 1;
            covered += h_obs * grading(r);
        }
        r.max(1)
    });
    if rings == 0 {
        return Err(Error::Input("ring count must be positive".into()));
    }

    // cumulative graded blend fractions t_0 = 0 < ... < t_rings = 1
    let mut t = Vec::with_capacity(rings + 1);
    t.push(0.0);
    let mut acc = 0.0;
    for i in 1..=rings {
        acc += grading(i);
        t.push(acc);
    }
    for ti in t.iter_mut() {
        *ti /= acc;
    }

    let n = resolution;
    let id = |ring: usize, j: usize| ring * n + (j % n);
    let mut vertices = Vec::with_capacity((rings + 1) * n);
    for &tr in &t {
        for j in 0..n {
            vertices.push([
                inner[j][0] * (1.0 - tr) + outer[j][0] * tr,
                inner[j][1] * (1.0 - tr) + outer[j][1] * tr,
            ]);
        }
    }

    let mut cells = Vec::with_capacity(2 * n * rings);
    for r in 0..rings {
        for j in 0..n {
            let a = id(r, j);
            let b = id(r, j + 1);
            let c = id(r + 1, j + 1);
            let d = id(r + 1, j);
            cells.push([a, d, c]);
            cells.push([a, c, b]);
        }
    }

    let mut boundary = Vec::with_capacity(2 * n);
    for j in 0..n {
        boundary.push((id(0, j), id(0, j + 1), Marker::Obstacle));
    }
    // tunnel sides: bottom/top are walls, left is the inflow, right the outflow
    let side_marker = [Marker::Wall, Marker::Outflow, Marker::Wall, Marker::Inflow];
    let mut j = 0;
    for side in 0..4 {
        for _ in 0..counts[side] {
            boundary.push((id(rings, j), id(rings, j + 1), side_marker[side]));
            j += 1;
        }
    }

    TriMesh::new(vertices, cells, boundary)
}

/// Uniform grid mesh of a rectangle, `nx` by `ny` quads split into
/// triangles. Test and benchmark fixture.
pub fn generate_rectangle_mesh(
    rect: Rect,
    nx: usize,
    ny: usize,
    markers: RectMarkers,
) -> Result<TriMesh> {
    if rect.degenerate() {
        return Err(Error::Input(format!("degenerate rectangle {rect:?}")));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::Input("rectangle mesh needs nx, ny >= 1".into()));
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let x = rect.xmin + rect.width() * i as f64 / nx as f64;
            let y = rect.ymin + rect.height() * j as f64 / ny as f64;
            vertices.push([x, y]);
        }
    }
    let mut cells = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (v00, v10) = (id(i, j), id(i + 1, j));
            let (v01, v11) = (id(i, j + 1), id(i + 1, j + 1));
            cells.push([v00, v10, v11]);
            cells.push([v00, v11, v01]);
        }
    }
    let (left, right) = match markers {
        RectMarkers::Channel => (Marker::Inflow, Marker::Outflow),
        RectMarkers::AllWall => (Marker::Wall, Marker::Wall),
    };
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary.push((id(i, 0), id(i + 1, 0), Marker::Wall));
        boundary.push((id(i, ny), id(i + 1, ny), Marker::Wall));
    }
    for j in 0..ny {
        boundary.push((id(0, j), id(0, j + 1), left));
        boundary.push((id(nx, j), id(nx, j + 1), right));
    }
    TriMesh::new(vertices, cells, boundary)
}
