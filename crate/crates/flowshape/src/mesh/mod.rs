//! Triangle meshes of the flow channel: a rectangular tunnel with an
//! optional rectangular obstacle hole. Meshes are validated on construction
//! and immutable afterwards; deformation and refinement return new meshes.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

mod generate;
mod io;

pub use generate::{generate_channel_mesh, generate_rectangle_mesh, RectMarkers};
pub use io::{read_mesh_txt, write_mesh_txt};

/// Boundary classes. `Inflow`, `Outflow` and `Wall` together make up the
/// fixed outer boundary; `Obstacle` marks the free inner loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Marker {
    Inflow,
    Outflow,
    Wall,
    Obstacle,
}

impl Marker {
    pub fn as_str(self) -> &'static str {
        match self {
            Marker::Inflow => "inflow",
            Marker::Outflow => "outflow",
            Marker::Wall => "wall",
            Marker::Obstacle => "obstacle",
        }
    }

    /// True for the markers that form the fixed outer boundary.
    pub fn is_outer(self) -> bool {
        !matches!(self, Marker::Obstacle)
    }
}

impl fmt::Display for Marker {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Marker {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inflow" => Ok(Marker::Inflow),
            "outflow" => Ok(Marker::Outflow),
            "wall" => Ok(Marker::Wall),
            "obstacle" => Ok(Marker::Obstacle),
            other => Err(Error::Input(format!(
                "unknown boundary marker {other:?} (expected inflow|outflow|wall|obstacle)"
            ))),
        }
    }
}

/// Axis-aligned rectangle given by its extents.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

impl Rect {
    pub fn new(xmin: f64, xmax: f64, ymin: f64, ymax: f64) -> Rect {
        Rect {
            xmin,
            xmax,
            ymin,
            ymax,
        }
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn center(&self) -> [f64; 2] {
        [0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax)]
    }

    fn degenerate(&self) -> bool {
        !(self.width() > 0.0 && self.height() > 0.0)
            || !self.width().is_finite()
            || !self.height().is_finite()
    }
}

/// Mesh quality summary. `edge_length_ratio` is longest/shortest edge on the
/// obstacle loop (all boundary edges when there is no obstacle).
#[derive(Debug, Clone, Copy)]
pub struct QualityReport {
    pub edge_length_ratio: f64,
    pub min_det_df: f64,
    pub min_cell_angle: f64,
}

/// Conforming triangulation with counter-clockwise cells and marked boundary
/// edges covering exactly the topological boundary.
#[derive(Debug, Clone)]
pub struct TriMesh {
    vertices: Vec<[f64; 2]>,
    cells: Vec<[usize; 3]>,
    boundary: Vec<(usize, usize, Marker)>,
    edges: Vec<(usize, usize)>,
    cell_edges: Vec<[usize; 3]>,
    boundary_edge_ids: Vec<usize>,
}

fn signed_area(p0: [f64; 2], p1: [f64; 2], p2: [f64; 2]) -> f64 {
    0.5 * ((p1[0] - p0[0]) * (p2[1] - p0[1]) - (p2[0] - p0[0]) * (p1[1] - p0[1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl TriMesh {
    pub fn new(
        vertices: Vec<[f64; 2]>,
        cells: Vec<[usize; 3]>,
        boundary: Vec<(usize, usize, Marker)>,
    ) -> Result<TriMesh> {
        let nv = vertices.len();
        if nv < 3 || cells.is_empty() {
            return Err(Error::Mesh("mesh needs at least one cell".into()));
        }
        for (c, cell) in cells.iter().enumerate() {
            for &v in cell {
                if v >= nv {
                    return Err(Error::Mesh(format!(
                        "cell {c} references vertex {v} out of range {nv}"
                    )));
                }
            }
            let a = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            if !(a > 0.0) {
                return Err(Error::Mesh(format!(
                    "cell {c} has non-positive signed area {a}"
                )));
            }
        }

        // edge enumeration: local edge i is opposite local vertex i
        let mut edge_ids: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<(usize, usize)> = Vec::new();
        let mut cell_edges: Vec<[usize; 3]> = Vec::with_capacity(cells.len());
        let mut edge_cell_count: Vec<u8> = Vec::new();
        for cell in &cells {
            let local = [
                edge_key(cell[1], cell[2]),
                edge_key(cell[2], cell[0]),
                edge_key(cell[0], cell[1]),
            ];
            let mut ids = [0usize; 3];
            for (k, key) in local.iter().enumerate() {
                let id = *edge_ids.entry(*key).or_insert_with(|| {
                    edges.push(*key);
                    edge_cell_count.push(0);
                    edges.len() - 1
                });
                edge_cell_count[id] = edge_cell_count[id].saturating_add(1);
                ids[k] = id;
            }
            cell_edges.push(ids);
        }
        for (e, &(a, b)) in edges.iter().enumerate() {
            if edge_cell_count[e] > 2 {
                return Err(Error::Mesh(format!(
                    "edge ({a},{b}) shared by more than two cells"
                )));
            }
        }

        // boundary list must cover the topological boundary exactly once
        let mut boundary_edge_ids = Vec::with_capacity(boundary.len());
        let mut seen = vec![false; edges.len()];
        for &(a, b, _) in &boundary {
            if a >= nv || b >= nv {
                return Err(Error::Mesh(format!(
                    "boundary edge ({a},{b}) references vertex out of range"
                )));
            }
            let id = match edge_ids.get(&edge_key(a, b)) {
                Some(&id) => id,
                None => {
                    return Err(Error::Mesh(format!(
                        "boundary edge ({a},{b}) is not an edge of any cell"
                    )))
                }
            };
            if edge_cell_count[id] != 1 {
                return Err(Error::Mesh(format!(
                    "boundary edge ({a},{b}) is interior to the mesh"
                )));
            }
            if seen[id] {
                return Err(Error::Mesh(format!("boundary edge ({a},{b}) listed twice")));
            }
            seen[id] = true;
            boundary_edge_ids.push(id);
        }
        for (e, &(a, b)) in edges.iter().enumerate() {
            if edge_cell_count[e] == 1 && !seen[e] {
                return Err(Error::Mesh(format!(
                    "topological boundary edge ({a},{b}) carries no marker"
                )));
            }
        }

        // boundary must be a disjoint union of closed loops
        let mut degree = vec![0u8; nv];
        for &(a, b, _) in &boundary {
            degree[a] = degree[a].saturating_add(1);
            degree[b] = degree[b].saturating_add(1);
        }
        for (v, &d) in degree.iter().enumerate() {
            if d != 0 && d != 2 {
                return Err(Error::Mesh(format!(
                    "boundary vertex {v} has {d} incident boundary edges (loops require 2)"
                )));
            }
        }

        let has_obstacle = boundary.iter().any(|&(_, _, m)| m == Marker::Obstacle);
        if has_obstacle {
            // the obstacle loop must be vertex-disjoint from the outer loop
            // and lie strictly inside it
            let mut on_outer = vec![false; nv];
            let mut on_obstacle = vec![false; nv];
            for &(a, b, m) in &boundary {
                let set = if m == Marker::Obstacle {
                    &mut on_obstacle
                } else {
                    &mut on_outer
                };
                set[a] = true;
                set[b] = true;
            }
            let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
            for (v, &out) in on_outer.iter().enumerate() {
                if on_obstacle[v] && out {
                    return Err(Error::Mesh(format!(
                        "vertex {v} lies on both the obstacle and the outer boundary"
                    )));
                }
                if out {
                    bbox[0] = bbox[0].min(vertices[v][0]);
                    bbox[1] = bbox[1].max(vertices[v][0]);
                    bbox[2] = bbox[2].min(vertices[v][1]);
                    bbox[3] = bbox[3].max(vertices[v][1]);
                }
            }
            for (v, &obs) in on_obstacle.iter().enumerate() {
                if obs {
                    let [x, y] = vertices[v];
                    if !(x > bbox[0] && x < bbox[1] && y > bbox[2] && y < bbox[3]) {
                        return Err(Error::Mesh(format!(
                            "obstacle vertex {v} at ({x},{y}) touches the outer rectangle"
                        )));
                    }
                }
            }
        }

        Ok(TriMesh {
            vertices,
            cells,
            boundary,
            edges,
            cell_edges,
            boundary_edge_ids,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> [f64; 2] {
        self.vertices[v]
    }

    pub fn cells(&self) -> &[[usize; 3]] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> [usize; 3] {
        self.cells[c]
    }

    /// Global edge ids of cell `c`; entry `i` is the edge opposite local
    /// vertex `i`.
    pub fn cell_edge_ids(&self, c: usize) -> [usize; 3] {
        self.cell_edges[c]
    }

    /// Endpoints of global edge `e`, smaller vertex id first.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        self.edges[e]
    }

    pub fn boundary_edges(&self) -> &[(usize, usize, Marker)] {
        &self.boundary
    }

    /// Global edge ids parallel to `boundary_edges()`.
    pub fn boundary_edge_ids(&self) -> &[usize] {
        &self.boundary_edge_ids
    }

    pub fn has_obstacle(&self) -> bool {
        self.boundary.iter().any(|&(_, _, m)| m == Marker::Obstacle)
    }

    pub fn cell_area(&self, c: usize) -> f64 {
        let [a, b, d] = self.cells[c];
        signed_area(self.vertices[a], self.vertices[b], self.vertices[d])
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_cells()).map(|c| self.cell_area(c)).sum()
    }

    /// Flags (per vertex) of vertices incident to a boundary edge whose
    /// marker satisfies `pred`.
    pub fn marked_vertex_flags(&self, pred: impl Fn(Marker) -> bool) -> Vec<bool> {
        let mut flags = vec![false; self.n_vertices()];
        for &(a, b, m) in &self.boundary {
            if pred(m) {
                flags[a] = true;
                flags[b] = true;
            }
        }
        flags
    }

    /// Flags (per global edge) of boundary edges whose marker satisfies
    /// `pred`.
    pub fn marked_edge_flags(&self, pred: impl Fn(Marker) -> bool) -> Vec<bool> {
        let mut flags = vec![false; self.n_edges()];
        for (k, &(_, _, m)) in self.boundary.iter().enumerate() {
            if pred(m) {
                flags[self.boundary_edge_ids[k]] = true;
            }
        }
        flags
    }

    /// Bounding box (xmin, xmax, ymin, ymax) of the vertices on edges with
    /// the given marker, or None if the marker is absent.
    pub fn marker_extent(&self, marker: Marker) -> Option<(f64, f64, f64, f64)> {
        let mut bbox: Option<(f64, f64, f64, f64)> = None;
        for &(a, b, m) in &self.boundary {
            if m != marker {
                continue;
            }
            for v in [a, b] {
                let [x, y] = self.vertices[v];
                let e = bbox.get_or_insert((x, x, y, y));
                e.0 = e.0.min(x);
                e.1 = e.1.max(x);
                e.2 = e.2.min(y);
                e.3 = e.3.max(y);
            }
        }
        bbox
    }

    /// Splits every cell into four by its edge midpoints. Boundary markers
    /// are inherited by both halves of a split boundary edge.
    pub fn refine_uniform(&self) -> TriMesh {
        let nv = self.n_vertices();
        let mut vertices = self.vertices.clone();
        vertices.resize(nv + self.n_edges(), [0.0, 0.0]);
        for (e, &(a, b)) in self.edges.iter().enumerate() {
            let pa = self.vertices[a];
            let pb = self.vertices[b];
            vertices[nv + e] = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        }
        let mut cells = Vec::with_capacity(4 * self.n_cells());
        for (c, cell) in self.cells.iter().enumerate() {
            let [v0, v1, v2] = *cell;
            let [e0, e1, e2] = self.cell_edges[c];
            let (m0, m1, m2) = (nv + e0, nv + e1, nv + e2);
            cells.push([v0, m2, m1]);
            cells.push([m2, v1, m0]);
            cells.push([m1, m0, v2]);
            cells.push([m0, m1, m2]);
        }
        let mut boundary = Vec::with_capacity(2 * self.boundary.len());
        for (k, &(a, b, m)) in self.boundary.iter().enumerate() {
            let mid = nv + self.boundary_edge_ids[k];
            boundary.push((a, mid, m));
            boundary.push((mid, b, m));
        }
        TriMesh::new(vertices, cells, boundary).expect("refinement preserves mesh validity")
    }

    /// Moves every vertex by the P1 field `u` (interleaved x,y per vertex).
    /// `u` must vanish exactly on the outer boundary. Fails with the worst
    /// cell when any deformed cell has non-positive area.
    pub fn apply_deformation(&self, u: &[f64]) -> Result<TriMesh> {
        let nv = self.n_vertices();
        if u.len() != 2 * nv {
            return Err(Error::Input(format!(
                "deformation has {} entries, mesh needs {}",
                u.len(),
                2 * nv
            )));
        }
        let outer = self.marked_vertex_flags(|m| m.is_outer());
        for (v, &fixed) in outer.iter().enumerate() {
            if fixed && (u[2 * v] != 0.0 || u[2 * v + 1] != 0.0) {
                return Err(Error::Input(format!(
                    "deformation does not vanish at outer boundary vertex {v}"
                )));
            }
        }
        let vertices: Vec<[f64; 2]> = (0..nv)
            .map(|v| {
                [
                    self.vertices[v][0] + u[2 * v],
                    self.vertices[v][1] + u[2 * v + 1],
                ]
            })
            .collect();
        let mut worst = (usize::MAX, f64::INFINITY);
        for (c, cell) in self.cells.iter().enumerate() {
            let new_area = signed_area(vertices[cell[0]], vertices[cell[1]], vertices[cell[2]]);
            let det = new_area / self.cell_area(c);
            if det < worst.1 {
                worst = (c, det);
            }
        }
        if !(worst.1 > 0.0) {
            return Err(Error::Inversion {
                cell: worst.0,
                det: worst.1,
            });
        }
        TriMesh::new(vertices, self.cells.clone(), self.boundary.clone())
    }

    /// Quality metrics, optionally after applying the deformation `u`
    /// (without the inversion check, so rejected trials can be reported).
    pub fn quality_report(&self, u: Option<&[f64]>) -> QualityReport {
        let pos = |v: usize| -> [f64; 2] {
            match u {
                Some(u) => [
                    self.vertices[v][0] + u[2 * v],
                    self.vertices[v][1] + u[2 * v + 1],
                ],
                None => self.vertices[v],
            }
        };
        let has_obs = self.has_obstacle();
        let mut min_len = f64::INFINITY;
        let mut max_len = f64::NEG_INFINITY;
        for &(a, b, m) in &self.boundary {
            if has_obs && m != Marker::Obstacle {
                continue;
            }
            let (pa, pb) = (pos(a), pos(b));
            let len = ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2)).sqrt();
            min_len = min_len.min(len);
            max_len = max_len.max(len);
        }
        let edge_length_ratio = if min_len > 0.0 && min_len.is_finite() {
            max_len / min_len
        } else {
            1.0
        };

        let mut min_det_df: f64 = 1.0;
        if u.is_some() {
            for (c, cell) in self.cells.iter().enumerate() {
                let new_area = signed_area(pos(cell[0]), pos(cell[1]), pos(cell[2]));
                min_det_df = min_det_df.min(new_area / self.cell_area(c));
            }
        }

        let mut min_cell_angle = f64::INFINITY;
        for cell in &self.cells {
            let p = [pos(cell[0]), pos(cell[1]), pos(cell[2])];
            for i in 0..3 {
                let a = p[(i + 1) % 3];
                let b = p[(i + 2) % 3];
                let ea = [a[0] - p[i][0], a[1] - p[i][1]];
                let eb = [b[0] - p[i][0], b[1] - p[i][1]];
                let na = (ea[0] * ea[0] + ea[1] * ea[1]).sqrt();
                let nb = (eb[0] * eb[0] + eb[1] * eb[1]).sqrt();
                if na > 0.0 && nb > 0.0 {
                    let c = ((ea[0] * eb[0] + ea[1] * eb[1]) / (na * nb)).clamp(-1.0, 1.0);
                    min_cell_angle = min_cell_angle.min(c.acos());
                }
            }
        }

        QualityReport {
            edge_length_ratio,
            min_det_df,
            min_cell_angle,
        }
    }

    /// Area and barycenter of the fluid domain.
    pub fn obstacle_measures(&self) -> (f64, [f64; 2]) {
        let mut area = 0.0;
        let mut bx = 0.0;
        let mut by = 0.0;
        for (c, cell) in self.cells.iter().enumerate() {
            let a = self.cell_area(c);
            let p = [
                self.vertices[cell[0]],
                self.vertices[cell[1]],
                self.vertices[cell[2]],
            ];
            area += a;
            bx += a * (p[0][0] + p[1][0] + p[2][0]) / 3.0;
            by += a * (p[0][1] + p[1][1] + p[2][1]) / 3.0;
        }
        (area, [bx / area, by / area])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_cell_square() -> TriMesh {
        TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![
                (0, 1, Marker::Wall),
                (1, 2, Marker::Wall),
                (2, 3, Marker::Wall),
                (3, 0, Marker::Wall),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_clockwise_cell() {
        let err = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 2, 1]],
            vec![
                (0, 1, Marker::Wall),
                (1, 2, Marker::Wall),
                (2, 0, Marker::Wall),
            ],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Mesh(_)), "{err:?}");
    }

    #[test]
    fn rejects_unmarked_boundary() {
        let err = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            vec![[0, 1, 2]],
            vec![(0, 1, Marker::Wall), (1, 2, Marker::Wall)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Mesh(_)), "{err:?}");
    }

    #[test]
    fn rejects_interior_edge_marked_as_boundary() {
        let mut boundary = vec![
            (0, 1, Marker::Wall),
            (1, 2, Marker::Wall),
            (2, 3, Marker::Wall),
            (3, 0, Marker::Wall),
        ];
        boundary.push((0, 2, Marker::Wall));
        let err = TriMesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            boundary,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Mesh(_)), "{err:?}");
    }

    #[test]
    fn edge_enumeration_is_consistent() {
        let mesh = two_cell_square();
        assert_eq!(mesh.n_edges(), 5);
        // the diagonal (0,2) is edge 1 of cell 0 (opposite vertex 1) and
        // edge 2 of cell 1 (opposite vertex 3)
        let d0 = mesh.cell_edge_ids(0)[1];
        let d1 = mesh.cell_edge_ids(1)[2];
        assert_eq!(d0, d1);
        assert_eq!(mesh.edge(d0), (0, 2));
    }

    #[test]
    fn refine_quadruples_cells_and_preserves_area() {
        let mesh = two_cell_square();
        let fine = mesh.refine_uniform();
        assert_eq!(fine.n_cells(), 8);
        assert!((fine.total_area() - mesh.total_area()).abs() < 1e-14);
        assert_eq!(
            fine.boundary_edges().len(),
            2 * mesh.boundary_edges().len()
        );
    }

    #[test]
    fn single_cell_refines_to_four() {
        let mesh = TriMesh::new(
            vec![[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]],
            vec![[0, 1, 2]],
            vec![
                (0, 1, Marker::Wall),
                (1, 2, Marker::Wall),
                (2, 0, Marker::Wall),
            ],
        )
        .unwrap();
        let fine = mesh.refine_uniform();
        assert_eq!(fine.n_cells(), 4);
        assert!((fine.total_area() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn deformation_roundtrip_restores_coordinates() {
        // 3x3 grid: only the center vertex is interior
        let mesh = generate_rectangle_mesh(
            Rect::new(0.0, 1.0, 0.0, 1.0),
            2,
            2,
            RectMarkers::AllWall,
        )
        .unwrap();
        let center = (0..mesh.n_vertices())
            .find(|&v| {
                let [x, y] = mesh.vertex(v);
                (x - 0.5).abs() < 1e-12 && (y - 0.5).abs() < 1e-12
            })
            .unwrap();
        let mut u = vec![0.0; 2 * mesh.n_vertices()];
        u[2 * center] = 0.1;
        u[2 * center + 1] = -0.07;
        let moved = mesh.apply_deformation(&u).unwrap();
        let back: Vec<f64> = u.iter().map(|x| -x).collect();
        let restored = moved.apply_deformation(&back).unwrap();
        for (p, q) in restored.vertices().iter().zip(mesh.vertices()) {
            assert!((p[0] - q[0]).abs() < 1e-13);
            assert!((p[1] - q[1]).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_deformation_is_identity() {
        let mesh = two_cell_square();
        let u = vec![0.0; 8];
        let same = mesh.apply_deformation(&u).unwrap();
        assert_eq!(same.vertices(), mesh.vertices());
    }

    #[test]
    fn inversion_reports_worst_cell() {
        let mesh = generate_rectangle_mesh(
            Rect::new(0.0, 1.0, 0.0, 1.0),
            2,
            2,
            RectMarkers::AllWall,
        )
        .unwrap();
        let center = (0..mesh.n_vertices())
            .find(|&v| {
                let [x, y] = mesh.vertex(v);
                (x - 0.5).abs() < 1e-12 && (y - 0.5).abs() < 1e-12
            })
            .unwrap();
        let mut u = vec![0.0; 2 * mesh.n_vertices()];
        u[2 * center] = 0.9;
        u[2 * center + 1] = 0.9;
        match mesh.apply_deformation(&u) {
            Err(Error::Inversion { det, .. }) => assert!(det <= 0.0),
            other => panic!("expected inversion, got {other:?}"),
        }
    }

    #[test]
    fn nonzero_outer_deformation_is_rejected() {
        let mesh = two_cell_square();
        let mut u = vec![0.0; 8];
        u[0] = 1e-9;
        assert!(matches!(
            mesh.apply_deformation(&u),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn quality_of_undeformed_mesh() {
        let mesh = two_cell_square();
        let q = mesh.quality_report(None);
        assert_eq!(q.min_det_df, 1.0);
        assert!((q.edge_length_ratio - 1.0).abs() < 1e-12);
        assert!((q.min_cell_angle - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
        let q0 = mesh.quality_report(Some(&vec![0.0; 8]));
        assert_eq!(q0.edge_length_ratio, q.edge_length_ratio);
        assert!((q0.min_det_df - 1.0).abs() < 1e-14);
    }

    #[test]
    fn obstacle_measures_of_rectangle() {
        let mesh = generate_rectangle_mesh(
            Rect::new(0.0, 2.0, -1.0, 1.0),
            4,
            3,
            RectMarkers::AllWall,
        )
        .unwrap();
        let (area, bary) = mesh.obstacle_measures();
        assert!((area - 4.0).abs() < 1e-12);
        assert!((bary[0] - 1.0).abs() < 1e-12);
        assert!(bary[1].abs() < 1e-12);
    }

    #[test]
    fn marker_parse_roundtrip() {
        for m in [
            Marker::Inflow,
            Marker::Outflow,
            Marker::Wall,
            Marker::Obstacle,
        ] {
            assert_eq!(m.as_str().parse::<Marker>().unwrap(), m);
        }
        assert!(matches!(
            "lid".parse::<Marker>(),
            Err(Error::Input(_))
        ));
    }
}
