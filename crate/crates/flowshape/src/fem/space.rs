//! Dof layouts over a mesh. Vector dofs interleave components per node
//! (x then y); P2 edge nodes follow all vertex nodes.

use crate::mesh::{Marker, TriMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// one 2x2 tensor per cell, row-major
    P0Tensor,
    P1Scalar,
    P1Vector,
    P2Vector,
}

impl SpaceKind {
    pub fn dofs_per_cell(self) -> usize {
        match self {
            SpaceKind::P0Tensor => 4,
            SpaceKind::P1Scalar => 3,
            SpaceKind::P1Vector => 6,
            SpaceKind::P2Vector => 12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Space {
    pub kind: SpaceKind,
    pub n_dofs: usize,
    /// flat cell-to-dof map, `dofs_per_cell` entries per cell
    pub cell_dofs: Vec<usize>,
    /// per dof: constrained by one of the Dirichlet markers
    pub dirichlet: Vec<bool>,
}

impl Space {
    pub fn dofs_per_cell(&self) -> usize {
        self.kind.dofs_per_cell()
    }

    pub fn cell(&self, c: usize) -> &[usize] {
        let k = self.dofs_per_cell();
        &self.cell_dofs[c * k..(c + 1) * k]
    }
}

/// Builds the dof map for `kind` with Dirichlet conditions on the listed
/// boundary markers. For P2 the markers constrain both vertex and edge-node
/// dofs of marked boundary edges.
pub fn build_space(mesh: &TriMesh, kind: SpaceKind, dirichlet_markers: &[Marker]) -> Space {
    let nv = mesh.n_vertices();
    let ne = mesh.n_edges();
    let nc = mesh.n_cells();
    let on = |m: Marker| dirichlet_markers.contains(&m);

    let (n_dofs, cell_dofs) = match kind {
        SpaceKind::P0Tensor => {
            let dofs = (0..4 * nc).collect();
            (4 * nc, dofs)
        }
        SpaceKind::P1Scalar => {
            let mut dofs = Vec::with_capacity(3 * nc);
            for cell in mesh.cells() {
                dofs.extend_from_slice(cell);
            }
            (nv, dofs)
        }
        SpaceKind::P1Vector => {
            let mut dofs = Vec::with_capacity(6 * nc);
            for cell in mesh.cells() {
                for &v in cell {
                    dofs.push(2 * v);
                    dofs.push(2 * v + 1);
                }
            }
            (2 * nv, dofs)
        }
        SpaceKind::P2Vector => {
            let mut dofs = Vec::with_capacity(12 * nc);
            for c in 0..nc {
                for &v in &mesh.cell(c) {
                    dofs.push(2 * v);
                    dofs.push(2 * v + 1);
                }
                for &e in &mesh.cell_edge_ids(c) {
                    dofs.push(2 * (nv + e));
                    dofs.push(2 * (nv + e) + 1);
                }
            }
            (2 * (nv + ne), dofs)
        }
    };

    let mut dirichlet = vec![false; n_dofs];
    if !dirichlet_markers.is_empty() {
        match kind {
            SpaceKind::P0Tensor => {}
            SpaceKind::P1Scalar => {
                for (v, &f) in mesh.marked_vertex_flags(on).iter().enumerate() {
                    if f {
                        dirichlet[v] = true;
                    }
                }
            }
            SpaceKind::P1Vector => {
                for (v, &f) in mesh.marked_vertex_flags(on).iter().enumerate() {
                    if f {
                        dirichlet[2 * v] = true;
                        dirichlet[2 * v + 1] = true;
                    }
                }
            }
            SpaceKind::P2Vector => {
                for (v, &f) in mesh.marked_vertex_flags(on).iter().enumerate() {
                    if f {
                        dirichlet[2 * v] = true;
                        dirichlet[2 * v + 1] = true;
                    }
                }
                for (e, &f) in mesh.marked_edge_flags(on).iter().enumerate() {
                    if f {
                        dirichlet[2 * (nv + e)] = true;
                        dirichlet[2 * (nv + e) + 1] = true;
                    }
                }
            }
        }
    }

    Space {
        kind,
        n_dofs,
        cell_dofs,
        dirichlet,
    }
}
