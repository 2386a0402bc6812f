//! Taylor-Hood (P2 velocity, P1 pressure) assembly on one triangulation.
//!
//! Global layout: velocity dofs first (P2 vector interleaving), then one
//! pressure dof per vertex. All kernels share the degree-4 rule so that the
//! discrete state, adjoint, and shape derivative belong to the same
//! quadrature-consistent Lagrangian.

use crate::fem::assemble::{p2_gradients, p2_values, CellGeom};
use crate::fem::quadrature::{quad_rule, QuadRule};
use crate::fem::space::{build_space, Space, SpaceKind};
use crate::fem::sparse::{Pattern, SparseMatrix};
use crate::mesh::{Marker, TriMesh};

pub const QUAD_DEGREE: usize = 4;

pub struct ThSpace {
    /// number of velocity dofs, 2 * (n_vertices + n_edges)
    pub n_velocity: usize,
    /// velocity dofs plus one pressure dof per vertex
    pub n_total: usize,
    /// 15 dofs per cell: 12 velocity then 3 pressure
    pub cell_dofs: Vec<usize>,
    pub velocity: Space,
    pub pattern: Pattern,
}

pub fn build_th(mesh: &TriMesh, vel_markers: &[Marker]) -> ThSpace {
    let velocity = build_space(mesh, SpaceKind::P2Vector, vel_markers);
    let n_velocity = velocity.n_dofs;
    let n_total = n_velocity + mesh.n_vertices();
    let mut cell_dofs = Vec::with_capacity(15 * mesh.n_cells());
    for c in 0..mesh.n_cells() {
        cell_dofs.extend_from_slice(velocity.cell(c));
        for &v in mesh.cell(c).iter() {
            cell_dofs.push(n_velocity + v);
        }
    }
    let pattern = Pattern::build(n_total, &cell_dofs, 15);
    ThSpace {
        n_velocity,
        n_total,
        cell_dofs,
        velocity,
        pattern,
    }
}

/// Physical position of P2 node `node` (vertex node or edge midpoint).
pub fn p2_node_position(mesh: &TriMesh, node: usize) -> [f64; 2] {
    if node < mesh.n_vertices() {
        mesh.vertex(node)
    } else {
        let (a, b) = mesh.edge(node - mesh.n_vertices());
        let pa = mesh.vertex(a);
        let pb = mesh.vertex(b);
        [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]
    }
}

/// Velocity value, velocity gradient, and pressure at one quadrature point.
pub struct Sample {
    pub v: [f64; 2],
    pub dv: [[f64; 2]; 2],
    pub p: f64,
}

pub fn sample(
    local: &[f64; 15],
    phi: &[f64; 6],
    dphi: &[[f64; 2]; 6],
    bary: [f64; 3],
) -> Sample {
    let mut v = [0.0; 2];
    let mut dv = [[0.0; 2]; 2];
    for i in 0..6 {
        for a in 0..2 {
            let coef = local[2 * i + a];
            v[a] += coef * phi[i];
            dv[a][0] += coef * dphi[i][0];
            dv[a][1] += coef * dphi[i][1];
        }
    }
    let p = bary[0] * local[12] + bary[1] * local[13] + bary[2] * local[14];
    Sample { v, dv, p }
}

pub type Forcing<'f> = &'f dyn Fn([f64; 2]) -> [f64; 2];

pub struct ThAssembler<'m> {
    pub mesh: &'m TriMesh,
    pub space: ThSpace,
    pub quad: QuadRule,
    pub nu: f64,
}

impl<'m> ThAssembler<'m> {
    pub fn new(mesh: &'m TriMesh, nu: f64, vel_markers: &[Marker]) -> ThAssembler<'m> {
        ThAssembler {
            mesh,
            space: build_th(mesh, vel_markers),
            quad: quad_rule(QUAD_DEGREE),
            nu,
        }
    }

    pub fn gather(&self, x: &[f64], c: usize) -> [f64; 15] {
        let mut local = [0.0; 15];
        let dofs = &self.space.cell_dofs[15 * c..15 * c + 15];
        for (l, &d) in local.iter_mut().zip(dofs) {
            *l = x[d];
        }
        local
    }

    /// Weak residual of the (optionally convective, optionally forced)
    /// momentum/mass system at coefficient vector x.
    pub fn residual(&self, x: &[f64], forcing: Option<Forcing>, convection: bool) -> Vec<f64> {
        assert_eq!(x.len(), self.space.n_total);
        let mut r = vec![0.0; self.space.n_total];
        for c in 0..self.mesh.n_cells() {
            let geom = CellGeom::new(self.mesh, c);
            let local = self.gather(x, c);
            let dofs = &self.space.cell_dofs[15 * c..15 * c + 15];
            for qp in self.quad.points {
                let phi = p2_values(qp.bary);
                let dphi = p2_gradients(qp.bary, &geom.grads);
                let s = sample(&local, &phi, &dphi, qp.bary);
                let w = qp.weight * geom.area;
                let conv = if convection {
                    [
                        s.dv[0][0] * s.v[0] + s.dv[0][1] * s.v[1],
                        s.dv[1][0] * s.v[0] + s.dv[1][1] * s.v[1],
                    ]
                } else {
                    [0.0, 0.0]
                };
                let f = forcing.map(|f| f(geom.point(qp.bary))).unwrap_or([0.0, 0.0]);
                let div_v = s.dv[0][0] + s.dv[1][1];
                for i in 0..6 {
                    for a in 0..2 {
                        let visc = s.dv[a][0] * dphi[i][0] + s.dv[a][1] * dphi[i][1];
                        r[dofs[2 * i + a]] += w
                            * (self.nu * visc + conv[a] * phi[i] - s.p * dphi[i][a]
                                - f[a] * phi[i]);
                    }
                }
                for j in 0..3 {
                    r[dofs[12 + j]] -= w * qp.bary[j] * div_v;
                }
            }
        }
        r
    }

    /// Newton linearization of `residual` at x.
    pub fn jacobian(&self, x: &[f64], convection: bool) -> SparseMatrix {
        self.linearization(x, convection, false)
    }

    /// Direct assembly of the transposed linearization (adjoint operator);
    /// production code transposes `jacobian` instead, this is its oracle.
    pub fn adjoint_matrix_direct(&self, x: &[f64]) -> SparseMatrix {
        self.linearization(x, true, true)
    }

    fn linearization(&self, x: &[f64], convection: bool, transposed: bool) -> SparseMatrix {
        assert_eq!(x.len(), self.space.n_total);
        let mut mat = self.space.pattern.zeros();
        let mut local_mat = [0.0; 225];
        for c in 0..self.mesh.n_cells() {
            let geom = CellGeom::new(self.mesh, c);
            let local = self.gather(x, c);
            local_mat.fill(0.0);
            for qp in self.quad.points {
                let phi = p2_values(qp.bary);
                let dphi = p2_gradients(qp.bary, &geom.grads);
                let s = sample(&local, &phi, &dphi, qp.bary);
                let w = qp.weight * geom.area;
                for i in 0..6 {
                    let vdphi = s.v[0] * dphi[i][0] + s.v[1] * dphi[i][1];
                    for a in 0..2 {
                        let row = 2 * i + a;
                        for k in 0..6 {
                            let grad = dphi[i][0] * dphi[k][0] + dphi[i][1] * dphi[k][1];
                            let vdphik = s.v[0] * dphi[k][0] + s.v[1] * dphi[k][1];
                            for cc in 0..2 {
                                let mut val = if a == cc { self.nu * grad } else { 0.0 };
                                if convection {
                                    if transposed {
                                        // (phi . grad v) . w  +  (v . grad phi) . w
                                        val += s.dv[cc][a] * phi[i] * phi[k];
                                        if a == cc {
                                            val += vdphi * phi[k];
                                        }
                                    } else {
                                        // (grad dv v) . phi  +  (grad v dv) . phi
                                        val += s.dv[a][cc] * phi[k] * phi[i];
                                        if a == cc {
                                            val += vdphik * phi[i];
                                        }
                                    }
                                }
                                local_mat[15 * row + 2 * k + cc] += w * val;
                            }
                        }
                        for j in 0..3 {
                            // -int p div(phi) against trial pressure
                            local_mat[15 * row + 12 + j] -= w * qp.bary[j] * dphi[i][a];
                        }
                    }
                }
                for j in 0..3 {
                    for k in 0..6 {
                        for cc in 0..2 {
                            local_mat[15 * (12 + j) + 2 * k + cc] -=
                                w * qp.bary[j] * dphi[k][cc];
                        }
                    }
                }
            }
            self.space.pattern.scatter_add(mat.values_mut(), c, &local_mat);
        }
        mat
    }

    /// Dual vector of the dissipation derivative: entry (i,a) holds
    /// nu * int Dv : D(phi_i e_a); pressure entries stay zero.
    pub fn dissipation_dual(&self, x: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.space.n_total];
        for c in 0..self.mesh.n_cells() {
            let geom = CellGeom::new(self.mesh, c);
            let local = self.gather(x, c);
            let dofs = &self.space.cell_dofs[15 * c..15 * c + 15];
            for qp in self.quad.points {
                let phi = p2_values(qp.bary);
                let dphi = p2_gradients(qp.bary, &geom.grads);
                let s = sample(&local, &phi, &dphi, qp.bary);
                let w = qp.weight * geom.area;
                for i in 0..6 {
                    for a in 0..2 {
                        d[dofs[2 * i + a]] +=
                            w * self.nu * (s.dv[a][0] * dphi[i][0] + s.dv[a][1] * dphi[i][1]);
                    }
                }
            }
        }
        d
    }
}
