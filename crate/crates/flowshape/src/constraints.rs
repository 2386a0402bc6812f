//! Geometric constraint functionals on deformations u of the current mesh:
//! g[0], g[1] track the barycenter, g[2] the volume of the deformed fluid
//! domain, all written over F = id + u so that g(0) = 0 exactly.
//!
//! With P1 deformations Du is constant per cell, so every integrand is a
//! low-degree polynomial per cell and all integrals here are closed-form.

use crate::fem::assemble::CellGeom;
use crate::fem::sparse::{Pattern, SparseMatrix};
use crate::fem::space::{build_space, SpaceKind};
use crate::mesh::TriMesh;

/// cof(I + Du) in 2D, row-major.
fn cofactor(du: &[[f64; 2]; 2]) -> [[f64; 2]; 2] {
    [
        [1.0 + du[1][1], -du[1][0]],
        [-du[0][1], 1.0 + du[0][0]],
    ]
}

fn det_df(du: &[[f64; 2]; 2]) -> f64 {
    (1.0 + du[0][0]) * (1.0 + du[1][1]) - du[0][1] * du[1][0]
}

/// Second derivative of the 2D determinant, a constant bilinear form:
/// d2det[P, Q] = P11 Q22 + Q11 P22 - P12 Q21 - Q12 P21, evaluated for the
/// basis tensors with row `b` = gj and row `c` = gk.
fn d2det_basis(b: usize, gj: &[f64; 2], c: usize, gk: &[f64; 2]) -> f64 {
    if b == c {
        0.0
    } else if b == 0 {
        gj[0] * gk[1] - gj[1] * gk[0]
    } else {
        gk[0] * gj[1] - gk[1] * gj[0]
    }
}

/// Volume and barycenter functionals of one mesh, with the outer-boundary
/// dof restriction baked into the reported gradients.
pub struct GeometricConstraints<'m> {
    mesh: &'m TriMesh,
    /// per u-dof: true when the dof is free (not on the outer boundary)
    free: Vec<bool>,
    pattern: Pattern,
    area: f64,
    diam: f64,
    /// relative tolerance for `satisfied`
    pub eval_tol: f64,
}

pub const COUNT: usize = 3;

impl<'m> GeometricConstraints<'m> {
    pub fn new(mesh: &'m TriMesh) -> GeometricConstraints<'m> {
        let space = build_space(mesh, SpaceKind::P1Vector, &[]);
        let pattern = Pattern::build(space.n_dofs, &space.cell_dofs, 6);
        let outer = mesh.marked_vertex_flags(|m| m.is_outer());
        let mut free = vec![true; 2 * mesh.n_vertices()];
        for (v, &fixed) in outer.iter().enumerate() {
            if fixed {
                free[2 * v] = false;
                free[2 * v + 1] = false;
            }
        }
        let area = mesh.total_area();
        let mut bbox = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
        for v in mesh.vertices() {
            bbox[0] = bbox[0].min(v[0]);
            bbox[1] = bbox[1].max(v[0]);
            bbox[2] = bbox[2].min(v[1]);
            bbox[3] = bbox[3].max(v[1]);
        }
        let diam = ((bbox[1] - bbox[0]).powi(2) + (bbox[3] - bbox[2]).powi(2)).sqrt();
        GeometricConstraints {
            mesh,
            free,
            pattern,
            area,
            diam,
            eval_tol: 1e-8,
        }
    }

    pub fn count(&self) -> usize {
        COUNT
    }

    pub fn domain_area(&self) -> f64 {
        self.area
    }

    pub fn domain_diameter(&self) -> f64 {
        self.diam
    }

    fn cell_data(&self, c: usize, u: &[f64]) -> (CellGeom, [[f64; 2]; 2], [f64; 2], [f64; 2]) {
        let geom = CellGeom::new(self.mesh, c);
        let cell = self.mesh.cell(c);
        let mut local = [0.0; 6];
        let mut fbar = [0.0, 0.0];
        let mut xbar = [0.0, 0.0];
        for (i, &v) in cell.iter().enumerate() {
            for a in 0..2 {
                local[2 * i + a] = u[2 * v + a];
                fbar[a] += (geom.coords[i][a] + u[2 * v + a]) / 3.0;
                xbar[a] += geom.coords[i][a] / 3.0;
            }
        }
        let du = crate::fem::assemble::p1_vector_gradient(&geom, &local);
        (geom, du, fbar, xbar)
    }

    /// g(u): barycenter components then volume.
    pub fn eval(&self, u: &[f64]) -> [f64; 3] {
        assert_eq!(u.len(), 2 * self.mesh.n_vertices());
        let mut g = [0.0; 3];
        for c in 0..self.mesh.n_cells() {
            let (geom, du, fbar, xbar) = self.cell_data(c, u);
            let det = det_df(&du);
            for i in 0..2 {
                g[i] += geom.area * (det * fbar[i] - xbar[i]);
            }
            g[2] += geom.area * (det - 1.0);
        }
        g
    }

    /// Columns of B: the dual vectors of dg_i at u, with entries at outer
    /// boundary dofs zeroed (u is constrained there).
    pub fn gradient(&self, u: &[f64]) -> [Vec<f64>; 3] {
        let mut b = self.gradient_unrestricted(u);
        for col in b.iter_mut() {
            for (dof, v) in col.iter_mut().enumerate() {
                if !self.free[dof] {
                    *v = 0.0;
                }
            }
        }
        b
    }

    /// Gradient without the boundary restriction; fixture and FD use.
    pub fn gradient_unrestricted(&self, u: &[f64]) -> [Vec<f64>; 3] {
        assert_eq!(u.len(), 2 * self.mesh.n_vertices());
        let n = 2 * self.mesh.n_vertices();
        let mut b = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for c in 0..self.mesh.n_cells() {
            let (geom, du, fbar, _) = self.cell_data(c, u);
            let det = det_df(&du);
            let cof = cofactor(&du);
            for (j, &v) in self.mesh.cell(c).iter().enumerate() {
                let gj = geom.grads[j];
                for a in 0..2 {
                    let cof_grad = cof[a][0] * gj[0] + cof[a][1] * gj[1];
                    // volume: d det = cof : D
                    b[2][2 * v + a] += geom.area * cof_grad;
                    // barycenter i: u_i det + F_i cof : D
                    for i in 0..2 {
                        let mut term = fbar[i] * cof_grad;
                        if a == i {
                            term += det / 3.0;
                        }
                        b[i][2 * v + a] += geom.area * term;
                    }
                }
            }
        }
        b
    }

    /// Assembles sum_i mu[i] * g_i'' at u over the P1 vector space.
    pub fn hessian_contribution(&self, u: &[f64], mu: [f64; 3]) -> SparseMatrix {
        assert_eq!(u.len(), 2 * self.mesh.n_vertices());
        let mut mat = self.pattern.zeros();
        let mut local = [0.0; 36];
        for c in 0..self.mesh.n_cells() {
            let (geom, du, fbar, _) = self.cell_data(c, u);
            let cof = cofactor(&du);
            local.fill(0.0);
            for j in 0..3 {
                let gj = geom.grads[j];
                for b in 0..2 {
                    let cof_j = cof[b][0] * gj[0] + cof[b][1] * gj[1];
                    for k in 0..3 {
                        let gk = geom.grads[k];
                        for cc in 0..2 {
                            let d2 = d2det_basis(b, &gj, cc, &gk);
                            let cof_k = cof[cc][0] * gk[0] + cof[cc][1] * gk[1];
                            let mut val = mu[2] * d2;
                            for i in 0..2 {
                                let mut term = fbar[i] * d2;
                                if b == i {
                                    term += cof_k / 3.0;
                                }
                                if cc == i {
                                    term += cof_j / 3.0;
                                }
                                val += mu[i] * term;
                            }
                            local[6 * (2 * j + b) + (2 * k + cc)] += geom.area * val;
                        }
                    }
                }
            }
            self.pattern.scatter_add(mat.values_mut(), c, &local);
        }
        mat
    }

    /// Scaled feasibility check: volume against eval_tol * |Omega|,
    /// barycenter against eval_tol * |Omega| * diam(Omega).
    pub fn satisfied(&self, g: &[f64; 3]) -> bool {
        g[2].abs() <= self.eval_tol * self.area
            && g[0].abs() <= self.eval_tol * self.area * self.diam
            && g[1].abs() <= self.eval_tol * self.area * self.diam
    }
}
