//! Volumetric shape derivative of the dissipation objective, obtained as the
//! t-derivative at 0 of the transported discrete Lagrangian (dx picks up
//! det(I + tDu), every gradient a factor (I + tDu)^{-1}).
//!
//! Per quadrature point, with state (v, p) and adjoint (w, r):
//!   S   = nu/2 |Dv|^2 + nu Dv:Dw + (Dv v).w - p div w - r div v
//!   G   = -nu (Dv^T Dv + Dv^T Dw + Dw^T Dv) - (Dv^T w) (x) v
//!         + p Dw^T + r Dv^T
//! and the derivative in direction u is int S div u + G : Du. The rule
//! degree matches the state/adjoint kernels, which makes the assembled dual
//! the exact derivative of the discrete objective under P1 vertex motion.

use super::th::{sample, ThAssembler};
use super::{FlowConfig, FlowSolution, ShapeGradient};
use crate::fem::assemble::{p2_gradients, p2_values, CellGeom};
use crate::mesh::{Marker, TriMesh};

/// Cells with at least one vertex on the obstacle boundary.
pub fn obstacle_support(mesh: &TriMesh) -> Vec<bool> {
    let on_obs = mesh.marked_vertex_flags(|m| m == Marker::Obstacle);
    (0..mesh.n_cells())
        .map(|c| mesh.cell(c).iter().any(|&v| on_obs[v]))
        .collect()
}

fn assemble(
    mesh: &TriMesh,
    cfg: &FlowConfig,
    state: &FlowSolution,
    adjoint: &FlowSolution,
    mask: Option<&[bool]>,
) -> Vec<f64> {
    let asm = ThAssembler::new(mesh, cfg.nu, &[]);
    let xs = super::adjoint::pack(&asm, state);
    let xa = super::adjoint::pack(&asm, adjoint);
    let nu = cfg.nu;
    let mut dual = vec![0.0; 2 * mesh.n_vertices()];
    for c in 0..mesh.n_cells() {
        if let Some(m) = mask {
            if !m[c] {
                continue;
            }
        }
        let geom = CellGeom::new(mesh, c);
        let ls = asm.gather(&xs, c);
        let la = asm.gather(&xa, c);
        let mut sbar = 0.0;
        let mut gbar = [[0.0; 2]; 2];
        for qp in asm.quad.points {
            let phi = p2_values(qp.bary);
            let dphi = p2_gradients(qp.bary, &geom.grads);
            let s = sample(&ls, &phi, &dphi, qp.bary);
            let a = sample(&la, &phi, &dphi, qp.bary);
            let w = qp.weight * geom.area;

            let dv = s.dv;
            let dw = a.dv;
            let frob_vv: f64 = (0..2)
                .map(|i| (0..2).map(|j| dv[i][j] * dv[i][j]).sum::<f64>())
                .sum();
            let frob_vw: f64 = (0..2)
                .map(|i| (0..2).map(|j| dv[i][j] * dw[i][j]).sum::<f64>())
                .sum();
            let conv = [
                dv[0][0] * s.v[0] + dv[0][1] * s.v[1],
                dv[1][0] * s.v[0] + dv[1][1] * s.v[1],
            ];
            let div_v = dv[0][0] + dv[1][1];
            let div_w = dw[0][0] + dw[1][1];
            sbar += w
                * (0.5 * nu * frob_vv + nu * frob_vw + conv[0] * a.v[0] + conv[1] * a.v[1]
                    - s.p * div_w
                    - a.p * div_v);

            // Dv^T w
            let dvt_w = [
                dv[0][0] * a.v[0] + dv[1][0] * a.v[1],
                dv[0][1] * a.v[0] + dv[1][1] * a.v[1],
            ];
            for b in 0..2 {
                for cc in 0..2 {
                    let mut g = 0.0;
                    for k in 0..2 {
                        g -= nu * (dv[k][b] * dv[k][cc] + dv[k][b] * dw[k][cc] + dw[k][b] * dv[k][cc]);
                    }
                    g -= dvt_w[b] * s.v[cc];
                    g += s.p * dw[cc][b] + a.p * dv[cc][b];
                    gbar[b][cc] += w * g;
                }
            }
        }
        for (j, &v) in mesh.cell(c).iter().enumerate() {
            let gj = geom.grads[j];
            for a in 0..2 {
                dual[2 * v + a] += sbar * gj[a] + gbar[a][0] * gj[0] + gbar[a][1] * gj[1];
            }
        }
    }
    dual
}

/// Restricted derivative: assembled only over cells touching Gamma_obs,
/// zeroed at outer-boundary dofs.
pub fn shape_derivative(
    mesh: &TriMesh,
    cfg: &FlowConfig,
    state: &FlowSolution,
    adjoint: &FlowSolution,
) -> ShapeGradient {
    let mask = obstacle_support(mesh);
    let mut dual = assemble(mesh, cfg, state, adjoint, Some(&mask));
    let outer = mesh.marked_vertex_flags(|m| m.is_outer());
    for (v, &fixed) in outer.iter().enumerate() {
        if fixed {
            dual[2 * v] = 0.0;
            dual[2 * v + 1] = 0.0;
        }
    }
    ShapeGradient { dual, mask }
}

/// Unrestricted derivative over the whole domain; finite-difference oracle.
pub fn shape_derivative_full(
    mesh: &TriMesh,
    cfg: &FlowConfig,
    state: &FlowSolution,
    adjoint: &FlowSolution,
) -> Vec<f64> {
    assemble(mesh, cfg, state, adjoint, None)
}
