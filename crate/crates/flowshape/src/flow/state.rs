//! Stationary Navier-Stokes state solve: Stokes initialization, undamped
//! Newton with a halving fallback, direct sparse linear algebra.

use super::th::{p2_node_position, Forcing, ThAssembler};
use super::{FlowConfig, FlowSolution};
use crate::error::Error;
use crate::fem::solver::linear_solve;
use crate::mesh::{Marker, TriMesh};
use crate::Result;

pub(super) fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Dirichlet data for the physical state: inflow profile on Gamma_in,
/// no-slip on Gamma_wall and Gamma_obs, pressure unconstrained.
fn state_dirichlet(mesh: &TriMesh, asm: &ThAssembler, cfg: &FlowConfig) -> Result<Vec<Option<f64>>> {
    let (_, _, ymin, ymax) = mesh
        .marker_extent(Marker::Inflow)
        .ok_or_else(|| Error::Input("mesh has no inflow boundary".into()))?;
    if mesh.marker_extent(Marker::Outflow).is_none() {
        return Err(Error::Input("mesh has no outflow boundary".into()));
    }
    let inflow = crate::fem::space::build_space(mesh, crate::fem::space::SpaceKind::P2Vector, &[Marker::Inflow]);
    let mut bc = vec![None; asm.space.n_total];
    for dof in 0..asm.space.n_velocity {
        if inflow.dirichlet[dof] {
            let pos = p2_node_position(mesh, dof / 2);
            bc[dof] = Some(if dof % 2 == 0 {
                cfg.inflow.value(pos[1], ymin, ymax)
            } else {
                0.0
            });
        }
    }
    // no-slip wins at corners shared with the inflow
    for dof in 0..asm.space.n_velocity {
        if asm.space.velocity.dirichlet[dof] && bc[dof].is_none() {
            bc[dof] = Some(0.0);
        }
    }
    Ok(bc)
}

pub fn solve_state(mesh: &TriMesh, cfg: &FlowConfig) -> Result<FlowSolution> {
    cfg.validate()?;
    let asm = ThAssembler::new(mesh, cfg.nu, &[Marker::Inflow, Marker::Wall, Marker::Obstacle]);
    let bc = state_dirichlet(mesh, &asm, cfg)?;
    newton(&asm, cfg, bc, None, false)
}

/// Manufactured-solution entry: velocity Dirichlet data `bc_value` on every
/// boundary node, body force `forcing`, pressure gauge pinned then shifted
/// to zero mean (the velocity boundary leaves the gauge free).
pub fn solve_state_forced(
    mesh: &TriMesh,
    cfg: &FlowConfig,
    forcing: Forcing,
    bc_value: &dyn Fn([f64; 2]) -> [f64; 2],
) -> Result<FlowSolution> {
    cfg.validate()?;
    let all = [Marker::Inflow, Marker::Outflow, Marker::Wall, Marker::Obstacle];
    let asm = ThAssembler::new(mesh, cfg.nu, &all);
    let mut bc = vec![None; asm.space.n_total];
    for dof in 0..asm.space.n_velocity {
        if asm.space.velocity.dirichlet[dof] {
            let pos = p2_node_position(mesh, dof / 2);
            bc[dof] = Some(bc_value(pos)[dof % 2]);
        }
    }
    bc[asm.space.n_velocity] = Some(0.0);
    newton(&asm, cfg, bc, Some(forcing), true)
}

pub(super) fn finish(
    asm: &ThAssembler,
    x: Vec<f64>,
    shift_pressure: bool,
    iters: usize,
    solves: usize,
) -> FlowSolution {
    let (vel, mut pre) = {
        let (v, p) = x.split_at(asm.space.n_velocity);
        (v.to_vec(), p.to_vec())
    };
    if shift_pressure {
        let mut mean = 0.0;
        for c in 0..asm.mesh.n_cells() {
            let cell = asm.mesh.cell(c);
            let avg = (pre[cell[0]] + pre[cell[1]] + pre[cell[2]]) / 3.0;
            mean += asm.mesh.cell_area(c) * avg;
        }
        mean /= asm.mesh.total_area();
        for p in pre.iter_mut() {
            *p -= mean;
        }
    }
    FlowSolution {
        velocity: vel,
        pressure: pre,
        iterations: iters,
        linear_solves: solves,
    }
}

pub(super) fn newton(
    asm: &ThAssembler,
    cfg: &FlowConfig,
    bc: Vec<Option<f64>>,
    forcing: Option<Forcing>,
    shift_pressure: bool,
) -> Result<FlowSolution> {
    let mut x = vec![0.0; asm.space.n_total];
    for (xi, b) in x.iter_mut().zip(&bc) {
        if let Some(v) = b {
            *xi = *v;
        }
    }
    let zero_bc: Vec<Option<f64>> = bc.iter().map(|b| b.map(|_| 0.0)).collect();
    let constrained = |r: &mut Vec<f64>| {
        for (ri, b) in r.iter_mut().zip(&bc) {
            if b.is_some() {
                *ri = 0.0;
            }
        }
    };
    let eval = |x: &[f64], convection: bool| -> Vec<f64> {
        let mut r = asm.residual(x, forcing, convection);
        constrained(&mut r);
        r
    };

    let mut r = eval(&x, true);
    let res0 = l2(&r);
    let floor = (cfg.newton_tol * res0).max(1e-12);
    let mut history = vec![res0];
    let mut solves = 0usize;
    if res0 <= floor {
        return Ok(finish(asm, x, shift_pressure, 0, solves));
    }

    // Stokes initialization: one exact solve of the convection-free system
    {
        let mut rs = eval(&x, false);
        let mut a = asm.jacobian(&x, false);
        for v in rs.iter_mut() {
            *v = -*v;
        }
        a.apply_dirichlet(&mut rs, &zero_bc);
        let delta = linear_solve(&a, &rs, cfg.method)?;
        solves += 1;
        for (xi, d) in x.iter_mut().zip(&delta) {
            *xi += d;
        }
        r = eval(&x, true);
    }

    let mut res = l2(&r);
    history.push(res);
    for it in 0..cfg.newton_max_iters {
        if res <= floor {
            return Ok(finish(asm, x, shift_pressure, it, solves));
        }
        let mut rhs: Vec<f64> = r.iter().map(|v| -v).collect();
        let mut a = asm.jacobian(&x, true);
        a.apply_dirichlet(&mut rhs, &zero_bc);
        let delta = linear_solve(&a, &rhs, cfg.method)?;
        solves += 1;
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let xt: Vec<f64> = x.iter().zip(&delta).map(|(xi, d)| xi + step * d).collect();
            let rt = eval(&xt, true);
            let rest = l2(&rt);
            if rest < res {
                x = xt;
                r = rt;
                res = rest;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        history.push(res);
        if !accepted {
            return Err(Error::NewtonNonconvergence {
                iterations: it + 1,
                history,
            });
        }
    }
    if res <= floor {
        Ok(finish(asm, x, shift_pressure, cfg.newton_max_iters, solves))
    } else {
        Err(Error::NewtonNonconvergence {
            iterations: cfg.newton_max_iters,
            history,
        })
    }
}
