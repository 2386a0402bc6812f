//! Adjoint solve for the dissipation functional: the transposed state
//! linearization with homogeneous velocity data on the whole Dirichlet set
//! and the natural condition on the outflow.

use super::th::ThAssembler;
use super::{FlowConfig, FlowSolution};
use crate::fem::solver::linear_solve;
use crate::mesh::{Marker, TriMesh};
use crate::Result;

pub fn solve_adjoint(mesh: &TriMesh, cfg: &FlowConfig, state: &FlowSolution) -> Result<FlowSolution> {
    cfg.validate()?;
    let asm = ThAssembler::new(mesh, cfg.nu, &[Marker::Inflow, Marker::Wall, Marker::Obstacle]);
    let x = pack(&asm, state);

    let mut at = asm.jacobian(&x, true).transpose();
    let mut rhs = asm.dissipation_dual(&x);
    for v in rhs.iter_mut() {
        *v = -*v;
    }
    let shift = mesh.marker_extent(Marker::Outflow).is_none();
    let mut bc: Vec<Option<f64>> = asm
        .space
        .velocity
        .dirichlet
        .iter()
        .map(|&d| if d { Some(0.0) } else { None })
        .chain(std::iter::repeat(None).take(mesh.n_vertices()))
        .collect();
    if shift {
        bc[asm.space.n_velocity] = Some(0.0);
    }
    at.apply_dirichlet(&mut rhs, &bc);
    let y = linear_solve(&at, &rhs, cfg.method)?;
    Ok(super::state::finish(&asm, y, shift, 1, 1))
}

pub(super) fn pack(asm: &ThAssembler, sol: &FlowSolution) -> Vec<f64> {
    assert_eq!(sol.velocity.len(), asm.space.n_velocity);
    assert_eq!(sol.pressure.len(), asm.mesh.n_vertices());
    let mut x = Vec::with_capacity(asm.space.n_total);
    x.extend_from_slice(&sol.velocity);
    x.extend_from_slice(&sol.pressure);
    x
}
