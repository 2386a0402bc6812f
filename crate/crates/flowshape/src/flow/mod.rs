//! Stationary Navier-Stokes on the channel: state and adjoint solves, the
//! dissipation objective, and its volumetric shape derivative.

pub mod adjoint;
pub mod shape;
pub mod state;
pub mod th;

pub use adjoint::solve_adjoint;
pub use shape::{obstacle_support, shape_derivative, shape_derivative_full};
pub use state::{solve_state, solve_state_forced};
pub use th::{p2_node_position, ThAssembler};

use crate::error::Error;
use crate::fem::assemble::{p2_gradients, CellGeom};
use crate::fem::quadrature::quad_rule;
use crate::fem::solver::SolveMethod;
use crate::fem::space::{build_space, SpaceKind};
use crate::mesh::TriMesh;
use crate::Result;

/// Inflow velocity profile, evaluated on the x-component along Gamma_in.
/// Values are clamped into [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InflowProfile {
    Zero,
    /// max(0, cos(pi (y - yc) / height)) over the inflow extent
    Cosine,
    /// max(0, 1 - ((y - yc) / half_height)^2)
    Parabolic,
}

impl InflowProfile {
    pub fn value(self, y: f64, ymin: f64, ymax: f64) -> f64 {
        let yc = 0.5 * (ymin + ymax);
        match self {
            InflowProfile::Zero => 0.0,
            InflowProfile::Cosine => {
                (std::f64::consts::PI * (y - yc) / (ymax - ymin)).cos().max(0.0)
            }
            InflowProfile::Parabolic => {
                let s = (y - yc) / (0.5 * (ymax - ymin));
                (1.0 - s * s).max(0.0)
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InflowProfile::Zero => "zero",
            InflowProfile::Cosine => "cosine",
            InflowProfile::Parabolic => "parabolic",
        }
    }
}

impl std::fmt::Display for InflowProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for InflowProfile {
    type Err = Error;
    fn from_str(s: &str) -> Result<InflowProfile> {
        match s {
            "zero" => Ok(InflowProfile::Zero),
            "cosine" => Ok(InflowProfile::Cosine),
            "parabolic" => Ok(InflowProfile::Parabolic),
            other => Err(Error::Input(format!("unknown inflow profile '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub nu: f64,
    pub inflow: InflowProfile,
    /// relative drop of the nonlinear residual (floor 1e-12 absolute)
    pub newton_tol: f64,
    pub newton_max_iters: usize,
    pub method: SolveMethod,
}

impl Default for FlowConfig {
    fn default() -> FlowConfig {
        FlowConfig {
            nu: 0.02,
            inflow: InflowProfile::Cosine,
            newton_tol: 1e-10,
            newton_max_iters: 25,
            method: SolveMethod::DirectSparse,
        }
    }
}

impl FlowConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.nu > 0.0 && self.nu.is_finite()) {
            return Err(Error::Input(format!("viscosity must be positive, got {}", self.nu)));
        }
        if self.newton_max_iters == 0 {
            return Err(Error::Input("newton_max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Velocity (P2 vector) and pressure (P1) coefficients. The same type holds
/// the adjoint pair (w, r).
#[derive(Debug, Clone)]
pub struct FlowSolution {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
    pub iterations: usize,
    pub linear_solves: usize,
}

impl FlowSolution {
    pub fn zero(mesh: &TriMesh) -> FlowSolution {
        FlowSolution {
            velocity: vec![0.0; 2 * (mesh.n_vertices() + mesh.n_edges())],
            pressure: vec![0.0; mesh.n_vertices()],
            iterations: 0,
            linear_solves: 0,
        }
    }
}

/// Shape derivative as a dual vector over P1 vertex deformations, restricted
/// to cells touching the obstacle.
#[derive(Debug, Clone)]
pub struct ShapeGradient {
    pub dual: Vec<f64>,
    /// cells with a vertex on Gamma_obs (assembly support)
    pub mask: Vec<bool>,
}

/// Dissipation J = nu/2 int Dv : Dv, same quadrature as the solvers.
pub fn energy(mesh: &TriMesh, sol: &FlowSolution, nu: f64) -> f64 {
    let space = build_space(mesh, SpaceKind::P2Vector, &[]);
    let rule = quad_rule(th::QUAD_DEGREE);
    let mut j = 0.0;
    for c in 0..mesh.n_cells() {
        let geom = CellGeom::new(mesh, c);
        let dofs = space.cell(c);
        for qp in rule.points {
            let dphi = p2_gradients(qp.bary, &geom.grads);
            let mut frob = 0.0;
            for a in 0..2 {
                for b in 0..2 {
                    let mut d = 0.0;
                    for i in 0..6 {
                        d += sol.velocity[dofs[2 * i + a]] * dphi[i][b];
                    }
                    frob += d * d;
                }
            }
            j += qp.weight * geom.area * frob;
        }
    }
    0.5 * nu * j
}
