//! Outer shape-optimization loop: per step solve the state and adjoint on
//! the current domain, assemble the restricted shape derivative, compute a
//! descent deformation, and accept the deformed domain only when the
//! dissipation strictly drops; otherwise halve the step bound sigma. Sigma
//! never grows back.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::constraints::GeometricConstraints;
use crate::error::Error;
use crate::flow::{energy, shape_derivative, solve_adjoint, solve_state, FlowConfig, FlowSolution};
use crate::mesh::TriMesh;
use crate::plap::{plap_descent, PlapConfig};
use crate::vtk::{vertex_magnitudes, write_vtk, VertexFields};
use crate::winf::{admm_descent, AdmmConfig, DescentResult};
use crate::Result;

const MAX_CONSECUTIVE_FAILURES: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DescentMethod {
    Winf,
    Plap,
}

impl DescentMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DescentMethod::Winf => "winf",
            DescentMethod::Plap => "plap",
        }
    }
}

impl std::fmt::Display for DescentMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DescentMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<DescentMethod> {
        match s {
            "winf" => Ok(DescentMethod::Winf),
            "plap" => Ok(DescentMethod::Plap),
            other => Err(Error::Input(format!("unknown descent method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub method: DescentMethod,
    pub m_steps: usize,
    pub sigma0: f64,
    /// multiplies the assembled shape derivative before each descent solve.
    /// The W^{1,inf} direction is invariant under positive scaling (doubling
    /// recovers magnitude), but a small factor keeps early Newton iterates
    /// inside the det(I + Du) > 0 region on fine meshes
    pub derivative_scale: f64,
    /// early stop once |J'(Omega)u| < sigma * eps1; disabled when None
    pub eps1: Option<f64>,
    pub flow: FlowConfig,
    /// the per-step bound comes from sigma0 and halving; `admm.sigma` is
    /// overridden
    pub admm: AdmmConfig,
    /// `plap.derivative_scale` is multiplied by sigma/sigma0 so rejections
    /// shrink the p-Laplace direction too
    pub plap: PlapConfig,
    /// where history.csv and timings.csv land; nothing is written when None
    pub out_dir: Option<PathBuf>,
    /// write step_NNNN.vtk after every step (requires out_dir)
    pub snapshots: bool,
    pub verbose: bool,
    #[doc(hidden)]
    pub negate_descent: bool,
}

impl Default for RunConfig {
    fn default() -> RunConfig {
        RunConfig {
            method: DescentMethod::Winf,
            m_steps: 50,
            sigma0: 0.3,
            derivative_scale: 1.0,
            eps1: None,
            flow: FlowConfig::default(),
            admm: AdmmConfig::default(),
            plap: PlapConfig::default(),
            out_dir: None,
            snapshots: false,
            verbose: false,
            negate_descent: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.m_steps == 0 {
            return Err(Error::Input("m_steps must be at least 1".into()));
        }
        if !(self.sigma0 > 0.0 && self.sigma0 < 1.0) {
            return Err(Error::Input(format!(
                "sigma0 must lie in (0,1), got {}",
                self.sigma0
            )));
        }
        if !(self.derivative_scale > 0.0 && self.derivative_scale.is_finite()) {
            return Err(Error::Input(format!(
                "derivative_scale must be positive and finite, got {}",
                self.derivative_scale
            )));
        }
        if matches!(self.eps1, Some(e) if !(e > 0.0)) {
            return Err(Error::Input("eps1 must be positive".into()));
        }
        if self.snapshots && self.out_dir.is_none() {
            return Err(Error::Input("snapshots need an output directory".into()));
        }
        self.flow.validate()?;
        self.admm.validate()?;
        self.plap.validate()
    }
}

/// One history row. `step` 0 describes the initial domain; rows 1..=M record
/// trials. `sigma` is the bound after the step's accept/reject decision, so
/// a rejection shows up as an exact halving against the previous row.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub j: f64,
    pub j_over_j0: f64,
    pub dju: Option<f64>,
    pub sigma: f64,
    pub accepted: bool,
    pub converged: bool,
    pub admm_iters: usize,
    pub newton_iters: usize,
    pub linear_solves: usize,
    pub max_du: Option<f64>,
    pub max_q: Option<f64>,
    pub g: [f64; 3],
    pub edge_ratio: f64,
    pub min_det: f64,
    pub area: f64,
    pub bary: [f64; 2],
}

#[derive(Debug, Clone, Copy)]
pub struct StepTiming {
    pub step: usize,
    pub adjoint_s: f64,
    pub descent_s: f64,
    pub trial_s: f64,
    pub total_s: f64,
}

#[derive(Debug, Clone, Default)]
pub struct RunHistory {
    pub method: String,
    pub j0: f64,
    pub steps: Vec<StepRecord>,
    pub timings: Vec<StepTiming>,
}

pub const HISTORY_HEADER: &str = "step,method,J,J_over_J0,dJu,sigma,accepted,converged,admm_iters,\
newton_iters,linear_solves,max_du,max_q,g_bx,g_by,g_vol,edge_ratio,min_det,area,bary_x,bary_y";

fn opt_num(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl RunHistory {
    pub fn history_csv(&self) -> String {
        let mut s = String::from(HISTORY_HEADER);
        s.push('\n');
        for r in &self.steps {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.step,
                self.method,
                r.j,
                r.j_over_j0,
                opt_num(r.dju),
                r.sigma,
                r.accepted as u8,
                r.converged as u8,
                r.admm_iters,
                r.newton_iters,
                r.linear_solves,
                opt_num(r.max_du),
                opt_num(r.max_q),
                r.g[0],
                r.g[1],
                r.g[2],
                r.edge_ratio,
                r.min_det,
                r.area,
                r.bary[0],
                r.bary[1],
            );
        }
        s
    }

    pub fn timings_csv(&self) -> String {
        let mut s = String::from("step,adjoint_s,descent_s,trial_s,total_s\n");
        for t in &self.timings {
            let _ = writeln!(
                s,
                "{},{:.6},{:.6},{:.6},{:.6}",
                t.step, t.adjoint_s, t.descent_s, t.trial_s, t.total_s
            );
        }
        s
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let io_err = |path: &Path| {
            let path = path.display().to_string();
            move |source| Error::Io { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let hist = dir.join("history.csv");
        std::fs::write(&hist, self.history_csv()).map_err(io_err(&hist))?;
        let tim = dir.join("timings.csv");
        std::fs::write(&tim, self.timings_csv()).map_err(io_err(&tim))
    }
}

fn write_snapshot(
    dir: &Path,
    step: usize,
    mesh: &TriMesh,
    state: &FlowSolution,
    adjoint: &FlowSolution,
    u: &[f64],
) -> Result<()> {
    let nv = mesh.n_vertices();
    let vel_mag = vertex_magnitudes(&state.velocity, nv);
    let adj_mag = vertex_magnitudes(&adjoint.velocity, nv);
    let fields = VertexFields {
        scalars: vec![
            ("vel_mag", &vel_mag),
            ("pressure", &state.pressure),
            ("adjoint_mag", &adj_mag),
        ],
        vectors: vec![("deformation", u)],
    };
    write_vtk(mesh, &fields, &dir.join(format!("step_{step:04}.vtk")))
}

fn descend(
    mesh: &TriMesh,
    dual: &[f64],
    sigma: f64,
    cfg: &RunConfig,
) -> Result<DescentResult> {
    let gc = GeometricConstraints::new(mesh);
    let scaled: Vec<f64>;
    let dual = if cfg.derivative_scale == 1.0 {
        dual
    } else {
        scaled = dual.iter().map(|x| cfg.derivative_scale * x).collect();
        &scaled
    };
    match cfg.method {
        DescentMethod::Winf => {
            let admm = AdmmConfig {
                sigma,
                ..cfg.admm.clone()
            };
            admm_descent(mesh, dual, Some(&gc), &admm)
        }
        DescentMethod::Plap => {
            let plap = PlapConfig {
                derivative_scale: cfg.plap.derivative_scale * sigma / cfg.sigma0,
                ..cfg.plap.clone()
            };
            plap_descent(mesh, dual, Some(&gc), &plap)
        }
    }
}

/// Runs up to `m_steps` outer iterations from `mesh0` and returns the final
/// domain with the per-step history. Trial-state failures count as
/// rejections; ten in a row abort the run.
pub fn optimize(mesh0: &TriMesh, cfg: &RunConfig) -> Result<(TriMesh, RunHistory)> {
    cfg.validate()?;
    if !mesh0.has_obstacle() {
        return Err(Error::Input("domain has no obstacle boundary".into()));
    }
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir).map_err(|source| Error::Io {
            path: dir.display().to_string(),
            source,
        })?;
    }

    let mut mesh = mesh0.clone();
    let mut state = solve_state(&mesh, &cfg.flow).map_err(|e| Error::OuterStep {
        step: 0,
        source: Box::new(e),
    })?;
    let j0 = energy(&mesh, &state, cfg.flow.nu);
    let mut j = j0;
    let mut sigma = cfg.sigma0;
    let mut failures = 0usize;
    let mut history = RunHistory {
        method: cfg.method.as_str().to_string(),
        j0,
        ..RunHistory::default()
    };

    let q0 = mesh.quality_report(None);
    let (area0, bary0) = mesh.obstacle_measures();
    history.steps.push(StepRecord {
        step: 0,
        j: j0,
        j_over_j0: 1.0,
        dju: None,
        sigma,
        accepted: true,
        converged: true,
        admm_iters: 0,
        newton_iters: state.iterations,
        linear_solves: state.linear_solves,
        max_du: None,
        max_q: None,
        g: [0.0; 3],
        edge_ratio: q0.edge_length_ratio,
        min_det: q0.min_det_df,
        area: area0,
        bary: bary0,
    });
    if let (Some(dir), true) = (&cfg.out_dir, cfg.snapshots) {
        let zero_u = vec![0.0; 2 * mesh.n_vertices()];
        write_snapshot(dir, 0, &mesh, &state, &FlowSolution::zero(&mesh), &zero_u)?;
    }
    if cfg.verbose {
        println!("step 0: J {j0:.6e}");
    }

    for step in 1..=cfg.m_steps {
        let step_err = |e: Error| Error::OuterStep {
            step,
            source: Box::new(e),
        };
        let t_start = Instant::now();

        let adjoint = solve_adjoint(&mesh, &cfg.flow, &state).map_err(step_err)?;
        let t_adjoint = t_start.elapsed().as_secs_f64();
        let grad = shape_derivative(&mesh, &cfg.flow, &state, &adjoint);

        let t_descent0 = Instant::now();
        let descent = descend(&mesh, &grad.dual, sigma, cfg).map_err(step_err)?;
        let t_descent = t_descent0.elapsed().as_secs_f64();

        if let Some(eps1) = cfg.eps1 {
            if descent.dju.abs() < sigma * eps1 {
                if cfg.verbose {
                    println!("step {step}: |J'u| {:.3e} below tolerance, stopping", descent.dju.abs());
                }
                break;
            }
        }

        let mut u = descent.u.clone();
        if cfg.negate_descent {
            for v in u.iter_mut() {
                *v = -*v;
            }
        }

        let t_trial0 = Instant::now();
        let trial = mesh
            .apply_deformation(&u)
            .and_then(|m| solve_state(&m, &cfg.flow).map(|s| (m, s)));
        let t_trial = t_trial0.elapsed().as_secs_f64();

        let quality = mesh.quality_report(Some(&u));
        let mut linear_solves = adjoint.linear_solves + descent.factorizations;
        let accepted = match trial {
            Ok((trial_mesh, trial_state)) => {
                failures = 0;
                linear_solves += trial_state.linear_solves;
                let j_trial = energy(&trial_mesh, &trial_state, cfg.flow.nu);
                if j_trial < j {
                    mesh = trial_mesh;
                    state = trial_state;
                    j = j_trial;
                    true
                } else {
                    sigma *= 0.5;
                    false
                }
            }
            Err(e) => {
                failures += 1;
                if failures >= MAX_CONSECUTIVE_FAILURES {
                    return Err(Error::ConsecutiveFailures {
                        step,
                        count: failures,
                        last: e.to_string(),
                    });
                }
                sigma *= 0.5;
                false
            }
        };

        let (area, bary) = mesh.obstacle_measures();
        history.steps.push(StepRecord {
            step,
            j,
            j_over_j0: j / j0,
            dju: Some(descent.dju),
            sigma,
            accepted,
            converged: descent.converged,
            admm_iters: descent.iterations,
            newton_iters: descent.newton_iters,
            linear_solves,
            max_du: Some(descent.max_du),
            max_q: descent.max_q,
            g: descent.g,
            edge_ratio: quality.edge_length_ratio,
            min_det: quality.min_det_df,
            area,
            bary,
        });
        history.timings.push(StepTiming {
            step,
            adjoint_s: t_adjoint,
            descent_s: t_descent,
            trial_s: t_trial,
            total_s: t_start.elapsed().as_secs_f64(),
        });
        if let (Some(dir), true) = (&cfg.out_dir, cfg.snapshots) {
            write_snapshot(dir, step, &mesh, &state, &adjoint, &u)?;
        }
        if cfg.verbose {
            println!(
                "step {step}: J {j:.6e} ratio {:.4} dJu {:.3e} sigma {sigma:.4} {}",
                j / j0,
                descent.dju,
                if accepted { "accepted" } else { "rejected" }
            );
        }
    }

    if let Some(dir) = &cfg.out_dir {
        history.write(dir)?;
    }
    Ok((mesh, history))
}
