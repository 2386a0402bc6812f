//! ADMM for the constrained W^{1,inf} steepest-descent direction: minimize
//! J'(Omega)u over deformations with u = 0 on the outer boundary,
//! elementwise |Du| <= sigma, and exact volume/barycenter preservation.
//!
//! The splitting introduces a cellwise tensor q for Du with multiplier
//! lambda and penalty tau; each sweep projects q onto the sigma-ball,
//! re-solves the u-subproblem (a Poisson-type problem with the nonlinear
//! geometric constraints) by Newton, and updates lambda. When the bound is
//! slack at convergence the derivative is doubled and the sweep continues,
//! so the returned direction exhausts the trust region.

use crate::constraints::GeometricConstraints;
use crate::error::Error;
use crate::fem::assemble::{
    p0_dual_gradient, p0_tensor_l2_norm_sq, p1_vector_gradient, p1_vector_l2_norm_sq,
    p1_vector_stiffness, CellGeom,
};
use crate::fem::solver::{dense_solve_in_place, SparseLu, ABS_TOL, REL_TOL};
use crate::fem::sparse::SparseMatrix;
use crate::mesh::TriMesh;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TensorNorm {
    Spectral,
    Frobenius,
}

impl TensorNorm {
    pub fn as_str(&self) -> &'static str {
        match self {
            TensorNorm::Spectral => "spectral",
            TensorNorm::Frobenius => "frobenius",
        }
    }
}

impl std::str::FromStr for TensorNorm {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<TensorNorm> {
        match s {
            "spectral" => Ok(TensorNorm::Spectral),
            "frobenius" => Ok(TensorNorm::Frobenius),
            other => Err(crate::Error::Input(format!("unknown norm '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Projection {
    /// q / max(1, |q|/sigma): exact for the Frobenius ball, a cheap
    /// surrogate for the spectral one
    Radial,
    /// clip singular values at sigma: exact for the spectral ball
    Clip,
}

impl Projection {
    pub fn as_str(&self) -> &'static str {
        match self {
            Projection::Radial => "radial",
            Projection::Clip => "clip",
        }
    }
}

impl std::str::FromStr for Projection {
    type Err = crate::Error;
    fn from_str(s: &str) -> Result<Projection> {
        match s {
            "radial" => Ok(Projection::Radial),
            "clip" => Ok(Projection::Clip),
            other => Err(crate::Error::Input(format!("unknown projection '{other}'"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct AdmmConfig {
    /// gradient bound, in (0, 1)
    pub sigma: f64,
    /// penalty, fixed to 1 by the method
    pub tau: f64,
    /// squared-update tolerance; default 1e-6 * n_cells * sigma^2
    pub eps2: Option<f64>,
    /// slack tolerance on sigma - max|Du|; default 0.05 * sigma
    pub eps3: Option<f64>,
    pub max_iters: usize,
    pub norm: TensorNorm,
    pub projection: Projection,
    pub doubling_cap: usize,
    pub newton_max_iters: usize,
    /// record per-Newton-step data for the dense oracles
    pub trace: bool,
}

impl Default for AdmmConfig {
    fn default() -> AdmmConfig {
        AdmmConfig {
            sigma: 0.3,
            tau: 1.0,
            eps2: None,
            eps3: None,
            max_iters: 200,
            norm: TensorNorm::Spectral,
            projection: Projection::Radial,
            doubling_cap: 20,
            newton_max_iters: 50,
            trace: false,
        }
    }
}

impl AdmmConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma < 1.0) {
            return Err(Error::Input(format!("sigma must lie in (0,1), got {}", self.sigma)));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Input(format!("tau must be positive, got {}", self.tau)));
        }
        if self.max_iters == 0 || self.newton_max_iters == 0 {
            return Err(Error::Input("iteration budgets must be at least 1".into()));
        }
        if matches!((self.eps2, self.eps3), (Some(e), _) | (_, Some(e)) if e <= 0.0) {
            return Err(Error::Input("tolerances must be positive".into()));
        }
        Ok(())
    }

    pub fn resolved_eps2(&self, n_cells: usize) -> f64 {
        self.eps2
            .unwrap_or(1e-6 * n_cells as f64 * self.sigma * self.sigma)
    }

    pub fn resolved_eps3(&self) -> f64 {
        self.eps3.unwrap_or(0.05 * self.sigma)
    }
}

/// Splitting state: P1 deformation u, cellwise tensor q, multiplier lambda
/// (both row-major 4 per cell), geometric multipliers mu.
#[derive(Debug, Clone)]
pub struct AdmmState {
    pub u: Vec<f64>,
    pub q: Vec<f64>,
    pub lambda: Vec<f64>,
    pub mu: [f64; 3],
}

#[derive(Debug, Clone, Copy)]
pub struct AdmmRecord {
    pub iteration: usize,
    pub residual: f64,
    pub max_du: f64,
    pub mu: [f64; 3],
    pub doublings: usize,
}

#[derive(Debug, Clone)]
pub struct DescentResult {
    pub u: Vec<f64>,
    /// directional value against the original (undoubled) derivative
    pub dju: f64,
    pub iterations: usize,
    pub doublings: usize,
    pub converged: bool,
    pub max_du: f64,
    /// largest cell norm of the final q (None for methods without q)
    pub max_q: Option<f64>,
    /// constraint values at the returned u
    pub g: [f64; 3],
    pub newton_iters: usize,
    pub factorizations: usize,
    pub records: Vec<AdmmRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Convergence {
    Continue,
    DoubleDerivative,
    Converged,
    Budget,
}

/// Cellwise gradient tensors of a P1 field, row-major 4 per cell.
pub fn cell_gradients(mesh: &TriMesh, u: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(4 * mesh.n_cells());
    for c in 0..mesh.n_cells() {
        let geom = CellGeom::new(mesh, c);
        let mut local = [0.0; 6];
        for (i, &v) in mesh.cell(c).iter().enumerate() {
            local[2 * i] = u[2 * v];
            local[2 * i + 1] = u[2 * v + 1];
        }
        let du = p1_vector_gradient(&geom, &local);
        out.extend_from_slice(&[du[0][0], du[0][1], du[1][0], du[1][1]]);
    }
    out
}

pub fn min_det(mesh: &TriMesh, u: &[f64]) -> f64 {
    let grads = cell_gradients(mesh, u);
    (0..mesh.n_cells())
        .map(|c| {
            let t = &grads[4 * c..4 * c + 4];
            (1.0 + t[0]) * (1.0 + t[3]) - t[1] * t[2]
        })
        .fold(f64::INFINITY, f64::min)
}

fn frobenius(t: &[f64]) -> f64 {
    (t[0] * t[0] + t[1] * t[1] + t[2] * t[2] + t[3] * t[3]).sqrt()
}

/// Closed-form 2x2 singular data: M = R(phi) diag(s1, s2) R(theta)^T with
/// s1 >= |s2| (s2 carries the orientation sign).
fn svd2(t: &[f64]) -> (f64, f64, f64, f64) {
    let e = 0.5 * (t[0] + t[3]);
    let f = 0.5 * (t[0] - t[3]);
    let g = 0.5 * (t[2] + t[1]);
    let h = 0.5 * (t[2] - t[1]);
    let q = (e * e + h * h).sqrt();
    let r = (f * f + g * g).sqrt();
    let a1 = g.atan2(f);
    let a2 = h.atan2(e);
    (q + r, q - r, 0.5 * (a1 + a2), 0.5 * (a1 - a2))
}

pub fn tensor_norm(t: &[f64], norm: TensorNorm) -> f64 {
    match norm {
        TensorNorm::Frobenius => frobenius(t),
        TensorNorm::Spectral => svd2(t).0,
    }
}

fn clip_spectral(t: &[f64], sigma: f64) -> [f64; 4] {
    let (s1, s2, phi, theta) = svd2(t);
    let c1 = s1.min(sigma);
    let c2 = s2.clamp(-sigma, sigma);
    let (cp, sp) = (phi.cos(), phi.sin());
    let (ct, st) = (theta.cos(), theta.sin());
    // R(phi) diag(c1, c2) R(theta)^T
    [
        c1 * cp * ct + c2 * sp * st,
        c1 * cp * st - c2 * sp * ct,
        c1 * sp * ct - c2 * cp * st,
        c1 * sp * st + c2 * cp * ct,
    ]
}

/// Per-cell q-update: q = proj(Du + lambda). The L2 fit of Du + lambda in
/// the cellwise-constant tensor space is exact because Du is already
/// cellwise constant, so only the projection remains.
pub fn update_q(mesh: &TriMesh, u: &[f64], lambda: &[f64], cfg: &AdmmConfig) -> Vec<f64> {
    let mut q = cell_gradients(mesh, u);
    for (qc, lc) in q.chunks_mut(4).zip(lambda.chunks(4)) {
        for (a, b) in qc.iter_mut().zip(lc) {
            *a += b;
        }
        match (cfg.norm, cfg.projection) {
            (TensorNorm::Spectral, Projection::Clip) => {
                let clipped = clip_spectral(qc, cfg.sigma);
                qc.copy_from_slice(&clipped);
            }
            (norm, _) => {
                let scale = (tensor_norm(qc, norm) / cfg.sigma).max(1.0);
                for a in qc.iter_mut() {
                    *a /= scale;
                }
            }
        }
    }
    q
}

#[derive(Debug, Clone)]
pub struct NewtonStep {
    pub u_before: Vec<f64>,
    pub mu_before: [f64; 3],
    pub delta_u: Vec<f64>,
    pub delta_mu: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct SubproblemResult {
    pub u: Vec<f64>,
    pub mu: [f64; 3],
    pub newton_iters: usize,
    pub factorizations: usize,
    pub trace: Vec<NewtonStep>,
}

struct SubproblemWorkspace<'m> {
    mesh: &'m TriMesh,
    /// tau * vector Laplacian, the constant part of A
    tau_k: SparseMatrix,
    dirichlet: Vec<Option<f64>>,
    free: Vec<bool>,
    lu: Option<SparseLu>,
}

impl<'m> SubproblemWorkspace<'m> {
    fn new(mesh: &'m TriMesh, tau: f64) -> SubproblemWorkspace<'m> {
        let mut tau_k = p1_vector_stiffness(mesh);
        for v in tau_k.values_mut() {
            *v *= tau;
        }
        let outer = mesh.marked_vertex_flags(|m| m.is_outer());
        let mut dirichlet = vec![None; 2 * mesh.n_vertices()];
        let mut free = vec![true; 2 * mesh.n_vertices()];
        for (v, &fixed) in outer.iter().enumerate() {
            if fixed {
                dirichlet[2 * v] = Some(0.0);
                dirichlet[2 * v + 1] = Some(0.0);
                free[2 * v] = false;
                free[2 * v + 1] = false;
            }
        }
        SubproblemWorkspace {
            mesh,
            tau_k,
            dirichlet,
            free,
            lu: None,
        }
    }

    fn factorize(&mut self, a: &SparseMatrix) -> Result<()> {
        match self.lu.as_mut() {
            Some(lu) => lu.refactorize(a),
            None => {
                self.lu = Some(SparseLu::new(a)?);
                Ok(())
            }
        }
    }
}

/// -dL/du at (u, mu) given the fixed splitting data (q, lambda), zeroed at
/// outer-boundary dofs.
#[allow(clippy::too_many_arguments)]
fn residual_u(
    ws: &SubproblemWorkspace,
    j: &[f64],
    q: &[f64],
    lambda: &[f64],
    tau: f64,
    u: &[f64],
    mu: [f64; 3],
    constraints: Option<&GeometricConstraints>,
) -> Vec<f64> {
    let n = u.len();
    let mut r = vec![0.0; n];
    ws.tau_k.matvec_into(u, &mut r);
    let lam_minus_q: Vec<f64> = lambda.iter().zip(q).map(|(l, qq)| tau * (l - qq)).collect();
    let m = p0_dual_gradient(ws.mesh, &lam_minus_q);
    for i in 0..n {
        r[i] = -(j[i] + r[i] + m[i]);
    }
    if let Some(gc) = constraints {
        let b = gc.gradient(u);
        for i in 0..n {
            r[i] -= mu[0] * b[0][i] + mu[1] * b[1][i] + mu[2] * b[2][i];
        }
    }
    for (ri, f) in r.iter_mut().zip(&ws.free) {
        if !f {
            *ri = 0.0;
        }
    }
    r
}

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// One constrained Newton step through the 3x3 Schur complement of
/// [A B; B^T 0][du; dmu] = [r_u; r_g] around a factorized A. `rhs_u` must
/// already carry the Dirichlet elimination and the columns of `b` must be
/// zero at fixed dofs.
pub(crate) fn schur_step(
    lu: &SparseLu,
    rhs_u: &[f64],
    b: &[Vec<f64>; 3],
    rg: [f64; 3],
) -> Result<(Vec<f64>, [f64; 3])> {
    let z = lu.solve(rhs_u);
    let y = [lu.solve(&b[0]), lu.solve(&b[1]), lu.solve(&b[2])];
    let mut s = [0.0; 9];
    let mut rhs_mu = [0.0; 3];
    for i in 0..3 {
        for k in 0..3 {
            s[3 * i + k] = b[i].iter().zip(&y[k]).map(|(x, w)| x * w).sum();
        }
        let btz: f64 = b[i].iter().zip(&z).map(|(x, w)| x * w).sum();
        rhs_mu[i] = btz - rg[i];
    }
    dense_solve_in_place(&mut s, &mut rhs_mu)?;
    let du: Vec<f64> = z
        .iter()
        .enumerate()
        .map(|(i, &zi)| zi - y[0][i] * rhs_mu[0] - y[1][i] * rhs_mu[1] - y[2][i] * rhs_mu[2])
        .collect();
    Ok((du, rhs_mu))
}

/// Stationarity residuals (r_u, r_mu) and their combined norm.
#[allow(clippy::too_many_arguments)]
fn subproblem_residuals(
    ws: &SubproblemWorkspace,
    j: &[f64],
    q: &[f64],
    lambda: &[f64],
    tau: f64,
    u: &[f64],
    mu: [f64; 3],
    constraints: Option<&GeometricConstraints>,
) -> (Vec<f64>, [f64; 3], f64) {
    let ru = residual_u(ws, j, q, lambda, tau, u, mu, constraints);
    let rg = match constraints {
        Some(gc) => {
            let g = gc.eval(u);
            [-g[0], -g[1], -g[2]]
        }
        None => [0.0; 3],
    };
    let total = (norm_sq(&ru) + norm_sq(&rg)).sqrt();
    (ru, rg, total)
}

/// Newton on the stationarity system of the u-subproblem at fixed (q,
/// lambda). A Schur complement reduces each step to one factorization of
/// A = tau K + sum mu_i g_i'' plus d+1 constraint solves and a dense 3x3.
#[allow(clippy::too_many_arguments)]
pub fn solve_u_subproblem(
    mesh: &TriMesh,
    j: &[f64],
    q: &[f64],
    lambda: &[f64],
    u0: &[f64],
    mu0: [f64; 3],
    constraints: Option<&GeometricConstraints>,
    cfg: &AdmmConfig,
) -> Result<SubproblemResult> {
    let mut ws = SubproblemWorkspace::new(mesh, cfg.tau);
    solve_u_subproblem_with(&mut ws, mesh, j, q, lambda, u0, mu0, constraints, cfg)
}

#[allow(clippy::too_many_arguments)]
fn solve_u_subproblem_with(
    ws: &mut SubproblemWorkspace,
    mesh: &TriMesh,
    j: &[f64],
    q: &[f64],
    lambda: &[f64],
    u0: &[f64],
    mu0: [f64; 3],
    constraints: Option<&GeometricConstraints>,
    cfg: &AdmmConfig,
) -> Result<SubproblemResult> {
    let n = 2 * mesh.n_vertices();
    assert_eq!(j.len(), n);
    if min_det(mesh, u0) <= 0.0 {
        return Err(Error::Input("subproblem warm start is inverted".into()));
    }
    let mut u = u0.to_vec();
    let mut mu = mu0;
    let mut trace = Vec::new();
    let mut factorizations = 0usize;

    let (mut ru, mut rg, mut res) =
        subproblem_residuals(ws, j, q, lambda, cfg.tau, &u, mu, constraints);
    let floor = (REL_TOL * res).max(ABS_TOL);
    let mut history = vec![res];
    let mut iters = 0usize;

    while res > floor {
        if iters >= cfg.newton_max_iters {
            return Err(Error::NewtonNonconvergence {
                iterations: iters,
                history,
            });
        }
        // A = tau K + sum mu_i g_i'' with outer dofs eliminated
        let mut a = match constraints {
            Some(gc) => {
                let mut h = gc.hessian_contribution(&u, mu);
                assert_eq!(h.values().len(), ws.tau_k.values().len());
                for (hv, kv) in h.values_mut().iter_mut().zip(ws.tau_k.values()) {
                    *hv += kv;
                }
                h
            }
            None => ws.tau_k.clone(),
        };
        let mut rhs_u = ru.clone();
        a.apply_dirichlet(&mut rhs_u, &ws.dirichlet);
        ws.factorize(&a)?;
        factorizations += 1;
        let lu = ws.lu.as_ref().unwrap();

        let (delta_u, delta_mu) = match constraints {
            Some(gc) => schur_step(lu, &rhs_u, &gc.gradient(&u), rg)?,
            None => (lu.solve(&rhs_u), [0.0; 3]),
        };

        if cfg.trace {
            trace.push(NewtonStep {
                u_before: u.clone(),
                mu_before: mu,
                delta_u: delta_u.clone(),
                delta_mu,
            });
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..10 {
            let ut: Vec<f64> = u.iter().zip(&delta_u).map(|(a, d)| a + step * d).collect();
            let mt = [
                mu[0] + step * delta_mu[0],
                mu[1] + step * delta_mu[1],
                mu[2] + step * delta_mu[2],
            ];
            if min_det(mesh, &ut) > 0.0 {
                let (rut, rgt, rest) =
                    subproblem_residuals(ws, j, q, lambda, cfg.tau, &ut, mt, constraints);
                if rest < res {
                    u = ut;
                    mu = mt;
                    ru = rut;
                    rg = rgt;
                    res = rest;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        iters += 1;
        history.push(res);
        if !accepted {
            return Err(Error::NewtonNonconvergence {
                iterations: iters,
                history,
            });
        }
    }

    Ok(SubproblemResult {
        u,
        mu,
        newton_iters: iters,
        factorizations,
        trace,
    })
}

/// Branch logic of one ADMM sweep's tail. `residual` is the summed squared
/// L2 norm of the lambda and u updates, `delta_sigma` = sigma - max|Du|.
#[allow(clippy::too_many_arguments)]
pub fn check_convergence(
    residual: f64,
    delta_sigma: f64,
    doublings: usize,
    iteration: usize,
    eps2: f64,
    eps3: f64,
    doubling_cap: usize,
    max_iters: usize,
) -> Convergence {
    if residual < eps2 && delta_sigma > -eps3 && delta_sigma <= eps3 {
        return Convergence::Converged;
    }
    if iteration + 1 >= max_iters {
        return Convergence::Budget;
    }
    if residual < eps2 && delta_sigma > eps3 && doublings < doubling_cap {
        return Convergence::DoubleDerivative;
    }
    Convergence::Continue
}

/// Full sweep: returns the descent direction for the dual vector `j`
/// (entries at outer dofs must already be zero).
pub fn admm_descent(
    mesh: &TriMesh,
    j: &[f64],
    constraints: Option<&GeometricConstraints>,
    cfg: &AdmmConfig,
) -> Result<DescentResult> {
    cfg.validate()?;
    let n = 2 * mesh.n_vertices();
    assert_eq!(j.len(), n);
    let nc = mesh.n_cells();
    let eps2 = cfg.resolved_eps2(nc);
    let eps3 = cfg.resolved_eps3();

    let zero_g = |u: &[f64]| match constraints {
        Some(gc) => gc.eval(u),
        None => [0.0; 3],
    };

    if j.iter().all(|&v| v == 0.0) {
        return Ok(DescentResult {
            u: vec![0.0; n],
            dju: 0.0,
            iterations: 0,
            doublings: 0,
            converged: true,
            max_du: 0.0,
            max_q: Some(0.0),
            g: zero_g(&vec![0.0; n]),
            newton_iters: 0,
            factorizations: 0,
            records: Vec::new(),
        });
    }

    let mut ws = SubproblemWorkspace::new(mesh, cfg.tau);
    let mut jj = j.to_vec();
    let mut u = vec![0.0; n];
    let mut mu = [0.0; 3];
    let mut lambda = vec![0.0; 4 * nc];
    let mut doublings = 0usize;
    let mut newton_iters = 0usize;
    let mut factorizations = 0usize;
    let mut records = Vec::new();

    for iteration in 0..cfg.max_iters {
        let q = update_q(mesh, &u, &lambda, cfg);
        let sub = solve_u_subproblem_with(
            &mut ws,
            mesh,
            &jj,
            &q,
            &lambda,
            &u,
            mu,
            constraints,
            cfg,
        )
        .map_err(|e| Error::Subproblem {
            admm_iteration: iteration,
            source: Box::new(e),
        })?;
        newton_iters += sub.newton_iters;
        factorizations += sub.factorizations;

        let grads = cell_gradients(mesh, &sub.u);
        let mut delta_lambda = vec![0.0; 4 * nc];
        let mut max_du = 0.0f64;
        for c in 0..nc {
            let t = &grads[4 * c..4 * c + 4];
            max_du = max_du.max(tensor_norm(t, cfg.norm));
            for k in 0..4 {
                delta_lambda[4 * c + k] = cfg.tau * (t[k] - q[4 * c + k]);
            }
        }
        let delta_u: Vec<f64> = sub.u.iter().zip(&u).map(|(a, b)| a - b).collect();
        let residual =
            p0_tensor_l2_norm_sq(mesh, &delta_lambda) + p1_vector_l2_norm_sq(mesh, &delta_u);
        for (l, d) in lambda.iter_mut().zip(&delta_lambda) {
            *l += d;
        }
        u = sub.u;
        mu = sub.mu;

        records.push(AdmmRecord {
            iteration,
            residual,
            max_du,
            mu,
            doublings,
        });

        let verdict = check_convergence(
            residual,
            cfg.sigma - max_du,
            doublings,
            iteration,
            eps2,
            eps3,
            cfg.doubling_cap,
            cfg.max_iters,
        );
        match verdict {
            Convergence::DoubleDerivative => {
                for v in jj.iter_mut() {
                    *v *= 2.0;
                }
                doublings += 1;
            }
            Convergence::Converged | Convergence::Budget => {
                let dju = j.iter().zip(&u).map(|(a, b)| a * b).sum();
                let max_q = q
                    .chunks(4)
                    .map(|t| tensor_norm(t, cfg.norm))
                    .fold(0.0f64, f64::max);
                return Ok(DescentResult {
                    dju,
                    iterations: iteration + 1,
                    doublings,
                    converged: verdict == Convergence::Converged,
                    max_du,
                    max_q: Some(max_q),
                    g: zero_g(&u),
                    newton_iters,
                    factorizations,
                    records,
                    u,
                });
            }
            Convergence::Continue => {}
        }
    }
    unreachable!("check_convergence returns Budget at the final iteration");
}
