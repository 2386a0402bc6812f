//! p-Laplace relaxation baseline: the descent direction is the stationary
//! point of J'(Omega)u + int (eps + Du:Du)^{p/2} under the same boundary and
//! geometric constraints as the W^{1,inf} method, continued over an
//! increasing p schedule so each stage warm-starts the next.

use crate::constraints::GeometricConstraints;
use crate::error::Error;
use crate::fem::assemble::{p0_dual_gradient, p1_vector_gradient, CellGeom};
use crate::fem::solver::{SparseLu, ABS_TOL, REL_TOL};
use crate::fem::space::{build_space, SpaceKind};
use crate::fem::sparse::{Pattern, SparseMatrix};
use crate::mesh::TriMesh;
use crate::winf::{cell_gradients, min_det, schur_step, tensor_norm, AdmmRecord, DescentResult, TensorNorm};
use crate::Result;

#[derive(Debug, Clone)]
pub struct PlapConfig {
    /// strictly increasing, first entry 2; the last entry is p_max
    pub p_schedule: Vec<f64>,
    /// floor inside the (p-2)/2 power
    pub eps_reg: f64,
    pub newton_max_iters: usize,
    /// scaling applied to the derivative before solving
    pub derivative_scale: f64,
}

impl Default for PlapConfig {
    fn default() -> PlapConfig {
        PlapConfig {
            p_schedule: vec![2.0, 2.5, 3.0, 3.5, 4.0, 4.4, 4.8],
            eps_reg: 1e-10,
            newton_max_iters: 50,
            derivative_scale: 1.0,
        }
    }
}

impl PlapConfig {
    pub fn validate(&self) -> Result<()> {
        match self.p_schedule.first() {
            None => return Err(Error::Input("p schedule is empty".into())),
            Some(&first) if first != 2.0 => {
                return Err(Error::Input(format!("p schedule must start at 2, got {first}")))
            }
            _ => {}
        }
        if self.p_schedule.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Input("p schedule must be strictly increasing".into()));
        }
        if self.p_schedule.iter().any(|p| !p.is_finite()) {
            return Err(Error::Input("p schedule entries must be finite".into()));
        }
        if !(self.eps_reg > 0.0) {
            return Err(Error::Input(format!(
                "regularization must be positive, got {}",
                self.eps_reg
            )));
        }
        if self.newton_max_iters == 0 {
            return Err(Error::Input("iteration budgets must be at least 1".into()));
        }
        if !(self.derivative_scale > 0.0 && self.derivative_scale.is_finite()) {
            return Err(Error::Input(format!(
                "derivative scale must be positive, got {}",
                self.derivative_scale
            )));
        }
        Ok(())
    }

    pub fn p_max(&self) -> f64 {
        *self.p_schedule.last().unwrap_or(&2.0)
    }
}

struct StageWorkspace<'m> {
    mesh: &'m TriMesh,
    pattern: Pattern,
    geoms: Vec<CellGeom>,
    /// unit vector-stiffness blocks, row-major 36 per cell
    stiff: Vec<[f64; 36]>,
    dirichlet: Vec<Option<f64>>,
    free: Vec<bool>,
    lu: Option<SparseLu>,
}

impl<'m> StageWorkspace<'m> {
    fn new(mesh: &'m TriMesh) -> StageWorkspace<'m> {
        let space = build_space(mesh, SpaceKind::P1Vector, &[]);
        let pattern = Pattern::build(space.n_dofs, &space.cell_dofs, 6);
        let geoms: Vec<CellGeom> = (0..mesh.n_cells()).map(|c| CellGeom::new(mesh, c)).collect();
        let stiff = geoms
            .iter()
            .map(|geom| {
                let mut local = [0.0; 36];
                for i in 0..3 {
                    for j in 0..3 {
                        let k = geom.area
                            * (geom.grads[i][0] * geom.grads[j][0]
                                + geom.grads[i][1] * geom.grads[j][1]);
                        for a in 0..2 {
                            local[6 * (2 * i + a) + (2 * j + a)] = k;
                        }
                    }
                }
                local
            })
            .collect();
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
        StageWorkspace {
            mesh,
            pattern,
            geoms,
            stiff,
            dirichlet,
            free,
            lu: None,
        }
    }

    /// Cellwise (s, Du) with s = eps + Du:Du.
    fn cell_state(&self, u: &[f64], c: usize, eps: f64) -> (f64, [[f64; 2]; 2]) {
        let mut local = [0.0; 6];
        for (i, &v) in self.mesh.cell(c).iter().enumerate() {
            local[2 * i] = u[2 * v];
            local[2 * i + 1] = u[2 * v + 1];
        }
        let du = p1_vector_gradient(&self.geoms[c], &local);
        let s = eps
            + du[0][0] * du[0][0]
            + du[0][1] * du[0][1]
            + du[1][0] * du[1][0]
            + du[1][1] * du[1][1];
        (s, du)
    }

    /// Second variation of the p-energy at u plus the constraint Hessian:
    /// per cell s^{(p-2)/2} stiffness + (p-2) s^{(p-4)/2} area b b^T with
    /// b[dof] = Du : D(basis_dof).
    fn hessian(
        &self,
        u: &[f64],
        mu: [f64; 3],
        constraints: Option<&GeometricConstraints>,
        p: f64,
        eps: f64,
    ) -> SparseMatrix {
        let mut a = match constraints {
            Some(gc) => gc.hessian_contribution(u, mu),
            None => self.pattern.zeros(),
        };
        assert_eq!(a.values().len(), self.pattern.zeros().values().len());
        let mut local = [0.0; 36];
        for c in 0..self.mesh.n_cells() {
            let (s, du) = self.cell_state(u, c, eps);
            let c1 = s.powf(0.5 * (p - 2.0));
            let c2 = (p - 2.0) * s.powf(0.5 * (p - 4.0));
            let geom = &self.geoms[c];
            let mut b = [0.0; 6];
            for i in 0..3 {
                for a_ in 0..2 {
                    b[2 * i + a_] = du[a_][0] * geom.grads[i][0] + du[a_][1] * geom.grads[i][1];
                }
            }
            for (loc, st) in local.iter_mut().zip(&self.stiff[c]) {
                *loc = c1 * st;
            }
            for i in 0..6 {
                for j in 0..6 {
                    local[6 * i + j] += c2 * geom.area * b[i] * b[j];
                }
            }
            self.pattern.scatter_add(a.values_mut(), c, &local);
        }
        a
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

fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

/// Stationarity residuals: r_u = -(j + p-term + B mu) zeroed at fixed dofs,
/// r_mu = -g, and their combined norm.
fn stage_residuals(
    ws: &StageWorkspace,
    j: &[f64],
    u: &[f64],
    mu: [f64; 3],
    constraints: Option<&GeometricConstraints>,
    p: f64,
    eps: f64,
) -> (Vec<f64>, [f64; 3], f64) {
    let n = u.len();
    let mut w = vec![0.0; 4 * ws.mesh.n_cells()];
    for c in 0..ws.mesh.n_cells() {
        let (s, du) = ws.cell_state(u, c, eps);
        let c1 = s.powf(0.5 * (p - 2.0));
        w[4 * c] = c1 * du[0][0];
        w[4 * c + 1] = c1 * du[0][1];
        w[4 * c + 2] = c1 * du[1][0];
        w[4 * c + 3] = c1 * du[1][1];
    }
    let mut ru = p0_dual_gradient(ws.mesh, &w);
    for i in 0..n {
        ru[i] = -(j[i] + ru[i]);
    }
    let rg = match constraints {
        Some(gc) => {
            let b = gc.gradient(u);
            for i in 0..n {
                ru[i] -= mu[0] * b[0][i] + mu[1] * b[1][i] + mu[2] * b[2][i];
            }
            let g = gc.eval(u);
            [-g[0], -g[1], -g[2]]
        }
        None => [0.0; 3],
    };
    for (ri, f) in ru.iter_mut().zip(&ws.free) {
        if !f {
            *ri = 0.0;
        }
    }
    let total = (norm_sq(&ru) + norm_sq(&rg)).sqrt();
    (ru, rg, total)
}

struct StageResult {
    u: Vec<f64>,
    mu: [f64; 3],
    newton_iters: usize,
    factorizations: usize,
    residual: f64,
}

/// Newton on one p stage, warm-started from (u0, mu0). Same Schur-complement
/// step, determinant guard, and halving line search as the W^{1,inf}
/// subproblem.
fn solve_stage(
    ws: &mut StageWorkspace,
    j: &[f64],
    u0: &[f64],
    mu0: [f64; 3],
    constraints: Option<&GeometricConstraints>,
    p: f64,
    cfg: &PlapConfig,
) -> Result<StageResult> {
    let mesh = ws.mesh;
    let eps = cfg.eps_reg;
    let mut u = u0.to_vec();
    let mut mu = mu0;
    let mut factorizations = 0usize;

    let (mut ru, mut rg, mut res) = stage_residuals(ws, j, &u, mu, constraints, p, eps);
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
        let mut a = ws.hessian(&u, mu, constraints, p, eps);
        let mut rhs_u = ru.clone();
        a.apply_dirichlet(&mut rhs_u, &ws.dirichlet);
        ws.factorize(&a)?;
        factorizations += 1;
        let lu = ws.lu.as_ref().unwrap();

        let (delta_u, delta_mu) = match constraints {
            Some(gc) => schur_step(lu, &rhs_u, &gc.gradient(&u), rg)?,
            None => (lu.solve(&rhs_u), [0.0; 3]),
        };

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
                let (rut, rgt, rest) = stage_residuals(ws, j, &ut, mt, constraints, p, eps);
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

    Ok(StageResult {
        u,
        mu,
        newton_iters: iters,
        factorizations,
        residual: res,
    })
}

/// Continuation over the p schedule; returns the p_max solution. The record
/// stream reuses the ADMM layout with one entry per stage and no doubling.
pub fn plap_descent(
    mesh: &TriMesh,
    j: &[f64],
    constraints: Option<&GeometricConstraints>,
    cfg: &PlapConfig,
) -> Result<DescentResult> {
    cfg.validate()?;
    let n = 2 * mesh.n_vertices();
    assert_eq!(j.len(), n);
    let scaled: Vec<f64> = j.iter().map(|v| cfg.derivative_scale * v).collect();

    let mut ws = StageWorkspace::new(mesh);
    let mut u = vec![0.0; n];
    let mut mu = [0.0; 3];
    let mut newton_iters = 0usize;
    let mut factorizations = 0usize;
    let mut records = Vec::with_capacity(cfg.p_schedule.len());
    let mut max_du = 0.0f64;

    for (stage, &p) in cfg.p_schedule.iter().enumerate() {
        let sol = solve_stage(&mut ws, &scaled, &u, mu, constraints, p, cfg).map_err(|e| {
            Error::PlapStage {
                p,
                source: Box::new(e),
            }
        })?;
        u = sol.u;
        mu = sol.mu;
        newton_iters += sol.newton_iters;
        factorizations += sol.factorizations;
        max_du = cell_gradients(mesh, &u)
            .chunks(4)
            .map(|t| tensor_norm(t, TensorNorm::Frobenius))
            .fold(0.0f64, f64::max);
        records.push(AdmmRecord {
            iteration: stage,
            residual: sol.residual,
            max_du,
            mu,
            doublings: 0,
        });
    }

    let dju = j.iter().zip(&u).map(|(a, b)| a * b).sum();
    let g = match constraints {
        Some(gc) => gc.eval(&u),
        None => [0.0; 3],
    };
    Ok(DescentResult {
        u,
        dju,
        iterations: cfg.p_schedule.len(),
        doublings: 0,
        converged: true,
        max_du,
        max_q: None,
        g,
        newton_iters,
        factorizations,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assemble::p1_vector_stiffness;
    use crate::fem::solver::dense_solve_in_place;
    use crate::mesh::{generate_channel_mesh, Rect};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_channel() -> TriMesh {
        generate_channel_mesh(
            Rect::new(-1.0, 1.0, -1.0, 1.0),
            Rect::new(-0.25, 0.25, -0.25, 0.25),
            8,
            None,
        )
        .unwrap()
    }

    fn synthetic_j(mesh: &TriMesh, seed: u64, scale: f64) -> Vec<f64> {
        let outer = mesh.marked_vertex_flags(|m| m.is_outer());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut j = vec![0.0; 2 * mesh.n_vertices()];
        for v in 0..mesh.n_vertices() {
            if !outer[v] {
                j[2 * v] = scale * rng.random_range(-1.0..1.0);
                j[2 * v + 1] = scale * rng.random_range(-1.0..1.0);
            }
        }
        j
    }

    #[test]
    fn zero_derivative_gives_zero_at_every_p() {
        let mesh = tiny_channel();
        let gc = GeometricConstraints::new(&mesh);
        let cfg = PlapConfig::default();
        let r = plap_descent(&mesh, &vec![0.0; 2 * mesh.n_vertices()], Some(&gc), &cfg).unwrap();
        assert!(r.converged);
        assert_eq!(r.iterations, cfg.p_schedule.len());
        assert_eq!(r.newton_iters, 0);
        assert!(r.u.iter().all(|&v| v == 0.0));
        assert!(r.records.iter().all(|rec| rec.max_du == 0.0));
        assert_eq!(r.dju, 0.0);
        assert!(r.max_q.is_none());
    }

    #[test]
    fn p2_matches_dense_saddle_oracle() {
        // at p = 2 the energy term is the plain vector Laplacian regardless
        // of eps, so for a small derivative the stationary point agrees with
        // the linear KKT system [K B; B^T 0][u; mu] = [-j; 0]
        let mesh = tiny_channel();
        let gc = GeometricConstraints::new(&mesh);
        let j = synthetic_j(&mesh, 7, 1e-6);
        let cfg = PlapConfig {
            p_schedule: vec![2.0],
            ..PlapConfig::default()
        };
        let r = plap_descent(&mesh, &j, Some(&gc), &cfg).unwrap();

        let n = 2 * mesh.n_vertices();
        let mut k = p1_vector_stiffness(&mesh);
        let outer = mesh.marked_vertex_flags(|m| m.is_outer());
        let mut bc = vec![None; n];
        for v in 0..mesh.n_vertices() {
            if outer[v] {
                bc[2 * v] = Some(0.0);
                bc[2 * v + 1] = Some(0.0);
            }
        }
        let mut rhs: Vec<f64> = j.iter().map(|v| -v).collect();
        k.apply_dirichlet(&mut rhs, &bc);
        let b = gc.gradient(&vec![0.0; n]);
        let m = n + 3;
        let mut dense = vec![0.0; m * m];
        for i in 0..n {
            for jj in 0..n {
                dense[m * i + jj] = k.get(i, jj);
            }
            for c in 0..3 {
                dense[m * i + (n + c)] = b[c][i];
                dense[m * (n + c) + i] = b[c][i];
            }
        }
        let mut sol = vec![0.0; m];
        sol[..n].copy_from_slice(&rhs);
        dense_solve_in_place(&mut dense, &mut sol).unwrap();

        let umax = sol[..n].iter().fold(0.0f64, |a, &v| a.max(v.abs()));
        assert!(umax > 1e-8, "oracle solution is degenerate: {umax:.3e}");
        for i in 0..n {
            assert!(
                (r.u[i] - sol[i]).abs() <= 1e-8,
                "dof {i}: {} vs {}",
                r.u[i],
                sol[i]
            );
        }
        for c in 0..3 {
            let mu = r.records.last().unwrap().mu[c];
            assert!((mu - sol[n + c]).abs() <= 1e-8, "mu[{c}]: {mu} vs {}", sol[n + c]);
        }
    }

    #[test]
    fn unconstrained_p2_is_the_plain_poisson_solve() {
        let mesh = tiny_channel();
        let j = synthetic_j(&mesh, 11, 1e-3);
        let cfg = PlapConfig {
            p_schedule: vec![2.0],
            ..PlapConfig::default()
        };
        let r = plap_descent(&mesh, &j, None, &cfg).unwrap();
        let mut k = p1_vector_stiffness(&mesh);
        let outer = mesh.marked_vertex_flags(|m| m.is_outer());
        let mut bc = vec![None; 2 * mesh.n_vertices()];
        for v in 0..mesh.n_vertices() {
            if outer[v] {
                bc[2 * v] = Some(0.0);
                bc[2 * v + 1] = Some(0.0);
            }
        }
        let mut rhs: Vec<f64> = j.iter().map(|v| -v).collect();
        k.apply_dirichlet(&mut rhs, &bc);
        let direct = SparseLu::new(&k).unwrap().solve(&rhs);
        for (a, b) in r.u.iter().zip(&direct) {
            assert!((a - b).abs() <= 1e-10, "{a} vs {b}");
        }
    }

    #[test]
    fn full_schedule_descends_and_satisfies_constraints() {
        let mesh = tiny_channel();
        let gc = GeometricConstraints::new(&mesh);
        let j = synthetic_j(&mesh, 31, 0.02);
        let cfg = PlapConfig::default();
        let r = plap_descent(&mesh, &j, Some(&gc), &cfg).unwrap();
        assert!(r.converged);
        assert!(r.dju < 0.0, "not a descent direction: {}", r.dju);
        assert!(gc.satisfied(&r.g), "constraints {:?}", r.g);
        assert!(min_det(&mesh, &r.u) > 0.0);
        assert_eq!(r.records.len(), cfg.p_schedule.len());
        assert!(r.max_q.is_none());
        let outer = mesh.marked_vertex_flags(|m| m.is_outer());
        for v in 0..mesh.n_vertices() {
            if outer[v] {
                assert_eq!(r.u[2 * v], 0.0);
                assert_eq!(r.u[2 * v + 1], 0.0);
            }
        }
    }

    #[test]
    fn regularization_insensitivity() {
        let mesh = tiny_channel();
        let gc = GeometricConstraints::new(&mesh);
        let j = synthetic_j(&mesh, 31, 0.02);
        let run = |eps: f64| {
            let cfg = PlapConfig {
                eps_reg: eps,
                ..PlapConfig::default()
            };
            plap_descent(&mesh, &j, Some(&gc), &cfg).unwrap().u
        };
        let a = run(1e-8);
        let b = run(1e-12);
        let scale = a.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let diff = a
            .iter()
            .zip(&b)
            .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
        assert!(scale > 0.0);
        assert!(diff <= 1e-4 * scale, "relative change {}", diff / scale);
    }

    #[test]
    fn invalid_schedules_are_rejected() {
        let mesh = tiny_channel();
        let j = vec![0.0; 2 * mesh.n_vertices()];
        let bad = [
            vec![],
            vec![2.5, 3.0],
            vec![2.0, 3.0, 3.0],
            vec![2.0, 3.0, 2.5],
        ];
        for schedule in bad {
            let cfg = PlapConfig {
                p_schedule: schedule.clone(),
                ..PlapConfig::default()
            };
            let r = plap_descent(&mesh, &j, None, &cfg);
            assert!(matches!(r, Err(Error::Input(_))), "accepted {schedule:?}");
        }
        let cfg = PlapConfig {
            eps_reg: 0.0,
            ..PlapConfig::default()
        };
        assert!(matches!(plap_descent(&mesh, &j, None, &cfg), Err(Error::Input(_))));
    }

    #[test]
    fn stage_failures_name_the_failing_p() {
        // a derivative far outside the invertible region stalls Newton in
        // the very first stage
        let mesh = tiny_channel();
        let gc = GeometricConstraints::new(&mesh);
        let j = synthetic_j(&mesh, 31, 50.0);
        let r = plap_descent(&mesh, &j, Some(&gc), &PlapConfig::default());
        match r {
            Err(Error::PlapStage { p, .. }) => assert_eq!(p, 2.0),
            other => panic!("expected a stage error, got {other:?}"),
        }
    }
}
