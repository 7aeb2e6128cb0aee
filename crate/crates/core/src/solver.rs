//! Direct minimization of the discretized Bolza functional.
//!
//! The iterate is the pair `(u, y)`. Gradients are Riesz representatives
//! for the inner product `h Σ_{k<N} u_k·v_k + y·z`, which keeps step sizes
//! independent of the mesh; the stopping test uses the projected gradient
//! in this metric. Steps follow a diagonal plus low-rank approximate
//! Hessian, projected onto `‖u_k‖ ≤ R`, with a Barzilai-Borwein trial step
//! and monotone Armijo backtracking. Endpoint constraints enter through `ρ_k d²_S(g)` over a
//! sequence of stages with growing `ρ_k` and shrinking `ε_k`.

use log::{debug, info};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::conditions::{residual_report, ResidualReport};
use crate::convex::CONE_TOL;
use crate::error::{Error, Result};
use crate::expr::{Env, Expr, Var};
use crate::frac_ops::{cost_weights, right_integral_cells, FracWeights};
use crate::functional::{
    bolza_eval, constraint_value, eval_all, feasibility_distance, linearize, Linearization, SecondDiffData,
};
use crate::grid::{norm, GridFn};
use crate::model::{validate, ProblemSpec, TrajectoryPair};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Control bound `‖u(t)‖ ≤ R`.
    pub radius: f64,
    /// `ε_k`, strictly decreasing; stage `k` stops once the projected
    /// gradient is below `max(grad_tol, √ε_k · gradient_scale)`.
    pub epsilon_schedule: Vec<f64>,
    /// Penalty weight `ρ_k` of each stage.
    pub penalty_weights: Vec<f64>,
    /// Iteration cap per stage.
    pub max_iters: usize,
    pub grad_tol: f64,
    pub gradient_scale: f64,
    pub shrink: f64,
    pub sufficient_decrease: f64,
    /// Tolerance of the Legendre check in the final report.
    pub legendre_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            radius: 1e3,
            epsilon_schedule: vec![1e-4, 1e-6, 1e-8, 1e-10],
            penalty_weights: vec![1e4, 1e5, 1e6, 1e7],
            max_iters: 5000,
            grad_tol: 1e-7,
            gradient_scale: 1.0,
            shrink: 0.5,
            sufficient_decrease: 1e-4,
            legendre_tol: 1e-9,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Domain(format!("solver config: {m}")));
        if !(self.radius > 0.0) {
            return bad(format!("radius {} must be positive", self.radius));
        }
        if self.epsilon_schedule.is_empty() || self.epsilon_schedule.len() != self.penalty_weights.len() {
            return bad("epsilon_schedule and penalty_weights must be non-empty and of equal length".into());
        }
        if self.epsilon_schedule.iter().any(|e| !(*e > 0.0)) || self.epsilon_schedule.windows(2).any(|w| w[1] >= w[0]) {
            return bad("epsilon_schedule must be positive and strictly decreasing".into());
        }
        if self.penalty_weights.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("penalty weights must be positive".into());
        }
        if self.max_iters == 0 || !(self.grad_tol > 0.0) || !(self.gradient_scale > 0.0) {
            return bad("max_iters, grad_tol and gradient_scale must be positive".into());
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0)
            || !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 1.0)
        {
            return bad("shrink and sufficient_decrease must lie in (0,1)".into());
        }
        Ok(())
    }
}

/// Summary of one penalty stage.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageRecord {
    pub penalty: f64,
    pub epsilon: f64,
    pub tolerance: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub feasibility_distance: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveResult {
    pub traj: TrajectoryPair,
    /// `Φ` at the final iterate, without penalty.
    pub objective: f64,
    pub feasibility_distance: f64,
    pub report: ResidualReport,
    pub iterations: usize,
    pub converged: bool,
    /// Projected-gradient norm of the last stage objective.
    pub grad_norm: f64,
    pub stages: Vec<StageRecord>,
}

/// Riesz gradient from linearization data and the total endpoint
/// coefficients `end_a = ∂F/∂x(a)`, `end_b = ∂F/∂x(b)`.
fn assemble_gradient(
    spec: &ProblemSpec,
    lin: &Linearization,
    end_a: &[f64],
    end_b: &[f64],
) -> Result<(GridFn, Vec<f64>)> {
    let grid = *spec.grid();
    let n = spec.dim();
    let nc = grid.n_cells();
    let h = grid.step();
    // Coefficient of δx_j in the first variation.
    let mut c = vec![0.0; (nc + 1) * n];
    for k in 0..nc {
        for i in 0..n {
            let half = 0.5 * lin.weights[k] * lin.l_x[k * n + i];
            c[k * n + i] += half;
            c[(k + 1) * n + i] += half;
        }
    }
    for i in 0..n {
        c[i] += end_a[i];
        c[nc * n + i] += end_b[i];
    }
    let mut grad_y = vec![0.0; n];
    for row in c.chunks_exact(n) {
        for (g, v) in grad_y.iter_mut().zip(row) {
            *g += v;
        }
    }
    // δx_j = δy + Σ_{m<j} W_{j-1-m} δu_m, so δu_m collects Σ_{j>m} W_{j-1-m} c_j.
    let mut gu = right_integral_cells(&grid, n, &c[n..], spec.alpha())?;
    for m in 0..nc {
        for i in 0..n {
            let v = &mut gu[m * n + i];
            *v = (*v + lin.weights[m] * lin.l_u[m * n + i]) / h;
        }
    }
    gu[nc * n..].fill(0.0);
    Ok((GridFn::from_raw(grid, n, gu), grad_y))
}

/// Gradient of `Φ` with respect to `(u, y)`, Riesz-represented so that
/// `h Σ_{k<N} grad_u[k]·δu_k + grad_y·δy = gateaux_first(δ)`.
pub fn objective_gradient(spec: &ProblemSpec, traj: &TrajectoryPair) -> Result<(GridFn, Vec<f64>)> {
    let lin = linearize(spec, traj)?;
    assemble_gradient(spec, &lin, &lin.phi_a, &lin.phi_b)
}

/// `Φ + ρ d²_S(g(x(a), x(b)))`.
struct Penalized<'a> {
    spec: &'a ProblemSpec,
    rho: f64,
}

impl Penalized<'_> {
    fn value(&self, traj: &TrajectoryPair) -> Result<f64> {
        let mut v = bolza_eval(self.spec, traj)?;
        if self.rho > 0.0 {
            let x = traj.state(self.spec.alpha())?;
            if let Some((g, set)) = constraint_value(self.spec, &x)? {
                v += self.rho * set.dist_sq(&g)?;
            }
        }
        Ok(v)
    }

    fn value_and_gradient(&self, traj: &TrajectoryPair) -> Result<(f64, GridFn, Vec<f64>)> {
        let spec = self.spec;
        let lin = linearize(spec, traj)?;
        let mut value = lin.value;
        let mut end_a = lin.phi_a.clone();
        let mut end_b = lin.phi_b.clone();
        if self.rho > 0.0 {
            if let Some((g, set)) = constraint_value(spec, &lin.x)? {
                value += self.rho * set.dist_sq(&g)?;
                let lambda: Vec<f64> = set.dist_sq_gradient(&g)?.iter().map(|v| self.rho * v).collect();
                let partials = spec.partials();
                let env = Env::endpoints(lin.x.row(0), lin.x.row(spec.grid().n_cells()));
                for (c, lc) in lambda.iter().enumerate() {
                    for (e, d) in end_a.iter_mut().zip(eval_all(&partials.g_a[c], &env)?) {
                        *e += lc * d;
                    }
                    for (e, d) in end_b.iter_mut().zip(eval_all(&partials.g_b[c], &env)?) {
                        *e += lc * d;
                    }
                }
            }
        }
        let (gu, gy) = assemble_gradient(spec, &lin, &end_a, &end_b)?;
        Ok((value, gu, gy))
    }

    fn preconditioner(&self, traj: &TrajectoryPair) -> Result<Preconditioner> {
        let spec = self.spec;
        let grid = *spec.grid();
        let (n, nc) = (spec.dim(), grid.n_cells());
        let data = SecondDiffData::new(spec, traj)?;
        let weights = cost_weights(&grid, spec.beta())?;
        let r_scale = data
            .r
            .iter()
            .flat_map(|r| r.diagonal().iter().map(|v| v.abs()).collect::<Vec<_>>())
            .fold(0.0, f64::max);
        let r_floor = if r_scale > 0.0 { 1e-3 * r_scale } else { 1.0 };
        let mut diag = Vec::with_capacity((nc + 1) * n);
        for (k, wk) in weights.iter().enumerate() {
            diag.extend(data.r[k].diagonal().iter().map(|v| wk * v.abs().max(r_floor)));
        }
        let shift_u = diag.iter().sum::<f64>() / n as f64;
        let shift_y: Vec<f64> = (0..n)
            .map(|i| {
                let ends = data.a[(i, i)] + 2.0 * data.b[(i, i)] + data.c[(i, i)];
                (ends + weights.iter().zip(&data.p).map(|(w, p)| w * p[(i, i)]).sum::<f64>()).abs()
            })
            .collect();
        let y_floor = 1e-3 * shift_y.iter().copied().fold(shift_u, f64::max);
        diag.extend(shift_y.iter().map(|v| v.max(y_floor)));

        let mut rows = DMatrix::zeros(0, diag.len());
        if self.rho > 0.0 {
            let x = traj.state(spec.alpha())?;
            if let Some((g, set)) = constraint_value(spec, &x)? {
                let free = set.free_components(&set.project(&g)?, CONE_TOL);
                let active: Vec<usize> = (0..g.len()).filter(|&c| !free[c]).collect();
                let partials = spec.partials();
                let env = Env::endpoints(x.row(0), x.row(nc));
                let w = FracWeights::new(spec.alpha(), grid.step(), nc)?;
                rows = DMatrix::zeros(active.len(), diag.len());
                for (r, &c) in active.iter().enumerate() {
                    let ga = eval_all(&partials.g_a[c], &env)?;
                    let gb = eval_all(&partials.g_b[c], &env)?;
                    for k in 0..nc {
                        for i in 0..n {
                            rows[(r, k * n + i)] = gb[i] * w.weights()[nc - 1 - k];
                        }
                    }
                    for i in 0..n {
                        rows[(r, nc * n + i)] = ga[i] + gb[i];
                    }
                }
            }
        }
        let core = if rows.nrows() > 0 {
            let scaled = DMatrix::from_fn(rows.nrows(), rows.ncols(), |r, c| rows[(r, c)] / diag[c]);
            let m = DMatrix::identity(rows.nrows(), rows.nrows()) / (2.0 * self.rho) + &scaled * rows.transpose();
            m.cholesky()
        } else {
            None
        };
        Ok(Preconditioner {
            diag,
            rows,
            rho: self.rho,
            core,
        })
    }
}

/// Approximate Hessian `M = B + 2ρ UᵀU` of the penalized objective in
/// flat coordinates. `B` is diagonal: the cell curvature `V_k ∂²₂₂L` for
/// the controls and the curvature of a constant shift for `y`. The rows
/// of `U` are the Jacobians of the binding constraint components.
struct Preconditioner {
    diag: Vec<f64>,
    rows: DMatrix<f64>,
    rho: f64,
    core: Option<Cholesky<f64, Dyn>>,
}

impl Preconditioner {
    /// `M⁻¹ v` by the Woodbury identity.
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut w: Vec<f64> = v.iter().zip(&self.diag).map(|(a, d)| a / d).collect();
        if let Some(core) = &self.core {
            let t = &self.rows * DVector::from_column_slice(&w);
            let sol = core.solve(&t);
            let back = self.rows.tr_mul(&sol);
            for ((wi, bi), d) in w.iter_mut().zip(back.iter()).zip(&self.diag) {
                *wi -= bi / d;
            }
        }
        w
    }

    /// `sᵀ M s`.
    fn quad(&self, s: &[f64]) -> f64 {
        let diag: f64 = s.iter().zip(&self.diag).map(|(a, d)| d * a * a).sum();
        if self.rows.nrows() == 0 {
            return diag;
        }
        let us = &self.rows * DVector::from_column_slice(s);
        diag + 2.0 * self.rho * us.norm_squared()
    }
}

/// Iterate in flat form: `N` control rows followed by `y`.
#[derive(Clone)]
struct Point {
    z: Vec<f64>,
}

struct Layout {
    n: usize,
    nc: usize,
    h: f64,
}

impl Layout {
    fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        let split = self.nc * self.n;
        let cells: f64 = a[..split].iter().zip(&b[..split]).map(|(x, y)| x * y).sum();
        let ys: f64 = a[split..].iter().zip(&b[split..]).map(|(x, y)| x * y).sum();
        self.h * cells + ys
    }

    /// Euclidean gradient from a Riesz gradient.
    fn euclidean(&self, g: &[f64]) -> Vec<f64> {
        let split = self.nc * self.n;
        g.iter()
            .enumerate()
            .map(|(i, v)| if i < split { self.h * v } else { *v })
            .collect()
    }

    fn project(&self, z: &mut [f64], radius: f64) {
        for row in z[..self.nc * self.n].chunks_exact_mut(self.n) {
            let r = norm(row);
            if r > radius {
                let s = radius / r;
                row.iter_mut().for_each(|v| *v *= s);
            }
        }
    }

    fn pack(&self, traj: &TrajectoryPair) -> Point {
        let mut z = traj.u.values()[..self.nc * self.n].to_vec();
        z.extend_from_slice(&traj.y);
        Point { z }
    }

    fn pack_gradient(&self, gu: &GridFn, gy: &[f64]) -> Vec<f64> {
        let mut g = gu.values()[..self.nc * self.n].to_vec();
        g.extend_from_slice(gy);
        g
    }

    fn unpack(&self, p: &Point, like: &TrajectoryPair) -> TrajectoryPair {
        let split = self.nc * self.n;
        let mut u = p.z[..split].to_vec();
        u.extend_from_slice(&p.z[split - self.n..split]);
        TrajectoryPair {
            u: GridFn::from_raw(*like.u.grid(), self.n, u),
            y: p.z[split..].to_vec(),
            radius: like.radius,
        }
    }
}

struct StageOutcome {
    traj: TrajectoryPair,
    iterations: usize,
    grad_norm: f64,
    converged: bool,
}

fn run_stage(
    obj: &Penalized<'_>,
    config: &SolverConfig,
    start: TrajectoryPair,
    tolerance: f64,
) -> Result<StageOutcome> {
    let grid = *obj.spec.grid();
    let layout = Layout {
        n: obj.spec.dim(),
        nc: grid.n_cells(),
        h: grid.step(),
    };
    let mut x = layout.pack(&start);
    let (mut f, gu, gy) = obj.value_and_gradient(&start)?;
    if !f.is_finite() {
        return Err(Error::Diverged(format!("objective is {f} at the stage start")));
    }
    let mut g = layout.pack_gradient(&gu, &gy);
    let mut traj = start;
    let mut pre = obj.preconditioner(&traj)?;
    let mut step = 1.0;
    let mut iterations = 0;
    loop {
        let mut trial = x.z.iter().zip(&g).map(|(a, b)| a - b).collect::<Vec<_>>();
        layout.project(&mut trial, config.radius);
        let pg: Vec<f64> = x.z.iter().zip(&trial).map(|(a, b)| a - b).collect();
        let grad_norm = layout.inner(&pg, &pg).sqrt();
        if grad_norm <= tolerance || iterations >= config.max_iters {
            return Ok(StageOutcome {
                traj,
                iterations,
                grad_norm,
                converged: grad_norm <= tolerance,
            });
        }
        iterations += 1;

        let scaled = pre.apply(&layout.euclidean(&g));
        let accepted = line_search(obj, config, &layout, &x, &traj, f, &g, &scaled, step)
            .or_else(|| line_search(obj, config, &layout, &x, &traj, f, &g, &g, 1.0));
        let Some((next, next_traj, fn_, g_known)) = accepted else {
            debug!("line search stalled at iteration {iterations}, |pg| = {grad_norm:e}");
            return Ok(StageOutcome {
                traj,
                iterations,
                grad_norm,
                converged: false,
            });
        };
        let g_next = match g_known {
            Some(g) => g,
            None => {
                let (_, gu, gy) = obj.value_and_gradient(&next_traj)?;
                layout.pack_gradient(&gu, &gy)
            }
        };
        if iterations % 10 == 0 {
            pre = obj.preconditioner(&next_traj)?;
        }
        let sk: Vec<f64> = next.z.iter().zip(&x.z).map(|(a, b)| a - b).collect();
        let yk: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = layout.inner(&sk, &yk);
        step = if sy > 0.0 {
            (pre.quad(&sk) / sy).clamp(1e-12, 1e12)
        } else {
            1.0
        };
        x = next;
        traj = next_traj;
        f = fn_;
        g = g_next;
        debug!("iteration {iterations}: F = {f:.12e}, |pg| = {grad_norm:e}, next step {step:e}");
    }
}

/// Objective changes within this many ulps of `|F|` are rounding noise.
const ROUNDING_ULPS: f64 = 4.0;

/// Accepted trial point, with its gradient when the test needed it.
type Accepted = (Point, TrajectoryPair, f64, Option<Vec<f64>>);

/// Backtracking along the projected path `P(z - s d)` from `s = step`.
/// A point is accepted on sufficient decrease. When the required decrease
/// is below the rounding resolution of `F`, it is accepted instead if `F`
/// did not rise beyond rounding and the slope along the step has not
/// turned clearly positive (approximate Wolfe test).
#[allow(clippy::too_many_arguments)]
fn line_search(
    obj: &Penalized<'_>,
    config: &SolverConfig,
    layout: &Layout,
    x: &Point,
    traj: &TrajectoryPair,
    f: f64,
    g: &[f64],
    dir: &[f64],
    step: f64,
) -> Option<Accepted> {
    let c = config.sufficient_decrease;
    let mut s = step;
    for _ in 0..60 {
        let mut z = x.z.iter().zip(dir).map(|(a, b)| a - s * b).collect::<Vec<_>>();
        layout.project(&mut z, config.radius);
        let d: Vec<f64> = z.iter().zip(&x.z).map(|(a, b)| a - b).collect();
        let slope = layout.inner(g, &d);
        if slope < 0.0 {
            let cand = Point { z };
            let cand_traj = layout.unpack(&cand, traj);
            if let Ok(fc) = obj.value(&cand_traj) {
                if fc.is_finite() && fc <= f + c * slope {
                    return Some((cand, cand_traj, fc, None));
                }
                let noise = ROUNDING_ULPS * f64::EPSILON * f.abs();
                if fc.is_finite() && c * slope.abs() <= noise && fc <= f + noise {
                    if let Ok((_, gu, gy)) = obj.value_and_gradient(&cand_traj) {
                        let g_new = layout.pack_gradient(&gu, &gy);
                        if layout.inner(&g_new, &d) <= (1.0 - 2.0 * c) * slope.abs() {
                            return Some((cand, cand_traj, fc, Some(g_new)));
                        }
                    }
                }
            }
        }
        s *= config.shrink;
    }
    None
}

/// `u ≡ 0`, with `y` read off the projection of `g(0, 0)` for components
/// of `g` that are plain initial values `xa_i`.
pub fn default_initial(spec: &ProblemSpec) -> Result<TrajectoryPair> {
    let n = spec.dim();
    let mut traj = TrajectoryPair::zero(*spec.grid(), n);
    if let Some(c) = spec.constraint() {
        let zero = vec![0.0; n];
        let g = eval_all(&c.g, &Env::endpoints(&zero, &zero))?;
        let p = c.set.project(&g)?;
        for i in 0..n {
            if let Some(k) = c.g.iter().position(|e| *e == Expr::Var(Var::Xa(i))) {
                traj.y[i] = p[k];
            }
        }
    }
    Ok(traj)
}

/// Minimizes `Φ` (plus the endpoint penalty when constrained) from `initial`.
pub fn solve(spec: &ProblemSpec, config: &SolverConfig, initial: &TrajectoryPair) -> Result<SolveResult> {
    validate(spec).into_result()?;
    config.validate()?;
    initial.check_against(spec)?;
    let mut traj = initial.clone();
    traj.radius = Some(config.radius);
    let layout = Layout {
        n: spec.dim(),
        nc: spec.grid().n_cells(),
        h: spec.grid().step(),
    };
    {
        let mut p = layout.pack(&traj);
        layout.project(&mut p.z, config.radius);
        traj = layout.unpack(&p, &traj);
    }

    let stages: Vec<(f64, f64, f64)> = if spec.constraint().is_some() {
        config
            .epsilon_schedule
            .iter()
            .zip(&config.penalty_weights)
            .map(|(&eps, &rho)| (rho, eps, config.grad_tol.max(eps.sqrt() * config.gradient_scale)))
            .collect()
    } else {
        vec![(0.0, 0.0, config.grad_tol)]
    };

    let mut records = Vec::with_capacity(stages.len());
    let mut iterations = 0;
    let mut last = None;
    // Stage minimizers behave like z* + c/ρ; start each stage from the
    // extrapolation of the previous two when that lowers the objective.
    let mut history: Vec<(f64, Point)> = Vec::new();
    for (rho, epsilon, tolerance) in stages {
        let obj = Penalized { spec, rho };
        if let [.., (r0, z0), (r1, z1)] = history.as_slice() {
            let theta = (1.0 / rho - 1.0 / r1) / (1.0 / r1 - 1.0 / r0);
            let mut z: Vec<f64> = z1.z.iter().zip(&z0.z).map(|(a, b)| a + theta * (a - b)).collect();
            layout.project(&mut z, config.radius);
            let guess = layout.unpack(&Point { z }, &traj);
            let (fg, f1) = (obj.value(&guess), obj.value(&traj)?);
            if fg.is_ok_and(|v| v.is_finite() && v < f1) {
                traj = guess;
            }
        }
        let out = run_stage(&obj, config, traj, tolerance)?;
        let dist = feasibility_distance(spec, &out.traj)?;
        info!(
            "stage rho = {rho:e}: {} iterations, |pg| = {:e}, feasibility {dist:e}, converged {}",
            out.iterations, out.grad_norm, out.converged
        );
        records.push(StageRecord {
            penalty: rho,
            epsilon,
            tolerance,
            iterations: out.iterations,
            grad_norm: out.grad_norm,
            feasibility_distance: dist,
            converged: out.converged,
        });
        iterations += out.iterations;
        history.push((rho, layout.pack(&out.traj)));
        traj = out.traj;
        last = Some((out.grad_norm, out.converged, dist));
    }
    let (grad_norm, converged, feasibility_distance) = last.expect("at least one stage");
    let objective = bolza_eval(spec, &traj)?;
    if !objective.is_finite() {
        return Err(Error::Diverged(format!("final objective is {objective}")));
    }
    let report = residual_report(spec, &traj, config.legendre_tol)?;
    Ok(SolveResult {
        traj,
        objective,
        feasibility_distance,
        report,
        iterations,
        converged,
        grad_norm,
        stages: records,
    })
}

/// Evidence that the necessary conditions cannot hold when `α < 1`: the
/// right integral of order `1-α` vanishes at `b`, so the transversality
/// condition at `b` reduces to `∂₂φ - ∂₂gᵀψ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum NonexistenceDiagnostic {
    NotApplicable {
        reason: String,
    },
    Evaluated {
        flagged: bool,
        dphi_b_norm: f64,
        transversality_b: f64,
    },
}

impl NonexistenceDiagnostic {
    pub fn flagged(&self) -> bool {
        matches!(self, NonexistenceDiagnostic::Evaluated { flagged: true, .. })
    }
}

/// Residuals below this count as zero for the nonexistence flag.
pub const NONEXISTENCE_TOL: f64 = 1e-10;

pub fn nonexistence_diagnostic(spec: &ProblemSpec, result: &SolveResult) -> Result<NonexistenceDiagnostic> {
    let (alpha, beta) = (spec.alpha(), spec.beta());
    if !(alpha < 1.0 && beta > alpha) {
        return Ok(NonexistenceDiagnostic::NotApplicable {
            reason: format!("requires alpha < 1 and beta > alpha (alpha = {alpha}, beta = {beta})"),
        });
    }
    let lin = linearize(spec, &result.traj)?;
    let transversality_b = result.report.transversality_b;
    Ok(NonexistenceDiagnostic::Evaluated {
        flagged: transversality_b > NONEXISTENCE_TOL,
        dphi_b_norm: norm(&lin.phi_b),
        transversality_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functional::gateaux_first;
    use crate::grid::Grid;
    use crate::model::{standard_constraint, ConstraintKind};

    fn spec(alpha: f64, beta: f64, n_cells: usize, phi: &str, l: &str) -> ProblemSpec {
        let grid = Grid::new(0.0, 1.0, n_cells).unwrap();
        ProblemSpec::from_sources(alpha, beta, grid, 1, phi, l, None).unwrap()
    }

    #[test]
    fn gradient_is_the_transpose_of_the_first_differential() {
        let s = spec(0.6, 1.4, 40, "xa1*xb1 + xb1^2", "0.5*(x1^2 + u1^2) + x1*u1*t");
        let grid = *s.grid();
        let traj = TrajectoryPair::new(GridFn::from_scalar_fn(grid, |t| (2.0 * t).sin()).unwrap(), vec![0.4]).unwrap();
        let mut eta = TrajectoryPair::new(
            GridFn::from_scalar_fn(grid, |t| (5.0 * t).cos() - t).unwrap(),
            vec![-0.7],
        )
        .unwrap();
        let last = eta.u.row(39).to_vec();
        eta.u.row_mut(40).copy_from_slice(&last);
        let (gu, gy) = objective_gradient(&s, &traj).unwrap();
        let h = grid.step();
        let ip: f64 = (0..40).map(|k| h * gu.row(k)[0] * eta.u.row(k)[0]).sum::<f64>() + gy[0] * eta.y[0];
        let d = gateaux_first(&s, &traj, &eta).unwrap();
        assert!((ip - d).abs() < 1e-12 * (1.0 + d.abs()), "{ip} vs {d}");
    }

    #[test]
    fn gradient_y_vanishes_without_state_dependence() {
        let s = spec(0.5, 1.0, 16, "0", "u1^2 + t");
        let traj = TrajectoryPair::new(GridFn::constant(*s.grid(), &[0.3]), vec![2.0]).unwrap();
        assert_eq!(objective_gradient(&s, &traj).unwrap().1, vec![0.0]);
    }

    #[test]
    fn free_quadratic_goes_to_zero() {
        let s = spec(1.0, 1.0, 64, "0", "0.5*u1^2");
        let init = TrajectoryPair::new(GridFn::from_scalar_fn(*s.grid(), |t| t).unwrap(), vec![0.5]).unwrap();
        let r = solve(&s, &SolverConfig::default(), &init).unwrap();
        assert!(r.converged);
        assert!(r.objective.abs() < 1e-12);
        assert!(r.traj.u.sup_norm() < 1e-6);
    }

    #[test]
    fn solve_is_deterministic() {
        let s = spec(0.7, 1.0, 32, "xb1", "0.5*(x1^2+u1^2)");
        let init = default_initial(&s).unwrap();
        let a = solve(&s, &SolverConfig::default(), &init).unwrap();
        let b = solve(&s, &SolverConfig::default(), &init).unwrap();
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn default_initial_respects_fixed_initial_value() {
        let s = spec(1.0, 1.0, 8, "0", "u1^2");
        let kind = ConstraintKind::FixedInitial { xa: vec![2.5] };
        let c = s.with_constraint(Some(standard_constraint(&kind, 1).unwrap()));
        assert_eq!(default_initial(&c).unwrap().y, vec![2.5]);
    }

    #[test]
    fn nonexistence_regimes() {
        let cfg = SolverConfig::default();
        let half = spec(0.5, 1.0, 32, "xb1", "0.5*(x1^2+u1^2)");
        let r = solve(&half, &cfg, &default_initial(&half).unwrap()).unwrap();
        let d = nonexistence_diagnostic(&half, &r).unwrap();
        assert!(d.flagged());
        assert_eq!(r.report.transversality_b, 1.0);

        let no_xb = spec(0.5, 1.0, 32, "xa1", "0.5*(x1^2+u1^2)");
        let r = solve(&no_xb, &cfg, &default_initial(&no_xb).unwrap()).unwrap();
        assert!(!nonexistence_diagnostic(&no_xb, &r).unwrap().flagged());

        let one = spec(1.0, 1.0, 32, "xb1", "0.5*(x1^2+u1^2)");
        let r = solve(&one, &cfg, &default_initial(&one).unwrap()).unwrap();
        assert!(matches!(
            nonexistence_diagnostic(&one, &r).unwrap(),
            NonexistenceDiagnostic::NotApplicable { .. }
        ));
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let c = SolverConfig {
            epsilon_schedule: vec![1e-2, 1e-2, 1e-3, 1e-4],
            ..SolverConfig::default()
        };
        assert!(c.validate().is_err());
        let c = SolverConfig {
            radius: 0.0,
            ..SolverConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
