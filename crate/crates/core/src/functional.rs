//! The discretized Bolza functional and its sensitivities.
//!
//! On cell `k` the Lagrangian is evaluated at the cell average of the
//! state, the control value of the cell and the cell midpoint, and weighted
//! by the exact moment `V_k = ∫_{cell k} (b-s)^(β-1)/Γ(β) ds`:
//!
//! `Φ(u, y) = φ(x_0, x_N) + Σ_k V_k L((x_k + x_{k+1})/2, u_k, t_k + h/2)`.
//!
//! Every differential below is the exact derivative of this sum.

use nalgebra::DMatrix;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::expr::{Env, Expr};
use crate::frac_ops::{cost_weights, left_integral_window, right_integral_cells, FracWeights};
use crate::grid::{norm, Grid, GridFn};
use crate::model::{ConvexSet, ProblemSpec, TrajectoryPair};

pub(crate) fn eval_all(exprs: &[Expr], env: &Env<'_>) -> Result<Vec<f64>> {
    exprs.iter().map(|e| Ok(e.evaluate(env)?)).collect()
}

fn eval_matrix(exprs: &[Vec<Expr>], env: &Env<'_>) -> Result<DMatrix<f64>> {
    let n = exprs.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in exprs.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            m[(i, j)] = e.evaluate(env)?;
        }
    }
    Ok(m)
}

/// `(b - t)^(order-1) / Γ(order)`.
pub(crate) fn kernel_weight(grid: &Grid, order: f64, t: f64) -> f64 {
    (grid.b() - t).powf(order - 1.0) / gamma(order)
}

/// Cell averages of node values, `N` rows.
fn cell_averages(x: &GridFn) -> Vec<f64> {
    let n = x.grid().n_cells();
    let mut out = Vec::with_capacity(n * x.dim());
    for k in 0..n {
        out.extend(x.row(k).iter().zip(x.row(k + 1)).map(|(l, r)| 0.5 * (l + r)));
    }
    out
}

/// State, cell data and first partials at a trajectory.
pub(crate) struct Linearization {
    pub x: GridFn,
    pub weights: Vec<f64>,
    pub value: f64,
    pub l_x: Vec<f64>,
    pub l_u: Vec<f64>,
    pub phi_a: Vec<f64>,
    pub phi_b: Vec<f64>,
}

pub(crate) fn linearize(spec: &ProblemSpec, traj: &TrajectoryPair) -> Result<Linearization> {
    traj.check_against(spec)?;
    let grid = *spec.grid();
    let n = spec.dim();
    let partials = spec.partials();
    let x = traj.state(spec.alpha())?;
    let xbar = cell_averages(&x);
    let weights = cost_weights(&grid, spec.beta())?;
    let ends = Env::endpoints(x.row(0), x.row(grid.n_cells()));
    let mut value = spec.phi().evaluate(&ends)?;
    let phi_a = eval_all(&partials.phi_a, &ends)?;
    let phi_b = eval_all(&partials.phi_b, &ends)?;
    let mut l_x = Vec::with_capacity(grid.n_cells() * n);
    let mut l_u = Vec::with_capacity(grid.n_cells() * n);
    for k in 0..grid.n_cells() {
        let env = Env::running(&xbar[k * n..(k + 1) * n], traj.u.row(k), grid.cell_midpoint(k));
        value += weights[k] * spec.lagrangian().evaluate(&env)?;
        l_x.extend(eval_all(&partials.l_x, &env)?);
        l_u.extend(eval_all(&partials.l_u, &env)?);
    }
    Ok(Linearization {
        x,
        weights,
        value,
        l_x,
        l_u,
        phi_a,
        phi_b,
    })
}

/// `Φ(u, y)`.
pub fn bolza_eval(spec: &ProblemSpec, traj: &TrajectoryPair) -> Result<f64> {
    traj.check_against(spec)?;
    let grid = *spec.grid();
    let n = spec.dim();
    let x = traj.state(spec.alpha())?;
    let xbar = cell_averages(&x);
    let weights = cost_weights(&grid, spec.beta())?;
    let mut value = spec.phi().evaluate(&Env::endpoints(x.row(0), x.row(grid.n_cells())))?;
    for (k, wk) in weights.iter().enumerate() {
        let env = Env::running(&xbar[k * n..(k + 1) * n], traj.u.row(k), grid.cell_midpoint(k));
        value += wk * spec.lagrangian().evaluate(&env)?;
    }
    Ok(value)
}

/// Node values and cell averages of a variation given as `(ᶜDη, η(a))`.
fn variation_states(spec: &ProblemSpec, eta: &TrajectoryPair) -> Result<(GridFn, Vec<f64>)> {
    eta.check_against(spec)?;
    let e = eta.state(spec.alpha())?;
    let ebar = cell_averages(&e);
    Ok((e, ebar))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// First Gâteaux differential `DΦ(x)·η`.
pub fn gateaux_first(spec: &ProblemSpec, traj: &TrajectoryPair, eta: &TrajectoryPair) -> Result<f64> {
    let lin = linearize(spec, traj)?;
    let (e, ebar) = variation_states(spec, eta)?;
    let n = spec.dim();
    let last = spec.grid().n_cells();
    let mut out = dot(&lin.phi_a, e.row(0)) + dot(&lin.phi_b, e.row(last));
    for (k, wk) in lin.weights.iter().enumerate() {
        let s = k * n..(k + 1) * n;
        out += wk * (dot(&lin.l_x[s.clone()], &ebar[s.clone()]) + dot(&lin.l_u[s], eta.u.row(k)));
    }
    Ok(out)
}

/// Hessian blocks entering the second differential.
///
/// `a, b, c` are `∂²₁₁φ, ∂²₁₂φ, ∂²₂₂φ` at the endpoints; `p[k], q[k], r[k]`
/// are `∂²₁₁L, ∂²₁₂L, ∂²₂₂L` at the evaluation point of cell `k`.
#[derive(Debug, Clone)]
pub struct SecondDiffData {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub p: Vec<DMatrix<f64>>,
    pub q: Vec<DMatrix<f64>>,
    pub r: Vec<DMatrix<f64>>,
    weights: Vec<f64>,
}

impl SecondDiffData {
    pub fn new(spec: &ProblemSpec, traj: &TrajectoryPair) -> Result<Self> {
        traj.check_against(spec)?;
        let grid = *spec.grid();
        let n = spec.dim();
        let partials = spec.partials();
        let x = traj.state(spec.alpha())?;
        let xbar = cell_averages(&x);
        let ends = Env::endpoints(x.row(0), x.row(grid.n_cells()));
        let (mut p, mut q, mut r) = (Vec::new(), Vec::new(), Vec::new());
        for k in 0..grid.n_cells() {
            let env = Env::running(&xbar[k * n..(k + 1) * n], traj.u.row(k), grid.cell_midpoint(k));
            p.push(eval_matrix(&partials.l_xx, &env)?);
            q.push(eval_matrix(&partials.l_xu, &env)?);
            r.push(eval_matrix(&partials.l_uu, &env)?);
        }
        Ok(Self {
            a: eval_matrix(&partials.phi_aa, &ends)?,
            b: eval_matrix(&partials.phi_ab, &ends)?,
            c: eval_matrix(&partials.phi_bb, &ends)?,
            p,
            q,
            r,
            weights: cost_weights(&grid, spec.beta())?,
        })
    }

    /// `D²Φ(x)(η, η)` for a variation with node values `e` and cell averages `ebar`.
    fn quadratic_form(&self, e: &GridFn, ebar: &[f64], de: &GridFn) -> f64 {
        let n = e.dim();
        let last = e.grid().n_cells();
        let ea = nalgebra::DVector::from_column_slice(e.row(0));
        let eb = nalgebra::DVector::from_column_slice(e.row(last));
        let mut out = ea.dot(&(&self.a * &ea)) + 2.0 * ea.dot(&(&self.b * &eb)) + eb.dot(&(&self.c * &eb));
        for (k, wk) in self.weights.iter().enumerate() {
            let s = nalgebra::DVector::from_column_slice(&ebar[k * n..(k + 1) * n]);
            let d = nalgebra::DVector::from_column_slice(de.row(k));
            out += wk * (s.dot(&(&self.p[k] * &s)) + 2.0 * s.dot(&(&self.q[k] * &d)) + d.dot(&(&self.r[k] * &d)));
        }
        out
    }
}

/// Second Gâteaux differential `D²Φ(x)(η, η)`.
pub fn gateaux_second(spec: &ProblemSpec, traj: &TrajectoryPair, eta: &TrajectoryPair) -> Result<f64> {
    let data = SecondDiffData::new(spec, traj)?;
    let (e, ebar) = variation_states(spec, eta)?;
    Ok(data.quadratic_form(&e, &ebar, &eta.u))
}

/// `(∂₁φ + ∂₂φ + I^β[∂₁L](b))·y_dir`: the effect of shifting the initial value.
pub fn y_sensitivity(spec: &ProblemSpec, traj: &TrajectoryPair, y_dir: &[f64]) -> Result<f64> {
    if y_dir.len() != spec.dim() {
        return Err(Error::Dimension {
            expected: spec.dim(),
            got: y_dir.len(),
        });
    }
    let lin = linearize(spec, traj)?;
    let n = spec.dim();
    let mut g: Vec<f64> = lin.phi_a.iter().zip(&lin.phi_b).map(|(a, b)| a + b).collect();
    for (k, wk) in lin.weights.iter().enumerate() {
        for (gi, li) in g.iter_mut().zip(&lin.l_x[k * n..(k + 1) * n]) {
            *gi += wk * li;
        }
    }
    Ok(dot(&g, y_dir))
}

/// A needle perturbation: `u` replaced by `v` on `[tau, tau + h)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeedleParams {
    pub tau: f64,
    pub h: f64,
    pub v: Vec<f64>,
}

impl NeedleParams {
    /// Cell range `[start, end)` of the window; both ends must be nodes.
    pub fn cells(&self, grid: &Grid) -> Result<(usize, usize)> {
        let start = grid
            .node_index(self.tau)
            .ok_or_else(|| Error::Domain(format!("needle start {} is not a grid node", self.tau)))?;
        let end = grid
            .node_index(self.tau + self.h)
            .ok_or_else(|| Error::Domain(format!("needle end {} is not a grid node", self.tau + self.h)))?;
        if end <= start {
            return Err(Error::Domain(format!("needle width {} must cover a cell", self.h)));
        }
        Ok((start, end))
    }
}

/// `u` with the needle window overwritten by `v`.
pub fn needle_apply(u: &GridFn, p: &NeedleParams) -> Result<GridFn> {
    if p.v.len() != u.dim() {
        return Err(Error::Dimension {
            expected: u.dim(),
            got: p.v.len(),
        });
    }
    let (start, end) = p.cells(u.grid())?;
    let mut out = u.clone();
    let last = if end == u.grid().n_cells() { end + 1 } else { end };
    for k in start..last {
        out.row_mut(k).copy_from_slice(&p.v);
    }
    Ok(out)
}

fn interior_node(grid: &Grid, tau: f64) -> Result<usize> {
    match grid.node_index(tau) {
        Some(i) if i > 0 && i < grid.n_cells() => Ok(i),
        _ => Err(Error::Domain(format!("tau = {tau} must be an interior grid node"))),
    }
}

/// Limit of `(Φ(u^{(τ,v)}(·,h), y) - Φ(u, y)) / h` as `h → 0+`.
pub fn needle_sensitivity(spec: &ProblemSpec, traj: &TrajectoryPair, tau: f64, v: &[f64]) -> Result<f64> {
    let grid = *spec.grid();
    let i = interior_node(&grid, tau)?;
    let n = spec.dim();
    if v.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: v.len(),
        });
    }
    let lin = linearize(spec, traj)?;
    let t = grid.node(i);
    let ui = traj.u.row(i);
    let xi = lin.x.row(i);
    let dv: Vec<f64> = v.iter().zip(ui).map(|(a, b)| a - b).collect();

    let l = spec.lagrangian();
    let jump = l.evaluate(&Env::running(xi, v, t))? - l.evaluate(&Env::running(xi, ui, t))?;
    let mut out = kernel_weight(&grid, spec.beta(), t) * jump;
    out += kernel_weight(&grid, spec.alpha(), t) * dot(&lin.phi_b, &dv);

    // I^α_{b-}[weight_β ∂₁L](τ), with the weight averaged over each cell
    let h = grid.step();
    let cells: Vec<f64> = (0..grid.n_cells())
        .flat_map(|k| {
            let s = lin.weights[k] / h;
            lin.l_x[k * n..(k + 1) * n]
                .iter()
                .map(move |li| s * li)
                .collect::<Vec<_>>()
        })
        .collect();
    let adj = right_integral_cells(&grid, n, &cells, spec.alpha())?;
    out += dot(&adj[i * n..(i + 1) * n], &dv);
    Ok(out)
}

/// Checks the needle bounds on the state deviation: the uniform bound
/// `‖Δx‖ ≤ 2R h^α / Γ(α+1)` everywhere, and after the window
/// `‖Δx/h - (t-τ)^(α-1)/Γ(α) (v - u(τ))‖ ≤ (t-τ)^(α-1)/Γ(α) ‖ū - u(τ)‖
/// + 2R/Γ(α) ((t-τ-h)^(α-1) - (t-τ)^(α-1))`, `ū` the window mean of `u`.
pub fn needle_bounds_check(spec: &ProblemSpec, traj: &TrajectoryPair, p: &NeedleParams, r: f64) -> Result<bool> {
    traj.check_against(spec)?;
    let grid = *spec.grid();
    let n = spec.dim();
    let alpha = spec.alpha();
    let slack = 1e-9 * r.max(1.0);
    if traj.u.sup_norm() > r + slack || norm(&p.v) > r + slack {
        return Err(Error::Domain(format!("controls exceed the radius {r}")));
    }
    if p.v.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: p.v.len(),
        });
    }
    let (start, end) = p.cells(&grid)?;
    let h = grid.node(end) - grid.node(start);
    let diff: Vec<f64> = (0..grid.n_cells())
        .flat_map(|k| {
            let in_window = k >= start && k < end;
            let uk = traj.u.row(k);
            (0..n).map(move |i| if in_window { p.v[i] - uk[i] } else { 0.0 })
        })
        .collect();
    let w = FracWeights::new(alpha, grid.step(), grid.n_cells())?;
    let dx = left_integral_window(&grid, n, &diff, start, end, &w);

    let uniform = 2.0 * r * h.powf(alpha) / gamma(alpha + 1.0);
    let sup = dx.chunks_exact(n).map(norm).fold(0.0, f64::max);
    if sup > uniform + slack {
        return Ok(false);
    }

    let tau = grid.node(start);
    let ui = traj.u.row(start);
    let mean: Vec<f64> = (0..n)
        .map(|i| (start..end).map(|k| traj.u.row(k)[i]).sum::<f64>() / (end - start) as f64)
        .collect();
    let mean_gap = norm(&mean.iter().zip(ui).map(|(a, b)| a - b).collect::<Vec<_>>());
    let g = gamma(alpha);
    for j in (end + 1)..=grid.n_cells() {
        let t = grid.node(j);
        let k_tau = (t - tau).powf(alpha - 1.0) / g;
        let k_end = (t - tau - h).powf(alpha - 1.0) / g;
        let lhs: Vec<f64> = (0..n).map(|i| dx[j * n + i] / h - k_tau * (p.v[i] - ui[i])).collect();
        let bound = k_tau * mean_gap + 2.0 * r * (k_end - k_tau);
        if norm(&lhs) > bound + slack * (1.0 + bound) / h.min(1.0) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `g(x(a), x(b))` and its target set, if the problem is constrained.
pub(crate) fn constraint_value<'a>(spec: &'a ProblemSpec, x: &GridFn) -> Result<Option<(Vec<f64>, &'a ConvexSet)>> {
    let Some(c) = spec.constraint() else {
        return Ok(None);
    };
    let env = Env::endpoints(x.row(0), x.row(x.grid().n_cells()));
    Ok(Some((eval_all(&c.g, &env)?, &c.set)))
}

/// `d_S(g(x(a), x(b)))`, zero without a constraint.
pub fn feasibility_distance(spec: &ProblemSpec, traj: &TrajectoryPair) -> Result<f64> {
    traj.check_against(spec)?;
    let x = traj.state(spec.alpha())?;
    match constraint_value(spec, &x)? {
        Some((g, set)) => set.distance(&g),
        None => Ok(0.0),
    }
}

/// `J(u, y) = sqrt(((Φ(u, y) - ref_value + ε)⁺)² + d²_S(g(x(a), x(b))))`.
pub fn penalized_value(spec: &ProblemSpec, traj: &TrajectoryPair, ref_value: f64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must be positive")));
    }
    let gap = (bolza_eval(spec, traj)? - ref_value + epsilon).max(0.0);
    let d = feasibility_distance(spec, traj)?;
    Ok(gap.hypot(d))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{standard_constraint, ConstraintKind};

    fn example(alpha: f64, beta: f64, n_cells: usize) -> ProblemSpec {
        let grid = Grid::new(0.0, 1.0, n_cells).unwrap();
        ProblemSpec::from_sources(alpha, beta, grid, 1, "xb1", "0.5*(x1^2+u1^2)", None).unwrap()
    }

    fn traj_from(spec: &ProblemSpec, u: impl Fn(f64) -> f64, y: f64) -> TrajectoryPair {
        TrajectoryPair::new(GridFn::from_scalar_fn(*spec.grid(), u).unwrap(), vec![y]).unwrap()
    }

    #[test]
    fn bolza_examples() {
        let spec = example(1.0, 1.0, 400);
        assert_eq!(bolza_eval(&spec, &TrajectoryPair::zero(*spec.grid(), 1)).unwrap(), 0.0);
        let line = bolza_eval(&spec, &traj_from(&spec, |_| 1.0, 0.0)).unwrap();
        assert!((line - 5.0 / 3.0).abs() < 1e-5, "{line}");
        let s1 = 1f64.sinh();
        let opt = bolza_eval(&spec, &traj_from(&spec, |t| -t.sinh() / s1, -1.0 / s1)).unwrap();
        assert!((opt + 0.5 / 1f64.tanh()).abs() < 1e-4, "{opt}");
    }

    #[test]
    fn gateaux_examples() {
        let spec = example(1.0, 1.0, 400);
        let zero = TrajectoryPair::zero(*spec.grid(), 1);
        let constant = traj_from(&spec, |_| 0.0, 1.0);
        assert!((gateaux_first(&spec, &zero, &constant).unwrap() - 1.0).abs() < 1e-14);
        let line = traj_from(&spec, |_| 1.0, 0.0);
        let d1 = gateaux_first(&spec, &line, &line).unwrap();
        assert!((d1 - 7.0 / 3.0).abs() < 1e-5, "{d1}");
        let d2 = gateaux_second(&spec, &line, &constant).unwrap();
        assert!((d2 - 1.0).abs() < 1e-12);
        let d2 = gateaux_second(&spec, &line, &line).unwrap();
        assert!((d2 - 4.0 / 3.0).abs() < 1e-5, "{d2}");
    }

    #[test]
    fn y_sensitivity_matches_constant_variation() {
        let spec = example(0.6, 1.3, 64);
        let traj = traj_from(&spec, |t| (3.0 * t).cos(), 0.2);
        let dir = traj_from(&spec, |_| 0.0, 1.7);
        let a = y_sensitivity(&spec, &traj, &[1.7]).unwrap();
        let b = gateaux_first(&spec, &traj, &dir).unwrap();
        assert!((a - b).abs() < 1e-13);
        assert_eq!(y_sensitivity(&spec, &traj, &[0.0]).unwrap(), 0.0);
        assert!(y_sensitivity(&spec, &traj, &[1.0, 2.0]).is_err());
        let classical = example(1.0, 1.0, 8);
        let zero = TrajectoryPair::zero(*classical.grid(), 1);
        assert_eq!(y_sensitivity(&classical, &zero, &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn needle_apply_examples() {
        let grid = Grid::new(0.0, 1.0, 8).unwrap();
        let u = GridFn::from_scalar_fn(grid, |t| t).unwrap();
        let whole = needle_apply(
            &u,
            &NeedleParams {
                tau: 0.0,
                h: 1.0,
                v: vec![3.0],
            },
        )
        .unwrap();
        assert!(whole.values().iter().all(|&v| v == 3.0));
        let one = needle_apply(
            &u,
            &NeedleParams {
                tau: 0.25,
                h: 0.125,
                v: vec![3.0],
            },
        )
        .unwrap();
        let changed = (0..=8).filter(|&k| one.row(k) != u.row(k)).collect::<Vec<_>>();
        assert_eq!(changed, vec![2]);
        let c = GridFn::constant(grid, &[0.5]);
        assert_eq!(
            needle_apply(
                &c,
                &NeedleParams {
                    tau: 0.5,
                    h: 0.25,
                    v: vec![0.5]
                }
            )
            .unwrap(),
            c
        );
        assert!(needle_apply(
            &u,
            &NeedleParams {
                tau: 0.3,
                h: 0.125,
                v: vec![3.0]
            }
        )
        .is_err());
    }

    #[test]
    fn needle_sensitivity_examples() {
        let spec = example(1.0, 1.0, 64);
        let zero = TrajectoryPair::zero(*spec.grid(), 1);
        for k in [1, 20, 63] {
            let tau = spec.grid().node(k);
            assert!((needle_sensitivity(&spec, &zero, tau, &[1.0]).unwrap() - 1.5).abs() < 1e-14);
        }
        let spec = example(0.7, 1.4, 64);
        let traj = traj_from(&spec, |t| t.sin(), 0.3);
        let tau = spec.grid().node(10);
        let u_tau = traj.u.row(10).to_vec();
        assert_eq!(needle_sensitivity(&spec, &traj, tau, &u_tau).unwrap(), 0.0);
        assert!(needle_sensitivity(&spec, &traj, 0.0, &[1.0]).is_err());
        assert!(needle_sensitivity(&spec, &traj, 1.0, &[1.0]).is_err());
    }

    #[test]
    fn needle_bounds_examples() {
        let spec = example(0.5, 1.0, 64);
        let zero = TrajectoryPair::zero(*spec.grid(), 1);
        let p = NeedleParams {
            tau: 0.25,
            h: 0.125,
            v: vec![2.0],
        };
        assert!(needle_bounds_check(&spec, &zero, &p, 2.0).unwrap());
        let spec1 = example(1.0, 1.0, 64);
        let whole = NeedleParams {
            tau: 0.0,
            h: 1.0,
            v: vec![-2.0],
        };
        let c = traj_from(&spec1, |_| 2.0, 0.0);
        assert!(needle_bounds_check(&spec1, &c, &whole, 2.0).unwrap());
        let same = NeedleParams {
            tau: 0.5,
            h: 0.25,
            v: vec![2.0],
        };
        assert!(needle_bounds_check(&spec1, &c, &same, 2.0).unwrap());
        assert!(needle_bounds_check(&spec1, &c, &same, 1.0).is_err());
    }

    #[test]
    fn penalized_value_examples() {
        let spec = example(1.0, 1.0, 16);
        let free = spec.with_constraint(Some(standard_constraint(&ConstraintKind::Free, 1).unwrap()));
        let traj = traj_from(&spec, |t| t, 0.0);
        let phi = bolza_eval(&free, &traj).unwrap();
        assert_eq!(penalized_value(&free, &traj, phi, 0.25).unwrap(), 0.25);

        // x(a) = 0 while the constraint asks for x(a) = 4.
        let kind = ConstraintKind::FixedInitial { xa: vec![4.0] };
        let fixed = spec.with_constraint(Some(standard_constraint(&kind, 1).unwrap()));
        let v = penalized_value(&fixed, &traj, phi + 1.0, 0.5).unwrap();
        assert!((v - 4.0).abs() < 1e-14);
        let v = penalized_value(&fixed, &traj, phi - 2.5, 0.5).unwrap();
        assert!((v - 5.0).abs() < 1e-14);
    }
}
