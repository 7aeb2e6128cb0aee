//! Residuals of the necessary optimality conditions: Euler-Lagrange in
//! integrated form, transversality (with multiplier extraction for
//! constrained problems), Legendre, the adjoint vector, and the
//! memory-rigidity probe.
//!
//! Throughout, `w = (b-·)^(β-1)/Γ(β) ∂₂L(x, u, ·)` with the weight averaged
//! over each cell, so `w_k = (V_k / h) ∂₂L_k`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::convex::CONE_TOL;
use crate::error::{Error, Result};
use crate::expr::Env;
use crate::frac_ops::{endpoint_right_integral, right_integral_cells};
use crate::functional::{constraint_value, eval_all, kernel_weight, linearize, Linearization};
use crate::grid::{norm, Grid, GridFn};
use crate::model::{ProblemSpec, TrajectoryPair};

/// Smallest singular value of `Dg` accepted as regular.
pub const REGULARITY_TOL: f64 = 1e-8;

/// Everything the checkers report about one candidate trajectory.
#[derive(Debug, Clone, Serialize)]
pub struct ResidualReport {
    pub el_residual_sup: f64,
    pub el_residual_profile: GridFn,
    pub transversality_a: f64,
    pub transversality_b: f64,
    /// `None` at nodes that are not checked (`a`, and `b` when `β < 1`).
    pub legendre_min_eig_profile: Vec<Option<f64>>,
    pub legendre_ok: bool,
    /// Normalization of the cost multiplier.
    pub psi0: f64,
    pub psi: Option<Vec<f64>>,
    pub psi_in_cone: Option<bool>,
    pub adjoint_p: GridFn,
}

/// Cell data `(V_k / h) f_k` for per-cell values `f`.
fn weighted_cells(lin: &Linearization, values: &[f64], n: usize, h: f64) -> Vec<f64> {
    values
        .chunks_exact(n)
        .zip(&lin.weights)
        .flat_map(|(f, v)| f.iter().map(move |fi| v / h * fi))
        .collect()
}

fn with_left_limit(grid: &Grid, n: usize, mut cells: Vec<f64>) -> GridFn {
    let last = cells[cells.len() - n..].to_vec();
    cells.extend(last);
    GridFn::from_raw(*grid, n, cells)
}

/// `I^{1-α}_{b-}[w]` at every node.
fn right_integral_of_w(spec: &ProblemSpec, lin: &Linearization) -> Result<Vec<f64>> {
    let grid = spec.grid();
    let n = spec.dim();
    let w = weighted_cells(lin, &lin.l_u, n, grid.step());
    right_integral_cells(grid, n, &w, 1.0 - spec.alpha())
}

/// `I^{1-α}_{b-}[w]` at `a` and at `b`; the value at `b` is exactly zero for `α < 1`.
fn endpoint_integrals(spec: &ProblemSpec, lin: &Linearization) -> Result<(Vec<f64>, Vec<f64>)> {
    let grid = spec.grid();
    let n = spec.dim();
    let w = weighted_cells(lin, &lin.l_u, n, grid.step());
    if spec.alpha() == 1.0 {
        let last = grid.n_cells() - 1;
        return Ok((w[..n].to_vec(), w[last * n..].to_vec()));
    }
    let w = with_left_limit(grid, n, w);
    let order = 1.0 - spec.alpha();
    Ok((
        endpoint_right_integral(&w, order, grid.a())?,
        endpoint_right_integral(&w, order, grid.b())?,
    ))
}

/// Integrated Euler-Lagrange residual
/// `r(t) = I^{1-α}_{b-}[w](t) - I^{1-α}_{b-}[w](b) + ∫_t^b (b-s)^(β-1)/Γ(β) ∂₁L ds`
/// at every node, and its sup norm.
pub fn el_residual(spec: &ProblemSpec, traj: &TrajectoryPair) -> Result<(GridFn, f64)> {
    let lin = linearize(spec, traj)?;
    el_from(spec, &lin)
}

fn el_from(spec: &ProblemSpec, lin: &Linearization) -> Result<(GridFn, f64)> {
    let grid = *spec.grid();
    let n = spec.dim();
    let nc = grid.n_cells();
    let mut r = right_integral_of_w(spec, lin)?;
    let end = r[nc * n..].to_vec();
    let mut tail = vec![0.0; n];
    for j in (0..=nc).rev() {
        if j < nc {
            for (t, l) in tail.iter_mut().zip(&lin.l_x[j * n..(j + 1) * n]) {
                *t += lin.weights[j] * l;
            }
        }
        for i in 0..n {
            r[j * n + i] += tail[i] - end[i];
        }
    }
    let profile = GridFn::from_raw(grid, n, r);
    let sup = profile.sup_norm();
    Ok((profile, sup))
}

/// `Dg` at the endpoints as a `j × 2n` matrix `[∂₁g | ∂₂g]`.
fn constraint_jacobian(spec: &ProblemSpec, x: &GridFn) -> Result<DMatrix<f64>> {
    let n = spec.dim();
    let partials = spec.partials();
    let env = Env::endpoints(x.row(0), x.row(x.grid().n_cells()));
    let j = partials.g_a.len();
    let mut m = DMatrix::zeros(j, 2 * n);
    for c in 0..j {
        for (i, v) in eval_all(&partials.g_a[c], &env)?.into_iter().enumerate() {
            m[(c, i)] = v;
        }
        for (i, v) in eval_all(&partials.g_b[c], &env)?.into_iter().enumerate() {
            m[(c, n + i)] = v;
        }
    }
    Ok(m)
}

struct Endpoints {
    i_a: Vec<f64>,
    i_b: Vec<f64>,
    phi_a: Vec<f64>,
    phi_b: Vec<f64>,
}

fn residuals_with(e: &Endpoints, dg: Option<&DMatrix<f64>>, psi: Option<&[f64]>) -> (f64, f64) {
    let n = e.i_a.len();
    let gt_psi = match (dg, psi) {
        (Some(dg), Some(psi)) => dg.transpose() * DVector::from_column_slice(psi),
        _ => DVector::zeros(2 * n),
    };
    let ra: Vec<f64> = (0..n).map(|i| e.i_a[i] - e.phi_a[i] + gt_psi[i]).collect();
    let rb: Vec<f64> = (0..n).map(|i| e.i_b[i] + e.phi_b[i] - gt_psi[n + i]).collect();
    (norm(&ra), norm(&rb))
}

fn endpoints(spec: &ProblemSpec, lin: &Linearization) -> Result<Endpoints> {
    let (i_a, i_b) = endpoint_integrals(spec, lin)?;
    Ok(Endpoints {
        i_a,
        i_b,
        phi_a: lin.phi_a.clone(),
        phi_b: lin.phi_b.clone(),
    })
}

/// `(‖I^{1-α}_{b-}[w](a) - ∂₁φ + ∂₁gᵀψ‖, ‖I^{1-α}_{b-}[w](b) + ∂₂φ - ∂₂gᵀψ‖)`;
/// without `psi` the constraint terms are dropped.
pub fn transversality_residuals(spec: &ProblemSpec, traj: &TrajectoryPair, psi: Option<&[f64]>) -> Result<(f64, f64)> {
    let lin = linearize(spec, traj)?;
    let e = endpoints(spec, &lin)?;
    let dg = match psi {
        Some(psi) => {
            let dg = constraint_jacobian(spec, &lin.x)?;
            if dg.nrows() != psi.len() {
                return Err(Error::Dimension {
                    expected: dg.nrows(),
                    got: psi.len(),
                });
            }
            Some(dg)
        }
        None => None,
    };
    Ok(residuals_with(&e, dg.as_ref(), psi))
}

/// Least-squares multiplier of the constrained transversality conditions.
#[derive(Debug, Clone, Serialize)]
pub struct MultiplierFit {
    pub psi: Vec<f64>,
    /// Whether `-ψ ∈ N_S[g(x(a), x(b))]`.
    pub cone_ok: bool,
    pub transversality_a: f64,
    pub transversality_b: f64,
    pub sigma_min: f64,
}

/// Fits `ψ` to the constrained transversality equations.
///
/// Components along which the normal cone of `S` at the (projected)
/// endpoint value is `{0}` are fixed to zero before the fit.
pub fn extract_multiplier(spec: &ProblemSpec, traj: &TrajectoryPair) -> Result<MultiplierFit> {
    let lin = linearize(spec, traj)?;
    multiplier_from(spec, &lin)
}

fn multiplier_from(spec: &ProblemSpec, lin: &Linearization) -> Result<MultiplierFit> {
    let (g, set) = constraint_value(spec, &lin.x)?
        .ok_or_else(|| Error::Domain("the problem has no endpoint constraint".into()))?;
    let n = spec.dim();
    let dg = constraint_jacobian(spec, &lin.x)?;
    let j = dg.nrows();
    let sigma_min = if j > 2 * n {
        0.0
    } else {
        dg.clone().svd(false, false).singular_values.min()
    };
    if !(sigma_min >= REGULARITY_TOL) {
        return Err(Error::Regularity { sigma_min });
    }
    let e = endpoints(spec, lin)?;
    let rhs = DVector::from_iterator(
        2 * n,
        (0..n)
            .map(|i| e.phi_a[i] - e.i_a[i])
            .chain((0..n).map(|i| e.i_b[i] + e.phi_b[i])),
    );
    let z = set.project(&g)?;
    let free = set.free_components(&z, CONE_TOL);
    let kept: Vec<usize> = (0..j).filter(|&c| !free[c]).collect();
    let mut psi = vec![0.0; j];
    if !kept.is_empty() {
        let m = dg.transpose().select_columns(&kept);
        let sol = m
            .svd(true, true)
            .solve(&rhs, 1e-14)
            .map_err(|e| Error::Domain(format!("multiplier fit failed: {e}")))?;
        for (c, v) in kept.iter().zip(sol.iter()) {
            psi[*c] = *v;
        }
    }
    let neg: Vec<f64> = psi.iter().map(|p| -p).collect();
    let cone_ok = set.in_normal_cone(&z, &neg, CONE_TOL * norm(&psi).max(1.0))?;
    let (transversality_a, transversality_b) = residuals_with(&e, Some(&dg), Some(&psi));
    Ok(MultiplierFit {
        psi,
        cone_ok,
        transversality_a,
        transversality_b,
        sigma_min,
    })
}

fn min_eigenvalue(m: DMatrix<f64>) -> f64 {
    if m.nrows() == 1 {
        return m[(0, 0)];
    }
    let sym = (&m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym).eigenvalues.min()
}

/// Minimum eigenvalue of `(b-t)^(β-1)/Γ(β) ∂²₂₂L(x(t), u(t), t)` at the
/// checked nodes, and whether all of them are `≥ -tol`.
pub fn legendre_check(spec: &ProblemSpec, traj: &TrajectoryPair, tol: f64) -> Result<(Vec<Option<f64>>, bool)> {
    traj.check_against(spec)?;
    let grid = *spec.grid();
    let nc = grid.n_cells();
    let x = traj.state(spec.alpha())?;
    let l_uu = &spec.partials().l_uu;
    let n = spec.dim();
    let mut profile = vec![None; nc + 1];
    for (j, slot) in profile.iter_mut().enumerate().skip(1) {
        if j == nc && spec.beta() < 1.0 {
            continue;
        }
        let t = grid.node(j);
        let env = Env::running(x.row(j), traj.u.row(j), t);
        let mut m = DMatrix::zeros(n, n);
        for (r, row) in l_uu.iter().enumerate() {
            for (c, e) in row.iter().enumerate() {
                m[(r, c)] = e.evaluate(&env)?;
            }
        }
        *slot = Some(kernel_weight(&grid, spec.beta(), t) * min_eigenvalue(m));
    }
    let ok = profile.iter().flatten().all(|&v| v >= -tol);
    Ok((profile, ok))
}

/// Adjoint vector with `ψ⁰ = -1`:
/// `p(t) = (b-t)^(α-1)/Γ(α) (-∂₂φ + ∂₂gᵀψ) - I^α_{b-}[(b-·)^(β-1)/Γ(β) ∂₁L](t)`.
///
/// For `α < 1` the singular factor at `t = b` is replaced by its mean over
/// the last cell, `h^(α-1)/Γ(α+1)`.
pub fn adjoint(spec: &ProblemSpec, traj: &TrajectoryPair, psi: Option<&[f64]>) -> Result<GridFn> {
    let lin = linearize(spec, traj)?;
    adjoint_from(spec, &lin, psi)
}

fn adjoint_from(spec: &ProblemSpec, lin: &Linearization, psi: Option<&[f64]>) -> Result<GridFn> {
    let grid = *spec.grid();
    let n = spec.dim();
    let nc = grid.n_cells();
    let h = grid.step();
    let alpha = spec.alpha();
    let mut end: Vec<f64> = lin.phi_b.iter().map(|v| -v).collect();
    if let Some(psi) = psi {
        let dg = constraint_jacobian(spec, &lin.x)?;
        let gt = dg.transpose() * DVector::from_column_slice(psi);
        for (i, e) in end.iter_mut().enumerate() {
            *e += gt[n + i];
        }
    }
    let f = weighted_cells(lin, &lin.l_x, n, h);
    let mut p = right_integral_cells(&grid, n, &f, alpha)?;
    for j in 0..=nc {
        let k = if j == nc && alpha < 1.0 {
            h.powf(alpha - 1.0) / gamma(alpha + 1.0)
        } else {
            kernel_weight(&grid, alpha, grid.node(j))
        };
        for i in 0..n {
            p[j * n + i] = k * end[i] - p[j * n + i];
        }
    }
    Ok(GridFn::from_raw(grid, n, p))
}

/// Full report. For constrained problems the multiplier is extracted first
/// and used in the transversality residuals and the adjoint.
pub fn residual_report(spec: &ProblemSpec, traj: &TrajectoryPair, legendre_tol: f64) -> Result<ResidualReport> {
    let lin = linearize(spec, traj)?;
    let (el_residual_profile, el_residual_sup) = el_from(spec, &lin)?;
    let (transversality_a, transversality_b, psi, psi_in_cone) = if spec.constraint().is_some() {
        let fit = multiplier_from(spec, &lin)?;
        (
            fit.transversality_a,
            fit.transversality_b,
            Some(fit.psi),
            Some(fit.cone_ok),
        )
    } else {
        let (a, b) = residuals_with(&endpoints(spec, &lin)?, None, None);
        (a, b, None, None)
    };
    let (legendre_min_eig_profile, legendre_ok) = legendre_check(spec, traj, legendre_tol)?;
    let adjoint_p = adjoint_from(spec, &lin, psi.as_deref())?;
    Ok(ResidualReport {
        el_residual_sup,
        el_residual_profile,
        transversality_a,
        transversality_b,
        legendre_min_eig_profile,
        legendre_ok,
        psi0: -1.0,
        psi,
        psi_in_cone,
        adjoint_p,
    })
}

/// Samples of `Ψ(t) = ∫_a^c (t-s)^(α-1)/Γ(α) u(s) ds` on `[c, d]`.
pub fn memory_tail(
    alpha: f64,
    u_left: &GridFn,
    window: (f64, f64),
    samples: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let grid = *u_left.grid();
    let (c, d) = window;
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::Domain(format!("alpha = {alpha} out of (0,1]")));
    }
    if !(c >= grid.b() - 1e-12 * (grid.b() - grid.a()) && d > c && d.is_finite()) || samples < 2 {
        return Err(Error::Domain(format!(
            "window [{c}, {d}] must be non-degenerate and start after {}",
            grid.b()
        )));
    }
    let g = gamma(alpha + 1.0);
    let n = u_left.dim();
    let ts: Vec<f64> = (0..samples)
        .map(|i| c + (d - c) * i as f64 / (samples - 1) as f64)
        .collect();
    let vals = ts
        .iter()
        .map(|&t| {
            let mut out = vec![0.0; n];
            for k in 0..grid.n_cells() {
                let lo = (t - grid.node(k + 1)).max(0.0).powf(alpha);
                let m = ((t - grid.node(k)).powf(alpha) - lo) / g;
                for (o, ui) in out.iter_mut().zip(u_left.row(k)) {
                    *o += m * ui;
                }
            }
            out
        })
        .collect();
    Ok((ts, vals))
}

/// Number of sample points used by [`rigidity_probe`].
pub const PROBE_SAMPLES: usize = 201;

/// Sup-norm residual of the least-squares polynomial fit of degree
/// `fit_degree` to the memory tail `Ψ` on `window`. Zero only when `Ψ`
/// is itself such a polynomial, which for `α < 1` forces `u_left = 0`.
pub fn rigidity_probe(alpha: f64, u_left: &GridFn, window: (f64, f64), fit_degree: usize) -> Result<f64> {
    let (ts, vals) = memory_tail(alpha, u_left, window, PROBE_SAMPLES)?;
    let (c, d) = window;
    let m = ts.len();
    let vander = DMatrix::from_fn(m, fit_degree + 1, |i, k| {
        ((2.0 * ts[i] - c - d) / (d - c)).powi(k as i32)
    });
    let svd = vander.clone().svd(true, true);
    let n = u_left.dim();
    let mut resid = vec![0.0; m * n];
    for i in 0..n {
        let col = DVector::from_iterator(m, vals.iter().map(|v| v[i]));
        let coef = svd
            .solve(&col, 1e-14)
            .map_err(|e| Error::Domain(format!("polynomial fit failed: {e}")))?;
        let fit = &vander * coef;
        for r in 0..m {
            resid[r * n + i] = col[r] - fit[r];
        }
    }
    Ok(resid.chunks_exact(n).map(norm).fold(0.0, f64::max))
}

/// Monomial moments `∫_a^c (s-a)^k u(s) ds`, `k = 0..=max_k`, by the
/// trapezoid rule on the node values; entry `[k][i]` is component `i`.
pub fn moments(u_left: &GridFn, max_k: usize) -> Vec<Vec<f64>> {
    let grid = *u_left.grid();
    let h = grid.step();
    let n = u_left.dim();
    let nc = grid.n_cells();
    (0..=max_k)
        .map(|k| {
            let mut out = vec![0.0; n];
            for j in 0..=nc {
                let w = if j == 0 || j == nc { 0.5 * h } else { h };
                let s = (grid.node(j) - grid.a()).powi(k as i32);
                for (o, ui) in out.iter_mut().zip(u_left.row(j)) {
                    *o += w * s * ui;
                }
            }
            out
        })
        .collect()
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

    fn cosh_optimum(spec: &ProblemSpec) -> TrajectoryPair {
        let s1 = 1f64.sinh();
        traj_from(spec, |t| -t.sinh() / s1, -1.0 / s1)
    }

    #[test]
    fn el_examples() {
        let spec = example(1.0, 1.0, 200);
        let (r, sup) = el_residual(&spec, &TrajectoryPair::zero(*spec.grid(), 1)).unwrap();
        assert_eq!(sup, 0.0);
        assert!(r.values().iter().all(|&v| v == 0.0));

        let (r, sup) = el_residual(&spec, &traj_from(&spec, |_| 1.0, 0.0)).unwrap();
        assert!((sup - 0.5).abs() < 1e-4);
        for (k, t) in spec.grid().nodes().enumerate() {
            assert!((r.row(k)[0] - (1.0 - t * t) / 2.0).abs() < 1e-4);
        }

        let (_, sup_coarse) = el_residual(&spec, &cosh_optimum(&spec)).unwrap();
        let fine = example(1.0, 1.0, 400);
        let (_, sup_fine) = el_residual(&fine, &cosh_optimum(&fine)).unwrap();
        assert!(sup_coarse < 1e-2);
        assert!((sup_coarse / sup_fine - 2.0).abs() < 0.2, "{sup_coarse} {sup_fine}");
    }

    #[test]
    fn transversality_examples() {
        let spec = example(1.0, 1.0, 200);
        let (ra, rb) = transversality_residuals(&spec, &TrajectoryPair::zero(*spec.grid(), 1), None).unwrap();
        assert_eq!((ra, rb), (0.0, 1.0));
        let (ra, rb) = transversality_residuals(&spec, &cosh_optimum(&spec), None).unwrap();
        assert!(ra < 1e-2 && rb < 1e-2, "{ra} {rb}");
        let half = example(0.5, 1.0, 200);
        let (_, rb) = transversality_residuals(&half, &traj_from(&half, |t| t.cos(), 0.1), None).unwrap();
        assert_eq!(rb, 1.0);
    }

    #[test]
    fn multiplier_examples() {
        let spec = example(1.0, 1.0, 100);
        let traj = cosh_optimum(&spec);
        let free = spec.with_constraint(Some(standard_constraint(&ConstraintKind::Free, 1).unwrap()));
        let fit = extract_multiplier(&free, &traj).unwrap();
        assert_eq!(fit.psi, vec![0.0, 0.0]);
        let plain = transversality_residuals(&spec, &traj, None).unwrap();
        assert_eq!((fit.transversality_a, fit.transversality_b), plain);

        let kind = ConstraintKind::FixedBoth {
            xa: vec![0.0],
            xb: vec![1.0],
        };
        let fixed = spec.with_constraint(Some(standard_constraint(&kind, 1).unwrap()));
        let fit = extract_multiplier(&fixed, &traj_from(&spec, |t| t * t, 0.3)).unwrap();
        assert!(fit.transversality_a < 1e-12 && fit.transversality_b < 1e-12);
        assert!(fit.cone_ok);

        assert!(extract_multiplier(&spec, &traj).is_err());
        let degenerate = spec.with_constraint(Some(crate::model::Constraint {
            g: vec![crate::expr::Expr::parse("xa1 - xa1", 1).unwrap()],
            set: crate::model::ConvexSet::Singleton { point: vec![0.0] },
        }));
        assert!(matches!(
            extract_multiplier(&degenerate, &traj),
            Err(Error::Regularity { .. })
        ));
    }

    #[test]
    fn legendre_examples() {
        let spec = example(0.8, 1.0, 50);
        let traj = traj_from(&spec, |t| t, 0.0);
        let (profile, ok) = legendre_check(&spec, &traj, 0.0).unwrap();
        assert!(ok);
        assert_eq!(profile[0], None);
        assert!(profile[1..].iter().all(|v| (v.unwrap() - 1.0).abs() < 1e-14));

        let spec2 = spec.with_beta(2.0);
        let (profile, ok) = legendre_check(&spec2, &traj, 0.0).unwrap();
        assert!(ok);
        for (j, v) in profile.iter().enumerate().skip(1) {
            assert!((v.unwrap() - (1.0 - spec2.grid().node(j))).abs() < 1e-14);
        }

        let grid = *spec.grid();
        let bad = ProblemSpec::from_sources(0.8, 0.5, grid, 1, "0", "x1^2 - u1^2", None).unwrap();
        let (profile, ok) = legendre_check(&bad, &traj, 1e-9).unwrap();
        assert!(!ok);
        assert_eq!(profile[50], None);
    }

    #[test]
    fn adjoint_matches_weighted_partial_at_the_optimum() {
        let spec = example(1.0, 1.0, 400);
        let traj = cosh_optimum(&spec);
        let p = adjoint(&spec, &traj, None).unwrap();
        let err = (0..=400)
            .map(|k| (p.row(k)[0] - traj.u.row(k)[0]).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-2, "{err}");
    }

    #[test]
    fn rigidity_examples() {
        let grid = Grid::new(0.0, 0.5, 100).unwrap();
        let zero = GridFn::zeros(grid, 1);
        assert_eq!(rigidity_probe(0.5, &zero, (0.6, 1.0), 0).unwrap(), 0.0);
        let one = GridFn::constant(grid, &[1.0]);
        let r = rigidity_probe(0.5, &one, (0.6, 1.0), 0).unwrap();
        // Ψ(t) = (√t - √(t - 1/2)) / Γ(3/2), fitted by its sample mean
        let psi = |t: f64| (t.sqrt() - (t - 0.5).sqrt()) / gamma(1.5);
        let ts: Vec<f64> = (0..PROBE_SAMPLES).map(|i| 0.6 + 0.4 * i as f64 / 200.0).collect();
        let mean = ts.iter().map(|&t| psi(t)).sum::<f64>() / ts.len() as f64;
        let oracle = ts.iter().map(|&t| (psi(t) - mean).abs()).fold(0.0, f64::max);
        assert!((r - oracle).abs() < 1e-10, "{r} vs {oracle}");
        assert!(r > 0.01);
        assert!(rigidity_probe(0.5, &one, (0.6, 0.6), 0).is_err());
        // At α = 1 the tail is constant.
        assert!(rigidity_probe(1.0, &one, (0.6, 1.0), 0).unwrap() < 1e-12);
    }

    #[test]
    fn moment_examples() {
        let half = Grid::new(0.0, 0.5, 10).unwrap();
        let m = moments(&GridFn::constant(half, &[1.0]), 1);
        assert!((m[1][0] - 0.125).abs() < 1e-15);
        assert_eq!(moments(&GridFn::zeros(half, 1), 3), vec![vec![0.0]; 4]);
        let unit = Grid::new(0.0, 1.0, 10).unwrap();
        let m = moments(&GridFn::from_scalar_fn(unit, |s| s).unwrap(), 0);
        assert!((m[0][0] - 0.5).abs() < 1e-15);
    }
}
