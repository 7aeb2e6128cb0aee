//! Riemann-Liouville integrals and Caputo derivatives on uniform grids.
//!
//! Data are treated as piecewise constant on cells (left value) and the
//! weakly singular kernel `(t - s)^(α-1) / Γ(α)` is integrated exactly over
//! each cell, so every operator is a discrete convolution with a single
//! weight table per order. The scheme is first order in the mesh step.

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFn};
use statrs::function::gamma::gamma;

/// Exact cell moments of the RL kernel of a given order on a uniform mesh.
///
/// Entry `m` is `∫_{mh}^{(m+1)h} s^(α-1) / Γ(α) ds
/// = ((m+1)^α - m^α) h^α / Γ(α+1)`.
#[derive(Debug, Clone)]
pub struct FracWeights {
    alpha: f64,
    h: f64,
    weights: Vec<f64>,
}

impl FracWeights {
    pub fn new(alpha: f64, h: f64, len: usize) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(Error::Domain(format!("kernel order {alpha} must be positive")));
        }
        if !(h > 0.0) {
            return Err(Error::Domain(format!("step {h} must be positive")));
        }
        let scale = h.powf(alpha) / gamma(alpha + 1.0);
        let weights = (0..len)
            .map(|m| {
                if m == 0 {
                    scale
                } else {
                    // m^α ((1 + 1/m)^α - 1) without cancellation
                    let m = m as f64;
                    scale * m.powf(alpha) * (alpha * (1.0 / m).ln_1p()).exp_m1()
                }
            })
            .collect();
        Ok(Self { alpha, h, weights })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// `∫_{t_j}^{b}`-style cost weights: `∫_{t_k}^{t_{k+1}} (b-s)^(β-1)/Γ(β) ds` per cell.
pub(crate) fn cost_weights(grid: &Grid, beta: f64) -> Result<Vec<f64>> {
    let n = grid.n_cells();
    let w = FracWeights::new(beta, grid.step(), n)?;
    Ok((0..n).map(|k| w.weights[n - 1 - k]).collect())
}

/// Dot product with a fixed four-lane summation order.
fn dot4(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, ra) = a.as_chunks::<4>();
    let (cb, rb) = b.as_chunks::<4>();
    for (x, y) in ca.iter().zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let tail: f64 = ra.iter().zip(rb).map(|(x, y)| x * y).sum();
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

fn column(n_cells: usize, dim: usize, cells: &[f64], i: usize) -> Vec<f64> {
    (0..n_cells).map(|k| cells[k * dim + i]).collect()
}

/// Left convolution of cell data: node `j` gets `Σ_{k<j} w[j-1-k] c_k`.
fn left_conv(n_cells: usize, dim: usize, cells: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; (n_cells + 1) * dim];
    for i in 0..dim {
        let mut rev = column(n_cells, dim, cells, i);
        rev.reverse();
        for j in 1..=n_cells {
            out[j * dim + i] = dot4(&w[..j], &rev[n_cells - j..]);
        }
    }
    out
}

/// Right convolution of cell data: node `j` gets `Σ_{k≥j} w[k-j] c_k`.
fn right_conv(n_cells: usize, dim: usize, cells: &[f64], w: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; (n_cells + 1) * dim];
    for i in 0..dim {
        let c = column(n_cells, dim, cells, i);
        for j in 0..n_cells {
            out[j * dim + i] = dot4(&w[..n_cells - j], &c[j..]);
        }
    }
    out
}

/// Node values of a piecewise-constant function given per cell; the last
/// node takes the left limit.
fn cells_to_nodes(n_cells: usize, dim: usize, cells: &[f64]) -> Vec<f64> {
    let mut out = cells[..n_cells * dim].to_vec();
    out.extend_from_slice(&cells[(n_cells - 1) * dim..n_cells * dim]);
    out
}

/// `I^order_{a+}` of cell data, at every node.
pub(crate) fn left_integral_cells(grid: &Grid, dim: usize, cells: &[f64], order: f64) -> Result<Vec<f64>> {
    let n = grid.n_cells();
    if order == 0.0 {
        return Ok(cells_to_nodes(n, dim, cells));
    }
    let w = FracWeights::new(order, grid.step(), n)?;
    Ok(left_conv(n, dim, cells, &w.weights))
}

/// `I^order_{b-}` of cell data, at every node.
pub(crate) fn right_integral_cells(grid: &Grid, dim: usize, cells: &[f64], order: f64) -> Result<Vec<f64>> {
    let n = grid.n_cells();
    if order == 0.0 {
        return Ok(cells_to_nodes(n, dim, cells));
    }
    let w = FracWeights::new(order, grid.step(), n)?;
    Ok(right_conv(n, dim, cells, &w.weights))
}

/// `I^order_{a+}` of cell data supported on cells `[start, end)` only.
pub(crate) fn left_integral_window(
    grid: &Grid,
    dim: usize,
    cells: &[f64],
    start: usize,
    end: usize,
    w: &FracWeights,
) -> Vec<f64> {
    let n = grid.n_cells();
    let mut out = vec![0.0; (n + 1) * dim];
    for j in (start + 1)..=n {
        let row = &mut out[j * dim..(j + 1) * dim];
        for k in start..end.min(j) {
            let wk = w.weights[j - 1 - k];
            let c = &cells[k * dim..(k + 1) * dim];
            for (o, ci) in row.iter_mut().zip(c) {
                *o += wk * ci;
            }
        }
    }
    out
}

fn check_order(alpha: f64) -> Result<()> {
    if alpha >= 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("order {alpha} must be non-negative")))
    }
}

fn check_caputo_order(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("alpha = {alpha} out of (0,1]")))
    }
}

/// Left Riemann-Liouville integral `I^α_{a+}[u]` at every node.
///
/// `u` is read as piecewise constant with its left value on each cell.
/// For `α = 0` the input is returned unchanged.
pub fn rl_integral_left(u: &GridFn, alpha: f64) -> Result<GridFn> {
    check_order(alpha)?;
    if alpha == 0.0 {
        return Ok(u.clone());
    }
    let values = left_integral_cells(u.grid(), u.dim(), u.cell_values(), alpha)?;
    Ok(GridFn::from_raw(*u.grid(), u.dim(), values))
}

/// Right Riemann-Liouville integral `I^α_{b-}[u]` at every node; zero at `b`
/// for `α > 0`.
pub fn rl_integral_right(u: &GridFn, alpha: f64) -> Result<GridFn> {
    check_order(alpha)?;
    if alpha == 0.0 {
        return Ok(u.clone());
    }
    let values = right_integral_cells(u.grid(), u.dim(), u.cell_values(), alpha)?;
    Ok(GridFn::from_raw(*u.grid(), u.dim(), values))
}

/// Cellwise difference quotients of node samples.
pub(crate) fn forward_differences(x: &GridFn) -> Vec<f64> {
    let dim = x.dim();
    let h = x.grid().step();
    (0..x.grid().n_cells())
        .flat_map(|k| {
            let (r0, r1) = (x.row(k), x.row(k + 1));
            (0..dim).map(move |i| (r1[i] - r0[i]) / h)
        })
        .collect()
}

/// L1-scheme Caputo derivative `I^{1-α}_{a+}[ẋ]`, with `ẋ` the cellwise
/// difference quotient of `x`.
///
/// For `α = 1` the difference quotients themselves are returned (row `k`
/// is the slope on cell `k`).
pub fn caputo_derivative_left(x: &GridFn, alpha: f64) -> Result<GridFn> {
    check_caputo_order(alpha)?;
    let slopes = forward_differences(x);
    let values = left_integral_cells(x.grid(), x.dim(), &slopes, 1.0 - alpha)?;
    Ok(GridFn::from_raw(*x.grid(), x.dim(), values))
}

/// `x = y + I^α_{a+}[u]`; `x(a) = y` exactly.
pub fn reconstruct_trajectory(u: &GridFn, y: &[f64], alpha: f64) -> Result<GridFn> {
    check_caputo_order(alpha)?;
    if y.len() != u.dim() {
        return Err(Error::Dimension {
            expected: u.dim(),
            got: y.len(),
        });
    }
    let mut x = rl_integral_left(u, alpha)?;
    for row in x.values_mut().chunks_exact_mut(y.len()) {
        for (xi, yi) in row.iter_mut().zip(y) {
            *xi += yi;
        }
    }
    Ok(x)
}

/// Closed form of `η = I^α_{a+}[ν]` for `ν = v` on `[τ, τ+h)` and zero
/// elsewhere, evaluated exactly at the nodes.
pub fn eqguo_variation(grid: &Grid, alpha: f64, tau: f64, h: f64, v: &[f64]) -> Result<GridFn> {
    check_caputo_order(alpha)?;
    let slack = 1e-12 * (grid.b() - grid.a());
    if !(h > 0.0) || tau < grid.a() - slack || tau + h > grid.b() + slack {
        return Err(Error::Domain(format!(
            "window [{tau}, {}] is not inside [{}, {}]",
            tau + h,
            grid.a(),
            grid.b()
        )));
    }
    let g = gamma(1.0 + alpha);
    GridFn::from_fn(*grid, v.len(), |t, row| {
        let c = if t <= tau {
            0.0
        } else if t <= tau + h {
            (t - tau).powf(alpha) / g
        } else {
            ((t - tau).powf(alpha) - (t - tau - h).powf(alpha)) / g
        };
        for (r, vi) in row.iter_mut().zip(v) {
            *r = c * vi;
        }
    })
}

/// `I^order_{b-}[w](t)` at an arbitrary `t ∈ [a, b]`, with cell moments
/// clipped at `t`. Exactly zero at `t = b`.
pub fn endpoint_right_integral(w: &GridFn, order: f64, t: f64) -> Result<Vec<f64>> {
    if !(order > 0.0 && order < 1.0) {
        return Err(Error::Domain(format!("order {order} out of (0,1)")));
    }
    let grid = w.grid();
    if !(t >= grid.a() && t <= grid.b()) {
        return Err(Error::Domain(format!("t = {t} outside [{}, {}]", grid.a(), grid.b())));
    }
    let mut out = vec![0.0; w.dim()];
    if t == grid.b() {
        return Ok(out);
    }
    let g = gamma(order + 1.0);
    for k in 0..grid.n_cells() {
        let (s0, s1) = (grid.node(k), grid.node(k + 1));
        if s1 <= t {
            continue;
        }
        let lo = if s0 > t { (s0 - t).powf(order) } else { 0.0 };
        let m = ((s1 - t).powf(order) - lo) / g;
        for (o, wi) in out.iter_mut().zip(w.row(k)) {
            *o += m * wi;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_OVER_SQRT_PI: f64 = std::f64::consts::FRAC_2_SQRT_PI;

    fn unit(n: usize) -> Grid {
        Grid::new(0.0, 1.0, n).unwrap()
    }

    #[test]
    fn weights_are_positive_decreasing_and_telescope() {
        let w = FracWeights::new(0.4, 0.01, 100).unwrap();
        assert!(w.weights().iter().all(|&x| x > 0.0));
        assert!(w.weights().windows(2).all(|p| p[1] < p[0]));
        let k = 100;
        let total: f64 = w.weights().iter().sum();
        let exact = (k as f64 * 0.01f64).powf(0.4) / gamma(1.4);
        assert!((total - exact).abs() < 1e-13);
        assert!(FracWeights::new(0.0, 0.1, 3).is_err());
    }

    #[test]
    fn left_integral_of_constant() {
        let u = GridFn::constant(unit(64), &[1.0]);
        let i1 = rl_integral_left(&u, 1.0).unwrap();
        assert!((i1.row(64)[0] - 1.0).abs() < 1e-14);
        let ih = rl_integral_left(&u, 0.5).unwrap();
        assert!((ih.row(64)[0] - TWO_OVER_SQRT_PI).abs() < 1e-13);
        assert_eq!(ih.row(0)[0], 0.0);
        let i0 = rl_integral_left(&u, 0.0).unwrap();
        assert_eq!(i0, u);
        assert!(rl_integral_left(&u, -0.1).is_err());
    }

    #[test]
    fn right_integral_of_constant() {
        let u = GridFn::constant(unit(64), &[1.0]);
        let i1 = rl_integral_right(&u, 1.0).unwrap();
        assert!((i1.row(0)[0] - 1.0).abs() < 1e-14);
        let ih = rl_integral_right(&u, 0.5).unwrap();
        assert_eq!(ih.row(64)[0], 0.0);
        assert!((ih.row(0)[0] - TWO_OVER_SQRT_PI).abs() < 1e-13);
    }

    #[test]
    fn caputo_examples() {
        let g = unit(128);
        let x = GridFn::from_scalar_fn(g, |t| t).unwrap();
        let d1 = caputo_derivative_left(&x, 1.0).unwrap();
        assert!(d1.rows().all(|r| (r[0] - 1.0).abs() < 1e-12));
        let dh = caputo_derivative_left(&x, 0.5).unwrap();
        assert!((dh.row(128)[0] - 1.0 / gamma(1.5)).abs() < 1e-12);
        let c = GridFn::constant(g, &[3.0]);
        assert!(caputo_derivative_left(&c, 0.3).unwrap().sup_norm() == 0.0);
        assert!(caputo_derivative_left(&x, 0.0).is_err());
        assert!(caputo_derivative_left(&x, 1.2).is_err());
    }

    #[test]
    fn reconstruct_examples() {
        let g = unit(32);
        let x = reconstruct_trajectory(&GridFn::zeros(g, 1), &[2.0], 0.7).unwrap();
        assert!(x.rows().all(|r| r[0] == 2.0));
        let one = GridFn::constant(g, &[1.0]);
        let x = reconstruct_trajectory(&one, &[0.0], 1.0).unwrap();
        for (k, r) in x.rows().enumerate() {
            assert!((r[0] - g.node(k)).abs() < 1e-14);
        }
        let x = reconstruct_trajectory(&one, &[0.0], 0.5).unwrap();
        assert!((x.row(32)[0] - TWO_OVER_SQRT_PI).abs() < 1e-13);
        assert!(reconstruct_trajectory(&one, &[0.0, 1.0], 0.5).is_err());
    }

    #[test]
    fn eqguo_examples() {
        let g = unit(4);
        let e1 = eqguo_variation(&g, 1.0, 0.25, 0.25, &[1.0]).unwrap();
        assert!((e1.row(3)[0] - 0.25).abs() < 1e-15);
        let eh = eqguo_variation(&g, 0.5, 0.25, 0.25, &[1.0]).unwrap();
        let expected = (0.5f64.sqrt() - 0.5) / gamma(1.5);
        assert!((eh.row(3)[0] - expected).abs() < 1e-15);
        assert!((expected - 0.233_70).abs() < 1e-5);
        assert_eq!(eh.row(0)[0], 0.0);
        assert_eq!(eh.row(1)[0], 0.0);
        assert!(eqguo_variation(&g, 0.5, 0.9, 0.25, &[1.0]).is_err());
    }

    #[test]
    fn endpoint_right_integral_examples() {
        let g = unit(16);
        let w = GridFn::constant(g, &[1.0]);
        assert_eq!(endpoint_right_integral(&w, 0.5, 1.0).unwrap(), vec![0.0]);
        let v = endpoint_right_integral(&w, 0.5, 0.0).unwrap()[0];
        assert!((v - TWO_OVER_SQRT_PI).abs() < 1e-13);
        // Off-node evaluation clips the first cell moment.
        let v = endpoint_right_integral(&w, 0.5, 0.51).unwrap()[0];
        assert!((v - 0.49f64.sqrt() * TWO_OVER_SQRT_PI).abs() < 1e-13);
        let z = GridFn::zeros(g, 2);
        assert_eq!(endpoint_right_integral(&z, 0.3, 0.2).unwrap(), vec![0.0, 0.0]);
        assert!(endpoint_right_integral(&w, 1.0, 0.2).is_err());
    }
}
