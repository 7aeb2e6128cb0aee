#![allow(dead_code)]

use fvc_core::frac_ops::{rl_integral_left, rl_integral_right};
use fvc_core::{ConvexSet, Grid, GridFn, ProblemSpec, TrajectoryPair};
use rand::Rng;
use statrs::function::gamma::gamma;

pub fn unit_grid(n_cells: usize) -> Grid {
    Grid::new(0.0, 1.0, n_cells).unwrap()
}

/// `x(b) + ∫ ½(x² + u²)` on `[0, 1]` with cost order 1.
pub fn example(alpha: f64, n_cells: usize) -> ProblemSpec {
    ProblemSpec::from_sources(alpha, 1.0, unit_grid(n_cells), 1, "xb1", "0.5*(x1^2 + u1^2)", None).unwrap()
}

/// Classical minimizer of the example: `ẍ = x`, `ẋ(0) = 0`, `ẋ(1) = -1`
/// gives `x = A cosh t` with `A sinh 1 = -1`.
pub fn example_state(t: f64) -> f64 {
    -t.cosh() / 1f64.sinh()
}

pub fn example_control(t: f64) -> f64 {
    -t.sinh() / 1f64.sinh()
}

/// `x(1) + ½∫(x² + ẋ²)` at the minimizer, by integrating `A²(cosh² + sinh²)`.
pub fn example_objective() -> f64 {
    let a = -1.0 / 1f64.sinh();
    a * 1f64.cosh() + 0.5 * a * a * (2f64).sinh() / 2.0
}

pub fn example_optimum(n_cells: usize) -> TrajectoryPair {
    let u = GridFn::from_scalar_fn(unit_grid(n_cells), example_control).unwrap();
    TrajectoryPair::new(u, vec![example_state(0.0)]).unwrap()
}

/// A fixed smooth function built from random Fourier modes.
#[derive(Debug, Clone)]
pub struct Smooth {
    coef: Vec<(f64, f64, f64)>,
}

impl Smooth {
    pub fn random<R: Rng>(rng: &mut R, modes: usize) -> Self {
        Self {
            coef: (0..modes)
                .map(|_| {
                    (
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(0.5..6.0),
                    )
                })
                .collect(),
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coef
            .iter()
            .map(|(a, b, w)| a * (w * t).sin() + b * (w * t).cos())
            .sum()
    }

    pub fn sample(&self, grid: Grid) -> GridFn {
        GridFn::from_scalar_fn(grid, |t| self.eval(t)).unwrap()
    }
}

pub fn random_traj<R: Rng>(rng: &mut R, grid: Grid, dim: usize) -> TrajectoryPair {
    let parts: Vec<Smooth> = (0..dim).map(|_| Smooth::random(rng, 3)).collect();
    let u = GridFn::from_fn(grid, dim, |t, r| {
        for (ri, s) in r.iter_mut().zip(&parts) {
            *ri = s.eval(t);
        }
    })
    .unwrap();
    let y = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    TrajectoryPair::new(u, y).unwrap()
}

/// `I^α_{0+}[s^p](t) = Γ(p+1)/Γ(p+1+α) t^(p+α)`.
pub fn left_power_integral(p: f64, alpha: f64, t: f64) -> f64 {
    gamma(p + 1.0) / gamma(p + 1.0 + alpha) * t.powf(p + alpha)
}

/// `I^α_{b-}[s^p](t)` for integer `p`, expanding `s^p` around `t`.
pub fn right_power_integral(p: u32, alpha: f64, b: f64, t: f64) -> f64 {
    let mut binom = 1.0;
    let mut out = 0.0;
    for j in 0..=p {
        if j > 0 {
            binom = binom * f64::from(p - j + 1) / f64::from(j);
        }
        let jj = f64::from(j);
        out += binom * t.powi((p - j) as i32) * (b - t).powf(alpha + jj) / ((alpha + jj) * gamma(alpha));
    }
    out
}

/// Least-squares slope of `-log2(err)` against `log2(n)`.
pub fn empirical_order(ns: &[usize], errs: &[f64]) -> f64 {
    let xs: Vec<f64> = ns.iter().map(|&n| (n as f64).log2()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| -e.log2()).collect();
    let m = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / m, ys.iter().sum::<f64>() / m);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub fn sup_diff(a: &GridFn, f: impl Fn(f64) -> f64) -> f64 {
    a.grid()
        .nodes()
        .zip(a.values())
        .map(|(t, v)| (v - f(t)).abs())
        .fold(0.0, f64::max)
}

/// `∫ x₁ I^{1-α}_{b-}[(b-·)^(β-1)/Γ(β) x₂]` with the weight averaged exactly
/// over each cell; the other side is `I^β[I^{1-α}[x₁] x₂](b)`.
pub fn integration_by_parts_sides(x1: &GridFn, x2: &GridFn, alpha: f64, beta: f64) -> (f64, f64) {
    let grid = *x1.grid();
    let n = grid.n_cells();
    let h = grid.step();
    let lhs_inner = rl_integral_left(x1, 1.0 - alpha).unwrap();
    // I^β[f](b) of cell data f: Σ V_k f_k with exact kernel moments
    let moment = |k: usize| {
        let (t0, t1) = (grid.node(k), grid.node(k + 1));
        ((1.0 - t0).powf(beta) - (1.0 - t1).powf(beta)) / gamma(beta + 1.0)
    };
    let prod = GridFn::from_fn(grid, 1, |t, r| {
        let k = grid.node_index(t).unwrap().min(n - 1);
        r[0] = lhs_inner.row(k)[0] * x2.row(k)[0];
    })
    .unwrap();
    // product is piecewise constant by cell only through the left values
    let lhs: f64 = (0..n).map(|k| moment(k) * prod.row(k)[0]).sum();
    let w = GridFn::from_fn(grid, 1, |t, r| {
        let k = grid.node_index(t).unwrap().min(n - 1);
        r[0] = moment(k) / h * x2.row(k)[0];
    })
    .unwrap();
    let inner = rl_integral_right(&w, 1.0 - alpha).unwrap();
    let rhs: f64 = (0..n)
        .map(|k| h * x1.row(k)[0] * 0.5 * (inner.row(k)[0] + inner.row(k + 1)[0]))
        .sum();
    (lhs, rhs)
}

/// `c₀ + c₁t + c₂ sin 3t + c₃ cos 5t + c₄t² + c₅ cos 2t`.
pub fn from_coef(grid: Grid, c: &[f64; 6]) -> GridFn {
    GridFn::from_scalar_fn(grid, |t| {
        c[0] + c[1] * t + c[2] * (3.0 * t).sin() + c[3] * (5.0 * t).cos() + c[4] * t * t + c[5] * (2.0 * t).cos()
    })
    .unwrap()
}

pub fn random_set<R: Rng>(rng: &mut R, dim: usize, depth: usize) -> ConvexSet {
    let pick = if depth == 0 || dim < 2 {
        rng.random_range(0..4)
    } else {
        rng.random_range(0..5)
    };
    match pick {
        0 => ConvexSet::WholeSpace { dim },
        1 => ConvexSet::Singleton {
            point: (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect(),
        },
        2 => {
            let mut lower = Vec::new();
            let mut upper = Vec::new();
            for _ in 0..dim {
                let l: f64 = rng.random_range(-2.0..1.0);
                let u = l + rng.random_range(0.0..2.0);
                lower.push(if rng.random_bool(0.2) { f64::NEG_INFINITY } else { l });
                upper.push(if rng.random_bool(0.2) { f64::INFINITY } else { u });
            }
            ConvexSet::Box { lower, upper }
        }
        3 => ConvexSet::Ball {
            center: (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            radius: rng.random_range(0.0..2.0),
        },
        _ => {
            let first = rng.random_range(1..dim);
            ConvexSet::Product {
                parts: vec![
                    random_set(rng, first, depth - 1),
                    random_set(rng, dim - first, depth - 1),
                ],
            }
        }
    }
}

pub fn point<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}
