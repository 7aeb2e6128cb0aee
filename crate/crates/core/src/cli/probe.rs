//! Seeded sampling for the memory-rigidity probe.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::conditions::{moments, rigidity_probe};
use crate::error::Result;
use crate::grid::{norm, Grid, GridFn};

/// Number of Fourier modes in a random segment.
const MODES: usize = 4;

/// Random smooth nonzero control on `grid`, scaled to sup norm 1.
pub fn random_segment<R: Rng>(rng: &mut R, grid: Grid, dim: usize) -> GridFn {
    let len = grid.b() - grid.a();
    loop {
        let coef: Vec<[f64; 2]> = (0..MODES * dim)
            .map(|_| [rng.random_range(-1.0..=1.0), rng.random_range(-1.0..=1.0)])
            .collect();
        let mut u = GridFn::from_fn(grid, dim, |t, r| {
            let s = std::f64::consts::PI * (t - grid.a()) / len;
            for (i, ri) in r.iter_mut().enumerate() {
                *ri = coef[i * MODES..(i + 1) * MODES]
                    .iter()
                    .enumerate()
                    .map(|(m, [c, d])| c * (m as f64 * s).cos() + d * ((m + 1) as f64 * s).sin())
                    .sum();
            }
        })
        .expect("finite samples");
        let sup = u.sup_norm();
        if sup > 1e-3 {
            u.values_mut().iter_mut().for_each(|v| *v /= sup);
            return u;
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSample {
    pub residual: f64,
    /// Norms of the monomial moments of orders `0..=3`.
    pub moment_norms: Vec<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbeSummary {
    pub alpha: f64,
    pub fit_degree: usize,
    pub seed: u64,
    pub segment: [f64; 2],
    pub window: [f64; 2],
    pub zero_segment_residual: f64,
    pub min_residual: f64,
    pub median_residual: f64,
    pub max_residual: f64,
    pub samples: Vec<ProbeSample>,
}

/// Runs the probe on `count` random segments over `[0, 1/2]` with the
/// window `[1/2, 1]`.
pub fn run_probe(alpha: f64, fit_degree: usize, count: usize, n_cells: usize, seed: u64) -> Result<ProbeSummary> {
    let grid = Grid::new(0.0, 0.5, n_cells)?;
    let window = (0.5, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let zero_segment_residual = rigidity_probe(alpha, &GridFn::zeros(grid, 1), window, fit_degree)?;
    let samples = (0..count)
        .map(|_| {
            let u = random_segment(&mut rng, grid, 1);
            Ok(ProbeSample {
                residual: rigidity_probe(alpha, &u, window, fit_degree)?,
                moment_norms: moments(&u, 3).iter().map(|m| norm(m)).collect(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut sorted: Vec<f64> = samples.iter().map(|s| s.residual).collect();
    sorted.sort_by(f64::total_cmp);
    let pick = |q: f64| {
        sorted
            .get(((sorted.len() - 1) as f64 * q).round() as usize)
            .copied()
            .unwrap_or(f64::NAN)
    };
    Ok(ProbeSummary {
        alpha,
        fit_degree,
        seed,
        segment: [grid.a(), grid.b()],
        window: [window.0, window.1],
        zero_segment_residual,
        min_residual: pick(0.0),
        median_residual: pick(0.5),
        max_residual: pick(1.0),
        samples,
    })
}
