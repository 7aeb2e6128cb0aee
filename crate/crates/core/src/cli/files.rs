//! Problem JSON and trajectory CSV formats.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::grid::{Grid, GridFn};
use crate::model::{standard_constraint, validate, Constraint, ConstraintKind, ConvexSet, ProblemSpec, TrajectoryPair};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub n_cells: usize,
}

/// Either a standard endpoint situation or an explicit `(g, S)` pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstraintSection {
    Standard(ConstraintKind),
    Explicit { g: Vec<String>, set: ConvexSet },
}

/// On-disk problem description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub alpha: f64,
    pub beta: f64,
    pub interval: [f64; 2],
    pub dim: usize,
    pub phi: String,
    pub lagrangian: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constraint: Option<ConstraintSection>,
    pub grid: GridSection,
    /// Partial solver settings; missing fields take their defaults.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
}

fn parse_at(path: &str, src: &str, dim: usize) -> Result<Expr> {
    Expr::parse(src, dim).map_err(|e| Error::Input(format!("{path}: {e}")))
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Input(format!("problem file: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// Builds and validates the problem, optionally on another mesh.
    pub fn to_spec(&self, n_cells: Option<usize>) -> Result<ProblemSpec> {
        let [a, b] = self.interval;
        let grid =
            Grid::new(a, b, n_cells.unwrap_or(self.grid.n_cells)).map_err(|e| Error::Input(format!("grid: {e}")))?;
        let dim = self.dim;
        let constraint = match &self.constraint {
            None => None,
            Some(ConstraintSection::Standard(kind)) => {
                Some(standard_constraint(kind, dim).map_err(|e| Error::Input(format!("constraint: {e}")))?)
            }
            Some(ConstraintSection::Explicit { g, set }) => Some(Constraint {
                g: g.iter()
                    .enumerate()
                    .map(|(i, s)| parse_at(&format!("constraint.g[{i}]"), s, dim))
                    .collect::<Result<_>>()?,
                set: set.clone(),
            }),
        };
        let spec = ProblemSpec::new(
            self.alpha,
            self.beta,
            grid,
            dim,
            parse_at("phi", &self.phi, dim)?,
            parse_at("lagrangian", &self.lagrangian, dim)?,
            constraint,
        );
        validate(&spec).into_result()?;
        Ok(spec)
    }

    pub fn solver_config(&self) -> SolverConfig {
        self.solver.clone().unwrap_or_default()
    }
}

/// Writes `# y = ...`, the header `t,u_1,...,u_n` and one row per node.
pub fn write_trajectory<W: Write>(traj: &TrajectoryPair, mut out: W) -> Result<()> {
    let y: Vec<String> = traj.y.iter().map(|v| v.to_string()).collect();
    writeln!(out, "# y = {}", y.join(","))?;
    let mut w = csv::Writer::from_writer(out);
    let n = traj.dim();
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("u_{i}")));
    w.write_record(&header)?;
    for (k, t) in traj.grid().nodes().enumerate() {
        let mut rec = vec![t.to_string()];
        rec.extend(traj.u.row(k).iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_file(traj: &TrajectoryPair, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_trajectory(traj, std::io::BufWriter::new(f))
}

fn parse_number(s: &str, what: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::Input(format!("{what}: '{s}' is not a finite number")))
}

/// Reads a trajectory written by [`write_trajectory`] on the given grid.
pub fn read_trajectory<R: Read>(mut input: R, grid: &Grid, dim: usize) -> Result<TrajectoryPair> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;
    let y_line = text
        .lines()
        .find_map(|l| {
            l.trim()
                .strip_prefix('#')
                .map(str::trim)
                .and_then(|l| l.strip_prefix("y"))
        })
        .and_then(|l| l.trim().strip_prefix('='))
        .ok_or_else(|| Error::Input("trajectory: missing '# y = ...' line".into()))?;
    let y = y_line
        .split(',')
        .map(|s| parse_number(s, "trajectory y"))
        .collect::<Result<Vec<_>>>()?;
    if y.len() != dim {
        return Err(Error::Input(format!(
            "trajectory: y has {} entries, expected {dim}",
            y.len()
        )));
    }

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let mut expected = vec!["t".to_string()];
    expected.extend((1..=dim).map(|i| format!("u_{i}")));
    if header != expected {
        return Err(Error::Input(format!(
            "trajectory: header {:?}, expected {:?}",
            header.join(","),
            expected.join(",")
        )));
    }
    let mut values = Vec::with_capacity(grid.n_nodes() * dim);
    let mut prev = f64::NEG_INFINITY;
    let tol = 1e-9 * (grid.b() - grid.a());
    let mut rows = 0;
    for rec in reader.records() {
        let rec = rec?;
        let t = parse_number(&rec[0], "trajectory t")?;
        if t <= prev {
            return Err(Error::Input(format!("trajectory: t = {t} is not increasing")));
        }
        prev = t;
        if rows < grid.n_nodes() && (t - grid.node(rows)).abs() > tol {
            return Err(Error::GridMismatch(format!(
                "trajectory row {rows} has t = {t}, grid node is {}",
                grid.node(rows)
            )));
        }
        for i in 1..=dim {
            values.push(parse_number(&rec[i], "trajectory u")?);
        }
        rows += 1;
    }
    if rows != grid.n_nodes() {
        return Err(Error::GridMismatch(format!(
            "trajectory has {rows} rows, grid has {} nodes",
            grid.n_nodes()
        )));
    }
    TrajectoryPair::new(GridFn::new(*grid, dim, values)?, y)
}

pub fn read_trajectory_file(path: &Path, grid: &Grid, dim: usize) -> Result<TrajectoryPair> {
    let f = std::fs::File::open(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))?;
    read_trajectory(f, grid, dim)
}
