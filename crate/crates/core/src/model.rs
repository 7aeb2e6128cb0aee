//! Problem definition: orders, mesh, Mayer cost, Lagrangian and the mixed
//! endpoint constraint `g(x(a), x(b)) ∈ S`.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{Expr, Var};
use crate::frac_ops::reconstruct_trajectory;
use crate::grid::{Grid, GridFn};

/// Closed convex target set of the endpoint constraint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ConvexSet {
    WholeSpace {
        dim: usize,
    },
    Singleton {
        point: Vec<f64>,
    },
    /// Componentwise bounds; `null` in JSON stands for an infinite bound.
    Box {
        #[serde(with = "lower_bounds")]
        lower: Vec<f64>,
        #[serde(with = "upper_bounds")]
        upper: Vec<f64>,
    },
    Ball {
        center: Vec<f64>,
        radius: f64,
    },
    Product {
        parts: Vec<ConvexSet>,
    },
}

macro_rules! bounds_serde {
    ($name:ident, $inf:expr) => {
        mod $name {
            use serde::{Deserialize, Deserializer, Serializer};

            pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
                s.collect_seq(v.iter().map(|x| x.is_finite().then_some(*x)))
            }

            pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
                let raw: Vec<Option<f64>> = Vec::deserialize(d)?;
                Ok(raw.into_iter().map(|x| x.unwrap_or($inf)).collect())
            }
        }
    };
}

bounds_serde!(lower_bounds, f64::NEG_INFINITY);
bounds_serde!(upper_bounds, f64::INFINITY);

impl ConvexSet {
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::WholeSpace { dim } => *dim,
            ConvexSet::Singleton { point } => point.len(),
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Product { parts } => parts.iter().map(ConvexSet::dim).sum(),
        }
    }

    fn collect_violations(&self, path: &str, out: &mut Vec<Violation>) {
        let mut push = |m: String| out.push(Violation::new(path, m));
        match self {
            ConvexSet::WholeSpace { dim } => {
                if *dim == 0 {
                    push("whole space of dimension 0".into());
                }
            }
            ConvexSet::Singleton { point } => {
                if point.is_empty() || point.iter().any(|v| !v.is_finite()) {
                    push("singleton point must be non-empty and finite".into());
                }
            }
            ConvexSet::Box { lower, upper } => {
                if lower.is_empty() || lower.len() != upper.len() {
                    push(format!("box bounds have lengths {} and {}", lower.len(), upper.len()));
                }
                for (i, (l, u)) in lower.iter().zip(upper).enumerate() {
                    if l.is_nan() || u.is_nan() || l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                        push(format!("box component {i}: lower {l} > upper {u}"));
                    }
                }
            }
            ConvexSet::Ball { center, radius } => {
                if center.is_empty() || center.iter().any(|v| !v.is_finite()) {
                    push("ball center must be non-empty and finite".into());
                }
                if !(*radius >= 0.0 && radius.is_finite()) {
                    push(format!("ball radius {radius} must be finite and non-negative"));
                }
            }
            ConvexSet::Product { parts } => {
                if parts.is_empty() {
                    push("product of no sets".into());
                }
                for (i, p) in parts.iter().enumerate() {
                    p.collect_violations(&format!("{path}.parts[{i}]"), out);
                }
            }
        }
    }
}

/// One failed invariant, located by a dotted path.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

impl Violation {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            Err(Error::Validation(self.violations))
        }
    }
}

/// `g(xa, xb) ∈ S`, with `g` given componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub g: Vec<Expr>,
    pub set: ConvexSet,
}

/// The usual endpoint situations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ConstraintKind {
    Free,
    FixedInitial { xa: Vec<f64> },
    FixedBoth { xa: Vec<f64>, xb: Vec<f64> },
    Periodic,
}

fn identity_map(n: usize) -> Vec<Expr> {
    (0..n)
        .map(|i| Expr::Var(Var::Xa(i)))
        .chain((0..n).map(|i| Expr::Var(Var::Xb(i))))
        .collect()
}

fn check_len(v: &[f64], n: usize) -> Result<()> {
    if v.len() == n {
        Ok(())
    } else {
        Err(Error::Dimension {
            expected: n,
            got: v.len(),
        })
    }
}

/// `(g, S)` for a standard endpoint situation in dimension `n`.
pub fn standard_constraint(kind: &ConstraintKind, n: usize) -> Result<Constraint> {
    Ok(match kind {
        ConstraintKind::Free => Constraint {
            g: identity_map(n),
            set: ConvexSet::WholeSpace { dim: 2 * n },
        },
        ConstraintKind::FixedInitial { xa } => {
            check_len(xa, n)?;
            Constraint {
                g: identity_map(n),
                set: ConvexSet::Product {
                    parts: vec![
                        ConvexSet::Singleton { point: xa.clone() },
                        ConvexSet::WholeSpace { dim: n },
                    ],
                },
            }
        }
        ConstraintKind::FixedBoth { xa, xb } => {
            check_len(xa, n)?;
            check_len(xb, n)?;
            Constraint {
                g: identity_map(n),
                set: ConvexSet::Singleton {
                    point: xa.iter().chain(xb).copied().collect(),
                },
            }
        }
        ConstraintKind::Periodic => Constraint {
            g: (0..n)
                .map(|i| Expr::Sub(Box::new(Expr::Var(Var::Xb(i))), Box::new(Expr::Var(Var::Xa(i)))))
                .collect(),
            set: ConvexSet::Singleton { point: vec![0.0; n] },
        },
    })
}

/// Symbolic partial derivatives of the problem data, built once.
#[derive(Debug, Clone)]
pub(crate) struct Partials {
    pub l_x: Vec<Expr>,
    pub l_u: Vec<Expr>,
    /// `[i][j] = ∂²L/∂x_i∂x_j`
    pub l_xx: Vec<Vec<Expr>>,
    /// `[i][j] = ∂²L/∂x_i∂u_j`
    pub l_xu: Vec<Vec<Expr>>,
    pub l_uu: Vec<Vec<Expr>>,
    pub phi_a: Vec<Expr>,
    pub phi_b: Vec<Expr>,
    pub phi_aa: Vec<Vec<Expr>>,
    pub phi_ab: Vec<Vec<Expr>>,
    pub phi_bb: Vec<Vec<Expr>>,
    /// `[c][i] = ∂g_c/∂xa_i`
    pub g_a: Vec<Vec<Expr>>,
    pub g_b: Vec<Vec<Expr>>,
}

impl Partials {
    fn build(spec: &ProblemSpec) -> Self {
        let n = spec.dim;
        let grad = |e: &Expr, v: fn(usize) -> Var| (0..n).map(|i| e.differentiate(v(i))).collect::<Vec<_>>();
        let hess = |first: &[Expr], v: fn(usize) -> Var| first.iter().map(|d| grad(d, v)).collect::<Vec<_>>();
        let l_x = grad(&spec.lagrangian, Var::X);
        let l_u = grad(&spec.lagrangian, Var::U);
        let phi_a = grad(&spec.phi, Var::Xa);
        let phi_b = grad(&spec.phi, Var::Xb);
        let (g_a, g_b) = match &spec.constraint {
            Some(c) => (
                c.g.iter().map(|g| grad(g, Var::Xa)).collect(),
                c.g.iter().map(|g| grad(g, Var::Xb)).collect(),
            ),
            None => (Vec::new(), Vec::new()),
        };
        Self {
            l_xx: hess(&l_x, Var::X),
            l_xu: hess(&l_x, Var::U),
            l_uu: hess(&l_u, Var::U),
            phi_aa: hess(&phi_a, Var::Xa),
            phi_ab: hess(&phi_a, Var::Xb),
            phi_bb: hess(&phi_b, Var::Xb),
            l_x,
            l_u,
            phi_a,
            phi_b,
            g_a,
            g_b,
        }
    }
}

/// A fractional Bolza problem on a fixed mesh.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    alpha: f64,
    beta: f64,
    grid: Grid,
    dim: usize,
    phi: Expr,
    lagrangian: Expr,
    constraint: Option<Constraint>,
    partials: OnceLock<Partials>,
}

impl ProblemSpec {
    /// Assembles a problem without checking it; see [`validate`].
    pub fn new(
        alpha: f64,
        beta: f64,
        grid: Grid,
        dim: usize,
        phi: Expr,
        lagrangian: Expr,
        constraint: Option<Constraint>,
    ) -> Self {
        Self {
            alpha,
            beta,
            grid,
            dim,
            phi,
            lagrangian,
            constraint,
            partials: OnceLock::new(),
        }
    }

    /// Parses expression sources and validates the result.
    pub fn from_sources(
        alpha: f64,
        beta: f64,
        grid: Grid,
        dim: usize,
        phi: &str,
        lagrangian: &str,
        constraint: Option<Constraint>,
    ) -> Result<Self> {
        let spec = Self::new(
            alpha,
            beta,
            grid,
            dim,
            Expr::parse(phi, dim)?,
            Expr::parse(lagrangian, dim)?,
            constraint,
        );
        validate(&spec).into_result()?;
        Ok(spec)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn phi(&self) -> &Expr {
        &self.phi
    }

    pub fn lagrangian(&self) -> &Expr {
        &self.lagrangian
    }

    pub fn constraint(&self) -> Option<&Constraint> {
        self.constraint.as_ref()
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..self.clone() }
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        Self { beta, ..self.clone() }
    }

    pub fn with_grid(&self, grid: Grid) -> Self {
        Self { grid, ..self.clone() }
    }

    pub fn with_constraint(&self, constraint: Option<Constraint>) -> Self {
        Self {
            constraint,
            partials: OnceLock::new(),
            ..self.clone()
        }
    }

    pub(crate) fn partials(&self) -> &Partials {
        self.partials.get_or_init(|| Partials::build(self))
    }
}

fn check_vars(e: &Expr, path: &str, dim: usize, allowed: fn(Var) -> bool, out: &mut Vec<Violation>) {
    for v in e.variables() {
        let idx = match v {
            Var::T => None,
            Var::X(i) | Var::U(i) | Var::Xa(i) | Var::Xb(i) => Some(i),
        };
        if !allowed(v) {
            out.push(Violation::new(path, format!("variable {v} is not allowed here")));
        } else if idx.is_some_and(|i| i >= dim) {
            out.push(Violation::new(path, format!("variable {v} exceeds dimension {dim}")));
        }
    }
}

/// Checks every invariant of a problem and lists all violations.
pub fn validate(spec: &ProblemSpec) -> ValidationReport {
    let mut out = Vec::new();
    if !(spec.alpha > 0.0 && spec.alpha <= 1.0) {
        out.push(Violation::new("alpha", "alpha out of (0,1]"));
    }
    if !(spec.beta > 0.0 && spec.beta.is_finite()) {
        out.push(Violation::new("beta", "beta must be positive"));
    }
    if spec.dim == 0 {
        out.push(Violation::new("dim", "dimension must be positive"));
    }
    let endpoint = |v: Var| matches!(v, Var::Xa(_) | Var::Xb(_));
    let running = |v: Var| matches!(v, Var::T | Var::X(_) | Var::U(_));
    check_vars(&spec.phi, "phi", spec.dim, endpoint, &mut out);
    check_vars(&spec.lagrangian, "lagrangian", spec.dim, running, &mut out);
    if let Some(c) = &spec.constraint {
        if c.g.is_empty() {
            out.push(Violation::new("constraint.g", "constraint map has no components"));
        }
        for (i, g) in c.g.iter().enumerate() {
            check_vars(g, &format!("constraint.g[{i}]"), spec.dim, endpoint, &mut out);
        }
        c.set.collect_violations("constraint.set", &mut out);
        if c.set.dim() != c.g.len() {
            out.push(Violation::new(
                "constraint.set",
                format!(
                    "set dimension {} does not match {} map components",
                    c.set.dim(),
                    c.g.len()
                ),
            ));
        }
    }
    ValidationReport { violations: out }
}

/// A trajectory stored as its Caputo derivative `u` and initial value `y`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPair {
    pub u: GridFn,
    pub y: Vec<f64>,
    /// Optional bound `‖u(t)‖ ≤ R`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
}

impl TrajectoryPair {
    pub fn new(u: GridFn, y: Vec<f64>) -> Result<Self> {
        if u.dim() != y.len() {
            return Err(Error::Dimension {
                expected: u.dim(),
                got: y.len(),
            });
        }
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("initial value must be finite".into()));
        }
        Ok(Self { u, y, radius: None })
    }

    pub fn zero(grid: Grid, dim: usize) -> Self {
        Self {
            u: GridFn::zeros(grid, dim),
            y: vec![0.0; dim],
            radius: None,
        }
    }

    pub fn with_radius(mut self, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::Domain(format!("radius {radius} must be positive")));
        }
        if self.u.sup_norm() > radius {
            return Err(Error::Domain(format!(
                "control norm {} exceeds radius {radius}",
                self.u.sup_norm()
            )));
        }
        self.radius = Some(radius);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.y.len()
    }

    pub fn grid(&self) -> &Grid {
        self.u.grid()
    }

    /// `x = y + I^α[u]` at every node.
    pub fn state(&self, alpha: f64) -> Result<GridFn> {
        reconstruct_trajectory(&self.u, &self.y, alpha)
    }

    pub(crate) fn check_against(&self, spec: &ProblemSpec) -> Result<()> {
        spec.grid.check_same(self.grid())?;
        if self.dim() != spec.dim {
            return Err(Error::Dimension {
                expected: spec.dim,
                got: self.dim(),
            });
        }
        Ok(())
    }
}
