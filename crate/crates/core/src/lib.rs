//! Numerical toolkit for fractional Bolza problems: a Caputo derivative of
//! order `0 < α ≤ 1` inside a Riemann-Liouville integral cost of order
//! `β > 0`, with mixed endpoint constraints `g(x(a), x(b)) ∈ S`.
//!
//! Trajectories are parametrized as `x = y + I^α[u]` on a uniform mesh.
//! The crate evaluates the cost and its sensitivities, computes the
//! residuals of the first and second order necessary conditions, and
//! minimizes the discretized functional by projected gradient descent
//! with a quadratic penalty on the endpoint constraint.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conditions;
pub mod convex;
pub mod error;
pub mod expr;
pub mod frac_ops;
pub mod functional;
pub mod grid;
pub mod model;
pub mod solver;

pub mod cli;

pub use error::{Error, Result};
pub use grid::{Grid, GridFn};
pub use model::{Constraint, ConstraintKind, ConvexSet, ProblemSpec, TrajectoryPair};
