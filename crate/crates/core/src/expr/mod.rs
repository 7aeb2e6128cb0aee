//! Arithmetic expressions for Mayer costs, Lagrangians and constraint maps.
//!
//! Variables are `t`, `x1..xn`, `u1..un` (state and Caputo derivative at
//! time `t`) and `xa1..xan`, `xb1..xbn` (endpoint values). Derivatives are
//! taken symbolically on the tree; only constants are folded.

mod diff;
mod eval;
mod parse;

use std::fmt;

use thiserror::Error;

pub use eval::Env;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },

    #[error("variable '{name}' at offset {offset} exceeds dimension {dim}")]
    IndexOutOfRange { offset: usize, name: String, dim: usize },

    #[error("unbound variable {0}")]
    Unbound(Var),

    #[error("division by zero")]
    DivisionByZero,

    #[error("{func} of negative argument {arg}")]
    NegativeArgument { func: &'static str, arg: f64 },

    #[error("non-finite result")]
    NonFinite,
}

/// A variable; indices are zero-based internally and printed one-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    T,
    X(usize),
    U(usize),
    Xa(usize),
    Xb(usize),
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Var::T => write!(f, "t"),
            Var::X(i) => write!(f, "x{}", i + 1),
            Var::U(i) => write!(f, "u{}", i + 1),
            Var::Xa(i) => write!(f, "xa{}", i + 1),
            Var::Xb(i) => write!(f, "xb{}", i + 1),
        }
    }
}

impl std::str::FromStr for Var {
    type Err = ExprError;

    /// Parses a variable name without a dimension bound.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match parse::classify_identifier(s) {
            Some(parse::Ident::Var(v)) => Ok(v),
            _ => Err(ExprError::UnknownIdentifier {
                offset: 0,
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Cosh,
    Sinh,
    Abs,
    /// Derivative of `abs`; `sign(0) = 0`.
    Sign,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Cosh => "cosh",
            Func::Sinh => "sinh",
            Func::Abs => "abs",
            Func::Sign => "sign",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "cosh" => Func::Cosh,
            "sinh" => Func::Sinh,
            "abs" => Func::Abs,
            "sign" => Func::Sign,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

impl Expr {
    /// Parses `source` with variable indices bounded by `dim`.
    pub fn parse(source: &str, dim: usize) -> Result<Expr, ExprError> {
        parse::parse(source, dim)
    }

    /// Exact partial derivative with respect to `var`.
    pub fn differentiate(&self, var: Var) -> Expr {
        diff::differentiate(self, var)
    }

    pub fn evaluate(&self, env: &Env<'_>) -> Result<f64, ExprError> {
        let v = eval::eval(self, env)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    /// Every variable occurring in the tree.
    pub fn variables(&self) -> Vec<Var> {
        let mut out = Vec::new();
        self.collect_vars(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_vars(&self, out: &mut Vec<Var>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => out.push(*v),
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    pub fn as_const(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesised; reparses to an equivalent tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) if *c < 0.0 => write!(f, "(-{})", -c),
            Expr::Const(c) => write!(f, "{c}"),
            Expr::Var(v) => write!(f, "{v}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

#[cfg(test)]
mod tests;
