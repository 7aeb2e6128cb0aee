use super::{Expr, ExprError, Func, Var};

/// Variable bindings. Slices that are too short (or empty) leave the
/// corresponding variables unbound.
#[derive(Debug, Clone, Copy, Default)]
pub struct Env<'a> {
    pub t: Option<f64>,
    pub x: &'a [f64],
    pub u: &'a [f64],
    pub xa: &'a [f64],
    pub xb: &'a [f64],
}

impl<'a> Env<'a> {
    /// Bindings for a Lagrangian `L(x, u, t)`.
    pub fn running(x: &'a [f64], u: &'a [f64], t: f64) -> Self {
        Self {
            t: Some(t),
            x,
            u,
            ..Self::default()
        }
    }

    /// Bindings for endpoint maps `φ(xa, xb)`, `g(xa, xb)`.
    pub fn endpoints(xa: &'a [f64], xb: &'a [f64]) -> Self {
        Self {
            xa,
            xb,
            ..Self::default()
        }
    }

    fn lookup(&self, v: Var) -> Result<f64, ExprError> {
        let found = match v {
            Var::T => self.t,
            Var::X(i) => self.x.get(i).copied(),
            Var::U(i) => self.u.get(i).copied(),
            Var::Xa(i) => self.xa.get(i).copied(),
            Var::Xb(i) => self.xb.get(i).copied(),
        };
        found.ok_or(ExprError::Unbound(v))
    }
}

pub(super) fn eval(e: &Expr, env: &Env<'_>) -> Result<f64, ExprError> {
    Ok(match e {
        Expr::Const(c) => *c,
        Expr::Var(v) => env.lookup(*v)?,
        Expr::Neg(a) => -eval(a, env)?,
        Expr::Add(a, b) => eval(a, env)? + eval(b, env)?,
        Expr::Sub(a, b) => eval(a, env)? - eval(b, env)?,
        Expr::Mul(a, b) => eval(a, env)? * eval(b, env)?,
        Expr::Div(a, b) => {
            let num = eval(a, env)?;
            let den = eval(b, env)?;
            if den == 0.0 {
                return Err(ExprError::DivisionByZero);
            }
            num / den
        }
        Expr::Pow(a, b) => {
            let base = eval(a, env)?;
            match b.as_const() {
                Some(k) if k.fract() == 0.0 && k.abs() <= i32::MAX as f64 => {
                    if base == 0.0 && k < 0.0 {
                        return Err(ExprError::DivisionByZero);
                    }
                    base.powi(k as i32)
                }
                _ => {
                    let exp = eval(b, env)?;
                    if base < 0.0 && exp.fract() != 0.0 {
                        return Err(ExprError::NegativeArgument { func: "pow", arg: base });
                    }
                    base.powf(exp)
                }
            }
        }
        Expr::Call(f, a) => {
            let x = eval(a, env)?;
            match f {
                Func::Sin => x.sin(),
                Func::Cos => x.cos(),
                Func::Exp => x.exp(),
                Func::Log => {
                    if x < 0.0 {
                        return Err(ExprError::NegativeArgument { func: "log", arg: x });
                    }
                    x.ln()
                }
                Func::Sqrt => {
                    if x < 0.0 {
                        return Err(ExprError::NegativeArgument { func: "sqrt", arg: x });
                    }
                    x.sqrt()
                }
                Func::Cosh => x.cosh(),
                Func::Sinh => x.sinh(),
                Func::Abs => x.abs(),
                Func::Sign => {
                    if x > 0.0 {
                        1.0
                    } else if x < 0.0 {
                        -1.0
                    } else {
                        0.0
                    }
                }
            }
        }
    })
}
