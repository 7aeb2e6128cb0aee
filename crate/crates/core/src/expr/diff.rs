use super::{Expr, Func, Var};

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

fn fold(v: f64, otherwise: impl FnOnce() -> Expr) -> Expr {
    if v.is_finite() {
        Expr::Const(v)
    } else {
        otherwise()
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(x) => c(-x),
        Expr::Neg(inner) => *inner,
        a => Expr::Neg(Box::new(a)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => fold(x + y, || Expr::Add(Box::new(a), Box::new(b))),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => fold(x - y, || Expr::Sub(Box::new(a), Box::new(b))),
        (Some(0.0), _) => neg(b),
        (_, Some(0.0)) => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) => fold(x * y, || Expr::Mul(Box::new(a), Box::new(b))),
        (Some(0.0), _) | (_, Some(0.0)) => c(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (a.as_const(), b.as_const()) {
        (Some(x), Some(y)) if y != 0.0 => fold(x / y, || Expr::Div(Box::new(a), Box::new(b))),
        (Some(0.0), _) => c(0.0),
        (_, Some(1.0)) => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match b.as_const() {
        Some(1.0) => a,
        Some(0.0) => c(1.0),
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

pub(super) fn differentiate(e: &Expr, var: Var) -> Expr {
    let d = |x: &Expr| differentiate(x, var);
    match e {
        Expr::Const(_) => c(0.0),
        Expr::Var(v) => c(if *v == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(d(a)),
        Expr::Add(a, b) => add(d(a), d(b)),
        Expr::Sub(a, b) => sub(d(a), d(b)),
        Expr::Mul(a, b) => add(mul(d(a), (**b).clone()), mul((**a).clone(), d(b))),
        Expr::Div(a, b) => {
            // (a'b - ab') / b^2
            let num = sub(mul(d(a), (**b).clone()), mul((**a).clone(), d(b)));
            div(num, pow((**b).clone(), c(2.0)))
        }
        Expr::Pow(a, b) => {
            let da = d(a);
            let db = d(b);
            match b.as_const() {
                Some(k) => mul(mul(c(k), pow((**a).clone(), c(k - 1.0))), da),
                None => {
                    // a^b (b' log a + b a'/a)
                    let inner = add(
                        mul(db, call(Func::Log, (**a).clone())),
                        div(mul((**b).clone(), da), (**a).clone()),
                    );
                    mul(e.clone(), inner)
                }
            }
        }
        Expr::Call(f, a) => {
            let da = d(a);
            if da.as_const() == Some(0.0) {
                return c(0.0);
            }
            let a = (**a).clone();
            let outer = match f {
                Func::Sin => call(Func::Cos, a),
                Func::Cos => neg(call(Func::Sin, a)),
                Func::Exp => call(Func::Exp, a),
                Func::Log => div(c(1.0), a),
                Func::Sqrt => div(c(0.5), call(Func::Sqrt, a)),
                Func::Cosh => call(Func::Sinh, a),
                Func::Sinh => call(Func::Cosh, a),
                Func::Abs => call(Func::Sign, a),
                Func::Sign => c(0.0),
            };
            mul(outer, da)
        }
    }
}
