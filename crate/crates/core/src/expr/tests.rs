use proptest::prelude::*;

use super::*;

fn eval_at(src: &str, dim: usize, x: &[f64], u: &[f64], t: f64) -> Result<f64, ExprError> {
    Expr::parse(src, dim)?.evaluate(&Env::running(x, u, t))
}

#[test]
fn parse_and_evaluate_examples() {
    assert_eq!(eval_at("x1^2 + u1*t", 1, &[2.0], &[3.0], 0.5).unwrap(), 5.5);
    assert_eq!(eval_at("cosh(t)", 1, &[], &[], 0.0).unwrap(), 1.0);
    let e = Expr::parse("exp(1)", 1).unwrap();
    assert!((e.evaluate(&Env::default()).unwrap() - std::f64::consts::E).abs() < 1e-15);
    assert_eq!(eval_at("sqrt(x1)", 1, &[4.0], &[], 0.0).unwrap(), 2.0);
}

#[test]
fn precedence_and_associativity() {
    let v = |s: &str| eval_at(s, 1, &[3.0], &[], 0.0).unwrap();
    assert_eq!(v("2^3^2"), 512.0);
    assert_eq!(v("-x1^2"), -9.0);
    assert_eq!(v("2^-1"), 0.5);
    assert_eq!(v("8 / 4 / 2"), 1.0);
    assert_eq!(v("1 - 2 - 3"), -4.0);
    assert_eq!(v("1 + 2 * 3"), 7.0);
    assert_eq!(v("  ( 1+2 )*3 "), 9.0);
    assert_eq!(v("1.5e1 + .5"), 15.5);
}

#[test]
fn syntax_errors_carry_offsets() {
    assert_eq!(
        Expr::parse("x1 +", 1).unwrap_err(),
        ExprError::Syntax {
            offset: 4,
            message: "unexpected end of input".into()
        }
    );
    assert!(matches!(Expr::parse("", 1), Err(ExprError::Syntax { offset: 0, .. })));
    assert!(matches!(
        Expr::parse("(x1", 1),
        Err(ExprError::Syntax { offset: 3, .. })
    ));
    assert!(matches!(
        Expr::parse("x1 $ 2", 1),
        Err(ExprError::Syntax { offset: 3, .. })
    ));
    assert!(matches!(
        Expr::parse("x1 x1", 1),
        Err(ExprError::Syntax { offset: 3, .. })
    ));
}

#[test]
fn identifier_errors() {
    assert!(matches!(
        Expr::parse("y1 + 1", 1),
        Err(ExprError::UnknownIdentifier { offset: 0, .. })
    ));
    assert!(matches!(
        Expr::parse("1 + x2", 1),
        Err(ExprError::IndexOutOfRange { offset: 4, dim: 1, .. })
    ));
    assert!(Expr::parse("x0", 3).is_err());
    assert!(Expr::parse("xb3 + u2", 3).is_ok());
}

#[test]
fn evaluation_errors() {
    let env = Env::running(&[-1.0], &[], 1.0);
    let e = |s: &str| Expr::parse(s, 1).unwrap().evaluate(&env);
    assert_eq!(e("1/ (t - t)"), Err(ExprError::DivisionByZero));
    assert!(matches!(e("sqrt(x1)"), Err(ExprError::NegativeArgument { .. })));
    assert!(matches!(e("log(x1)"), Err(ExprError::NegativeArgument { .. })));
    assert!(matches!(e("x1^0.5"), Err(ExprError::NegativeArgument { .. })));
    assert_eq!(e("log(0)"), Err(ExprError::NonFinite));
    assert_eq!(e("u1"), Err(ExprError::Unbound(Var::U(0))));
    assert_eq!(e("x1^3"), Ok(-1.0));
}

#[test]
fn derivative_examples() {
    let d = |s: &str, v: &str| Expr::parse(s, 1).unwrap().differentiate(v.parse().unwrap());
    let e = d("x1^2", "x1");
    assert_eq!(e.evaluate(&Env::running(&[2.0], &[], 0.0)).unwrap(), 4.0);
    let l = "0.5*(x1^2 + u1^2)";
    assert_eq!(d(l, "u1").evaluate(&Env::running(&[7.0], &[3.0], 0.0)).unwrap(), 3.0);
    let second = d(l, "u1").differentiate(Var::U(0));
    assert_eq!(second, Expr::Const(1.0));
    assert_eq!(d("xb1", "xb1"), Expr::Const(1.0));
    assert_eq!(d("xb1", "xa1"), Expr::Const(0.0));
    // abs at zero uses sign(0) = 0.
    let a = d("abs(x1)", "x1");
    assert_eq!(a.evaluate(&Env::running(&[0.0], &[], 0.0)).unwrap(), 0.0);
    assert_eq!(a.evaluate(&Env::running(&[-2.0], &[], 0.0)).unwrap(), -1.0);
}

#[test]
fn variables_are_collected() {
    let e = Expr::parse("xa1*xb2 + t - t", 2).unwrap();
    assert_eq!(e.variables(), vec![Var::T, Var::Xa(0), Var::Xb(1)]);
}

const NAMES: [&str; 5] = ["t", "x1", "x2", "u1", "u2"];

/// Random expressions that stay smooth on `[-1, 1]^5`.
fn smooth_expr() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        (-3.0f64..3.0).prop_map(|c| format!("{c}")),
        (0usize..5).prop_map(|i| NAMES[i].to_string()),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} * {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} / (1.5 + cos({b})))")),
            (inner.clone(), 2u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("(1 + ({a})^2)^(0.5 * sin({b}))")),
            inner.clone().prop_map(|a| format!("-{a}")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(0.3 * sin({a}))")),
            inner.clone().prop_map(|a| format!("log(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("sqrt(1 + ({a})^2)")),
            inner.clone().prop_map(|a| format!("cosh(0.5 * sin({a}))")),
            inner.prop_map(|a| format!("sinh(0.5 * cos({a}))")),
        ]
    })
}

fn env_from(p: &[f64; 5]) -> (f64, [f64; 2], [f64; 2]) {
    (p[0], [p[1], p[2]], [p[3], p[4]])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn symbolic_derivative_matches_central_difference(
        src in smooth_expr(),
        p in prop::array::uniform5(-1.0f64..1.0),
        which in 0usize..5,
    ) {
        let e = Expr::parse(&src, 2).unwrap();
        let var: Var = NAMES[which].parse().unwrap();
        let de = e.differentiate(var);
        let (t, x, u) = env_from(&p);
        let eval_shift = |s: f64| {
            let mut q = p;
            q[which] += s;
            let (t, x, u) = env_from(&q);
            e.evaluate(&Env::running(&x, &u, t))
        };
        let (Ok(fp), Ok(fm)) = (eval_shift(1e-5), eval_shift(-1e-5)) else {
            return Ok(());
        };
        let exact = de.evaluate(&Env::running(&x, &u, t)).unwrap();
        let fd = (fp - fm) / 2e-5;
        prop_assert!((exact - fd).abs() <= 1e-5 * (1.0 + exact.abs()),
            "{src} d/d{}: {exact} vs {fd}", NAMES[which]);
    }

    #[test]
    fn print_then_parse_preserves_values(
        src in smooth_expr(),
        p in prop::array::uniform5(-1.0f64..1.0),
    ) {
        let e = Expr::parse(&src, 2).unwrap();
        let printed = e.to_string();
        let back = Expr::parse(&printed, 2).unwrap();
        let (t, x, u) = env_from(&p);
        let env = Env::running(&x, &u, t);
        prop_assert_eq!(e.evaluate(&env).ok(), back.evaluate(&env).ok());
        // Derivative trees print and reparse too (they may contain sign()).
        let d = e.differentiate(Var::X(0));
        let d_back = Expr::parse(&d.to_string(), 2).unwrap();
        prop_assert_eq!(d.evaluate(&env).ok(), d_back.evaluate(&env).ok());
    }
}
