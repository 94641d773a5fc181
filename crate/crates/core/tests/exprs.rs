use proptest::prelude::*;
use scatmap::exprs::{parse, BinOp, Dual, Expr, ExprError, Func, Program, Scalar, Var, VarLayout};

const LAYOUT: VarLayout = VarLayout { n: 1, d: 2 };

fn leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (0u32..2000).prop_map(|k| Expr::Num(f64::from(k) / 8.0)),
        Just(Expr::Pi),
        Just(Expr::Var(Var::P(0))),
        Just(Expr::Var(Var::Q(0))),
        Just(Expr::Var(Var::Action(0))),
        Just(Expr::Var(Var::Action(1))),
        Just(Expr::Var(Var::Angle(1))),
        Just(Expr::Var(Var::Time)),
        Just(Expr::Var(Var::Eps)),
    ]
}

fn expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(5, 48, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (0usize..6, inner.clone()).prop_map(|(k, e)| Expr::Call(Func::ALL[k], Box::new(e))),
            (0usize..5, inner.clone(), inner).prop_map(|(k, a, b)| {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul, BinOp::Div, BinOp::Pow][k];
                Expr::Bin(op, Box::new(a), Box::new(b))
            }),
        ]
    })
}

/// Smooth expressions without division, roots or powers, so derivatives
/// exist everywhere.
fn smooth_expr() -> impl Strategy<Value = Expr> {
    leaf().prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
            (0usize..5, inner.clone()).prop_map(|(k, e)| {
                let f = [Func::Sin, Func::Cos, Func::Tanh, Func::Sech, Func::Sin][k];
                Expr::Call(f, Box::new(e))
            }),
            (0usize..3, inner.clone(), inner).prop_map(|(k, a, b)| {
                let op = [BinOp::Add, BinOp::Sub, BinOp::Mul][k];
                Expr::Bin(op, Box::new(a), Box::new(b))
            }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn printing_then_parsing_is_the_identity(e in expr()) {
        let text = e.to_string();
        let back = parse(&text, LAYOUT).unwrap();
        prop_assert_eq!(&back, &e, "{}", text);
    }

    #[test]
    fn forward_mode_matches_central_differences(
        e in smooth_expr(),
        x in proptest::collection::vec(-0.3f64..0.3, 8),
        slot in 0usize..8,
    ) {
        let prog = Program::compile(&e, LAYOUT);
        let dual = prog.partial(&x, slot).unwrap();
        prop_assert!((dual.v - prog.eval(&x).unwrap()).abs() <= 1e-12 * (1.0 + dual.v.abs()));
        let h = 1e-5;
        let mut xp = x.clone();
        let mut xm = x.clone();
        xp[slot] += h;
        xm[slot] -= h;
        let fd = (prog.eval(&xp).unwrap() - prog.eval(&xm).unwrap()) / (2.0 * h);
        prop_assert!((dual.d - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "{} vs {} for {}", dual.d, fd, e);
    }

    #[test]
    fn dual_chain_rule(x in -2.0f64..2.0) {
        // d/dx sin(tanh(x)^2) = cos(tanh^2) * 2 tanh * sech^2
        let u = Dual::var(x);
        let f = Scalar::sin(Scalar::powi(Scalar::tanh(u), 2));
        let th = x.tanh();
        let expected = (th * th).cos() * 2.0 * th * (1.0 - th * th);
        prop_assert!((f.d - expected).abs() < 1e-13);
        prop_assert!((f.v - (th * th).sin()).abs() < 1e-15);
    }
}

#[test]
fn bare_names_resolve_for_single_members() {
    let one = VarLayout::new(1, 1);
    let e = parse("I * theta + p - q", one).unwrap();
    let prog = Program::compile(&e, one);
    // Slots are p, q, I, theta, t, eps.
    let v = prog.eval(&[1.0, 2.0, 3.0, 4.0, 0.0, 0.0]).unwrap();
    assert_eq!(v, 3.0 * 4.0 + 1.0 - 2.0);
    assert!(matches!(
        parse("I", LAYOUT),
        Err(ExprError::UnknownIdentifier { .. })
    ));
}

#[test]
fn errors_carry_spans() {
    let cases = [
        ("cos(q", "unbalanced"),
        ("q $ 2", "character"),
        ("foo(q)", "identifier"),
        ("1 +", "end"),
        ("q3", "identifier"),
    ];
    for (src, needle) in cases {
        let err = parse(src, LAYOUT).unwrap_err();
        assert!(err.to_string().contains(needle), "{src}: {err}");
    }
    let err = parse("sin(q, p)", LAYOUT).unwrap_err();
    assert!(err.span().is_some(), "{err}");
}

#[test]
fn oversized_sources_are_rejected() {
    let src = "q+".repeat(40_000) + "q";
    assert!(matches!(
        parse(&src, LAYOUT),
        Err(ExprError::TooLarge { .. })
    ));
}

#[test]
fn non_finite_values_are_reported() {
    let one = VarLayout::new(1, 1);
    let prog = Program::compile(&parse("1 / (q - 1)", one).unwrap(), one);
    assert!(matches!(
        prog.eval(&[0.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
        Err(ExprError::NonFinite { .. })
    ));
    assert!(matches!(
        prog.eval(&[0.0; 3]),
        Err(ExprError::BindingLength { .. })
    ));
}
