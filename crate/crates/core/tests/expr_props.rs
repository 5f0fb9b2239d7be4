mod common;

use conjugen::expr::{Expr, Func};
use conjugen::{c64, Complex, HoloExpr};
use proptest::prelude::*;

const K: usize = 3;

/// Trees made only of node kinds the parser itself produces, with bounded growth.
fn arb_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0..K).prop_map(Expr::Var),
        (0u32..40).prop_map(|v| Expr::Const(c64(v as f64 / 8.0, 0.0))),
        Just(Expr::Const(c64(0.0, 1.0))),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            inner.clone().prop_map(|a| Expr::Neg(Box::new(a))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(Box::new(a), Box::new(b))),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(Box::new(a), Box::new(b))),
            (inner.clone(), 0i64..4).prop_map(|(a, n)| Expr::Pow(Box::new(a), n)),
            inner.clone().prop_map(|a| Expr::Call(Func::Sin, Box::new(a))),
            inner.clone().prop_map(|a| Expr::Call(Func::Cos, Box::new(a))),
            // keep exp arguments small so values stay moderate
            inner.prop_map(|a| Expr::Call(
                Func::Exp,
                Box::new(Expr::Mul(Box::new(Expr::Const(c64(0.25, 0.0))), Box::new(a)))
            )),
        ]
    })
}

fn arb_phi() -> impl Strategy<Value = Vec<Complex>> {
    prop::collection::vec((-0.8f64..0.8, -0.8f64..0.8).prop_map(|(a, b)| c64(a, b)), K)
}

/// Fourth-order central difference, independent of the dual machinery.
fn fd4(f: impl Fn(&[Complex]) -> Complex, phi: &[Complex], j: usize, h: f64) -> Complex {
    let at = |d: f64| {
        let mut p = phi.to_vec();
        p[j] += d;
        f(&p)
    };
    (at(-2.0 * h) - 8.0 * at(-h) + 8.0 * at(h) - at(2.0 * h)) / (12.0 * h)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn gradient_matches_finite_differences(ast in arb_expr(), phi in arb_phi()) {
        let f = HoloExpr::from_ast(ast, K).unwrap();
        let r = f.evaluate(&phi).unwrap();
        let value = |p: &[Complex]| f.value(p).unwrap();
        let scale = 1.0 + r.value.norm() + common::max_abs(&r.grad);
        for j in 0..K {
            let fd = fd4(value, &phi, j, 1e-3);
            prop_assert!((fd - r.grad[j]).norm() <= 1e-7 * scale, "j={j} ad={} fd={fd}", r.grad[j]);
        }
    }

    #[test]
    fn hessian_matches_finite_differences_of_gradient(ast in arb_expr(), phi in arb_phi()) {
        let f = HoloExpr::from_ast(ast, K).unwrap();
        let r = f.evaluate(&phi).unwrap();
        let mut scale = 1.0 + common::max_abs(&r.grad);
        for a in 0..K { for b in 0..K { scale = scale.max(r.hess[(a, b)].norm()); } }
        for b in 0..K {
            for a in 0..K {
                let ga = |p: &[Complex]| f.gradient(p).unwrap().1[a];
                let fd = fd4(ga, &phi, b, 1e-3);
                prop_assert!((fd - r.hess[(a, b)]).norm() <= 1e-7 * scale, "({a},{b}) ad={} fd={fd}", r.hess[(a, b)]);
            }
        }
    }

    #[test]
    fn hessian_is_symmetric_and_consistent(ast in arb_expr(), phi in arb_phi()) {
        let f = HoloExpr::from_ast(ast, K).unwrap();
        let r = f.evaluate(&phi).unwrap();
        let (v, g) = f.gradient(&phi).unwrap();
        prop_assert_eq!(v, r.value);
        for a in 0..K {
            prop_assert!((g[a] - r.grad[a]).norm() <= 1e-12 * (1.0 + g[a].norm()));
            for b in 0..K {
                prop_assert_eq!(r.hess[(a, b)], r.hess[(b, a)]);
            }
        }
    }

    #[test]
    fn printing_then_parsing_is_the_identity(ast in arb_expr()) {
        let printed = ast.to_string();
        let back = HoloExpr::parse(&printed, K).unwrap();
        prop_assert_eq!(back.ast(), &ast);
        prop_assert_eq!(back.ast().to_string(), printed);
    }
}

#[test]
fn hand_written_sources_reach_a_printing_fixpoint() {
    for src in ["phi1*phi2^3 - 2/phi3", "-phi1^-2 + exp(i*phi2)", "log(1 + phi1*phi1) - -phi3", "2^3*phi1 + (1+i)*phi2"] {
        let once = HoloExpr::parse(src, K).unwrap().ast().to_string();
        let twice = HoloExpr::parse(&once, K).unwrap().ast().to_string();
        assert_eq!(once, twice, "{src}");
    }
}
