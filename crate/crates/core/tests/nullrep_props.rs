mod common;

use conjugen::{c64, null_residual, Backend, Complex, PhiVector, RealPoint};
use proptest::prelude::*;

fn backends() -> Vec<Backend> {
    let mut v: Vec<Backend> = (3..=8).map(|n| Backend::general(n).unwrap()).collect();
    v.push(Backend::Trilinear5);
    v
}

fn arb_backend() -> impl Strategy<Value = Backend> {
    prop::sample::select(backends())
}

fn arb_complex(r: f64) -> impl Strategy<Value = Complex> {
    (-r..r, -r..r).prop_map(|(a, b)| c64(a, b))
}

fn arb_case() -> impl Strategy<Value = (Backend, Vec<Complex>, Vec<f64>)> {
    arb_backend().prop_flat_map(|b| {
        (
            Just(b),
            prop::collection::vec(arb_complex(2.0), b.arity()),
            prop::collection::vec(-3.0f64..3.0, b.dimension()),
        )
    })
}

#[test]
fn gradients_are_null_on_many_samples() {
    let mut rng = common::rng(11);
    for backend in backends() {
        for _ in 0..1000 {
            let phi = common::random_phi(&mut rng, backend.arity(), 3.0);
            let g = backend.gradient(&phi);
            let scale = common::max_abs(&g).powi(2);
            assert!(null_residual(&g).norm() <= 1e-12 * scale.max(f64::MIN_POSITIVE), "{backend}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gradient_matches_direct_transcription((backend, phi, _x) in arb_case()) {
        let lib = backend.gradient(&phi);
        let direct = common::null_gradient(backend, &phi);
        let scale = 1.0 + common::max_abs(&direct);
        for (a, b) in lib.iter().zip(&direct) {
            prop_assert!((a - b).norm() <= 1e-14 * scale);
        }
    }

    #[test]
    fn gradient_and_x_system_are_homogeneous((backend, phi, x) in arb_case(), lambda in arb_complex(2.0)) {
        prop_assume!(lambda.norm() > 0.1);
        let d = backend.degree();
        let scaled: Vec<Complex> = phi.iter().map(|p| lambda * p).collect();
        let (g0, g1) = (backend.gradient(&phi), backend.gradient(&scaled));
        let tol = 1e-12 * (1.0 + common::max_abs(&g1));
        for (a, b) in g0.iter().zip(&g1) {
            prop_assert!((a * lambda.powi(d) - b).norm() <= tol);
        }
        let (x0, x1) = (backend.x_system(&phi, &x), backend.x_system(&scaled, &x));
        let tol = 1e-12 * (1.0 + common::max_abs(&x1));
        for (a, b) in x0.iter().zip(&x1) {
            prop_assert!((a * lambda.powi(d - 1) - b).norm() <= tol);
        }
    }

    #[test]
    fn x_system_is_linear_in_the_point((backend, phi, x) in arb_case(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let y: Vec<f64> = x.iter().rev().map(|v| v * 0.5 + 1.0).collect();
        let comb: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (xs, ys, cs) = (backend.x_system(&phi, &x), backend.x_system(&phi, &y), backend.x_system(&phi, &comb));
        let tol = 1e-12 * (1.0 + common::max_abs(&cs) + common::max_abs(&xs) + common::max_abs(&ys));
        for j in 0..cs.len() {
            prop_assert!((a * xs[j] + b * ys[j] - cs[j]).norm() <= tol);
        }
    }

    #[test]
    fn x_jacobian_matches_finite_differences((backend, phi, x) in arb_case()) {
        let jac = backend.x_jacobian(&phi, &x);
        let fd = common::fd_jacobian(|p| backend.x_system(p, &x), &phi, 1e-5);
        let scale = 1.0 + jac.max_abs();
        for (i, row) in fd.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                prop_assert!((jac[(i, j)] - v).norm() <= 1e-8 * scale, "({i},{j})");
            }
        }
    }

    /// `X` is the φ-gradient of `Σ x_k h_k(φ)` up to the constant factor,
    /// which is what makes `h` integrable along solutions.
    #[test]
    fn x_system_is_a_potential_gradient((backend, phi, x) in arb_case()) {
        let pot = |p: &[Complex]| -> Complex {
            common::null_gradient(backend, p).iter().zip(&x).map(|(h, xk)| h * xk).sum()
        };
        let fd = common::fd_grad(pot, &phi, 1e-5);
        let xs = backend.x_system(&phi, &x);
        let c = common::potential_factor(backend);
        let scale = 1.0 + common::max_abs(&fd);
        for (a, b) in fd.iter().zip(&xs) {
            prop_assert!((a - c * b).norm() <= 1e-8 * scale);
        }
    }

    #[test]
    fn phi_vector_wraps_the_backend((backend, phi, x) in arb_case()) {
        let v = PhiVector::new(backend, phi.clone()).unwrap();
        let point = RealPoint::new(x.clone());
        prop_assert_eq!(v.gradient_from_phi(), backend.gradient(&phi));
        prop_assert_eq!(v.x_system(&point), backend.x_system(&phi, &x));
        prop_assert!(PhiVector::new(backend, phi[1..].to_vec()).is_err());
    }
}
