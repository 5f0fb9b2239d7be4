mod common;

use conjugen::solver::newton_from;
use conjugen::{
    c64, continue_over_grid, linear_f_oracle, newton_solve, Backend, Complex, GridSpec, HoloExpr, RealPoint,
    SolveConfig,
};
use proptest::prelude::*;

fn linear_source(a: &[Complex]) -> String {
    a.iter()
        .enumerate()
        .map(|(j, c)| format!("({:?} + {:?}*i)*phi{}", c.re, c.im, j + 1))
        .collect::<Vec<_>>()
        .join(" + ")
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn newton_agrees_with_the_linear_oracle(
        n in 3usize..=6,
        seed in any::<u64>(),
    ) {
        let backend = Backend::general(n).unwrap();
        let mut rng = common::rng(seed);
        let a = common::random_phi(&mut rng, backend.arity(), 2.0);
        let point = RealPoint::new(common::random_point(&mut rng, n, 0.5, 2.5));
        let exact = linear_f_oracle(&a, backend, &point);
        prop_assume!(exact.is_ok());
        let exact = exact.unwrap();
        let f = HoloExpr::parse(&linear_source(&a), backend.arity()).unwrap();
        let sol = newton_solve(&f, backend, &point, &SolveConfig::default()).unwrap();
        prop_assert!(sol.iterations <= 2, "{} iterations", sol.iterations);
        let scale = 1.0f64.max(exact.max_norm());
        for (p, q) in sol.phi.components().iter().zip(exact.components()) {
            prop_assert!((p - q).norm() <= 1e-10 * scale);
        }
    }

    /// For even `F` and the quadratic backend the system is odd in φ, so `−φ`
    /// solves whenever `φ` does, with the same `∇h`.
    #[test]
    fn even_generating_functions_have_mirrored_branches(seed in any::<u64>()) {
        let backend = Backend::general(3).unwrap();
        let f = HoloExpr::parse("phi1^4 + phi2^2 - phi1^2*phi2^2", 2).unwrap();
        let mut rng = common::rng(seed);
        let point = RealPoint::new(common::random_point(&mut rng, 3, 1.0, 2.0));
        let start = common::random_phi(&mut rng, 2, 1.5);
        let neg: Vec<Complex> = start.iter().map(|z| -z).collect();
        let cfg = SolveConfig::default();
        let (Ok(a), Ok(b)) = (newton_from(&f, backend, &point, &start, &cfg), newton_from(&f, backend, &point, &neg, &cfg)) else {
            return Err(TestCaseError::reject("no convergence"));
        };
        for (p, q) in a.phi.components().iter().zip(b.phi.components()) {
            prop_assert!((p + q).norm() <= 1e-12 * (1.0 + p.norm()));
        }
        let (ga, gb) = (a.phi.gradient_from_phi(), b.phi.gradient_from_phi());
        for (p, q) in ga.iter().zip(&gb) {
            prop_assert!((p - q).norm() <= 1e-12 * (1.0 + p.norm()));
        }
    }
}

#[test]
fn continuation_reproduces_the_oracle_on_a_grid() {
    let backend = Backend::general(3).unwrap();
    let a = [c64(1.0, 0.0), c64(0.5, -0.25)];
    let f = HoloExpr::parse(&linear_source(&a), 2).unwrap();
    let grid = GridSpec::cube(3, 1.0, 2.0, 5).unwrap();
    let branch = continue_over_grid(&f, backend, &grid, &SolveConfig::default()).unwrap();
    assert_eq!(branch.failed_count(), 0);
    for c in 0..grid.len() {
        let exact = linear_f_oracle(&a, backend, &grid.point(c)).unwrap();
        for (p, q) in branch.phi(c).unwrap().iter().zip(exact.components()) {
            assert!((p - q).norm() <= 1e-10, "cell {c}");
        }
    }
}

fn max_neighbour_jump(f: &HoloExpr, backend: Backend, count: usize) -> f64 {
    let grid = GridSpec::cube(backend.dimension(), 1.0, 2.0, count).unwrap();
    let branch = continue_over_grid(f, backend, &grid, &SolveConfig { threads: 4, ..SolveConfig::default() }).unwrap();
    assert_eq!(branch.failed_count(), 0);
    let mut jump = 0.0f64;
    for c in 0..grid.len() {
        for axis in 0..grid.dim() {
            if let Some(nb) = grid.step(c, axis, true) {
                let d = branch.phi(c).unwrap().iter().zip(branch.phi(nb).unwrap()).map(|(p, q)| (p - q).norm());
                jump = jump.max(d.fold(0.0, f64::max));
            }
        }
    }
    jump
}

#[test]
fn continuation_follows_a_single_smooth_branch() {
    for (src, backend) in [
        ("phi1 + phi1^3/3 + phi2^2 + phi1*phi2", Backend::general(3).unwrap()),
        ("phi1 + phi2^2 + phi3*phi1", Backend::general(4).unwrap()),
        ("phi1 + phi5*phi6", Backend::Trilinear5),
    ] {
        let f = HoloExpr::parse(src, backend.arity()).unwrap();
        let (c1, c2) = if backend.dimension() == 5 { (3, 5) } else { (5, 9) };
        let (coarse, fine) = (max_neighbour_jump(&f, backend, c1), max_neighbour_jump(&f, backend, c2));
        assert!(fine > 0.0 && coarse / fine >= 1.5, "{src}: jumps {coarse} -> {fine}");
    }
}

/// `∂_a (∇h)_b` is symmetric along a solution branch, checked by solving at
/// nearby points.
#[test]
fn solved_gradient_field_is_curl_free() {
    let mut rng = common::rng(5);
    for (src, backend) in [
        ("phi1 + phi1^3/3 + phi2^2 + phi1*phi2", Backend::general(3).unwrap()),
        ("exp(phi1/4) + phi2*phi3 + phi3^2", Backend::general(4).unwrap()),
        ("phi1 + phi5*phi6", Backend::Trilinear5),
    ] {
        let f = HoloExpr::parse(src, backend.arity()).unwrap();
        let cfg = SolveConfig::default();
        // default seeding can land on a degenerate (∇h = 0) branch at isolated
        // points, so follow the branch found at the centre instead
        let centre = RealPoint::new(vec![1.5; backend.dimension()]);
        let anchor = newton_solve(&f, backend, &centre, &cfg).unwrap();
        for _ in 0..5 {
            let x = common::random_point(&mut rng, backend.dimension(), 1.3, 1.7);
            let base = newton_from(&f, backend, &RealPoint::new(x.clone()), anchor.phi.components(), &cfg).unwrap();
            assert!(common::max_abs(&base.phi.gradient_from_phi()) > 1e-3, "{src}: degenerate branch at {x:?}");
            let delta = 1e-5;
            let grad_at = |a: usize, s: f64| {
                let mut y = x.clone();
                y[a] += s;
                newton_from(&f, backend, &RealPoint::new(y), base.phi.components(), &cfg).unwrap().phi.gradient_from_phi()
            };
            let n = backend.dimension();
            let jac: Vec<Vec<Complex>> = (0..n)
                .map(|a| {
                    let (up, down) = (grad_at(a, delta), grad_at(a, -delta));
                    up.iter().zip(&down).map(|(u, d)| (u - d) / (2.0 * delta)).collect()
                })
                .collect();
            let scale = jac.iter().flatten().map(|z| z.norm()).fold(1.0, f64::max);
            for a in 0..n {
                for b in a + 1..n {
                    assert!((jac[a][b] - jac[b][a]).norm() <= 1e-6 * scale, "{src}: ({a},{b})");
                }
            }
        }
    }
}

#[test]
fn explicit_seed_is_used_once() {
    let backend = Backend::general(3).unwrap();
    let f = HoloExpr::parse("phi1^3/3 + phi2^2 + phi1*phi2", 2).unwrap();
    let point = RealPoint::new(vec![1.5, 1.2, 1.7]);
    let seed = vec![c64(0.3, -0.2), c64(0.1, 0.4)];
    let cfg = SolveConfig { seed_phi: Some(seed.clone()), ..SolveConfig::default() };
    let via_config = newton_solve(&f, backend, &point, &cfg);
    let direct = newton_from(&f, backend, &point, &seed, &SolveConfig::default());
    assert_eq!(via_config.map(|s| s.phi), direct.map(|s| s.phi));
}
