//! Test-only oracles, written independently of the library's derivative and
//! integration code.
#![allow(dead_code)]

use conjugen::{c64, Backend, Complex, HoloExpr};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform in the square `[-r, r]²`.
pub fn random_complex(rng: &mut ChaCha8Rng, r: f64) -> Complex {
    c64(rng.gen_range(-r..r), rng.gen_range(-r..r))
}

pub fn random_phi(rng: &mut ChaCha8Rng, k: usize, r: f64) -> Vec<Complex> {
    (0..k).map(|_| random_complex(rng, r)).collect()
}

pub fn random_point(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Central difference of a holomorphic function along each `φ_j`,
/// stepping along the real axis.
pub fn fd_grad(f: impl Fn(&[Complex]) -> Complex, phi: &[Complex], step: f64) -> Vec<Complex> {
    (0..phi.len())
        .map(|j| {
            let mut p = phi.to_vec();
            p[j] = phi[j] + step;
            let up = f(&p);
            p[j] = phi[j] - step;
            let down = f(&p);
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// Central difference of a vector-valued holomorphic map, `jac[i][j] = ∂_j v_i`.
pub fn fd_jacobian(f: impl Fn(&[Complex]) -> Vec<Complex>, phi: &[Complex], step: f64) -> Vec<Vec<Complex>> {
    let cols: Vec<Vec<Complex>> = (0..phi.len())
        .map(|j| {
            let mut p = phi.to_vec();
            p[j] = phi[j] + step;
            let up = f(&p);
            p[j] = phi[j] - step;
            let down = f(&p);
            up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * step)).collect()
        })
        .collect();
    (0..cols[0].len()).map(|i| cols.iter().map(|c| c[i]).collect()).collect()
}

/// The null gradient `∇h(φ)`, transcribed directly from its defining formulas.
pub fn null_gradient(backend: Backend, p: &[Complex]) -> Vec<Complex> {
    let i = c64(0.0, 1.0);
    match backend {
        Backend::GeneralQuadratic { n } => {
            let last = p[n - 2];
            let s: Complex = p[..n - 2].iter().map(|z| z * z).sum();
            let mut out = vec![s - last * last, i * (s + last * last)];
            for k in 3..=n {
                out.push(2.0 * p[k - 3] * last);
            }
            out
        }
        Backend::Trilinear5 => {
            let (p1, p2, p3, p4, p5, p6) = (p[0], p[1], p[2], p[3], p[4], p[5]);
            vec![
                i * (p1 * p2 + p3 * p4) * p5 - 0.5 * (p1 * p1 + p2 * p2 - p3 * p3 - p4 * p4) * p6,
                i * (p2 * p4 - p1 * p3) * p5 + (p2 * p3 - p1 * p4) * p6,
                (p3 * p4 - p1 * p2) * p5 - 0.5 * i * (p1 * p1 + p2 * p2 + p3 * p3 + p4 * p4) * p6,
                (p1 * p3 + p2 * p4) * p5,
                (p1 * p3 + p2 * p4) * p6,
            ]
        }
    }
}

/// `X_i = c⁻¹ ∂/∂φ_i Σ_k x_k h_k(φ)`, the multiplier `c` being 2 for the
/// quadratic parametrization and 1 for the trilinear one.
pub fn potential_factor(backend: Backend) -> f64 {
    match backend {
        Backend::GeneralQuadratic { .. } => 2.0,
        Backend::Trilinear5 => 1.0,
    }
}

/// Closed-form potential on the solution branch: `h = Σ x_k h_k(φ) − c F(φ)`.
/// Its `x`-gradient at `φ(x)` is `∇h(φ(x))` because the φ-derivative vanishes
/// exactly when `∇F = X`.
pub fn exact_potential(f: &HoloExpr, backend: Backend, phi: &[Complex], x: &[f64]) -> Complex {
    let lin: Complex = null_gradient(backend, phi).iter().zip(x).map(|(h, xk)| h * xk).sum();
    lin - potential_factor(backend) * f.value(phi).unwrap()
}

pub fn max_abs(v: &[Complex]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Least-squares slope of `log e` against `log h`.
pub fn fitted_order(spacings: &[f64], errors: &[f64]) -> f64 {
    let xs: Vec<f64> = spacings.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| e.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let num: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let den: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    num / den
}
