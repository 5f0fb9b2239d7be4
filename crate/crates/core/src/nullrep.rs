//! Null-vector parametrizations and their X-systems.
//!
//! Two backends:
//!
//! * [`Backend::GeneralQuadratic`] for any `n >= 3`, with `k = n - 1`
//!   components:
//!
//!   ```text
//!   h_1 = φ_1² + … + φ_{n-2}² − φ_{n-1}²
//!   h_2 = i(φ_1² + … + φ_{n-2}² + φ_{n-1}²)
//!   h_k = 2 φ_{k-2} φ_{n-1}                     3 <= k <= n
//!
//!   X_j     = φ_j (x_1 + i x_2) + φ_{n-1} x_{j+2}     j <= n-2
//!   X_{n-1} = −φ_{n-1}(x_1 − i x_2) + Σ_j φ_j x_{j+2}
//!   ```
//!
//! * [`Backend::Trilinear5`] for `n = 5` with six components, cubic in `φ`;
//!   coordinates are named `(x, y, z, t, u)` and the X-system
//!   `(X, Y, Z, T, U, W)` is quadratic in `φ`.
//!
//! In both cases `Σ h_k² = 0` identically, and the X-system is the gradient
//! in `φ` of `Σ x_k h_k` (halved for the quadratic backend), which is what
//! makes `d(Σ X_i dφ_i) = 0` equivalent to integrability of `Σ h_k dx_k`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::dual::{Dual, Scalar};
use crate::linalg::CMatrix;
use crate::{c64, Complex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NullRepError {
    #[error("n must be >= 3 (got {0})")]
    DimensionTooSmall(usize),
    #[error("{backend} expects {expected} components, got {actual}")]
    ComponentCount { backend: Backend, expected: usize, actual: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Backend {
    GeneralQuadratic { n: usize },
    Trilinear5,
}

impl std::fmt::Display for Backend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Backend::GeneralQuadratic { n } => write!(f, "general(n={n})"),
            Backend::Trilinear5 => f.write_str("trilinear5"),
        }
    }
}

impl Backend {
    pub fn general(n: usize) -> Result<Self, NullRepError> {
        if n < 3 {
            return Err(NullRepError::DimensionTooSmall(n));
        }
        Ok(Backend::GeneralQuadratic { n })
    }

    /// Number of real coordinates `n`.
    pub fn dimension(&self) -> usize {
        match *self {
            Backend::GeneralQuadratic { n } => n,
            Backend::Trilinear5 => 5,
        }
    }

    /// Number of complex components `k`.
    pub fn arity(&self) -> usize {
        match *self {
            Backend::GeneralQuadratic { n } => n - 1,
            Backend::Trilinear5 => 6,
        }
    }

    /// Polynomial degree of `∇h` in `φ`.
    pub fn degree(&self) -> i32 {
        match self {
            Backend::GeneralQuadratic { .. } => 2,
            Backend::Trilinear5 => 3,
        }
    }

    fn check(&self, phi: &[Complex], point: Option<&[f64]>) {
        assert_eq!(phi.len(), self.arity(), "{self}: phi has wrong length");
        if let Some(x) = point {
            assert_eq!(x.len(), self.dimension(), "{self}: point has wrong dimension");
        }
    }

    /// `∇h` as a function of `φ`. Panics if `phi.len() != arity()`.
    pub fn gradient(&self, phi: &[Complex]) -> Vec<Complex> {
        self.check(phi, None);
        match self {
            Backend::GeneralQuadratic { n } => general_gradient(*n, phi),
            Backend::Trilinear5 => trilinear_gradient(phi),
        }
    }

    /// The X-system at `(φ, x)`. Panics on dimension mismatch.
    pub fn x_system(&self, phi: &[Complex], point: &[f64]) -> Vec<Complex> {
        self.check(phi, Some(point));
        match self {
            Backend::GeneralQuadratic { n } => general_x(*n, phi, point),
            Backend::Trilinear5 => trilinear_x(phi, point),
        }
    }

    /// `∂X_i/∂φ_j` at fixed `x`.
    pub fn x_jacobian(&self, phi: &[Complex], point: &[f64]) -> CMatrix {
        self.check(phi, Some(point));
        match self {
            Backend::GeneralQuadratic { n } => general_x_jacobian(*n, point),
            Backend::Trilinear5 => {
                // X is quadratic in φ; one dual sweep per column is exact.
                let mut jac = CMatrix::zeros(6);
                let mut vars: Vec<Dual<Complex>> = phi.iter().map(|&p| Dual::constant(p)).collect();
                for j in 0..6 {
                    vars[j] = Dual::variable(phi[j]);
                    for (i, xi) in trilinear_x(&vars, point).into_iter().enumerate() {
                        jac[(i, j)] = xi.eps;
                    }
                    vars[j] = Dual::constant(phi[j]);
                }
                jac
            }
        }
    }
}

fn general_gradient(n: usize, phi: &[Complex]) -> Vec<Complex> {
    let last = phi[n - 2];
    let s: Complex = phi[..n - 2].iter().map(|p| p * p).sum();
    let l2 = last * last;
    let mut out = Vec::with_capacity(n);
    out.push(s - l2);
    out.push(c64(0.0, 1.0) * (s + l2));
    out.extend(phi[..n - 2].iter().map(|p| 2.0 * p * last));
    out
}

fn general_x(n: usize, phi: &[Complex], x: &[f64]) -> Vec<Complex> {
    let plus = c64(x[0], x[1]);
    let minus = c64(x[0], -x[1]);
    let last = phi[n - 2];
    let mut out: Vec<Complex> = (0..n - 2).map(|j| phi[j] * plus + last * x[j + 2]).collect();
    let tail: Complex = (0..n - 2).map(|j| phi[j] * x[j + 2]).sum();
    out.push(-last * minus + tail);
    out
}

fn general_x_jacobian(n: usize, x: &[f64]) -> CMatrix {
    let k = n - 1;
    let mut m = CMatrix::zeros(k);
    for j in 0..k - 1 {
        m[(j, j)] = c64(x[0], x[1]);
        m[(j, k - 1)] = c64(x[j + 2], 0.0);
        m[(k - 1, j)] = c64(x[j + 2], 0.0);
    }
    m[(k - 1, k - 1)] = -c64(x[0], -x[1]);
    m
}

fn trilinear_gradient(phi: &[Complex]) -> Vec<Complex> {
    let (p1, p2, p3, p4, p5, p6) = (phi[0], phi[1], phi[2], phi[3], phi[4], phi[5]);
    let i = c64(0.0, 1.0);
    let s13 = p1 * p3 + p2 * p4;
    vec![
        i * (p1 * p2 + p3 * p4) * p5 - 0.5 * (p1 * p1 + p2 * p2 - p3 * p3 - p4 * p4) * p6,
        i * (-p1 * p3 + p2 * p4) * p5 + (p2 * p3 - p1 * p4) * p6,
        (-p1 * p2 + p3 * p4) * p5 - 0.5 * i * (p1 * p1 + p2 * p2 + p3 * p3 + p4 * p4) * p6,
        s13 * p5,
        s13 * p6,
    ]
}

/// The six X-system functions, generic so the Jacobian can be taken by duals.
fn trilinear_x<T: Scalar>(phi: &[T], point: &[f64]) -> Vec<T> {
    let k = |z: Complex| T::constant(z);
    let (p1, p2, p3, p4, p5, p6) = (phi[0], phi[1], phi[2], phi[3], phi[4], phi[5]);
    let (x, y, z, t, u) = (point[0], point[1], point[2], point[3], point[4]);
    let i = k(c64(0.0, 1.0));
    let half = k(c64(0.5, 0.0));
    let t_minus = k(c64(t, -y));
    let t_plus = k(c64(t, y));
    let x_plus = k(c64(x, z));
    let x_minus = k(c64(x, -z));
    let y = k(c64(y, 0.0));
    let u = k(c64(u, 0.0));
    vec![
        p3 * p5 * t_minus - (p1 * p6 - i * p2 * p5) * x_plus - p4 * p6 * y + p3 * p6 * u,
        p4 * p5 * t_plus - (p2 * p6 - i * p1 * p5) * x_plus + p3 * p6 * y + p4 * p6 * u,
        p1 * p5 * t_minus + (p3 * p6 + i * p4 * p5) * x_minus + p2 * p6 * y + p1 * p6 * u,
        p2 * p5 * t_plus + (p4 * p6 + i * p3 * p5) * x_minus - p1 * p6 * y + p2 * p6 * u,
        p1 * p3 * t_minus + p2 * p4 * t_plus + i * p1 * p2 * x_plus + i * p3 * p4 * x_minus,
        -(half * (p1 * p1 + p2 * p2) * x_plus) + half * (p3 * p3 + p4 * p4) * x_minus + (p2 * p3 - p1 * p4) * y
            + (p1 * p3 + p2 * p4) * u,
    ]
}

/// `Σ_k v_k²`, without conjugation.
pub fn null_residual(grad_h: &[Complex]) -> Complex {
    grad_h.iter().map(|v| v * v).sum()
}

/// Spinor-like components tagged with the parametrization they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiVector {
    components: Vec<Complex>,
    backend: Backend,
}

impl PhiVector {
    pub fn new(backend: Backend, components: Vec<Complex>) -> Result<Self, NullRepError> {
        if components.len() != backend.arity() {
            return Err(NullRepError::ComponentCount { backend, expected: backend.arity(), actual: components.len() });
        }
        Ok(PhiVector { components, backend })
    }

    pub fn components(&self) -> &[Complex] {
        &self.components
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    pub fn into_components(self) -> Vec<Complex> {
        self.components
    }

    /// Largest component modulus.
    pub fn max_norm(&self) -> f64 {
        self.components.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn gradient_from_phi(&self) -> Vec<Complex> {
        self.backend.gradient(&self.components)
    }

    pub fn x_system(&self, point: &RealPoint) -> Vec<Complex> {
        self.backend.x_system(&self.components, point.coords())
    }

    pub fn x_system_jacobian(&self, point: &RealPoint) -> CMatrix {
        self.backend.x_jacobian(&self.components, point.coords())
    }
}

/// A point of `R^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RealPoint {
    coords: Vec<f64>,
}

impl RealPoint {
    pub fn new(coords: Vec<f64>) -> Self {
        debug_assert!(coords.iter().all(|c| c.is_finite()));
        RealPoint { coords }
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }
}

/// `∇h` at a point together with the `φ` that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub grad_h: Vec<Complex>,
    pub phi: PhiVector,
    pub point: RealPoint,
}

impl GradientSample {
    pub fn new(phi: PhiVector, point: RealPoint) -> Self {
        GradientSample { grad_h: phi.gradient_from_phi(), phi, point }
    }

    /// `|Σ h_k²| / (max_k |h_k|)²`, zero for a zero gradient.
    pub fn relative_null_residual(&self) -> f64 {
        let scale = self.grad_h.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        null_residual(&self.grad_h).norm() / (scale * scale)
    }
}
