//! # conjugen
//!
//! Constructs pairs of real functions `f, g` on `R^n` with `|∇f| = |∇g|` and
//! `∇f · ∇g = 0` by building a complex potential `h = f + i g` whose gradient
//! is a complex null vector, `(∇h)·(∇h) = 0`.
//!
//! The pipeline is:
//!
//! 1. pick a holomorphic generating function `F(φ₁, …, φ_k)` written in a
//!    small expression language ([`expr`]);
//! 2. at every grid point `x`, solve the algebraic system `∂F/∂φ_i = X_i(φ, x)`
//!    for the spinor-like components `φ` ([`solver`]), where the `X_i` and the
//!    null parametrization `∇h(φ)` come from [`nullrep`];
//! 3. integrate the resulting gradient field over the grid to recover `h`
//!    and check the conjugacy conditions numerically ([`field`]);
//! 4. optionally confirm that the solved `φ` lie on the real hypersurface
//!    the system carves out in `C^{n-1}` ([`hypersurface`]).
//!
//! ```
//! use conjugen::{newton_solve, Backend, HoloExpr, RealPoint, SolveConfig};
//!
//! let f = HoloExpr::parse("phi1", 2).unwrap();
//! let backend = Backend::general(3).unwrap();
//! let point = RealPoint::new(vec![1.0, 1.0, 1.0]);
//! let sol = newton_solve(&f, backend, &point, &SolveConfig::default()).unwrap();
//! assert!(sol.residual_norm <= 1e-12);
//! ```

pub mod expr;
pub mod field;
pub mod grid;
pub mod hypersurface;
pub mod linalg;
pub mod nullrep;
pub mod solver;

/// Version of this library, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Complex scalar used for every `φ`, `h` and `F` value.
pub type Complex = num_complex::Complex64;

/// Shorthand constructor for [`Complex`].
#[inline]
pub const fn c64(re: f64, im: f64) -> Complex {
    Complex::new(re, im)
}

pub use expr::{EvalResult, ExprError, HoloExpr};
pub use field::{integrate_h, loop_residual, verify_conjugate, ConjugateReport, FieldError, FieldGrid, Rectangle};
pub use grid::{AxisSpec, GridError, GridSpec};
pub use hypersurface::{m3_residual, m4_residual, on_surface_check, SurfaceError, SurfaceReport, SurfaceResidual};
pub use linalg::{CMatrix, LinalgError, LuDecomposition};
pub use nullrep::{null_residual, Backend, GradientSample, NullRepError, PhiVector, RealPoint};
pub use solver::{
    continue_over_grid, linear_f_oracle, newton_solve, BranchGrid, CellFailure, CellOutcome, FailureKind, SolveConfig,
    SolveResult, SolverError,
};
