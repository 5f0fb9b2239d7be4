//! Pointwise solution of `F_i(φ) = X_i(φ, x)` and continuation over a grid.
//!
//! Each Newton step solves `(Hess F(φ) − ∂X/∂φ) δ = −(∇F(φ) − X(φ, x))` by
//! complex LU, followed by a backtracking line search on the max-norm of the
//! residual. Over a grid, every cell is seeded from an already solved
//! neighbor so that one analytic branch of the multivalued solution is
//! followed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::expr::{ExprError, HoloExpr};
use crate::grid::{GridError, GridSpec};
use crate::linalg::{CMatrix, LinalgError, LuDecomposition};
use crate::nullrep::{Backend, PhiVector, RealPoint};
use crate::{c64, Complex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("singular Jacobian (condition estimate {condition:e}) after {iterations} iterations")]
    SingularJacobian { condition: f64, iterations: usize },
    #[error("no convergence after {iterations} iterations (best residual {residual_norm:e})")]
    NoConvergence { best_phi: Vec<Complex>, residual_norm: f64, iterations: usize },
    #[error(transparent)]
    Eval(#[from] ExprError),
    #[error("F has arity {actual} but the backend needs {expected} variables")]
    Arity { expected: usize, actual: usize },
    #[error("point has dimension {actual}, backend needs {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error("invalid solver configuration: {0}")]
    Config(String),
    #[error("the linear oracle only applies to the general quadratic backend")]
    UnsupportedBackend,
    #[error("no grid cell could be solved ({cells} cells tried)")]
    AnchorFailure { cells: usize },
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveConfig {
    /// Convergence threshold on `max_i |F_i − X_i|`.
    pub tol_residual: f64,
    pub max_iters: usize,
    /// Step shrink factor of the line search.
    pub backtrack_factor: f64,
    pub max_halvings: u32,
    /// Starting point. When absent, all-ones plus `retries` random perturbations are tried.
    pub seed_phi: Option<Vec<Complex>>,
    pub retries: usize,
    pub rng_seed: u64,
    /// Pivot-ratio bound above which the Jacobian counts as singular.
    pub max_condition: f64,
    /// Worker threads for grid continuation; results do not depend on it.
    pub threads: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            tol_residual: 1e-12,
            max_iters: 50,
            backtrack_factor: 0.5,
            max_halvings: 20,
            seed_phi: None,
            retries: 8,
            rng_seed: 0xC0FFEE,
            max_condition: 1e14,
            threads: 1,
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        if self.tol_residual.is_nan() || self.tol_residual <= 0.0 {
            return Err(SolverError::Config(format!("tol_residual must be > 0 (got {})", self.tol_residual)));
        }
        if self.max_iters < 1 {
            return Err(SolverError::Config("max_iters must be >= 1".into()));
        }
        if !(self.backtrack_factor > 0.0 && self.backtrack_factor < 1.0) {
            return Err(SolverError::Config("backtrack_factor must lie in (0, 1)".into()));
        }
        if self.threads < 1 {
            return Err(SolverError::Config("threads must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub phi: PhiVector,
    /// `max_i |F_i(φ) − X_i(φ, x)|` at the returned `φ`.
    pub residual_norm: f64,
    /// Newton steps taken.
    pub iterations: usize,
    pub point: RealPoint,
}

/// `∇F(φ) − X(φ, x)` and its max-norm.
pub fn system_residual(
    f: &HoloExpr,
    backend: Backend,
    phi: &[Complex],
    point: &[f64],
) -> Result<(Vec<Complex>, f64), ExprError> {
    let (_, grad) = f.gradient(phi)?;
    let x = backend.x_system(phi, point);
    let r: Vec<Complex> = grad.iter().zip(&x).map(|(g, xi)| g - xi).collect();
    let norm = r.iter().map(|z| z.norm()).fold(0.0, f64::max);
    Ok((r, if norm.is_nan() { f64::INFINITY } else { norm }))
}

fn check_shapes(f: &HoloExpr, backend: Backend, point: &RealPoint) -> Result<(), SolverError> {
    if f.arity() != backend.arity() {
        return Err(SolverError::Arity { expected: backend.arity(), actual: f.arity() });
    }
    if point.dim() != backend.dimension() {
        return Err(SolverError::Dimension { expected: backend.dimension(), actual: point.dim() });
    }
    Ok(())
}

/// Damped Newton from one starting point.
pub fn newton_from(
    f: &HoloExpr,
    backend: Backend,
    point: &RealPoint,
    seed: &[Complex],
    config: &SolveConfig,
) -> Result<SolveResult, SolverError> {
    check_shapes(f, backend, point)?;
    if seed.len() != backend.arity() {
        return Err(SolverError::Arity { expected: backend.arity(), actual: seed.len() });
    }
    let x = point.coords();
    let mut phi = seed.to_vec();
    let (mut r, mut norm) = system_residual(f, backend, &phi, x)?;
    let mut best = (phi.clone(), norm);

    for iter in 0..=config.max_iters {
        if norm <= config.tol_residual {
            return Ok(SolveResult {
                phi: PhiVector::new(backend, phi).expect("length checked"),
                residual_norm: norm,
                iterations: iter,
                point: point.clone(),
            });
        }
        if iter == config.max_iters {
            break;
        }
        let hess = f.evaluate(&phi)?.hess;
        let jac = hess.sub(&backend.x_jacobian(&phi, x));
        let lu = LuDecomposition::factor(&jac, config.max_condition).map_err(|e| match e {
            LinalgError::Singular { condition } => SolverError::SingularJacobian { condition, iterations: iter },
            LinalgError::Dimension { .. } => unreachable!("square by construction"),
        })?;
        let neg_r: Vec<Complex> = r.iter().map(|z| -z).collect();
        let step = lu.solve(&neg_r).expect("dimension matches");

        let mut t = 1.0;
        let mut halvings = 0;
        loop {
            let trial: Vec<Complex> = phi.iter().zip(&step).map(|(p, d)| p + t * d).collect();
            let outcome = system_residual(f, backend, &trial, x);
            let last_chance = halvings >= config.max_halvings;
            match outcome {
                Ok((rt, nt)) if nt < norm || last_chance => {
                    phi = trial;
                    r = rt;
                    norm = nt;
                    break;
                }
                Err(e) if last_chance => return Err(e.into()),
                _ => {}
            }
            t *= config.backtrack_factor;
            halvings += 1;
        }
        if norm < best.1 {
            best = (phi.clone(), norm);
        }
    }
    Err(SolverError::NoConvergence { best_phi: best.0, residual_norm: best.1, iterations: config.max_iters })
}

/// Starting points in the order they are tried when no continuation seed exists.
pub fn default_seeds(config: &SolveConfig, k: usize) -> Vec<Vec<Complex>> {
    if let Some(seed) = &config.seed_phi {
        return vec![seed.clone()];
    }
    let base = vec![c64(1.0, 0.0); k];
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let mut seeds = vec![base.clone()];
    for _ in 0..config.retries {
        seeds.push(
            base.iter()
                .map(|b| {
                    let r: f64 = rng.gen::<f64>().sqrt();
                    let theta: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
                    b + Complex::from_polar(r, theta)
                })
                .collect(),
        );
    }
    seeds
}

/// Solves the system at `point`. Uses `config.seed_phi` if present;
/// otherwise tries the default seeds in order and returns the first success
/// (or the error from the first attempt).
pub fn newton_solve(
    f: &HoloExpr,
    backend: Backend,
    point: &RealPoint,
    config: &SolveConfig,
) -> Result<SolveResult, SolverError> {
    config.validate()?;
    check_shapes(f, backend, point)?;
    let mut first_err = None;
    for seed in default_seeds(config, backend.arity()) {
        match newton_from(f, backend, point, &seed, config) {
            Ok(sol) => return Ok(sol),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.expect("at least one seed"))
}

/// Direct solve of the system for linear `F = Σ a_j φ_j`, where `F_i = a_i`
/// and the X-system is linear in `φ`. Test oracle for [`newton_solve`].
pub fn linear_f_oracle(a: &[Complex], backend: Backend, point: &RealPoint) -> Result<PhiVector, SolverError> {
    let Backend::GeneralQuadratic { .. } = backend else {
        return Err(SolverError::UnsupportedBackend);
    };
    let k = backend.arity();
    if a.len() != k {
        return Err(SolverError::Arity { expected: k, actual: a.len() });
    }
    if point.dim() != backend.dimension() {
        return Err(SolverError::Dimension { expected: backend.dimension(), actual: point.dim() });
    }
    // columns are X applied to the unit vectors
    let mut m = CMatrix::zeros(k);
    for j in 0..k {
        let mut e = vec![c64(0.0, 0.0); k];
        e[j] = c64(1.0, 0.0);
        for (i, v) in backend.x_system(&e, point.coords()).into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
    let lu = LuDecomposition::factor(&m, SolveConfig::default().max_condition)
        .map_err(|_| SolverError::SingularJacobian { condition: f64::INFINITY, iterations: 0 })?;
    let phi = lu.solve(a).expect("dimension matches");
    Ok(PhiVector::new(backend, phi).expect("length k"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    SingularJacobian,
    NoConvergence,
    EvalDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellFailure {
    pub kind: FailureKind,
    pub detail: String,
    /// Best residual reached, when Newton got that far.
    pub residual_norm: Option<f64>,
}

impl CellFailure {
    fn from_error(e: &SolverError) -> Self {
        let (kind, residual_norm) = match e {
            SolverError::SingularJacobian { .. } => (FailureKind::SingularJacobian, None),
            SolverError::NoConvergence { residual_norm, .. } => (FailureKind::NoConvergence, Some(*residual_norm)),
            _ => (FailureKind::EvalDomain, None),
        };
        CellFailure { kind, detail: e.to_string(), residual_norm }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CellOutcome {
    Solved(SolveResult),
    Failed(CellFailure),
}

impl CellOutcome {
    pub fn solved(&self) -> Option<&SolveResult> {
        match self {
            CellOutcome::Solved(s) => Some(s),
            CellOutcome::Failed(_) => None,
        }
    }
}

/// Per-cell solutions over a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchGrid {
    pub backend: Backend,
    pub grid: GridSpec,
    pub cells: Vec<CellOutcome>,
}

impl BranchGrid {
    pub fn solved_count(&self) -> usize {
        self.cells.iter().filter(|c| c.solved().is_some()).count()
    }

    pub fn failed_count(&self) -> usize {
        self.cells.len() - self.solved_count()
    }

    pub fn failed_fraction(&self) -> f64 {
        self.failed_count() as f64 / self.cells.len() as f64
    }

    pub fn phi(&self, flat: usize) -> Option<&[Complex]> {
        self.cells[flat].solved().map(|s| s.phi.components())
    }

    /// `∇h` at every solved cell.
    pub fn gradients(&self) -> Vec<Option<Vec<Complex>>> {
        self.cells.iter().map(|c| c.solved().map(|s| s.phi.gradient_from_phi())).collect()
    }
}

/// Solves every cell of `grid`, following one branch by continuation.
///
/// Rows are the lines along the last axis. Row starts are solved first, in
/// row-major order, each seeded from the nearest solved row start one step
/// back along the highest possible axis; every other cell is seeded from the
/// nearest solved earlier cell of its own row. A cell without any solved seed
/// source falls back to the default seeds. Rows are independent once their
/// start is known, so they can be swept on `config.threads` workers without
/// changing the result.
pub fn continue_over_grid(
    f: &HoloExpr,
    backend: Backend,
    grid: &GridSpec,
    config: &SolveConfig,
) -> Result<BranchGrid, SolverError> {
    config.validate()?;
    if grid.dim() != backend.dimension() {
        return Err(SolverError::Dimension { expected: backend.dimension(), actual: grid.dim() });
    }
    if f.arity() != backend.arity() {
        return Err(SolverError::Arity { expected: backend.arity(), actual: f.arity() });
    }
    let n = grid.dim();
    let row_len = grid.axes()[n - 1].count;
    let rows = grid.len() / row_len;

    let solve_cell = |flat: usize, seed: Option<&[Complex]>| -> CellOutcome {
        let point = grid.point(flat);
        let res = match seed {
            Some(s) => newton_from(f, backend, &point, s, config),
            None => newton_solve(f, backend, &point, config),
        };
        match res {
            Ok(sol) => CellOutcome::Solved(sol),
            Err(e) => CellOutcome::Failed(CellFailure::from_error(&e)),
        }
    };

    // Row starts, sequentially.
    let mut starts: Vec<CellOutcome> = Vec::with_capacity(rows);
    for row in 0..rows {
        let flat = row * row_len;
        let idx = grid.multi(flat);
        let seed = (0..n - 1).rev().filter(|&a| idx[a] > 0).find_map(|a| {
            let prev_row = (flat - grid.stride(a)) / row_len;
            starts[prev_row].solved().map(|s| s.phi.components())
        });
        let outcome = solve_cell(flat, seed);
        starts.push(outcome);
    }

    let sweep_row = |row: usize, start: CellOutcome| -> Vec<CellOutcome> {
        let mut out = Vec::with_capacity(row_len);
        out.push(start);
        for j in 1..row_len {
            let seed = out.iter().rev().find_map(|c| c.solved().map(|s| s.phi.components().to_vec()));
            let outcome = solve_cell(row * row_len + j, seed.as_deref());
            out.push(outcome);
        }
        out
    };

    let threads = config.threads.min(rows).max(1);
    let mut cells = Vec::with_capacity(grid.len());
    if threads == 1 {
        for (row, start) in starts.into_iter().enumerate() {
            cells.extend(sweep_row(row, start));
        }
    } else {
        let chunk = rows.div_ceil(threads);
        let mut starts = starts;
        let mut batches: Vec<Vec<(usize, CellOutcome)>> = Vec::new();
        let mut row = 0;
        while !starts.is_empty() {
            let rest = starts.split_off(chunk.min(starts.len()));
            let batch: Vec<(usize, CellOutcome)> = starts.into_iter().enumerate().map(|(i, s)| (row + i, s)).collect();
            row += batch.len();
            batches.push(batch);
            starts = rest;
        }
        let results: Vec<Vec<CellOutcome>> = std::thread::scope(|scope| {
            let handles: Vec<_> = batches
                .into_iter()
                .map(|batch| {
                    let sweep_row = &sweep_row;
                    scope.spawn(move || batch.into_iter().flat_map(|(r, s)| sweep_row(r, s)).collect::<Vec<_>>())
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("row worker panicked")).collect()
        });
        for part in results {
            cells.extend(part);
        }
    }

    let branch = BranchGrid { backend, grid: grid.clone(), cells };
    if branch.solved_count() == 0 {
        return Err(SolverError::AnchorFailure { cells: branch.cells.len() });
    }
    Ok(branch)
}
