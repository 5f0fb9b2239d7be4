//! Defining functions of the real hypersurfaces `M₃ ⊂ C²` and `M₄ ⊂ C³`
//! traced out by solutions of the n = 3 and n = 4 systems.
//!
//! Both are imaginary parts of expressions in `φ`, `φ̄` and the partials
//! `F_i(φ)`; they vanish identically on every `φ` that solves the system at
//! some real point. The `*_from_gradient` variants take frozen `F_i` values.

use thiserror::Error;

use crate::expr::{ExprError, HoloExpr};
use crate::nullrep::{Backend, PhiVector};
use crate::solver::BranchGrid;
use crate::Complex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SurfaceError {
    #[error("hypersurface equations are only available for n = 3 and n = 4 (got {0})")]
    UnsupportedDimension(Backend),
    #[error("F has arity {actual}, expected {expected}")]
    Arity { expected: usize, actual: usize },
    #[error(transparent)]
    Eval(#[from] ExprError),
}

/// Raw defining-function values and the same values divided by the largest
/// monomial magnitude in each expression.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceResidual {
    pub values: Vec<f64>,
    pub normalized: Vec<f64>,
    pub phi: PhiVector,
}

fn normalize(raw: f64, scale: f64) -> f64 {
    if scale > 0.0 {
        raw / scale
    } else {
        raw
    }
}

/// `Im(F₁ φ̄₂ − F₂ φ̄₁)` and its monomial scale.
pub fn m3_from_gradient(fg: [Complex; 2], phi: [Complex; 2]) -> (f64, f64) {
    let [f1, f2] = fg;
    let [p1, p2] = phi;
    let raw = (f1 * p2.conj() - f2 * p1.conj()).im;
    let scale = (f1.norm() * p2.norm()).max(f2.norm() * p1.norm());
    (raw, scale)
}

/// The two `M₄` defining functions and their monomial scales.
pub fn m4_from_gradient(fg: [Complex; 3], phi: [Complex; 3]) -> ([f64; 2], [f64; 2]) {
    let [f1, f2, f3] = fg;
    let [p1, p2, p3] = phi;
    let (c1, c2, c3) = (p1.conj(), p2.conj(), p3.conj());
    let (a1, a2, a3) = (p1.norm_sqr(), p2.norm_sqr(), p3.norm_sqr());
    let abs_p1p3_sq = (p1 * p3).norm_sqr();
    let abs_p2p3_sq = (p2 * p3).norm_sqr();

    let e1 = c3
        * (f1 * (p2 * p2 * c1 * c1 + a2 * a2 - abs_p1p3_sq - a3 * a3)
            - f2 * (a2 * p1 * c2 + (a1 + a3) * p2 * c1)
            + f3 * p3 * (p1 * c2 * c2 + (a1 + a3) * c1));
    let e2 = c3
        * (f1 * (a1 * p2 * c1 + (a2 + a3) * p1 * c2)
            - f2 * (p1 * p1 * c2 * c2 + a1 * a1 - abs_p2p3_sq - a3 * a3)
            - f3 * p3 * (p2 * c1 * c1 + (a2 + a3) * c2));

    let (m1, m2, m3) = (p1.norm(), p2.norm(), p3.norm());
    let (g1, g2, g3) = (f1.norm(), f2.norm(), f3.norm());
    let max = |xs: &[f64]| xs.iter().copied().fold(0.0, f64::max);
    let s1 = m3
        * max(&[
            g1 * a2 * a1,
            g1 * a2 * a2,
            g1 * a1 * a3,
            g1 * a3 * a3,
            g2 * a2 * m1 * m2,
            g2 * a1 * m2 * m1,
            g2 * a3 * m2 * m1,
            g3 * m3 * m1 * a2,
            g3 * m3 * a1 * m1,
            g3 * m3 * a3 * m1,
        ]);
    let s2 = m3
        * max(&[
            g1 * a1 * m2 * m1,
            g1 * a2 * m1 * m2,
            g1 * a3 * m1 * m2,
            g2 * a1 * a2,
            g2 * a1 * a1,
            g2 * a2 * a3,
            g2 * a3 * a3,
            g3 * m3 * m2 * a1,
            g3 * m3 * a2 * m2,
            g3 * m3 * a3 * m2,
        ]);
    ([e1.im, e2.im], [s1, s2])
}

fn require(f: &HoloExpr, phi: &PhiVector, n: usize) -> Result<(), SurfaceError> {
    if phi.backend() != (Backend::GeneralQuadratic { n }) {
        return Err(SurfaceError::UnsupportedDimension(phi.backend()));
    }
    if f.arity() != n - 1 {
        return Err(SurfaceError::Arity { expected: n - 1, actual: f.arity() });
    }
    Ok(())
}

pub fn m3_residual(f: &HoloExpr, phi: &PhiVector) -> Result<SurfaceResidual, SurfaceError> {
    require(f, phi, 3)?;
    let p = phi.components();
    let (_, g) = f.gradient(p)?;
    let (raw, scale) = m3_from_gradient([g[0], g[1]], [p[0], p[1]]);
    Ok(SurfaceResidual { values: vec![raw], normalized: vec![normalize(raw, scale)], phi: phi.clone() })
}

pub fn m4_residual(f: &HoloExpr, phi: &PhiVector) -> Result<SurfaceResidual, SurfaceError> {
    require(f, phi, 4)?;
    let p = phi.components();
    let (_, g) = f.gradient(p)?;
    let (raw, scale) = m4_from_gradient([g[0], g[1], g[2]], [p[0], p[1], p[2]]);
    Ok(SurfaceResidual {
        values: raw.to_vec(),
        normalized: vec![normalize(raw[0], scale[0]), normalize(raw[1], scale[1])],
        phi: phi.clone(),
    })
}

/// Largest residual of one defining function over a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceMax {
    pub max_raw: f64,
    pub max_raw_cell: usize,
    pub max_normalized: f64,
    pub max_normalized_cell: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceReport {
    /// One entry per defining function; `None` if no cell was solved.
    pub maxima: Option<Vec<SurfaceMax>>,
    pub checked_cells: usize,
}

/// Evaluates `M₃` or `M₄` at every solved cell of `branch`.
pub fn on_surface_check(branch: &BranchGrid, f: &HoloExpr) -> Result<SurfaceReport, SurfaceError> {
    let eval: fn(&HoloExpr, &PhiVector) -> Result<SurfaceResidual, SurfaceError> = match branch.backend {
        Backend::GeneralQuadratic { n: 3 } => m3_residual,
        Backend::GeneralQuadratic { n: 4 } => m4_residual,
        other => return Err(SurfaceError::UnsupportedDimension(other)),
    };
    let mut maxima: Option<Vec<SurfaceMax>> = None;
    let mut checked = 0;
    for (cell, outcome) in branch.cells.iter().enumerate() {
        let Some(sol) = outcome.solved() else { continue };
        let r = eval(f, &sol.phi)?;
        checked += 1;
        let m = maxima.get_or_insert_with(|| {
            vec![SurfaceMax { max_raw: -1.0, max_raw_cell: cell, max_normalized: -1.0, max_normalized_cell: cell }; r.values.len()]
        });
        for (k, slot) in m.iter_mut().enumerate() {
            let (raw, norm) = (r.values[k].abs(), r.normalized[k].abs());
            if raw > slot.max_raw {
                slot.max_raw = raw;
                slot.max_raw_cell = cell;
            }
            if norm > slot.max_normalized {
                slot.max_normalized = norm;
                slot.max_normalized_cell = cell;
            }
        }
    }
    Ok(SurfaceReport { maxima, checked_cells: checked })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::c64;
    use crate::grid::GridSpec;
    use crate::solver::{continue_over_grid, newton_solve, CellFailure, CellOutcome, FailureKind, SolveConfig};
    use crate::RealPoint;

    fn phi(backend: Backend, v: &[(f64, f64)]) -> PhiVector {
        PhiVector::new(backend, v.iter().map(|&(a, b)| c64(a, b)).collect()).unwrap()
    }

    #[test]
    fn m3_with_linear_f_and_real_phi2() {
        let f = HoloExpr::parse("phi1", 2).unwrap();
        let b = Backend::general(3).unwrap();
        let r = m3_residual(&f, &phi(b, &[(0.3, -2.0), (1.7, 0.0)])).unwrap();
        assert_eq!(r.values, vec![0.0]);
        let r = m3_residual(&f, &phi(b, &[(0.3, -2.0), (1.7, 0.5)])).unwrap();
        assert_eq!(r.values, vec![-0.5]);
    }

    #[test]
    fn m3_vanishes_on_solver_output() {
        let f = HoloExpr::parse("phi1", 2).unwrap();
        let b = Backend::general(3).unwrap();
        let sol = newton_solve(&f, b, &RealPoint::new(vec![1.0; 3]), &SolveConfig::default()).unwrap();
        let r = m3_residual(&f, &sol.phi).unwrap();
        assert!(r.values[0].abs() <= 1e-14, "{r:?}");
    }

    #[test]
    fn m3_off_surface_sample() {
        let f = HoloExpr::parse("phi1^2", 2).unwrap();
        let b = Backend::general(3).unwrap();
        // F1 = 2φ1: Im(2 φ1 φ̄2) with φ1 = 0.4+0.9i, φ2 = -0.2+0.6i
        let r = m3_residual(&f, &phi(b, &[(0.4, 0.9), (-0.2, 0.6)])).unwrap();
        let want = (2.0 * c64(0.4, 0.9) * c64(-0.2, -0.6)).im;
        assert_eq!(r.values[0], want);
        assert!(r.values[0].abs() > 1e-6);
    }

    #[test]
    fn m4_vanishes_when_phi3_is_zero() {
        let f = HoloExpr::parse("phi1*phi2 + exp(phi3)", 3).unwrap();
        let b = Backend::general(4).unwrap();
        let r = m4_residual(&f, &phi(b, &[(0.3, 1.1), (-0.7, 0.2), (0.0, 0.0)])).unwrap();
        assert_eq!(r.values, vec![0.0, 0.0]);
    }

    #[test]
    fn m4_off_solution_sample() {
        let f = HoloExpr::parse("phi1", 3).unwrap();
        let b = Backend::general(4).unwrap();
        let r = m4_residual(&f, &phi(b, &[(0.5, 0.25), (-0.75, 0.5), (0.25, 1.0)])).unwrap();
        assert!(r.values.iter().any(|v| v.abs() > 1e-6), "{r:?}");
    }

    #[test]
    fn antisymmetry_under_swap() {
        let fg = [c64(0.3, -1.2), c64(2.0, 0.7)];
        let p = [c64(-0.4, 0.9), c64(1.3, 0.1)];
        let (a, _) = m3_from_gradient(fg, p);
        let (b, _) = m3_from_gradient([fg[1], fg[0]], [p[1], p[0]]);
        assert_eq!(a, -b);
    }

    #[test]
    fn unsupported_dimensions() {
        let f = HoloExpr::parse("phi1", 4).unwrap();
        let b = Backend::general(5).unwrap();
        let p = phi(b, &[(1.0, 0.0); 4]);
        assert!(matches!(m3_residual(&f, &p), Err(SurfaceError::UnsupportedDimension(_))));
        let branch = BranchGrid { backend: b, grid: GridSpec::cube(5, 1.0, 2.0, 2).unwrap(), cells: vec![] };
        assert!(matches!(on_surface_check(&branch, &f), Err(SurfaceError::UnsupportedDimension(_))));
        let tri = BranchGrid { backend: Backend::Trilinear5, ..branch };
        let f6 = HoloExpr::parse("phi1", 6).unwrap();
        assert!(matches!(on_surface_check(&tri, &f6), Err(SurfaceError::UnsupportedDimension(Backend::Trilinear5))));
    }

    #[test]
    fn empty_branch_reports_absent() {
        let f = HoloExpr::parse("phi1", 2).unwrap();
        let grid = GridSpec::cube(3, 1.0, 2.0, 2).unwrap();
        let fail = CellOutcome::Failed(CellFailure { kind: FailureKind::SingularJacobian, detail: String::new(), residual_norm: None });
        let branch = BranchGrid { backend: Backend::general(3).unwrap(), cells: vec![fail; grid.len()], grid };
        let rep = on_surface_check(&branch, &f).unwrap();
        assert_eq!(rep.maxima, None);
        assert_eq!(rep.checked_cells, 0);
    }

    #[test]
    fn n3_grid_on_surface() {
        let f = HoloExpr::parse("phi1", 2).unwrap();
        let grid = GridSpec::cube(3, 1.0, 2.0, 5).unwrap();
        let branch = continue_over_grid(&f, Backend::general(3).unwrap(), &grid, &SolveConfig::default()).unwrap();
        let rep = on_surface_check(&branch, &f).unwrap();
        assert_eq!(rep.checked_cells, 125);
        assert!(rep.maxima.unwrap()[0].max_raw <= 1e-10);
    }
}
