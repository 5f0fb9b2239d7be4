//! Recovering `h` from a solved gradient field and checking conjugacy.
//!
//! `h` is accumulated edge by edge with the trapezoid rule over a spanning
//! tree of the solved cells, rooted at the base cell where `h = 0`. The tree
//! is grown breadth-first; among the neighbors one step closer to the base,
//! a cell prefers the one along the highest axis on which it differs from the
//! base. On a complete grid that reproduces axis-ordered paths (axis 0 first,
//! then axis 1, …), which keeps the quadrature error a smooth function of
//! position so finite differences of `h` stay second-order accurate.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridSpec;
use crate::nullrep::null_residual;
use crate::solver::BranchGrid;
use crate::{c64, Complex};

/// Gradients at the two ends of a central-difference stencil and the weight.
type StencilPair<'a> = (&'a Vec<Complex>, &'a Vec<Complex>, f64);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FieldError {
    #[error("base cell {0} has no solved gradient")]
    BaseNotSolved(usize),
    #[error("cell {0} is outside the grid")]
    OutOfGrid(usize),
    #[error("cell {0} is not connected to the base cell")]
    DisconnectedCell(usize),
    #[error("no solved cell to integrate from")]
    NothingSolved,
    #[error("grid needs at least 3 points per axis for central differences (axis {axis} has {count})")]
    GridTooSmall { axis: usize, count: usize },
    #[error("no interior cell has a complete finite-difference stencil")]
    NoInteriorStencil,
    #[error("rectangle is invalid: {0}")]
    BadRectangle(String),
    #[error("field arrays have {actual} entries, grid has {expected} cells")]
    Length { expected: usize, actual: usize },
}

/// Integrated potential on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldGrid {
    pub grid: GridSpec,
    /// `∇h` per cell, absent where the solver failed.
    pub grad_h: Vec<Option<Vec<Complex>>>,
    /// `h` per cell, absent where the cell was not reached.
    pub h: Vec<Option<Complex>>,
    pub base_cell: usize,
    /// Solved cells that could not be reached from the base.
    pub unreached: Vec<usize>,
}

impl FieldGrid {
    /// Assembles a field from stored data without integrating.
    pub fn from_parts(
        grid: GridSpec,
        grad_h: Vec<Option<Vec<Complex>>>,
        h: Vec<Option<Complex>>,
        base_cell: usize,
    ) -> Result<Self, FieldError> {
        for len in [grad_h.len(), h.len()] {
            if len != grid.len() {
                return Err(FieldError::Length { expected: grid.len(), actual: len });
            }
        }
        if base_cell >= grid.len() {
            return Err(FieldError::OutOfGrid(base_cell));
        }
        let unreached = (0..grid.len()).filter(|&c| grad_h[c].is_some() && h[c].is_none()).collect();
        Ok(FieldGrid { grid, grad_h, h, base_cell, unreached })
    }

    /// Integrates an arbitrary gradient field. `base_cell` defaults to the
    /// first cell (row-major) that has a gradient.
    pub fn integrate(
        grid: GridSpec,
        grad_h: Vec<Option<Vec<Complex>>>,
        base_cell: Option<usize>,
    ) -> Result<Self, FieldError> {
        if grad_h.len() != grid.len() {
            return Err(FieldError::Length { expected: grid.len(), actual: grad_h.len() });
        }
        let base = match base_cell {
            Some(b) if b >= grid.len() => return Err(FieldError::OutOfGrid(b)),
            Some(b) if grad_h[b].is_none() => return Err(FieldError::BaseNotSolved(b)),
            Some(b) => b,
            None => grad_h.iter().position(Option::is_some).ok_or(FieldError::NothingSolved)?,
        };
        let n = grid.dim();
        let base_idx = grid.multi(base);

        let mut dist = vec![usize::MAX; grid.len()];
        let mut order = Vec::new();
        let mut queue = VecDeque::from([base]);
        dist[base] = 0;
        while let Some(c) = queue.pop_front() {
            order.push(c);
            for axis in 0..n {
                for fwd in [false, true] {
                    if let Some(nb) = grid.step(c, axis, fwd) {
                        if dist[nb] == usize::MAX && grad_h[nb].is_some() {
                            dist[nb] = dist[c] + 1;
                            queue.push_back(nb);
                        }
                    }
                }
            }
        }

        let mut h = vec![None; grid.len()];
        h[base] = Some(c64(0.0, 0.0));
        for &c in &order[1..] {
            let idx = grid.multi(c);
            let closer = |nb: usize| dist[nb] != usize::MAX && dist[nb] + 1 == dist[c];
            let preferred = (0..n).rev().find(|&a| idx[a] != base_idx[a]).and_then(|a| {
                let toward = idx[a] > base_idx[a];
                grid.step(c, a, !toward).filter(|&nb| closer(nb))
            });
            let parent = preferred
                .or_else(|| {
                    (0..n).flat_map(|a| [grid.step(c, a, false), grid.step(c, a, true)]).flatten().find(|&nb| closer(nb))
                })
                .expect("BFS guarantees a closer neighbor");
            let hp = h[parent].expect("parents are assigned first");
            h[c] = Some(hp + edge_integral(&grid, &grad_h, parent, c));
        }

        let unreached = (0..grid.len()).filter(|&c| grad_h[c].is_some() && h[c].is_none()).collect();
        Ok(FieldGrid { grid, grad_h, h, base_cell: base, unreached })
    }

    pub fn reached_count(&self) -> usize {
        self.h.iter().filter(|v| v.is_some()).count()
    }

    /// Fails with the first unreached solved cell, if any.
    pub fn ensure_connected(&self) -> Result<(), FieldError> {
        match self.unreached.first() {
            Some(&c) => Err(FieldError::DisconnectedCell(c)),
            None => Ok(()),
        }
    }

    /// Adds a constant to every stored `h`.
    pub fn shifted(&self, constant: Complex) -> Self {
        let mut out = self.clone();
        for v in out.h.iter_mut().flatten() {
            *v += constant;
        }
        out
    }
}

/// Trapezoid integral of `∇h · dx` along the grid edge `from → to`.
fn edge_integral(grid: &GridSpec, grad_h: &[Option<Vec<Complex>>], from: usize, to: usize) -> Complex {
    let (a, b) = (grid.multi(from), grid.multi(to));
    let axis = (0..grid.dim()).find(|&d| a[d] != b[d]).expect("distinct cells");
    let dx = grid.axes()[axis].coord(b[axis]) - grid.axes()[axis].coord(a[axis]);
    let ga = grad_h[from].as_ref().expect("solved")[axis];
    let gb = grad_h[to].as_ref().expect("solved")[axis];
    0.5 * (ga + gb) * dx
}

/// Integrates the solved gradients of `branch`; see [`FieldGrid::integrate`].
pub fn integrate_h(branch: &BranchGrid, base_cell: Option<usize>) -> Result<FieldGrid, FieldError> {
    FieldGrid::integrate(branch.grid.clone(), branch.gradients(), base_cell)
}

/// Axis-aligned closed loop in the plane of two grid axes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rectangle {
    pub origin: Vec<usize>,
    pub axes: (usize, usize),
    /// Number of grid steps along each of the two axes.
    pub steps: (usize, usize),
}

impl Rectangle {
    /// Builds the rectangle from four corners given in loop order.
    pub fn from_corners(corners: [&[usize]; 4]) -> Result<Self, FieldError> {
        let bad = |m: &str| FieldError::BadRectangle(m.to_string());
        let dim = corners[0].len();
        if dim < 2 || corners.iter().any(|c| c.len() != dim) {
            return Err(bad("corners need a common dimension >= 2"));
        }
        for s in 0..4 {
            let (p, q) = (corners[s], corners[(s + 1) % 4]);
            if (0..dim).filter(|&d| p[d] != q[d]).count() > 1 {
                return Err(bad("sides must be axis aligned"));
            }
        }
        let origin: Vec<usize> = (0..dim).map(|d| corners.iter().map(|c| c[d]).min().unwrap_or(0)).collect();
        let span = |d: usize| corners.iter().map(|c| c[d]).max().unwrap_or(0) - origin[d];
        let moving: Vec<usize> = (0..dim).filter(|&d| span(d) > 0).collect();
        let (a, b) = match moving[..] {
            [] => (0, 1),
            [a] => (a, if a == 0 { 1 } else { 0 }),
            [a, b] => (a, b),
            _ => return Err(bad("corners span more than two axes")),
        };
        let steps = (span(a), span(b));
        let rect = Rectangle { origin, axes: (a, b), steps };
        let mut want = rect.corners();
        let mut got: Vec<Vec<usize>> = corners.iter().map(|c| c.to_vec()).collect();
        want.sort();
        got.sort();
        if want != got {
            return Err(bad("corners do not form a rectangle"));
        }
        Ok(rect)
    }

    pub fn corners(&self) -> Vec<Vec<usize>> {
        let (a, b) = self.axes;
        let mut c1 = self.origin.clone();
        c1[a] += self.steps.0;
        let mut c2 = c1.clone();
        c2[b] += self.steps.1;
        let mut c3 = self.origin.clone();
        c3[b] += self.steps.1;
        vec![self.origin.clone(), c1, c2, c3]
    }

    /// Physical perimeter on `grid`.
    pub fn perimeter(&self, grid: &GridSpec) -> f64 {
        let sp = grid.spacing();
        2.0 * (self.steps.0 as f64 * sp[self.axes.0] + self.steps.1 as f64 * sp[self.axes.1])
    }
}

/// Trapezoid line integral of `∇h` around `rect`. Requires a gradient at
/// every cell on the boundary.
pub fn loop_residual(field: &FieldGrid, rect: &Rectangle) -> Result<Complex, FieldError> {
    let grid = &field.grid;
    let far = rect.corners()[2].clone();
    if !grid.contains(&rect.origin) || !grid.contains(&far) {
        return Err(FieldError::BadRectangle("rectangle leaves the grid".into()));
    }
    let (a, b) = rect.axes;
    let mut path = vec![grid.flat(&rect.origin)];
    let legs = [(a, true, rect.steps.0), (b, true, rect.steps.1), (a, false, rect.steps.0), (b, false, rect.steps.1)];
    for (axis, fwd, steps) in legs {
        for _ in 0..steps {
            let cur = *path.last().expect("nonempty");
            path.push(grid.step(cur, axis, fwd).expect("inside the grid"));
        }
    }
    if let Some(&c) = path.iter().find(|&&c| field.grad_h[c].is_none()) {
        return Err(FieldError::DisconnectedCell(c));
    }
    if rect.steps.0 == 0 || rect.steps.1 == 0 {
        return Ok(c64(0.0, 0.0));
    }
    Ok(path.windows(2).map(|w| edge_integral(grid, &field.grad_h, w[0], w[1])).sum())
}

/// Finite-difference check of the conjugacy conditions on an integrated field.
///
/// Gradient-based fields are maxima over interior cells whose full central
/// stencil is available; `max_loop_residual` is the largest mismatch between
/// a stored increment of `h` across a grid edge and the trapezoid integral of
/// `∇h` along it (each non-tree edge closes one loop of the integration tree).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConjugateReport {
    /// `max | |∇f| − |∇g| |`
    pub max_norm_mismatch: f64,
    /// `max |∇f · ∇g|`
    pub max_orthogonality: f64,
    /// `max |Σ (∂_k h)²|`, from the same finite-difference gradient.
    pub max_null_residual: f64,
    /// `max |∂_a h_b − ∂_b h_a|` by central differences of the stored `∇h`.
    pub max_curl_asymmetry: f64,
    pub max_loop_residual: f64,
    /// Relative defect of `(∇h)² = |∇f|² − |∇g|² + 2i ∇f·∇g` on the computed numbers.
    pub max_identity_defect: f64,
    /// Mean `|∇f|²` over the checked interior cells; the reference scale.
    pub mean_grad_f_sq: f64,
    pub interior_cells: usize,
}

impl ConjugateReport {
    /// The five check values divided by `mean_grad_f_sq` (unchanged if that is zero).
    pub fn normalized(&self) -> [f64; 5] {
        let s = if self.mean_grad_f_sq > 0.0 { self.mean_grad_f_sq } else { 1.0 };
        [
            self.max_norm_mismatch / s,
            self.max_orthogonality / s,
            self.max_null_residual / s,
            self.max_curl_asymmetry / s,
            self.max_loop_residual / s,
        ]
    }

    pub const FIELD_NAMES: [&'static str; 5] =
        ["max_norm_mismatch", "max_orthogonality", "max_null_residual", "max_curl_asymmetry", "max_loop_residual"];

    pub fn values(&self) -> [f64; 5] {
        [self.max_norm_mismatch, self.max_orthogonality, self.max_null_residual, self.max_curl_asymmetry, self.max_loop_residual]
    }
}

fn central_stencil(grid: &GridSpec, c: usize) -> Option<Vec<(usize, usize, f64)>> {
    (0..grid.dim())
        .map(|a| {
            let lo = grid.step(c, a, false)?;
            let hi = grid.step(c, a, true)?;
            let ax = grid.axes()[a];
            let (il, ih) = (grid.multi(lo)[a], grid.multi(hi)[a]);
            Some((lo, hi, ax.coord(ih) - ax.coord(il)))
        })
        .collect()
}

pub fn verify_conjugate(field: &FieldGrid) -> Result<ConjugateReport, FieldError> {
    let grid = &field.grid;
    for (axis, a) in grid.axes().iter().enumerate() {
        if a.count < 3 {
            return Err(FieldError::GridTooSmall { axis, count: a.count });
        }
    }
    let n = grid.dim();
    let mut rep = ConjugateReport {
        max_norm_mismatch: 0.0,
        max_orthogonality: 0.0,
        max_null_residual: 0.0,
        max_curl_asymmetry: 0.0,
        max_loop_residual: 0.0,
        max_identity_defect: 0.0,
        mean_grad_f_sq: 0.0,
        interior_cells: 0,
    };
    let mut sum_grad_f_sq = 0.0;

    for c in (0..grid.len()).filter(|&c| grid.is_interior(c)) {
        let stencil = central_stencil(grid, c).expect("interior");

        let hs: Option<Vec<Complex>> =
            stencil.iter().map(|&(lo, hi, w)| Some((field.h[hi]? - field.h[lo]?) / w)).collect();
        if let (Some(dh), Some(_)) = (hs, field.h[c]) {
            let gf: Vec<f64> = dh.iter().map(|z| z.re).collect();
            let gg: Vec<f64> = dh.iter().map(|z| z.im).collect();
            let nf2: f64 = gf.iter().map(|v| v * v).sum();
            let ng2: f64 = gg.iter().map(|v| v * v).sum();
            let dot: f64 = gf.iter().zip(&gg).map(|(a, b)| a * b).sum();
            let nullr = null_residual(&dh);
            rep.max_norm_mismatch = rep.max_norm_mismatch.max((nf2.sqrt() - ng2.sqrt()).abs());
            rep.max_orthogonality = rep.max_orthogonality.max(dot.abs());
            rep.max_null_residual = rep.max_null_residual.max(nullr.norm());
            let identity = c64(nf2 - ng2, 2.0 * dot);
            let scale = nf2 + ng2;
            if scale > 0.0 {
                rep.max_identity_defect = rep.max_identity_defect.max((identity - nullr).norm() / scale);
            }
            sum_grad_f_sq += nf2;
            rep.interior_cells += 1;
        }

        let gs: Option<Vec<StencilPair>> = stencil
            .iter()
            .map(|&(lo, hi, w)| Some((field.grad_h[lo].as_ref()?, field.grad_h[hi].as_ref()?, w)))
            .collect();
        if let Some(gs) = gs {
            // jac[a][b] = ∂_b (∇h)_a
            let jac = |a: usize, b: usize| (gs[b].1[a] - gs[b].0[a]) / gs[b].2;
            for a in 0..n {
                for b in a + 1..n {
                    rep.max_curl_asymmetry = rep.max_curl_asymmetry.max((jac(a, b) - jac(b, a)).norm());
                }
            }
        }
    }
    if rep.interior_cells == 0 {
        return Err(FieldError::NoInteriorStencil);
    }
    rep.mean_grad_f_sq = sum_grad_f_sq / rep.interior_cells as f64;

    for c in 0..grid.len() {
        let (Some(hc), Some(_)) = (field.h[c], field.grad_h[c].as_ref()) else { continue };
        for a in 0..n {
            if let Some(nb) = grid.step(c, a, true) {
                if let (Some(hn), Some(_)) = (field.h[nb], field.grad_h[nb].as_ref()) {
                    let defect = (hn - hc - edge_integral(grid, &field.grad_h, c, nb)).norm();
                    rep.max_loop_residual = rep.max_loop_residual.max(defect);
                }
            }
        }
    }
    Ok(rep)
}
