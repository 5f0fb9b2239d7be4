//! The JSON run artifact. Complex numbers are `[re, im]` pairs; floats are
//! written in shortest round-trip form, so reading an artifact back gives
//! bit-identical values.

use std::path::Path;

use conjugen::{
    AxisSpec, Backend, BranchGrid, CellFailure, CellOutcome, Complex, ConjugateReport, FailureKind, FieldGrid, GridSpec,
    HoloExpr, PhiVector, SolveResult,
};
use serde::{Deserialize, Serialize};

use crate::CliError;

pub type Pair = [f64; 2];

pub fn pair(z: Complex) -> Pair {
    [z.re, z.im]
}

pub fn unpair(p: Pair) -> Complex {
    Complex::new(p[0], p[1])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Artifact {
    pub manifest: Manifest,
    pub grid: GridRecord,
    pub cells: Vec<CellRecord>,
    pub report: Option<ReportRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub n: usize,
    pub backend: Backend,
    pub f: String,
    pub grid: String,
    pub base_cell: Option<usize>,
    pub solver: SolverManifest,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverManifest {
    pub tol_residual: f64,
    pub max_iters: usize,
    pub backtrack_factor: f64,
    pub max_halvings: u32,
    pub retries: usize,
    pub rng_seed: u64,
    pub max_condition: f64,
    pub seed_phi: Option<Vec<Pair>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub report: f64,
    pub max_failed_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridRecord {
    pub axes: Vec<AxisSpec>,
    pub spacing: Vec<f64>,
    pub cells: usize,
    pub solved: usize,
    pub failed: usize,
    /// Solved cells the integration could not reach from the base cell.
    pub unreached: usize,
    pub base_cell: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellRecord {
    pub index: Vec<usize>,
    pub x: Vec<f64>,
    pub phi: Option<Vec<Pair>>,
    pub residual: Option<f64>,
    pub iters: Option<usize>,
    pub grad_h: Option<Vec<Pair>>,
    pub h: Option<Pair>,
    pub failure: Option<FailureRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub kind: FailureKind,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Normalized {
    pub max_norm_mismatch: f64,
    pub max_orthogonality: f64,
    pub max_null_residual: f64,
    pub max_curl_asymmetry: f64,
    pub max_loop_residual: f64,
}

impl From<[f64; 5]> for Normalized {
    fn from(v: [f64; 5]) -> Self {
        Normalized {
            max_norm_mismatch: v[0],
            max_orthogonality: v[1],
            max_null_residual: v[2],
            max_curl_asymmetry: v[3],
            max_loop_residual: v[4],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReportRecord {
    pub raw: ConjugateReport,
    pub normalized: Normalized,
}

impl From<ConjugateReport> for ReportRecord {
    fn from(raw: ConjugateReport) -> Self {
        ReportRecord { raw, normalized: raw.normalized().into() }
    }
}

/// Per-cell records for a solved branch and its integrated field.
pub fn cell_records(branch: &BranchGrid, field: &FieldGrid) -> Vec<CellRecord> {
    let grid = &branch.grid;
    branch
        .cells
        .iter()
        .enumerate()
        .map(|(c, outcome)| {
            let mut rec = CellRecord {
                index: grid.multi(c),
                x: grid.point(c).coords().to_vec(),
                phi: None,
                residual: None,
                iters: None,
                grad_h: field.grad_h[c].as_ref().map(|g| g.iter().copied().map(pair).collect()),
                h: field.h[c].map(pair),
                failure: None,
            };
            match outcome {
                CellOutcome::Solved(s) => {
                    rec.phi = Some(s.phi.components().iter().copied().map(pair).collect());
                    rec.residual = Some(s.residual_norm);
                    rec.iters = Some(s.iterations);
                }
                CellOutcome::Failed(f) => {
                    rec.residual = f.residual_norm.filter(|r| r.is_finite());
                    rec.failure = Some(FailureRecord { kind: f.kind, detail: f.detail.clone() });
                }
            }
            rec
        })
        .collect()
}

pub fn write(path: &Path, artifact: &Artifact) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(artifact).map_err(|e| CliError::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn corrupt(path: &Path, msg: impl std::fmt::Display) -> CliError {
    CliError::Artifact(format!("{}: {msg}", path.display()))
}

/// Reads an artifact and checks that its cells match its grid.
pub fn read(path: &Path) -> Result<(Artifact, GridSpec), CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| corrupt(path, e))?;
    let art: Artifact = serde_json::from_str(&text).map_err(|e| corrupt(path, e))?;
    let grid = GridSpec::new(art.grid.axes.clone()).map_err(|e| corrupt(path, e))?;
    if art.cells.len() != grid.len() {
        return Err(corrupt(path, format!("grid has {} cells but {} are stored", grid.len(), art.cells.len())));
    }
    if grid.dim() != art.manifest.backend.dimension() {
        return Err(corrupt(path, "grid dimension does not match the backend"));
    }
    let k = art.manifest.backend.arity();
    for (c, cell) in art.cells.iter().enumerate() {
        if cell.index != grid.multi(c) {
            return Err(corrupt(path, format!("cell {c} has index {:?}, expected {:?}", cell.index, grid.multi(c))));
        }
        if cell.phi.as_ref().is_some_and(|p| p.len() != k) {
            return Err(corrupt(path, format!("cell {c}: phi must have {k} components")));
        }
        if cell.grad_h.as_ref().is_some_and(|g| g.len() != grid.dim()) {
            return Err(corrupt(path, format!("cell {c}: grad_h must have {} components", grid.dim())));
        }
    }
    if art.grid.base_cell >= grid.len() {
        return Err(corrupt(path, "base cell lies outside the grid"));
    }
    Ok((art, grid))
}

/// Rebuilds the stored field exactly as it was written.
pub fn to_field(art: &Artifact, grid: &GridSpec) -> Result<FieldGrid, CliError> {
    let grad = art.cells.iter().map(|c| c.grad_h.as_ref().map(|g| g.iter().copied().map(unpair).collect())).collect();
    let h = art.cells.iter().map(|c| c.h.map(unpair)).collect();
    FieldGrid::from_parts(grid.clone(), grad, h, art.grid.base_cell).map_err(|e| CliError::Artifact(e.to_string()))
}

/// Rebuilds the branch of solved φ.
pub fn to_branch(art: &Artifact, grid: &GridSpec) -> Result<BranchGrid, CliError> {
    let backend = art.manifest.backend;
    let cells = art
        .cells
        .iter()
        .enumerate()
        .map(|(c, rec)| match &rec.phi {
            Some(p) => {
                let phi = PhiVector::new(backend, p.iter().copied().map(unpair).collect())
                    .map_err(|e| CliError::Artifact(e.to_string()))?;
                Ok(CellOutcome::Solved(SolveResult {
                    phi,
                    residual_norm: rec.residual.unwrap_or(0.0),
                    iterations: rec.iters.unwrap_or(0),
                    point: grid.point(c),
                }))
            }
            None => Ok(CellOutcome::Failed(CellFailure {
                kind: rec.failure.as_ref().map_or(FailureKind::NoConvergence, |f| f.kind),
                detail: rec.failure.as_ref().map(|f| f.detail.clone()).unwrap_or_default(),
                residual_norm: rec.residual,
            })),
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    Ok(BranchGrid { backend, grid: grid.clone(), cells })
}

pub fn parse_f(art: &Artifact) -> Result<HoloExpr, CliError> {
    HoloExpr::parse(&art.manifest.f, art.manifest.backend.arity()).map_err(|e| CliError::Artifact(format!("stored F: {e}")))
}
