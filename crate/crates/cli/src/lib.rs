//! Library side of the `conjugen` command-line tool.
//!
//! [`run`] executes a parsed command and returns an [`Outcome`]; the binary
//! only maps outcomes and errors to exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | every check within tolerance |
//! | 1 | a tolerance was breached (artifacts are still written) |
//! | 2 | bad configuration, or a missing or corrupt artifact |
//! | 3 | no grid cell could be solved |

pub mod args;
pub mod artifact;
pub mod export;

use std::io::Write;
use std::path::{Path, PathBuf};

use conjugen::{
    continue_over_grid, integrate_h, linear_f_oracle, newton_solve, on_surface_check, verify_conjugate, Backend,
    ConjugateReport, FieldError, GridSpec, HoloExpr, RealPoint, SolveConfig, SolverError, SurfaceError,
};
use thiserror::Error;

use crate::args::{BackendArg, Cli, Command, HypersurfaceArgs, OracleArgs, SolveArgs, VerifyArgs};
use crate::artifact::{pair, Artifact, GridRecord, Manifest, ReportRecord, SolverManifest, Tolerances};

/// Environment variable capping the number of solver threads.
pub const THREADS_ENV: &str = "CONJUGEN_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("corrupt artifact: {0}")]
    Artifact(String),
    #[error("{0}")]
    Io(String),
    #[error("no grid cell could be solved ({cells} cells tried)")]
    AnchorFailure { cells: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::AnchorFailure { .. } => 3,
            _ => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Breach,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Breach => 1,
        }
    }

    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Breach
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

/// Validated configuration of a `solve` run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub backend: Backend,
    pub f_source: String,
    pub f: HoloExpr,
    pub grid: GridSpec,
    pub solver: SolveConfig,
    pub base_cell: Option<usize>,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub plotdata: Option<PathBuf>,
}

fn backend_from(n: Option<usize>, backend: BackendArg) -> Result<Backend, CliError> {
    match backend {
        BackendArg::General => {
            let n = n.ok_or_else(|| config_err("--n is required for the general backend"))?;
            if n < 3 {
                return Err(config_err("n must be ≥ 3"));
            }
            Backend::general(n).map_err(config_err)
        }
        BackendArg::Trilinear5 => match n {
            None | Some(5) => Ok(Backend::Trilinear5),
            Some(n) => Err(config_err(format!("the trilinear5 backend requires n = 5, got n = {n}"))),
        },
    }
}

/// Parses `re,im;re,im;…`; a lone `re` has zero imaginary part.
pub fn parse_complex_list(s: &str) -> Result<Vec<conjugen::Complex>, CliError> {
    s.split(';')
        .map(|part| {
            let nums: Vec<f64> = part
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| config_err(format!("bad complex value `{part}`"))))
                .collect::<Result<_, _>>()?;
            match nums[..] {
                [re] => Ok(conjugen::c64(re, 0.0)),
                [re, im] => Ok(conjugen::c64(re, im)),
                _ => Err(config_err(format!("bad complex value `{part}`"))),
            }
        })
        .collect()
}

/// Thread count from [`THREADS_ENV`], defaulting to the available parallelism.
pub fn threads_from_env() -> Result<usize, CliError> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(t),
            _ => Err(config_err(format!("{THREADS_ENV} must be an integer ≥ 1, got `{v}`"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |p| p.get())),
    }
}

impl RunConfig {
    pub fn from_args(a: &SolveArgs) -> Result<Self, CliError> {
        let backend = backend_from(a.n, a.backend)?;
        let f = HoloExpr::parse(&a.f, backend.arity()).map_err(|e| config_err(format!("F: {e}")))?;
        let grid: GridSpec = a.grid.parse().map_err(|e| config_err(format!("grid: {e}")))?;
        if grid.dim() != backend.dimension() {
            return Err(config_err(format!("grid has {} axes but n = {}", grid.dim(), backend.dimension())));
        }
        if let Some((axis, ax)) = grid.axes().iter().enumerate().find(|(_, ax)| ax.count < 3) {
            return Err(config_err(format!("grid axis {axis} has {} points; verification needs at least 3", ax.count)));
        }
        let seed_phi = a.seed_phi.as_deref().map(parse_complex_list).transpose()?;
        if let Some(s) = &seed_phi {
            if s.len() != backend.arity() {
                return Err(config_err(format!("seed-phi has {} components, expected {}", s.len(), backend.arity())));
            }
        }
        let solver = SolveConfig {
            tol_residual: a.tol_residual,
            max_iters: a.max_iters,
            retries: a.retries,
            rng_seed: a.rng_seed,
            seed_phi,
            threads: threads_from_env()?,
            ..SolveConfig::default()
        };
        solver.validate().map_err(config_err)?;
        if let Some(b) = a.base_cell {
            if b >= grid.len() {
                return Err(config_err(format!("base cell {b} lies outside the grid ({} cells)", grid.len())));
            }
        }
        for (name, v) in [("tol-report", a.tol_report), ("max-failed-fraction", a.max_failed_fraction)] {
            if v.is_nan() || v < 0.0 {
                return Err(config_err(format!("{name} must be ≥ 0")));
            }
        }
        Ok(RunConfig {
            backend,
            f_source: a.f.clone(),
            f,
            grid,
            solver,
            base_cell: a.base_cell,
            tolerances: Tolerances { report: a.tol_report, max_failed_fraction: a.max_failed_fraction },
            out: a.out.clone(),
            csv: a.csv.clone(),
            plotdata: a.plotdata.clone(),
        })
    }

    fn manifest(&self) -> Manifest {
        let s = &self.solver;
        Manifest {
            tool: "conjugen".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core_version: conjugen::VERSION.into(),
            n: self.backend.dimension(),
            backend: self.backend,
            f: self.f_source.clone(),
            grid: self.grid.to_string(),
            base_cell: self.base_cell,
            solver: SolverManifest {
                tol_residual: s.tol_residual,
                max_iters: s.max_iters,
                backtrack_factor: s.backtrack_factor,
                max_halvings: s.max_halvings,
                retries: s.retries,
                rng_seed: s.rng_seed,
                max_condition: s.max_condition,
                seed_phi: s.seed_phi.as_ref().map(|v| v.iter().copied().map(pair).collect()),
            },
            tolerances: self.tolerances,
        }
    }
}

/// The five report fields, raw and relative to mean |∇f|², in scientific notation.
pub fn format_report(rep: &ConjugateReport) -> String {
    let norm = rep.normalized();
    let mut out = String::new();
    for ((name, raw), rel) in ConjugateReport::FIELD_NAMES.iter().zip(rep.values()).zip(norm) {
        out.push_str(&format!("{name:<20} {raw:e}  (relative {rel:e})\n"));
    }
    out.push_str(&format!("{:<20} {:e}\n", "mean_grad_f_sq", rep.mean_grad_f_sq));
    out.push_str(&format!("{:<20} {}\n", "interior_cells", rep.interior_cells));
    out
}

fn report_passes(rep: &ConjugateReport, tol: f64) -> bool {
    rep.normalized().iter().all(|v| *v <= tol)
}

/// Everything a solve run produced, before it is written anywhere.
#[derive(Debug, Clone)]
pub struct SolveRun {
    pub artifact: Artifact,
    pub report: Option<ConjugateReport>,
    pub failed_fraction: f64,
    pub outcome: Outcome,
}

/// Solves, integrates and verifies without touching the filesystem.
pub fn execute_solve(cfg: &RunConfig) -> Result<SolveRun, CliError> {
    let branch = continue_over_grid(&cfg.f, cfg.backend, &cfg.grid, &cfg.solver).map_err(|e| match e {
        SolverError::AnchorFailure { cells } => CliError::AnchorFailure { cells },
        other => config_err(other),
    })?;
    let field = integrate_h(&branch, cfg.base_cell).map_err(config_err)?;
    let report = match verify_conjugate(&field) {
        Ok(r) => Some(r),
        Err(FieldError::NoInteriorStencil) => None,
        Err(e) => return Err(config_err(e)),
    };
    let bad = branch.failed_count() + field.unreached.len();
    let failed_fraction = bad as f64 / branch.cells.len() as f64;
    let pass = failed_fraction <= cfg.tolerances.max_failed_fraction
        && report.as_ref().is_some_and(|r| report_passes(r, cfg.tolerances.report));
    let artifact = Artifact {
        manifest: cfg.manifest(),
        grid: GridRecord {
            axes: cfg.grid.axes().to_vec(),
            spacing: cfg.grid.spacing(),
            cells: cfg.grid.len(),
            solved: branch.solved_count(),
            failed: branch.failed_count(),
            unreached: field.unreached.len(),
            base_cell: field.base_cell,
        },
        cells: artifact::cell_records(&branch, &field),
        report: report.map(ReportRecord::from),
    };
    Ok(SolveRun { artifact, report, failed_fraction, outcome: Outcome::from_pass(pass) })
}

fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn run_solve(a: &SolveArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let cfg = RunConfig::from_args(a)?;
    let run = execute_solve(&cfg)?;
    let g = &run.artifact.grid;
    let mut text = format!(
        "backend {}  grid {}  cells {}  solved {}  failed {}  unreached {}\n",
        cfg.backend,
        cfg.grid,
        g.cells,
        g.solved,
        g.failed,
        g.unreached
    );
    match &run.report {
        Some(r) => text.push_str(&format_report(r)),
        None => text.push_str("no interior cell has a full stencil; report unavailable\n"),
    }
    if run.failed_fraction > cfg.tolerances.max_failed_fraction {
        text.push_str(&format!(
            "failed fraction {:e} exceeds the cap {:e}\n",
            run.failed_fraction, cfg.tolerances.max_failed_fraction
        ));
    }
    if let Some(p) = &cfg.out {
        artifact::write(p, &run.artifact)?;
    }
    if let Some(p) = &cfg.csv {
        write_text(p, &export::csv(&cfg.grid, cfg.backend.arity(), &run.artifact.cells))?;
    }
    if let Some(p) = &cfg.plotdata {
        write_text(p, &export::plotdata(&cfg.grid, &run.artifact.cells))?;
    }
    text.push_str(if run.outcome == Outcome::Pass { "PASS\n" } else { "FAIL\n" });
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(run.outcome)
}

pub fn run_verify(a: &VerifyArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let (art, grid) = artifact::read(&a.artifact)?;
    let field = artifact::to_field(&art, &grid)?;
    let rep = verify_conjugate(&field).map_err(|e| CliError::Artifact(e.to_string()))?;
    let pass = report_passes(&rep, a.tol_report);
    let text = format!("{}{}\n", format_report(&rep), if pass { "PASS" } else { "FAIL" });
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome::from_pass(pass))
}

pub fn run_hypersurface(a: &HypersurfaceArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let (art, grid) = artifact::read(&a.artifact)?;
    if !matches!(art.manifest.backend, Backend::GeneralQuadratic { n: 3 | 4 }) {
        return Err(config_err(format!(
            "the hypersurface check is available for n = 3 and n = 4 only (artifact backend {})",
            art.manifest.backend
        )));
    }
    let f = artifact::parse_f(&art)?;
    let branch = artifact::to_branch(&art, &grid)?;
    let rep = on_surface_check(&branch, &f).map_err(|e| match e {
        SurfaceError::UnsupportedDimension(_) => config_err(e),
        other => CliError::Artifact(other.to_string()),
    })?;
    let mut text = format!("checked cells {}\n", rep.checked_cells);
    let pass = match &rep.maxima {
        None => {
            text.push_str("no solved cell to check\n");
            false
        }
        Some(maxima) => {
            let names: &[&str] = if maxima.len() == 1 { &["M3"] } else { &["M4a", "M4b"] };
            for (name, m) in names.iter().zip(maxima) {
                text.push_str(&format!(
                    "{name}: max normalized {:e} at cell {:?} x={:?}; max raw {:e} at cell {:?}\n",
                    m.max_normalized,
                    grid.multi(m.max_normalized_cell),
                    grid.point(m.max_normalized_cell).coords(),
                    m.max_raw,
                    grid.multi(m.max_raw_cell),
                ));
            }
            maxima.iter().all(|m| m.max_normalized <= a.tol)
        }
    };
    text.push_str(if pass { "PASS\n" } else { "FAIL\n" });
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome::from_pass(pass))
}

pub fn run_oracle(a: &OracleArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let backend = backend_from(a.n, a.backend)?;
    let coeffs = parse_complex_list(&a.a)?;
    if coeffs.len() != backend.arity() {
        return Err(config_err(format!("--a has {} coefficients, expected {}", coeffs.len(), backend.arity())));
    }
    let point: Vec<f64> = a
        .point
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| config_err(format!("bad coordinate `{t}`"))))
        .collect::<Result<_, _>>()?;
    if point.len() != backend.dimension() {
        return Err(config_err(format!("--point has {} coordinates, expected {}", point.len(), backend.dimension())));
    }
    let point = RealPoint::new(point);
    let exact = linear_f_oracle(&coeffs, backend, &point).map_err(config_err)?;
    // F = Σ a_j φ_j, with constants printed in round-trip form
    let src = coeffs
        .iter()
        .enumerate()
        .map(|(j, a)| format!("({:?} + {:?}*i)*phi{}", a.re, a.im, j + 1))
        .collect::<Vec<_>>()
        .join(" + ");
    let f = HoloExpr::parse(&src, backend.arity()).map_err(config_err)?;
    let mut text = String::new();
    let newton = newton_solve(&f, backend, &point, &SolveConfig::default());
    let pass = match &newton {
        Ok(sol) => {
            let diff = exact
                .components()
                .iter()
                .zip(sol.phi.components())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            for (j, (e, s)) in exact.components().iter().zip(sol.phi.components()).enumerate() {
                text.push_str(&format!("phi{}  oracle {:e}{:+e}i  newton {:e}{:+e}i\n", j + 1, e.re, e.im, s.re, s.im));
            }
            text.push_str(&format!("max difference {diff:e}  newton iterations {}\n", sol.iterations));
            diff <= a.tol
        }
        Err(e) => {
            text.push_str(&format!("newton failed: {e}\n"));
            false
        }
    };
    text.push_str(if pass { "PASS\n" } else { "FAIL\n" });
    out.write_all(text.as_bytes()).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome::from_pass(pass))
}

/// Runs one parsed command, writing human-readable output to `out`.
pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Solve(a) => run_solve(a, out),
        Command::Verify(a) => run_verify(a, out),
        Command::Hypersurface(a) => run_hypersurface(a, out),
        Command::Oracle(a) => run_oracle(a, out),
    }
}
