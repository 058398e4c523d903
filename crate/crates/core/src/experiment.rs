//! Experiment configuration, single runs, and parameter sweeps.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{Hierarchy, HierarchySummary, LevelParams};
use crate::krylov::{pcg, SolveReport, DEFAULT_MAXIT, DEFAULT_TOL};
use crate::mm;
use crate::problems::{
    build_closed_fieldline, build_rotated_aniso, load_system, AnisoParams, FieldParams,
    LeastSquaresSystem,
};
use crate::sparse::norm2;

/// Header of the sweep table.
pub const CSV_HEADER: &str =
    "value,iterations,rho,iters_to_tenth,op_complexity,levels,setup_s,solve_s";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemKind {
    RotatedAniso,
    ClosedFieldline,
    Mtx,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RhsKind {
    /// `A s` for the smooth target `s = sin(πx) sin(πy)` (generated problems)
    /// or `A·1` / the given vector (Matrix Market input).
    Default,
    /// Uniform in `[-1, 1]` from `seed`.
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Epsilon,
    /// Total unknowns of a square grid.
    N,
    Theta,
    Kpar,
}

/// Everything needed to reproduce one solve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub problem: ProblemKind,
    pub nx: usize,
    pub ny: usize,
    pub epsilon: f64,
    pub theta: f64,
    pub kpar: f64,
    pub kperp: f64,
    pub dt: f64,
    pub g_path: Option<PathBuf>,
    pub rhs_path: Option<PathBuf>,
    pub rhs: RhsKind,
    pub seed: u64,
    pub c_min: Vec<usize>,
    pub n_agg: usize,
    pub kappa: f64,
    pub l_max: usize,
    pub n_coarse: usize,
    /// RAS pre-smoothing and RAS-T post-smoothing sweeps per level.
    pub sweeps: usize,
    pub tol: f64,
    pub maxit: usize,
    pub output: Option<PathBuf>,
    pub format: OutputFormat,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let lp = LevelParams::default();
        Self {
            problem: ProblemKind::RotatedAniso,
            nx: 64,
            ny: 64,
            epsilon: 1.0,
            theta: 0.0,
            kpar: 1e4,
            kperp: 1.0,
            dt: 1e-3,
            g_path: None,
            rhs_path: None,
            rhs: RhsKind::Default,
            seed: 0,
            c_min: lp.c_min,
            n_agg: lp.n_agg,
            kappa: lp.kappa,
            l_max: lp.l_max,
            n_coarse: lp.n_coarse,
            sweeps: lp.pre_sweeps,
            tol: DEFAULT_TOL,
            maxit: DEFAULT_MAXIT,
            output: None,
            format: OutputFormat::Json,
        }
    }
}

impl ExperimentConfig {
    /// Reads a JSON or TOML config, chosen by file extension.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        let is_toml = path.extension().is_some_and(|e| e == "toml");
        if is_toml {
            toml::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
        } else {
            serde_json::from_str(&text)
                .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
        }
    }

    pub fn level_params(&self) -> LevelParams {
        LevelParams {
            l_max: self.l_max,
            n_coarse: self.n_coarse,
            n_agg: self.n_agg,
            kappa: self.kappa,
            c_min: self.c_min.clone(),
            pre_sweeps: self.sweeps,
            post_sweeps: self.sweeps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.level_params().validate()?;
        if !(self.tol > 0.0 && self.tol < 1.0) || self.maxit == 0 {
            return Err(Error::Input(format!(
                "need 0 < tol < 1 and maxit >= 1 (got {}, {})",
                self.tol, self.maxit
            )));
        }
        if self.problem == ProblemKind::Mtx && self.g_path.is_none() {
            return Err(Error::Input("problem mtx needs a factor path".into()));
        }
        Ok(())
    }

    /// Assembles the system described by the config.
    pub fn build_system(&self) -> Result<LeastSquaresSystem> {
        let mut sys = match self.problem {
            ProblemKind::RotatedAniso => build_rotated_aniso(&AnisoParams::new(
                self.nx,
                self.ny,
                self.epsilon,
                self.theta,
            ))?,
            ProblemKind::ClosedFieldline => build_closed_fieldline(&FieldParams {
                nx: self.nx,
                ny: self.ny,
                kpar: self.kpar,
                kperp: self.kperp,
                dt: self.dt,
            })?,
            ProblemKind::Mtx => {
                let g = self
                    .g_path
                    .as_ref()
                    .ok_or_else(|| Error::Input("problem mtx needs a factor path".into()))?;
                load_system(g, self.rhs_path.as_deref())?
            }
        };
        if self.rhs == RhsKind::Random {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            sys.rhs = (0..sys.n()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        }
        Ok(sys)
    }

    /// Copy with one sweep axis set to `value`.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> Result<Self> {
        let mut c = self.clone();
        match axis {
            SweepAxis::Epsilon => c.epsilon = value,
            SweepAxis::Theta => c.theta = value,
            SweepAxis::Kpar => c.kpar = value,
            SweepAxis::N => {
                let side = value.sqrt().round();
                if !(value >= 1.0) || side * side != value {
                    return Err(Error::Input(format!("N = {value} is not a perfect square")));
                }
                c.nx = side as usize;
                c.ny = side as usize;
            }
        }
        Ok(c)
    }
}

/// A system together with its hierarchy, ready for repeated solves.
pub struct Solver {
    pub system: LeastSquaresSystem,
    pub hierarchy: Hierarchy,
    pub setup_seconds: f64,
}

impl Solver {
    pub fn new(system: LeastSquaresSystem, params: &LevelParams) -> Result<Self> {
        let start = Instant::now();
        let hierarchy = Hierarchy::setup(&system.g, &system.a, params)?;
        let setup_seconds = start.elapsed().as_secs_f64();
        Ok(Self {
            system,
            hierarchy,
            setup_seconds,
        })
    }

    /// V-cycle preconditioned CG on `A x = b`, with `A` applied as `Gᵀ(Gx)`.
    pub fn solve(&self, b: &[f64], tol: f64, maxit: usize) -> Result<(Vec<f64>, SolveReport)> {
        if b.len() != self.system.n() {
            return Err(Error::Dim(format!(
                "rhs has length {}, system has {}",
                b.len(),
                self.system.n()
            )));
        }
        let (x, mut report) = pcg(
            |v| Ok(self.system.apply_factored(v)),
            |v| self.hierarchy.apply(v),
            b,
            tol,
            maxit,
        )?;
        report.operator_complexity = self.hierarchy.operator_complexity();
        report.setup_seconds = self.setup_seconds;
        Ok((x, report))
    }
}

/// Output of [`run`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub label: String,
    pub n: usize,
    pub config: ExperimentConfig,
    pub solve: SolveReport,
    #[serde(with = "crate::float_serde")]
    pub final_relative_residual: f64,
    pub hierarchy: HierarchySummary,
    pub warnings: Vec<String>,
}

impl RunReport {
    pub fn row(&self, value: f64) -> SweepRow {
        SweepRow::from_report(value, &self.solve, self.hierarchy.n_levels)
    }
}

/// Builds the system and hierarchy and runs PCG.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let system = config.build_system()?;
    info!(
        "{}: n = {}, nnz(G) = {}, nnz(A) = {}",
        system.label,
        system.n(),
        system.g.nnz(),
        system.a.nnz()
    );
    let b = system.rhs.clone();
    let solver = Solver::new(system, &config.level_params())?;
    let (x, solve) = solver.solve(&b, config.tol, config.maxit)?;
    let ax = solver.system.apply_factored(&x);
    let res: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
    Ok(RunReport {
        label: solver.system.label.clone(),
        n: solver.system.n(),
        config: config.clone(),
        final_relative_residual: norm2(&res) / norm2(&b),
        hierarchy: solver.hierarchy.summary(),
        warnings: solver.system.warnings.clone(),
        solve,
    })
}

/// One line of a sweep table. Failed rows carry `converged = false` and the
/// error message; their numeric fields are NaN where no value exists.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub iterations: usize,
    #[serde(with = "crate::float_serde")]
    pub rho: f64,
    #[serde(with = "crate::float_serde")]
    pub iters_to_tenth: f64,
    #[serde(with = "crate::float_serde")]
    pub op_complexity: f64,
    pub levels: usize,
    #[serde(with = "crate::float_serde")]
    pub setup_s: f64,
    #[serde(with = "crate::float_serde")]
    pub solve_s: f64,
    pub converged: bool,
    pub error: Option<String>,
}

impl SweepRow {
    pub fn from_report(value: f64, r: &SolveReport, levels: usize) -> Self {
        Self {
            value,
            iterations: r.iterations,
            rho: r.avg_conv_factor,
            iters_to_tenth: r.iters_to_tenth,
            op_complexity: r.operator_complexity,
            levels,
            setup_s: r.setup_seconds,
            solve_s: r.solve_seconds,
            converged: r.converged,
            error: None,
        }
    }

    fn failed(value: f64, e: &Error) -> Self {
        Self {
            value,
            iterations: 0,
            rho: f64::NAN,
            iters_to_tenth: f64::NAN,
            op_complexity: f64::NAN,
            levels: 0,
            setup_s: f64::NAN,
            solve_s: f64::NAN,
            converged: false,
            error: Some(e.to_string()),
        }
    }
}

/// Runs `config` once per value of `axis`. Rows that fail are recorded and
/// the sweep carries on.
pub fn sweep(
    config: &ExperimentConfig,
    axis: SweepAxis,
    values: &[f64],
    parallel: bool,
) -> Vec<SweepRow> {
    let one = |&v: &f64| match config.with_axis(axis, v).and_then(|c| run(&c)) {
        Ok(rep) => {
            info!(
                "{axis:?} = {v}: {} iterations, rho = {:.3}",
                rep.solve.iterations, rep.solve.avg_conv_factor
            );
            rep.row(v)
        }
        Err(e) => {
            warn!("{axis:?} = {v} failed: {e}");
            SweepRow::failed(v, &e)
        }
    };
    if parallel {
        values.par_iter().map(one).collect()
    } else {
        values.iter().map(one).collect()
    }
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.value,
            r.iterations,
            r.rho,
            r.iters_to_tenth,
            r.op_complexity,
            r.levels,
            r.setup_s,
            r.solve_s
        );
    }
    out
}

/// Writes `G` and the right-hand side of `config`'s system as Matrix Market files.
pub fn export_system(
    config: &ExperimentConfig,
    g_path: &Path,
    rhs_path: Option<&Path>,
) -> Result<()> {
    let sys = config.build_system()?;
    mm::write_matrix(g_path, &sys.g)?;
    if let Some(p) = rhs_path {
        mm::write_vector(p, &sys.rhs)?;
    }
    Ok(())
}
