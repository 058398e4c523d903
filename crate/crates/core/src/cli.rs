//! Command-line front end: `run`, `sweep` and `export`.
//!
//! Exit codes are 0 on success, 1 when a solve fails or does not converge,
//! and 2 for usage errors. `LSAMGDD_THREADS` caps the worker pool.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};

use crate::error::{Error, Result};
use crate::experiment::{
    export_system, rows_to_csv, run, sweep, ExperimentConfig, OutputFormat, ProblemKind, RhsKind,
    RunReport, SweepAxis,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Environment variable that sets the number of worker threads.
pub const THREADS_ENV: &str = "LSAMGDD_THREADS";

#[derive(Parser, Debug)]
#[command(
    name = "lsamgdd",
    version,
    about = "Least-squares AMG with Schwarz smoothers for A = GᵀG"
)]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build one system, set up the hierarchy and solve.
    Run(CommonArgs),
    /// Repeat `run` over values of one parameter.
    Sweep {
        #[arg(long, value_enum)]
        axis: AxisArg,
        /// Comma-separated values; `pi` is accepted, e.g. `pi/16,3pi/8`.
        #[arg(long, value_delimiter = ',', value_parser = parse_real, required = true)]
        values: Vec<f64>,
        /// Solve rows concurrently.
        #[arg(long)]
        parallel: bool,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Write the factor (and right-hand side) of a generated problem as Matrix Market.
    Export {
        #[arg(long = "out-g")]
        out_g: PathBuf,
        #[arg(long = "out-rhs")]
        out_rhs: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ProblemArg {
    RotatedAniso,
    ClosedFieldline,
    Mtx,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AxisArg {
    Epsilon,
    N,
    Theta,
    Kpar,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum RhsArg {
    Default,
    Random,
}

/// Flags shared by all subcommands. Unset flags fall back to `--config`, then
/// to the built-in defaults.
#[derive(Args, Debug, Default, Clone)]
pub struct CommonArgs {
    /// JSON or TOML file with an experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub problem: Option<ProblemArg>,
    #[arg(long)]
    pub nx: Option<usize>,
    #[arg(long)]
    pub ny: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    pub epsilon: Option<f64>,
    /// Rotation angle in radians; `pi/6` style input is accepted.
    #[arg(long, value_parser = parse_real, allow_hyphen_values = true)]
    pub theta: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub kpar: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub kperp: Option<f64>,
    #[arg(long, value_parser = parse_real)]
    pub dt: Option<f64>,
    /// Factor `G` in Matrix Market format (problem `mtx`).
    #[arg(long = "g")]
    pub g: Option<PathBuf>,
    /// Right-hand side in Matrix Market format (problem `mtx`).
    #[arg(long = "rhs-file")]
    pub rhs_file: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub rhs: Option<RhsArg>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Minimum coarsening ratio per level, e.g. `2,3`.
    #[arg(long = "cmin", value_delimiter = ',')]
    pub c_min: Option<Vec<usize>>,
    #[arg(long = "n-agg")]
    pub n_agg: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    pub kappa: Option<f64>,
    #[arg(long = "l-max")]
    pub l_max: Option<usize>,
    #[arg(long = "n-coarse")]
    pub n_coarse: Option<usize>,
    /// Smoothing sweeps before and after the coarse correction.
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long, value_parser = parse_real)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub maxit: Option<usize>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

impl CommonArgs {
    pub fn to_config(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(p) = self.problem {
            c.problem = match p {
                ProblemArg::RotatedAniso => ProblemKind::RotatedAniso,
                ProblemArg::ClosedFieldline => ProblemKind::ClosedFieldline,
                ProblemArg::Mtx => ProblemKind::Mtx,
            };
        }
        macro_rules! take {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = self.$field.clone() { c.$target = v; })*
            };
        }
        take!(nx => nx, ny => ny, epsilon => epsilon, theta => theta, kpar => kpar, kperp => kperp, dt => dt,
              seed => seed, c_min => c_min, n_agg => n_agg, kappa => kappa, l_max => l_max,
              n_coarse => n_coarse, sweeps => sweeps, tol => tol, maxit => maxit);
        if self.g.is_some() {
            c.g_path = self.g.clone();
        }
        if self.rhs_file.is_some() {
            c.rhs_path = self.rhs_file.clone();
        }
        if self.output.is_some() {
            c.output = self.output.clone();
        }
        if let Some(r) = self.rhs {
            c.rhs = match r {
                RhsArg::Default => RhsKind::Default,
                RhsArg::Random => RhsKind::Random,
            };
        }
        if let Some(f) = self.format {
            c.format = match f {
                FormatArg::Json => OutputFormat::Json,
                FormatArg::Csv => OutputFormat::Csv,
            };
        }
        Ok(c)
    }
}

/// Parses a real number, allowing multiples of `pi` such as `pi/6`, `3pi/8`
/// or `0.5*pi`.
pub fn parse_real(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim().to_ascii_lowercase();
    if let Ok(v) = t.parse::<f64>() {
        return Ok(v);
    }
    let bad = || format!("cannot parse {s:?} as a number");
    let (num, den) = match t.split_once('/') {
        Some((n, d)) => (n, d.parse::<f64>().map_err(|_| bad())?),
        None => (t.as_str(), 1.0),
    };
    let coef = num
        .strip_suffix("pi")
        .ok_or_else(bad)?
        .trim_end_matches('*');
    let coef = match coef {
        "" => 1.0,
        "-" => -1.0,
        c => c.parse::<f64>().map_err(|_| bad())?,
    };
    Ok(coef * std::f64::consts::PI / den)
}

fn usage_error(msg: &str) -> i32 {
    eprintln!("error: {msg}\n");
    eprintln!("{}", Cli::command().render_usage());
    EXIT_USAGE
}

fn configure_threads() -> std::result::Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {raw:?}"))?;
    // A pool may already exist when called twice in one process; the first one wins.
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

fn emit(config: &ExperimentConfig, body: &str, summary: &str) -> Result<()> {
    match &config.output {
        Some(path) => {
            std::fs::write(path, body)?;
            println!("{summary}");
            println!("report written to {}", path.display());
        }
        None => print!("{body}"),
    }
    Ok(())
}

fn run_report_body(config: &ExperimentConfig, rep: &RunReport) -> Result<String> {
    Ok(match config.format {
        OutputFormat::Json => {
            serde_json::to_string_pretty(rep).map_err(|e| Error::Format(e.to_string()))? + "\n"
        }
        OutputFormat::Csv => rows_to_csv(&[rep.row(rep.n as f64)]),
    })
}

fn check_config(config: &ExperimentConfig) -> Option<i32> {
    if config.problem == ProblemKind::Mtx && config.g_path.is_none() {
        return Some(usage_error("problem `mtx` requires --g <path>"));
    }
    if let Err(e) = config.validate() {
        return Some(usage_error(&e.to_string()));
    }
    None
}

fn execute(command: Command) -> i32 {
    let common = match &command {
        Command::Run(c) | Command::Sweep { common: c, .. } | Command::Export { common: c, .. } => {
            c.clone()
        }
    };
    let config = match common.to_config() {
        Ok(c) => c,
        Err(e) => return usage_error(&e.to_string()),
    };
    if let Some(code) = check_config(&config) {
        return code;
    }
    let result = match command {
        Command::Run(_) => run(&config).and_then(|rep| {
            let summary = format!(
                "{}: n = {}, levels = {}, iterations = {}, rho = {:.4}, iters_to_tenth = {:.3}, op_complexity = {:.3}, converged = {}",
                rep.label,
                rep.n,
                rep.hierarchy.n_levels,
                rep.solve.iterations,
                rep.solve.avg_conv_factor,
                rep.solve.iters_to_tenth,
                rep.hierarchy.operator_complexity,
                rep.solve.converged
            );
            emit(&config, &run_report_body(&config, &rep)?, &summary)?;
            Ok(rep.solve.converged)
        }),
        Command::Sweep {
            axis, values, parallel, ..
        } => {
            let axis = match axis {
                AxisArg::Epsilon => SweepAxis::Epsilon,
                AxisArg::N => SweepAxis::N,
                AxisArg::Theta => SweepAxis::Theta,
                AxisArg::Kpar => SweepAxis::Kpar,
            };
            let rows = sweep(&config, axis, &values, parallel);
            let ok = rows.iter().all(|r| r.converged);
            let body = match config.format {
                OutputFormat::Csv => rows_to_csv(&rows),
                OutputFormat::Json => match serde_json::to_string_pretty(&rows) {
                    Ok(s) => s + "\n",
                    Err(e) => return usage_error(&e.to_string()),
                },
            };
            let failed = rows.iter().filter(|r| !r.converged).count();
            emit(&config, &body, &format!("{axis:?} sweep: {} rows, {failed} failed", rows.len())).map(|_| ok)
        }
        Command::Export { out_g, out_rhs, .. } => export_system(&config, &out_g, out_rhs.as_deref()).map(|_| true),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => {
            eprintln!("solver did not converge");
            EXIT_FAILURE
        }
        Err(e) => {
            eprintln!("{e}");
            EXIT_FAILURE
        }
    }
}

/// Parses `args` (program name first) and runs the command, returning the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .try_init();
    if let Err(msg) = configure_threads() {
        return usage_error(&msg);
    }
    execute(cli.command)
}
