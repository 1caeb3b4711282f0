//! The `hexwalk` command line.
//!
//! ```text
//! hexwalk dist     --n 6 --uniform [--engine closed-form] [--heatmap]
//! hexwalk moments  --n 10 --q0 0.5,0.25,0.25 --q1 0.2,0.3,0.5
//! hexwalk sample   --n 1000 --replicas 100000 --seed 7
//! hexwalk rate     --mode large --point 0.3 0
//! hexwalk rate     --mode moderate --grid -1:1:21,-1:1:21
//! hexwalk validate [--suite symmetry] [--m 4]
//! ```
//!
//! Exit codes: 0 success, 1 validation failure, 2 bad configuration,
//! 3 numerical failure.

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;

use crate::closed_form::ClosedForm;
use crate::deviations::{legendre, moderate_rate, rate_surface, Grid, RateMode};
use crate::engine::{Distribution, Engine};
use crate::error::{Error, Result};
use crate::io::{heatmap, write_distribution_csv, write_distribution_json, write_endpoints_csv, write_paths_csv, write_rate_surface_csv, TextScalar};
use crate::lattice::StepProbabilities;
use crate::moments::moments;
use crate::montecarlo::Sampler;
use crate::scalar::LogProb;
use crate::validation::{default_battery, validate, Case, Suite, ValidationConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hexwalk", version, about = "Random walk on the hexagonal lattice")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// State probabilities p_{j,k}(n) as a `j,k,p` table
    Dist(DistArgs),
    /// Exact mean, variance and covariance of S_n
    Moments(MomentArgs),
    /// Simulated endpoints or paths
    Sample(SampleArgs),
    /// Large or moderate deviation rate at a point or over a grid
    Rate(RateArgs),
    /// Run the cross-validation battery
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Class-0 probabilities `p0,p1,p2` (decimals or fractions)
    #[arg(long, value_name = "P0,P1,P2", conflicts_with = "uniform")]
    pub q0: Option<String>,
    /// Class-1 probabilities `p0,p1,p2`
    #[arg(long, value_name = "P0,P1,P2", conflicts_with = "uniform")]
    pub q1: Option<String>,
    /// Lattice spacing
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Every probability 1/3 (the default when no probabilities are given)
    #[arg(long)]
    pub uniform: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EngineKind {
    Exact,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Arith {
    /// Rational when every probability was given as a fraction, float otherwise
    Auto,
    Rational,
    Float,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Large,
    Moderate,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; standard output when absent
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, value_enum, default_value_t = EngineKind::Exact)]
    pub engine: EngineKind,
    #[arg(long, value_enum, default_value_t = Arith::Auto)]
    pub arith: Arith,
    /// Also print a grid of 100 p to standard error
    #[arg(long)]
    pub heatmap: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MomentArgs {
    #[arg(long)]
    pub n: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = 1)]
    pub replicas: u64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Emit every visited point as `replica,t,x,y`
    #[arg(long)]
    pub paths: bool,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct RateArgs {
    #[arg(long, value_enum, default_value_t = ModeArg::Large)]
    pub mode: ModeArg,
    /// A single velocity `x y`
    #[arg(long, num_args = 2, value_names = ["X", "Y"], allow_negative_numbers = true, conflicts_with = "grid")]
    pub point: Option<Vec<f64>>,
    /// `xmin:xmax:steps,ymin:ymax:steps`
    #[arg(long, allow_hyphen_values = true)]
    pub grid: Option<String>,
    /// Gradient tolerance of the Legendre solver
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Run one suite instead of all of them
    #[arg(long)]
    pub suite: Option<String>,
    /// Largest half-time for closed-form and symmetry checks
    #[arg(long, default_value_t = 8)]
    pub m: u64,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

impl ModelArgs {
    fn explicit(&self) -> bool {
        self.q0.is_some() || self.q1.is_some()
    }

    pub fn resolve(&self) -> Result<StepProbabilities> {
        match (&self.q0, &self.q1) {
            (None, None) => StepProbabilities::uniform().with_spacing(self.a),
            (Some(q0), Some(q1)) => StepProbabilities::parse(split3(q0)?, split3(q1)?, self.a),
            _ => Err(Error::invalid("give both --q0 and --q1, or neither")),
        }
    }

    fn all_fractions(&self) -> bool {
        match (&self.q0, &self.q1) {
            (Some(a), Some(b)) => a.split(',').chain(b.split(',')).all(|s| s.contains('/')),
            _ => true,
        }
    }
}

fn split3(s: &str) -> Result<[&str; 3]> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    <[&str; 3]>::try_from(parts).map_err(|_| Error::invalid(format!("`{s}` must list three probabilities")))
}

/// Maps an error to its exit code.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NumericalFailure { .. } => EXIT_NUMERICAL,
        _ => EXIT_CONFIG,
    }
}

/// Caps the global thread pool at `HEXWALK_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("HEXWALK_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::invalid(format!("HEXWALK_THREADS must be a positive integer, got `{v}`")))?;
    // a pool built earlier in the same process is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses `args` (program name first) and runs the command. Diagnostics go to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = write!(err, "{e}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            // help and version requests
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
    };
    if let Err(e) = configure_threads() {
        let _ = writeln!(err, "error: {e}");
        return EXIT_CONFIG;
    }
    match execute(&cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn execute(cmd: &Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match cmd {
        Command::Dist(a) => cmd_dist(a, out, err),
        Command::Moments(a) => cmd_moments(a, out),
        Command::Sample(a) => cmd_sample(a, out),
        Command::Rate(a) => cmd_rate(a, out),
        Command::Validate(a) => cmd_validate(a, out),
    }
}

fn with_output(o: &OutputArgs, stdout: &mut dyn Write, f: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    match &o.out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            f(&mut w)?;
            w.flush()?;
            Ok(())
        }
        None => f(stdout),
    }
}

fn emit<S: TextScalar>(d: &Distribution<S>, format: Format, w: &mut dyn Write) -> Result<()> {
    match format {
        Format::Csv => write_distribution_csv(d, w),
        Format::Json => write_distribution_json(d, w),
    }
}

fn distribution<S: TextScalar>(a: &DistArgs, q: &StepProbabilities) -> Result<Distribution<S>> {
    match a.engine {
        EngineKind::Exact => Engine::<S>::new(q)?.run(Distribution::initial(), a.n),
        EngineKind::ClosedForm => Ok(ClosedForm::<S>::new(q, (a.n / 2).max(1))?.distribution(a.n)?.0),
    }
}

fn cmd_dist(a: &DistArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let q = a.model.resolve()?;
    let format = a.output.format.unwrap_or(Format::Csv);
    let arith = match a.arith {
        Arith::Auto if q.is_exact() && a.model.all_fractions() => Arith::Rational,
        Arith::Auto => Arith::Float,
        other => other,
    };
    let map = match arith {
        Arith::Rational => {
            let d = distribution::<BigRational>(a, &q)?;
            with_output(&a.output, out, |w| emit(&d, format, w))?;
            heatmap(&d)
        }
        Arith::Log => {
            if a.engine == EngineKind::ClosedForm {
                return Err(Error::UnsupportedParameters("the closed form runs in rational or float arithmetic".into()));
            }
            let d = Engine::<LogProb>::new(&q)?.run(Distribution::initial(), a.n)?.to_float();
            with_output(&a.output, out, |w| emit(&d, format, w))?;
            heatmap(&d)
        }
        _ => {
            let d = distribution::<f64>(a, &q)?;
            with_output(&a.output, out, |w| emit(&d, format, w))?;
            heatmap(&d)
        }
    };
    if a.heatmap {
        write!(err, "{map}")?;
    }
    Ok(EXIT_OK)
}

fn cmd_moments(a: &MomentArgs, out: &mut dyn Write) -> Result<i32> {
    let q = a.model.resolve()?;
    if a.output.format == Some(Format::Csv) {
        return Err(Error::invalid("moments are emitted as JSON"));
    }
    let m = moments(a.n, &q);
    with_output(&a.output, out, |w| {
        serde_json::to_writer_pretty(&mut *w, &m)?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(EXIT_OK)
}

fn cmd_sample(a: &SampleArgs, out: &mut dyn Write) -> Result<i32> {
    let q = a.model.resolve()?;
    if a.replicas == 0 {
        return Err(Error::invalid("need at least one replica"));
    }
    let sampler = Sampler::new(&q, a.seed);
    let format = a.output.format.unwrap_or(Format::Csv);
    match (a.paths, format) {
        (false, Format::Csv) => {
            let points = sampler.endpoints(a.n, a.replicas);
            with_output(&a.output, out, |w| write_endpoints_csv(&points, w))?;
        }
        (true, Format::Csv) => {
            let paths: Vec<_> = (0..a.replicas)
                .map(|r| sampler.path(a.n, r).iter().map(|v| v.position(q.spacing())).collect())
                .collect();
            with_output(&a.output, out, |w| write_paths_csv(&paths, w))?;
        }
        (paths, Format::Json) => {
            let samples: Vec<_> = (0..a.replicas).map(|r| sampler.sample(a.n, r, paths)).collect();
            with_output(&a.output, out, |w| {
                serde_json::to_writer(&mut *w, &samples)?;
                writeln!(w)?;
                Ok(())
            })?;
        }
    }
    Ok(EXIT_OK)
}

fn cmd_rate(a: &RateArgs, out: &mut dyn Write) -> Result<i32> {
    let q = a.model.resolve()?;
    let mode = match a.mode {
        ModeArg::Large => RateMode::Large,
        ModeArg::Moderate => RateMode::Moderate,
    };
    match (&a.point, &a.grid) {
        (Some(p), None) => {
            if a.output.format == Some(Format::Csv) {
                return Err(Error::invalid("a single point is emitted as JSON"));
            }
            let r = match mode {
                RateMode::Large => legendre(p[0], p[1], &q, a.tol)?,
                RateMode::Moderate => moderate_rate(p[0], p[1], &q),
            };
            with_output(&a.output, out, |w| {
                serde_json::to_writer_pretty(&mut *w, &r)?;
                writeln!(w)?;
                Ok(())
            })?;
        }
        (None, Some(g)) => {
            let grid: Grid = g.parse()?;
            if !(a.tol > 0.0) {
                return Err(Error::invalid("tolerance must be positive"));
            }
            let surface = rate_surface(mode, &grid, &q, a.tol);
            match a.output.format.unwrap_or(Format::Csv) {
                Format::Csv => with_output(&a.output, out, |w| write_rate_surface_csv(&surface, w))?,
                Format::Json => {
                    let rows: Vec<serde_json::Value> = surface
                        .iter()
                        .map(|s| match &s.result {
                            Ok(r) => serde_json::to_value(r).expect("rate results serialize"),
                            Err(e) => serde_json::json!({ "point": s.point, "finite": false, "error": e.to_string() }),
                        })
                        .collect();
                    with_output(&a.output, out, |w| {
                        serde_json::to_writer_pretty(&mut *w, &rows)?;
                        writeln!(w)?;
                        Ok(())
                    })?;
                }
            }
        }
        _ => return Err(Error::invalid("give exactly one of --point or --grid")),
    }
    Ok(EXIT_OK)
}

fn cmd_validate(a: &ValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let cases = if a.model.explicit() || a.model.uniform {
        vec![Case {
            name: "custom".into(),
            model: a.model.resolve()?,
        }]
    } else {
        default_battery()
    };
    let suites = match &a.suite {
        Some(s) => vec![s.parse::<Suite>()?],
        None => Suite::ALL.to_vec(),
    };
    if a.m == 0 {
        return Err(Error::invalid("--m must be at least 1"));
    }
    let cfg = ValidationConfig {
        m: a.m,
        ..ValidationConfig::default()
    };
    let report = validate(&cases, &suites, &cfg)?;
    with_output(&a.output, out, |w| {
        serde_json::to_writer_pretty(&mut *w, &report)?;
        writeln!(w)?;
        Ok(())
    })?;
    Ok(if report.passed { EXIT_OK } else { EXIT_VALIDATION })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("hexwalk").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn time_zero_distribution() {
        let (code, out, _) = run_capture(&["dist", "--n", "0"]);
        assert_eq!(code, 0);
        assert_eq!(out, "j,k,p\n0,0,1\n");
    }

    #[test]
    fn bad_row_sum_is_a_config_error() {
        let (code, _, err) = run_capture(&["moments", "--n", "3", "--q0", "0.5,0.2,0.2", "--q1", "0.2,0.3,0.5"]);
        assert_eq!(code, EXIT_CONFIG);
        assert!(err.contains("error"));
    }

    #[test]
    fn unknown_flag_is_rejected() {
        let (code, _, _) = run_capture(&["dist", "--n", "2", "--bogus"]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn one_sided_model_is_rejected() {
        let (code, _, _) = run_capture(&["dist", "--n", "2", "--q0", "1/3,1/3,1/3"]);
        assert_eq!(code, EXIT_CONFIG);
    }

    #[test]
    fn negative_point_coordinates_parse() {
        let (code, out, _) = run_capture(&["rate", "--mode", "moderate", "--point", "-1", "1"]);
        assert_eq!(code, 0);
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!((v["value"].as_f64().unwrap() - 2.0).abs() < 1e-12);
    }
}
