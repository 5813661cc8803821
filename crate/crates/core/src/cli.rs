//! Command-line front end.
//!
//! Exit status: 0 on success, 1 for invalid input or configuration, 2 when a
//! numerical computation fails.

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::bounds::{evaluate_class_bounds, BoundsError, ClassBoundConfig};
use crate::model::{Grid, ModelError, Scenario, ScenarioDocument};
use crate::output::{
    bound_check_csv, bound_curves_csv, density_csv, json, snapshot_name, totals_csv, OutputDir,
    OutputError,
};
use crate::solver::{simulate, SimulationTrace, SolverError};
use crate::spectral::{analyze, bound_curves, growth_rate, BoundCurves, SpectralError};
use crate::steady::{find_equilibrium, SteadyError, SteadyStateReport};

pub const THREADS_VAR: &str = "CLONAL_EVOLVE_THREADS";
pub const DEFAULT_N_AGE: usize = 241;
pub const DEFAULT_N_LEN: usize = 101;

#[derive(Debug, Parser)]
#[command(name = "clonal-evolve", version, about = "Telomere-structured tumour population model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Step the model to its horizon; writes totals.csv and snapshots.
    Simulate(RunArgs),
    /// Perron root, radius estimates and growth rate; writes spectrum.json.
    Spectrum(RunArgs),
    /// Positive equilibrium of the crowding model; writes steady.json.
    Steady(RunArgs),
    /// Compare band populations with the class bounds; writes bound_check.csv.
    Bounds(BoundsArgs),
    /// Run a reference example end to end.
    Example(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Scenario document (JSON).
    #[arg(long, conflicts_with = "id")]
    scenario: Option<PathBuf>,
    /// Reference example 1, 2 or 3.
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
    id: Option<u8>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    /// Age nodes, overriding the scenario (examples default to 241).
    #[arg(long)]
    n_age: Option<usize>,
    /// Telomere-length nodes, overriding the scenario (examples default to 101).
    #[arg(long)]
    n_len: Option<usize>,
    /// Snapshot spacing in time units.
    #[arg(long)]
    cadence: Option<f64>,
    /// Replace files already present in the output directory.
    #[arg(long)]
    overwrite: bool,
}

#[derive(Debug, Args)]
struct BoundsArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Telomere band width.
    #[arg(long, default_value_t = 0.2)]
    delta: f64,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Numerical(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Self::Input(_) => 1,
            Self::Numerical(_) => 2,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Input(m) | Self::Numerical(m) => m,
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<OutputError> for Failure {
    fn from(e: OutputError) -> Self {
        Self::Input(e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Model(_) | SolverError::ShapeMismatch { .. } => Self::Input(e.to_string()),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<SpectralError> for Failure {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::NoRoot { .. } => Self::Numerical(e.to_string()),
            _ => Self::Input(e.to_string()),
        }
    }
}

impl From<SteadyError> for Failure {
    fn from(e: SteadyError) -> Self {
        match e {
            SteadyError::Spectral(s) => s.into(),
            _ => Self::Numerical(e.to_string()),
        }
    }
}

impl From<BoundsError> for Failure {
    fn from(e: BoundsError) -> Self {
        match e {
            BoundsError::Overflow { .. } | BoundsError::EmptyFit { .. } => {
                Self::Numerical(e.to_string())
            }
            _ => Self::Input(e.to_string()),
        }
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit status. Diagnostics go to stderr.
pub fn parse_and_dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message());
            f.code()
        }
    }
}

fn threads() -> Result<usize, Failure> {
    match std::env::var(THREADS_VAR) {
        Err(_) => Ok(0),
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("{THREADS_VAR} must be a nonnegative integer, got {v:?}"))),
    }
}

fn load_document(args: &RunArgs) -> Result<ScenarioDocument, Failure> {
    let mut doc = match (&args.scenario, args.id) {
        (Some(path), _) => ScenarioDocument::read(path)?,
        (None, Some(id)) => ScenarioDocument::example(
            id,
            args.n_age.unwrap_or(DEFAULT_N_AGE),
            args.n_len.unwrap_or(DEFAULT_N_LEN),
        )?,
        (None, None) => {
            return Err(Failure::Input(
                "one of --scenario or --id is required".into(),
            ))
        }
    };
    if let Some(n) = args.n_age {
        doc.grid.n_age = n;
    }
    if let Some(n) = args.n_len {
        doc.grid.n_len = n;
    }
    if let Some(c) = args.cadence {
        doc.cadence = c;
    }
    Ok(doc)
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    scenario: &'a ScenarioDocument,
    grid: Grid,
    files: &'a [String],
    wall_time_seconds: f64,
}

#[derive(Serialize)]
struct SpectrumJson<'a> {
    radius: f64,
    lambda_star: Option<f64>,
    bounds: [f64; 4],
    irreducible: bool,
    iterations: usize,
    converged: bool,
    eigenvector: &'a [f64],
}

struct Spectrum {
    json: String,
    curves: BoundCurves,
}

fn spectrum(scenario: &Scenario) -> Result<Spectrum, Failure> {
    let report = analyze(&scenario.coefficients, &scenario.kernel)?;
    let lambda_star = match growth_rate(&scenario.coefficients, &scenario.kernel) {
        Ok(l) => Some(l),
        Err(SpectralError::NoRoot { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let curves = bound_curves(&scenario.coefficients, &scenario.kernel, 0.0)?;
    let json = json(&SpectrumJson {
        radius: report.radius,
        lambda_star,
        bounds: report.bounds,
        irreducible: report.irreducible,
        iterations: report.iterations,
        converged: report.converged,
        eigenvector: &report.eigenvector,
    });
    Ok(Spectrum { json, curves })
}

fn write_trace(out: &mut OutputDir, trace: &SimulationTrace) -> Result<(), Failure> {
    out.write("totals.csv", &totals_csv(trace))?;
    for (t, d) in &trace.snapshots {
        out.write(&snapshot_name(*t), &density_csv(d))?;
    }
    Ok(())
}

fn write_steady(out: &mut OutputDir, report: &SteadyStateReport) -> Result<(), Failure> {
    out.write("steady.json", &json(report))?;
    if let Some(p) = &report.profile {
        out.write("profile.csv", &density_csv(p))?;
    }
    Ok(())
}

fn trace_files(trace: &SimulationTrace) -> Vec<String> {
    std::iter::once("totals.csv".to_string())
        .chain(trace.snapshots.iter().map(|(t, _)| snapshot_name(*t)))
        .collect()
}

fn run(command: Command) -> Result<(), Failure> {
    let started = Instant::now();
    let (name, args, delta) = match &command {
        Command::Simulate(a) => ("simulate", a, None),
        Command::Spectrum(a) => ("spectrum", a, None),
        Command::Steady(a) => ("steady", a, None),
        Command::Bounds(b) => ("bounds", &b.run, Some(b.delta)),
        Command::Example(a) => ("example", a, None),
    };
    if name == "example" && args.id.is_none() {
        return Err(Failure::Input("example needs --id <1|2|3>".into()));
    }
    let threads = threads()?;
    let doc = load_document(args)?;
    let mut scenario = doc.build()?;
    let mut out = OutputDir::create(&args.out, args.overwrite)?;

    match name {
        "simulate" => {
            let trace = simulate(&scenario)?;
            reserve(&out, &trace_files(&trace))?;
            write_trace(&mut out, &trace)?;
        }
        "spectrum" => {
            reserve(&out, &["spectrum.json".into(), "bound_curves.csv".into()])?;
            let s = spectrum(&scenario)?;
            out.write("spectrum.json", &s.json)?;
            out.write("bound_curves.csv", &bound_curves_csv(&s.curves))?;
        }
        "steady" => {
            reserve(&out, &["steady.json".into(), "profile.csv".into()])?;
            write_steady(&mut out, &find_equilibrium(&scenario)?)?;
        }
        "bounds" => {
            reserve(&out, &["bound_check.csv".into(), "bound_check.json".into()])?;
            let config = ClassBoundConfig::new(
                &scenario.coefficients,
                &scenario.kernel,
                delta.expect("bounds carries delta"),
            )?;
            scenario.bands = config.bands();
            let report = evaluate_class_bounds(&simulate(&scenario)?, &config)?;
            out.write("bound_check.csv", &bound_check_csv(&report.rows))?;
            out.write("bound_check.json", &json(&report))?;
        }
        _ => run_example(&scenario, &mut out, threads)?,
    }

    let files = out.written().to_vec();
    let manifest = Manifest {
        command: name,
        scenario: &doc,
        grid: scenario.grid,
        files: &files,
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    out.write("manifest.json", &json(&manifest))?;
    Ok(())
}

fn reserve(out: &OutputDir, names: &[String]) -> Result<(), Failure> {
    out.reserve(names.iter().map(String::as_str).chain(["manifest.json"]))?;
    Ok(())
}

type ExampleParts = (
    Result<SimulationTrace, Failure>,
    Result<Spectrum, Failure>,
    Option<Result<SteadyStateReport, Failure>>,
);

fn example_parts(scenario: &Scenario, threads: usize) -> Result<ExampleParts, Failure> {
    let steady = || {
        scenario
            .crowding
            .as_ref()
            .map(|_| find_equilibrium(scenario).map_err(Failure::from))
    };
    let sim = || simulate(scenario).map_err(Failure::from);
    if threads == 0 {
        return Ok((sim(), spectrum(scenario), steady()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Failure::Input(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        let (trace, (spec, st)) = rayon::join(sim, || rayon::join(|| spectrum(scenario), steady));
        (trace, spec, st)
    }))
}

fn run_example(scenario: &Scenario, out: &mut OutputDir, threads: usize) -> Result<(), Failure> {
    let (trace, spec, steady) = example_parts(scenario, threads)?;
    let (trace, spec) = (trace?, spec?);
    let steady = steady.transpose()?;
    let mut names = trace_files(&trace);
    names.extend(["spectrum.json".into(), "bound_curves.csv".into()]);
    if steady.is_some() {
        names.extend(["steady.json".into(), "profile.csv".into()]);
    }
    reserve(out, &names)?;
    write_trace(out, &trace)?;
    out.write("spectrum.json", &spec.json)?;
    out.write("bound_curves.csv", &bound_curves_csv(&spec.curves))?;
    if let Some(report) = &steady {
        write_steady(out, report)?;
    }
    Ok(())
}

/// Entry point used by the binary.
pub fn main_with_env() -> i32 {
    parse_and_dispatch(std::env::args_os())
}
