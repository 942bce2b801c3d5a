mod commands;
mod config;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use config::{RawConfig, RunConfig};

#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Core(adiabatic_core::Error),
    Io(String),
}

impl From<adiabatic_core::Error> for CliError {
    fn from(e: adiabatic_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "invalid input: {m}"),
            CliError::Core(e) if e.is_numerical() => write!(f, "numerical failure: {e}"),
            CliError::Core(e) => write!(f, "invalid input: {e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "adiabatic", version, about = "Adiabatic connection, holonomy and curvature experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    flags: Flags,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Spectral connection A at a point
    Connection,
    /// Shift operator D and first-order level shifts
    Shift,
    /// Finite-horizon time average of the Maurer-Cartan form
    TimeAverage,
    /// Transport operator along an open path (--point to --end)
    Transport,
    /// Holonomy of a closed loop
    Holonomy,
    /// Discrete Wilson-loop phases of a closed loop
    Wilson,
    /// Yang-Mills curvature and per-level Berry curvature at a point
    Curvature,
    /// Berry curvature on a 2D parameter slice (CSV)
    CurvatureMap,
    /// Berry phases as surface integrals of the curvature
    BerrySurface,
    /// Surface-ordered lasso product against the boundary holonomy
    NastCheck,
    /// Fixed-time Maurer-Cartan holonomy around a loop
    Flatness,
    /// Driven evolution with or without the counterdiabatic term (CSV)
    Drive,
    /// Load a model and report its spectrum at a point
    ValidateModel,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Connection => "connection",
            Command::Shift => "shift",
            Command::TimeAverage => "time-average",
            Command::Transport => "transport",
            Command::Holonomy => "holonomy",
            Command::Wilson => "wilson",
            Command::Curvature => "curvature",
            Command::CurvatureMap => "curvature-map",
            Command::BerrySurface => "berry-surface",
            Command::NastCheck => "nast-check",
            Command::Flatness => "flatness",
            Command::Drive => "drive",
            Command::ValidateModel => "validate-model",
        }
    }
}

#[derive(Debug, Args)]
struct Flags {
    /// su2 | oscillator | random | file:<path>
    #[arg(long, global = true)]
    model: Option<String>,
    /// Spin of the su2 model
    #[arg(long, global = true)]
    l: Option<f64>,
    /// Coupling of the su2 model
    #[arg(long, global = true)]
    mu: Option<f64>,
    /// Fock truncation of the oscillator
    #[arg(long, global = true)]
    nmax: Option<usize>,
    /// Untrusted top levels of the oscillator
    #[arg(long, global = true)]
    buffer: Option<usize>,
    /// Dimension of the random model
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Parameter count of the random model
    #[arg(long, global = true)]
    n_params: Option<usize>,
    /// Term count of the random model
    #[arg(long, global = true)]
    terms: Option<usize>,
    /// Seed for randomized models
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Parameter point, comma separated
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    point: Option<Vec<f64>>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    b: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    theta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    phi: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    x: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    y: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    z: Option<f64>,
    /// End point of transport paths and drive schedules
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    end: Option<Vec<f64>>,
    /// triangle | cap | circle | rectangle | file:<path>
    #[arg(long = "loop", global = true)]
    loop_kind: Option<String>,
    /// Shorthand for `--loop cap --omega <OMEGA>`
    #[arg(long, global = true)]
    cap: Option<f64>,
    /// Solid angle of triangle and cap loops
    #[arg(long, global = true)]
    omega: Option<f64>,
    /// Polar angle of su2 circles
    #[arg(long, global = true)]
    theta0: Option<f64>,
    /// Radius of planar circles
    #[arg(long, global = true)]
    radius: Option<f64>,
    /// Two parameter indices spanning planar loops, rectangles and map slices
    #[arg(long, global = true, value_delimiter = ',')]
    axes: Option<Vec<usize>>,
    /// Range of the first axis for maps and rectangles
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    u_range: Option<Vec<f64>>,
    /// Range of the second axis for maps and rectangles
    #[arg(long, global = true, value_delimiter = ',', allow_negative_numbers = true)]
    v_range: Option<Vec<f64>>,
    /// Total midpoint steps along a path or loop
    #[arg(long, global = true)]
    steps: Option<usize>,
    /// Cells per direction of surfaces and map slices
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Surface-integral grid tolerance
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Time-average horizon T
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Maurer-Cartan time for flatness
    #[arg(long, global = true)]
    time: Option<f64>,
    /// Drive duration
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Drive integrator step
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// linear | smooth
    #[arg(long, global = true)]
    profile: Option<String>,
    /// Drive without the counterdiabatic term
    #[arg(long, global = true)]
    no_cd: bool,
    /// Level (ascending energy) for drive and berry-surface
    #[arg(long, global = true)]
    level: Option<usize>,
    /// Directory for report.json and CSV files
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// JSON file whose keys override the flags
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

fn pair<T: Copy>(name: &str, v: Option<Vec<T>>) -> Result<Option<[T; 2]>, CliError> {
    match v.as_deref() {
        None => Ok(None),
        Some([a, b]) => Ok(Some([*a, *b])),
        Some(other) => Err(CliError::Validation(format!("--{name} takes two comma-separated values, got {}", other.len()))),
    }
}

impl Flags {
    fn into_raw(self) -> Result<(RawConfig, Option<PathBuf>), CliError> {
        let (loop_kind, omega) = match self.cap {
            Some(o) => (Some("cap".to_string()), Some(o)),
            None => (self.loop_kind, self.omega),
        };
        let raw = RawConfig {
            model: self.model,
            l: self.l,
            mu: self.mu,
            nmax: self.nmax,
            buffer: self.buffer,
            dim: self.dim,
            n_params: self.n_params,
            terms: self.terms,
            seed: self.seed,
            point: self.point,
            b: self.b,
            theta: self.theta,
            phi: self.phi,
            x: self.x,
            y: self.y,
            z: self.z,
            end: self.end,
            loop_kind,
            omega,
            theta0: self.theta0,
            radius: self.radius,
            axes: pair("axes", self.axes)?,
            u_range: pair("u-range", self.u_range)?,
            v_range: pair("v-range", self.v_range)?,
            steps: self.steps,
            grid: self.grid,
            tol: self.tol,
            horizon: self.horizon,
            time: self.time,
            tau: self.tau,
            dt: self.dt,
            profile: self.profile,
            counterdiabatic: self.no_cd.then_some(false),
            level: self.level,
            out: self.out,
        };
        Ok((raw, self.config))
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    let started = Instant::now();
    let (raw, config_path) = cli.flags.into_raw()?;
    let raw = match config_path {
        Some(path) => {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            raw.overlay(&text)?
        }
        None => raw,
    };
    let cfg = RunConfig::resolve(cli.command.name(), raw)?;
    let out = commands::execute(&cfg)?;
    let report = report::Report::new(&cfg, out.results, out.files, started.elapsed().as_secs_f64());
    let json = report.to_json();
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        let path = dir.join("report.json");
        std::fs::write(&path, &json).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    Ok(json)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(json) => {
            let _ = writeln!(std::io::stdout(), "{json}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("adiabatic: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
