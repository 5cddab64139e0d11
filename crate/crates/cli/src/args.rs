use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "moyal", version, about = "Phase-space quantum mechanics of time-dependent oscillators")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

/// Flags shared by every subcommand. Unset flags fall back to the config
/// file, then to built-in defaults.
#[derive(Debug, Clone, Default, Args)]
pub struct Global {
    /// Reduced Planck constant [default: 1]
    #[arg(long, global = true)]
    pub hbar: Option<f64>,
    /// Model preset: sho, ck or tdf (verify also accepts a comma list or `all`) [default: sho]
    #[arg(long, global = true)]
    pub model: Option<String>,
    /// Model parameter override, repeatable
    #[arg(long = "param", global = true, value_name = "KEY=VALUE")]
    pub params: Vec<String>,
    /// Shorthand for --param m0=VALUE
    #[arg(long, global = true)]
    pub m0: Option<String>,
    /// Shorthand for --param gamma0=VALUE
    #[arg(long, global = true)]
    pub gamma0: Option<String>,
    /// Shorthand for --param omega0=VALUE
    #[arg(long, global = true)]
    pub omega0: Option<String>,
    /// Nodes per phase-space axis
    #[arg(long, global = true, value_name = "N")]
    pub grid: Option<usize>,
    /// Output path or file stem
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Output format [default: csv, json for verify]
    #[arg(long, global = true, value_enum)]
    pub format: Option<FormatArg>,
    /// Worker threads
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Flat key = value file; flags override its entries
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Diagonal Wigner functions W_n of the invariant
    Wigner(WignerArgs),
    /// Star exponential of the oscillator Hamiltonian
    Starexp(StarexpArgs),
    /// Evolve a Wigner function read from a file
    Evolve(EvolveArgs),
    /// Scaled time tau(t) of the selected model
    Tau(TauArgs),
    /// Lewis-Riesenfeld invariant at a phase-space point, or its drift
    Invariant(InvariantArgs),
    /// Run the verification suites and emit a report
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FrameArg {
    /// Scaled coordinates (xi, pi)
    Xi,
    /// Original coordinates (x, p) at --time
    X,
}

#[derive(Debug, Args)]
pub struct WignerArgs {
    /// Level or inclusive range: 3, 0..3 or 0..=3
    #[arg(long, allow_hyphen_values = true)]
    pub n: String,
    #[arg(long, value_enum, default_value = "xi")]
    pub frame: FrameArg,
    /// Time of the pullback for --frame x
    #[arg(long, default_value_t = 0.0)]
    pub time: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Route {
    Closed,
    Propagator,
    Fourier,
}

impl Route {
    pub fn name(self) -> &'static str {
        match self {
            Route::Closed => "closed",
            Route::Propagator => "propagator",
            Route::Fourier => "fourier",
        }
    }
}

#[derive(Debug, Args)]
pub struct StarexpArgs {
    /// Scaled time tau
    #[arg(long, allow_negative_numbers = true)]
    pub tau: f64,
    /// Routes to evaluate, comma separated
    #[arg(long, value_enum, value_delimiter = ',', default_value = "closed")]
    pub route: Vec<Route>,
    /// Print the interior relative difference of every route against the first
    #[arg(long)]
    pub diff: bool,
    /// Abel factor of the Fourier-Dirichlet route
    #[arg(long, default_value_t = 0.999)]
    pub abel_r: f64,
    /// Truncation order of the Fourier-Dirichlet route
    #[arg(long, default_value_t = 400)]
    pub n_max: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Spectral three-shear rotation
    Rotation,
    /// Bilinear resampling of the rotation
    Bilinear,
    /// Star conjugation by the star exponential
    Conjugation,
}

#[derive(Debug, Args)]
pub struct EvolveArgs {
    /// Input Wigner function in (xi, pi), CSV or JSON
    #[arg(long = "in", value_name = "PATH")]
    pub input: PathBuf,
    /// Scaled time tau
    #[arg(long, allow_negative_numbers = true, conflicts_with = "t", required_unless_present = "t")]
    pub tau: Option<f64>,
    /// Physical time; converted to tau with the model's auxiliary equation
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long, value_enum, default_value = "rotation")]
    pub method: Method,
}

#[derive(Debug, Args)]
pub struct TauArgs {
    /// Physical time
    #[arg(long)]
    pub t: f64,
    /// Rows of the (t, rho, rho', tau) table written to --out
    #[arg(long, default_value_t = 201)]
    pub samples: usize,
}

#[derive(Debug, Args)]
pub struct InvariantArgs {
    #[arg(long, allow_negative_numbers = true, requires = "p")]
    pub x: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "x")]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub t: f64,
    /// Relative drift along five classical trajectories over [0, 10]
    #[arg(long)]
    pub drift: bool,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// Suites to run, comma separated or repeated [default: all]
    #[arg(long, value_delimiter = ',')]
    pub suite: Vec<String>,
    /// Relative offset of the engine's hbar from the reference value
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub inject_hbar_mismatch: f64,
    /// Seed of the random polynomial cases
    #[arg(long)]
    pub seed: Option<u64>,
}
