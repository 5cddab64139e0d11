use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("symbols live on different grids")]
    GridMismatch,

    #[error("symbol does not decay at the grid boundary: boundary/sup = {measured:.3e} (limit {limit:.1e})")]
    BoundaryDecay { measured: f64, limit: f64 },

    #[error(
        "grid is not aligned for the twisted convolution: shift quanta are {shift_x:.6} dx and {shift_p:.6} dp, both must be integers"
    )]
    NotAligned { shift_x: f64, shift_p: f64 },

    #[error("grid too coarse for the requested stencil: need at least {required} points per axis, have {n_x} x {n_p}")]
    Degenerate { required: usize, n_x: usize, n_p: usize },

    #[error("pole guard tripped at Omega*tau = {omega_tau}: distance to pole {distance:.3e} (guard {guard:.1e})")]
    Pole { omega_tau: f64, distance: f64, guard: f64 },

    #[error("complex Gaussian branch is ambiguous: Re(exponent) = {0:.3e} after damping")]
    BranchAmbiguity(f64),

    #[error("step size underflow at t = {t} (h = {h:.3e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("Wronskian drift {drift:.3e} exceeds {limit:.3e}")]
    WronskianDrift { drift: f64, limit: f64 },

    #[error("rho crossed zero near t = {t}")]
    RhoNonPositive { t: f64 },

    #[error("auxiliary-equation residual {residual:.3e} exceeds {limit:.3e}")]
    ResidualTooLarge { residual: f64, limit: f64 },

    #[error("quadrature failed to converge on [{a}, {b}] (estimated error {error:.3e})")]
    Quadrature { a: f64, b: f64, error: f64 },

    #[error("t = {t} outside the solution interval [{t0}, {t1}]")]
    OutsideInterval { t: f64, t0: f64, t1: f64 },

    #[error("interpolation point ({x}, {p}) lies outside the grid")]
    OutOfRange { x: f64, p: f64 },

    #[error("target grid [{target:.4}] exceeds the position grid coverage [{coverage:.4}]")]
    Coverage { target: f64, coverage: f64 },

    #[error("resampling pushed {fraction:.3e} of the mass off the grid")]
    Clipped { fraction: f64 },

    #[error("overdamped Caldirola-Kanai parameters: omega0^2 - gamma0^2/4 = {0} is not positive")]
    Overdamped(f64),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse: {0}")]
    Parse(String),
}

impl Error {
    /// Name of the numerical guard that tripped, or `None` for bad input.
    pub fn guard_name(&self) -> Option<&'static str> {
        Some(match self {
            Error::BoundaryDecay { .. } => "boundary_decay",
            Error::NotAligned { .. } => "not_aligned",
            Error::Degenerate { .. } => "degenerate_grid",
            Error::Pole { .. } => "pole",
            Error::BranchAmbiguity(_) => "branch_ambiguity",
            Error::StepSizeUnderflow { .. } => "step_size_underflow",
            Error::WronskianDrift { .. } => "wronskian_drift",
            Error::RhoNonPositive { .. } => "rho_non_positive",
            Error::ResidualTooLarge { .. } => "residual",
            Error::Quadrature { .. } => "quadrature",
            Error::OutOfRange { .. } => "out_of_range",
            Error::Coverage { .. } => "coverage",
            Error::Clipped { .. } => "clipped",
            Error::Overdamped(_) => "overdamped",
            _ => return None,
        })
    }

    /// Guards that signal a numerical limitation rather than bad input.
    pub fn is_numerical_guard(&self) -> bool {
        self.guard_name().is_some()
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
