use thiserror::Error;

use crate::solvers::Equation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("sampled function is not finite at t = {t} (node {index})")]
    Sample { index: usize, t: f64 },

    #[error("grid error: {0}")]
    Grid(String),

    #[error("parity error: {0}")]
    Parity(String),

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("polynomial degree {degree} exceeds the supported maximum {max}")]
    Degree { degree: usize, max: usize },

    #[error("no real {k}th root of negative value {value} at t = {t}")]
    NonRealRoot { k: u32, value: f64, t: f64 },

    #[error("iteration did not converge in {iters} steps (last sup-norm delta {last_delta:e})")]
    MaxItersExceeded { iters: usize, last_delta: f64 },

    #[error("degenerate initial guess: {0}")]
    DegenerateGuess(String),

    #[error("zero at t = {location} has multiplicity {sigma}, which violates sigma < {limit}")]
    MultiplicityViolation {
        location: f64,
        sigma: u32,
        limit: f64,
    },

    #[error("exponent window error: {0}")]
    Window(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("even power p = {p} rejected for the {equation} equation: {reason}")]
    EvenPower {
        p: u32,
        equation: Equation,
        reason: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("malformed profile file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Stable machine-readable identifier used in JSON reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Sample { .. } => "sample_error",
            Error::Grid(_) => "grid_error",
            Error::Parity(_) => "parity_error",
            Error::Domain(_) => "domain_error",
            Error::Degree { .. } => "degree_error",
            Error::NonRealRoot { .. } => "non_real_root",
            Error::MaxItersExceeded { .. } => "max_iters_exceeded",
            Error::DegenerateGuess(_) => "degenerate_guess",
            Error::MultiplicityViolation { .. } => "multiplicity_violation",
            Error::Window(_) => "window_error",
            Error::Precondition(_) => "precondition_error",
            Error::EvenPower { .. } => "even_power_rejected",
            Error::Config(_) => "config_error",
            Error::Format(_) => "format_error",
            Error::Io(_) => "io_error",
            Error::Csv(_) => "csv_error",
        }
    }

    /// True for failures caused by invalid input rather than numerics or IO.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::EvenPower { .. }
                | Error::Config(_)
                | Error::DegenerateGuess(_)
                | Error::Domain(_)
                | Error::Grid(_)
                | Error::Precondition(_)
                | Error::Degree { .. }
        )
    }
}
