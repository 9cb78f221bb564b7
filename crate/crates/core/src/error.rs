use thiserror::Error;

/// Errors raised anywhere in the simulator.
///
/// The variants split into two families that the CLI maps onto distinct exit
/// codes: configuration/validation problems (the scenario is not admissible)
/// and numerical failures (the scenario is fine but a solver did not converge).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("potential profile invariant violated: {0}")]
    ProfileInvariant(String),

    #[error("turning point at z = {z:.17e}: E - V = {kinetic:.17e} does not exceed m(1 + delta) = {threshold:.17e}")]
    TurningPoint { z: f64, kinetic: f64, threshold: f64 },

    #[error("z = {z} lies outside the tabulated range [{lo}, {hi}]")]
    OutOfTableRange { z: f64, lo: f64, hi: f64 },

    #[error("classically forbidden: kappa^2 = {0:.17e} < 0")]
    Forbidden(f64),

    #[error("t = {t} outside trajectory span [{lo}, {hi}]")]
    OutOfSpan { t: f64, lo: f64, hi: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("quadrature did not reach tolerance: value {value:.6e}, error estimate {error:.3e}, intervals {intervals}")]
    Quadrature { value: f64, error: f64, intervals: usize },

    #[error("ODE solver failed at x = {x:.6e}: {reason}")]
    Ode { x: f64, reason: String },

    #[error("oscillatory integrand needs {panels} panels (budget {budget}); reduce k below about {k_max:.4e}")]
    Resolution { panels: usize, budget: usize, k_max: f64 },

    #[error("spectral tail not converged: tail fraction {tail_fraction:.3e} at k = {k:.4e}")]
    SpectralTail { tail_fraction: f64, k: f64 },

    #[error("numerical consistency failure: {0}")]
    Consistency(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for errors that mean the input scenario/config is not admissible.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::ProfileInvariant(_)
                | Error::TurningPoint { .. }
                | Error::OutOfTableRange { .. }
                | Error::Forbidden(_)
                | Error::OutOfSpan { .. }
                | Error::Config(_)
        )
    }

    pub(crate) fn param(name: &str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name: name.to_string(), reason: reason.into() }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
