use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {what} = {value} ({reason})")]
    Domain {
        what: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// Invalid configuration of a spec type (ensemble, quadrature, sweep...).
    #[error("invalid {what}: {reason}")]
    InvalidSpec { what: &'static str, reason: String },

    /// Adaptive quadrature hit its subdivision limit.
    #[error("quadrature did not converge: estimate {estimate:e}, error estimate {error:e} after {subdivisions} subdivisions")]
    QuadratureNonConvergence {
        estimate: f64,
        error: f64,
        subdivisions: usize,
    },

    /// The integrand produced a NaN or infinite value.
    #[error("integrand is not finite at x = {x}")]
    NonFiniteIntegrand { x: f64 },

    #[error("no sign change on [{lo}, {hi}]: f(lo) = {f_lo:e}, f(hi) = {f_hi:e}")]
    NoSignChange { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder exceeded {iterations} iterations (last bracket [{lo}, {hi}])")]
    MaxIterations { iterations: usize, lo: f64, hi: f64 },

    /// Operation only defined for one ensemble kind.
    #[error("operation requires the {expected} ensemble")]
    WrongKind { expected: &'static str },

    /// Extrema refinement brackets overlap at the given scan resolution.
    #[error("scan resolution {resolution} too coarse: refinement brackets overlap")]
    ResolutionTooCoarse { resolution: usize },

    /// The extrema pattern matches none of the known modal classes.
    #[error("unrecognized modal shape: {maxima} maxima, {minima} minima")]
    UnrecognizedShape { maxima: usize, minima: usize },

    /// A threshold search found no transition in its bracket.
    #[error("no transition found: {0}")]
    NoTransition(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of the numerical machinery, as opposed to bad input.
    pub fn is_numerical(&self) -> bool {
        !matches!(
            self,
            Error::Domain { .. } | Error::InvalidSpec { .. } | Error::WrongKind { .. } | Error::Io { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
