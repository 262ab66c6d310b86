use thiserror::Error;

/// Errors raised across the simulation, identification and detection layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} = {value} is outside its domain [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("non-finite value in `{term}`")]
    NonFinite { term: &'static str },

    #[error("integration failed at t = {t} s: {source}")]
    Integration { t: f64, source: Box<Error> },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("kinetics error at the {electrode} electrode: {reason}")]
    Kinetics {
        electrode: &'static str,
        reason: String,
    },

    #[error("insufficient state-of-charge coverage: {covered:.3} of [0, 1] (need {required:.2})")]
    Coverage { covered: f64, required: f64 },

    #[error("piecewise linearization needs more than {max_segments} segments at tolerance {tolerance} V")]
    Resolution { tolerance: f64, max_segments: usize },

    #[error("OCV curve is not monotonically increasing: {0}")]
    NotMonotone(String),

    #[error("observer synthesis failed: {0}")]
    Synthesis(String),

    #[error("Lyapunov equation is ill-conditioned: {0}")]
    Conditioning(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("estimate V_s = {v_s} lies outside segment {segment} ({lo}, {hi}]")]
    Segment {
        segment: usize,
        v_s: f64,
        lo: f64,
        hi: f64,
    },

    #[error("measurement error: {0}")]
    Measurement(String),

    #[error("parse error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse { line: Option<usize>, message: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at_time(self, t: f64) -> Self {
        match self {
            e @ Error::Integration { .. } => e,
            e => Error::Integration {
                t,
                source: Box::new(e),
            },
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

/// Returns `value` if finite, otherwise a [`Error::NonFinite`] naming `term`.
#[inline]
pub(crate) fn finite(term: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NonFinite { term })
    }
}
