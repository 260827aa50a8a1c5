use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of a routine.
    #[error("{func}: argument out of domain: {detail}")]
    Domain { func: &'static str, detail: String },

    /// A stated hypothesis of an operation does not hold for the given inputs.
    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("{what} failed to converge at index {index}")]
    NoConvergence { what: &'static str, index: usize },

    /// The discretization cannot resolve the requested quantity.
    #[error("resolution error: {0}")]
    Resolution(String),
}

impl Error {
    pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            func,
            detail: detail.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

/// Non-fatal numerical findings attached to a computed value.
#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// A state carries more mass near the end of its grid than allowed.
    Truncation {
        what: &'static str,
        tail_fraction: f64,
        limit: f64,
    },
    /// A sup search found its maximum too close to the edge of the search box.
    BoundaryDominated { boundary_value: f64, max_value: f64 },
    /// Spectral content is still significant at the spectral cutoff.
    SpectralCutoff { tail_fraction: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::Truncation {
                what,
                tail_fraction,
                limit,
            } => write!(
                f,
                "{what}: tail mass fraction {tail_fraction:.3e} exceeds {limit:.1e}"
            ),
            Warning::BoundaryDominated {
                boundary_value,
                max_value,
            } => write!(
                f,
                "sup search boundary value {boundary_value:.3e} is not below 10% of the maximum {max_value:.3e}"
            ),
            Warning::SpectralCutoff { tail_fraction } => {
                write!(f, "spectral tail fraction {tail_fraction:.3e} at cutoff")
            }
        }
    }
}

/// A computed value together with any numerical warnings raised while producing it.
#[derive(Debug, Clone)]
pub struct Checked<T> {
    pub value: T,
    pub warnings: Vec<Warning>,
}

impl<T> Checked<T> {
    pub fn clean(value: T) -> Self {
        Checked {
            value,
            warnings: Vec::new(),
        }
    }

    pub fn is_clean(&self) -> bool {
        self.warnings.is_empty()
    }

    pub fn map<U>(self, f: impl FnOnce(T) -> U) -> Checked<U> {
        Checked {
            value: f(self.value),
            warnings: self.warnings,
        }
    }
}
