use thiserror::Error;

use crate::profile::HermiteProfile;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {x} lies outside the domain [{lo}, {hi}]")]
    OutOfDomain { x: f64, lo: f64, hi: f64 },

    #[error("profile domain is ({lo}, {hi}); expected ({want_lo}, {want_hi})")]
    WrongDomain {
        lo: f64,
        hi: f64,
        want_lo: f64,
        want_hi: f64,
    },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The product P^{3/4} C^{1/4} is not differentiable when either factor vanishes.
    #[error("phi gradient is singular (potential = {potential:e}, curvature = {curvature:e})")]
    Singular { potential: f64, curvature: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("numerical failure: {message}")]
    Numerical {
        message: String,
        last: Option<Box<HermiteProfile>>,
    },

    #[error("all {} starts failed: {}", .0.len(), .0.join("; "))]
    AllStartsFailed(Vec<String>),

    #[error("layers overlap: {0}")]
    LayersOverlap(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    /// True for errors caused by bad input rather than by the numerics.
    pub fn is_argument_error(&self) -> bool {
        matches!(
            self,
            Error::Argument(_)
                | Error::OutOfDomain { .. }
                | Error::WrongDomain { .. }
                | Error::Precondition(_)
                | Error::LayersOverlap(_)
        )
    }
}
