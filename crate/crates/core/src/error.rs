use thiserror::Error;

use crate::asymptotics::PowerLawFit;

/// Which way a curvature computation degenerated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Singularity {
    /// Radii of curvature vanish (a corner, e.g. a Reuleaux vertex); S would be infinite.
    Corner,
    /// Radii of curvature blow up (a flat point, e.g. a superellipse axis); S and kappa vanish.
    Flat,
}

impl std::fmt::Display for Singularity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Singularity::Corner => f.write_str("corner"),
            Singularity::Flat => f.write_str("flat"),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid body: {0}")]
    InvalidBody(String),

    #[error("invalid direction: {0}")]
    InvalidDirection(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("support face in direction {direction:?} is not a single point (width {width:.3e})")]
    NonUniqueSupport { direction: Vec<f64>, width: f64 },

    #[error("singular curvature ({kind}) at direction {direction:?}")]
    SingularCurvature {
        direction: Vec<f64>,
        kind: Singularity,
    },

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("flat contact: fitted exponent {:.4} below threshold {threshold:.4}", fit.exponent)]
    FlatContact { fit: Box<PowerLawFit>, threshold: f64 },

    #[error("contact set G ∩ ∂(x+K) is not a single point ({} arc samples)", arc.len())]
    NonUniqueContact { arc: Vec<Vec<f64>> },

    #[error("K is not normalized: circumscribed ratio is {0}, expected 1")]
    NotNormalized(f64),

    #[error("postcondition violated: {0}")]
    Postcondition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    /// Stable snake_case name, as used by `expect` lists in experiment configs.
    pub fn code(&self) -> &'static str {
        match self {
            Error::InvalidBody(_) => "invalid_body",
            Error::InvalidDirection(_) => "invalid_direction",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonUniqueSupport { .. } => "non_unique_support",
            Error::SingularCurvature { .. } => "singular_curvature",
            Error::DegenerateFit(_) => "degenerate_fit",
            Error::FlatContact { .. } => "flat_contact",
            Error::NonUniqueContact { .. } => "non_unique_contact",
            Error::NotNormalized(_) => "not_normalized",
            Error::Postcondition(_) => "postcondition",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}
