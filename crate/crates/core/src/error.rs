use std::io;

use thiserror::Error;

/// Every failure the toolkit can report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("edge orbit {index} is a loop: tail and head are orbit `{orbit}` with zero shift")]
    LoopEdge { index: usize, orbit: String },

    #[error("edge orbit {index} duplicates edge orbit {existing} (possibly reversed)")]
    DuplicateEdgeOrbit { index: usize, existing: usize },

    #[error("lattice is singular: |det| = {det:e} does not exceed {threshold:e}")]
    SingularLattice { det: f64, threshold: f64 },

    #[error("edge orbit {index} has zero length")]
    ZeroLengthEdge { index: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("unknown vertex orbit `{0}`")]
    UnknownOrbit(String),

    #[error("duplicate vertex orbit id `{0}`")]
    DuplicateOrbitId(String),

    #[error("invalid dimension {0}")]
    InvalidDimension(usize),

    #[error("rank is ambiguous: relative singular value {value:e} lies within a decade of the threshold {threshold:e}")]
    IllConditioned { value: f64, threshold: f64 },

    #[error("framework has no self-stress")]
    NoStress,

    #[error("self-stress space has dimension {0}, expected 1")]
    NonUniqueStress(usize),

    #[error("stress coefficient at edge orbit {0} vanishes")]
    ZeroPivot(usize),

    #[error("numerical failure: {0}")]
    NumericalFailure(String),

    #[error("flex space has dimension {0}; ray enumeration is limited to 6")]
    FlexDimensionTooLarge(usize),

    #[error("cone has a lineality space of dimension {0}")]
    NonPointedCone(usize),

    #[error("motion is not a flex: edge residual {residual:e} exceeds {tol:e}")]
    NotAFlex { residual: f64, tol: f64 },

    #[error("Newton corrector failed at step {step}: residual {residual:e}")]
    NewtonDivergence { step: usize, residual: f64 },

    #[error(
        "constraint Jacobian changed rank at step {step} (nullity {found}, expected {expected})"
    )]
    SingularJacobianAtPoint {
        step: usize,
        expected: usize,
        found: usize,
    },

    #[error("framework is not a member of the simplex family: {0}")]
    NotSimplexFamily(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by numerics rather than malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::IllConditioned { .. }
                | Error::NumericalFailure(_)
                | Error::NonPointedCone(_)
                | Error::NewtonDivergence { .. }
                | Error::SingularJacobianAtPoint { .. }
                | Error::NotAFlex { .. }
                | Error::FlexDimensionTooLarge(_)
                | Error::NoStress
                | Error::NonUniqueStress(_)
                | Error::ZeroPivot(_)
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io(_) | Error::Csv(_))
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
