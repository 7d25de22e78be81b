use thiserror::Error;

/// Errors produced across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("degenerate pose: {0}")]
    DegeneratePose(String),

    #[error("contour parameter {value} outside domain [{lo}, {hi}]")]
    ParamOutOfDomain {
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("too few contour points: got {got}, need at least {need}")]
    TooFewPoints { got: usize, need: usize },

    #[error("polygon is not simple: segments {0} and {1} intersect")]
    SelfIntersecting(usize, usize),

    #[error("non-finite integrand value at ({x}, {y})")]
    NonFiniteIntegrand { x: f64, y: f64 },

    #[error("view factor {0} outside [0, 1)")]
    ViewFactorRange(f64),

    #[error("non-positive facet area in discretized contour")]
    BadFacet,

    #[error("source too cold: eps1*T1^4 - T3^4 = {0} <= 0")]
    SourceTooCold(f64),

    #[error("matrix is rank deficient; use a positive damping")]
    RankDeficient,

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("too many objects: {objects} > {dof} controlled degrees of freedom")]
    TooManyObjects { objects: usize, dof: usize },

    #[error("timestamp {got} is not after previous sample {last}")]
    NonMonotonicTime { got: f64, last: f64 },

    #[error("numerical divergence: {0}")]
    Divergence(String),

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("empty grid")]
    EmptyGrid,

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
