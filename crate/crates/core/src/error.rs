use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid mesh parameter: {0}")]
    InvalidMesh(String),

    #[error("element index {index} out of range (mesh has {count} elements)")]
    ElementOutOfRange { index: usize, count: usize },

    #[error("quadrature exactness degree {requested} exceeds supported maximum {max}")]
    QuadratureDegree { requested: usize, max: usize },

    #[error("singular {what} matrix on element {element}")]
    SingularLocalMatrix { what: &'static str, element: usize },

    #[error("singular system: pivot {pivot} (dof {dof}) is {value:e}, diagonal {diagonal:e}")]
    SingularSystem {
        /// Position in the elimination order.
        pivot: usize,
        /// Free-DoF index of the offending pivot.
        dof: usize,
        value: f64,
        diagonal: f64,
    },

    #[error("iterative solver did not converge after {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("level {level} (1/h = {label}): {source}")]
    AtLevel {
        level: usize,
        label: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Strips any level annotation.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtLevel { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn is_singular(&self) -> bool {
        matches!(self.root(), Error::SingularSystem { .. })
    }
}
