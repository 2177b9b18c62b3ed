use thiserror::Error;

use crate::scalar::Backend;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("backend mismatch: {0} vs {1}")]
    BackendMismatch(Backend, Backend),

    #[error("not representable on the exact backend: {0}")]
    NotRepresentable(String),

    #[error("cannot parse scalar from {0:?}")]
    Parse(String),

    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("sequence index {0} is undefined (only -1 is allowed below zero)")]
    NegativeIndex(i64),

    #[error("could not find {wanted} distinct lattice nodes within {tried} candidates")]
    DegenerateLattice { wanted: usize, tried: usize },

    #[error("duplicate interpolation node")]
    DuplicateNode,

    #[error("interpolation needs at least one point")]
    EmptyInterpolation,

    #[error("division by a linear factor left a nonzero remainder")]
    NonzeroRemainder,

    #[error("moment horizon exceeded: need degree {needed}, have {available}")]
    HorizonExceeded { needed: usize, available: usize },

    #[error("pair is not admissible: d_{n} = 0")]
    NotAdmissible { n: usize },

    #[error("functional is not regular: zero norm at level {n}")]
    NotRegular { n: usize },

    #[error("recurrence coefficient C_{n} vanishes")]
    VanishingC { n: usize },

    #[error("restriction violated for {family} at n = {n}")]
    Restriction { family: String, n: usize },

    #[error("{what}: recursion and closed form disagree at k = {k} (residual {residual:e})")]
    Inconsistent { what: String, k: usize, residual: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("i/o: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::InvalidInput(e.to_string())
    }
}
