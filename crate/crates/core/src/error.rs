use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),

    #[error("ambient dimension mismatch: {0} vs {1}")]
    Ambient(usize, usize),

    #[error("operator system is not contained in the algebra")]
    NotContained,

    #[error("closure invariant violated: {0}")]
    Closure(String),

    #[error("decomposition failed: {0}")]
    Decomposition(String),

    #[error("invalid block index {0}")]
    InvalidBlock(usize),

    #[error("numerically inconclusive: {0}")]
    Inconclusive(String),

    #[error("boundary ideals have no unique maximum")]
    NoUniqueMaximum,

    #[error("set of boundary representations is empty")]
    EmptyBoundary,

    #[error("power chain stalled at dimension {reached} below envelope dimension {envelope}")]
    PropagationStalled { reached: usize, envelope: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("ambient product {0} exceeds cap {1}")]
    TooLarge(usize, usize),
}

impl Error {
    /// True for failures caused by a numerical procedure not reaching a
    /// decision, as opposed to malformed input or a violated theorem.
    pub fn is_inconclusive(&self) -> bool {
        matches!(self, Error::Inconclusive(_) | Error::Decomposition(_))
    }
}
