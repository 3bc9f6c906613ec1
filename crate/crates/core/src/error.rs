use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain of a function (e.g. `digamma(0)`).
    #[error("domain error: {0}")]
    Domain(String),

    /// Vector or matrix dimensions disagree.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// Incompatible combination of family, prior, factor or observation.
    #[error("configuration error: {0}")]
    Config(String),

    /// Every component assigns zero density to this observation.
    #[error("observation {row} has zero density under every component")]
    DegenerateObservation { row: usize },

    /// A numerical invariant (simplex rows, positive parameters, ...) broke.
    #[error("numerical invariant violated: {0}")]
    Invariant(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("fit failed for K = {k}: {source}")]
    FitFailed {
        k: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
