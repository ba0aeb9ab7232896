use thiserror::Error;

/// Errors raised anywhere in the diagonalization and spectral-matrix pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("atom {0} has no definition in this transcript")]
    UndefinedAtom(String),

    #[error("jet order exhausted: need {needed} derivative(s), have order {available}")]
    InsufficientJetOrder { needed: usize, available: usize },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("operation not representable as a matrix polynomial: {0}")]
    NotPolynomial(String),

    #[error("input matrix has a nonzero diagonal (max |v_ii| = {0:e})")]
    NonzeroDiagonal(f64),

    #[error("bound invalid: {0}")]
    InvalidBound(String),

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("oracle series not converged: tail {tail:e} exceeds tolerance with {terms} terms")]
    SeriesTail { tail: f64, terms: usize },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, stage: &'static str) -> Error {
        Error::Stage { stage, source: Box::new(self) }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
