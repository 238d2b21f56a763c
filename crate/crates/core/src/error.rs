use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid {entity} {id}: {message}")]
    Semantic {
        entity: &'static str,
        id: String,
        message: String,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("singular reduced susceptance matrix in island with reference bus {reference_bus}")]
    SingularNetwork { reference_bus: u32 },

    #[error("infeasible base case: {0}")]
    InfeasibleBase(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn semantic(entity: &'static str, id: impl ToString, message: impl Into<String>) -> Self {
        Error::Semantic {
            entity,
            id: id.to_string(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
