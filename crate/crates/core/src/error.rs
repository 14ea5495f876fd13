use std::path::PathBuf;

pub type Result<T, E = AuditError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum AuditError {
    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("encoding error: attribute {attribute} has no category index {index}")]
    Encoding { attribute: String, index: usize },

    #[error("degenerate neighbouring pair: {0}")]
    DegeneratePair(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("empty input: {0}")]
    Empty(String),

    #[error("incompatible combination: {0}")]
    Incompatible(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl AuditError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        AuditError::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        AuditError::Io {
            path: path.into(),
            source,
        }
    }

    /// True for errors caused by the user's configuration rather than by the
    /// audit itself; the CLI maps these to exit status 2.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            AuditError::Config { .. }
                | AuditError::Json(_)
                | AuditError::Incompatible(_)
                | AuditError::Schema(_)
        )
    }
}
