use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),

    #[error("config {path}: {source}")]
    ConfigParse {
        path: String,
        #[source]
        source: toml::de::Error,
    },

    #[error("cannot serialize resolved config: {0}")]
    ConfigWrite(#[from] toml::ser::Error),

    #[error("output: {0}")]
    Io(#[from] std::io::Error),

    #[error("summary: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Core(#[from] epitaxy_core::Error),
}

impl CliError {
    /// Solver-side failures are reported as data; everything else is a usage
    /// or environment problem.
    pub fn is_numerical(&self) -> bool {
        use epitaxy_core::Error as E;
        matches!(
            self,
            CliError::Core(E::Precondition(_) | E::NoBracket(_) | E::NotConverged(_) | E::SingularSystem(_))
        )
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
