use thiserror::Error;

use crate::config::ConfigError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("{context}")]
    Model {
        context: String,
        #[source]
        source: bbt_core::Error,
    },
    #[error("{context}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest {0}")]
    Manifest(String),
    #[error("rerun does not reproduce the manifest: {0}")]
    NotReproduced(String),
}

impl CliError {
    /// 0 ok, 1 i/o, 2 config, 3 physics model, 4 fit, 5 reproduction mismatch.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Usage(_) | CliError::Manifest(_) => 2,
            CliError::Model { source, .. } if source.is_fit_failure() => 4,
            CliError::Model { .. } => 3,
            CliError::Io { .. } => 1,
            CliError::NotReproduced(_) => 5,
        }
    }
}

/// Attach a context line to module errors.
pub trait ModelContext<T> {
    fn context(self, context: &str) -> Result<T, CliError>;
}

impl<T, E: Into<bbt_core::Error>> ModelContext<T> for Result<T, E> {
    fn context(self, context: &str) -> Result<T, CliError> {
        self.map_err(|e| CliError::Model {
            context: context.to_owned(),
            source: e.into(),
        })
    }
}

pub fn io_context(context: impl Into<String>) -> impl FnOnce(std::io::Error) -> CliError {
    let context = context.into();
    move |source| CliError::Io { context, source }
}
