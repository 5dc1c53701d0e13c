use std::path::Path;

use thiserror::Error;

/// Process exit status on success.
pub const EXIT_OK: u8 = 0;
/// At least one theorem verdict failed.
pub const EXIT_VERIFICATION: u8 = 1;
/// Bad flags, bad input content, or a computation that could not complete.
pub const EXIT_USAGE: u8 = 2;
/// A file could not be read or written.
pub const EXIT_IO: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: rdm_core::Error,
    },

    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn core(context: impl Into<String>, source: rdm_core::Error) -> Self {
        CliError::Core {
            context: context.into(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => EXIT_IO,
            CliError::Core { source, .. } if is_io(source) => EXIT_IO,
            _ => EXIT_USAGE,
        }
    }
}

fn is_io(e: &rdm_core::Error) -> bool {
    match e {
        rdm_core::Error::Io(_) => true,
        rdm_core::Error::Csv(c) => c.is_io_error(),
        _ => false,
    }
}
