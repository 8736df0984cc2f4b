use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] audiovat::Error),
    #[error("line {line}: {message}")]
    Manifest { line: u64, message: String },
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: audiovat::Error,
    },
    #[error("{0}")]
    Input(String),
    #[error("{count} missing input file(s):\n{list}", count = .0.len(), list = join_paths(.0))]
    Missing(Vec<PathBuf>),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn join_paths(paths: &[PathBuf]) -> String {
    paths
        .iter()
        .map(|p| format!("  {}", p.display()))
        .collect::<Vec<_>>()
        .join("\n")
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// 3 for numeric failures, 2 for everything the user can fix.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric() => 3,
            CliError::File { source, .. } if source.is_numeric() => 3,
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
