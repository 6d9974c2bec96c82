use std::path::PathBuf;

use serde::Serialize;
use thiserror::Error;

/// Exit status for bad input.
pub const EXIT_VALIDATION: u8 = 2;
/// Exit status for a numerical failure or an unwritable output.
pub const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] eitmem::Error),

    #[error("invalid input: {0}")]
    Input(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("unknown preset `{0}`")]
    UnknownPreset(String),
}

impl CliError {
    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) if e.is_validation() => "validation",
            CliError::Core(_) => "numerical",
            CliError::Input(_) => "validation",
            CliError::Read { .. } => "input-io",
            CliError::Write { .. } => "output-io",
            CliError::UnknownPreset(_) => "validation",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_validation() => EXIT_NUMERICAL,
            CliError::Write { .. } => EXIT_NUMERICAL,
            _ => EXIT_VALIDATION,
        }
    }

    /// Machine-readable form printed on stderr.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Body<'a> {
            kind: &'a str,
            message: String,
            exit_code: u8,
        }
        #[derive(Serialize)]
        struct Wrapper<'a> {
            error: Body<'a>,
        }
        serde_json::to_string(&Wrapper {
            error: Body {
                kind: self.kind(),
                message: self.to_string(),
                exit_code: self.exit_code(),
            },
        })
        .expect("error body serializes")
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
