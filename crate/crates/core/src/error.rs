//! Error type shared across the crate. Variants are grouped by whether they
//! indicate a bad configuration (CLI exit code 2) or a numerical failure
//! (exit code 3).

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown preset {name:?}; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("level index out of range: {index} (system has {len} levels)")]
    LevelIndex { index: usize, len: usize },

    #[error(
        "window adequacy violated: {0}. Widen the grid span or narrow the spectrum."
    )]
    WindowAdequacy(String),

    #[error("norm drift {drift:e} exceeds 1e-6; decrease the integration step")]
    NormDrift { drift: f64 },

    #[error("numerics error: {0}")]
    Numerics(String),

    #[error("fit did not converge: best k = {best_k}, residual = {residual}")]
    FitDiverged { best_k: f64, residual: f64 },

    #[error("i/o error at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// CLI exit code: 2 for configuration problems, 3 for numerical ones.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnknownPreset { .. } | Error::Config(_) | Error::LevelIndex { .. } => 2,
            Error::Io { .. } => 2,
            Error::WindowAdequacy(_)
            | Error::NormDrift { .. }
            | Error::Numerics(_)
            | Error::FitDiverged { .. } => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
