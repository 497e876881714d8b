pub mod config;
pub mod figures;
pub mod point;
pub mod sweep;

use std::path::PathBuf;

use thiserror::Error;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "TPA_OUT_DIR";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage error: {0}")]
    Usage(String),
    #[error(transparent)]
    Core(#[from] tpa_core::error::Error),
    #[error("i/o error on {path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 2 for bad input, 1 for everything else.
    pub fn exit_code(&self) -> u8 {
        use tpa_core::error::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Usage(_)) | CliError::Core(E::Domain(_)) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// `$TPA_OUT_DIR`, or the working directory.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("."))
}

/// `{:.16e}`: 17 significant digits, enough to round-trip any f64.
pub fn format_number(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.16e}")
    }
}
