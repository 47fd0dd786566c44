//! Command-line harness: single compressions, rate-distortion sweeps and
//! circuit verification, written out as CSV, plot data and PGM files.

mod commands;
mod config;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use commands::{
    cmd_compress, cmd_rdc, cmd_verify, load_input, psnr_cell, verify_blocks, Outcome, VerifyRow, VerifySkip,
    REPORT_HEADER, RDC_HEADER, VERIFY_HEADER,
};
pub use config::{Overrides, RunConfig, Units, OUTPUT_DIR_ENV};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("i/o: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("input: {0}")]
    Input(#[from] qbc_core::image_io::ImageError),
    #[error("pipeline: {0}")]
    Pipeline(String),
    #[error("verify: {0}")]
    Verify(String),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status for this failure class.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } | CliError::Input(_) => 3,
            CliError::Pipeline(_) => 4,
            CliError::Verify(_) => 5,
        }
    }
}

impl From<qbc_core::PipelineError> for CliError {
    fn from(e: qbc_core::PipelineError) -> Self {
        CliError::Pipeline(e.to_string())
    }
}
