//! Configuration presets, experiment orchestration and report files.

mod calib;
mod config;
mod experiment;
mod tables;

pub use calib::{labelled_events, run_calibration_bench, write_events, write_waveforms, CalibrationSummary};
pub use config::{GenerationSection, PipelineConfig, Seeds, TomoSection};
pub use experiment::{
    estimate_names, estimates, reconstruct, run_experiment, ExperimentId, RunReport, TomographySummary, WignerPoint,
    TABLE_ROWS,
};
pub use tables::{emit_table1, emit_table2};

use std::io::Write;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fock::FockError;
use crate::sampling::SamplingError;
use crate::stategen::StateGenError;
use crate::tomo::TomoError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config error: {0}")]
    Config(String),
    #[error("missing report for {0}")]
    MissingReport(String),
    #[error("{context}: {source}")]
    StateGen {
        context: String,
        #[source]
        source: StateGenError,
    },
    #[error("{context}: {source}")]
    Tomo {
        context: String,
        #[source]
        source: TomoError,
    },
    #[error("{context}: {source}")]
    Sampling {
        context: String,
        #[source]
        source: SamplingError,
    },
    #[error(transparent)]
    Fock(#[from] FockError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {message}", path.display())]
    Format { path: PathBuf, message: String },
}

impl PipelineError {
    /// Configuration mistakes, as opposed to numerical or I/O failures.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            PipelineError::Config(_)
                | PipelineError::MissingReport(_)
                | PipelineError::StateGen { source: StateGenError::InvalidConfig(_), .. }
                | PipelineError::Sampling { source: SamplingError::InvalidModel(_), .. }
        )
    }

    pub fn is_io(&self) -> bool {
        matches!(self, PipelineError::Io { .. } | PipelineError::Format { .. })
    }
}

pub type Result<T> = std::result::Result<T, PipelineError>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Writes through a temporary file in the same directory, then renames it
/// into place, so readers never see a partial file.
pub fn write_atomic(path: &Path, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(dir))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf).map_err(io_err(path))?;
        buf.flush().map_err(io_err(path))?;
    }
    tmp.persist(path).map_err(|e| PipelineError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
        w.write_all(b"\n")
    })
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| PipelineError::Format { path: path.to_path_buf(), message: e.to_string() })
}
