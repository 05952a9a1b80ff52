//! Model files, text reports, drawings and CSV output.

mod draw;
mod equations;
mod format;
mod model;
mod report;
mod tables;

use crate::analysis::AnalysisError;
use crate::compose::ComposeError;
use crate::library::LibraryError;
use crate::sim::SimError;
use std::path::PathBuf;
use thiserror::Error;

pub use draw::export_drawing;
pub use equations::export_equations;
pub use format::fmt_g17;
pub use model::{
    build_system, from_str, load, load_graph, save, to_string, ComponentRef, InputRule, Model, SystemDefinition,
    SCHEMA_VERSION,
};
pub use report::{render_report, ReportKind};
pub use tables::{read_signals, write_history, write_linearization, write_trajectory};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("{}: {reason}", path.display())]
    Io { path: PathBuf, reason: String },
    #[error("{origin}: at `{location}`: {message}")]
    Schema { origin: String, location: String, message: String },
    #[error("{origin}: unsupported schema_version {found} (expected {SCHEMA_VERSION})")]
    Version { origin: String, found: u32 },
    #[error("{0}")]
    Invalid(String),
    #[error("csv: {0}")]
    Csv(String),
    #[error(transparent)]
    Library(#[from] LibraryError),
    #[error(transparent)]
    Compose(#[from] ComposeError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}
