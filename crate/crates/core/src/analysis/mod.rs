//! Control-oriented analysis and design on top of assembled systems.

mod design;
mod ga;
mod linearize;
mod passivity;

use crate::sim::SimError;
use thiserror::Error;

pub use design::{
    augment_design, evaluate_objective, optimize, ControlLaw, DesignProblem, DesignVariable, Evaluation, FeedbackLaw,
    InputLaw, Scaling, Scenario, SignalTable,
};
pub use ga::{optimize_fn, Execution, Gene, HistoryEntry, Optimization, POPULATION};
pub use linearize::{linearize, LinearModel};
pub use passivity::{
    passivity_form_check, passivity_index, passivity_outputs, EntryForm, PassivityReport, PassivityTrace,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("bad argument: {0}")]
    Argument(String),
    #[error("design: {0}")]
    Design(String),
}
