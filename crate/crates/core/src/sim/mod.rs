//! Assembly and fixed-step integration of graph models.
//!
//! A [`SymbolicSystem`] writes a graph (or a stitched DAE) over global
//! symbols. [`DynamicSystem`] compiles it into evaluators for the capacitance
//! coefficients, the flows and the balance right-hand sides. Explicit RK4
//! handles ODE systems and implicit Euler with damped Newton handles systems
//! that carry algebraic states.

mod audit;
mod integrate;
mod signals;
pub mod symbolic;
mod system;

use crate::expr::EvalError;
use thiserror::Error;

pub use audit::{energy_audit, EnergyAudit};
pub use integrate::{simulate, simulate_dae, simulate_ode, NewtonOptions, Trajectory};
pub use signals::{Excitation, Hold, SignalSchedule};
pub use symbolic::{Channel, FlowInfo, RowSpec, StateInfo, SymbolicSystem};
pub use system::DynamicSystem;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("{0}")]
    Structure(String),
    #[error("singular capacitance block for state '{state}' at t = {t}")]
    Singular { state: String, t: f64 },
    #[error("non-finite value in state '{state}' at step {step}")]
    NonFinite { step: usize, state: String },
    #[error("Newton iteration failed at t = {t}: residual norm {residual:e}")]
    Newton { t: f64, residual: f64 },
    #[error("initial projection onto the algebraic constraints failed: residual norm {residual:e}")]
    Projection { residual: f64 },
    #[error("bad argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Eval(#[from] EvalError),
}
