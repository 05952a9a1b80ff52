//! Building systems out of components: port connections, input
//! dependencies and stitching of dynamic graphs with algebraic chains.

mod combine;
mod inputs;
mod stitch;

use thiserror::Error;

pub use combine::{combine, namespace_prefix, ConnectionSpec, PortRef};
pub use inputs::input_common;
pub use stitch::{stitch, AlgebraicState, BoundaryCondition, ConstraintKind, Link, Source, StitchSpec, StitchedSystem};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ComposeError {
    #[error("invalid connection: {0}")]
    Connection(String),
    #[error("port {port} of '{component}' is already consumed")]
    PortConsumed { component: String, port: usize },
    #[error("cannot connect '{0}' to itself")]
    SelfConnection(String),
    #[error("port mismatch: {0}")]
    Mismatch(String),
    #[error("cannot merge dynamic vertices {0}")]
    DynamicMerge(String),
    #[error("flow arity mismatch: {0}")]
    Arity(String),
    #[error("undeclared input '{0}'")]
    UndeclaredInput(String),
    #[error("replacement for '{input}' uses undeclared symbol '{symbol}'")]
    UndeclaredSymbol { input: String, symbol: String },
    #[error("stitch: {0}")]
    Stitch(String),
}
