//! Catalog of prebuilt component graphs.
//!
//! Every kind instantiates to a normalized graph that validates without
//! errors and carries default parameters, inputs (with nominal values),
//! ports and initial conditions. Defaults are desk-scale constants chosen for
//! well-conditioned simulation, not physical reference data. The full
//! per-kind listing lives in `docs/catalog.md`.

mod electromech;
pub mod fluid;
mod hydraulic;
pub mod physics;
mod thermal;
mod two_phase;

use crate::graph::Graph;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

pub use fluid::{ConstantDensity, FluidProps, FluidState, SyntheticRefrigerant};
pub use hydraulic::default_pump_map;
pub use physics::{advection_power, convection_power, duct_mdot, pump_mdot, two_phase_capacitance};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LibraryError {
    #[error("unknown component kind '{0}'")]
    UnknownKind(String),
    #[error("invalid option: {0}")]
    InvalidOption(String),
    #[error("reverse flow: {0}")]
    ReverseFlow(String),
    #[error("singular capacitance: {0}")]
    SingularCapacitance(String),
    #[error("fluid state out of domain: {0}")]
    OutOfDomain(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentKind {
    Tank,
    HeatLoad,
    Pipe,
    Pump,
    Reservoir,
    SplitJunction,
    MixJunction,
    TwoPhaseColdPlate,
    MassSpringDamper,
    BuckConverter,
    DcMotor,
    LossElement,
    ConversionElement,
    VirtualElement,
}

impl ComponentKind {
    pub const ALL: [ComponentKind; 14] = [
        ComponentKind::Tank,
        ComponentKind::HeatLoad,
        ComponentKind::Pipe,
        ComponentKind::Pump,
        ComponentKind::Reservoir,
        ComponentKind::SplitJunction,
        ComponentKind::MixJunction,
        ComponentKind::TwoPhaseColdPlate,
        ComponentKind::MassSpringDamper,
        ComponentKind::BuckConverter,
        ComponentKind::DcMotor,
        ComponentKind::LossElement,
        ComponentKind::ConversionElement,
        ComponentKind::VirtualElement,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ComponentKind::Tank => "tank",
            ComponentKind::HeatLoad => "heat_load",
            ComponentKind::Pipe => "pipe",
            ComponentKind::Pump => "pump",
            ComponentKind::Reservoir => "reservoir",
            ComponentKind::SplitJunction => "split_junction",
            ComponentKind::MixJunction => "mix_junction",
            ComponentKind::TwoPhaseColdPlate => "two_phase_cold_plate",
            ComponentKind::MassSpringDamper => "mass_spring_damper",
            ComponentKind::BuckConverter => "buck_converter",
            ComponentKind::DcMotor => "dc_motor",
            ComponentKind::LossElement => "loss_element",
            ComponentKind::ConversionElement => "conversion_element",
            ComponentKind::VirtualElement => "virtual_element",
        }
    }
}

impl fmt::Display for ComponentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ComponentKind {
    type Err = LibraryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ComponentKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| LibraryError::UnknownKind(s.to_string()))
    }
}

/// Instantiation options. Fields not meaningful for a kind must stay unset.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Number of control volumes (two_phase_cold_plate only, default 1).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub control_volumes: Option<usize>,
    /// Signed duct flow `sign(Δ)·sqrt(|Δ|)` instead of rejecting reverse
    /// flow (pipe and pump only).
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub signed_flow: bool,
    /// Initial conditions for every internal state in layout order.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_condition: Option<Vec<f64>>,
}

pub fn instantiate(kind: ComponentKind, name: &str, options: &Options) -> Result<Graph, LibraryError> {
    use ComponentKind::*;
    if options.control_volumes.is_some() && kind != TwoPhaseColdPlate {
        return Err(LibraryError::InvalidOption(format!("control_volumes does not apply to {kind}")));
    }
    if options.signed_flow && !matches!(kind, Pipe | Pump) {
        return Err(LibraryError::InvalidOption(format!("signed_flow does not apply to {kind}")));
    }
    let mut g = match kind {
        Tank => thermal::tank(name),
        HeatLoad => thermal::heat_load(name),
        SplitJunction => thermal::split_junction(name),
        MixJunction => thermal::mix_junction(name),
        Pipe => hydraulic::pipe(name, options.signed_flow),
        Pump => hydraulic::pump(name, options.signed_flow),
        Reservoir => hydraulic::reservoir(name),
        TwoPhaseColdPlate => {
            let n = options.control_volumes.unwrap_or(1);
            if n == 0 {
                return Err(LibraryError::InvalidOption("control_volumes must be at least 1".into()));
            }
            two_phase::cold_plate(name, n)
        }
        MassSpringDamper => electromech::mass_spring_damper(name),
        BuckConverter => electromech::buck_converter(name),
        DcMotor => electromech::dc_motor(name),
        LossElement => electromech::loss_element(name),
        ConversionElement => electromech::conversion_element(name),
        VirtualElement => electromech::virtual_element(name),
    };
    g.metadata.insert("component".into(), kind.as_str().into());
    if let Some(ic) = &options.initial_condition {
        g.set_initial_conditions(ic).map_err(|e| LibraryError::InvalidOption(e.to_string()))?;
    }
    Ok(g)
}

/// Instantiates by kind name.
pub fn instantiate_named(kind: &str, name: &str, options: &Options) -> Result<Graph, LibraryError> {
    instantiate(kind.parse()?, name, options)
}
