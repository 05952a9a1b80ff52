use super::{DynamicSystem, SimError, Trajectory};

/// Stored energy, net external power and drift per trajectory step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EnergyAudit {
    pub energy: Vec<f64>,
    pub power: Vec<f64>,
    /// `|E(t) - E(0) - ∫P dt| / max(|E(0)|, 1)`, trapezoidal in time.
    pub drift: Vec<f64>,
}

impl EnergyAudit {
    pub fn max_drift(&self) -> f64 {
        self.drift.iter().copied().fold(0.0, f64::max)
    }
}

pub fn energy_audit(traj: &Trajectory, sys: &DynamicSystem) -> Result<EnergyAudit, SimError> {
    let mut out = EnergyAudit::default();
    for k in 0..traj.len() {
        let p = sys.point(traj.times[k], &traj.states[k], &traj.inputs[k], &traj.disturbances[k]);
        let (e, pw) = sys.energy_and_power(&p)?;
        out.energy.push(e);
        out.power.push(pw);
    }
    let Some(&e0) = out.energy.first() else { return Ok(out) };
    let denom = e0.abs().max(1.0);
    let mut supplied = 0.0;
    for k in 0..traj.len() {
        if k > 0 {
            supplied += 0.5 * (out.power[k] + out.power[k - 1]) * (traj.times[k] - traj.times[k - 1]);
        }
        out.drift.push((out.energy[k] - e0 - supplied).abs() / denom);
    }
    Ok(out)
}
