use super::{DynamicSystem, SimError};
use std::collections::HashMap;

/// Supplies input and disturbance values during integration. Both slices
/// arrive pre-filled with the channel defaults.
pub trait Excitation: Sync {
    fn apply(&self, t: f64, x: &[f64], u: &mut [f64], d: &mut [f64]);
}

/// Keeps every channel at its default value.
#[derive(Clone, Copy, Debug, Default)]
pub struct Hold;

impl Excitation for Hold {
    fn apply(&self, _t: f64, _x: &[f64], _u: &mut [f64], _d: &mut [f64]) {}
}

impl<F> Excitation for F
where
    F: Fn(f64, &[f64], &mut [f64], &mut [f64]) + Sync,
{
    fn apply(&self, t: f64, x: &[f64], u: &mut [f64], d: &mut [f64]) {
        self(t, x, u, d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Target {
    Input(usize),
    Disturbance(usize),
}

#[derive(Clone, Debug, PartialEq)]
struct Column {
    name: String,
    target: Option<Target>,
    values: Vec<f64>,
}

/// Piecewise-linear samples per channel, held flat outside the sample range.
/// Channels without a column keep their defaults.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SignalSchedule {
    times: Vec<f64>,
    columns: Vec<Column>,
}

impl SignalSchedule {
    pub fn new(times: Vec<f64>) -> Result<Self, SimError> {
        if times.iter().any(|t| !t.is_finite()) {
            return Err(SimError::Argument("schedule times must be finite".into()));
        }
        if times.windows(2).any(|w| w[1] < w[0]) {
            return Err(SimError::Argument("schedule times must be nondecreasing".into()));
        }
        Ok(SignalSchedule { times, columns: Vec::new() })
    }

    /// Adds a column named by a channel symbol (`u2`, `d1`) or channel name.
    pub fn with_column(mut self, name: &str, values: Vec<f64>) -> Result<Self, SimError> {
        if values.len() != self.times.len() {
            return Err(SimError::Argument(format!(
                "column '{name}' has {} samples for {} times",
                values.len(),
                self.times.len()
            )));
        }
        self.columns.push(Column { name: name.to_string(), target: None, values });
        Ok(self)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn column_names(&self) -> impl Iterator<Item = &str> {
        self.columns.iter().map(|c| c.name.as_str())
    }

    /// Resolves every column against the channels of `sys`.
    pub fn bind(mut self, sys: &DynamicSystem) -> Result<Self, SimError> {
        let sym = sys.symbolic();
        let mut lookup = HashMap::new();
        for (k, c) in sym.inputs.iter().enumerate() {
            lookup.insert(c.var.clone(), Target::Input(k));
        }
        for (k, c) in sym.disturbances.iter().enumerate() {
            lookup.insert(c.var.clone(), Target::Disturbance(k));
        }
        for (k, c) in sym.inputs.iter().enumerate() {
            lookup.entry(c.name.clone()).or_insert(Target::Input(k));
        }
        for (k, c) in sym.disturbances.iter().enumerate() {
            lookup.entry(c.name.clone()).or_insert(Target::Disturbance(k));
        }
        for col in &mut self.columns {
            col.target = Some(
                *lookup
                    .get(&col.name)
                    .ok_or_else(|| SimError::Argument(format!("signal column '{}' matches no channel", col.name)))?,
            );
        }
        Ok(self)
    }

    /// Linear interpolation of column `c` at `t`.
    fn sample(&self, c: usize, t: f64) -> f64 {
        let v = &self.columns[c].values;
        let ts = &self.times;
        if ts.is_empty() {
            return f64::NAN;
        }
        if t <= ts[0] {
            return v[0];
        }
        if t >= ts[ts.len() - 1] {
            return v[v.len() - 1];
        }
        let i = ts.partition_point(|&s| s <= t) - 1;
        let (t0, t1) = (ts[i], ts[i + 1]);
        if t1 == t0 {
            return v[i + 1];
        }
        let w = (t - t0) / (t1 - t0);
        v[i] + w * (v[i + 1] - v[i])
    }
}

impl Excitation for SignalSchedule {
    fn apply(&self, t: f64, _x: &[f64], u: &mut [f64], d: &mut [f64]) {
        for (c, col) in self.columns.iter().enumerate() {
            match col.target {
                Some(Target::Input(k)) => u[k] = self.sample(c, t),
                Some(Target::Disturbance(k)) => d[k] = self.sample(c, t),
                None => {}
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interpolation_is_linear_and_flat_outside() {
        let s = SignalSchedule::new(vec![0.0, 1.0, 3.0]).unwrap().with_column("u1", vec![0.0, 2.0, 0.0]).unwrap();
        assert_eq!(s.sample(0, -1.0), 0.0);
        assert_eq!(s.sample(0, 0.5), 1.0);
        assert_eq!(s.sample(0, 2.0), 1.0);
        assert_eq!(s.sample(0, 7.0), 0.0);
    }

    #[test]
    fn step_via_repeated_time() {
        let s = SignalSchedule::new(vec![0.0, 1.0, 1.0, 2.0]).unwrap().with_column("u1", vec![0.0, 0.0, 5.0, 5.0]).unwrap();
        assert_eq!(s.sample(0, 0.999), 0.0);
        assert_eq!(s.sample(0, 1.0), 5.0);
        assert_eq!(s.sample(0, 1.5), 5.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(SignalSchedule::new(vec![1.0, 0.0]).is_err());
        assert!(SignalSchedule::new(vec![0.0]).unwrap().with_column("u1", vec![]).is_err());
    }
}
