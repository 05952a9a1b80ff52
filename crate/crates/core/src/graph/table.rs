use crate::expr::Function;
use serde::{Deserialize, Serialize};
use std::sync::atomic::{AtomicBool, Ordering};

/// Gridded lookup table over one or two axes. Values are stored with the
/// first axis varying slowest: `values[i * len(axis2) + j]`.
///
/// Interpolation is linear (bilinear in 2-D). Queries outside the grid are
/// clamped to the boundary (flat extrapolation) and reported.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LookupTable {
    pub axes: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

struct Cell {
    index: usize,
    weight: f64,
    width: f64,
    clamped: bool,
}

fn locate(axis: &[f64], x: f64) -> Cell {
    let n = axis.len();
    let (xc, clamped) = if x < axis[0] {
        (axis[0], true)
    } else if x > axis[n - 1] {
        (axis[n - 1], true)
    } else {
        (x, false)
    };
    let index = match axis.partition_point(|a| *a <= xc) {
        0 => 0,
        k => (k - 1).min(n - 2),
    };
    let width = axis[index + 1] - axis[index];
    Cell { index, weight: (xc - axis[index]) / width, width, clamped }
}

impl LookupTable {
    pub fn one_d(axis: Vec<f64>, values: Vec<f64>) -> Self {
        LookupTable { axes: vec![axis], values }
    }

    pub fn two_d(axis1: Vec<f64>, axis2: Vec<f64>, values: Vec<f64>) -> Self {
        LookupTable { axes: vec![axis1, axis2], values }
    }

    /// Samples `f` on the grid.
    pub fn sample_2d(axis1: Vec<f64>, axis2: Vec<f64>, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = axis1.iter().flat_map(|a| axis2.iter().map(|b| f(*a, *b))).collect();
        LookupTable::two_d(axis1, axis2, values)
    }

    pub fn dims(&self) -> usize {
        self.axes.len()
    }

    pub fn check(&self) -> Result<(), String> {
        if !(1..=2).contains(&self.axes.len()) {
            return Err(format!("tables must have 1 or 2 axes, found {}", self.axes.len()));
        }
        for (k, axis) in self.axes.iter().enumerate() {
            if axis.len() < 2 {
                return Err(format!("axis {} needs at least 2 grid points", k + 1));
            }
            if axis.iter().any(|a| !a.is_finite()) || axis.windows(2).any(|w| w[1] <= w[0]) {
                return Err(format!("axis {} is not strictly increasing", k + 1));
            }
        }
        let expected: usize = self.axes.iter().map(Vec::len).product();
        if self.values.len() != expected {
            return Err(format!("expected {expected} table values, found {}", self.values.len()));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err("table values must be finite".into());
        }
        Ok(())
    }

    /// Interpolated value and whether any coordinate was clamped.
    pub fn lookup(&self, args: &[f64]) -> (f64, bool) {
        match self.axes.len() {
            1 => {
                let c = locate(&self.axes[0], args[0]);
                let v = &self.values;
                (v[c.index] + c.weight * (v[c.index + 1] - v[c.index]), c.clamped)
            }
            _ => {
                let (a, b) = (locate(&self.axes[0], args[0]), locate(&self.axes[1], args[1]));
                let [v00, v01, v10, v11] = self.corners(&a, &b);
                let (wa, wb) = (a.weight, b.weight);
                let v = (1.0 - wa) * (1.0 - wb) * v00
                    + (1.0 - wa) * wb * v01
                    + wa * (1.0 - wb) * v10
                    + wa * wb * v11;
                (v, a.clamped || b.clamped)
            }
        }
    }

    /// Partial derivative of the interpolant along axis `k`; zero where the
    /// coordinate is clamped.
    pub fn slope(&self, k: usize, args: &[f64]) -> f64 {
        match self.axes.len() {
            1 => {
                let c = locate(&self.axes[0], args[0]);
                if c.clamped {
                    0.0
                } else {
                    (self.values[c.index + 1] - self.values[c.index]) / c.width
                }
            }
            _ => {
                let (a, b) = (locate(&self.axes[0], args[0]), locate(&self.axes[1], args[1]));
                let [v00, v01, v10, v11] = self.corners(&a, &b);
                if k == 0 {
                    if a.clamped {
                        return 0.0;
                    }
                    ((1.0 - b.weight) * (v10 - v00) + b.weight * (v11 - v01)) / a.width
                } else {
                    if b.clamped {
                        return 0.0;
                    }
                    ((1.0 - a.weight) * (v01 - v00) + a.weight * (v11 - v10)) / b.width
                }
            }
        }
    }

    fn corners(&self, a: &Cell, b: &Cell) -> [f64; 4] {
        let n2 = self.axes[1].len();
        let at = |i: usize, j: usize| self.values[i * n2 + j];
        [at(a.index, b.index), at(a.index, b.index + 1), at(a.index + 1, b.index), at(a.index + 1, b.index + 1)]
    }
}

/// A table bound as a callable function. Remembers whether any evaluation
/// fell outside the grid so callers can surface a warning.
#[derive(Debug)]
pub struct TableFunction {
    pub name: String,
    pub table: LookupTable,
    extrapolated: AtomicBool,
}

impl TableFunction {
    pub fn new(name: impl Into<String>, table: LookupTable) -> Self {
        TableFunction { name: name.into(), table, extrapolated: AtomicBool::new(false) }
    }

    pub fn extrapolated(&self) -> bool {
        self.extrapolated.load(Ordering::Relaxed)
    }

    pub fn reset(&self) {
        self.extrapolated.store(false, Ordering::Relaxed);
    }
}

impl Function for TableFunction {
    fn arity(&self) -> usize {
        self.table.dims()
    }

    fn eval(&self, args: &[f64]) -> f64 {
        let (v, clamped) = self.table.lookup(args);
        if clamped {
            self.extrapolated.store(true, Ordering::Relaxed);
        }
        v
    }

    fn partial(&self, k: usize, args: &[f64]) -> f64 {
        self.table.slope(k, args)
    }
}
