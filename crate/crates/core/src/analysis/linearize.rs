use super::AnalysisError;
use crate::sim::{DynamicSystem, SimError};
use nalgebra::{DMatrix, DVector};

/// `ẋ ≈ A x + B u + Z` around an operating point, in absolute coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub z: DVector<f64>,
    pub x0: Vec<f64>,
    pub u0: Vec<f64>,
    pub d0: Vec<f64>,
    pub warnings: Vec<String>,
}

impl LinearModel {
    /// `A x + B u + Z`.
    pub fn evaluate(&self, x: &[f64], u: &[f64]) -> DVector<f64> {
        &self.a * DVector::from_column_slice(x) + &self.b * DVector::from_column_slice(u) + &self.z
    }
}

fn derivative_at(sys: &DynamicSystem, x: &[f64], u: &[f64], d: &[f64]) -> Result<DVector<f64>, SimError> {
    sys.derivative(&sys.point(0.0, x, u, d))
}

fn finite_difference(
    sys: &DynamicSystem,
    x0: &[f64],
    u0: &[f64],
    d0: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>), SimError> {
    let n = x0.len();
    let m = u0.len();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, m);
    let mut x = x0.to_vec();
    for i in 0..n {
        let h = 1e-6 * x0[i].abs().max(1.0);
        x[i] = x0[i] + h;
        let fp = derivative_at(sys, &x, u0, d0)?;
        x[i] = x0[i] - h;
        let fm = derivative_at(sys, &x, u0, d0)?;
        x[i] = x0[i];
        a.set_column(i, &((fp - fm) / (2.0 * h)));
    }
    let mut u = u0.to_vec();
    for k in 0..m {
        let h = 1e-6 * u0[k].abs().max(1.0);
        u[k] = u0[k] + h;
        let fp = derivative_at(sys, x0, &u, d0)?;
        u[k] = u0[k] - h;
        let fm = derivative_at(sys, x0, &u, d0)?;
        u[k] = u0[k];
        b.set_column(k, &((fp - fm) / (2.0 * h)));
    }
    Ok((a, b))
}

/// Linearizes `C(x) ẋ = F(x, u, d)` with disturbances frozen at `d0`.
///
/// Differentiating the balance implicitly gives
/// `C A = ∂F/∂x - (∂C/∂x)·ẋ0` and `C B = ∂F/∂u`. When the symbolic
/// gradients cannot be evaluated at the point, central differences of the
/// assembled derivative are used instead and a warning is attached.
pub fn linearize(sys: &DynamicSystem, x0: &[f64], u0: &[f64], d0: &[f64]) -> Result<LinearModel, AnalysisError> {
    if sys.is_dae() {
        return Err(AnalysisError::Argument("linearization needs an ODE system".into()));
    }
    let dims = [(x0.len(), sys.state_count(), "x0"), (u0.len(), sys.input_count(), "u0"), (d0.len(), sys.disturbance_count(), "d0")];
    for (got, want, what) in dims {
        if got != want {
            return Err(AnalysisError::Argument(format!("{what} has {got} entries, expected {want}")));
        }
    }
    let p = sys.point(0.0, x0, u0, d0);
    let f0 = sys.derivative(&p)?;
    let mut warnings = Vec::new();
    let symbolic = || -> Result<(DMatrix<f64>, DMatrix<f64>), SimError> {
        let (jx, ju) = sys.rhs_jacobians(&p)?;
        let dc = sys.capacitance_directional(&p, &f0)?;
        let rhs_a = jx - dc;
        let mut a = DMatrix::zeros(x0.len(), x0.len());
        for i in 0..x0.len() {
            a.set_column(i, &sys.solve_capacitance(&p, &rhs_a.column(i).into_owned())?);
        }
        let mut b = DMatrix::zeros(x0.len(), u0.len());
        for k in 0..u0.len() {
            b.set_column(k, &sys.solve_capacitance(&p, &ju.column(k).into_owned())?);
        }
        Ok((a, b))
    };
    let (a, b) = match symbolic() {
        Ok(ab) => ab,
        Err(SimError::Eval(e)) => {
            warnings.push(format!("symbolic differentiation failed ({e}); using central differences"));
            finite_difference(sys, x0, u0, d0)?
        }
        Err(e) => return Err(e.into()),
    };
    let z = &f0 - &a * DVector::from_column_slice(x0) - &b * DVector::from_column_slice(u0);
    Ok(LinearModel { a, b, z, x0: x0.to_vec(), u0: u0.to_vec(), d0: d0.to_vec(), warnings })
}
