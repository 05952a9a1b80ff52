use super::{energy_audit, DynamicSystem, Excitation, SimError};
use nalgebra::{DMatrix, DVector};

/// Integration output. Every per-step matrix has one row per grid time;
/// inputs, disturbances and flows are sampled at the start of each step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub inputs: Vec<Vec<f64>>,
    pub disturbances: Vec<Vec<f64>>,
    pub flows: Vec<Vec<f64>>,
    /// Total stored quantity per step.
    pub energy: Vec<f64>,
    /// Net external power per step.
    pub power: Vec<f64>,
    /// Largest algebraic residual per step (zero for ODE systems).
    pub algebraic_residual: Vec<f64>,
    pub state_names: Vec<String>,
    pub input_names: Vec<String>,
    pub flow_names: Vec<String>,
    pub warnings: Vec<String>,
}

impl Trajectory {
    fn new(sys: &DynamicSystem, steps: usize) -> Self {
        let s = sys.symbolic();
        Trajectory {
            times: Vec::with_capacity(steps + 1),
            states: Vec::with_capacity(steps + 1),
            inputs: Vec::with_capacity(steps + 1),
            disturbances: Vec::with_capacity(steps + 1),
            flows: Vec::with_capacity(steps + 1),
            algebraic_residual: Vec::with_capacity(steps + 1),
            state_names: sys.state_names(),
            input_names: s.inputs.iter().map(|c| c.name.clone()).collect(),
            flow_names: s.flows.iter().map(|f| f.name.clone()).collect(),
            ..Default::default()
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(|v| v.as_slice()).unwrap_or(&[])
    }

    /// Time history of state `i`.
    pub fn state(&self, i: usize) -> Vec<f64> {
        self.states.iter().map(|x| x[i]).collect()
    }

    /// CSV header: time, states, inputs, flows.
    pub fn header(&self) -> Vec<String> {
        std::iter::once("time".to_string())
            .chain(self.state_names.iter().cloned())
            .chain(self.input_names.iter().cloned())
            .chain(self.flow_names.iter().cloned())
            .collect()
    }

    /// Row `k` in header order.
    pub fn row(&self, k: usize) -> Vec<f64> {
        let mut r = vec![self.times[k]];
        r.extend_from_slice(&self.states[k]);
        r.extend_from_slice(&self.inputs[k]);
        r.extend_from_slice(&self.flows[k]);
        r
    }

    fn record(&mut self, sys: &DynamicSystem, p: &[f64], t: f64, x: &[f64], u: &[f64], d: &[f64], alg: f64) -> Result<(), SimError> {
        self.times.push(t);
        self.states.push(x.to_vec());
        self.inputs.push(u.to_vec());
        self.disturbances.push(d.to_vec());
        self.flows.push(sys.flow_values(p)?);
        self.algebraic_residual.push(alg);
        Ok(())
    }

    fn finish(mut self, sys: &DynamicSystem) -> Result<Self, SimError> {
        let audit = energy_audit(&self, sys)?;
        self.energy = audit.energy;
        self.power = audit.power;
        self.warnings.extend(sys.table_warnings());
        Ok(self)
    }
}

/// Newton settings for the implicit integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NewtonOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions { tol: 1e-10, max_iter: 25 }
    }
}

fn step_count(t_span: (f64, f64), dt: f64) -> Result<usize, SimError> {
    let (t0, tf) = t_span;
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(SimError::Argument(format!("time step must be positive, got {dt}")));
    }
    if !(tf >= t0) || !t0.is_finite() || !tf.is_finite() {
        return Err(SimError::Argument(format!("invalid time span [{t0}, {tf}]")));
    }
    Ok(((tf - t0) / dt).round() as usize)
}

fn check_x0(sys: &DynamicSystem, x0: &[f64]) -> Result<(), SimError> {
    if x0.len() != sys.state_count() {
        return Err(SimError::Argument(format!(
            "initial state has {} entries, system has {} states",
            x0.len(),
            sys.state_count()
        )));
    }
    if let Some(i) = x0.iter().position(|v| !v.is_finite()) {
        return Err(SimError::NonFinite { step: 0, state: sys.state_names()[i].clone() });
    }
    Ok(())
}

fn excite(sys: &DynamicSystem, exc: &dyn Excitation, t: f64, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut u = sys.default_inputs();
    let mut d = sys.default_disturbances();
    exc.apply(t, x, &mut u, &mut d);
    (u, d)
}

fn non_finite(sys: &DynamicSystem, x: &[f64], step: usize) -> Result<(), SimError> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(SimError::NonFinite { step, state: sys.state_names()[i].clone() }),
        None => Ok(()),
    }
}

/// Runs RK4 or implicit Euler depending on whether `sys` has algebraic states.
pub fn simulate(
    sys: &DynamicSystem,
    x0: &[f64],
    exc: &dyn Excitation,
    t_span: (f64, f64),
    dt: f64,
) -> Result<Trajectory, SimError> {
    if sys.is_dae() {
        simulate_dae(sys, x0, exc, t_span, dt, NewtonOptions::default())
    } else {
        simulate_ode(sys, x0, exc, t_span, dt)
    }
}

/// Classical fixed-step RK4. The grid is `t0 + k·dt` for `k = 0..=N` with
/// `N = round((tf - t0)/dt)`.
pub fn simulate_ode(
    sys: &DynamicSystem,
    x0: &[f64],
    exc: &dyn Excitation,
    t_span: (f64, f64),
    dt: f64,
) -> Result<Trajectory, SimError> {
    if sys.is_dae() {
        return Err(SimError::Structure("system has algebraic states; use the DAE integrator".into()));
    }
    let steps = step_count(t_span, dt)?;
    check_x0(sys, x0)?;
    sys.reset_table_flags();
    let n = sys.state_count();
    let mut traj = Trajectory::new(sys, steps);
    let rate = |t: f64, x: &[f64]| -> Result<(DVector<f64>, Vec<f64>, Vec<f64>, Vec<f64>), SimError> {
        let (u, d) = excite(sys, exc, t, x);
        let p = sys.point(t, x, &u, &d);
        Ok((sys.derivative(&p)?, u, d, p))
    };
    let mut x = x0.to_vec();
    let mut tmp = vec![0.0; n];
    for k in 0..=steps {
        let t = t_span.0 + k as f64 * dt;
        let (k1, u, d, p) = rate(t, &x)?;
        traj.record(sys, &p, t, &x, &u, &d, 0.0)?;
        if k == steps {
            break;
        }
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k1[i];
        }
        let k2 = rate(t + 0.5 * dt, &tmp)?.0;
        for i in 0..n {
            tmp[i] = x[i] + 0.5 * dt * k2[i];
        }
        let k3 = rate(t + 0.5 * dt, &tmp)?.0;
        for i in 0..n {
            tmp[i] = x[i] + dt * k3[i];
        }
        let k4 = rate(t + dt, &tmp)?.0;
        for i in 0..n {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        non_finite(sys, &x, k + 1)?;
    }
    traj.finish(sys)
}

/// Residual of one implicit Euler step and its row scales.
struct StepResidual {
    g: DVector<f64>,
    scale: DVector<f64>,
}

impl StepResidual {
    fn merit(&self) -> f64 {
        self.g.iter().zip(self.scale.iter()).map(|(g, s)| (g / s).abs()).fold(0.0, f64::max)
    }
}

/// Relative Newton update below which the iterate is at rounding level.
const STAGNATION: f64 = 1e-13;

struct Implicit<'a> {
    sys: &'a DynamicSystem,
    exc: &'a dyn Excitation,
    dt: f64,
    t: f64,
    prev: &'a [f64],
    /// Restrict the unknowns and rows to the algebraic states.
    projection: bool,
    fd_used: bool,
}

impl Implicit<'_> {
    fn unknowns(&self) -> Vec<usize> {
        if self.projection {
            self.sys.algebraic_states().to_vec()
        } else {
            (0..self.sys.state_count()).collect()
        }
    }

    fn point(&self, y: &[f64]) -> Vec<f64> {
        let (u, d) = excite(self.sys, self.exc, self.t, y);
        self.sys.point(self.t, y, &u, &d)
    }

    fn residual(&self, y: &[f64]) -> Result<StepResidual, SimError> {
        let p = self.point(y);
        let f = self.sys.rhs(&p)?;
        let idx = self.unknowns();
        let mut g = DVector::zeros(idx.len());
        let mut scale = DVector::from_element(idx.len(), 1.0);
        if self.projection {
            for (a, &r) in idx.iter().enumerate() {
                g[a] = -f[r];
            }
            return Ok(StepResidual { g, scale });
        }
        let c = self.sys.capacitance(&p)?;
        for r in 0..y.len() {
            let mut store = 0.0;
            let mut mag = 0.0;
            for k in 0..y.len() {
                if c[(r, k)] != 0.0 {
                    let term = c[(r, k)] * (y[k] - self.prev[k]) / self.dt;
                    store += term;
                    mag += term.abs();
                }
            }
            g[r] = store - f[r];
            if !self.sys.algebraic_states().contains(&r) {
                scale[r] = (f[r].abs() + mag).max(1.0);
            }
        }
        Ok(StepResidual { g, scale })
    }

    fn jacobian(&mut self, y: &[f64]) -> Result<DMatrix<f64>, SimError> {
        match self.symbolic_jacobian(y) {
            Ok(j) => Ok(j),
            Err(SimError::Eval(_)) => {
                self.fd_used = true;
                self.fd_jacobian(y)
            }
            Err(e) => Err(e),
        }
    }

    fn symbolic_jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>, SimError> {
        let p = self.point(y);
        let (jx, _) = self.sys.rhs_jacobians(&p)?;
        let idx = self.unknowns();
        if self.projection {
            return Ok(DMatrix::from_fn(idx.len(), idx.len(), |a, b| -jx[(idx[a], idx[b])]));
        }
        let c = self.sys.capacitance(&p)?;
        let rate = DVector::from_iterator(y.len(), y.iter().zip(self.prev).map(|(a, b)| (a - b) / self.dt));
        let dc = self.sys.capacitance_directional(&p, &rate)?;
        Ok(c / self.dt + dc - jx)
    }

    fn fd_jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>, SimError> {
        let idx = self.unknowns();
        let mut j = DMatrix::zeros(idx.len(), idx.len());
        let mut z = y.to_vec();
        for (b, &i) in idx.iter().enumerate() {
            let h = 1e-7 * y[i].abs().max(1.0);
            z[i] = y[i] + h;
            let gp = self.residual(&z)?.g;
            z[i] = y[i] - h;
            let gm = self.residual(&z)?.g;
            z[i] = y[i];
            for a in 0..idx.len() {
                j[(a, b)] = (gp[a] - gm[a]) / (2.0 * h);
            }
        }
        Ok(j)
    }

    /// Algebraic rows are never relaxed by the update-size test.
    fn algebraic_satisfied(&self, res: &StepResidual, tol: f64) -> bool {
        let alg = self.sys.algebraic_states();
        if self.projection {
            return res.merit() <= tol;
        }
        alg.iter().all(|&r| res.g[r].abs() <= tol)
    }

    /// Damped Newton from `y`. Stops when the scaled residual is below
    /// `opts.tol`, or when the update has shrunk to rounding level while the
    /// algebraic rows already meet `opts.tol`. Returns the converged point.
    fn solve(&mut self, mut y: Vec<f64>, opts: NewtonOptions) -> Result<Vec<f64>, f64> {
        let idx = self.unknowns();
        let mut res = match self.residual(&y) {
            Ok(r) => r,
            Err(_) => return Err(f64::INFINITY),
        };
        for _ in 0..opts.max_iter {
            if res.merit() <= opts.tol {
                return Ok(y);
            }
            let j = self.jacobian(&y).map_err(|_| res.g.norm())?;
            let delta = j.lu().solve(&(-&res.g)).ok_or(res.g.norm())?;
            let mut lambda = 1.0;
            let mut accepted = None;
            for _ in 0..=8 {
                let mut trial = y.clone();
                for (a, &i) in idx.iter().enumerate() {
                    trial[i] += lambda * delta[a];
                }
                if let Ok(r) = self.residual(&trial) {
                    if r.merit().is_finite() && r.merit() < res.merit() {
                        accepted = Some((trial, r));
                        break;
                    }
                    if accepted.is_none() && r.merit().is_finite() {
                        accepted = Some((trial.clone(), r));
                    }
                }
                lambda *= 0.5;
            }
            match accepted {
                Some((trial, r)) => {
                    let settled = idx
                        .iter()
                        .all(|&i| (trial[i] - y[i]).abs() <= STAGNATION * trial[i].abs().max(1.0));
                    y = trial;
                    res = r;
                    if settled && self.algebraic_satisfied(&res, opts.tol) {
                        return Ok(y);
                    }
                }
                None => return Err(res.g.norm()),
            }
        }
        if res.merit() <= opts.tol {
            Ok(y)
        } else {
            Err(res.g.norm())
        }
    }
}

fn algebraic_residual(sys: &DynamicSystem, p: &[f64]) -> Result<f64, SimError> {
    if !sys.is_dae() {
        return Ok(0.0);
    }
    let f = sys.rhs(p)?;
    Ok(sys.algebraic_states().iter().map(|&r| f[r].abs()).fold(0.0, f64::max))
}

/// Implicit Euler with damped Newton. Algebraic states are first projected
/// onto the constraints at `t0`.
pub fn simulate_dae(
    sys: &DynamicSystem,
    x0: &[f64],
    exc: &dyn Excitation,
    t_span: (f64, f64),
    dt: f64,
    opts: NewtonOptions,
) -> Result<Trajectory, SimError> {
    let steps = step_count(t_span, dt)?;
    check_x0(sys, x0)?;
    sys.reset_table_flags();
    let mut traj = Trajectory::new(sys, steps);
    let mut x = x0.to_vec();
    let mut fd_used = false;

    if sys.is_dae() {
        let mut proj = Implicit { sys, exc, dt, t: t_span.0, prev: x0, projection: true, fd_used: false };
        x = proj.solve(x, opts).map_err(|residual| SimError::Projection { residual })?;
        fd_used |= proj.fd_used;
    }

    for k in 0..=steps {
        let t = t_span.0 + k as f64 * dt;
        let (u, d) = excite(sys, exc, t, &x);
        let p = sys.point(t, &x, &u, &d);
        let alg = algebraic_residual(sys, &p)?;
        traj.record(sys, &p, t, &x, &u, &d, alg)?;
        if k == steps {
            break;
        }
        let t_next = t_span.0 + (k + 1) as f64 * dt;
        let prev = x.clone();
        let mut step = Implicit { sys, exc, dt, t: t_next, prev: &prev, projection: false, fd_used: false };
        x = step.solve(prev.clone(), opts).map_err(|residual| SimError::Newton { t: t_next, residual })?;
        fd_used |= step.fd_used;
        non_finite(sys, &x, k + 1)?;
    }
    if fd_used {
        traj.warnings.push("symbolic Jacobian failed to evaluate; finite differences were used".into());
    }
    traj.finish(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{instantiate, ComponentKind, Options};
    use crate::sim::{Hold, SignalSchedule};

    fn sys(kind: ComponentKind) -> DynamicSystem {
        DynamicSystem::from_graph(&instantiate(kind, "c", &Options::default()).unwrap()).unwrap()
    }

    #[test]
    fn tank_drains_linearly() {
        let s = sys(ComponentKind::Tank);
        let sched = SignalSchedule::new(vec![0.0]).unwrap().with_column("u1", vec![0.0]).unwrap();
        let sched = sched.with_column("u2", vec![1.0]).unwrap().bind(&s).unwrap();
        let x0 = [6000.0, 300.0];
        let tr = simulate_ode(&s, &x0, &sched, (0.0, 10.0), 1e-2).unwrap();
        assert_eq!(tr.len(), 1001);
        assert!((tr.final_state()[0] - 5990.0).abs() < 1e-9);
        assert!((tr.final_state()[1] - 300.0).abs() < 1e-9);
    }

    #[test]
    fn grid_and_row_width() {
        let s = sys(ComponentKind::HeatLoad);
        let x0 = s.initial_state().unwrap();
        let tr = simulate(&s, &x0, &Hold, (0.0, 1.0), 0.1).unwrap();
        assert_eq!(tr.len(), 11);
        assert_eq!(tr.row(3).len(), tr.header().len());
        assert_eq!(tr.header().len(), 1 + 2 + 2 + s.flow_count());
        assert!(tr.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn virtual_element_conserves_and_projects() {
        let s = sys(ComponentKind::VirtualElement);
        let tr = simulate(&s, &[350.0, 300.0, 0.0], &Hold, (0.0, 5.0), 0.01).unwrap();
        assert!(tr.algebraic_residual.iter().all(|r| *r <= 1e-10));
        assert!((tr.states[0][2] - (2.0 * 350.0 + 3.0 * 300.0) / 5.0).abs() < 1e-9);
        let e0 = tr.energy[0];
        assert!(tr.energy.iter().all(|e| (e - e0).abs() < 1e-8 * e0));
    }

    #[test]
    fn bad_arguments() {
        let s = sys(ComponentKind::HeatLoad);
        assert!(simulate(&s, &[1.0], &Hold, (0.0, 1.0), 0.1).is_err());
        assert!(simulate(&s, &[1.0, 1.0], &Hold, (0.0, 1.0), 0.0).is_err());
        let v = sys(ComponentKind::VirtualElement);
        assert!(simulate_ode(&v, &[1.0, 1.0, 1.0], &Hold, (0.0, 1.0), 0.1).is_err());
    }

    #[test]
    fn non_finite_state_reported() {
        let s = sys(ComponentKind::HeatLoad);
        let x0 = s.initial_state().unwrap();
        let err = simulate_ode(&s, &x0, &Hold, (0.0, 1e6), 1e3).unwrap_err();
        assert!(matches!(err, SimError::NonFinite { .. }), "{err}");
    }
}
