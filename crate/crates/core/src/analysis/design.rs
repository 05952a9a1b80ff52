//! Design-variable augmentation and closed-loop objective evaluation.
//!
//! Vertex capacitances are scaled by `ψ_c,i(θ)` and edge flows by `ψ_j(θ)`.
//! An edge scaled by exactly zero drops out of the assembled system, which
//! is how discrete variables select topology. Candidate designs are scored by
//! forward simulation of the augmented graph under the declared control law.

use super::ga::{optimize_fn, Execution, Gene, Optimization};
use super::AnalysisError;
use crate::expr::{mul, Compiled, Expr, NoFunctions};
use crate::graph::{Graph, ParamValue, VertexKind};
use crate::sim::{simulate, DynamicSystem, Excitation, SignalSchedule, Trajectory};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignVariable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    #[serde(default)]
    pub discrete: bool,
}

impl DesignVariable {
    pub fn continuous(name: &str, lower: f64, upper: f64) -> Self {
        DesignVariable { name: name.into(), lower, upper, discrete: false }
    }

    pub fn discrete(name: &str, lower: f64, upper: f64) -> Self {
        DesignVariable { name: name.into(), lower, upper, discrete: true }
    }

    fn gene(&self) -> Gene {
        Gene { lower: self.lower, upper: self.upper, discrete: self.discrete }
    }
}

/// Feedback laws available to the controller, written in `t`, the state
/// symbols `x<i>`, design variables and controller parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FeedbackLaw {
    /// `gain·(reference(t) − x_state) + bias`.
    Proportional {
        state: String,
        reference: Expr,
        gain: Expr,
        #[serde(default = "zero")]
        bias: Expr,
    },
    /// `Σ gains_i·x_i + offset`.
    Affine { gains: Vec<Expr>, offset: Expr },
}

fn zero() -> Expr {
    Expr::Const(0.0)
}

/// A control law for one input, optionally saturated to `[min, max]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputLaw {
    pub input: String,
    pub law: FeedbackLaw,
    #[serde(default)]
    pub min: Option<f64>,
    #[serde(default)]
    pub max: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ControlLaw {
    /// Inputs follow the scenario signals or their nominal values.
    #[default]
    OpenLoop,
    Feedback { laws: Vec<InputLaw> },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignalTable {
    pub times: Vec<f64>,
    pub columns: BTreeMap<String, Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    /// Falls back to the graph's initial conditions.
    #[serde(default)]
    pub x0: Option<Vec<f64>>,
    pub t_final: f64,
    pub dt: f64,
    #[serde(default)]
    pub signals: Option<SignalTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignProblem {
    pub model: Graph,
    /// Plant design variables θ. A variable whose name matches a model
    /// parameter also sets that parameter.
    #[serde(default)]
    pub design: Vec<DesignVariable>,
    /// Controller parameters φ.
    #[serde(default)]
    pub controller: Vec<DesignVariable>,
    /// `ψ_c` by vertex name.
    #[serde(default)]
    pub vertex_scaling: BTreeMap<String, Expr>,
    /// `ψ` by edge name.
    #[serde(default)]
    pub edge_scaling: BTreeMap<String, Expr>,
    #[serde(default)]
    pub control: ControlLaw,
    /// Integrand in `t`, `x<i>`, `u<k>`, `d<k>`, θ, φ and scalar parameters.
    pub objective: Expr,
    pub scenario: Scenario,
}

pub type Scaling = BTreeMap<String, Expr>;

/// Result of one objective evaluation. Failed simulations score `+∞` and keep
/// the reason.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub value: f64,
    pub diagnostic: Option<String>,
}

impl DesignProblem {
    pub fn variables(&self) -> impl Iterator<Item = &DesignVariable> {
        self.design.iter().chain(&self.controller)
    }

    pub fn genes(&self) -> Vec<Gene> {
        self.variables().map(DesignVariable::gene).collect()
    }

    /// Splits a flat decision vector into `(θ, φ)`.
    pub fn split<'a>(&self, genes: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        genes.split_at(self.design.len().min(genes.len()))
    }

    fn bindings(&self, theta: &[f64], phi: &[f64]) -> Result<HashMap<String, f64>, AnalysisError> {
        if theta.len() != self.design.len() || phi.len() != self.controller.len() {
            return Err(AnalysisError::Argument(format!(
                "expected {} design and {} controller values, got {} and {}",
                self.design.len(),
                self.controller.len(),
                theta.len(),
                phi.len()
            )));
        }
        let mut b = HashMap::new();
        for (v, &x) in self.variables().zip(theta.iter().chain(phi)) {
            if !(v.lower <= x && x <= v.upper) {
                return Err(AnalysisError::Argument(format!("{} = {x} is outside [{}, {}]", v.name, v.lower, v.upper)));
            }
            b.insert(v.name.clone(), x);
        }
        Ok(b)
    }
}

fn scale_factor(psi: &Expr, b: &HashMap<String, f64>, what: &str) -> Result<f64, AnalysisError> {
    let v = psi.evaluate(b).map_err(|e| AnalysisError::Design(format!("scaling of {what}: {e}")))?;
    if !v.is_finite() || v < 0.0 {
        return Err(AnalysisError::Design(format!("scaling of {what} is {v}")));
    }
    Ok(v)
}

/// Builds the design-augmented graph for the given design variables.
pub fn augment_design(g: &Graph, problem: &DesignProblem, theta: &[f64]) -> Result<Graph, AnalysisError> {
    let phi: Vec<f64> = problem.controller.iter().map(|v| v.lower).collect();
    let b = problem.bindings(theta, &phi)?;
    let mut out = g.clone();
    for v in &problem.design {
        if let Some(p) = out.parameter_mut(&v.name) {
            p.value = ParamValue::Scalar(b[&v.name]);
        }
    }
    for (name, psi) in &problem.vertex_scaling {
        let vertex = out
            .vertices
            .iter_mut()
            .find(|v| v.name == *name)
            .ok_or_else(|| AnalysisError::Design(format!("no vertex named '{name}'")))?;
        let s = scale_factor(psi, &b, &format!("vertex '{name}'"))?;
        if vertex.kind == VertexKind::Dynamic && s <= 0.0 {
            return Err(AnalysisError::Design(format!("capacitance scaling of vertex '{name}' must be positive, got {s}")));
        }
        for eq in &mut vertex.equations {
            *eq = mul(Expr::Const(s), eq.clone());
        }
    }
    for (name, psi) in &problem.edge_scaling {
        let edge = out
            .edges
            .iter_mut()
            .find(|e| e.name == *name)
            .ok_or_else(|| AnalysisError::Design(format!("no edge named '{name}'")))?;
        let s = scale_factor(psi, &b, &format!("edge '{name}'"))?;
        for eq in &mut edge.equations {
            *eq = mul(Expr::Const(s), eq.clone());
        }
    }
    Ok(out)
}

struct Slots {
    n: usize,
    m: usize,
    q: usize,
}

impl Slots {
    fn map(&self, with_channels: bool) -> HashMap<String, usize> {
        let mut s = HashMap::from([("t".to_string(), 0)]);
        for i in 0..self.n {
            s.insert(format!("x{}", i + 1), 1 + i);
        }
        if with_channels {
            for k in 0..self.m {
                s.insert(format!("u{}", k + 1), 1 + self.n + k);
            }
            for k in 0..self.q {
                s.insert(format!("d{}", k + 1), 1 + self.n + self.m + k);
            }
        }
        s
    }
}

fn constant_rules(b: &HashMap<String, f64>) -> HashMap<String, Expr> {
    b.iter().map(|(k, v)| (k.clone(), Expr::Const(*v))).collect()
}

fn compile(e: &Expr, consts: &HashMap<String, Expr>, slots: &HashMap<String, usize>) -> Result<Compiled, AnalysisError> {
    Compiled::compile(&e.substitute(consts).simplify(), slots, &NoFunctions)
        .map_err(|err| AnalysisError::Design(format!("cannot compile '{e}': {err}")))
}

struct Controller {
    laws: Vec<(usize, Compiled, f64, f64)>,
    schedule: Option<SignalSchedule>,
}

impl Excitation for Controller {
    fn apply(&self, t: f64, x: &[f64], u: &mut [f64], d: &mut [f64]) {
        if let Some(s) = &self.schedule {
            s.apply(t, x, u, d);
        }
        if self.laws.is_empty() {
            return;
        }
        let mut slots = Vec::with_capacity(1 + x.len());
        slots.push(t);
        slots.extend_from_slice(x);
        for (k, law, lo, hi) in &self.laws {
            u[*k] = law.eval(&slots).unwrap_or(f64::NAN).clamp(*lo, *hi);
        }
    }
}

fn build_controller(
    problem: &DesignProblem,
    sys: &DynamicSystem,
    consts: &HashMap<String, Expr>,
) -> Result<Controller, AnalysisError> {
    let schedule = match &problem.scenario.signals {
        Some(table) => {
            let mut s = SignalSchedule::new(table.times.clone()).map_err(AnalysisError::Sim)?;
            for (name, values) in &table.columns {
                s = s.with_column(name, values.clone())?;
            }
            Some(s.bind(sys)?)
        }
        None => None,
    };
    let slots = Slots { n: sys.state_count(), m: 0, q: 0 }.map(false);
    let mut laws = Vec::new();
    if let ControlLaw::Feedback { laws: specs } = &problem.control {
        for spec in specs {
            let k = crate::sim::symbolic::parse_channel_symbol(&spec.input, 'u')
                .filter(|&k| k < sys.input_count())
                .ok_or_else(|| AnalysisError::Design(format!("control law targets unknown input '{}'", spec.input)))?;
            let expr = match &spec.law {
                FeedbackLaw::Proportional { state, reference, gain, bias } => {
                    let err = crate::expr::sub(reference.clone(), Expr::sym(state));
                    crate::expr::add(mul(gain.clone(), err), bias.clone())
                }
                FeedbackLaw::Affine { gains, offset } => {
                    if gains.len() != sys.state_count() {
                        return Err(AnalysisError::Design(format!(
                            "affine law for {} has {} gains for {} states",
                            spec.input,
                            gains.len(),
                            sys.state_count()
                        )));
                    }
                    let terms = gains.iter().enumerate().map(|(i, g)| mul(g.clone(), Expr::sym(format!("x{}", i + 1))));
                    crate::expr::add(crate::expr::sum(terms), offset.clone())
                }
            };
            let lo = spec.min.unwrap_or(f64::NEG_INFINITY);
            let hi = spec.max.unwrap_or(f64::INFINITY);
            if lo > hi {
                return Err(AnalysisError::Design(format!("saturation for {} has min > max", spec.input)));
            }
            laws.push((k, compile(&expr, consts, &slots)?, lo, hi));
        }
    }
    Ok(Controller { laws, schedule })
}

fn trapezoid(traj: &Trajectory, integrand: &Compiled) -> Result<f64, AnalysisError> {
    let mut slots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    let mut total = 0.0;
    for r in 0..traj.len() {
        slots.clear();
        slots.push(traj.times[r]);
        slots.extend_from_slice(&traj.states[r]);
        slots.extend_from_slice(&traj.inputs[r]);
        slots.extend_from_slice(&traj.disturbances[r]);
        let v = integrand.eval(&slots).map_err(|e| AnalysisError::Sim(e.into()))?;
        if let Some((t0, v0)) = prev {
            total += 0.5 * (traj.times[r] - t0) * (v + v0);
        }
        prev = Some((traj.times[r], v));
    }
    Ok(total)
}

fn run(problem: &DesignProblem, theta: &[f64], phi: &[f64]) -> Result<f64, AnalysisError> {
    let g = augment_design(&problem.model, problem, theta)?;
    let sys = DynamicSystem::from_graph(&g)?;
    let mut b = problem.bindings(theta, phi)?;
    for (k, v) in g.scalar_parameters() {
        b.entry(k).or_insert(v);
    }
    let consts = constant_rules(&b);
    let exc = build_controller(problem, &sys, &consts)?;
    let x0 = match &problem.scenario.x0 {
        Some(x) => x.clone(),
        None => sys
            .initial_state()
            .ok_or_else(|| AnalysisError::Design("scenario has no x0 and the model has unassigned initial conditions".into()))?,
    };
    let traj = simulate(&sys, &x0, &exc, (0.0, problem.scenario.t_final), problem.scenario.dt)?;
    let slots = Slots { n: sys.state_count(), m: sys.input_count(), q: sys.disturbance_count() }.map(true);
    let integrand = compile(&problem.objective, &consts, &slots)?;
    let j = trapezoid(&traj, &integrand)?;
    if j.is_nan() {
        return Err(AnalysisError::Design("objective evaluated to NaN".into()));
    }
    Ok(j)
}

/// Simulates the augmented closed loop and integrates the objective over
/// `[0, t_final]` with the trapezoidal rule.
pub fn evaluate_objective(problem: &DesignProblem, theta: &[f64], phi: &[f64]) -> Evaluation {
    match run(problem, theta, phi) {
        Ok(value) => Evaluation { value, diagnostic: None },
        Err(e) => Evaluation { value: f64::INFINITY, diagnostic: Some(e.to_string()) },
    }
}

/// Runs the genetic algorithm over `(θ, φ)`.
pub fn optimize(problem: &DesignProblem, seed: u64, budget: usize, exec: Execution) -> Result<Optimization, AnalysisError> {
    if problem.design.is_empty() && problem.controller.is_empty() {
        return Err(AnalysisError::Argument("problem declares no decision variables".into()));
    }
    let genes = problem.genes();
    optimize_fn(
        &genes,
        |x| {
            let (theta, phi) = problem.split(x);
            evaluate_objective(problem, theta, phi).value
        },
        seed,
        budget,
        exec,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, InputSpec, Parameter, VertexSpec};
    use crate::sim::Hold;

    /// `C ẋ = -k x` drained to an open end at zero potential.
    fn decay() -> Graph {
        let mut g = Graph::new("decay");
        let v = g.add_vertex(VertexSpec::dynamic("node", &["C*x_dot"]).ic(&[1.0]));
        g.add_edge(EdgeSpec::new("leak", &["k*xt"]).external(), v, 0);
        g.add_parameter(Parameter::scalar("capacitance", "C", 2.0, ""));
        g.add_parameter(Parameter::scalar("conductance", "k", 1.0, ""));
        g
    }

    fn problem(g: Graph) -> DesignProblem {
        DesignProblem {
            model: g,
            design: vec![DesignVariable::continuous("a", 0.5, 4.0)],
            controller: vec![],
            vertex_scaling: BTreeMap::from([("node".into(), Expr::sym("a"))]),
            edge_scaling: BTreeMap::new(),
            control: ControlLaw::OpenLoop,
            objective: Expr::Const(1.0),
            scenario: Scenario { x0: None, t_final: 2.0, dt: 0.01, signals: None },
        }
    }

    #[test]
    fn unit_scaling_is_structurally_identical() {
        let g = decay();
        let p = problem(g.clone());
        assert_eq!(augment_design(&g, &p, &[1.0]).unwrap(), g);
    }

    #[test]
    fn doubled_capacitance_doubles_time_constant() {
        let g = decay();
        let p = problem(g.clone());
        let scaled = DynamicSystem::from_graph(&augment_design(&g, &p, &[2.0]).unwrap()).unwrap();
        let traj = simulate(&scaled, &[1.0], &Hold, (0.0, 4.0), 1e-3).unwrap();
        let tau = 4.0;
        for (t, x) in traj.times.iter().zip(&traj.states) {
            assert!((x[0] - (-t / tau).exp()).abs() < 1e-10);
        }
    }

    #[test]
    fn zero_edge_scaling_freezes_state() {
        let g = decay();
        let mut p = problem(g.clone());
        p.edge_scaling.insert("leak".into(), Expr::parse("a - 1").unwrap());
        let sys = DynamicSystem::from_graph(&augment_design(&g, &p, &[1.0]).unwrap()).unwrap();
        let traj = simulate(&sys, &[0.7], &Hold, (0.0, 1.0), 0.1).unwrap();
        assert!(traj.states.iter().all(|x| x[0] == 0.7));
    }

    #[test]
    fn nonpositive_capacitance_scaling_is_rejected() {
        let g = decay();
        let mut p = problem(g.clone());
        p.design[0].lower = -1.0;
        assert!(matches!(augment_design(&g, &p, &[0.0]), Err(AnalysisError::Design(_))));
        assert!(augment_design(&g, &p, &[9.0]).is_err());
    }

    #[test]
    fn constant_integrand_integrates_to_final_time() {
        let p = problem(decay());
        let e = evaluate_objective(&p, &[1.0], &[]);
        assert!((e.value - 2.0).abs() < 1e-12, "{e:?}");
    }

    #[test]
    fn quadratic_integrand_matches_closed_form() {
        let mut p = problem(decay());
        p.objective = Expr::parse("x1^2").unwrap();
        p.scenario.dt = 1e-3;
        let j = evaluate_objective(&p, &[1.0], &[]).value;
        let tau: f64 = 2.0;
        let exact = tau / 2.0 * (1.0 - (-2.0 * 2.0 / tau).exp());
        assert!((j - exact).abs() / exact < 1e-6, "{j} vs {exact}");
    }

    #[test]
    fn failed_simulation_scores_infinity() {
        let mut p = problem(decay());
        p.scenario.dt = -1.0;
        let e = evaluate_objective(&p, &[1.0], &[]);
        assert_eq!(e.value, f64::INFINITY);
        assert!(e.diagnostic.is_some());
    }

    #[test]
    fn tracking_law_holds_reference() {
        let mut g = Graph::new("heater");
        let v = g.add_vertex(VertexSpec::dynamic("T", &["C*x_dot"]).ic(&[5.0]));
        g.add_edge(EdgeSpec::new("heat", &["u1"]).external(), 0, v);
        g.add_parameter(Parameter::scalar("capacitance", "C", 1.0, ""));
        g.add_input(InputSpec::new("heat", "u1", "W").nominal(0.0));
        let mut p = problem(g);
        p.vertex_scaling.clear();
        p.controller = vec![DesignVariable::continuous("kp", 0.0, 10.0)];
        p.control = ControlLaw::Feedback {
            laws: vec![InputLaw {
                input: "u1".into(),
                law: FeedbackLaw::Proportional {
                    state: "x1".into(),
                    reference: Expr::Const(5.0),
                    gain: Expr::sym("kp"),
                    bias: Expr::Const(0.0),
                },
                min: Some(-1.0),
                max: Some(1.0),
            }],
        };
        p.objective = Expr::parse("(x1 - 5)^2").unwrap();
        assert_eq!(evaluate_objective(&p, &[1.0], &[3.0]).value, 0.0);
    }

    #[test]
    fn optimizer_stays_in_bounds() {
        let mut p = problem(decay());
        p.objective = Expr::parse("(x1 - 0.5)^2").unwrap();
        p.scenario.t_final = 1.0;
        p.scenario.dt = 0.05;
        let r = optimize(&p, 5, 48, Execution::Sequential).unwrap();
        assert!(r.history.iter().all(|h| (0.5..=4.0).contains(&h.genes[0])));
        assert!(r.history.windows(2).all(|w| w[1].best_so_far <= w[0].best_so_far));
    }
}
