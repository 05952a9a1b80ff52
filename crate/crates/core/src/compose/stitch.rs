use super::{namespace_prefix, ComposeError};
use crate::expr::{sub, Expr};
use crate::graph::{Graph, Parameter};
use crate::sim::symbolic::{derivative_symbol, parse_channel_symbol, parse_state_symbol, state_symbol};
use crate::sim::{Channel, DynamicSystem, FlowInfo, RowSpec, SimError, StateInfo, SymbolicSystem};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraicState {
    pub name: String,
    #[serde(default)]
    pub units: String,
    #[serde(default)]
    pub initial: Option<f64>,
}

/// An exogenous signal feeding the algebraic chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    pub name: String,
    #[serde(default)]
    pub units: String,
    #[serde(default)]
    pub default: f64,
}

/// Upstream value of a link.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Boundary(String),
    Algebraic(String),
    /// A state of a dynamic component, by component index and state name.
    Dynamic { component: usize, state: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Link {
    /// Defines an algebraic state from its upstream value. Without a model
    /// this is a prescription (boundary source) or continuity row; a model
    /// expression uses the symbol `x_in` for the upstream value.
    Define { state: String, source: Source, model: Option<Expr> },
    /// Feeds a disturbance channel of a dynamic component.
    Drive { component: usize, disturbance: String, source: Source },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ConstraintKind {
    Prescription,
    Continuity,
    Model,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct StitchSpec {
    pub name: String,
    pub components: Vec<Graph>,
    pub algebraic: Vec<AlgebraicState>,
    pub boundary_conditions: Vec<BoundaryCondition>,
    /// Parameters referenced by model expressions.
    pub parameters: Vec<Parameter>,
    pub links: Vec<Link>,
}

/// A DAE over `x = (x_alg, x_dyn)`: one constraint row per algebraic state
/// followed by the component balance rows.
#[derive(Clone, Debug, PartialEq)]
pub struct StitchedSystem {
    pub system: SymbolicSystem,
    pub n_alg: usize,
    pub n_dyn: usize,
    pub constraints: Vec<ConstraintKind>,
}

impl StitchedSystem {
    /// `diag(0, …, 0, 1, …, 1)` with `n_alg` zeros.
    pub fn s_mass(&self) -> DMatrix<f64> {
        let n = self.n_alg + self.n_dyn;
        DMatrix::from_fn(n, n, |i, j| if i == j && i >= self.n_alg { 1.0 } else { 0.0 })
    }

    pub fn assemble(&self) -> Result<DynamicSystem, SimError> {
        DynamicSystem::new(self.system.clone())
    }

    /// `R = S_mass ẋ - F`, where `F_alg` holds the constraint rows and the
    /// dynamic entries of `F` are `C(x)⁻¹` times the balance right-hand sides.
    pub fn residual(&self, sys: &DynamicSystem, p: &[f64], xdot: &[f64]) -> Result<DVector<f64>, SimError> {
        let f = sys.rhs(p)?;
        let dyn_rate = sys.solve_capacitance(p, &f)?;
        let n = self.n_alg + self.n_dyn;
        Ok(DVector::from_fn(n, |i, _| if i < self.n_alg { -f[i] } else { xdot[i] - dyn_rate[i] }))
    }
}

fn rename_global(e: &Expr, x_off: usize, u_map: &[String], d_map: &[Expr]) -> Expr {
    e.map_symbols(&mut |s| {
        if let Some((i, dot)) = parse_state_symbol(s) {
            let k = i + x_off;
            return Some(Expr::sym(if dot { derivative_symbol(k) } else { state_symbol(k) }));
        }
        if let Some(k) = parse_channel_symbol(s, 'u') {
            return u_map.get(k).map(Expr::sym);
        }
        if let Some(k) = parse_channel_symbol(s, 'd') {
            return d_map.get(k).cloned();
        }
        None
    })
}

/// Builds the DAE for dynamic components coupled through algebraic chains.
pub fn stitch(spec: &StitchSpec) -> Result<StitchedSystem, ComposeError> {
    let err = |m: String| ComposeError::Stitch(m);
    let n_alg = spec.algebraic.len();
    let alg_index: HashMap<&str, usize> = spec.algebraic.iter().enumerate().map(|(i, a)| (a.name.as_str(), i)).collect();
    if alg_index.len() != n_alg {
        return Err(err("algebraic state names must be unique".into()));
    }
    let bc_index: HashMap<&str, usize> =
        spec.boundary_conditions.iter().enumerate().map(|(i, b)| (b.name.as_str(), i)).collect();

    let mut parts = Vec::new();
    for c in &spec.components {
        let mut s = SymbolicSystem::from_graph(c).map_err(|e| err(e.to_string()))?;
        let prefix = namespace_prefix(&c.name);
        let rename: HashMap<String, String> =
            s.parameters.iter().map(|p| (p.var.clone(), format!("{prefix}_{}", p.var))).collect();
        s.rename_parameters(&rename);
        parts.push(s);
    }
    let mut x_off = Vec::new();
    let mut next = n_alg;
    for s in &parts {
        x_off.push(next);
        next += s.states.len();
    }
    let n_dyn = next - n_alg;

    let mut disturbances: Vec<Channel> = spec
        .boundary_conditions
        .iter()
        .enumerate()
        .map(|(k, b)| Channel { name: b.name.clone(), var: format!("d{}", k + 1), units: b.units.clone(), default: b.default })
        .collect();
    let source_expr = |src: &Source| -> Result<Expr, ComposeError> {
        match src {
            Source::Boundary(b) => bc_index
                .get(b.as_str())
                .map(|k| Expr::sym(format!("d{}", k + 1)))
                .ok_or_else(|| err(format!("unknown boundary condition '{b}'"))),
            Source::Algebraic(a) => alg_index
                .get(a.as_str())
                .map(|&k| Expr::sym(state_symbol(k)))
                .ok_or_else(|| err(format!("unknown algebraic state '{a}'"))),
            Source::Dynamic { component, state } => {
                let s = parts.get(*component).ok_or_else(|| err(format!("no component {component}")))?;
                let i = s
                    .states
                    .iter()
                    .position(|st| st.name == *state)
                    .ok_or_else(|| err(format!("component {component} has no state '{state}'")))?;
                Ok(Expr::sym(state_symbol(x_off[*component] + i)))
            }
        }
    };

    // One definition per algebraic state.
    let mut defs: Vec<Option<(&Source, &Option<Expr>)>> = vec![None; n_alg];
    let mut drives: HashMap<(usize, String), &Source> = HashMap::new();
    for link in &spec.links {
        match link {
            Link::Define { state, source, model } => {
                let k = *alg_index.get(state.as_str()).ok_or_else(|| err(format!("unknown algebraic state '{state}'")))?;
                if defs[k].is_some() {
                    return Err(err(format!("algebraic state '{state}' is defined twice")));
                }
                defs[k] = Some((source, model));
            }
            Link::Drive { component, disturbance, source } => {
                let s = parts.get(*component).ok_or_else(|| err(format!("no component {component}")))?;
                if !s.disturbances.iter().any(|d| d.name == *disturbance) {
                    return Err(err(format!("component {component} has no disturbance '{disturbance}'")));
                }
                if drives.insert((*component, disturbance.clone()), source).is_some() {
                    return Err(err(format!("disturbance '{disturbance}' is driven twice")));
                }
            }
        }
    }
    for (k, d) in defs.iter().enumerate() {
        if d.is_none() {
            return Err(err(format!("algebraic state '{}' has no defining row", spec.algebraic[k].name)));
        }
    }
    for start in 0..n_alg {
        let mut seen = vec![false; n_alg];
        let mut k = start;
        loop {
            if seen[k] {
                return Err(err(format!(
                    "algebraic state '{}' sits on a cycle without a boundary or dynamic anchor",
                    spec.algebraic[start].name
                )));
            }
            seen[k] = true;
            match defs[k].expect("checked").0 {
                Source::Algebraic(a) => k = alg_index[a.as_str()],
                _ => break,
            }
        }
    }

    let mut states: Vec<StateInfo> = spec
        .algebraic
        .iter()
        .map(|a| StateInfo { name: a.name.clone(), algebraic: true, units: a.units.clone(), initial: a.initial })
        .collect();
    let mut rows = Vec::new();
    let mut constraints = Vec::new();
    for (k, d) in defs.iter().enumerate() {
        let (source, model) = d.expect("checked");
        let up = source_expr(source)?;
        let (value, kind) = match model {
            Some(m) => {
                let rules = HashMap::from([("x_in".to_string(), up)]);
                (m.substitute(&rules), ConstraintKind::Model)
            }
            None if matches!(source, Source::Boundary(_)) => (up, ConstraintKind::Prescription),
            None => (up, ConstraintKind::Continuity),
        };
        for s in value.free_symbols() {
            let known = parse_state_symbol(&s).is_some()
                || parse_channel_symbol(&s, 'd').is_some()
                || spec.parameters.iter().any(|p| p.var == s);
            if !known {
                return Err(err(format!("model for '{}' uses unknown symbol '{s}'", spec.algebraic[k].name)));
            }
        }
        rows.push(RowSpec { lhs: Expr::Const(0.0), flows: Vec::new(), extra: sub(Expr::sym(state_symbol(k)), value) });
        constraints.push(kind);
    }

    let mut inputs = Vec::new();
    let mut flows: Vec<FlowInfo> = Vec::new();
    let mut parameters = spec.parameters.clone();
    for (c, s) in parts.iter().enumerate() {
        let cname = &spec.components[c].name;
        let u_map: Vec<String> = (0..s.inputs.len()).map(|k| format!("u{}", inputs.len() + k + 1)).collect();
        for (ch, var) in s.inputs.iter().zip(&u_map) {
            inputs.push(Channel { name: format!("{cname}.{}", ch.name), var: var.clone(), ..ch.clone() });
        }
        let mut d_map = Vec::new();
        for ch in &s.disturbances {
            match drives.get(&(c, ch.name.clone())) {
                Some(src) => d_map.push(source_expr(src)?),
                None => {
                    let var = format!("d{}", disturbances.len() + 1);
                    disturbances.push(Channel { name: format!("{cname}.{}", ch.name), var: var.clone(), ..ch.clone() });
                    d_map.push(Expr::sym(var));
                }
            }
        }
        for st in &s.states {
            states.push(StateInfo { name: format!("{cname}.{}", st.name), ..st.clone() });
        }
        let f_off = flows.len();
        for f in &s.flows {
            flows.push(FlowInfo { name: format!("{cname}.{}", f.name), expr: rename_global(&f.expr, x_off[c], &u_map, &d_map) });
        }
        for r in &s.rows {
            rows.push(RowSpec {
                lhs: rename_global(&r.lhs, x_off[c], &u_map, &d_map),
                flows: r.flows.iter().map(|&(j, w)| (j + f_off, w)).collect(),
                extra: rename_global(&r.extra, x_off[c], &u_map, &d_map),
            });
        }
        parameters.extend(s.parameters.iter().cloned());
    }

    Ok(StitchedSystem {
        system: SymbolicSystem { name: spec.name.clone(), states, inputs, disturbances, parameters, flows, rows },
        n_alg,
        n_dyn,
        constraints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{instantiate, ComponentKind, Options};

    pub(crate) fn chain() -> StitchSpec {
        let hl = instantiate(ComponentKind::HeatLoad, "hl", &Options::default()).unwrap();
        let a = |n: &str| AlgebraicState { name: n.into(), units: "K".into(), initial: Some(0.0) };
        StitchSpec {
            name: "chain".into(),
            components: vec![hl],
            algebraic: vec![a("v1"), a("v2"), a("v3")],
            boundary_conditions: vec![BoundaryCondition { name: "BC".into(), units: "K".into(), default: 300.0 }],
            parameters: vec![Parameter::scalar("Pump Temperature Rise", "dT_pump", 2.0, "K")],
            links: vec![
                Link::Define { state: "v1".into(), source: Source::Boundary("BC".into()), model: None },
                Link::Define { state: "v2".into(), source: Source::Algebraic("v1".into()), model: None },
                Link::Define {
                    state: "v3".into(),
                    source: Source::Algebraic("v2".into()),
                    model: Some(Expr::parse("x_in + dT_pump").unwrap()),
                },
                Link::Drive { component: 0, disturbance: "Inlet Temperature".into(), source: Source::Algebraic("v3".into()) },
            ],
        }
    }

    #[test]
    fn chain_rows_and_mass_matrix() {
        let s = stitch(&chain()).unwrap();
        assert_eq!((s.n_alg, s.n_dyn), (3, 2));
        assert_eq!(s.constraints, [ConstraintKind::Prescription, ConstraintKind::Continuity, ConstraintKind::Model]);
        assert_eq!(s.system.rows[0].extra, Expr::parse("x1 - d1").unwrap());
        assert_eq!(s.system.rows[1].extra, Expr::parse("x2 - x1").unwrap());
        assert_eq!(s.system.rows[2].extra, Expr::parse("x3 - (x2 + dT_pump)").unwrap());
        assert_eq!(s.s_mass(), DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 0.0, 0.0, 1.0, 1.0])));
        assert!(s.system.flows[0].expr.contains_symbol("x3"));
    }

    #[test]
    fn chain_projects_and_integrates() {
        use crate::sim::{simulate_dae, Hold, NewtonOptions};
        let s = stitch(&chain()).unwrap();
        let sys = s.assemble().unwrap();
        let x0 = [0.0, 0.0, 0.0, 300.0, 300.0];
        let tr = simulate_dae(&sys, &x0, &Hold, (0.0, 1.0), 0.01, NewtonOptions::default()).unwrap();
        assert_eq!(&tr.states[0][..3], &[300.0, 300.0, 302.0]);
        assert!(tr.algebraic_residual.iter().all(|r| *r <= 1e-10));
        assert!(tr.final_state()[3] > 300.0);
    }

    #[test]
    fn dangling_and_cyclic_chains_rejected() {
        let mut spec = chain();
        spec.links.remove(1);
        assert!(stitch(&spec).unwrap_err().to_string().contains("no defining row"));
        let mut spec = chain();
        spec.links[0] = Link::Define { state: "v1".into(), source: Source::Algebraic("v3".into()), model: None };
        assert!(stitch(&spec).unwrap_err().to_string().contains("cycle"));
    }

    #[test]
    fn no_algebraic_part_gives_ode_residual() {
        let hl = instantiate(ComponentKind::HeatLoad, "hl", &Options::default()).unwrap();
        let s = stitch(&StitchSpec { name: "s".into(), components: vec![hl], ..Default::default() }).unwrap();
        let sys = s.assemble().unwrap();
        let x = [301.0, 305.0];
        let p = sys.point(0.0, &x, &sys.default_inputs(), &sys.default_disturbances());
        let f = sys.derivative(&p).unwrap();
        let r = s.residual(&sys, &p, &[f[0], f[1]]).unwrap();
        assert!(r.amax() < 1e-12);
    }
}
