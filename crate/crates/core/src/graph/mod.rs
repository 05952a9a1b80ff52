//! Graph data model: vertices, edges, parameters, inputs and ports.
//!
//! Indices stored inside a [`Graph`] (edge endpoints, ports, flow routes,
//! `xv<k>` references) are 1-based. Endpoint index `0` marks an open edge
//! end, which is only allowed on external edges; the state on an open end is
//! treated as a disturbance when an equation refers to it.

mod incidence;
pub mod symbols;
mod table;
mod validate;

pub use incidence::{incidence_matrix, khatri_rao, partition_incidence, route_matrix, s_matrix, SMatrix};
pub use table::{LookupTable, TableFunction};
pub use validate::ValidationReport;

use crate::expr::Expr;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use symbols::{End, VertexSymbol};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GraphError {
    #[error("{0}")]
    Invalid(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VertexKind {
    Dynamic,
    Algebraic,
    External,
}

impl VertexKind {
    pub fn label(self) -> &'static str {
        match self {
            VertexKind::Dynamic => "dynamic",
            VertexKind::Algebraic => "algebraic",
            VertexKind::External => "external",
        }
    }
}

fn one() -> usize {
    1
}

fn is_one(n: &usize) -> bool {
    *n == 1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VertexSpec {
    pub name: String,
    pub kind: VertexKind,
    /// Left-hand side of the conservation equation, one per state.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub equations: Vec<Expr>,
    #[serde(default = "one", skip_serializing_if = "is_one")]
    pub state_count: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub units: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_condition: Option<Vec<f64>>,
}

impl VertexSpec {
    fn with(name: &str, kind: VertexKind, equations: &[&str]) -> Self {
        let equations: Vec<Expr> = equations
            .iter()
            .map(|e| Expr::parse(e).unwrap_or_else(|err| panic!("bad equation {e:?}: {err}")))
            .collect();
        VertexSpec {
            name: name.into(),
            kind,
            state_count: equations.len().max(1),
            equations,
            units: Vec::new(),
            initial_condition: None,
        }
    }

    /// Dynamic vertex; one equation per state. Panics on a malformed
    /// equation literal, so this is meant for built-in definitions.
    pub fn dynamic(name: &str, equations: &[&str]) -> Self {
        Self::with(name, VertexKind::Dynamic, equations)
    }

    pub fn algebraic(name: &str, equations: &[&str]) -> Self {
        Self::with(name, VertexKind::Algebraic, equations)
    }

    pub fn external(name: &str, state_count: usize) -> Self {
        VertexSpec { state_count, ..Self::with(name, VertexKind::External, &[]) }
    }

    pub fn units(mut self, units: &[&str]) -> Self {
        self.units = units.iter().map(|u| u.to_string()).collect();
        self
    }

    pub fn ic(mut self, values: &[f64]) -> Self {
        self.initial_condition = Some(values.to_vec());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub name: String,
    /// One expression per flow entry.
    pub equations: Vec<Expr>,
    #[serde(default)]
    pub external: bool,
    /// For each flow entry, the endpoint state (1-based) it feeds; `0` keeps
    /// the entry out of the incidence routing.
    #[serde(default)]
    pub targets: Vec<usize>,
}

impl EdgeSpec {
    pub fn new(name: &str, equations: &[&str]) -> Self {
        let equations: Vec<Expr> = equations
            .iter()
            .map(|e| Expr::parse(e).unwrap_or_else(|err| panic!("bad equation {e:?}: {err}")))
            .collect();
        let targets = (1..=equations.len()).collect();
        EdgeSpec { name: name.into(), equations, external: false, targets }
    }

    pub fn external(mut self) -> Self {
        self.external = true;
        self
    }

    pub fn targets(mut self, targets: &[usize]) -> Self {
        self.targets = targets.to_vec();
        self
    }

    pub fn flow_arity(&self) -> usize {
        self.equations.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Scalar(f64),
    Table(LookupTable),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameter {
    pub description: String,
    pub var: String,
    pub value: ParamValue,
    #[serde(default)]
    pub units: String,
    #[serde(default)]
    pub design: bool,
}

impl Parameter {
    pub fn scalar(description: &str, var: &str, value: f64, units: &str) -> Self {
        Parameter {
            description: description.into(),
            var: var.into(),
            value: ParamValue::Scalar(value),
            units: units.into(),
            design: false,
        }
    }

    pub fn table(description: &str, var: &str, table: LookupTable, units: &str) -> Self {
        Parameter {
            description: description.into(),
            var: var.into(),
            value: ParamValue::Table(table),
            units: units.into(),
            design: false,
        }
    }

    pub fn scalar_value(&self) -> Option<f64> {
        match self.value {
            ParamValue::Scalar(v) => Some(v),
            ParamValue::Table(_) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputSpec {
    pub description: String,
    pub var: String,
    #[serde(default)]
    pub units: String,
    /// Value used when a simulation supplies no signal for this input.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nominal: Option<f64>,
}

impl InputSpec {
    pub fn new(description: &str, var: &str, units: &str) -> Self {
        InputSpec { description: description.into(), var: var.into(), units: units.into(), nominal: None }
    }

    pub fn nominal(mut self, v: f64) -> Self {
        self.nominal = Some(v);
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ConnectionType {
    EdgeConnection,
    VertexConnection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Port {
    pub connection: ConnectionType,
    /// 1-based index into edges or vertices.
    pub element: usize,
    pub domain: String,
}

impl Port {
    pub fn edge(element: usize, domain: &str) -> Self {
        Port { connection: ConnectionType::EdgeConnection, element, domain: domain.into() }
    }

    pub fn vertex(element: usize, domain: &str) -> Self {
        Port { connection: ConnectionType::VertexConnection, element, domain: domain.into() }
    }
}

/// One row of the external routing map: flow entry `entry` of edge `edge`
/// enters state `state` of `vertex` with `sign` (+1 into, -1 out of).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowRoute {
    pub vertex: usize,
    #[serde(default = "one")]
    pub state: usize,
    pub edge: usize,
    pub entry: usize,
    pub sign: f64,
}

/// Where a disturbance value enters the equations.
#[derive(Clone, Debug, PartialEq)]
pub enum DisturbanceSource {
    Vertex { vertex: usize, state: usize },
    OpenEnd { edge: usize, end: End, state: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Disturbance {
    pub name: String,
    pub source: DisturbanceSource,
    pub default: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Graph {
    pub name: String,
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
    /// `[tail, head]` per edge, 1-based, `0` for an open end.
    pub edge_matrix: Vec<[usize; 2]>,
    #[serde(default)]
    pub parameters: Vec<Parameter>,
    #[serde(default)]
    pub inputs: Vec<InputSpec>,
    #[serde(default)]
    pub ports: Vec<Port>,
    #[serde(default)]
    pub external_flow_map: Vec<FlowRoute>,
    /// Default values for open-end disturbances, keyed by disturbance name.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub disturbance_defaults: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

fn indexed_name(base: &str, state: usize, count: usize) -> String {
    if count > 1 {
        format!("{base}[{state}]")
    } else {
        base.to_string()
    }
}

impl Graph {
    pub fn new(name: &str) -> Self {
        Graph {
            name: name.into(),
            vertices: Vec::new(),
            edges: Vec::new(),
            edge_matrix: Vec::new(),
            parameters: Vec::new(),
            inputs: Vec::new(),
            ports: Vec::new(),
            external_flow_map: Vec::new(),
            disturbance_defaults: BTreeMap::new(),
            metadata: BTreeMap::new(),
        }
    }

    /// Appends a vertex and returns its 1-based index.
    pub fn add_vertex(&mut self, v: VertexSpec) -> usize {
        self.vertices.push(v);
        self.vertices.len()
    }

    /// Appends an edge from `tail` to `head` (1-based, 0 = open end).
    pub fn add_edge(&mut self, e: EdgeSpec, tail: usize, head: usize) -> usize {
        self.edges.push(e);
        self.edge_matrix.push([tail, head]);
        self.edges.len()
    }

    pub fn add_parameter(&mut self, p: Parameter) {
        self.parameters.push(p);
    }

    pub fn add_input(&mut self, i: InputSpec) {
        self.inputs.push(i);
    }

    pub fn add_port(&mut self, p: Port) {
        self.ports.push(p);
    }

    pub fn route(&mut self, vertex: usize, state: usize, edge: usize, entry: usize, sign: f64) {
        self.external_flow_map.push(FlowRoute { vertex, state, edge, entry, sign });
    }

    pub fn vertex(&self, index: usize) -> &VertexSpec {
        &self.vertices[index - 1]
    }

    pub fn edge(&self, index: usize) -> &EdgeSpec {
        &self.edges[index - 1]
    }

    pub fn endpoints(&self, edge: usize) -> (usize, usize) {
        let [t, h] = self.edge_matrix[edge - 1];
        (t, h)
    }

    pub fn endpoint(&self, edge: usize, end: End) -> usize {
        let (t, h) = self.endpoints(edge);
        match end {
            End::Tail => t,
            End::Head => h,
        }
    }

    pub fn parameter(&self, var: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.var == var)
    }

    pub fn parameter_mut(&mut self, var: &str) -> Option<&mut Parameter> {
        self.parameters.iter_mut().find(|p| p.var == var)
    }

    pub fn input(&self, var: &str) -> Option<&InputSpec> {
        self.inputs.iter().find(|i| i.var == var)
    }

    pub fn count(&self, kind: VertexKind) -> usize {
        self.vertices.iter().filter(|v| v.kind == kind).count()
    }

    /// Number of dynamic plus algebraic vertices (rows of M̄).
    pub fn internal_count(&self) -> usize {
        self.vertices.len() - self.count(VertexKind::External)
    }

    pub fn total_states(&self) -> usize {
        self.vertices.iter().filter(|v| v.kind != VertexKind::External).map(|v| v.state_count).sum()
    }

    pub fn total_flow_entries(&self) -> usize {
        self.edges.iter().map(EdgeSpec::flow_arity).sum()
    }

    /// True when edge `j` has an open end or touches an external vertex.
    pub fn touches_boundary(&self, edge: usize) -> bool {
        let (t, h) = self.endpoints(edge);
        [t, h].iter().any(|&v| v == 0 || self.vertices.get(v - 1).is_some_and(|v| v.kind == VertexKind::External))
    }

    /// Number of states on an open end, inferred from the symbols the edge
    /// equations use for it (`xt` counts as one state, `xt<m>` as `m`).
    pub fn open_end_states(&self, edge: usize, end: End) -> usize {
        let mut count = 0;
        for eq in &self.edge(edge).equations {
            eq.visit_symbols(&mut |s| {
                if let Some((e, m)) = symbols::edge_symbol(s) {
                    if e == end {
                        count = count.max(m.max(1));
                    }
                }
            });
        }
        count
    }

    /// Name of the disturbance attached to an open edge end.
    pub fn open_end_name(&self, edge: usize, end: End) -> String {
        format!("{}.{}", self.edge(edge).name, end.label())
    }

    /// Disturbance channels: every external vertex state, then every open end
    /// state referenced by an equation, in element order.
    pub fn disturbances(&self) -> Vec<Disturbance> {
        let mut out = Vec::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if v.kind != VertexKind::External {
                continue;
            }
            for m in 1..=v.state_count {
                let name = indexed_name(&v.name, m, v.state_count);
                let default = self
                    .disturbance_defaults
                    .get(&name)
                    .copied()
                    .or_else(|| v.initial_condition.as_ref().and_then(|ic| ic.get(m - 1).copied()));
                out.push(Disturbance {
                    name,
                    source: DisturbanceSource::Vertex { vertex: i + 1, state: m },
                    default,
                });
            }
        }
        for j in 1..=self.edges.len() {
            let (t, h) = self.endpoints(j);
            for (end, v) in [(End::Tail, t), (End::Head, h)] {
                if v != 0 {
                    continue;
                }
                let n = self.open_end_states(j, end);
                for m in 1..=n {
                    let name = indexed_name(&self.open_end_name(j, end), m, n);
                    let default = self.disturbance_defaults.get(&name).copied();
                    out.push(Disturbance {
                        name,
                        source: DisturbanceSource::OpenEnd { edge: j, end, state: m },
                        default,
                    });
                }
            }
        }
        out
    }

    /// Display names for every internal state in vertex order.
    pub fn state_names(&self) -> Vec<String> {
        self.vertices
            .iter()
            .filter(|v| v.kind != VertexKind::External)
            .flat_map(|v| (1..=v.state_count).map(move |m| indexed_name(&v.name, m, v.state_count)))
            .collect()
    }

    /// Display names for every flow entry in edge order.
    pub fn flow_names(&self) -> Vec<String> {
        self.edges
            .iter()
            .flat_map(|e| {
                let n = e.flow_arity();
                (1..=n).map(move |k| indexed_name(&e.name, k, n))
            })
            .collect()
    }

    /// Inputs ordered by their number.
    pub fn sorted_inputs(&self) -> Vec<&InputSpec> {
        let mut v: Vec<&InputSpec> = self.inputs.iter().collect();
        v.sort_by_key(|i| symbols::input_number(&i.var).unwrap_or(usize::MAX));
        v
    }

    pub fn validate(&self) -> ValidationReport {
        validate::validate(self)
    }

    /// Reorders vertices as dynamic, algebraic, external (stable within each
    /// kind) and rewrites every index accordingly.
    pub fn normalize(&mut self) {
        let mut order: Vec<usize> = (0..self.vertices.len()).collect();
        order.sort_by_key(|&i| self.vertices[i].kind);
        if order.iter().enumerate().all(|(k, &i)| k == i) {
            return;
        }
        let mut map = vec![None; self.vertices.len()];
        for (new, &old) in order.iter().enumerate() {
            map[old] = Some(new + 1);
        }
        self.remap_vertices(&map);
    }

    /// Applies a vertex renumbering. `map[old - 1]` is the new 1-based index,
    /// or `None` to delete the vertex. Several old vertices may map to the
    /// same new index (merging); the first listed survives.
    pub fn remap_vertices(&mut self, map: &[Option<usize>]) {
        let new_len = map.iter().flatten().copied().max().unwrap_or(0);
        let mut slots: Vec<Option<VertexSpec>> = vec![None; new_len];
        for (old, v) in self.vertices.drain(..).enumerate() {
            if let Some(n) = map[old] {
                if slots[n - 1].is_none() {
                    slots[n - 1] = Some(v);
                }
            }
        }
        self.vertices = slots.into_iter().map(|v| v.expect("vertex map must be onto")).collect();
        let re = |v: usize| if v == 0 { 0 } else { map[v - 1].unwrap_or(0) };
        for row in &mut self.edge_matrix {
            *row = [re(row[0]), re(row[1])];
        }
        self.external_flow_map.retain(|r| map[r.vertex - 1].is_some());
        for r in &mut self.external_flow_map {
            r.vertex = re(r.vertex);
        }
        self.ports.retain(|p| p.connection == ConnectionType::EdgeConnection || map[p.element - 1].is_some());
        for p in &mut self.ports {
            if p.connection == ConnectionType::VertexConnection {
                p.element = re(p.element);
            }
        }
        for v in &mut self.vertices {
            let count = v.state_count;
            v.equations = v
                .equations
                .iter()
                .map(|eq| {
                    eq.map_symbols(&mut |s| match symbols::vertex_symbol(s, count) {
                        Some(VertexSymbol::Sibling { vertex, derivative }) => {
                            let n = map.get(vertex - 1).copied().flatten()?;
                            Some(Expr::sym(if derivative { format!("xv{n}_dot") } else { format!("xv{n}") }))
                        }
                        _ => None,
                    })
                })
                .collect();
        }
    }

    /// Deletes the listed edges (1-based) and renumbers the rest.
    pub fn remove_edges(&mut self, remove: &[usize]) {
        let mut map = vec![None; self.edges.len()];
        let mut next = 0;
        for (j, m) in map.iter_mut().enumerate() {
            if !remove.contains(&(j + 1)) {
                next += 1;
                *m = Some(next);
            }
        }
        let keep = |j: usize| map[j].is_some();
        let mut k = 0;
        self.edges.retain(|_| {
            k += 1;
            keep(k - 1)
        });
        let mut k = 0;
        self.edge_matrix.retain(|_| {
            k += 1;
            keep(k - 1)
        });
        self.external_flow_map.retain(|r| map[r.edge - 1].is_some());
        for r in &mut self.external_flow_map {
            r.edge = map[r.edge - 1].expect("retained");
        }
        self.ports.retain(|p| p.connection == ConnectionType::VertexConnection || map[p.element - 1].is_some());
        for p in &mut self.ports {
            if p.connection == ConnectionType::EdgeConnection {
                p.element = map[p.element - 1].expect("retained");
            }
        }
    }

    /// Vertices with no incident edge and no routing row.
    pub fn isolated_vertices(&self) -> Vec<usize> {
        (1..=self.vertices.len())
            .filter(|&i| {
                !self.edge_matrix.iter().any(|r| r[0] == i || r[1] == i)
                    && !self.external_flow_map.iter().any(|r| r.vertex == i)
            })
            .collect()
    }

    /// Rewrites every equation in the graph.
    pub fn map_equations(&mut self, mut f: impl FnMut(&Expr) -> Expr) {
        for v in &mut self.vertices {
            v.equations = v.equations.iter().map(&mut f).collect();
        }
        for e in &mut self.edges {
            e.equations = e.equations.iter().map(&mut f).collect();
        }
    }

    /// Sets a vertex initial condition by vertex name.
    pub fn set_initial_condition(&mut self, vertex: &str, values: &[f64]) -> Result<(), GraphError> {
        let v = self
            .vertices
            .iter_mut()
            .find(|v| v.name == vertex)
            .ok_or_else(|| GraphError::Invalid(format!("no vertex named '{vertex}'")))?;
        if values.len() != v.state_count {
            return Err(GraphError::Invalid(format!(
                "vertex '{vertex}' has {} states, got {} initial values",
                v.state_count,
                values.len()
            )));
        }
        v.initial_condition = Some(values.to_vec());
        Ok(())
    }

    /// Sets initial conditions for all internal states in layout order.
    pub fn set_initial_conditions(&mut self, values: &[f64]) -> Result<(), GraphError> {
        if values.len() != self.total_states() {
            return Err(GraphError::Invalid(format!(
                "expected {} initial values, got {}",
                self.total_states(),
                values.len()
            )));
        }
        let mut k = 0;
        for v in self.vertices.iter_mut().filter(|v| v.kind != VertexKind::External) {
            v.initial_condition = Some(values[k..k + v.state_count].to_vec());
            k += v.state_count;
        }
        Ok(())
    }

    /// Initial state vector when every internal vertex has one.
    pub fn initial_state(&self) -> Option<Vec<f64>> {
        let mut out = Vec::new();
        for v in self.vertices.iter().filter(|v| v.kind != VertexKind::External) {
            out.extend_from_slice(v.initial_condition.as_ref()?);
        }
        Some(out)
    }

    /// Scalar parameter values by variable name.
    pub fn scalar_parameters(&self) -> HashMap<String, f64> {
        self.parameters
            .iter()
            .filter_map(|p| p.scalar_value().map(|v| (p.var.clone(), v)))
            .collect()
    }
}
