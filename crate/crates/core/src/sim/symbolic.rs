use super::SimError;
use crate::expr::{Expr, PARTIAL_SUFFIX};
use crate::graph::symbols::{self, VertexSymbol};
use crate::graph::{
    incidence_matrix, khatri_rao, partition_incidence, route_matrix, s_matrix, DisturbanceSource, Graph, Parameter,
    VertexKind,
};
use std::collections::HashMap;

#[derive(Clone, Debug, PartialEq)]
pub struct StateInfo {
    pub name: String,
    pub algebraic: bool,
    pub units: String,
    pub initial: Option<f64>,
}

/// An input or disturbance channel.
#[derive(Clone, Debug, PartialEq)]
pub struct Channel {
    pub name: String,
    /// Global symbol, `u<k>` or `d<k>`.
    pub var: String,
    pub units: String,
    pub default: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FlowInfo {
    pub name: String,
    pub expr: Expr,
}

/// One balance row: `lhs(x, ẋ) = Σ coeff·Γ_j + extra`, with `lhs` linear in
/// the derivative symbols. Algebraic rows have `lhs = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct RowSpec {
    pub lhs: Expr,
    pub flows: Vec<(usize, f64)>,
    pub extra: Expr,
}

/// Equations written over global symbols: states `x<i>`, derivatives
/// `x<i>_dot`, inputs `u<k>`, disturbances `d<k>`, parameters by name and
/// time `t`. Indices are 1-based in the symbol names.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolicSystem {
    pub name: String,
    pub states: Vec<StateInfo>,
    pub inputs: Vec<Channel>,
    pub disturbances: Vec<Channel>,
    pub parameters: Vec<Parameter>,
    pub flows: Vec<FlowInfo>,
    pub rows: Vec<RowSpec>,
}

pub fn state_symbol(i: usize) -> String {
    format!("x{}", i + 1)
}

pub fn derivative_symbol(i: usize) -> String {
    format!("x{}_dot", i + 1)
}

/// Parses `x<i>` or `x<i>_dot` into a 0-based index and derivative flag.
pub fn parse_state_symbol(s: &str) -> Option<(usize, bool)> {
    let rest = s.strip_prefix('x')?;
    let (num, dot) = match rest.strip_suffix("_dot") {
        Some(n) => (n, true),
        None => (rest, false),
    };
    if num.is_empty() || num.starts_with('0') || !num.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    num.parse::<usize>().ok().map(|k| (k - 1, dot))
}

/// Parses `u<k>` or `d<k>` into a 0-based index.
pub fn parse_channel_symbol(s: &str, prefix: char) -> Option<usize> {
    let num = s.strip_prefix(prefix)?;
    if num.is_empty() || num.starts_with('0') || !num.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    num.parse::<usize>().ok().map(|k| k - 1)
}

impl SymbolicSystem {
    /// Writes a validated graph in global symbols.
    pub fn from_graph(g: &Graph) -> Result<Self, SimError> {
        let report = g.validate();
        if !report.is_ok() {
            return Err(SimError::Structure(format!("graph '{}' is invalid:\n{report}", g.name)));
        }
        let mut offset = vec![usize::MAX; g.vertices.len()];
        let mut states = Vec::new();
        let names = g.state_names();
        for (i, v) in g.vertices.iter().enumerate() {
            if v.kind == VertexKind::External {
                continue;
            }
            offset[i] = states.len();
            for m in 0..v.state_count {
                states.push(StateInfo {
                    name: names[states.len()].clone(),
                    algebraic: v.kind == VertexKind::Algebraic,
                    units: v.units.get(m).cloned().unwrap_or_default(),
                    initial: v.initial_condition.as_ref().and_then(|ic| ic.get(m).copied()),
                });
            }
        }

        let mut input_map = HashMap::new();
        let inputs: Vec<Channel> = g
            .sorted_inputs()
            .into_iter()
            .enumerate()
            .map(|(k, i)| {
                let var = format!("u{}", k + 1);
                input_map.insert(i.var.clone(), Expr::sym(&var));
                Channel { name: i.description.clone(), var, units: i.units.clone(), default: i.nominal.unwrap_or(0.0) }
            })
            .collect();

        let mut vertex_dist = HashMap::new();
        let mut open_dist = HashMap::new();
        let mut disturbances = Vec::new();
        for (k, d) in g.disturbances().into_iter().enumerate() {
            let var = format!("d{}", k + 1);
            let units = match &d.source {
                DisturbanceSource::Vertex { vertex, state } => {
                    vertex_dist.insert((*vertex, *state), var.clone());
                    g.vertex(*vertex).units.get(state - 1).cloned().unwrap_or_default()
                }
                DisturbanceSource::OpenEnd { edge, end, state } => {
                    open_dist.insert((*edge, *end, *state), var.clone());
                    String::new()
                }
            };
            disturbances.push(Channel { name: d.name, var, units, default: d.default.unwrap_or(0.0) });
        }

        let mut rows = Vec::new();
        for (i, v) in g.vertices.iter().enumerate() {
            if v.kind == VertexKind::External {
                continue;
            }
            let count = v.state_count;
            for eq in &v.equations {
                let lhs = eq.map_symbols(&mut |s| {
                    let (idx, dot) = match symbols::vertex_symbol(s, count)? {
                        VertexSymbol::State(m) => (offset[i] + m - 1, false),
                        VertexSymbol::Derivative(m) => (offset[i] + m - 1, true),
                        VertexSymbol::Sibling { vertex, derivative } => (offset[vertex - 1], derivative),
                    };
                    Some(Expr::sym(if dot { derivative_symbol(idx) } else { state_symbol(idx) }))
                });
                rows.push(RowSpec { lhs, flows: Vec::new(), extra: Expr::Const(0.0) });
            }
        }

        let mut flows = Vec::new();
        let flow_names = g.flow_names();
        for (j, e) in g.edges.iter().enumerate() {
            for eq in &e.equations {
                let expr = eq.map_symbols(&mut |s| {
                    if let Some(x) = input_map.get(s) {
                        return Some(x.clone());
                    }
                    let (end, m) = symbols::edge_symbol(s)?;
                    let m = m.max(1);
                    let v = g.endpoint(j + 1, end);
                    let name = if v == 0 {
                        open_dist.get(&(j + 1, end, m))?.clone()
                    } else if g.vertex(v).kind == VertexKind::External {
                        vertex_dist.get(&(v, m))?.clone()
                    } else {
                        state_symbol(offset[v - 1] + m - 1)
                    };
                    Some(Expr::sym(name))
                });
                flows.push(FlowInfo { name: flow_names[flows.len()].clone(), expr });
            }
        }

        let (upper, _) = partition_incidence(&incidence_matrix(g), g);
        let ms = khatri_rao(&upper, &s_matrix(g)).map_err(|e| SimError::Structure(e.to_string()))?;
        let d = route_matrix(g);
        for (r, row) in rows.iter_mut().enumerate() {
            for c in 0..ms.ncols() {
                let coeff = -ms[(r, c)] + d[(r, c)];
                if coeff != 0.0 {
                    row.flows.push((c, coeff));
                }
            }
        }

        Ok(SymbolicSystem {
            name: g.name.clone(),
            states,
            inputs,
            disturbances,
            parameters: g.parameters.clone(),
            flows,
            rows,
        })
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn is_dae(&self) -> bool {
        self.states.iter().any(|s| s.algebraic)
    }

    /// Rewrites every expression in the system.
    pub fn map_expressions(&mut self, mut f: impl FnMut(&Expr) -> Expr) {
        for fl in &mut self.flows {
            fl.expr = f(&fl.expr);
        }
        for r in &mut self.rows {
            r.lhs = f(&r.lhs);
            r.extra = f(&r.extra);
        }
    }

    /// Renames parameters (symbols and table calls, including partials).
    pub fn rename_parameters(&mut self, rename: &HashMap<String, String>) {
        if rename.is_empty() {
            return;
        }
        for p in &mut self.parameters {
            if let Some(n) = rename.get(&p.var) {
                p.var = n.clone();
            }
        }
        self.map_expressions(|e| {
            e.map_symbols(&mut |s| rename.get(s).map(Expr::sym)).rename_functions(&|name| {
                let (base, suffix) = match name.find(PARTIAL_SUFFIX) {
                    Some(i) => name.split_at(i),
                    None => (name, ""),
                };
                rename.get(base).map(|n| format!("{n}{suffix}"))
            })
        });
    }

    /// Right-hand side of row `r` as one expression.
    pub fn row_rhs(&self, r: usize) -> Expr {
        let row = &self.rows[r];
        let mut terms: Vec<Expr> = row
            .flows
            .iter()
            .map(|&(j, c)| {
                let f = self.flows[j].expr.clone();
                if c == 1.0 {
                    f
                } else if c == -1.0 {
                    crate::expr::neg(f)
                } else {
                    crate::expr::mul(Expr::Const(c), f)
                }
            })
            .collect();
        if !row.extra.is_zero() {
            terms.push(row.extra.clone());
        }
        crate::expr::sum(terms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{instantiate, ComponentKind, Options};

    #[test]
    fn tank_in_global_symbols() {
        let g = instantiate(ComponentKind::Tank, "t", &Options::default()).unwrap();
        let s = SymbolicSystem::from_graph(&g).unwrap();
        assert_eq!(s.rows[1].lhs, Expr::parse("cp_f*x1*x2_dot + cp_f*x2*x1_dot").unwrap());
        assert_eq!(s.flows[0].expr, Expr::parse("cp_f*u1*d1").unwrap());
        assert_eq!(s.flows[2].expr, Expr::parse("cp_f*u2*x2").unwrap());
        assert_eq!(s.rows[0].flows, vec![(1, 1.0), (3, -1.0)]);
        assert_eq!(s.rows[1].flows, vec![(0, 1.0), (2, -1.0)]);
        assert_eq!(s.disturbances[0].default, 300.0);
    }

    #[test]
    fn symbol_parsing() {
        assert_eq!(parse_state_symbol("x12_dot"), Some((11, true)));
        assert_eq!(parse_state_symbol("x0"), None);
        assert_eq!(parse_channel_symbol("d3", 'd'), Some(2));
        assert_eq!(parse_channel_symbol("u", 'u'), None);
    }
}
