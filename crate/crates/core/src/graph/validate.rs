use super::symbols::{self, VertexSymbol};
use super::{ConnectionType, Graph, ParamValue, VertexKind};
use crate::expr::{is_symbol_name, Expr, PARTIAL_SUFFIX};
use std::collections::{HashMap, HashSet};
use std::fmt;

/// Structural findings for a graph. Errors block assembly, warnings do not.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub errors: Vec<String>,
    pub warnings: Vec<String>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.errors.is_empty()
    }

    fn error(&mut self, msg: impl Into<String>) {
        self.errors.push(msg.into());
    }

    fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.errors {
            writeln!(f, "error: {e}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        Ok(())
    }
}

struct Scope<'a> {
    scalars: HashSet<&'a str>,
    tables: HashMap<&'a str, usize>,
    inputs: HashSet<&'a str>,
}

impl Scope<'_> {
    fn check_calls(&self, e: &Expr, owner: &str, r: &mut ValidationReport) {
        fn walk(e: &Expr, scope: &Scope, owner: &str, r: &mut ValidationReport) {
            match e {
                Expr::Const(_) | Expr::Sym(_) => {}
                Expr::Unary(_, a) => walk(a, scope, owner, r),
                Expr::Binary(_, a, b) => {
                    walk(a, scope, owner, r);
                    walk(b, scope, owner, r);
                }
                Expr::Call(name, args) => {
                    let base = name.split(PARTIAL_SUFFIX).next().unwrap_or(name);
                    match scope.tables.get(base) {
                        None => r.error(format!("{owner}: unknown table function '{name}'")),
                        Some(&n) if n != args.len() => r.error(format!(
                            "{owner}: table '{base}' takes {n} arguments, called with {}",
                            args.len()
                        )),
                        Some(_) => {}
                    }
                    args.iter().for_each(|a| walk(a, scope, owner, r));
                }
            }
        }
        walk(e, self, owner, r)
    }
}

pub(super) fn validate(g: &Graph) -> ValidationReport {
    let mut r = ValidationReport::default();
    let nv = g.vertices.len();

    let mut scope = Scope { scalars: HashSet::new(), tables: HashMap::new(), inputs: HashSet::new() };
    let mut seen = HashSet::new();
    for p in &g.parameters {
        if !is_symbol_name(&p.var) {
            r.error(format!("parameter '{}' is not a legal symbol name", p.var));
        } else if symbols::is_reserved(&p.var) {
            r.error(format!("parameter '{}' uses a reserved name", p.var));
        }
        if !seen.insert(p.var.as_str()) {
            r.error(format!("parameter '{}' declared twice", p.var));
        }
        match &p.value {
            ParamValue::Scalar(v) => {
                if !v.is_finite() {
                    r.error(format!("parameter '{}' is not finite", p.var));
                }
                scope.scalars.insert(&p.var);
            }
            ParamValue::Table(t) => {
                if let Err(e) = t.check() {
                    r.error(format!("table parameter '{}': {e}", p.var));
                }
                scope.tables.insert(&p.var, t.dims());
            }
        }
    }
    let mut input_numbers = HashSet::new();
    for i in &g.inputs {
        match symbols::input_number(&i.var) {
            None => r.error(format!("input '{}' must be named u<k>", i.var)),
            Some(k) => {
                if !input_numbers.insert(k) {
                    r.error(format!("input '{}' declared twice", i.var));
                }
            }
        }
        scope.inputs.insert(&i.var);
    }

    let mut last_kind = VertexKind::Dynamic;
    for (i, v) in g.vertices.iter().enumerate() {
        let who = format!("vertex '{}' ({})", v.name, i + 1);
        if v.kind < last_kind {
            r.error(format!("{who}: vertices must be ordered dynamic, algebraic, external"));
        }
        last_kind = last_kind.max(v.kind);
        if v.state_count == 0 {
            r.error(format!("{who}: state_count must be positive"));
            continue;
        }
        if let Some(ic) = &v.initial_condition {
            if ic.len() != v.state_count {
                r.error(format!("{who}: {} states but {} initial values", v.state_count, ic.len()));
            }
            if ic.iter().any(|x| !x.is_finite()) {
                r.error(format!("{who}: initial condition is not finite"));
            }
        } else if v.kind == VertexKind::Dynamic {
            r.warn(format!("{who}: initial condition unassigned"));
        }
        if v.kind == VertexKind::External {
            if !v.equations.is_empty() {
                r.error(format!("{who}: external vertices carry no equation"));
            }
            continue;
        }
        if v.equations.len() != v.state_count {
            r.error(format!("{who}: {} states but {} equations", v.state_count, v.equations.len()));
        }
        for (k, eq) in v.equations.iter().enumerate() {
            let mut derivs = Vec::new();
            for s in eq.free_symbols() {
                match symbols::vertex_symbol(&s, v.state_count) {
                    Some(VertexSymbol::Derivative(_)) => derivs.push(s),
                    Some(VertexSymbol::State(_)) => {}
                    Some(VertexSymbol::Sibling { vertex, derivative }) => {
                        let ok = vertex >= 1
                            && vertex <= nv
                            && vertex != i + 1
                            && g.vertices[vertex - 1].kind != VertexKind::External
                            && g.vertices[vertex - 1].state_count == 1;
                        if !ok {
                            r.error(format!("{who}: '{s}' does not name a single-state internal sibling"));
                        } else if derivative {
                            derivs.push(s);
                        }
                    }
                    None if scope.scalars.contains(s.as_str()) || s == "t" => {}
                    None if symbols::input_number(&s).is_some() => {
                        r.error(format!("{who}: inputs may not appear in vertex equations ({s})"))
                    }
                    None => r.error(format!("{who}: unresolved symbol '{s}'")),
                }
            }
            scope.check_calls(eq, &who, &mut r);
            match v.kind {
                VertexKind::Dynamic if derivs.is_empty() => {
                    r.error(format!("{who}: equation {} of a dynamic vertex needs a state derivative", k + 1))
                }
                VertexKind::Algebraic if !derivs.is_empty() => {
                    r.error(format!("{who}: algebraic vertices may not contain state derivatives"))
                }
                _ => {}
            }
            'lin: for a in &derivs {
                let da = eq.differentiate(a);
                for b in &derivs {
                    if !da.differentiate(b).simplify().is_zero() {
                        r.error(format!("{who}: equation {} is not linear in the state derivatives", k + 1));
                        break 'lin;
                    }
                }
            }
        }
    }

    let mut used_inputs = HashSet::new();
    for (j, e) in g.edges.iter().enumerate() {
        let who = format!("edge '{}' ({})", e.name, j + 1);
        if e.equations.is_empty() {
            r.error(format!("{who}: needs at least one flow equation"));
        }
        let Some(&[tail, head]) = g.edge_matrix.get(j) else {
            r.error(format!("{who}: missing edge_matrix row"));
            continue;
        };
        let mut ends_ok = true;
        for (label, v) in [("tail", tail), ("head", head)] {
            if v > nv {
                r.error(format!("{who}: {label} references vertex {v} but the graph has {nv} vertices"));
                ends_ok = false;
            } else if v == 0 && !e.external {
                r.error(format!("{who}: open {label} is only allowed on external edges"));
            }
        }
        if tail != 0 && tail == head {
            r.error(format!("{who}: tail and head are the same vertex"));
        }
        if !ends_ok {
            continue;
        }
        let boundary = g.touches_boundary(j + 1);
        if boundary && !e.external {
            r.error(format!("{who}: touches the boundary but is not marked external"));
        } else if !boundary && e.external {
            r.error(format!("{who}: marked external but both ends are internal vertices"));
        }
        let end_states = |v: usize| if v == 0 { usize::MAX } else { g.vertices[v - 1].state_count };
        let internal_states = [tail, head]
            .iter()
            .filter(|&&v| v != 0 && g.vertices[v - 1].kind != VertexKind::External)
            .map(|&v| g.vertices[v - 1].state_count)
            .max()
            .unwrap_or(0);
        if e.targets.len() != e.flow_arity() {
            r.error(format!("{who}: {} targets for {} flow entries", e.targets.len(), e.flow_arity()));
        } else if let Some(t) = e.targets.iter().find(|&&t| t > internal_states.max(1)) {
            r.error(format!("{who}: target state {t} exceeds the endpoint state count"));
        }
        for eq in &e.equations {
            for s in eq.free_symbols() {
                if let Some((end, m)) = symbols::edge_symbol(&s) {
                    let count = end_states(g.endpoint(j + 1, end));
                    let ok = if m == 0 { count == 1 || count == usize::MAX } else { m <= count };
                    if !ok {
                        r.error(format!("{who}: '{s}' does not match the {} vertex state count", end.label()));
                    }
                } else if symbols::input_number(&s).is_some() {
                    if scope.inputs.contains(s.as_str()) {
                        used_inputs.insert(s);
                    } else {
                        r.error(format!("{who}: undeclared input {s}"));
                    }
                } else if !(scope.scalars.contains(s.as_str()) || s == "t") {
                    r.error(format!("{who}: unresolved symbol '{s}'"));
                }
            }
            scope.check_calls(eq, &who, &mut r);
        }
    }
    if g.edge_matrix.len() != g.edges.len() {
        r.error(format!("edge_matrix has {} rows for {} edges", g.edge_matrix.len(), g.edges.len()));
    }

    for (k, route) in g.external_flow_map.iter().enumerate() {
        let who = format!("flow route {}", k + 1);
        let vertex_ok = route.vertex >= 1 && route.vertex <= nv;
        if !vertex_ok || g.vertices[route.vertex - 1].kind == VertexKind::External {
            r.error(format!("{who}: vertex {} is not an internal vertex", route.vertex));
        } else if route.state == 0 || route.state > g.vertices[route.vertex - 1].state_count {
            r.error(format!("{who}: state {} out of range", route.state));
        }
        if route.edge == 0 || route.edge > g.edges.len() {
            r.error(format!("{who}: edge {} does not exist", route.edge));
        } else if route.entry == 0 || route.entry > g.edges[route.edge - 1].flow_arity() {
            r.error(format!("{who}: flow entry {} out of range", route.entry));
        }
        if !route.sign.is_finite() {
            r.error(format!("{who}: sign must be finite"));
        }
    }

    for (k, p) in g.ports.iter().enumerate() {
        let who = format!("port {}", k + 1);
        match p.connection {
            ConnectionType::EdgeConnection => match g.edges.get(p.element.wrapping_sub(1)) {
                None => r.error(format!("{who}: edge {} does not exist", p.element)),
                Some(e) if !e.external => r.error(format!("{who}: edge '{}' is not external", e.name)),
                Some(_) => {}
            },
            ConnectionType::VertexConnection => {
                if p.element == 0 || p.element > nv {
                    r.error(format!("{who}: vertex {} does not exist", p.element));
                }
            }
        }
    }

    for i in &g.inputs {
        if !used_inputs.contains(&i.var) {
            r.warn(format!("input {} is not used by any equation", i.var));
        }
    }

    if r.errors.is_empty() {
        let m = super::incidence_matrix(g);
        let (upper, _) = super::partition_incidence(&m, g);
        if let Ok(ms) = super::khatri_rao(&upper, &super::s_matrix(g)) {
            let d = super::route_matrix(g);
            let names = g.state_names();
            let mut row = 0;
            for v in g.vertices.iter().filter(|v| v.kind != VertexKind::External) {
                for _ in 0..v.state_count {
                    let covered = ms.row(row).iter().chain(d.row(row).iter()).any(|x| *x != 0.0);
                    if v.kind == VertexKind::Dynamic && !covered {
                        r.warn(format!("state '{}' receives no flow", names[row]));
                    }
                    row += 1;
                }
            }
        }
    }
    r
}
