use super::ComposeError;
use crate::expr::Expr;
use crate::graph::symbols::{self, VertexSymbol};
use crate::graph::{ConnectionType, Graph, ParamValue, Port, VertexKind};
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap, HashSet};

/// A port of one component: index into the component list and 1-based port
/// number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PortRef {
    pub component: usize,
    pub port: usize,
}

/// One connection. The primary side wins every property conflict.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectionSpec {
    pub primary: PortRef,
    pub secondary: PortRef,
}

impl ConnectionSpec {
    pub fn new(primary: (usize, usize), secondary: (usize, usize)) -> Self {
        ConnectionSpec {
            primary: PortRef { component: primary.0, port: primary.1 },
            secondary: PortRef { component: secondary.0, port: secondary.1 },
        }
    }
}

/// Symbol-safe prefix derived from a component name.
pub fn namespace_prefix(name: &str) -> String {
    let mut s: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
    if s.is_empty() || s.starts_with(|c: char| c.is_ascii_digit()) {
        s.insert(0, '_');
    }
    s
}

struct Offsets {
    vertex: usize,
    edge: usize,
}

/// Rewrites component-local names into the namespaced system graph.
fn append(sys: &mut Graph, c: &Graph, input_base: usize, input_map: &mut Vec<(String, String)>) -> Offsets {
    let off = Offsets { vertex: sys.vertices.len(), edge: sys.edges.len() };
    let prefix = namespace_prefix(&c.name);
    let params: HashMap<String, String> =
        c.parameters.iter().map(|p| (p.var.clone(), format!("{prefix}_{}", p.var))).collect();
    let tables: HashSet<&str> =
        c.parameters.iter().filter(|p| matches!(p.value, ParamValue::Table(_))).map(|p| p.var.as_str()).collect();
    let mut inputs = HashMap::new();
    for (k, i) in c.sorted_inputs().into_iter().enumerate() {
        let var = format!("u{}", input_base + k + 1);
        input_map.push((format!("{}.{}", c.name, i.var), var.clone()));
        inputs.insert(i.var.clone(), var);
    }
    let rename_fn = |name: &str| -> Option<String> {
        let (base, suffix) = match name.find(crate::expr::PARTIAL_SUFFIX) {
            Some(i) => name.split_at(i),
            None => (name, ""),
        };
        tables.contains(base).then(|| format!("{prefix}_{base}{suffix}"))
    };

    for v in &c.vertices {
        let mut v = v.clone();
        v.name = format!("{}.{}", c.name, v.name);
        let count = v.state_count;
        v.equations = v
            .equations
            .iter()
            .map(|eq| {
                eq.map_symbols(&mut |s| {
                    if let Some(VertexSymbol::Sibling { vertex, derivative }) = symbols::vertex_symbol(s, count) {
                        let k = vertex + off.vertex;
                        return Some(Expr::sym(if derivative { format!("xv{k}_dot") } else { format!("xv{k}") }));
                    }
                    params.get(s).map(Expr::sym)
                })
                .rename_functions(&rename_fn)
            })
            .collect();
        sys.vertices.push(v);
    }
    for e in &c.edges {
        let mut e = e.clone();
        e.name = format!("{}.{}", c.name, e.name);
        e.equations = e
            .equations
            .iter()
            .map(|eq| {
                eq.map_symbols(&mut |s| params.get(s).or_else(|| inputs.get(s)).map(Expr::sym))
                    .rename_functions(&rename_fn)
            })
            .collect();
        sys.edges.push(e);
    }
    let shift = |v: usize| if v == 0 { 0 } else { v + off.vertex };
    for r in &c.edge_matrix {
        sys.edge_matrix.push([shift(r[0]), shift(r[1])]);
    }
    for p in &c.parameters {
        let mut p = p.clone();
        p.var = params[&p.var].clone();
        p.description = format!("{}.{}", c.name, p.description);
        sys.parameters.push(p);
    }
    for i in c.sorted_inputs() {
        let mut i = i.clone();
        i.var = inputs[&i.var].clone();
        i.description = format!("{}.{}", c.name, i.description);
        sys.inputs.push(i);
    }
    for r in &c.external_flow_map {
        let mut r = r.clone();
        r.vertex += off.vertex;
        r.edge += off.edge;
        sys.external_flow_map.push(r);
    }
    for (k, v) in &c.disturbance_defaults {
        sys.disturbance_defaults.insert(format!("{}.{k}", c.name), *v);
    }
    off
}

/// Interior and boundary endpoint of a boundary edge.
fn edge_sides(g: &Graph, edge: usize, who: &str) -> Result<(crate::graph::symbols::End, usize), ComposeError> {
    use crate::graph::symbols::End;
    let (t, h) = g.endpoints(edge);
    let internal = |v: usize| v != 0 && g.vertex(v).kind != VertexKind::External;
    match (internal(t), internal(h)) {
        (true, false) => Ok((End::Head, t)),
        (false, true) => Ok((End::Tail, h)),
        _ => Err(ComposeError::Connection(format!(
            "{who}: edge '{}' must join exactly one internal vertex to the boundary",
            g.edge(edge).name
        ))),
    }
}

fn find(parent: &mut [usize], i: usize) -> usize {
    if parent[i] != i {
        let r = find(parent, parent[i]);
        parent[i] = r;
    }
    parent[i]
}

/// Connects components through their ports into one system graph.
///
/// Vertex connections merge the two port vertices; edge connections fuse two
/// boundary edges into one internal edge that keeps the primary equation and
/// orientation. Names are namespaced as `component.element`, parameters as
/// `component_var`, and inputs are renumbered globally in component order.
pub fn combine(name: &str, components: &[Graph], connections: &[ConnectionSpec]) -> Result<Graph, ComposeError> {
    let mut seen = HashSet::new();
    for c in components {
        if !seen.insert(c.name.as_str()) {
            return Err(ComposeError::Connection(format!("component name '{}' is used twice", c.name)));
        }
    }
    let mut consumed = HashSet::new();
    let port_of = |r: PortRef| -> Result<&Port, ComposeError> {
        let c = components
            .get(r.component)
            .ok_or_else(|| ComposeError::Connection(format!("no component {}", r.component)))?;
        if r.port == 0 || r.port > c.ports.len() {
            return Err(ComposeError::Connection(format!(
                "'{}' has {} ports, port {} requested",
                c.name,
                c.ports.len(),
                r.port
            )));
        }
        Ok(&c.ports[r.port - 1])
    };
    for conn in connections {
        let (p, s) = (port_of(conn.primary)?, port_of(conn.secondary)?);
        if conn.primary.component == conn.secondary.component {
            return Err(ComposeError::SelfConnection(components[conn.primary.component].name.clone()));
        }
        for r in [conn.primary, conn.secondary] {
            if !consumed.insert(r) {
                return Err(ComposeError::PortConsumed { component: components[r.component].name.clone(), port: r.port });
            }
        }
        if p.connection != s.connection {
            return Err(ComposeError::Mismatch(format!("{:?} port joined to {:?} port", p.connection, s.connection)));
        }
        if p.domain != s.domain {
            return Err(ComposeError::Mismatch(format!("domain '{}' joined to domain '{}'", p.domain, s.domain)));
        }
    }

    let mut sys = Graph::new(name);
    let mut input_map = Vec::new();
    let mut offsets = Vec::new();
    let mut port_owner = Vec::new();
    for (ci, c) in components.iter().enumerate() {
        let base = sys.inputs.len();
        let off = append(&mut sys, c, base, &mut input_map);
        for (pi, p) in c.ports.iter().enumerate() {
            let mut p = p.clone();
            p.element += if p.connection == ConnectionType::VertexConnection { off.vertex } else { off.edge };
            sys.ports.push(p);
            port_owner.push(PortRef { component: ci, port: pi + 1 });
        }
        offsets.push(off);
    }
    let global = |r: PortRef| -> usize {
        let p = &components[r.component].ports[r.port - 1];
        p.element
            + match p.connection {
                ConnectionType::VertexConnection => offsets[r.component].vertex,
                ConnectionType::EdgeConnection => offsets[r.component].edge,
            }
    };

    let nv = sys.vertices.len();
    let mut parent: Vec<usize> = (0..nv).collect();
    let mut drop_edges = Vec::new();
    let mut boundary_vertices = Vec::new();
    let mut discarded = Vec::new();
    for conn in connections {
        let (gp, gs) = (global(conn.primary), global(conn.secondary));
        match port_of(conn.primary)?.connection {
            ConnectionType::VertexConnection => {
                let (a, b) = (find(&mut parent, gp - 1), find(&mut parent, gs - 1));
                parent[b] = a;
            }
            ConnectionType::EdgeConnection => {
                let pe = sys.edge(gp).clone();
                let se = sys.edge(gs).clone();
                if pe.flow_arity() != se.flow_arity() {
                    return Err(ComposeError::Arity(format!(
                        "'{}' carries {} flows, '{}' carries {}",
                        pe.name,
                        pe.flow_arity(),
                        se.name,
                        se.flow_arity()
                    )));
                }
                let (p_open, _) = edge_sides(&sys, gp, "primary")?;
                let (s_open, s_inner) = edge_sides(&sys, gs, "secondary")?;
                for (e, end) in [(gp, p_open), (gs, s_open)] {
                    let v = sys.endpoint(e, end);
                    if v != 0 {
                        boundary_vertices.push(v);
                    }
                }
                let slot = match p_open {
                    crate::graph::symbols::End::Tail => 0,
                    crate::graph::symbols::End::Head => 1,
                };
                sys.edge_matrix[gp - 1][slot] = s_inner;
                for r in &mut sys.external_flow_map {
                    if r.edge == gs {
                        r.edge = gp;
                    }
                }
                let eqs: Vec<String> = se.equations.iter().map(|e| e.to_string()).collect();
                discarded.push(format!("{}: [{}]", se.name, eqs.join(", ")));
                drop_edges.push(gs);
            }
        }
    }

    // Vertex merge sets: the dynamic member survives, otherwise the primary.
    let mut sets: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for i in 0..nv {
        let r = find(&mut parent, i);
        sets.entry(r).or_default().push(i);
    }
    let mut target = vec![0usize; nv];
    for (root, members) in &sets {
        let dynamic: Vec<usize> =
            members.iter().copied().filter(|&i| sys.vertices[i].kind == VertexKind::Dynamic).collect();
        if dynamic.len() > 1 {
            let names: Vec<&str> = dynamic.iter().map(|&i| sys.vertices[i].name.as_str()).collect();
            return Err(ComposeError::DynamicMerge(names.join(", ")));
        }
        let survivor = dynamic.first().copied().unwrap_or(*root);
        let count = sys.vertices[survivor].state_count;
        if let Some(&bad) = members.iter().find(|&&i| sys.vertices[i].state_count != count) {
            return Err(ComposeError::Mismatch(format!(
                "vertex '{}' has {} states, '{}' has {count}",
                sys.vertices[bad].name, sys.vertices[bad].state_count, sys.vertices[survivor].name
            )));
        }
        for &m in members {
            target[m] = survivor;
        }
    }
    if !discarded.is_empty() {
        sys.metadata.insert("discarded_equations".into(), discarded.join("; "));
    }

    // Drop consumed ports, then the fused secondary edges.
    let consumed_global: HashSet<usize> =
        port_owner.iter().enumerate().filter(|(_, r)| consumed.contains(r)).map(|(k, _)| k).collect();
    let mut k = 0;
    sys.ports.retain(|_| {
        k += 1;
        !consumed_global.contains(&(k - 1))
    });
    drop_edges.sort_unstable();
    sys.remove_edges(&drop_edges);

    // Merge vertices, then delete boundary vertices left without edges.
    let mut survivors: Vec<usize> = (0..nv).filter(|&i| target[i] == i).collect();
    let isolated: HashSet<usize> = {
        let mut probe = sys.clone();
        for row in &mut probe.edge_matrix {
            for v in row.iter_mut() {
                if *v != 0 {
                    *v = target[*v - 1] + 1;
                }
            }
        }
        for r in &mut probe.external_flow_map {
            r.vertex = target[r.vertex - 1] + 1;
        }
        probe.isolated_vertices().into_iter().collect()
    };
    survivors.retain(|&i| !(boundary_vertices.contains(&(i + 1)) && isolated.contains(&(i + 1))));
    let mut map = vec![None; nv];
    for (new, &s) in survivors.iter().enumerate() {
        map[s] = Some(new + 1);
    }
    for i in 0..nv {
        if map[i].is_none() && target[i] != i {
            map[i] = map[target[i]];
        }
    }
    // The lowest old index of a merge set is the one `remap_vertices` keeps.
    for members in sets.values() {
        let survivor = target[members[0]];
        let lowest = members[0];
        if survivor != lowest {
            sys.vertices[lowest] = sys.vertices[survivor].clone();
        }
    }
    sys.remap_vertices(&map);

    for j in 1..=sys.edges.len() {
        let boundary = sys.touches_boundary(j);
        sys.edges[j - 1].external = boundary;
    }
    let edges = &sys.edges;
    sys.ports.retain(|p| p.connection == ConnectionType::VertexConnection || edges[p.element - 1].external);
    sys.normalize();
    let live: HashSet<String> = sys.disturbances().into_iter().map(|d| d.name).collect();
    sys.disturbance_defaults.retain(|k, _| live.contains(k));
    sys.metadata.insert(
        "input_map".into(),
        input_map.iter().map(|(a, b)| format!("{a}={b}")).collect::<Vec<_>>().join(", "),
    );
    Ok(sys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{instantiate, ComponentKind, Options};

    fn comp(kind: ComponentKind, name: &str) -> Graph {
        instantiate(kind, name, &Options::default()).unwrap()
    }

    #[test]
    fn tank_and_heat_load_by_edge_ports() {
        let tank = comp(ComponentKind::Tank, "mainTank");
        let hl = comp(ComponentKind::HeatLoad, "heatLoad");
        let sys = combine("Sys", &[tank.clone(), hl.clone()], &[ConnectionSpec::new((0, 2), (1, 1))]).unwrap();
        assert_eq!(sys.edges.len(), tank.edges.len() + hl.edges.len() - 1);
        assert_eq!(sys.vertices.len(), 4);
        assert_eq!(sys.inputs.len(), 4);
        let r = sys.validate();
        assert!(r.is_ok(), "{r}");
        let merged = sys.edges.iter().find(|e| e.name == "mainTank.Advection Out").unwrap();
        assert_eq!(merged.equations[0], Expr::parse("mainTank_cp_f*u2*xt").unwrap());
        assert!(!merged.external);
        assert!(sys.metadata["discarded_equations"].contains("heatLoad.Advection In"));
        assert_eq!(sys.metadata["input_map"], "mainTank.u1=u1, mainTank.u2=u2, heatLoad.u1=u3, heatLoad.u2=u4");
    }

    #[test]
    fn external_vertex_merges_into_dynamic_vertex() {
        let a = comp(ComponentKind::Pipe, "a");
        let b = comp(ComponentKind::Reservoir, "b");
        let sys = combine("s", &[a, b], &[ConnectionSpec::new((0, 2), (1, 3))]).unwrap();
        assert!(sys.validate().is_ok(), "{}", sys.validate());
        assert_eq!(sys.count(VertexKind::Dynamic), 2);
        assert_eq!(sys.count(VertexKind::External), 1);
        let res = sys.vertices.iter().position(|v| v.name == "b.Reservoir Pressure").unwrap() + 1;
        let duct = sys.edges.iter().position(|e| e.name == "a.Outlet Duct").unwrap();
        assert_eq!(sys.edge_matrix[duct][1], res);
        assert!(!sys.edges[duct].external);
    }

    #[test]
    fn connection_errors() {
        let t = comp(ComponentKind::Tank, "t");
        let h = comp(ComponentKind::HeatLoad, "h");
        let parts = [t.clone(), h.clone()];
        assert!(matches!(
            combine("s", &parts, &[ConnectionSpec::new((0, 1), (0, 2))]),
            Err(ComposeError::SelfConnection(_))
        ));
        assert!(matches!(
            combine("s", &parts, &[ConnectionSpec::new((0, 2), (1, 1)), ConnectionSpec::new((0, 2), (1, 2))]),
            Err(ComposeError::PortConsumed { .. })
        ));
        assert!(matches!(
            combine("s", &parts, &[ConnectionSpec::new((0, 2), (1, 4))]),
            Err(ComposeError::Mismatch(_))
        ));
        let p = comp(ComponentKind::Pipe, "p");
        assert!(matches!(
            combine("s", &[t, p], &[ConnectionSpec::new((0, 2), (1, 3))]),
            Err(ComposeError::Mismatch(_))
        ));
        let r1 = comp(ComponentKind::Reservoir, "r1");
        let r2 = comp(ComponentKind::Reservoir, "r2");
        assert!(matches!(
            combine("s", &[r1, r2], &[ConnectionSpec::new((0, 3), (1, 3))]),
            Err(ComposeError::DynamicMerge(_))
        ));
        assert!(combine("s", &[h.clone(), h], &[]).is_err());
    }

    #[test]
    fn swapped_priority_keeps_topology() {
        let t = comp(ComponentKind::Tank, "t");
        let h = comp(ComponentKind::HeatLoad, "h");
        let a = combine("s", &[t.clone(), h.clone()], &[ConnectionSpec::new((0, 2), (1, 1))]).unwrap();
        let b = combine("s", &[t, h], &[ConnectionSpec::new((1, 1), (0, 2))]).unwrap();
        assert_eq!(a.vertices.len(), b.vertices.len());
        assert_eq!(a.edges.len(), b.edges.len());
        assert_eq!(a.inputs.len(), b.inputs.len());
        assert!(b.validate().is_ok(), "{}", b.validate());
    }
}
