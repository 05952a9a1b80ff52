use crate::graph::{EdgeSpec, Graph, InputSpec, Parameter, Port, VertexSpec};

const THERMAL: &str = "Thermal";

fn param(g: &mut Graph, description: &str, var: &str, value: f64, units: &str) {
    g.add_parameter(Parameter::scalar(description, var, value, units));
}

fn advection(name: &str, input: &str) -> EdgeSpec {
    EdgeSpec::new(name, &[&format!("cp_f*{input}*xt"), input]).targets(&[1, 0]).external()
}

pub(super) fn tank(name: &str) -> Graph {
    let mut g = Graph::new(name);
    g.add_vertex(VertexSpec::dynamic("Fluid Mass", &["x_dot"]).units(&["kg"]).ic(&[6000.0]));
    g.add_vertex(
        VertexSpec::dynamic("Fluid Temperature", &["cp_f*xv1*x_dot + cp_f*x*xv1_dot"])
            .units(&["K"])
            .ic(&[300.0]),
    );
    let e_in = g.add_edge(advection("Advection In", "u1"), 0, 2);
    let e_out = g.add_edge(advection("Advection Out", "u2"), 2, 0);
    g.route(1, 1, e_in, 2, 1.0);
    g.route(1, 1, e_out, 2, -1.0);
    param(&mut g, "Fluid Specific Heat", "cp_f", 3300.0, "J/(kg*K)");
    g.add_input(InputSpec::new("Inlet Mass Flow", "u1", "kg/s").nominal(1.0));
    g.add_input(InputSpec::new("Outlet Mass Flow", "u2", "kg/s").nominal(1.0));
    g.add_port(Port::edge(e_in, THERMAL));
    g.add_port(Port::edge(e_out, THERMAL));
    g.disturbance_defaults.insert("Advection In.tail".into(), 300.0);
    g
}

pub(super) fn heat_load(name: &str) -> Graph {
    let mut g = Graph::new(name);
    let f = g.add_vertex(VertexSpec::dynamic("Fluid Temperature", &["cp_f*M_f*x_dot"]).units(&["K"]).ic(&[300.0]));
    let w = g.add_vertex(VertexSpec::dynamic("Wall Temperature", &["cp_w*M_w*x_dot"]).units(&["K"]).ic(&[300.0]));
    let inlet = g.add_vertex(VertexSpec::external("Inlet Temperature", 1).units(&["K"]).ic(&[300.0]));
    let e_in = g.add_edge(advection("Advection In", "u1"), inlet, f);
    let e_out = g.add_edge(advection("Advection Out", "u1"), f, 0);
    g.add_edge(EdgeSpec::new("Convection", &["hA*(xt - xh)"]), w, f);
    let e_load = g.add_edge(EdgeSpec::new("Heat Load", &["u2"]).external(), 0, w);
    param(&mut g, "Fluid Specific Heat", "cp_f", 3300.0, "J/(kg*K)");
    param(&mut g, "Fluid Mass", "M_f", 0.5, "kg");
    param(&mut g, "Wall Specific Heat", "cp_w", 900.0, "J/(kg*K)");
    param(&mut g, "Wall Mass", "M_w", 2.0, "kg");
    param(&mut g, "Convective Conductance", "hA", 50.0, "W/K");
    g.add_input(InputSpec::new("Mass Flow", "u1", "kg/s").nominal(0.5));
    g.add_input(InputSpec::new("Heat Load", "u2", "W").nominal(1000.0));
    g.add_port(Port::edge(e_in, THERMAL));
    g.add_port(Port::edge(e_out, THERMAL));
    g.add_port(Port::edge(e_load, THERMAL));
    g.add_port(Port::vertex(w, THERMAL));
    g
}

fn junction(name: &str, inlets: &[&str], outlets: &[&str]) -> Graph {
    let mut g = Graph::new(name);
    let j = g.add_vertex(VertexSpec::dynamic("Junction Temperature", &["cp_f*M_j*x_dot"]).units(&["K"]).ic(&[300.0]));
    let label = |base: &str, k: usize, n: usize| if n > 1 { format!("{base} {}", k + 1) } else { base.to_string() };
    for (k, u) in inlets.iter().enumerate() {
        let edge_name = label("Inlet", k, inlets.len());
        let e = g.add_edge(advection(&edge_name, u), 0, j);
        g.add_port(Port::edge(e, THERMAL));
        g.disturbance_defaults.insert(format!("{edge_name}.tail"), 300.0);
    }
    for (k, u) in outlets.iter().enumerate() {
        let e = g.add_edge(advection(&label("Outlet", k, outlets.len()), u), j, 0);
        g.add_port(Port::edge(e, THERMAL));
    }
    param(&mut g, "Fluid Specific Heat", "cp_f", 3300.0, "J/(kg*K)");
    param(&mut g, "Junction Fluid Mass", "M_j", 0.2, "kg");
    g
}

pub(super) fn split_junction(name: &str) -> Graph {
    let mut g = junction(name, &["u3"], &["u1", "u2"]);
    g.add_input(InputSpec::new("Outlet 1 Mass Flow", "u1", "kg/s").nominal(0.25));
    g.add_input(InputSpec::new("Outlet 2 Mass Flow", "u2", "kg/s").nominal(0.25));
    g.add_input(InputSpec::new("Inlet Mass Flow", "u3", "kg/s").nominal(0.5));
    g
}

pub(super) fn mix_junction(name: &str) -> Graph {
    let mut g = junction(name, &["u1", "u2"], &["u3"]);
    g.add_input(InputSpec::new("Inlet 1 Mass Flow", "u1", "kg/s").nominal(0.25));
    g.add_input(InputSpec::new("Inlet 2 Mass Flow", "u2", "kg/s").nominal(0.25));
    g.add_input(InputSpec::new("Outlet Mass Flow", "u3", "kg/s").nominal(0.5));
    g
}
