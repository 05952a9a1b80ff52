use crate::graph::{EdgeSpec, Graph, InputSpec, LookupTable, Parameter, Port, VertexSpec};

const HYDRAULIC: &str = "Hydraulic";

fn duct_equation(signed: bool) -> String {
    let drive = "xt - xh + rho*g*dh";
    if signed {
        format!("rho*A_c*sign({drive})*sqrt(2*abs({drive})/(rho*K_tot))")
    } else {
        format!("rho*A_c*sqrt(2*({drive})/(rho*K_tot))")
    }
}

fn fluid_parameters(g: &mut Graph) {
    g.add_parameter(Parameter::scalar("Fluid Density", "rho", 1000.0, "kg/m^3"));
    g.add_parameter(Parameter::scalar("Gravitational Acceleration", "g", 9.81, "m/s^2"));
}

fn duct_parameters(g: &mut Graph) {
    g.add_parameter(Parameter::scalar("Flow Cross Section", "A_c", 1e-4, "m^2"));
    g.add_parameter(Parameter::scalar("Height Difference", "dh", 0.0, "m"));
    g.add_parameter(Parameter::scalar("Total Loss Coefficient", "K_tot", 2.0, "-"));
}

pub(super) fn reservoir(name: &str) -> Graph {
    let mut g = Graph::new(name);
    let r = g.add_vertex(VertexSpec::dynamic("Reservoir Pressure", &["A_r/g*x_dot"]).units(&["Pa"]).ic(&[1e5]));
    let e_in = g.add_edge(EdgeSpec::new("Inflow", &["u1"]).external(), 0, r);
    let e_out = g.add_edge(EdgeSpec::new("Outflow", &["u2"]).external(), r, 0);
    g.add_parameter(Parameter::scalar("Reservoir Cross Section", "A_r", 0.5, "m^2"));
    g.add_parameter(Parameter::scalar("Gravitational Acceleration", "g", 9.81, "m/s^2"));
    g.add_input(InputSpec::new("Inflow Mass Flow", "u1", "kg/s").nominal(0.0));
    g.add_input(InputSpec::new("Outflow Mass Flow", "u2", "kg/s").nominal(0.0));
    g.add_port(Port::edge(e_in, HYDRAULIC));
    g.add_port(Port::edge(e_out, HYDRAULIC));
    g.add_port(Port::vertex(r, HYDRAULIC));
    g
}

pub(super) fn pipe(name: &str, signed: bool) -> Graph {
    let mut g = Graph::new(name);
    let p = g.add_vertex(VertexSpec::dynamic("Pipe Pressure", &["C_p*x_dot"]).units(&["Pa"]).ic(&[1.1e5]));
    let inlet = g.add_vertex(VertexSpec::external("Inlet Pressure", 1).units(&["Pa"]).ic(&[1.2e5]));
    let outlet = g.add_vertex(VertexSpec::external("Outlet Pressure", 1).units(&["Pa"]).ic(&[1e5]));
    let eq = duct_equation(signed);
    let e_in = g.add_edge(EdgeSpec::new("Inlet Duct", &[&eq]).external(), inlet, p);
    let e_out = g.add_edge(EdgeSpec::new("Outlet Duct", &[&eq]).external(), p, outlet);
    g.add_parameter(Parameter::scalar("Hydraulic Capacitance", "C_p", 1e-5, "kg/Pa"));
    fluid_parameters(&mut g);
    duct_parameters(&mut g);
    g.add_port(Port::vertex(inlet, HYDRAULIC));
    g.add_port(Port::vertex(outlet, HYDRAULIC));
    g.add_port(Port::edge(e_in, HYDRAULIC));
    g.add_port(Port::edge(e_out, HYDRAULIC));
    g
}

/// Head map `H(ω, Δp) = 2 + 3.5e-4 ω² - 2e-5 Δp` sampled on a grid that
/// covers zero to 450 rad/s and a pressure rise of -1 to 3 bar.
pub fn default_pump_map() -> LookupTable {
    let omega = vec![0.0, 150.0, 300.0, 450.0];
    let rise = vec![-1e5, 0.0, 1e5, 2e5, 3e5];
    LookupTable::sample_2d(omega, rise, |w, dp| 2.0 + 3.5e-4 * w * w - 2e-5 * dp)
}

pub(super) fn pump(name: &str, signed: bool) -> Graph {
    let mut g = Graph::new(name);
    let out = g.add_vertex(VertexSpec::dynamic("Outlet Pressure", &["C_p*x_dot"]).units(&["Pa"]).ic(&[2.9e5]));
    let inlet = g.add_vertex(VertexSpec::external("Inlet Pressure", 1).units(&["Pa"]).ic(&[1e5]));
    let down = g.add_vertex(VertexSpec::external("Downstream Pressure", 1).units(&["Pa"]).ic(&[1e5]));
    let e_pump = g.add_edge(
        EdgeSpec::new("Pump", &["rho*A_c*sqrt(2*g*(H(u1, xh - xt) - (xh - xt)/(rho*g)))"]).external(),
        inlet,
        out,
    );
    let e_duct = g.add_edge(EdgeSpec::new("Discharge Duct", &[&duct_equation(signed)]).external(), out, down);
    g.add_parameter(Parameter::scalar("Hydraulic Capacitance", "C_p", 1e-5, "kg/Pa"));
    fluid_parameters(&mut g);
    duct_parameters(&mut g);
    g.add_parameter(Parameter::table("Pump Head Map", "H", default_pump_map(), "m"));
    g.add_input(InputSpec::new("Pump Speed", "u1", "rad/s").nominal(300.0));
    g.add_port(Port::vertex(inlet, HYDRAULIC));
    g.add_port(Port::vertex(down, HYDRAULIC));
    g.add_port(Port::edge(e_pump, HYDRAULIC));
    g.add_port(Port::edge(e_duct, HYDRAULIC));
    g
}
