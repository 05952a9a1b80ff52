//! Electrical and mechanical components in energy form: vertex capacitance
//! is `λ·x`, transmission is `x_head·x_tail`, loss is `λ·x_tail²` and
//! conversion is `λ·x_head·x_tail`.

use crate::graph::{EdgeSpec, Graph, InputSpec, Parameter, Port, VertexSpec};

fn inertia(name: &str, lam: &str, unit: &str, ic: f64) -> VertexSpec {
    VertexSpec::dynamic(name, &[&format!("{lam}*x*x_dot")]).units(&[unit]).ic(&[ic])
}

fn param(g: &mut Graph, description: &str, var: &str, value: f64, units: &str) {
    g.add_parameter(Parameter::scalar(description, var, value, units));
}

pub(super) fn mass_spring_damper(name: &str) -> Graph {
    let mut g = Graph::new(name);
    let v = g.add_vertex(inertia("Mass Velocity", "m", "m/s", 1.0));
    let f = g.add_vertex(inertia("Spring Force", "c_s", "N", 0.5));
    let ground = g.add_vertex(VertexSpec::external("Ambient", 1).units(&["K"]).ic(&[300.0]));
    g.add_edge(EdgeSpec::new("Spring Transmission", &["xh*xt"]), v, f);
    let damper = g.add_edge(EdgeSpec::new("Damper", &["b*xt^2"]).external(), v, ground);
    let force = g.add_edge(EdgeSpec::new("Applied Force", &["u1*xh"]).external(), 0, v);
    param(&mut g, "Mass", "m", 1.0, "kg");
    param(&mut g, "Spring Compliance", "c_s", 0.25, "m/N");
    param(&mut g, "Damping Coefficient", "b", 0.5, "N*s/m");
    g.add_input(InputSpec::new("Applied Force", "u1", "N").nominal(0.0));
    g.add_port(Port::edge(force, "Mechanical"));
    g.add_port(Port::edge(damper, "Thermal"));
    g.add_port(Port::vertex(v, "Mechanical"));
    g
}

pub(super) fn buck_converter(name: &str) -> Graph {
    let mut g = Graph::new(name);
    let i = g.add_vertex(inertia("Inductor Current", "L", "A", 1.0));
    let v = g.add_vertex(inertia("Capacitor Voltage", "C_o", "V", 1.0));
    let src = g.add_vertex(VertexSpec::external("Source Voltage", 1).units(&["V"]).ic(&[24.0]));
    let amb = g.add_vertex(VertexSpec::external("Ambient", 1).units(&["K"]).ic(&[300.0]));
    let sw = g.add_edge(EdgeSpec::new("Switch Conversion", &["u1*xt*xh"]).external(), src, i);
    g.add_edge(EdgeSpec::new("Transmission", &["xt*xh"]), i, v);
    g.add_edge(EdgeSpec::new("Inductor Loss", &["R_L*xt^2"]).external(), i, amb);
    let load = g.add_edge(EdgeSpec::new("Load", &["xt^2/R_o"]).external(), v, amb);
    param(&mut g, "Inductance", "L", 0.01, "H");
    param(&mut g, "Output Capacitance", "C_o", 0.01, "F");
    param(&mut g, "Inductor Resistance", "R_L", 0.1, "Ohm");
    param(&mut g, "Load Resistance", "R_o", 5.0, "Ohm");
    g.add_input(InputSpec::new("Duty Ratio", "u1", "-").nominal(0.5));
    g.add_port(Port::vertex(src, "Electrical"));
    g.add_port(Port::edge(sw, "Electrical"));
    g.add_port(Port::edge(load, "Electrical"));
    g
}

pub(super) fn dc_motor(name: &str) -> Graph {
    let mut g = Graph::new(name);
    let i = g.add_vertex(inertia("Armature Current", "L_a", "A", 1.0));
    let w = g.add_vertex(inertia("Rotor Speed", "J_m", "rad/s", 1.0));
    let amb = g.add_vertex(VertexSpec::external("Ambient", 1).units(&["K"]).ic(&[300.0]));
    let supply = g.add_edge(EdgeSpec::new("Supply", &["u1*xh"]).external(), 0, i);
    g.add_edge(EdgeSpec::new("Armature Loss", &["R_a*xt^2"]).external(), i, amb);
    g.add_edge(EdgeSpec::new("Conversion", &["K_m*xt*xh"]), i, w);
    g.add_edge(EdgeSpec::new("Friction", &["b_m*xt^2"]).external(), w, amb);
    let load = g.add_edge(EdgeSpec::new("Shaft Load", &["u2*xt"]).external(), w, 0);
    param(&mut g, "Armature Inductance", "L_a", 0.01, "H");
    param(&mut g, "Armature Resistance", "R_a", 0.5, "Ohm");
    param(&mut g, "Motor Constant", "K_m", 0.05, "N*m/A");
    param(&mut g, "Rotor Inertia", "J_m", 1e-3, "kg*m^2");
    param(&mut g, "Viscous Friction", "b_m", 1e-4, "N*m*s");
    g.add_input(InputSpec::new("Supply Voltage", "u1", "V").nominal(12.0));
    g.add_input(InputSpec::new("Load Torque", "u2", "N*m").nominal(0.0));
    g.add_port(Port::edge(supply, "Electrical"));
    g.add_port(Port::edge(load, "Mechanical"));
    g
}

pub(super) fn loss_element(name: &str) -> Graph {
    let mut g = Graph::new(name);
    let x = g.add_vertex(inertia("Flow State", "lam", "-", 1.0));
    let amb = g.add_vertex(VertexSpec::external("Ambient", 1).units(&["K"]).ic(&[300.0]));
    g.add_edge(EdgeSpec::new("Loss", &["lam_p*xt^2"]).external(), x, amb);
    let drive = g.add_edge(EdgeSpec::new("Drive", &["u1*xh"]).external(), 0, x);
    param(&mut g, "Storage Property", "lam", 1.0, "-");
    param(&mut g, "Loss Coefficient", "lam_p", 0.5, "-");
    g.add_input(InputSpec::new("Effort", "u1", "-").nominal(0.0));
    g.add_port(Port::vertex(x, "Mechanical"));
    g.add_port(Port::edge(drive, "Mechanical"));
    g
}

pub(super) fn conversion_element(name: &str) -> Graph {
    let mut g = Graph::new(name);
    let a = g.add_vertex(inertia("Primary State", "lam_1", "-", 1.0));
    let b = g.add_vertex(inertia("Secondary State", "lam_2", "-", 1.0));
    g.add_edge(EdgeSpec::new("Conversion", &["lam_p*xt*xh"]), a, b);
    let drive = g.add_edge(EdgeSpec::new("Drive", &["u1*xh"]).external(), 0, a);
    param(&mut g, "Primary Storage", "lam_1", 1.0, "-");
    param(&mut g, "Secondary Storage", "lam_2", 2.0, "-");
    param(&mut g, "Conversion Ratio", "lam_p", 0.5, "-");
    g.add_input(InputSpec::new("Effort", "u1", "-").nominal(0.0));
    g.add_port(Port::vertex(a, "Mechanical"));
    g.add_port(Port::vertex(b, "Mechanical"));
    g.add_port(Port::edge(drive, "Mechanical"));
    g
}

/// Two storage elements joined through a zero-capacitance node. The node
/// equation is purely algebraic, so the assembled system is a DAE.
pub(super) fn virtual_element(name: &str) -> Graph {
    let mut g = Graph::new(name);
    let left = g.add_vertex(VertexSpec::dynamic("Left Storage", &["C_l*x_dot"]).units(&["K"]).ic(&[350.0]));
    let right = g.add_vertex(VertexSpec::dynamic("Right Storage", &["C_r*x_dot"]).units(&["K"]).ic(&[300.0]));
    let node = g.add_vertex(VertexSpec::algebraic("Virtual Node", &["0"]).units(&["K"]).ic(&[325.0]));
    g.add_edge(EdgeSpec::new("Left Conductance", &["G_1*(xt - xh)"]), left, node);
    g.add_edge(EdgeSpec::new("Right Conductance", &["G_2*(xt - xh)"]), node, right);
    param(&mut g, "Left Capacitance", "C_l", 10.0, "J/K");
    param(&mut g, "Right Capacitance", "C_r", 20.0, "J/K");
    param(&mut g, "Left Conductance", "G_1", 2.0, "W/K");
    param(&mut g, "Right Conductance", "G_2", 3.0, "W/K");
    g.add_port(Port::vertex(left, "Thermal"));
    g.add_port(Port::vertex(right, "Thermal"));
    g
}
