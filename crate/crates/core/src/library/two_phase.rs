use super::fluid::SyntheticRefrigerant;
use crate::graph::{EdgeSpec, Graph, InputSpec, Parameter, Port, VertexSpec};

const ENERGY: &str = "(rho_c*x1 + (rho_a + rho_b*x2 + rho_c*x1))*V_r*x1_dot + (rho_b*x1 - 1)*V_r*x2_dot";
const MASS: &str = "rho_c*V_r*x1_dot + rho_b*V_r*x2_dot";

/// Step functions of the enthalpy at the saturated liquid and vapor points
/// pick one of three constant conductances.
const REGIME_HA: &str = "(hA_l*(1 - (1 + sign(xh1 - h_l))/2) \
    + hA_tp*((1 + sign(xh1 - h_l))/2 - (1 + sign(xh1 - h_v))/2) \
    + hA_v*(1 + sign(xh1 - h_v))/2)";

/// Two-phase cold plate discretized into `n` control volumes in series.
/// Each volume carries enthalpy and pressure states and exchanges heat with
/// its own wall segment.
pub(super) fn cold_plate(name: &str, n: usize) -> Graph {
    let fluid = SyntheticRefrigerant::default();
    let mut g = Graph::new(name);
    let mut volumes = Vec::new();
    let mut walls = Vec::new();
    for k in 1..=n {
        let suffix = if n > 1 { format!(" {k}") } else { String::new() };
        volumes.push(
            g.add_vertex(
                VertexSpec::dynamic(&format!("Refrigerant{suffix}"), &[ENERGY, MASS])
                    .units(&["J/kg", "Pa"])
                    .ic(&[2.5e5, 4e5]),
            ),
        );
        walls.push(g.add_vertex(
            VertexSpec::dynamic(&format!("Wall Temperature{suffix}"), &["cp_w*M_w*x_dot"]).units(&["K"]).ic(&[285.0]),
        ));
    }
    let inlet = g.add_vertex(VertexSpec::external("Inlet", 2).units(&["J/kg", "Pa"]).ic(&[2e5, 4e5]));
    let outlet = g.add_vertex(VertexSpec::external("Outlet", 2).units(&["J/kg", "Pa"]).ic(&[2.5e5, 4e5]));

    let advect = |label: &str, u: &str| EdgeSpec::new(label, &[&format!("{u}*xt1"), u]).targets(&[1, 2]);
    let e_in = g.add_edge(advect("Inlet Flow", "u1").external(), inlet, volumes[0]);
    for k in 1..n {
        g.add_edge(advect(&format!("Internal Flow {k}"), "u1"), volumes[k - 1], volumes[k]);
    }
    let e_out = g.add_edge(advect("Outlet Flow", "u2").external(), volumes[n - 1], outlet);
    let convection = format!("{REGIME_HA}*(xt - T_r(xh2, xh1))");
    let load = if n > 1 { format!("u3/{n}") } else { "u3".to_string() };
    for k in 0..n {
        let suffix = if n > 1 { format!(" {}", k + 1) } else { String::new() };
        g.add_edge(EdgeSpec::new(&format!("Convection{suffix}"), &[&convection]).targets(&[1]), walls[k], volumes[k]);
    }
    for k in 0..n {
        let suffix = if n > 1 { format!(" {}", k + 1) } else { String::new() };
        g.add_edge(EdgeSpec::new(&format!("Heat Load{suffix}"), &[&load]).external(), 0, walls[k]);
    }

    let p = |g: &mut Graph, d: &str, v: &str, x: f64, u: &str| g.add_parameter(Parameter::scalar(d, v, x, u));
    p(&mut g, "Control Volume", "V_r", 1e-3 / n as f64, "m^3");
    p(&mut g, "Density Offset", "rho_a", fluid.a, "kg/m^3");
    p(&mut g, "Density Pressure Slope", "rho_b", fluid.b, "kg/(m^3*Pa)");
    p(&mut g, "Density Enthalpy Slope", "rho_c", fluid.c, "kg^2/(m^3*J)");
    p(&mut g, "Saturated Liquid Enthalpy", "h_l", fluid.h_l, "J/kg");
    p(&mut g, "Saturated Vapor Enthalpy", "h_v", fluid.h_v, "J/kg");
    p(&mut g, "Liquid Conductance", "hA_l", 20.0 / n as f64, "W/K");
    p(&mut g, "Two-Phase Conductance", "hA_tp", 60.0 / n as f64, "W/K");
    p(&mut g, "Vapor Conductance", "hA_v", 15.0 / n as f64, "W/K");
    p(&mut g, "Wall Specific Heat", "cp_w", 900.0, "J/(kg*K)");
    p(&mut g, "Wall Segment Mass", "M_w", 0.5 / n as f64, "kg");
    g.add_parameter(Parameter::table("Refrigerant Temperature", "T_r", fluid.temperature_table(), "K"));
    g.add_input(InputSpec::new("Inlet Mass Flow", "u1", "kg/s").nominal(0.01));
    g.add_input(InputSpec::new("Outlet Mass Flow", "u2", "kg/s").nominal(0.01));
    g.add_input(InputSpec::new("Heat Load", "u3", "W").nominal(500.0));
    g.add_port(Port::edge(e_in, "TwoPhase"));
    g.add_port(Port::edge(e_out, "TwoPhase"));
    for w in walls {
        g.add_port(Port::vertex(w, "Thermal"));
    }
    g
}
