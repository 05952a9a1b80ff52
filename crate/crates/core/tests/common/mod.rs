#![allow(dead_code)]

use gbm::compose::{AlgebraicState, BoundaryCondition, Link, Source, StitchSpec};
use gbm::expr::Expr;
use gbm::graph::{EdgeSpec, Graph, InputSpec, Parameter, VertexSpec};
use gbm::library::{instantiate, ComponentKind, Options};
use rand::Rng;

/// Random normalized graph: dynamic vertices first, then external ones.
/// Edges join distinct vertices and are marked external when they touch an
/// external vertex.
pub fn random_graph(rng: &mut impl Rng, max_vertices: usize, max_edges: usize) -> Graph {
    let nv = rng.random_range(2..=max_vertices);
    let n_ext = rng.random_range(0..nv.min(4));
    let n_int = nv - n_ext;
    let mut g = Graph::new("random");
    for i in 0..n_int {
        g.add_vertex(VertexSpec::dynamic(&format!("v{i}"), &["x_dot"]));
    }
    for i in 0..n_ext {
        g.add_vertex(VertexSpec::external(&format!("e{i}"), 1));
    }
    let ne = rng.random_range(1..=max_edges);
    for j in 0..ne {
        let t = rng.random_range(1..=nv);
        let mut h = rng.random_range(1..=nv - 1);
        if h >= t {
            h += 1;
        }
        let mut e = EdgeSpec::new(&format!("e{j}"), &["xt - xh"]);
        if t > n_int || h > n_int {
            e = e.external();
        }
        g.add_edge(e, t, h);
    }
    g
}

/// Five vertices with distinct capacitances, coupled by conduction on a ring
/// plus two chords. With `source`, a constant power enters vertex 1 through
/// an open-ended edge.
pub fn conduction_graph(source: Option<f64>) -> Graph {
    let mut g = Graph::new("conduction");
    let caps = [1.0, 2.0, 0.5, 3.0, 1.5];
    let init = [10.0, -3.0, 4.0, 0.5, 7.0];
    for (i, (c, x)) in caps.iter().zip(init).enumerate() {
        let name = format!("C{}", i + 1);
        g.add_vertex(VertexSpec::dynamic(&format!("node{}", i + 1), &[&format!("{name}*x_dot")]).ic(&[x]));
        g.add_parameter(Parameter::scalar("capacitance", &name, *c, ""));
    }
    let pairs = [(1, 2), (2, 3), (3, 4), (4, 5), (5, 1), (1, 3), (2, 5)];
    let gains = [0.7, 1.1, 0.4, 2.0, 0.9, 0.3, 1.6];
    for (j, (&(t, h), k)) in pairs.iter().zip(gains).enumerate() {
        let name = format!("k{}", j + 1);
        g.add_edge(EdgeSpec::new(&format!("edge{}", j + 1), &[&format!("{name}*(xt - xh)")]), t, h);
        g.add_parameter(Parameter::scalar("conductance", &name, k, ""));
    }
    if let Some(p) = source {
        g.add_edge(EdgeSpec::new("source", &["P_in"]).external(), 0, 1);
        g.add_parameter(Parameter::scalar("source power", "P_in", p, ""));
    }
    g
}

/// `C ẋ1 = -k (x1 - x2)`, `C ẋ2 = k (x1 - x2)` with `C = k = 1`.
pub fn exchange_pair() -> Graph {
    let mut g = Graph::new("pair");
    let a = g.add_vertex(VertexSpec::dynamic("a", &["C*x_dot"]).ic(&[1.0]));
    let b = g.add_vertex(VertexSpec::dynamic("b", &["C*x_dot"]).ic(&[0.0]));
    g.add_edge(EdgeSpec::new("exchange", &["k*(xt - xh)"]), a, b);
    g.add_parameter(Parameter::scalar("capacitance", "C", 1.0, ""));
    g.add_parameter(Parameter::scalar("conductance", "k", 1.0, ""));
    g
}

/// `C ẋ = ṁ cp (T_in - x)` through an inlet from an external vertex and an
/// open outlet.
pub fn advection() -> Graph {
    let mut g = Graph::new("adv");
    let v = g.add_vertex(VertexSpec::dynamic("T", &["C*x_dot"]).ic(&[300.0]));
    let inlet = g.add_vertex(VertexSpec::external("T_in", 1).ic(&[350.0]));
    g.add_edge(EdgeSpec::new("in", &["cp*u1*xt"]).external(), inlet, v);
    g.add_edge(EdgeSpec::new("out", &["cp*u1*xt"]).external(), v, 0);
    g.add_parameter(Parameter::scalar("capacitance", "C", 100.0, ""));
    g.add_parameter(Parameter::scalar("specific heat", "cp", 4.0, ""));
    g.add_input(InputSpec::new("mass flow", "u1", "kg/s").nominal(0.2));
    g
}

/// Single vertex `C ẋ = -k x` drained to an open end.
pub fn decay(c: f64, k: f64) -> Graph {
    let mut g = Graph::new("decay");
    let v = g.add_vertex(VertexSpec::dynamic("node", &["C*x_dot"]).ic(&[1.0]));
    g.add_edge(EdgeSpec::new("leak", &["k*xt"]).external(), v, 0);
    g.add_parameter(Parameter::scalar("capacitance", "C", c, ""));
    g.add_parameter(Parameter::scalar("conductance", "k", k, ""));
    g
}

/// Two vertices in series: upstream fed from an open end, downstream fed only
/// by the upstream vertex.
pub fn series_pair() -> Graph {
    let mut g = Graph::new("series");
    let a = g.add_vertex(VertexSpec::dynamic("up", &["C*x_dot"]).ic(&[1.0]));
    let b = g.add_vertex(VertexSpec::dynamic("down", &["C*x_dot"]).ic(&[0.25]));
    g.add_edge(EdgeSpec::new("feed", &["u1"]).external(), 0, a);
    g.add_edge(EdgeSpec::new("link", &["k*(xt - xh)"]), a, b);
    g.add_parameter(Parameter::scalar("capacitance", "C", 1.0, ""));
    g.add_parameter(Parameter::scalar("conductance", "k", 1.0, ""));
    g.add_input(InputSpec::new("feed", "u1", "W").nominal(0.5));
    g
}

/// Radiative exchange with a state-dependent capacitance and an input-driven
/// nonlinear supply.
pub fn radiator() -> Graph {
    let mut g = Graph::new("radiator");
    let a = g.add_vertex(VertexSpec::dynamic("body", &["(1 + a*x^2)*x_dot"]).ic(&[1.2]));
    let b = g.add_vertex(VertexSpec::dynamic("shield", &["C*x_dot"]).ic(&[0.8]));
    let amb = g.add_vertex(VertexSpec::external("sky", 1).ic(&[0.5]));
    g.add_edge(EdgeSpec::new("radiation", &["s*(xt^4 - xh^4)"]), a, b);
    g.add_edge(EdgeSpec::new("loss", &["s*(xt^4 - xh^4)"]).external(), b, amb);
    g.add_edge(EdgeSpec::new("heater", &["u1*sqrt(1 + xh^2) + u2*exp(-xh)"]).external(), 0, a);
    g.add_parameter(Parameter::scalar("nonlinearity", "a", 0.3, ""));
    g.add_parameter(Parameter::scalar("capacitance", "C", 2.0, ""));
    g.add_parameter(Parameter::scalar("emissivity", "s", 0.7, ""));
    g.add_input(InputSpec::new("heater 1", "u1", "").nominal(1.0));
    g.add_input(InputSpec::new("heater 2", "u2", "").nominal(0.5));
    g
}

/// A nonlinear test system with the box its operating points are drawn from.
pub struct NonlinearCase {
    pub graph: Graph,
    pub x_range: Vec<(f64, f64)>,
    pub u_range: (f64, f64),
}

pub fn nonlinear_cases() -> Vec<NonlinearCase> {
    let lib = |k| instantiate(k, k.as_str(), &Options::default()).unwrap();
    vec![
        NonlinearCase {
            graph: lib(ComponentKind::Tank),
            x_range: vec![(1000.0, 8000.0), (280.0, 360.0)],
            u_range: (0.2, 2.0),
        },
        NonlinearCase {
            graph: lib(ComponentKind::MassSpringDamper),
            x_range: vec![(0.5, 2.0); 2],
            u_range: (-1.0, 1.0),
        },
        NonlinearCase { graph: lib(ComponentKind::BuckConverter), x_range: vec![(0.5, 3.0); 2], u_range: (0.1, 0.9) },
        NonlinearCase { graph: lib(ComponentKind::DcMotor), x_range: vec![(0.5, 3.0); 2], u_range: (0.0, 12.0) },
        NonlinearCase { graph: radiator(), x_range: vec![(0.5, 2.0); 2], u_range: (0.0, 2.0) },
    ]
}

/// Heat load whose inlet temperature comes from a chain of three algebraic
/// vertices: a boundary prescription, a continuity link and a pump model
/// adding `dT_pump`.
pub fn stitched_chain() -> StitchSpec {
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

pub fn max_rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}
