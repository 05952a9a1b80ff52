use crate::graph::symbols::End;
use crate::graph::{Graph, VertexKind};
use std::fmt::Write;

fn quote(s: &str) -> String {
    format!("\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\""))
}

/// DOT drawing: dynamic vertices solid circles, algebraic vertices double
/// circles, external vertices dashed. Open edge ends become point nodes.
pub fn export_drawing(g: &Graph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph {} {{", quote(&g.name));
    let _ = writeln!(out, "  rankdir=LR;");
    for (i, v) in g.vertices.iter().enumerate() {
        let (shape, style) = match v.kind {
            VertexKind::Dynamic => ("circle", "solid"),
            VertexKind::Algebraic => ("doublecircle", "solid"),
            VertexKind::External => ("circle", "dashed"),
        };
        let _ = writeln!(out, "  v{} [label={}, shape={shape}, style={style}];", i + 1, quote(&v.name));
    }
    let node = |j: usize, end: End| match g.endpoint(j, end) {
        0 => format!("open{j}_{}", end.label()),
        v => format!("v{v}"),
    };
    for j in 1..=g.edges.len() {
        for end in [End::Tail, End::Head] {
            if g.endpoint(j, end) == 0 {
                let _ = writeln!(out, "  {} [shape=point];", node(j, end));
            }
        }
    }
    for (j, e) in g.edges.iter().enumerate() {
        let _ = writeln!(out, "  {} -> {} [label={}];", node(j + 1, End::Tail), node(j + 1, End::Head), quote(&e.name));
    }
    out.push_str("}\n");
    out
}
