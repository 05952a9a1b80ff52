use super::format::fmt_g17;
use crate::graph::{ConnectionType, Graph, ParamValue, VertexKind};
use std::fmt::Write;
use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportKind {
    Graph,
    Parameter,
    Input,
    Port,
    InitCond,
    Full,
}

impl ReportKind {
    pub const ALL: [ReportKind; 6] =
        [ReportKind::Graph, ReportKind::Parameter, ReportKind::Input, ReportKind::Port, ReportKind::InitCond, ReportKind::Full];

    pub fn as_str(self) -> &'static str {
        match self {
            ReportKind::Graph => "graph",
            ReportKind::Parameter => "parameter",
            ReportKind::Input => "input",
            ReportKind::Port => "port",
            ReportKind::InitCond => "initcond",
            ReportKind::Full => "full",
        }
    }
}

impl FromStr for ReportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        ReportKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown report kind '{s}'"))
    }
}

struct Table {
    title: String,
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(title: impl Into<String>, header: &[&'static str]) -> Self {
        Table { title: title.into(), header: header.to_vec(), rows: Vec::new() }
    }

    fn row(&mut self, cells: Vec<String>) {
        debug_assert_eq!(cells.len(), self.header.len());
        self.rows.push(cells);
    }

    fn render(&self, out: &mut String) {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &mut dyn Iterator<Item = &str>| {
            let mut s = String::new();
            for (k, (c, w)) in cells.zip(&widths).enumerate() {
                if k > 0 {
                    s.push_str("  ");
                }
                s.push_str(c);
                s.extend(std::iter::repeat_n(' ', w - c.chars().count()));
            }
            s.trim_end().to_string()
        };
        let total = widths.iter().sum::<usize>() + 2 * widths.len().saturating_sub(1);
        let _ = writeln!(out, "{}", self.title);
        let _ = writeln!(out, "{}", "=".repeat(self.title.chars().count()));
        let _ = writeln!(out, "{}", line(&mut self.header.iter().copied()));
        let _ = writeln!(out, "{}", "-".repeat(total));
        if self.rows.is_empty() {
            let _ = writeln!(out, "none");
        }
        for r in &self.rows {
            let _ = writeln!(out, "{}", line(&mut r.iter().map(String::as_str)));
        }
    }
}

fn endpoint_label(g: &Graph, v: usize) -> String {
    if v == 0 {
        "open".into()
    } else {
        format!("{} ({v})", g.vertex(v).name)
    }
}

fn graph_tables(g: &Graph) -> Vec<Table> {
    let mut vt = Table::new(format!("Vertices of {}", g.name), &["Index", "Name", "Kind", "States", "Units", "Equation"]);
    for (i, v) in g.vertices.iter().enumerate() {
        let eqs: Vec<String> = v.equations.iter().map(|e| e.to_string()).collect();
        vt.row(vec![
            (i + 1).to_string(),
            v.name.clone(),
            v.kind.label().into(),
            v.state_count.to_string(),
            v.units.join(", "),
            if v.kind == VertexKind::External { "-".into() } else { eqs.join("; ") },
        ]);
    }
    let mut et = Table::new(format!("Edges of {}", g.name), &["Index", "Name", "Equation", "External", "Tail", "Head"]);
    for (j, e) in g.edges.iter().enumerate() {
        let (t, h) = g.endpoints(j + 1);
        let eqs: Vec<String> = e.equations.iter().map(|e| e.to_string()).collect();
        et.row(vec![
            (j + 1).to_string(),
            e.name.clone(),
            eqs.join("; "),
            if e.external { "yes" } else { "no" }.into(),
            endpoint_label(g, t),
            endpoint_label(g, h),
        ]);
    }
    vec![vt, et]
}

fn parameter_table(g: &Graph) -> Table {
    let mut t = Table::new(format!("Parameters of {}", g.name), &["Index", "Variable", "Description", "Value", "Units", "Design"]);
    for (k, p) in g.parameters.iter().enumerate() {
        let value = match &p.value {
            ParamValue::Scalar(v) => fmt_g17(*v),
            ParamValue::Table(tab) => {
                let dims: Vec<String> = tab.axes.iter().map(|a| a.len().to_string()).collect();
                format!("table {}", dims.join("x"))
            }
        };
        t.row(vec![
            (k + 1).to_string(),
            p.var.clone(),
            p.description.clone(),
            value,
            p.units.clone(),
            if p.design { "yes" } else { "no" }.into(),
        ]);
    }
    t
}

fn input_table(g: &Graph) -> Table {
    let mut t = Table::new(format!("Inputs of {}", g.name), &["Index", "Variable", "Description", "Units", "Nominal"]);
    for (k, i) in g.sorted_inputs().into_iter().enumerate() {
        t.row(vec![
            (k + 1).to_string(),
            i.var.clone(),
            i.description.clone(),
            i.units.clone(),
            i.nominal.map_or_else(|| "-".into(), fmt_g17),
        ]);
    }
    t
}

fn port_table(g: &Graph) -> Table {
    let mut t = Table::new(format!("Ports of {}", g.name), &["Index", "Type", "Element", "Domain"]);
    for (k, p) in g.ports.iter().enumerate() {
        let (kind, name) = match p.connection {
            ConnectionType::EdgeConnection => ("edge", g.edges.get(p.element - 1).map(|e| e.name.as_str())),
            ConnectionType::VertexConnection => ("vertex", g.vertices.get(p.element - 1).map(|v| v.name.as_str())),
        };
        t.row(vec![
            (k + 1).to_string(),
            kind.into(),
            format!("{} ({})", name.unwrap_or("?"), p.element),
            p.domain.clone(),
        ]);
    }
    t
}

fn initcond_table(g: &Graph) -> Table {
    let mut t = Table::new(format!("Initial conditions of {}", g.name), &["Vertex", "Name", "State", "Units", "Value"]);
    for (i, v) in g.vertices.iter().enumerate() {
        if v.kind == VertexKind::External {
            continue;
        }
        for m in 0..v.state_count {
            let value = v.initial_condition.as_ref().and_then(|ic| ic.get(m)).map_or_else(|| "unassigned".into(), |x| fmt_g17(*x));
            t.row(vec![
                (i + 1).to_string(),
                v.name.clone(),
                (m + 1).to_string(),
                v.units.get(m).cloned().unwrap_or_default(),
                value,
            ]);
        }
    }
    t
}

/// Renders a fixed-width text report. `Full` concatenates the graph,
/// parameter, input, port and initial-condition reports.
pub fn render_report(g: &Graph, kind: ReportKind) -> String {
    let tables = match kind {
        ReportKind::Graph => graph_tables(g),
        ReportKind::Parameter => vec![parameter_table(g)],
        ReportKind::Input => vec![input_table(g)],
        ReportKind::Port => vec![port_table(g)],
        ReportKind::InitCond => vec![initcond_table(g)],
        ReportKind::Full => {
            let mut v = graph_tables(g);
            v.extend([parameter_table(g), input_table(g), port_table(g), initcond_table(g)]);
            v
        }
    };
    let mut out = String::new();
    for (k, t) in tables.iter().enumerate() {
        if k > 0 {
            out.push('\n');
        }
        t.render(&mut out);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{instantiate, ComponentKind, Options};

    fn rows_of(report: &str, title: &str) -> usize {
        let block = report.split("\n\n").find(|b| b.starts_with(title)).unwrap();
        block.lines().count() - 4
    }

    #[test]
    fn tank_graph_report_lists_two_vertices_and_two_edges() {
        let g = instantiate(ComponentKind::Tank, "mainTank", &Options::default()).unwrap();
        let r = render_report(&g, ReportKind::Graph);
        assert_eq!(rows_of(&r, "Vertices"), 2);
        assert_eq!(rows_of(&r, "Edges"), 2);
    }

    #[test]
    fn empty_table_prints_none() {
        let g = Graph::new("empty");
        let r = render_report(&g, ReportKind::Parameter);
        let lines: Vec<&str> = r.lines().collect();
        assert_eq!(lines.len(), 5);
        assert_eq!(lines[4], "none");
    }

    #[test]
    fn unset_initial_conditions_are_flagged() {
        let mut g = instantiate(ComponentKind::Tank, "t", &Options::default()).unwrap();
        g.vertices[0].initial_condition = None;
        let r = render_report(&g, ReportKind::InitCond);
        assert!(r.lines().nth(4).unwrap().ends_with("unassigned"));
    }

    #[test]
    fn columns_are_aligned() {
        let g = instantiate(ComponentKind::HeatLoad, "hl", &Options::default()).unwrap();
        let r = render_report(&g, ReportKind::Parameter);
        let lines: Vec<&str> = r.lines().collect();
        let col = lines[2].find("Description").unwrap();
        for l in &lines[4..] {
            assert_eq!(&l[col - 2..col], "  ");
        }
    }
}
