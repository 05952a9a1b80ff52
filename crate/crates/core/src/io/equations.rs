use super::IoError;
use crate::expr::Expr;
use crate::graph::{Graph, ParamValue};
use crate::sim::SymbolicSystem;
use std::collections::HashMap;
use std::fmt::Write;

/// One line per dynamic state, `<capacitance terms> = <signed flow sum>`, in
/// global symbols (`x<i>`, `x<i>_dot`, `u<k>`, `d<k>`). With `substitute`,
/// every scalar parameter not flagged as a design variable is replaced by its
/// value.
pub fn export_equations(g: &Graph, substitute: bool) -> Result<String, IoError> {
    let sys = SymbolicSystem::from_graph(g)?;
    let rules: HashMap<String, Expr> = if substitute {
        g.parameters
            .iter()
            .filter(|p| !p.design)
            .filter_map(|p| match p.value {
                ParamValue::Scalar(v) => Some((p.var.clone(), Expr::Const(v))),
                ParamValue::Table(_) => None,
            })
            .collect()
    } else {
        HashMap::new()
    };
    let finish = |e: &Expr| if substitute { e.substitute(&rules).simplify() } else { e.clone() };
    let mut out = String::new();
    for (r, state) in sys.states.iter().enumerate() {
        if state.algebraic {
            continue;
        }
        let row = &sys.rows[r];
        let _ = writeln!(out, "{} = {}", finish(&row.lhs), finish(&sys.row_rhs(r)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{instantiate, ComponentKind, Options};

    fn tank() -> Graph {
        instantiate(ComponentKind::Tank, "mainTank", &Options::default()).unwrap()
    }

    #[test]
    fn substitution_inserts_literal_values() {
        let text = export_equations(&tank(), true).unwrap();
        let temp = text.lines().nth(1).unwrap();
        assert!(temp.contains("3300") && !temp.contains("cp_f"), "{temp}");
    }

    #[test]
    fn symbolic_mode_keeps_names() {
        let text = export_equations(&tank(), false).unwrap();
        assert_eq!(text.lines().count(), 2);
        assert!(text.lines().nth(1).unwrap().contains("cp_f"));
    }

    #[test]
    fn design_parameters_stay_symbolic() {
        let mut g = tank();
        g.parameter_mut("cp_f").unwrap().design = true;
        for sub in [false, true] {
            assert!(export_equations(&g, sub).unwrap().contains("cp_f"));
        }
    }
}
