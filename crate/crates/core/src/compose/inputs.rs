use super::ComposeError;
use crate::expr::Expr;
use crate::graph::symbols::input_number;
use crate::graph::Graph;
use std::collections::HashMap;

/// Replaces inputs by expressions of other inputs and parameters, removes the
/// replaced inputs and renumbers the rest contiguously. The renumbering is
/// recorded in the `input_common` metadata entry.
pub fn input_common(g: &Graph, rules: &[(String, Expr)]) -> Result<Graph, ComposeError> {
    let mut out = g.clone();
    let mut subst = HashMap::new();
    for (old, _) in rules {
        if g.input(old).is_none() {
            return Err(ComposeError::UndeclaredInput(old.clone()));
        }
    }
    for (old, new) in rules {
        if *new == Expr::sym(old) {
            continue;
        }
        for s in new.free_symbols() {
            let declared = match input_number(&s) {
                Some(_) => g.input(&s).is_some() && !rules.iter().any(|(o, n)| *o == s && *n != Expr::sym(o)),
                None => g.parameter(&s).is_some_and(|p| p.scalar_value().is_some()),
            };
            if !declared {
                return Err(ComposeError::UndeclaredSymbol { input: old.clone(), symbol: s });
            }
        }
        subst.insert(old.clone(), new.clone());
    }
    if subst.is_empty() {
        return Ok(out);
    }
    out.inputs.retain(|i| !subst.contains_key(&i.var));
    let mut renumber = HashMap::new();
    let mut record = Vec::new();
    for (k, i) in out.sorted_inputs().into_iter().enumerate() {
        let var = format!("u{}", k + 1);
        record.push(format!("{}={var}", i.var));
        renumber.insert(i.var.clone(), Expr::sym(&var));
    }
    out.map_equations(|e| e.substitute(&subst).substitute(&renumber));
    for i in &mut out.inputs {
        if let Some(Expr::Sym(v)) = renumber.get(&i.var) {
            i.var = v.clone();
        }
    }
    out.inputs.sort_by_key(|i| input_number(&i.var));
    let replaced: Vec<String> = rules
        .iter()
        .filter(|(o, _)| subst.contains_key(o))
        .map(|(o, n)| format!("{o}->{n}"))
        .collect();
    out.metadata.insert("input_common".into(), format!("{}; {}", replaced.join(", "), record.join(", ")));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::{instantiate, ComponentKind, Options};

    fn split() -> Graph {
        instantiate(ComponentKind::SplitJunction, "Split", &Options::default()).unwrap()
    }

    #[test]
    fn split_junction_inlet_follows_outlets() {
        let g = input_common(&split(), &[("u3".into(), Expr::parse("(u1+u2)").unwrap())]).unwrap();
        assert_eq!(g.inputs.len(), 2);
        assert!(g.validate().is_ok(), "{}", g.validate());
        for e in &g.edges {
            for eq in &e.equations {
                assert!(!eq.contains_symbol("u3"));
            }
        }
        assert_eq!(g.edges[0].equations[1], Expr::parse("u1 + u2").unwrap());
    }

    #[test]
    fn identity_rule_is_a_no_op() {
        let g = split();
        assert_eq!(input_common(&g, &[("u1".into(), Expr::sym("u1"))]).unwrap(), g);
    }

    #[test]
    fn renumbers_remaining_inputs() {
        let g = input_common(&split(), &[("u1".into(), Expr::parse("u3 - u2").unwrap())]).unwrap();
        let vars: Vec<_> = g.inputs.iter().map(|i| i.var.as_str()).collect();
        assert_eq!(vars, ["u1", "u2"]);
        assert_eq!(g.edges[1].equations[1], Expr::parse("u2 - u1").unwrap());
    }

    #[test]
    fn rejects_undeclared_names() {
        let g = split();
        assert!(matches!(
            input_common(&g, &[("u9".into(), Expr::sym("u1"))]),
            Err(ComposeError::UndeclaredInput(_))
        ));
        assert!(matches!(
            input_common(&g, &[("u3".into(), Expr::parse("u1 + k").unwrap())]),
            Err(ComposeError::UndeclaredSymbol { .. })
        ));
    }
}
