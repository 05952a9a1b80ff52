//! Reserved local symbol names used inside vertex and edge equations.
//!
//! Vertex equations see `x`/`x_dot` (single-state vertex) or `x<m>`/`x<m>_dot`
//! (multi-state vertex), and `xv<k>`/`xv<k>_dot` for the state of sibling
//! vertex `k` of the same graph. Edge equations see `xh`/`xt` or
//! `xh<m>`/`xt<m>` for head and tail states and `u<k>` for inputs.

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VertexSymbol {
    /// Own state `m` (1-based).
    State(usize),
    /// Derivative of own state `m`.
    Derivative(usize),
    /// Sibling vertex `k` (1-based), its state or derivative.
    Sibling { vertex: usize, derivative: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum End {
    Tail,
    Head,
}

impl End {
    pub fn label(self) -> &'static str {
        match self {
            End::Tail => "tail",
            End::Head => "head",
        }
    }
}

fn digits(s: &str) -> Option<usize> {
    if s.is_empty() || !s.bytes().all(|b| b.is_ascii_digit()) || s.starts_with('0') {
        return None;
    }
    s.parse().ok()
}

/// Classifies a vertex-equation symbol. `x` and `x_dot` are accepted only for
/// single-state vertices, `x<m>` forms only for multi-state vertices.
pub fn vertex_symbol(name: &str, state_count: usize) -> Option<VertexSymbol> {
    if let Some(rest) = name.strip_prefix("xv") {
        let (num, derivative) = match rest.strip_suffix("_dot") {
            Some(n) => (n, true),
            None => (rest, false),
        };
        return digits(num).map(|vertex| VertexSymbol::Sibling { vertex, derivative });
    }
    if state_count == 1 {
        return match name {
            "x" => Some(VertexSymbol::State(1)),
            "x_dot" => Some(VertexSymbol::Derivative(1)),
            _ => None,
        };
    }
    let rest = name.strip_prefix('x')?;
    match rest.strip_suffix("_dot") {
        Some(n) => digits(n).filter(|m| *m <= state_count).map(VertexSymbol::Derivative),
        None => digits(rest).filter(|m| *m <= state_count).map(VertexSymbol::State),
    }
}

/// Classifies an edge-equation state symbol: `xh`, `xt`, `xh<m>`, `xt<m>`.
pub fn edge_symbol(name: &str) -> Option<(End, usize)> {
    let (end, rest) = if let Some(r) = name.strip_prefix("xh") {
        (End::Head, r)
    } else {
        let r = name.strip_prefix("xt")?;
        (End::Tail, r)
    };
    if rest.is_empty() {
        Some((end, 0))
    } else {
        digits(rest).map(|m| (end, m))
    }
}

/// `u<k>` with k ≥ 1.
pub fn input_number(name: &str) -> Option<usize> {
    name.strip_prefix('u').and_then(digits)
}

/// Names a user parameter may not take.
pub fn is_reserved(name: &str) -> bool {
    if matches!(name, "x" | "x_dot" | "t") {
        return true;
    }
    if name.starts_with("xh") || name.starts_with("xt") || name.starts_with("xv") {
        return true;
    }
    let numbered = |prefix: char| {
        name.strip_prefix(prefix)
            .map(|r| r.strip_suffix("_dot").unwrap_or(r))
            .is_some_and(|r| !r.is_empty() && r.bytes().all(|b| b.is_ascii_digit()))
    };
    numbered('x') || numbered('u') || numbered('d')
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vertex_symbols() {
        assert_eq!(vertex_symbol("x", 1), Some(VertexSymbol::State(1)));
        assert_eq!(vertex_symbol("x_dot", 1), Some(VertexSymbol::Derivative(1)));
        assert_eq!(vertex_symbol("x", 2), None);
        assert_eq!(vertex_symbol("x2_dot", 2), Some(VertexSymbol::Derivative(2)));
        assert_eq!(vertex_symbol("x3", 2), None);
        assert_eq!(
            vertex_symbol("xv1_dot", 1),
            Some(VertexSymbol::Sibling { vertex: 1, derivative: true })
        );
        assert_eq!(vertex_symbol("cp_f", 1), None);
    }

    #[test]
    fn edge_symbols() {
        assert_eq!(edge_symbol("xh"), Some((End::Head, 0)));
        assert_eq!(edge_symbol("xt2"), Some((End::Tail, 2)));
        assert_eq!(edge_symbol("xtal"), None);
        assert_eq!(input_number("u12"), Some(12));
        assert_eq!(input_number("u0"), None);
        assert_eq!(input_number("ux"), None);
    }

    #[test]
    fn reserved_names() {
        for n in ["x", "x_dot", "x3", "x3_dot", "xh", "xt1", "xv2", "u1", "d4", "t"] {
            assert!(is_reserved(n), "{n}");
        }
        for n in ["cp_f", "hA", "u_nom", "dh", "tau", "x_ref"] {
            assert!(!is_reserved(n), "{n}");
        }
    }
}
