//! Algebraic expressions used for vertex and edge equations.
//!
//! Grammar (ASCII, whitespace ignored):
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := primary ('^' unary)?            right associative
//! primary := number | symbol | call | '(' expr ')'
//! call    := name '(' expr (',' expr)* ')'
//! ```
//!
//! Built-in functions are `sqrt`, `abs`, `sign`, `exp` and `ln`. Any other
//! call is a named function (lookup table) resolved when the expression is
//! compiled or evaluated with a [`FunctionSet`].
//!
//! Parsing folds subtrees made only of literals. No other simplification is
//! applied to parsed input; derivatives use the identity-eliminating
//! constructors in this module.

mod diff;
mod eval;
mod parse;

use std::collections::{BTreeSet, HashMap};
use std::fmt;

pub use eval::{Bindings, Compiled, EvalError, Function, FunctionSet, NoFunctions, SlotMap};
pub use parse::ParseError;

/// Suffix marking the partial derivative of a named function with respect to
/// one of its arguments, e.g. `T_r__d1(p, h)` is `∂T_r/∂h`.
pub const PARTIAL_SUFFIX: &str = "__d";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum UnaryOp {
    Neg,
    Sqrt,
    Abs,
    Sign,
    Exp,
    Ln,
}

impl UnaryOp {
    pub fn name(self) -> &'static str {
        match self {
            UnaryOp::Neg => "-",
            UnaryOp::Sqrt => "sqrt",
            UnaryOp::Abs => "abs",
            UnaryOp::Sign => "sign",
            UnaryOp::Exp => "exp",
            UnaryOp::Ln => "ln",
        }
    }

    pub(crate) fn from_function_name(name: &str) -> Option<Self> {
        Some(match name {
            "sqrt" => UnaryOp::Sqrt,
            "abs" => UnaryOp::Abs,
            "sign" => UnaryOp::Sign,
            "exp" => UnaryOp::Exp,
            "ln" => UnaryOp::Ln,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
            BinaryOp::Pow => 4,
        }
    }
}

/// Expression tree. Immutable once built; all rewrites return new trees.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Sym(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(String, Vec<Expr>),
}

/// True when `name` is a legal symbol: `[A-Za-z_][A-Za-z0-9_]*`.
pub fn is_symbol_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parse::parse(text)
    }

    pub fn sym(name: impl Into<String>) -> Expr {
        Expr::Sym(name.into())
    }

    pub fn constant(&self) -> Option<f64> {
        match self {
            Expr::Const(c) => Some(*c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if *c == 0.0)
    }

    /// Set of symbol names appearing anywhere in the tree.
    pub fn free_symbols(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.visit_symbols(&mut |s| {
            out.insert(s.to_string());
        });
        out
    }

    pub fn contains_symbol(&self, name: &str) -> bool {
        let mut found = false;
        self.visit_symbols(&mut |s| found |= s == name);
        found
    }

    pub(crate) fn visit_symbols(&self, f: &mut impl FnMut(&str)) {
        match self {
            Expr::Const(_) => {}
            Expr::Sym(s) => f(s),
            Expr::Unary(_, a) => a.visit_symbols(f),
            Expr::Binary(_, a, b) => {
                a.visit_symbols(f);
                b.visit_symbols(f);
            }
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit_symbols(f)),
        }
    }

    /// Names of the table functions called anywhere in the tree.
    pub fn function_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        fn walk(e: &Expr, out: &mut BTreeSet<String>) {
            match e {
                Expr::Const(_) | Expr::Sym(_) => {}
                Expr::Unary(_, a) => walk(a, out),
                Expr::Binary(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
                Expr::Call(name, args) => {
                    out.insert(name.clone());
                    args.iter().for_each(|a| walk(a, out));
                }
            }
        }
        walk(self, &mut out);
        out
    }

    /// Simultaneous single-pass replacement of symbols. Replacement trees are
    /// inserted as-is and never rescanned.
    pub fn substitute(&self, rules: &HashMap<String, Expr>) -> Expr {
        if rules.is_empty() {
            return self.clone();
        }
        self.map_symbols(&mut |s| rules.get(s).cloned())
    }

    /// Rebuilds the tree, replacing each symbol for which `f` returns a tree.
    pub fn map_symbols(&self, f: &mut impl FnMut(&str) -> Option<Expr>) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(*c),
            Expr::Sym(s) => f(s).unwrap_or_else(|| Expr::Sym(s.clone())),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.map_symbols(f))),
            Expr::Binary(op, a, b) => {
                Expr::Binary(*op, Box::new(a.map_symbols(f)), Box::new(b.map_symbols(f)))
            }
            Expr::Call(name, args) => {
                Expr::Call(name.clone(), args.iter().map(|a| a.map_symbols(f)).collect())
            }
        }
    }

    /// Renames called functions.
    pub fn rename_functions(&self, f: &impl Fn(&str) -> Option<String>) -> Expr {
        match self {
            Expr::Const(_) | Expr::Sym(_) => self.clone(),
            Expr::Unary(op, a) => Expr::Unary(*op, Box::new(a.rename_functions(f))),
            Expr::Binary(op, a, b) => Expr::Binary(
                *op,
                Box::new(a.rename_functions(f)),
                Box::new(b.rename_functions(f)),
            ),
            Expr::Call(name, args) => Expr::Call(
                f(name).unwrap_or_else(|| name.clone()),
                args.iter().map(|a| a.rename_functions(f)).collect(),
            ),
        }
    }

    /// Symbolic partial derivative. `sign` and `abs` are treated as piecewise
    /// smooth: `d sign(a) = 0`, `d abs(a) = sign(a)·da`.
    pub fn differentiate(&self, sym: &str) -> Expr {
        diff::differentiate(self, sym)
    }

    /// Applies the identity-eliminating constructors bottom-up
    /// (`0·a → 0`, `1·a → a`, `a + 0 → a`, literal folding, ...).
    pub fn simplify(&self) -> Expr {
        match self {
            Expr::Const(_) | Expr::Sym(_) => self.clone(),
            Expr::Unary(op, a) => unary(*op, a.simplify()),
            Expr::Binary(op, a, b) => binary(*op, a.simplify(), b.simplify()),
            Expr::Call(name, args) => {
                Expr::Call(name.clone(), args.iter().map(Expr::simplify).collect())
            }
        }
    }

    pub fn evaluate(&self, b: &Bindings) -> Result<f64, EvalError> {
        eval::evaluate(self, b, &NoFunctions)
    }

    pub fn evaluate_with(&self, b: &Bindings, funcs: &dyn FunctionSet) -> Result<f64, EvalError> {
        eval::evaluate(self, b, funcs)
    }

    /// Fully parenthesized rendering: every binary node is wrapped.
    pub fn to_explicit_string(&self) -> String {
        let mut s = String::new();
        write_explicit(self, &mut s);
        s
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Const(_) | Expr::Sym(_) => 1,
            Expr::Unary(_, a) => 1 + a.node_count(),
            Expr::Binary(_, a, b) => 1 + a.node_count() + b.node_count(),
            Expr::Call(_, args) => 1 + args.iter().map(Expr::node_count).sum::<usize>(),
        }
    }
}

// ---------------------------------------------------------------------------
// Smart constructors
// ---------------------------------------------------------------------------

fn finite(v: f64) -> Option<Expr> {
    v.is_finite().then_some(Expr::Const(v))
}

pub(crate) fn apply_unary(op: UnaryOp, v: f64) -> f64 {
    match op {
        UnaryOp::Neg => -v,
        UnaryOp::Sqrt => v.sqrt(),
        UnaryOp::Abs => v.abs(),
        UnaryOp::Sign => sign(v),
        UnaryOp::Exp => v.exp(),
        UnaryOp::Ln => v.ln(),
    }
}

pub(crate) fn apply_binary(op: BinaryOp, a: f64, b: f64) -> f64 {
    match op {
        BinaryOp::Add => a + b,
        BinaryOp::Sub => a - b,
        BinaryOp::Mul => a * b,
        BinaryOp::Div => a / b,
        BinaryOp::Pow => a.powf(b),
    }
}

/// `sign` with `sign(0) = 0`.
pub(crate) fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Literal folding only; used by the parser.
pub(crate) fn fold_unary(op: UnaryOp, a: Expr) -> Expr {
    if let Expr::Const(c) = a {
        let domain_ok = match op {
            UnaryOp::Sqrt => c >= 0.0,
            UnaryOp::Ln => c > 0.0,
            _ => true,
        };
        if domain_ok {
            if let Some(e) = finite(apply_unary(op, c)) {
                return e;
            }
        }
    }
    Expr::Unary(op, Box::new(a))
}

pub(crate) fn fold_binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    if let (Expr::Const(x), Expr::Const(y)) = (&a, &b) {
        let domain_ok = !(op == BinaryOp::Div && *y == 0.0);
        if domain_ok {
            if let Some(e) = finite(apply_binary(op, *x, *y)) {
                return e;
            }
        }
    }
    Expr::Binary(op, Box::new(a), Box::new(b))
}

pub fn neg(a: Expr) -> Expr {
    match a {
        Expr::Const(c) => Expr::Const(-c),
        Expr::Unary(UnaryOp::Neg, inner) => *inner,
        other => Expr::Unary(UnaryOp::Neg, Box::new(other)),
    }
}

pub fn unary(op: UnaryOp, a: Expr) -> Expr {
    match op {
        UnaryOp::Neg => neg(a),
        _ => fold_unary(op, a),
    }
}

pub fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    fold_binary(BinaryOp::Add, a, b)
}

pub fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        return a;
    }
    if a.is_zero() {
        return neg(b);
    }
    fold_binary(BinaryOp::Sub, a, b)
}

pub fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::Const(0.0);
    }
    match (a.constant(), b.constant()) {
        (Some(c), _) if c == 1.0 => return b,
        (_, Some(c)) if c == 1.0 => return a,
        (Some(c), None) if c == -1.0 => return neg(b),
        (None, Some(c)) if c == -1.0 => return neg(a),
        _ => {}
    }
    fold_binary(BinaryOp::Mul, a, b)
}

pub fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() && !b.is_zero() {
        return Expr::Const(0.0);
    }
    if b.constant() == Some(1.0) {
        return a;
    }
    fold_binary(BinaryOp::Div, a, b)
}

pub fn pow(a: Expr, b: Expr) -> Expr {
    match b.constant() {
        Some(c) if c == 1.0 => return a,
        Some(c) if c == 0.0 => return Expr::Const(1.0),
        _ => {}
    }
    fold_binary(BinaryOp::Pow, a, b)
}

pub fn binary(op: BinaryOp, a: Expr, b: Expr) -> Expr {
    match op {
        BinaryOp::Add => add(a, b),
        BinaryOp::Sub => sub(a, b),
        BinaryOp::Mul => mul(a, b),
        BinaryOp::Div => div(a, b),
        BinaryOp::Pow => pow(a, b),
    }
}

/// Sum of terms with identity elimination; empty sum is `0`.
pub fn sum(terms: impl IntoIterator<Item = Expr>) -> Expr {
    terms.into_iter().fold(Expr::Const(0.0), add)
}

// ---------------------------------------------------------------------------
// Rendering
// ---------------------------------------------------------------------------

fn write_const(c: f64, out: &mut String) {
    use std::fmt::Write;
    if c < 0.0 || (c == 0.0 && c.is_sign_negative()) {
        let _ = write!(out, "({c:?})");
    } else {
        let _ = write!(out, "{c:?}");
    }
}

fn write_explicit(e: &Expr, out: &mut String) {
    match e {
        Expr::Const(c) => write_const(*c, out),
        Expr::Sym(s) => out.push_str(s),
        Expr::Unary(UnaryOp::Neg, a) => {
            out.push_str("(-");
            write_explicit(a, out);
            out.push(')');
        }
        Expr::Unary(op, a) => {
            out.push_str(op.name());
            out.push('(');
            write_explicit(a, out);
            out.push(')');
        }
        Expr::Binary(op, a, b) => {
            out.push('(');
            write_explicit(a, out);
            out.push(op.symbol());
            write_explicit(b, out);
            out.push(')');
        }
        Expr::Call(name, args) => write_call(name, args, out, write_explicit),
    }
}

fn write_call(name: &str, args: &[Expr], out: &mut String, w: fn(&Expr, &mut String)) {
    out.push_str(name);
    out.push('(');
    for (i, a) in args.iter().enumerate() {
        if i > 0 {
            out.push_str(", ");
        }
        w(a, out);
    }
    out.push(')');
}

/// Binding strength of the node when printed without its own parentheses.
fn strength(e: &Expr) -> u8 {
    match e {
        Expr::Binary(op, ..) => op.precedence(),
        Expr::Unary(UnaryOp::Neg, _) => 3,
        _ => 5,
    }
}

fn write_minimal(e: &Expr, out: &mut String) {
    match e {
        Expr::Const(c) => write_const(*c, out),
        Expr::Sym(s) => out.push_str(s),
        Expr::Unary(UnaryOp::Neg, a) => {
            out.push('-');
            write_operand(a, strength(a) < 4, out);
        }
        Expr::Unary(op, a) => {
            out.push_str(op.name());
            out.push('(');
            write_minimal(a, out);
            out.push(')');
        }
        Expr::Binary(op, a, b) => {
            let p = op.precedence();
            let (left_paren, right_paren) = match op {
                // Right associative: a^(b^c) prints bare, (a^b)^c needs parens.
                // A negation on the left of ^ would re-parse as -(a^b).
                BinaryOp::Pow => (strength(a) <= p, strength(b) < 3),
                BinaryOp::Add | BinaryOp::Mul => (strength(a) < p, strength(b) <= p),
                BinaryOp::Sub | BinaryOp::Div => (strength(a) < p, strength(b) <= p),
            };
            write_operand(a, left_paren, out);
            match op {
                BinaryOp::Add | BinaryOp::Sub => {
                    out.push(' ');
                    out.push(op.symbol());
                    out.push(' ');
                }
                _ => out.push(op.symbol()),
            }
            write_operand(b, right_paren, out);
        }
        Expr::Call(name, args) => write_call(name, args, out, write_minimal),
    }
}

fn write_operand(e: &Expr, paren: bool, out: &mut String) {
    if paren {
        out.push('(');
        write_minimal(e, out);
        out.push(')');
    } else {
        write_minimal(e, out);
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        write_minimal(self, &mut s);
        f.write_str(&s)
    }
}

impl serde::Serialize for Expr {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for Expr {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Expr::parse(&text).map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn set(items: &[&str]) -> BTreeSet<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn free_symbols_examples() {
        assert_eq!(p("cp_f*u1*xt").free_symbols(), set(&["cp_f", "u1", "xt"]));
        assert!(p("3.0").free_symbols().is_empty());
        assert_eq!(p("x + x").free_symbols(), set(&["x"]));
    }

    #[test]
    fn substitute_examples() {
        let rules: HashMap<_, _> = [("u3".to_string(), p("(u1+u2)"))].into();
        assert_eq!(p("cp*u3*xt").substitute(&rules), p("cp*(u1+u2)*xt"));

        let e = p("hA*(xt-xh)");
        assert_eq!(e.substitute(&HashMap::new()), e);

        let rules: HashMap<_, _> =
            [("xt".to_string(), p("x1")), ("xh".to_string(), p("x2"))].into();
        assert_eq!(e.substitute(&rules), p("hA*(x1-x2)"));
    }

    #[test]
    fn substitution_is_single_pass() {
        // a -> b and b -> a swap rather than chaining.
        let rules: HashMap<_, _> = [("a".to_string(), p("b")), ("b".to_string(), p("a"))].into();
        assert_eq!(p("a - b").substitute(&rules), p("b - a"));
    }

    #[test]
    fn display_reparses_to_same_tree() {
        for s in [
            "a - (b - c)",
            "a - b - c",
            "a/(b*c)",
            "a^b^c",
            "(a^b)^c",
            "-(a*b)",
            "(-a)^2",
            "-a^2",
            "x*(-2.5)",
            "sqrt(abs(x - 1e-5))*sign(y)",
            "T_r(x2, x1) + 3",
            "-(-x)",
            "2^-x",
        ] {
            let e = p(s);
            assert_eq!(p(&e.to_string()), e, "minimal form of {s}: {e}");
            assert_eq!(p(&e.to_explicit_string()), e, "explicit form of {s}");
        }
    }

    #[test]
    fn smart_constructors_drop_identities() {
        assert_eq!(mul(Expr::Const(1.0), Expr::sym("a")), Expr::sym("a"));
        assert_eq!(mul(Expr::sym("a"), Expr::Const(0.0)), Expr::Const(0.0));
        assert_eq!(add(Expr::Const(0.0), Expr::sym("a")), Expr::sym("a"));
        assert_eq!(sub(Expr::Const(0.0), Expr::sym("a")), neg(Expr::sym("a")));
        assert_eq!(mul(Expr::sym("a"), Expr::Const(-1.0)), neg(Expr::sym("a")));
        assert_eq!(pow(Expr::sym("a"), Expr::Const(1.0)), Expr::sym("a"));
        assert_eq!(sum(Vec::new()), Expr::Const(0.0));
    }

    #[test]
    fn symbol_names() {
        assert!(is_symbol_name("cp_f"));
        assert!(is_symbol_name("_x1"));
        assert!(!is_symbol_name("1x"));
        assert!(!is_symbol_name("a.b"));
        assert!(!is_symbol_name(""));
    }
}
