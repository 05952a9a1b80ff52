use super::{apply_binary, sign, BinaryOp, Expr, UnaryOp, PARTIAL_SUFFIX};
use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Symbol name to value.
pub type Bindings = HashMap<String, f64>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound symbol '{0}'")]
    Unbound(String),
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
    #[error("function '{name}' expects {expected} arguments, got {got}")]
    Arity { name: String, expected: usize, got: usize },
    #[error("domain error in {subexpr}: {reason}")]
    Domain { subexpr: String, reason: String },
}

/// A named scalar function of a few arguments, typically a lookup table.
pub trait Function: Send + Sync + fmt::Debug {
    fn arity(&self) -> usize;
    fn eval(&self, args: &[f64]) -> f64;
    /// Partial derivative with respect to argument `k`.
    fn partial(&self, k: usize, args: &[f64]) -> f64;
}

/// Resolves function names used in call nodes.
pub trait FunctionSet {
    fn function(&self, name: &str) -> Option<Arc<dyn Function>>;
}

/// A function set that resolves nothing.
pub struct NoFunctions;

impl FunctionSet for NoFunctions {
    fn function(&self, _name: &str) -> Option<Arc<dyn Function>> {
        None
    }
}

impl FunctionSet for HashMap<String, Arc<dyn Function>> {
    fn function(&self, name: &str) -> Option<Arc<dyn Function>> {
        self.get(name).cloned()
    }
}

/// Splits `name__d<k>` into `(name, Some(k))`.
fn split_partial(name: &str) -> (&str, Option<usize>) {
    if let Some(idx) = name.rfind(PARTIAL_SUFFIX) {
        if let Ok(k) = name[idx + PARTIAL_SUFFIX.len()..].parse::<usize>() {
            return (&name[..idx], Some(k));
        }
    }
    (name, None)
}

fn domain(e: &Expr, reason: impl Into<String>) -> EvalError {
    EvalError::Domain { subexpr: e.to_string(), reason: reason.into() }
}

fn checked_unary(op: UnaryOp, v: f64, node: &dyn Fn() -> String) -> Result<f64, EvalError> {
    let fail = |reason: String| EvalError::Domain { subexpr: node(), reason };
    match op {
        UnaryOp::Neg => Ok(-v),
        UnaryOp::Sqrt if v < 0.0 => Err(fail(format!("square root of negative value {v}"))),
        UnaryOp::Sqrt => Ok(v.sqrt()),
        UnaryOp::Abs => Ok(v.abs()),
        UnaryOp::Sign => Ok(sign(v)),
        UnaryOp::Exp => {
            let r = v.exp();
            if r.is_finite() {
                Ok(r)
            } else {
                Err(fail(format!("exp overflow at {v}")))
            }
        }
        UnaryOp::Ln if v <= 0.0 => Err(fail(format!("logarithm of non-positive value {v}"))),
        UnaryOp::Ln => Ok(v.ln()),
    }
}

fn checked_binary(
    op: BinaryOp,
    a: f64,
    b: f64,
    node: &dyn Fn() -> String,
) -> Result<f64, EvalError> {
    let fail = |reason: String| EvalError::Domain { subexpr: node(), reason };
    if op == BinaryOp::Div && b == 0.0 {
        return Err(fail("division by zero".into()));
    }
    let r = apply_binary(op, a, b);
    if op == BinaryOp::Pow && !r.is_finite() && a.is_finite() && b.is_finite() {
        return Err(fail(format!("{a}^{b} is not a real number")));
    }
    Ok(r)
}

pub(super) fn evaluate(e: &Expr, b: &Bindings, funcs: &dyn FunctionSet) -> Result<f64, EvalError> {
    match e {
        Expr::Const(c) => Ok(*c),
        Expr::Sym(s) => b.get(s).copied().ok_or_else(|| EvalError::Unbound(s.clone())),
        Expr::Unary(op, a) => {
            let v = evaluate(a, b, funcs)?;
            checked_unary(*op, v, &|| e.to_string())
        }
        Expr::Binary(op, l, r) => {
            let x = evaluate(l, b, funcs)?;
            let y = evaluate(r, b, funcs)?;
            checked_binary(*op, x, y, &|| e.to_string())
        }
        Expr::Call(name, args) => {
            let (base, partial) = split_partial(name);
            let f = funcs
                .function(base)
                .ok_or_else(|| EvalError::UnknownFunction(name.clone()))?;
            if f.arity() != args.len() {
                return Err(EvalError::Arity {
                    name: name.clone(),
                    expected: f.arity(),
                    got: args.len(),
                });
            }
            let vals = args
                .iter()
                .map(|a| evaluate(a, b, funcs))
                .collect::<Result<Vec<_>, _>>()?;
            let out = match partial {
                Some(k) if k < vals.len() => f.partial(k, &vals),
                Some(_) => return Err(domain(e, "partial index out of range")),
                None => f.eval(&vals),
            };
            Ok(out)
        }
    }
}

// ---------------------------------------------------------------------------
// Compiled form: symbols resolved to slots of a flat value vector.
// ---------------------------------------------------------------------------

/// Maps symbol names to slot indices for compilation.
pub trait SlotMap {
    fn slot(&self, name: &str) -> Option<usize>;
}

impl SlotMap for HashMap<String, usize> {
    fn slot(&self, name: &str) -> Option<usize> {
        self.get(name).copied()
    }
}

#[derive(Clone)]
enum Node {
    Const(f64),
    Slot(usize),
    Unary(UnaryOp, Box<Node>, Arc<str>),
    Binary(BinaryOp, Box<Node>, Box<Node>, Arc<str>),
    Call { func: Arc<dyn Function>, partial: Option<usize>, args: Vec<Node> },
}

/// An expression with every symbol bound to a slot index.
#[derive(Clone)]
pub struct Compiled {
    root: Node,
    source: Arc<str>,
}

impl fmt::Debug for Compiled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Compiled({})", self.source)
    }
}

impl Compiled {
    pub fn compile(
        e: &Expr,
        slots: &dyn SlotMap,
        funcs: &dyn FunctionSet,
    ) -> Result<Compiled, EvalError> {
        Ok(Compiled { root: compile_node(e, slots, funcs)?, source: e.to_string().into() })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, values: &[f64]) -> Result<f64, EvalError> {
        eval_node(&self.root, values)
    }

    /// True when the compiled tree is the literal zero.
    pub fn is_zero(&self) -> bool {
        matches!(self.root, Node::Const(c) if c == 0.0)
    }
}

fn compile_node(e: &Expr, slots: &dyn SlotMap, funcs: &dyn FunctionSet) -> Result<Node, EvalError> {
    Ok(match e {
        Expr::Const(c) => Node::Const(*c),
        Expr::Sym(s) => Node::Slot(slots.slot(s).ok_or_else(|| EvalError::Unbound(s.clone()))?),
        Expr::Unary(op, a) => {
            let label: Arc<str> = match op {
                UnaryOp::Sqrt | UnaryOp::Ln | UnaryOp::Exp => e.to_string().into(),
                _ => Arc::from(""),
            };
            Node::Unary(*op, Box::new(compile_node(a, slots, funcs)?), label)
        }
        Expr::Binary(op, a, b) => {
            let label: Arc<str> = match op {
                BinaryOp::Div | BinaryOp::Pow => e.to_string().into(),
                _ => Arc::from(""),
            };
            Node::Binary(
                *op,
                Box::new(compile_node(a, slots, funcs)?),
                Box::new(compile_node(b, slots, funcs)?),
                label,
            )
        }
        Expr::Call(name, args) => {
            let (base, partial) = split_partial(name);
            let func =
                funcs.function(base).ok_or_else(|| EvalError::UnknownFunction(name.clone()))?;
            if func.arity() != args.len() {
                return Err(EvalError::Arity {
                    name: name.clone(),
                    expected: func.arity(),
                    got: args.len(),
                });
            }
            if let Some(k) = partial {
                if k >= args.len() {
                    return Err(domain(e, "partial index out of range"));
                }
            }
            let args = args
                .iter()
                .map(|a| compile_node(a, slots, funcs))
                .collect::<Result<Vec<_>, _>>()?;
            Node::Call { func, partial, args }
        }
    })
}

fn eval_node(n: &Node, v: &[f64]) -> Result<f64, EvalError> {
    match n {
        Node::Const(c) => Ok(*c),
        Node::Slot(i) => Ok(v[*i]),
        Node::Unary(op, a, label) => {
            let x = eval_node(a, v)?;
            checked_unary(*op, x, &|| label.to_string())
        }
        Node::Binary(op, a, b, label) => {
            let x = eval_node(a, v)?;
            let y = eval_node(b, v)?;
            match op {
                BinaryOp::Add => Ok(x + y),
                BinaryOp::Sub => Ok(x - y),
                BinaryOp::Mul => Ok(x * y),
                _ => checked_binary(*op, x, y, &|| label.to_string()),
            }
        }
        Node::Call { func, partial, args } => {
            let mut buf = [0.0f64; 4];
            let mut heap;
            let vals: &mut [f64] = if args.len() <= buf.len() {
                &mut buf[..args.len()]
            } else {
                heap = vec![0.0; args.len()];
                &mut heap
            };
            for (slot, a) in vals.iter_mut().zip(args) {
                *slot = eval_node(a, v)?;
            }
            Ok(match partial {
                Some(k) => func.partial(*k, vals),
                None => func.eval(vals),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    fn bind(pairs: &[(&str, f64)]) -> Bindings {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn evaluate_examples() {
        let b = bind(&[("cp_f", 3300.0), ("u1", 0.5), ("xt", 300.0)]);
        assert_eq!(p("cp_f*u1*xt").evaluate(&b).unwrap(), 3300.0 * 0.5 * 300.0);
        assert_eq!(p("cp_f*u1*xt").evaluate(&b).unwrap(), 495000.0);
        assert_eq!(p("x").evaluate(&bind(&[("x", 7.0)])).unwrap(), 7.0);
    }

    #[test]
    fn domain_errors_name_the_subexpression() {
        let err = p("1 + sqrt(x)").evaluate(&bind(&[("x", -1.0)])).unwrap_err();
        match err {
            EvalError::Domain { subexpr, .. } => assert_eq!(subexpr, "sqrt(x)"),
            other => panic!("unexpected {other:?}"),
        }
        let err = p("a/(b - b)").evaluate(&bind(&[("a", 1.0), ("b", 2.0)])).unwrap_err();
        assert!(matches!(err, EvalError::Domain { ref subexpr, .. } if subexpr == "a/(b - b)"));
        let err = p("ln(x)").evaluate(&bind(&[("x", 0.0)])).unwrap_err();
        assert!(matches!(err, EvalError::Domain { .. }));
        let err = p("x^0.5").evaluate(&bind(&[("x", -4.0)])).unwrap_err();
        assert!(matches!(err, EvalError::Domain { .. }));
    }

    #[test]
    fn unbound_and_unknown() {
        assert_eq!(p("a*b").evaluate(&bind(&[("a", 1.0)])), Err(EvalError::Unbound("b".into())));
        assert_eq!(p("tbl(a)").evaluate(&bind(&[("a", 1.0)])), Err(EvalError::UnknownFunction("tbl".into())));
    }

    #[derive(Debug)]
    struct Square;
    impl Function for Square {
        fn arity(&self) -> usize {
            1
        }
        fn eval(&self, a: &[f64]) -> f64 {
            a[0] * a[0]
        }
        fn partial(&self, _k: usize, a: &[f64]) -> f64 {
            2.0 * a[0]
        }
    }

    #[test]
    fn compiled_matches_tree_walk() {
        let funcs: HashMap<String, Arc<dyn Function>> = [("sq".to_string(), Arc::new(Square) as Arc<dyn Function>)].into();
        let e = p("sq(x)*y + sqrt(abs(x)) - sq__d0(y)");
        let slots: HashMap<String, usize> = [("x".to_string(), 0), ("y".to_string(), 1)].into();
        let c = Compiled::compile(&e, &slots, &funcs).unwrap();
        let b = bind(&[("x", -1.5), ("y", 2.25)]);
        assert_eq!(c.eval(&[-1.5, 2.25]).unwrap(), e.evaluate_with(&b, &funcs).unwrap());
    }

    #[test]
    fn compile_reports_missing_slots() {
        let slots: HashMap<String, usize> = HashMap::new();
        assert!(matches!(
            Compiled::compile(&p("q + 1"), &slots, &NoFunctions),
            Err(EvalError::Unbound(_))
        ));
    }
}
