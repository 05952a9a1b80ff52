use super::{add, div, mul, neg, pow, sub, unary, BinaryOp, Expr, UnaryOp, PARTIAL_SUFFIX};

fn c(v: f64) -> Expr {
    Expr::Const(v)
}

pub(super) fn differentiate(e: &Expr, s: &str) -> Expr {
    if !e.contains_symbol(s) {
        return c(0.0);
    }
    match e {
        Expr::Const(_) => c(0.0),
        Expr::Sym(name) => c(if name == s { 1.0 } else { 0.0 }),
        Expr::Unary(op, a) => {
            let da = differentiate(a, s);
            let a = (**a).clone();
            match op {
                UnaryOp::Neg => neg(da),
                UnaryOp::Sqrt => div(da, mul(c(2.0), unary(UnaryOp::Sqrt, a))),
                UnaryOp::Abs => mul(unary(UnaryOp::Sign, a), da),
                UnaryOp::Sign => c(0.0),
                UnaryOp::Exp => mul(unary(UnaryOp::Exp, a), da),
                UnaryOp::Ln => div(da, a),
            }
        }
        Expr::Binary(op, a, b) => {
            let da = differentiate(a, s);
            let db = differentiate(b, s);
            let (a, b) = ((**a).clone(), (**b).clone());
            match op {
                BinaryOp::Add => add(da, db),
                BinaryOp::Sub => sub(da, db),
                BinaryOp::Mul => add(mul(da, b), mul(a, db)),
                BinaryOp::Div => div(sub(mul(da, b.clone()), mul(a, db)), pow(b, c(2.0))),
                BinaryOp::Pow => {
                    if db.is_zero() {
                        // d(a^k) = k a^(k-1) da
                        let k_minus_1 = match b.constant() {
                            Some(k) => c(k - 1.0),
                            None => sub(b.clone(), c(1.0)),
                        };
                        mul(mul(b, pow(a, k_minus_1)), da)
                    } else if da.is_zero() {
                        // d(k^b) = k^b ln(k) db
                        let ln_a = unary(UnaryOp::Ln, a.clone());
                        mul(mul(pow(a, b), ln_a), db)
                    } else {
                        let ln_a = unary(UnaryOp::Ln, a.clone());
                        let inner = add(mul(db, ln_a), div(mul(b.clone(), da), a.clone()));
                        mul(pow(a, b), inner)
                    }
                }
            }
        }
        Expr::Call(name, args) => {
            // Partials of partials are taken as zero: table interpolants are
            // piecewise linear along each axis.
            if name.contains(PARTIAL_SUFFIX) {
                return c(0.0);
            }
            let mut total = c(0.0);
            for (k, arg) in args.iter().enumerate() {
                let dk = differentiate(arg, s);
                if dk.is_zero() {
                    continue;
                }
                let partial = Expr::Call(format!("{name}{PARTIAL_SUFFIX}{k}"), args.clone());
                total = add(total, mul(partial, dk));
            }
            total
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::{Bindings, Expr};

    fn p(s: &str) -> Expr {
        Expr::parse(s).unwrap()
    }

    #[test]
    fn linear_in_tail_state() {
        assert_eq!(p("cp_f*u1*xt").differentiate("xt"), p("cp_f*u1"));
    }

    #[test]
    fn linear_in_head_state() {
        assert_eq!(p("hA*(xt-xh)").differentiate("xh"), p("-hA"));
    }

    #[test]
    fn absent_symbol_gives_zero() {
        assert_eq!(p("lam*xh*xt").differentiate("u1"), Expr::Const(0.0));
    }

    #[test]
    fn sign_and_abs_conventions() {
        assert_eq!(p("sign(x)").differentiate("x"), Expr::Const(0.0));
        let d = p("lam*x*sign(x)").differentiate("x");
        let b: Bindings = [("lam".to_string(), 2.0), ("x".to_string(), -3.0)].into();
        assert_eq!(d.evaluate(&b).unwrap(), -2.0);
        let d = p("abs(x)").differentiate("x");
        let b: Bindings = [("x".to_string(), -3.0)].into();
        assert_eq!(d.evaluate(&b).unwrap(), -1.0);
    }

    #[test]
    fn power_rules() {
        let b: Bindings = [("x".to_string(), 1.7), ("y".to_string(), 0.4)].into();
        let cases = [
            ("x^3", 3.0 * 1.7f64.powi(2)),
            ("2^x", 2f64.powf(1.7) * 2f64.ln()),
            ("x^y", 1.7f64.powf(0.4) * (0.4 / 1.7)),
        ];
        for (s, want) in cases {
            let got = p(s).differentiate("x").evaluate(&b).unwrap();
            assert!((got - want).abs() < 1e-12, "{s}: {got} vs {want}");
        }
    }

    #[test]
    fn calls_differentiate_through_partials() {
        let d = p("T_r(p, 2*h)").differentiate("h");
        assert_eq!(d, p("T_r__d1(p, 2*h)*2"));
    }
}
