use super::{fold_binary, fold_unary, is_symbol_name, BinaryOp, Expr, UnaryOp};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("syntax error at position {position}: {message}")]
pub struct ParseError {
    /// Byte offset into the input.
    pub position: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
}

fn err(position: usize, message: impl Into<String>) -> ParseError {
    ParseError { position, message: message.into() }
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, ParseError> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        match c {
            '+' | '-' | '*' | '/' | '^' => {
                out.push((start, Tok::Op(c)));
                i += 1;
            }
            '(' => {
                out.push((start, Tok::LParen));
                i += 1;
            }
            ')' => {
                out.push((start, Tok::RParen));
                i += 1;
            }
            ',' => {
                out.push((start, Tok::Comma));
                i += 1;
            }
            c if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let lit = &text[start..i];
                let v: f64 = lit
                    .parse()
                    .map_err(|_| err(start, format!("malformed number '{lit}'")))?;
                out.push((start, Tok::Num(v)));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Tok::Ident(text[start..i].to_string())));
            }
            other => return Err(err(start, format!("illegal character '{other}'"))),
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    pos: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.toks.get(self.pos).map(|(o, _)| *o).unwrap_or(self.end)
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek() {
            let op = if *c == '+' { BinaryOp::Add } else { BinaryOp::Sub };
            self.bump();
            let rhs = self.term()?;
            lhs = fold_binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek() {
            let op = if *c == '*' { BinaryOp::Mul } else { BinaryOp::Div };
            self.bump();
            let rhs = self.unary()?;
            lhs = fold_binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Op('-')) => {
                self.bump();
                let inner = self.unary()?;
                Ok(fold_unary(UnaryOp::Neg, inner))
            }
            Some(Tok::Op('+')) => {
                self.bump();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.bump();
            let exponent = self.unary()?;
            return Ok(fold_binary(BinaryOp::Pow, base, exponent));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let at = self.offset();
        match self.bump() {
            Some(Tok::Num(v)) => Ok(Expr::Const(v)),
            Some(Tok::Ident(name)) => {
                if let Some(Tok::LParen) = self.peek() {
                    self.bump();
                    let args = self.args(at)?;
                    match UnaryOp::from_function_name(&name) {
                        Some(op) => {
                            if args.len() != 1 {
                                return Err(err(
                                    at,
                                    format!("{name} takes 1 argument, got {}", args.len()),
                                ));
                            }
                            let a = args.into_iter().next().expect("one argument");
                            Ok(fold_unary(op, a))
                        }
                        None => Ok(Expr::Call(name, args)),
                    }
                } else {
                    debug_assert!(is_symbol_name(&name));
                    Ok(Expr::Sym(name))
                }
            }
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.bump() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(err(at, "unbalanced parenthesis")),
                }
            }
            Some(Tok::Op(c)) => Err(err(at, format!("dangling operator '{c}'"))),
            Some(Tok::RParen) => Err(err(at, "unexpected ')'")),
            Some(Tok::Comma) => Err(err(at, "unexpected ','")),
            None => Err(err(at, "unexpected end of input")),
        }
    }

    fn args(&mut self, call_at: usize) -> Result<Vec<Expr>, ParseError> {
        let mut args = Vec::new();
        if let Some(Tok::RParen) = self.peek() {
            return Err(err(self.offset(), "function call needs at least one argument"));
        }
        loop {
            args.push(self.expr()?);
            match self.bump() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => return Ok(args),
                _ => return Err(err(call_at, "unbalanced parenthesis in call")),
            }
        }
    }
}

pub(super) fn parse(text: &str) -> Result<Expr, ParseError> {
    let toks = tokenize(text)?;
    if toks.is_empty() {
        return Err(err(0, "empty expression"));
    }
    let mut p = Parser { toks, pos: 0, end: text.len() };
    let e = p.expr()?;
    if p.pos < p.toks.len() {
        let at = p.offset();
        let msg = match p.peek() {
            Some(Tok::RParen) => "unbalanced parenthesis".to_string(),
            Some(t) => format!("unexpected token {t:?}"),
            None => unreachable!(),
        };
        return Err(err(at, msg));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr as E;

    fn sym(s: &str) -> E {
        E::sym(s)
    }

    fn mul(a: E, b: E) -> E {
        E::Binary(BinaryOp::Mul, Box::new(a), Box::new(b))
    }

    #[test]
    fn product_of_three_symbols() {
        let e = parse("cp_f*u1*xt").unwrap();
        assert_eq!(e, mul(mul(sym("cp_f"), sym("u1")), sym("xt")));
    }

    #[test]
    fn atomic_symbol() {
        assert_eq!(parse("x").unwrap(), sym("x"));
    }

    #[test]
    fn four_factor_capacitance() {
        let e = parse("cp_f*V_f*rho*x_dot").unwrap();
        assert_eq!(
            e,
            mul(mul(mul(sym("cp_f"), sym("V_f")), sym("rho")), sym("x_dot"))
        );
        assert!(e.contains_symbol("x_dot"));
    }

    #[test]
    fn precedence_and_associativity() {
        assert_eq!(parse("a+b*c").unwrap(), parse("a+(b*c)").unwrap());
        assert_eq!(parse("a*b^c").unwrap(), parse("a*(b^c)").unwrap());
        assert_eq!(parse("a^b^c").unwrap(), parse("a^(b^c)").unwrap());
        assert_eq!(parse("a-b-c").unwrap(), parse("(a-b)-c").unwrap());
        assert_eq!(parse("-a^2").unwrap(), parse("-(a^2)").unwrap());
        assert_eq!(parse("(a+b)*c").unwrap(), mul(parse("a+b").unwrap(), sym("c")));
    }

    #[test]
    fn literal_folding() {
        assert_eq!(parse("2*3+1").unwrap(), E::Const(7.0));
        assert_eq!(parse("-2.5").unwrap(), E::Const(-2.5));
        assert_eq!(parse("1e-5").unwrap(), E::Const(1e-5));
        // Division by a literal zero is left for evaluation to report.
        assert!(matches!(parse("1/0").unwrap(), E::Binary(BinaryOp::Div, ..)));
        assert!(matches!(parse("sqrt(-1)").unwrap(), E::Unary(UnaryOp::Sqrt, _)));
    }

    #[test]
    fn calls() {
        let e = parse("T_r(p, h)").unwrap();
        assert_eq!(e, E::Call("T_r".into(), vec![sym("p"), sym("h")]));
        assert!(parse("sqrt(a, b)").is_err());
    }

    #[test]
    fn syntax_errors_report_position() {
        let e = parse("(a+b").unwrap_err();
        assert!(e.message.contains("unbalanced"), "{e}");
        let e = parse("a+b)").unwrap_err();
        assert_eq!(e.position, 3);
        let e = parse("a*").unwrap_err();
        assert_eq!(e.position, 2);
        let e = parse("a*+").unwrap_err();
        assert!(e.message.contains("end of input"));
        let e = parse("a $ b").unwrap_err();
        assert_eq!(e.position, 2);
        assert!(e.message.contains("illegal character"));
        assert!(parse("").is_err());
        assert!(parse("   ").is_err());
        let e = parse("*a").unwrap_err();
        assert!(e.message.contains("dangling operator"));
    }
}
