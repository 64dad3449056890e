//! Point expressions: the small arithmetic language used in questionnaire
//! `pts` columns.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := atom (('*' | '/') atom)*
//! atom  := number | ident | 'MAX' '(' expr (',' expr)* ')'
//!        | '(' expr ')' | '[' expr ']'
//! ```
//!
//! Square brackets group exactly like parentheses. There is no unary minus,
//! exponent or comparison; those are rejected with a byte offset.

use alloc::boxed::Box;
use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Lit(f64),
    Var(String),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Max(Vec<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseError {
    #[error("empty expression")]
    Empty,
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("variable `{name}` bound to {value}; values must be finite and non-negative")]
    InvalidBinding { name: String, value: f64 },
}

/// Variable bindings for [`Expr::eval`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Env {
    vars: BTreeMap<String, f64>,
}

impl Env {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bind(&mut self, name: impl Into<String>, value: f64) -> Result<(), EvalError> {
        let name = name.into();
        if !value.is_finite() || value < 0.0 {
            return Err(EvalError::InvalidBinding { name, value });
        }
        self.vars.insert(name, value);
        Ok(())
    }

    pub fn with(mut self, name: impl Into<String>, value: f64) -> Result<Self, EvalError> {
        self.bind(name, value)?;
        Ok(self)
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.vars.get(name).copied()
    }
}

impl Expr {
    pub fn parse(text: &str) -> Result<Expr, ParseError> {
        parse_expression(text)
    }

    pub fn eval(&self, env: &Env) -> Result<f64, EvalError> {
        Ok(match self {
            Expr::Lit(v) => *v,
            Expr::Var(name) => env.get(name).ok_or_else(|| EvalError::UnboundVariable(name.clone()))?,
            Expr::Add(a, b) => a.eval(env)? + b.eval(env)?,
            Expr::Sub(a, b) => a.eval(env)? - b.eval(env)?,
            Expr::Mul(a, b) => a.eval(env)? * b.eval(env)?,
            Expr::Div(a, b) => {
                let num = a.eval(env)?;
                let den = b.eval(env)?;
                if den == 0.0 {
                    return Err(EvalError::DivisionByZero);
                }
                num / den
            }
            Expr::Max(args) => {
                let mut best = f64::NEG_INFINITY;
                for arg in args {
                    best = best.max(arg.eval(env)?);
                }
                best
            }
        })
    }

    /// Every variable name referenced anywhere in the expression.
    pub fn variables(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<String>) {
        match self {
            Expr::Lit(_) => {}
            Expr::Var(name) => {
                out.insert(name.clone());
            }
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
            Expr::Max(args) => args.iter().for_each(|a| a.collect_vars(out)),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Add(..) | Expr::Sub(..) => 1,
            Expr::Mul(..) | Expr::Div(..) => 2,
            _ => 3,
        }
    }
}

/// Canonical rendering. Parentheses appear only where precedence or
/// associativity needs them, so `parse(render(e)) == e`.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (op, a, b) = match self {
            Expr::Lit(v) => return write!(f, "{v}"),
            Expr::Var(name) => return f.write_str(name),
            Expr::Max(args) => {
                f.write_str("MAX(")?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{arg}")?;
                }
                return f.write_str(")");
            }
            Expr::Add(a, b) => ("+", a, b),
            Expr::Sub(a, b) => ("-", a, b),
            Expr::Mul(a, b) => ("*", a, b),
            Expr::Div(a, b) => ("/", a, b),
        };
        let prec = self.precedence();
        if a.precedence() < prec {
            write!(f, "({a})")?;
        } else {
            write!(f, "{a}")?;
        }
        write!(f, " {op} ")?;
        if b.precedence() <= prec {
            write!(f, "({b})")
        } else {
            write!(f, "{b}")
        }
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        parse_expression(&text).map_err(serde::de::Error::custom)
    }
}

pub fn parse_expression(text: &str) -> Result<Expr, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::Empty);
    }
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let expr = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(expr)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ParseError {
        let found = match self.src.get(self.pos) {
            Some(c) if c.is_ascii_graphic() => alloc::format!(" (found `{}`)", *c as char),
            Some(_) => " (found non-ASCII input)".to_string(),
            None => " (found end of input)".to_string(),
        };
        ParseError::Syntax { offset: self.pos, message: alloc::format!("{message}{found}") }
    }

    fn skip_ws(&mut self) {
        while self.src.get(self.pos).is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&alloc::format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.atom()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.atom()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.atom()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(open @ (b'(' | b'[')) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(if open == b'(' { b')' } else { b']' })?;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.src.get(self.pos).is_some_and(|c| c.is_ascii_alphanumeric()) {
                    self.pos += 1;
                }
                // the slice is ASCII alphanumeric, so this cannot fail
                let name = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
                if self.peek() != Some(b'(') {
                    return Ok(Expr::Var(name.to_string()));
                }
                if name != "MAX" {
                    self.pos = start;
                    return Err(self.error(&alloc::format!("unknown function `{name}`")));
                }
                self.pos += 1;
                let mut args = alloc::vec![self.expr()?];
                while self.peek() == Some(b',') {
                    self.pos += 1;
                    args.push(self.expr()?);
                }
                self.expect(b')')?;
                Ok(Expr::Max(args))
            }
            _ => Err(self.error("expected a number, variable, MAX(...) or group")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            if !self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                return Err(self.error("expected digits after decimal point"));
            }
            while self.src.get(self.pos).is_some_and(u8::is_ascii_digit) {
                self.pos += 1;
            }
        }
        let text = core::str::from_utf8(&self.src[start..self.pos]).unwrap_or_default();
        text.parse::<f64>()
            .map(Expr::Lit)
            .map_err(|_| ParseError::Syntax { offset: start, message: "invalid number".to_string() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn var(n: &str) -> Box<Expr> {
        Box::new(Expr::Var(n.to_string()))
    }

    #[test]
    fn subtraction_of_literal() {
        assert_eq!(parse_expression("Pv - 1").unwrap(), Expr::Sub(var("Pv"), Box::new(Expr::Lit(1.0))));
        assert_eq!(parse_expression("7").unwrap(), Expr::Lit(7.0));
    }

    #[test]
    fn brackets_group_like_parens() {
        let e = parse_expression("[MAX(P15, P21, P22) + MAX(P3, P4)] / 4").unwrap();
        let Expr::Div(lhs, rhs) = e else { panic!("not a division") };
        assert_eq!(*rhs, Expr::Lit(4.0));
        assert!(matches!(*lhs, Expr::Add(..)));
        assert_eq!(parse_expression("[a + b] * c").unwrap(), parse_expression("(a + b) * c").unwrap());
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expression("a - b - c").unwrap();
        assert_eq!(e, Expr::Sub(Box::new(Expr::Sub(var("a"), var("b"))), var("c")));
        let e = parse_expression("a + b * c").unwrap();
        assert_eq!(e, Expr::Add(var("a"), Box::new(Expr::Mul(var("b"), var("c")))));
    }

    #[test]
    fn rejects_unsupported_syntax() {
        assert_eq!(parse_expression("   "), Err(ParseError::Empty));
        for (text, offset) in
            [("-1", 0), ("a ^ 2", 2), ("a < b", 2), ("(a + b", 6), ("MAX()", 4), ("SUM(a)", 0), ("1.", 2), ("[a)", 2)]
        {
            match parse_expression(text) {
                Err(ParseError::Syntax { offset: o, .. }) => assert_eq!(o, offset, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn eval_composite_playtime() {
        let e = parse_expression("(Ams / 1000 + Aks + Arc)").unwrap();
        let env = Env::new().with("Ams", 500.0).unwrap().with("Aks", 0.0).unwrap().with("Arc", 1.0).unwrap();
        assert_eq!(e.eval(&env).unwrap(), 1.5);
        assert_eq!(parse_expression("MAX(0, 0, 0) / 2").unwrap().eval(&Env::new()).unwrap(), 0.0);
    }

    #[test]
    fn eval_errors() {
        let e = parse_expression("Cu / Cuu").unwrap();
        assert_eq!(e.eval(&Env::new()), Err(EvalError::UnboundVariable("Cu".into())));
        let env = Env::new().with("Cu", 1.0).unwrap().with("Cuu", 0.0).unwrap();
        assert_eq!(e.eval(&env), Err(EvalError::DivisionByZero));
        assert!(Env::new().bind("x", f64::NAN).is_err());
        assert!(Env::new().bind("x", -1.0).is_err());
    }

    #[test]
    fn real_division() {
        let e = parse_expression("Cu / Cuu").unwrap();
        let env = Env::new().with("Cu", 1.0).unwrap().with("Cuu", 3.0).unwrap();
        assert_eq!(e.eval(&env).unwrap(), 1.0 / 3.0);
    }

    #[test]
    fn render_is_minimal_and_round_trips() {
        for (text, canon) in [
            ("[MAX(P15,P21) + MAX(P3)] / 4", "(MAX(P15, P21) + MAX(P3)) / 4"),
            ("a - (b - c)", "a - (b - c)"),
            ("(a - b) - c", "a - b - c"),
            ("InsN * 0.75", "InsN * 0.75"),
            ("a / (b * c)", "a / (b * c)"),
        ] {
            let e = parse_expression(text).unwrap();
            let rendered = e.to_string();
            assert_eq!(rendered, canon);
            assert_eq!(parse_expression(&rendered).unwrap(), e);
        }
        let e = Expr::Max(vec![Expr::Lit(0.1), Expr::Lit(1e21)]);
        assert_eq!(parse_expression(&e.to_string()).unwrap(), e);
    }
}
