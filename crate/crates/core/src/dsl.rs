//! Expression language for contact forms, embeddings and vector fields.
//!
//! Grammar (whitespace insignificant, no implicit multiplication):
//!
//! ```text
//! expr     := term  (('+' | '-') term)*
//! term     := factor (('*' | '/') factor)*
//! factor   := '-' factor | power
//! power    := atom ('^' exponent)?          exponent := ['-'] integer in [-6, 6]
//! atom     := number | ident | func '(' expr ')' | '(' expr ')'
//! func     := sin | cos | exp | log | sqrt | tanh
//! ```
//!
//! `^` takes only constant integer exponents so every expression stays
//! differentiable everywhere; general powers are spelled `exp(b*log(a))`.
//! A hand-written recursive-descent parser keeps error byte offsets exact.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::scalar::{EvalError, EvalResult, Scalar, ScalarField, D1, D2, D3};

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {expected}")]
    Syntax { offset: usize, expected: String },
    #[error("unbound identifier `{name}` at offset {offset}")]
    UnboundIdentifier { name: String, offset: usize },
    #[error("exponent at offset {offset} must be a constant integer in [-6, 6]")]
    BadExponent { offset: usize },
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Pow(Box<Node>, i32),
    Func(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }
}

/// A parsed expression bound to an ordered coordinate list.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr {
    node: Node,
    coords: Arc<[String]>,
    source: String,
}

impl ScalarExpr {
    pub fn coords(&self) -> &[String] {
        &self.coords
    }

    /// The text the expression was parsed from.
    pub fn source(&self) -> &str {
        &self.source
    }

    /// Evaluate over any member of the numeric tower; `env` binds the
    /// coordinates in declaration order.
    pub fn eval<S: Scalar>(&self, env: &[S]) -> EvalResult<S> {
        if env.len() < self.coords.len() {
            return Err(EvalError::UnboundCoordinate {
                index: self.coords.len() - 1,
                len: env.len(),
            });
        }
        let out = eval_node(&self.node, env)?;
        if !out.all_finite() {
            return Err(EvalError::NonFinite {
                context: "expression evaluation",
            });
        }
        Ok(out)
    }

    /// Render with minimal parentheses; reparsing yields an identical AST.
    pub fn pretty(&self) -> String {
        let mut s = String::new();
        print_node(&self.node, 0, &self.coords, &mut s);
        s
    }
}

impl fmt::Display for ScalarExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.pretty())
    }
}

impl ScalarField for ScalarExpr {
    fn eval0(&self, x: &[f64]) -> EvalResult<f64> {
        self.eval(x)
    }
    fn eval1(&self, x: &[D1]) -> EvalResult<D1> {
        self.eval(x)
    }
    fn eval2(&self, x: &[D2]) -> EvalResult<D2> {
        self.eval(x)
    }
    fn eval3(&self, x: &[D3]) -> EvalResult<D3> {
        self.eval(x)
    }
}

fn eval_node<S: Scalar>(node: &Node, env: &[S]) -> EvalResult<S> {
    Ok(match node {
        Node::Num(c) => S::from_f64(*c),
        Node::Var(i) => env.get(*i).cloned().ok_or(EvalError::UnboundCoordinate {
            index: *i,
            len: env.len(),
        })?,
        Node::Add(a, b) => eval_node(a, env)? + eval_node(b, env)?,
        Node::Sub(a, b) => eval_node(a, env)? - eval_node(b, env)?,
        Node::Mul(a, b) => eval_node(a, env)? * eval_node(b, env)?,
        Node::Div(a, b) => {
            let d = eval_node(b, env)?;
            if d.value() == 0.0 {
                return Err(EvalError::Domain {
                    func: "division",
                    arg: 0.0,
                });
            }
            eval_node(a, env)? / d
        }
        Node::Neg(a) => -eval_node(a, env)?,
        Node::Pow(a, k) => {
            let base = eval_node(a, env)?;
            if *k < 0 && base.value() == 0.0 {
                return Err(EvalError::Domain {
                    func: "negative power",
                    arg: 0.0,
                });
            }
            base.powi(*k)
        }
        Node::Func(f, a) => {
            let arg = eval_node(a, env)?;
            let v = arg.value();
            match f {
                Func::Sin => arg.sin(),
                Func::Cos => arg.cos(),
                Func::Exp => arg.exp(),
                Func::Log => {
                    if v <= 0.0 {
                        return Err(EvalError::Domain {
                            func: "log",
                            arg: v,
                        });
                    }
                    arg.ln()
                }
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(EvalError::Domain {
                            func: "sqrt",
                            arg: v,
                        });
                    }
                    arg.sqrt()
                }
                Func::Tanh => arg.tanh(),
            }
        }
    })
}

// Precedence levels for printing: 0 add, 1 mul, 2 unary, 3 pow/atom.
fn print_node(node: &Node, parent: u8, coords: &[String], out: &mut String) {
    let prec = match node {
        Node::Add(..) | Node::Sub(..) => 0,
        Node::Mul(..) | Node::Div(..) => 1,
        Node::Neg(..) => 2,
        Node::Pow(..) => 3,
        _ => 4,
    };
    let need = prec < parent;
    if need {
        out.push('(');
    }
    match node {
        Node::Num(c) => out.push_str(&format_number(*c)),
        Node::Var(i) => out.push_str(&coords[*i]),
        Node::Add(a, b) => {
            print_node(a, 0, coords, out);
            out.push_str(" + ");
            print_node(b, 1, coords, out);
        }
        Node::Sub(a, b) => {
            print_node(a, 0, coords, out);
            out.push_str(" - ");
            print_node(b, 1, coords, out);
        }
        Node::Mul(a, b) => {
            print_node(a, 1, coords, out);
            out.push('*');
            print_node(b, 2, coords, out);
        }
        Node::Div(a, b) => {
            print_node(a, 1, coords, out);
            out.push('/');
            print_node(b, 2, coords, out);
        }
        Node::Neg(a) => {
            out.push('-');
            print_node(a, 2, coords, out);
        }
        Node::Pow(a, k) => {
            print_node(a, 4, coords, out);
            out.push('^');
            out.push_str(&k.to_string());
        }
        Node::Func(f, a) => {
            out.push_str(f.name());
            out.push('(');
            print_node(a, 0, coords, out);
            out.push(')');
        }
    }
    if need {
        out.push(')');
    }
}

fn format_number(c: f64) -> String {
    if c == c.trunc() && c.abs() < 1e15 {
        format!("{}", c as i64)
    } else {
        format!("{c}")
    }
}

struct Parser<'a> {
    bytes: &'a [u8],
    pos: usize,
    coords: &'a [String],
}

/// Parse `text` with every identifier bound in `coords`.
pub fn parse(text: &str, coords: &[String]) -> Result<ScalarExpr, ParseError> {
    let mut p = Parser {
        bytes: text.as_bytes(),
        pos: 0,
        coords,
    };
    p.skip_ws();
    let node = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(ParseError::Syntax {
            offset: p.pos,
            expected: "end of input".into(),
        });
    }
    Ok(ScalarExpr {
        node,
        coords: coords.to_vec().into(),
        source: text.to_string(),
    })
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        loop {
            self.skip_ws();
            if self.eat(b'+') {
                lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat(b'-') {
                lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            self.skip_ws();
            if self.eat(b'*') {
                lhs = Node::Mul(Box::new(lhs), Box::new(self.factor()?));
            } else if self.eat(b'/') {
                lhs = Node::Div(Box::new(lhs), Box::new(self.factor()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        self.skip_ws();
        if self.eat(b'-') {
            Ok(Node::Neg(Box::new(self.factor()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        self.skip_ws();
        if self.eat(b'^') {
            self.skip_ws();
            let off = self.pos;
            let neg = self.eat(b'-');
            let start = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == start {
                return Err(ParseError::BadExponent { offset: off });
            }
            let digits = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
            let mut k: i32 = digits
                .parse()
                .map_err(|_| ParseError::BadExponent { offset: off })?;
            if neg {
                k = -k;
            }
            if !(-6..=6).contains(&k) {
                return Err(ParseError::BadExponent { offset: off });
            }
            Ok(Node::Pow(Box::new(base), k))
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                self.skip_ws();
                if !self.eat(b')') {
                    return Err(ParseError::Syntax {
                        offset: self.pos,
                        expected: "`)`".into(),
                    });
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            _ => Err(ParseError::Syntax {
                offset: self.pos,
                expected: "number, identifier or `(`".into(),
            }),
        }
    }

    fn number(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.eat(b'.') {
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if matches!(self.peek(), Some(b'e') | Some(b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                self.pos += 1;
            }
            if self.pos == digits {
                // `e` belonged to something else; back off.
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Node::Num)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                expected: "number".into(),
            })
    }

    fn identifier(&mut self) -> Result<Node, ParseError> {
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| c.is_ascii_alphanumeric() || c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.bytes[start..self.pos]).unwrap();
        self.skip_ws();
        if self.peek() == Some(b'(') {
            let func = Func::from_name(name).ok_or_else(|| ParseError::Syntax {
                offset: start,
                expected: format!("known function (got `{name}`)"),
            })?;
            self.pos += 1;
            let arg = self.expr()?;
            self.skip_ws();
            if !self.eat(b')') {
                return Err(ParseError::Syntax {
                    offset: self.pos,
                    expected: "`)`".into(),
                });
            }
            Ok(Node::Func(func, Box::new(arg)))
        } else {
            let idx = self.coords.iter().position(|c| c == name).ok_or_else(|| {
                ParseError::UnboundIdentifier {
                    name: name.to_string(),
                    offset: start,
                }
            })?;
            Ok(Node::Var(idx))
        }
    }
}

/// Convenience for building coordinate lists.
pub fn coords(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{seed, Dual};

    fn xyt() -> Vec<String> {
        coords(&["x", "y", "t"])
    }

    #[test]
    fn cancellation_leaves_t() {
        let e = parse("t + x*y - y*x", &xyt()).unwrap();
        for &(x, y, t) in &[(0.3, -1.2, 0.7), (2.0, 5.0, -0.25)] {
            let v: f64 = e.eval(&[x, y, t]).unwrap();
            assert_eq!(v, t);
        }
    }

    #[test]
    fn integer_power_constant() {
        let e = parse("2^3", &[]).unwrap();
        assert_eq!(e.eval::<f64>(&[]).unwrap(), 8.0);
    }

    #[test]
    fn unbalanced_paren_offset() {
        let err = parse("x + (y", &coords(&["x", "y"])).unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                offset: 6,
                expected: "`)`".into()
            }
        );
    }

    #[test]
    fn unbound_identifier_is_named() {
        let err = parse("x + z", &coords(&["x", "y"])).unwrap_err();
        match err {
            ParseError::UnboundIdentifier { name, offset } => {
                assert_eq!(name, "z");
                assert_eq!(offset, 4);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn exponent_range_enforced() {
        assert!(parse("x^7", &coords(&["x"])).is_err());
        assert!(parse("x^-6", &coords(&["x"])).is_ok());
        assert!(parse("x^(2)", &coords(&["x"])).is_err());
    }

    #[test]
    fn precedence_and_associativity() {
        let e = parse("2 - 3 - 4", &[]).unwrap();
        assert_eq!(e.eval::<f64>(&[]).unwrap(), -5.0);
        let e = parse("2 + 3 * 4 ^ 2", &[]).unwrap();
        assert_eq!(e.eval::<f64>(&[]).unwrap(), 50.0);
        let e = parse("-2^2", &[]).unwrap();
        assert_eq!(e.eval::<f64>(&[]).unwrap(), -4.0);
        let e = parse("6 / 3 / 2", &[]).unwrap();
        assert_eq!(e.eval::<f64>(&[]).unwrap(), 1.0);
    }

    #[test]
    fn inverse_pair_round_trip() {
        let e = parse("log(exp(t))", &coords(&["t"])).unwrap();
        let v: f64 = e.eval(&[1.25]).unwrap();
        assert!((v - 1.25).abs() < 1e-15);
    }

    #[test]
    fn pythagoras() {
        let e = parse("x*x + y*y", &coords(&["x", "y"])).unwrap();
        assert_eq!(e.eval::<f64>(&[3.0, 4.0]).unwrap(), 25.0);
    }

    #[test]
    fn dual_eval_gradient_matches_hand_value() {
        let e = parse("sin(x)*y", &coords(&["x", "y"])).unwrap();
        let args = seed(&[0.0_f64, 2.0]);
        let out: Dual<f64> = e.eval(&args).unwrap();
        assert_eq!(out.val, 0.0);
        assert_eq!(out.grad_at(0), 2.0);
        assert_eq!(out.grad_at(1), 0.0);
    }

    #[test]
    fn plain_eval_matches_dual_value_bit_for_bit() {
        let exprs = [
            "sin(x)*y + exp(t)",
            "sqrt(x*x + y*y + 1)",
            "tanh(x - y)/((t + 2)^2)",
            "log(exp(x) + 1) - y^3",
        ];
        for src in exprs {
            let e = parse(src, &xyt()).unwrap();
            let p = [0.37, -0.81, 0.55];
            let plain: f64 = e.eval(&p).unwrap();
            let first: Dual<f64> = e.eval(&seed(&p)).unwrap();
            assert_eq!(plain.to_bits(), first.val.to_bits(), "{src}");
            // second order nests another dual around the same value path
            let nested: Vec<Dual<Dual<f64>>> =
                seed(&p.iter().map(|&v| Dual::constant(v)).collect::<Vec<_>>());
            let second = e.eval(&nested).unwrap();
            assert_eq!(plain.to_bits(), second.val.val.to_bits(), "{src}");
        }
    }

    #[test]
    fn pretty_print_round_trips() {
        let srcs = [
            "t + x*y - y*x",
            "-x^2 + (y - t)*(y + t)",
            "sin(x)*cos(y)/(1 + t^2)",
            "sqrt(x*x + y*y)/2 - exp(-t)",
            "x^-3 * y",
        ];
        for src in srcs {
            let e = parse(src, &xyt()).unwrap();
            let printed = e.pretty();
            let e2 = parse(&printed, &xyt()).unwrap();
            assert_eq!(e.node, e2.node, "{src} -> {printed}");
        }
    }

    #[test]
    fn domain_errors_are_reported() {
        let e = parse("log(x)", &coords(&["x"])).unwrap();
        assert!(matches!(
            e.eval::<f64>(&[-2.0]),
            Err(EvalError::Domain { func: "log", .. })
        ));
        let e = parse("sqrt(x)", &coords(&["x"])).unwrap();
        assert!(matches!(
            e.eval::<f64>(&[-1e-9]),
            Err(EvalError::Domain { func: "sqrt", .. })
        ));
        let e = parse("1/x", &coords(&["x"])).unwrap();
        assert!(e.eval::<f64>(&[0.0]).is_err());
    }
}
