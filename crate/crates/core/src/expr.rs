//! Closed-form expressions in one real variable.
//!
//! Accepted grammar (nothing else parses):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | var | 'pi' | func '(' args ')' | '(' expr ')'
//! func   := sin | cos | exp | sqrt | abs     (one argument)
//!         | min | max                        (two arguments)
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! is `-(x^2)`.

use std::fmt;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryFn {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryFn {
    Min,
    Max,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var,
    Pi,
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call1(UnaryFn, Box<Node>),
    Call2(BinaryFn, Box<Node>, Box<Node>),
}

impl Node {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Node::Num(v) => *v,
            Node::Var => x,
            Node::Pi => std::f64::consts::PI,
            Node::Neg(a) => -a.eval(x),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => a / b,
                    BinOp::Pow => a.powf(b),
                }
            }
            Node::Call1(f, a) => {
                let a = a.eval(x);
                match f {
                    UnaryFn::Sin => a.sin(),
                    UnaryFn::Cos => a.cos(),
                    UnaryFn::Exp => a.exp(),
                    UnaryFn::Sqrt => a.sqrt(),
                    UnaryFn::Abs => a.abs(),
                }
            }
            Node::Call2(f, a, b) => {
                let (a, b) = (a.eval(x), b.eval(x));
                match f {
                    BinaryFn::Min => a.min(b),
                    BinaryFn::Max => a.max(b),
                }
            }
        }
    }

    fn depends_on_var(&self) -> bool {
        match self {
            Node::Num(_) | Node::Pi => false,
            Node::Var => true,
            Node::Neg(a) | Node::Call1(_, a) => a.depends_on_var(),
            Node::Bin(_, a, b) | Node::Call2(_, a, b) => a.depends_on_var() || b.depends_on_var(),
        }
    }

    fn write(&self, var: &str, out: &mut String) {
        match self {
            // `{:?}` prints the shortest round-trip representation.
            Node::Num(v) => out.push_str(&format!("{v:?}")),
            Node::Var => out.push_str(var),
            Node::Pi => out.push_str("pi"),
            Node::Neg(a) => {
                out.push_str("(-");
                a.write(var, out);
                out.push(')');
            }
            Node::Bin(op, a, b) => {
                out.push('(');
                a.write(var, out);
                out.push_str(match op {
                    BinOp::Add => " + ",
                    BinOp::Sub => " - ",
                    BinOp::Mul => " * ",
                    BinOp::Div => " / ",
                    BinOp::Pow => " ^ ",
                });
                b.write(var, out);
                out.push(')');
            }
            Node::Call1(f, a) => {
                out.push_str(match f {
                    UnaryFn::Sin => "sin(",
                    UnaryFn::Cos => "cos(",
                    UnaryFn::Exp => "exp(",
                    UnaryFn::Sqrt => "sqrt(",
                    UnaryFn::Abs => "abs(",
                });
                a.write(var, out);
                out.push(')');
            }
            Node::Call2(f, a, b) => {
                out.push_str(match f {
                    BinaryFn::Min => "min(",
                    BinaryFn::Max => "max(",
                });
                a.write(var, out);
                out.push_str(", ");
                b.write(var, out);
                out.push(')');
            }
        }
    }
}

/// A parsed expression together with its source text.
#[derive(Debug, Clone)]
pub struct Expr {
    source: String,
    var: String,
    root: Node,
    constant: Option<f64>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.var == other.var
    }
}

impl Expr {
    /// Parses an expression in the variable `x`.
    pub fn parse(src: &str) -> Result<Self> {
        Self::parse_with_var(src, "x")
    }

    pub fn parse_with_var(src: &str, var: &str) -> Result<Self> {
        if src.trim().is_empty() {
            return Err(Error::Syntax {
                offset: 0,
                message: "empty expression".into(),
            });
        }
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
            var,
        };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.syntax("unexpected trailing input"));
        }
        let constant = if root.depends_on_var() {
            None
        } else {
            Some(root.eval(0.0))
        };
        Ok(Expr {
            source: src.to_string(),
            var: var.to_string(),
            root,
            constant,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// The value of the expression when it does not depend on the variable.
    pub fn constant_value(&self) -> Option<f64> {
        self.constant
    }

    /// Raw evaluation; may return NaN or infinities.
    #[inline]
    pub fn eval_raw(&self, x: f64) -> f64 {
        match self.constant {
            Some(c) => c,
            None => self.root.eval(x),
        }
    }

    /// Evaluates at `x`, rejecting non-finite results.
    pub fn eval(&self, x: f64) -> Result<f64> {
        let v = self.eval_raw(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { x, value: v })
        }
    }

    /// Fully parenthesized rendering that reparses to the same tree.
    pub fn to_canonical_string(&self) -> String {
        let mut s = String::new();
        self.root.write(&self.var, &mut s);
        s
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_canonical_string())
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    var: &'a str,
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            let b = *p;
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - b
        };
        let mut p = self.pos;
        let mut n = digits(&mut p);
        if p < s.len() && s[p] == b'.' {
            p += 1;
            n += digits(&mut p);
        }
        if n == 0 {
            return Err(self.syntax("malformed number"));
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) > 0 {
                p = q;
            }
        }
        let text = std::str::from_utf8(&s[start..p]).expect("ascii");
        let value: f64 = text.parse().map_err(|_| Error::Syntax {
            offset: start,
            message: format!("malformed number `{text}`"),
        })?;
        self.pos = p;
        Ok(Node::Num(value))
    }

    fn ident(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        if name == self.var {
            return Ok(Node::Var);
        }
        if name == "pi" {
            return Ok(Node::Pi);
        }
        let unary = match name {
            "sin" => Some(UnaryFn::Sin),
            "cos" => Some(UnaryFn::Cos),
            "exp" => Some(UnaryFn::Exp),
            "sqrt" => Some(UnaryFn::Sqrt),
            "abs" => Some(UnaryFn::Abs),
            _ => None,
        };
        let binary = match name {
            "min" => Some(BinaryFn::Min),
            "max" => Some(BinaryFn::Max),
            _ => None,
        };
        if unary.is_none() && binary.is_none() {
            return Err(Error::UnknownIdentifier {
                name: name.to_string(),
                offset: start,
            });
        }
        if !self.eat(b'(') {
            return Err(self.syntax(&format!("expected `(` after `{name}`")));
        }
        let mut args = vec![self.expr()?];
        while self.eat(b',') {
            args.push(self.expr()?);
        }
        if !self.eat(b')') {
            return Err(self.syntax("expected `)` or `,`"));
        }
        let expected = if unary.is_some() { 1 } else { 2 };
        if args.len() != expected {
            return Err(Error::Arity {
                name: name.to_string(),
                expected,
                found: args.len(),
                offset: start,
            });
        }
        let mut args = args.into_iter().map(Box::new);
        let a = args.next().unwrap();
        Ok(match (unary, binary) {
            (Some(f), _) => Node::Call1(f, a),
            (_, Some(f)) => Node::Call2(f, a, args.next().unwrap()),
            _ => unreachable!(),
        })
    }
}
