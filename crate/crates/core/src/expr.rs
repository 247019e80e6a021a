//! Arithmetic expressions over x1..xn and one scalar (v, u or w).
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | name | name '(' expr ')' | '(' expr ')'
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParseErrorKind {
    #[error("syntax error")]
    Syntax,
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("function '{name}' takes {expected} argument(s), got {got}")]
    Arity {
        name: String,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[error("{kind} at line {line}, column {column} (offset {offset}): expected {}, found {found}", expected.join(" or "))]
pub struct ParseError {
    pub kind: ParseErrorKind,
    /// Byte offset into the source.
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    pub expected: Vec<String>,
    pub found: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Log,
}

impl Func {
    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "log" => Func::Log,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Log => "log",
        }
    }

    fn apply(self, a: f64) -> f64 {
        match self {
            Func::Sin => a.sin(),
            Func::Cos => a.cos(),
            Func::Exp => a.exp(),
            Func::Sqrt => a.sqrt(),
            Func::Log => a.ln(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Var {
    /// Zero-based coordinate index.
    X(usize),
    V,
    U,
    W,
    Pi,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Node {
    /// Value and its source text.
    Num(f64, String),
    Var(Var),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
    Group(Box<Node>),
}

/// Values bound to the scalar variables during evaluation; unbound
/// variables evaluate to NaN.
#[derive(Clone, Copy, Debug, Default)]
pub struct Env<'a> {
    pub x: &'a [f64],
    pub v: Option<f64>,
    pub u: Option<f64>,
    pub w: Option<f64>,
}

impl<'a> Env<'a> {
    pub fn at(x: &'a [f64]) -> Self {
        Self {
            x,
            ..Default::default()
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Expression {
    src: String,
    root: Node,
}

impl Expression {
    pub fn parse(src: &str) -> Result<Self, ParseError> {
        parse_expression(src)
    }

    pub fn source(&self) -> &str {
        &self.src
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn eval(&self, env: &Env) -> f64 {
        eval_node(&self.root, env)
    }

    /// Shorthand for an expression in x only.
    pub fn eval_x(&self, x: &[f64]) -> f64 {
        self.eval(&Env::at(x))
    }

    /// Largest one-based coordinate index referenced, 0 if none.
    pub fn max_coordinate(&self) -> usize {
        let mut m = 0;
        visit(&self.root, &mut |n| {
            if let Node::Var(Var::X(i)) = n {
                m = m.max(i + 1);
            }
        });
        m
    }

    pub fn uses(&self, var: Var) -> bool {
        let mut found = false;
        visit(&self.root, &mut |n| {
            if let Node::Var(v) = n {
                found |= *v == var;
            }
        });
        found
    }

    /// Canonical text: single spaces around binary `+ - * /`, none around `^`.
    pub fn pretty(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(&self.root, f)
    }
}

fn visit(n: &Node, f: &mut impl FnMut(&Node)) {
    f(n);
    match n {
        Node::Num(..) | Node::Var(_) => {}
        Node::Neg(a) | Node::Call(_, a) | Node::Group(a) => visit(a, f),
        Node::Bin(_, a, b) => {
            visit(a, f);
            visit(b, f);
        }
    }
}

fn write_node(n: &Node, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match n {
        Node::Num(_, text) => f.write_str(text),
        Node::Var(Var::X(i)) => write!(f, "x{}", i + 1),
        Node::Var(Var::V) => f.write_str("v"),
        Node::Var(Var::U) => f.write_str("u"),
        Node::Var(Var::W) => f.write_str("w"),
        Node::Var(Var::Pi) => f.write_str("pi"),
        Node::Neg(a) => {
            f.write_str("-")?;
            write_node(a, f)
        }
        Node::Bin(BinOp::Pow, a, b) => {
            write_node(a, f)?;
            f.write_str("^")?;
            write_node(b, f)
        }
        Node::Bin(op, a, b) => {
            write_node(a, f)?;
            write!(f, " {} ", op.symbol())?;
            write_node(b, f)
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(a, f)?;
            f.write_str(")")
        }
        Node::Group(a) => {
            f.write_str("(")?;
            write_node(a, f)?;
            f.write_str(")")
        }
    }
}

fn eval_node(n: &Node, env: &Env) -> f64 {
    match n {
        Node::Num(v, _) => *v,
        Node::Var(Var::X(i)) => env.x.get(*i).copied().unwrap_or(f64::NAN),
        Node::Var(Var::V) => env.v.unwrap_or(f64::NAN),
        Node::Var(Var::U) => env.u.unwrap_or(f64::NAN),
        Node::Var(Var::W) => env.w.unwrap_or(f64::NAN),
        Node::Var(Var::Pi) => std::f64::consts::PI,
        Node::Neg(a) => -eval_node(a, env),
        Node::Group(a) => eval_node(a, env),
        Node::Call(func, a) => func.apply(eval_node(a, env)),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval_node(a, env), eval_node(b, env));
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => pow(a, b),
            }
        }
    }
}

/// Integer exponents by repeated multiplication so that `x^2` equals
/// `x*x` exactly.
fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64, String),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(_, s) => format!("number '{s}'"),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Op(c) => format!("'{c}'"),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::End => "end of input".into(),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

fn line_col(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rsplit('\n')
        .next()
        .map(|s| s.chars().count())
        .unwrap_or(0)
        + 1;
    (line, column)
}

fn error(
    src: &str,
    kind: ParseErrorKind,
    offset: usize,
    expected: &[&str],
    found: String,
) -> ParseError {
    let (line, column) = line_col(src, offset);
    ParseError {
        kind,
        offset,
        line,
        column,
        expected: expected.iter().map(|s| s.to_string()).collect(),
        found,
    }
}

fn tokenize(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == '.' && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()))
        {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            if i < bytes.len() && bytes[i] == b'.' {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
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
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| {
                error(
                    src,
                    ParseErrorKind::Syntax,
                    start,
                    &["number"],
                    format!("'{text}'"),
                )
            })?;
            out.push((Tok::Num(v, text.to_string()), start));
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else {
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                ',' => Tok::Comma,
                _ => {
                    let ch = src[start..].chars().next().unwrap_or(c);
                    return Err(error(
                        src,
                        ParseErrorKind::Syntax,
                        start,
                        &["number", "identifier", "operator", "'('"],
                        format!("'{ch}'"),
                    ));
                }
            };
            i += 1;
            out.push((tok, start));
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

impl Parser<'_> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn fail(&self, expected: &[&str]) -> ParseError {
        error(
            self.src,
            ParseErrorKind::Syntax,
            self.offset(),
            expected,
            self.peek().describe(),
        )
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Tok::Op(c @ ('+' | '-')) = *self.peek() {
            self.bump();
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Tok::Op(c @ ('*' | '/')) = *self.peek() {
            self.bump();
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if *self.peek() == Tok::Op('-') {
            self.bump();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.primary()?;
        if *self.peek() == Tok::Op('^') {
            self.bump();
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Node, ParseError> {
        const START: &[&str] = &["number", "identifier", "'('", "'-'"];
        let offset = self.offset();
        match self.peek().clone() {
            Tok::Num(v, text) => {
                self.bump();
                Ok(Node::Num(v, text))
            }
            Tok::LParen => {
                self.bump();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(Node::Group(Box::new(inner)))
            }
            Tok::Ident(name) => {
                self.bump();
                if let Some(func) = Func::from_name(&name) {
                    if *self.peek() != Tok::LParen {
                        return Err(self.fail(&["'('"]));
                    }
                    self.bump();
                    let mut args = Vec::new();
                    if *self.peek() != Tok::RParen {
                        args.push(self.expr()?);
                        while *self.peek() == Tok::Comma {
                            self.bump();
                            args.push(self.expr()?);
                        }
                    }
                    self.expect_rparen()?;
                    if args.len() != 1 {
                        return Err(error(
                            self.src,
                            ParseErrorKind::Arity {
                                name: name.clone(),
                                expected: 1,
                                got: args.len(),
                            },
                            offset,
                            &["1 argument"],
                            format!("{} argument(s)", args.len()),
                        ));
                    }
                    return Ok(Node::Call(
                        func,
                        Box::new(args.pop().expect("one argument")),
                    ));
                }
                let var = match name.as_str() {
                    "v" => Var::V,
                    "u" => Var::U,
                    "w" | "W" => Var::W,
                    "pi" => Var::Pi,
                    _ => match name.strip_prefix('x').and_then(|d| {
                        if d.starts_with('0') {
                            None
                        } else {
                            d.parse::<usize>().ok()
                        }
                    }) {
                        Some(k) if k >= 1 => Var::X(k - 1),
                        _ => {
                            return Err(error(
                                self.src,
                                ParseErrorKind::UnknownIdentifier(name.clone()),
                                offset,
                                &["x1..xn", "v", "u", "w", "pi", "function name"],
                                format!("identifier '{name}'"),
                            ))
                        }
                    },
                };
                Ok(Node::Var(var))
            }
            _ => Err(self.fail(START)),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        if *self.peek() == Tok::RParen {
            self.bump();
            Ok(())
        } else {
            Err(self.fail(&["')'", "operator"]))
        }
    }
}

pub fn parse_expression(src: &str) -> Result<Expression, ParseError> {
    let toks = tokenize(src)?;
    let mut p = Parser { src, toks, pos: 0 };
    let root = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.fail(&["operator", "end of input"]));
    }
    Ok(Expression {
        src: src.to_string(),
        root,
    })
}
