//! Expression language for defining functions, input files and domain validation.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary ('*' unary)*
//! unary := ('-' | '+') unary | power
//! power := atom ('^' exponent)?
//! atom  := int ('/' int)? | 'i' | 'z'k | 'zb'k | ('conj'|'Re'|'Im'|'abs2') '(' expr ')' | '(' expr ')'
//! ```

use crate::num::*;
use crate::poly::Poly;
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Var(usize),
    Conj(Box<Expr>),
    Re(Box<Expr>),
    Im(Box<Expr>),
    Abs2(Box<Expr>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Box<Expr>, u32),
    Lit(Q),
    I,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown variable {name} at {pos} (n = {n})")]
    UnknownVariable { name: String, pos: usize, n: usize },
    #[error("exponent at {pos} is not a nonnegative integer")]
    NonIntegerExponent { pos: usize },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(t) = single {
            out.push((t, pos));
            i += 1;
        } else if c.is_ascii_digit() {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_ascii_digit() {
                j += 1;
            }
            let s: String = chars[i..j].iter().map(|x| x.1).collect();
            out.push((Tok::Int(s.parse().unwrap()), pos));
            i = j;
        } else if c.is_ascii_alphabetic() {
            let mut j = i;
            while j < chars.len() && chars[j].1.is_ascii_alphanumeric() {
                j += 1;
            }
            let s: String = chars[i..j].iter().map(|x| x.1).collect();
            out.push((Tok::Ident(s), pos));
            i = j;
        } else {
            return Err(ParseError::Syntax { pos, msg: format!("unexpected character {:?}", c) });
        }
    }
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    i: usize,
    n: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.i).map(|t| &t.0)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.i).map(|t| t.1).unwrap_or(self.end)
    }

    fn err<T>(&self, msg: &str) -> Result<T, ParseError> {
        Err(ParseError::Syntax { pos: self.pos(), msg: msg.to_string() })
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&t) {
            self.i += 1;
            Ok(())
        } else {
            self.err(&format!("expected {}", what))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut items = vec![self.term()?];
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.i += 1;
                    items.push(self.term()?);
                }
                Some(Tok::Minus) => {
                    self.i += 1;
                    let t = self.term()?;
                    items.push(Expr::Mul(vec![Expr::Lit(qi(-1)), t]));
                }
                _ => break,
            }
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::Add(items) })
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut items = vec![self.unary()?];
        while self.peek() == Some(&Tok::Star) {
            self.i += 1;
            items.push(self.unary()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { Expr::Mul(items) })
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.i += 1;
                let e = self.unary()?;
                Ok(Expr::Mul(vec![Expr::Lit(qi(-1)), e]))
            }
            Some(Tok::Plus) => {
                self.i += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.i += 1;
        let pos = self.pos();
        let e = self.exponent(pos)?;
        Ok(Expr::Pow(Box::new(base), e))
    }

    /// Exponent: an integer literal, possibly parenthesised.
    fn exponent(&mut self, pos: usize) -> Result<u32, ParseError> {
        let ex = self.unary().map_err(|e| match e {
            ParseError::Syntax { .. } => ParseError::NonIntegerExponent { pos },
            other => other,
        })?;
        match constant_value(&ex) {
            Some(c) if c.im.is_zero() && c.re.is_integer() && c.re >= Q::zero() => {
                c.re.to_integer().to_u32().ok_or(ParseError::NonIntegerExponent { pos })
            }
            _ => Err(ParseError::NonIntegerExponent { pos }),
        }
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Int(v)) => {
                self.i += 1;
                if self.peek() == Some(&Tok::Slash) {
                    self.i += 1;
                    match self.peek().cloned() {
                        Some(Tok::Int(d)) if !d.is_zero() => {
                            self.i += 1;
                            Ok(Expr::Lit(Q::new(v, d)))
                        }
                        _ => self.err("expected nonzero integer denominator"),
                    }
                } else {
                    Ok(Expr::Lit(Q::from_integer(v)))
                }
            }
            Some(Tok::LParen) => {
                self.i += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "')'")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) => {
                self.i += 1;
                match name.as_str() {
                    "i" => Ok(Expr::I),
                    "conj" | "Re" | "Im" | "abs2" => {
                        self.expect(Tok::LParen, "'('")?;
                        let e = Box::new(self.expr()?);
                        self.expect(Tok::RParen, "')'")?;
                        Ok(match name.as_str() {
                            "conj" => Expr::Conj(e),
                            "Re" => Expr::Re(e),
                            "Im" => Expr::Im(e),
                            _ => Expr::Abs2(e),
                        })
                    }
                    _ => self.variable(&name, pos),
                }
            }
            Some(_) => self.err("unexpected token"),
            None => self.err("unexpected end of input"),
        }
    }

    fn variable(&self, name: &str, pos: usize) -> Result<Expr, ParseError> {
        let (bar, digits) = if let Some(d) = name.strip_prefix("zb") {
            (true, d)
        } else if let Some(d) = name.strip_prefix('z') {
            (false, d)
        } else {
            return Err(ParseError::Syntax { pos, msg: format!("unknown identifier {}", name) });
        };
        let k: usize = match digits.parse() {
            Ok(k) if !digits.starts_with('0') => k,
            _ => return Err(ParseError::Syntax { pos, msg: format!("unknown identifier {}", name) }),
        };
        if k == 0 || k > self.n {
            return Err(ParseError::UnknownVariable { name: name.to_string(), pos, n: self.n });
        }
        let v = Expr::Var(k - 1);
        Ok(if bar { Expr::Conj(Box::new(v)) } else { v })
    }
}

/// Parse `text` over the variables z1..zn.
pub fn parse_expression(text: &str, n: usize) -> Result<Expr, ParseError> {
    let toks = lex(text)?;
    if toks.is_empty() {
        return Err(ParseError::Syntax { pos: 0, msg: "empty expression".into() });
    }
    let mut p = Parser { toks, i: 0, n, end: text.len() };
    let e = p.expr()?;
    if p.i != p.toks.len() {
        return p.err("trailing input");
    }
    Ok(e)
}

fn constant_value(e: &Expr) -> Option<Gq> {
    let p = canonicalize_in(e, max_var(e));
    if p.terms().all(|(m, _)| m.is_constant()) {
        Some(p.constant_term())
    } else {
        None
    }
}

fn canonicalize_in(e: &Expr, n: usize) -> Poly {
    match e {
        Expr::Var(j) => Poly::z(n, *j),
        Expr::Conj(a) => canonicalize_in(a, n).conj(),
        Expr::Re(a) => canonicalize_in(a, n).re(),
        Expr::Im(a) => canonicalize_in(a, n).im(),
        Expr::Abs2(a) => {
            let p = canonicalize_in(a, n);
            &p * &p.conj()
        }
        Expr::Add(v) => v.iter().fold(Poly::zero(n), |acc, x| &acc + &canonicalize_in(x, n)),
        Expr::Mul(v) => v.iter().fold(Poly::one(n), |acc, x| &acc * &canonicalize_in(x, n)),
        Expr::Pow(a, k) => canonicalize_in(a, n).pow(*k),
        Expr::Lit(c) => Poly::constant(n, gr(c.clone())),
        Expr::I => Poly::constant(n, imag_unit()),
    }
}

fn max_var(e: &Expr) -> usize {
    match e {
        Expr::Var(j) => j + 1,
        Expr::Conj(a) | Expr::Re(a) | Expr::Im(a) | Expr::Abs2(a) | Expr::Pow(a, _) => max_var(a),
        Expr::Add(v) | Expr::Mul(v) => v.iter().map(max_var).max().unwrap_or(0),
        Expr::Lit(_) | Expr::I => 0,
    }
}

/// Expand an AST into monomial form over `n` variables.
pub fn canonicalize(e: &Expr, n: usize) -> Poly {
    assert!(max_var(e) <= n, "AST mentions a variable beyond n");
    canonicalize_in(e, n)
}

pub fn parse_poly(text: &str, n: usize) -> Result<Poly, ParseError> {
    Ok(canonicalize(&parse_expression(text, n)?, n))
}

/// Parse a constant Gaussian-rational expression such as `1/2 - 3*i`.
pub fn parse_constant(text: &str) -> Result<Gq, ParseError> {
    let e = parse_expression(text, 0)?;
    Ok(canonicalize(&e, 0).constant_term())
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainSpec {
    pub n: usize,
    pub q: usize,
    pub point: Vec<Gq>,
    pub r: Poly,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum InputError {
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Expr { line: usize, source: ParseError },
    #[error("missing `{0}` stanza")]
    Missing(&'static str),
}

/// Read a domain file: `n = ..`, `q = ..`, `point = (..)`, `r = ..`; `#` starts a comment.
pub fn parse_domain_file(text: &str) -> Result<DomainSpec, InputError> {
    let mut n: Option<usize> = None;
    let mut qv: Option<usize> = None;
    let mut point: Option<(usize, String)> = None;
    let mut r: Option<(usize, String)> = None;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap().trim();
        if body.is_empty() {
            continue;
        }
        let (key, val) = body
            .split_once('=')
            .ok_or_else(|| InputError::Format { line, msg: "expected `key = value`".into() })?;
        let val = val.trim().to_string();
        match key.trim() {
            "n" => n = Some(val.parse().map_err(|_| InputError::Format { line, msg: "n must be an integer".into() })?),
            "q" => qv = Some(val.parse().map_err(|_| InputError::Format { line, msg: "q must be an integer".into() })?),
            "point" => point = Some((line, val)),
            "r" => r = Some((line, val)),
            other => return Err(InputError::Format { line, msg: format!("unknown key {}", other) }),
        }
    }
    let n = n.ok_or(InputError::Missing("n"))?;
    if n < 2 {
        return Err(InputError::Format { line: 0, msg: "n must be at least 2".into() });
    }
    let q = qv.unwrap_or(1);
    if q < 1 || q > n {
        return Err(InputError::Format { line: 0, msg: format!("q = {} outside 1..{}", q, n) });
    }
    let point = match point {
        None => vec![gzero(); n],
        Some((line, s)) => parse_point(&s, n).map_err(|e| match e {
            InputError::Format { msg, .. } => InputError::Format { line, msg },
            InputError::Expr { source, .. } => InputError::Expr { line, source },
            other => other,
        })?,
    };
    let (rl, rs) = r.ok_or(InputError::Missing("r"))?;
    let r = parse_poly(&rs, n).map_err(|source| InputError::Expr { line: rl, source })?;
    Ok(DomainSpec { n, q, point, r })
}

/// `(a, b, ...)` with Gaussian-rational entries.
pub fn parse_point(s: &str, n: usize) -> Result<Vec<Gq>, InputError> {
    let t = s.trim();
    let inner = t
        .strip_prefix('(')
        .and_then(|x| x.strip_suffix(')'))
        .ok_or_else(|| InputError::Format { line: 0, msg: "point must be parenthesised".into() })?;
    let parts: Vec<&str> = inner.split(',').collect();
    if parts.len() != n {
        return Err(InputError::Format { line: 0, msg: format!("point has {} entries, expected {}", parts.len(), n) });
    }
    parts.iter().map(|p| parse_constant(p).map_err(|source| InputError::Expr { line: 0, source })).collect()
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub fn validate_domain(spec: &DomainSpec) -> ValidationReport {
    let r = &spec.r;
    let real = match r.non_real_witness() {
        None => CheckResult { name: "real", pass: true, witness: None },
        Some(m) => CheckResult { name: "real", pass: false, witness: Some(crate::poly::fmt_mono(&m)) },
    };
    let v = r.eval(&spec.point);
    let vanish = CheckResult {
        name: "vanishes_at_point",
        pass: gq_is_zero(&v),
        witness: if gq_is_zero(&v) { None } else { Some(fmt_gq(&v)) },
    };
    let grad: Vec<Gq> = (0..spec.n).map(|j| r.dz(j).eval(&spec.point)).collect();
    let nz = grad.iter().position(|c| !gq_is_zero(c));
    let gradient = CheckResult {
        name: "gradient_nonzero",
        pass: nz.is_some(),
        witness: Some(match nz {
            Some(j) => format!("dr/dz{} = {}", j + 1, fmt_gq(&grad[j])),
            None => "all first derivatives vanish".into(),
        }),
    };
    ValidationReport { checks: vec![real, vanish, gradient] }
}
