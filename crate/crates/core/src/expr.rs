//! Expression grammar for textual charts and fields.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := unary (('*'|'/') unary)*
//! unary  := '-' unary | factor
//! factor := base ('^' unary)?
//! base   := number | ident | func '(' expr ')' | '(' expr ')'
//! ```

use crate::error::{Error, Result};
use crate::jet::Scalar;
use std::fmt;

/// Variables an expression may reference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    S1,
    S2,
    S,
    Theta,
    Sigma,
    Tau,
    X,
    Y,
    Z,
    Xi,
}

impl Var {
    pub const ALL: [Var; 10] = [
        Var::S1,
        Var::S2,
        Var::S,
        Var::Theta,
        Var::Sigma,
        Var::Tau,
        Var::X,
        Var::Y,
        Var::Z,
        Var::Xi,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Var::S1 => "s1",
            Var::S2 => "s2",
            Var::S => "s",
            Var::Theta => "theta",
            Var::Sigma => "sigma",
            Var::Tau => "tau",
            Var::X => "x",
            Var::Y => "y",
            Var::Z => "z",
            Var::Xi => "xi",
        }
    }

    pub fn from_name(n: &str) -> Option<Var> {
        Var::ALL.iter().copied().find(|v| v.name() == n)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Exp,
    Log,
    Sqrt,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(n: &str) -> Option<Func> {
        Some(match n {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "tan" => Func::Tan,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Named {
    Pi,
    E,
}

/// Parsed expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Const(Named),
    Var(Var),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Values bound to each [`Var`] during evaluation.
#[derive(Clone, Debug)]
pub struct Bindings<T> {
    slots: [Option<T>; 10],
}

impl<T: Clone> Default for Bindings<T> {
    fn default() -> Self {
        Bindings {
            slots: Default::default(),
        }
    }
}

impl<T: Clone> Bindings<T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, v: Var, val: T) -> Self {
        self.slots[v.index()] = Some(val);
        self
    }

    pub fn set(&mut self, v: Var, val: T) {
        self.slots[v.index()] = Some(val);
    }

    pub fn get(&self, v: Var) -> Option<&T> {
        self.slots[v.index()].as_ref()
    }
}

pub fn parse_expr(text: &str) -> Result<Expr> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            msg: msg.to_string(),
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

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = if c == b'*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let e = self.unary()?;
            return Ok(Expr::Neg(Box::new(e)));
        }
        self.factor()
    }

    fn factor(&mut self) -> Result<Expr> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr> {
        match self.peek() {
            None => Err(self.err("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if let Some(f) = Func::from_name(name) {
                    if self.peek() != Some(b'(') {
                        return Err(self.err("expected `(` after function name"));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    if self.peek() != Some(b')') {
                        return Err(self.err("expected `)`"));
                    }
                    self.pos += 1;
                    return Ok(Expr::Call(f, Box::new(arg)));
                }
                match name {
                    "pi" => Ok(Expr::Const(Named::Pi)),
                    "e" => Ok(Expr::Const(Named::E)),
                    _ => Var::from_name(name).map(Expr::Var).ok_or(Error::UnknownName {
                        name: name.to_string(),
                        offset: start,
                    }),
                }
            }
            Some(_) => Err(self.err("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
        };
        digits(&mut self.pos);
        if self.pos < s.len() && s[self.pos] == b'.' {
            self.pos += 1;
            digits(&mut self.pos);
        }
        if self.pos < s.len() && (s[self.pos] == b'e' || s[self.pos] == b'E') {
            let mut q = self.pos + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if q < s.len() && s[q].is_ascii_digit() {
                self.pos = q;
                digits(&mut self.pos);
            }
        }
        let text = std::str::from_utf8(&s[start..self.pos]).unwrap();
        text.parse::<f64>().map(Expr::Num).map_err(|_| Error::Syntax {
            offset: start,
            msg: format!("malformed number `{text}`"),
        })
    }
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Add(..) | Expr::Sub(..) => 1,
        Expr::Mul(..) | Expr::Div(..) => 2,
        Expr::Neg(..) => 3,
        Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => 3,
        Expr::Pow(..) => 4,
        _ => 5,
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn wrap(f: &mut fmt::Formatter<'_>, e: &Expr, paren: bool) -> fmt::Result {
            if paren {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Const(Named::Pi) => write!(f, "pi"),
            Expr::Const(Named::E) => write!(f, "e"),
            Expr::Var(v) => write!(f, "{}", v.name()),
            Expr::Neg(a) => {
                write!(f, "-")?;
                wrap(f, a, prec(a) < 3)
            }
            Expr::Add(a, b) | Expr::Sub(a, b) => {
                wrap(f, a, prec(a) < 1 || prec(a) == 3)?;
                write!(f, "{}", if matches!(self, Expr::Add(..)) { "+" } else { "-" })?;
                wrap(f, b, prec(b) <= 1 || prec(b) == 3)
            }
            Expr::Mul(a, b) | Expr::Div(a, b) => {
                wrap(f, a, prec(a) < 2 || prec(a) == 3)?;
                write!(f, "{}", if matches!(self, Expr::Mul(..)) { "*" } else { "/" })?;
                wrap(f, b, prec(b) <= 2 || prec(b) == 3)
            }
            Expr::Pow(a, b) => {
                wrap(f, a, prec(a) <= 4)?;
                write!(f, "^")?;
                wrap(f, b, prec(b) < 4)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

fn num(v: f64) -> Expr {
    Expr::Num(v)
}

fn as_num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(v) => Some(*v),
        _ => None,
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) if y != 0.0 => num(x / y),
        (Some(x), _) if x == 0.0 => num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::Div(Box::new(a), Box::new(b)),
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) => num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn call(f: Func, a: Expr) -> Expr {
    Expr::Call(f, Box::new(a))
}

fn pow(a: Expr, b: Expr) -> Expr {
    match as_num(&b) {
        Some(y) if y == 0.0 => num(1.0),
        Some(y) if y == 1.0 => a,
        _ => Expr::Pow(Box::new(a), Box::new(b)),
    }
}

impl Expr {
    pub fn depends_on(&self, v: Var) -> bool {
        match self {
            Expr::Num(_) | Expr::Const(_) => false,
            Expr::Var(w) => *w == v,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(v),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on(v) || b.depends_on(v)
            }
        }
    }

    /// Replace every occurrence of `v` with `with`.
    pub fn substitute(&self, v: Var, with: &Expr) -> Expr {
        let sub = |e: &Expr| Box::new(e.substitute(v, with));
        match self {
            Expr::Var(w) if *w == v => with.clone(),
            Expr::Num(_) | Expr::Const(_) | Expr::Var(_) => self.clone(),
            Expr::Neg(a) => Expr::Neg(sub(a)),
            Expr::Call(f, a) => Expr::Call(*f, sub(a)),
            Expr::Add(a, b) => Expr::Add(sub(a), sub(b)),
            Expr::Sub(a, b) => Expr::Sub(sub(a), sub(b)),
            Expr::Mul(a, b) => Expr::Mul(sub(a), sub(b)),
            Expr::Div(a, b) => Expr::Div(sub(a), sub(b)),
            Expr::Pow(a, b) => Expr::Pow(sub(a), sub(b)),
        }
    }

    /// Variables referenced anywhere in the tree.
    pub fn variables(&self) -> Vec<Var> {
        Var::ALL.iter().copied().filter(|&v| self.depends_on(v)).collect()
    }

    /// Exact symbolic derivative.
    pub fn diff(&self, v: Var) -> Expr {
        if !self.depends_on(v) {
            return num(0.0);
        }
        match self {
            Expr::Num(_) | Expr::Const(_) => num(0.0),
            Expr::Var(w) => num(if *w == v { 1.0 } else { 0.0 }),
            Expr::Neg(a) => neg(a.diff(v)),
            Expr::Add(a, b) => add(a.diff(v), b.diff(v)),
            Expr::Sub(a, b) => sub(a.diff(v), b.diff(v)),
            Expr::Mul(a, b) => add(
                mul(a.diff(v), (**b).clone()),
                mul((**a).clone(), b.diff(v)),
            ),
            Expr::Div(a, b) => {
                let num_part = sub(
                    mul(a.diff(v), (**b).clone()),
                    mul((**a).clone(), b.diff(v)),
                );
                div(num_part, pow((**b).clone(), num(2.0)))
            }
            Expr::Pow(a, b) => {
                if !b.depends_on(v) {
                    let reduced = match as_num(b) {
                        Some(y) => num(y - 1.0),
                        None => sub((**b).clone(), num(1.0)),
                    };
                    mul(
                        mul((**b).clone(), pow((**a).clone(), reduced)),
                        a.diff(v),
                    )
                } else {
                    // a^b (b' ln a + b a'/a)
                    let inner = add(
                        mul(b.diff(v), call(Func::Log, (**a).clone())),
                        div(mul((**b).clone(), a.diff(v)), (**a).clone()),
                    );
                    mul(self.clone(), inner)
                }
            }
            Expr::Call(f, a) => {
                let da = a.diff(v);
                let a = (**a).clone();
                let outer = match f {
                    Func::Sin => call(Func::Cos, a),
                    Func::Cos => neg(call(Func::Sin, a)),
                    Func::Tan => div(num(1.0), pow(call(Func::Cos, a), num(2.0))),
                    Func::Exp => call(Func::Exp, a),
                    Func::Log => div(num(1.0), a),
                    Func::Sqrt => div(num(0.5), call(Func::Sqrt, a)),
                };
                mul(outer, da)
            }
        }
    }

    /// Evaluate with `f64` or jet arithmetic.
    pub fn eval<T: Scalar>(&self, b: &Bindings<T>) -> Result<T> {
        Ok(match self {
            Expr::Num(v) => T::cst(*v),
            Expr::Const(Named::Pi) => T::cst(std::f64::consts::PI),
            Expr::Const(Named::E) => T::cst(std::f64::consts::E),
            Expr::Var(v) => b
                .get(*v)
                .cloned()
                .ok_or_else(|| Error::Unbound(v.name().to_string()))?,
            Expr::Neg(a) => -a.eval(b)?,
            Expr::Add(x, y) => x.eval(b)? + y.eval(b)?,
            Expr::Sub(x, y) => x.eval(b)? - y.eval(b)?,
            Expr::Mul(x, y) => x.eval(b)? * y.eval(b)?,
            Expr::Div(x, y) => {
                if let Some(c) = y.constant_value() {
                    x.eval(b)? / c
                } else {
                    x.eval(b)? / y.eval(b)?
                }
            }
            Expr::Pow(x, y) => {
                let base = x.eval(b)?;
                match y.constant_value() {
                    Some(c) if c.fract() == 0.0 && c.abs() <= 64.0 => base.powi(c as i32),
                    Some(c) => base.powf(c),
                    None => (y.eval(b)? * base.ln()).exp(),
                }
            }
            Expr::Call(f, a) => {
                let v = a.eval(b)?;
                match f {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tan => v.tan(),
                    Func::Exp => v.exp(),
                    Func::Log => v.ln(),
                    Func::Sqrt => v.sqrt(),
                }
            }
        })
    }

    /// Value when the tree references no variables.
    pub fn constant_value(&self) -> Option<f64> {
        if !self.variables().is_empty() {
            return None;
        }
        self.eval::<f64>(&Bindings::new()).ok()
    }

    pub fn eval_f64(&self, b: &Bindings<f64>) -> Result<f64> {
        let v = self.eval(b)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite(format!("`{self}` evaluated to {v}")))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(v: Var, x: f64) -> Bindings<f64> {
        Bindings::new().with(v, x)
    }

    #[test]
    fn parses_one_cos_node() {
        let e = parse_expr("cos(2*pi*s)").unwrap();
        assert!(matches!(e, Expr::Call(Func::Cos, _)));
    }

    #[test]
    fn power_rule() {
        let d = parse_expr("s^2").unwrap().diff(Var::S);
        assert_eq!(d.to_string(), "2*s");
    }

    #[test]
    fn evaluates_sine() {
        let e = parse_expr("sin(2*pi*s)").unwrap();
        assert!((e.eval_f64(&at(Var::S, 0.25)).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reports_offsets() {
        match parse_expr("1 + foo(2)") {
            Err(Error::UnknownName { name, offset }) => {
                assert_eq!(name, "foo");
                assert_eq!(offset, 4);
            }
            other => panic!("{other:?}"),
        }
        match parse_expr("2 * (s + 1") {
            Err(Error::Syntax { offset, .. }) => assert_eq!(offset, 10),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_expr("3 $"), Err(Error::Syntax { offset: 2, .. })));
    }

    #[test]
    fn print_parse_round_trip() {
        for t in [
            "-x^2",
            "(-x)^2",
            "a",
            "2^-s",
            "1-(2-3)",
            "x/(y*z)",
            "(x/y)/z",
            "2^3^s",
            "(2^3)^s",
            "-(s+1)*3",
            "1e-3*sin(theta)-sqrt(x*x+y*y)",
            "x - -y",
        ] {
            let Ok(e) = parse_expr(t) else { continue };
            let p1 = e.to_string();
            let e2 = parse_expr(&p1).unwrap();
            assert_eq!(e, e2, "{t} -> {p1}");
            assert_eq!(p1, e2.to_string());
        }
    }

    #[test]
    fn variable_exponent() {
        let e = parse_expr("x^x").unwrap();
        let d = e.diff(Var::X);
        let v: f64 = d.eval_f64(&at(Var::X, 2.0)).unwrap();
        assert!((v - 4.0 * (2f64.ln() + 1.0)).abs() < 1e-12);
    }
}
