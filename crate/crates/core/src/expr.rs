//! Small expression grammar for data functions in experiment configs:
//! polynomials in x1, x2, x3, the constant pi, sin/cos/exp, and the
//! arithmetic operators + - * / ^ (integer exponents). Expressions are
//! differentiated symbolically, so config-supplied data provides the
//! partial derivatives the trace norms need.

use crate::data::DataFn;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ExprError {
    #[error("unexpected character {found:?} at byte {at}")]
    UnexpectedChar { found: char, at: usize },
    #[error("unknown identifier {0:?} (expected x1, x2, x3, pi, sin, cos, exp)")]
    UnknownIdent(String),
    #[error("expected {expected} at byte {at}")]
    Expected { expected: &'static str, at: usize },
    #[error("exponent must be a nonnegative integer at byte {at}")]
    BadExponent { at: usize },
    #[error("trailing input at byte {at}")]
    Trailing { at: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Neg(Box<Expr>),
    Sin(Box<Expr>),
    Cos(Box<Expr>),
    Exp(Box<Expr>),
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(i) => write!(f, "x{}", i + 1),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, k) => write!(f, "{a}^{k}"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Sin(a) => write!(f, "sin({a})"),
            Expr::Cos(a) => write!(f, "cos({a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
        }
    }
}

// Folding constructors keep differentiated trees small.
fn add(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x + y),
        (Expr::Num(z), _) if *z == 0.0 => b,
        (_, Expr::Num(z)) if *z == 0.0 => a,
        _ => Expr::Add(Box::new(a), Box::new(b)),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x - y),
        (_, Expr::Num(z)) if *z == 0.0 => a,
        _ => Expr::Sub(Box::new(a), Box::new(b)),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (&a, &b) {
        (Expr::Num(x), Expr::Num(y)) => Expr::Num(x * y),
        (Expr::Num(z), _) | (_, Expr::Num(z)) if *z == 0.0 => Expr::Num(0.0),
        (Expr::Num(o), _) if *o == 1.0 => b,
        (_, Expr::Num(o)) if *o == 1.0 => a,
        _ => Expr::Mul(Box::new(a), Box::new(b)),
    }
}

impl Expr {
    pub fn eval(&self, x: &[f64; 3]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var(i) => x[*i],
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, k) => a.eval(x).powi(*k as i32),
            Expr::Neg(a) => -a.eval(x),
            Expr::Sin(a) => a.eval(x).sin(),
            Expr::Cos(a) => a.eval(x).cos(),
            Expr::Exp(a) => a.eval(x).exp(),
        }
    }

    /// Symbolic partial derivative with respect to variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        match self {
            Expr::Num(_) => Expr::Num(0.0),
            Expr::Var(i) => Expr::Num(if *i == var { 1.0 } else { 0.0 }),
            Expr::Add(a, b) => add(a.diff(var), b.diff(var)),
            Expr::Sub(a, b) => sub(a.diff(var), b.diff(var)),
            Expr::Mul(a, b) => add(
                mul(a.diff(var), (**b).clone()),
                mul((**a).clone(), b.diff(var)),
            ),
            Expr::Div(a, b) => {
                // (a'b - ab') / b^2
                let num = sub(
                    mul(a.diff(var), (**b).clone()),
                    mul((**a).clone(), b.diff(var)),
                );
                Expr::Div(
                    Box::new(num),
                    Box::new(Expr::Pow(Box::new((**b).clone()), 2)),
                )
            }
            Expr::Pow(a, k) => {
                if *k == 0 {
                    Expr::Num(0.0)
                } else {
                    mul(
                        mul(
                            Expr::Num(*k as f64),
                            Expr::Pow(Box::new((**a).clone()), k - 1),
                        ),
                        a.diff(var),
                    )
                }
            }
            Expr::Neg(a) => match a.diff(var) {
                Expr::Num(v) => Expr::Num(-v),
                d => Expr::Neg(Box::new(d)),
            },
            Expr::Sin(a) => mul(Expr::Cos(a.clone()), a.diff(var)),
            Expr::Cos(a) => mul(Expr::Neg(Box::new(Expr::Sin(a.clone()))), a.diff(var)),
            Expr::Exp(a) => mul(Expr::Exp(a.clone()), a.diff(var)),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = Expr::Add(Box::new(acc), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = Expr::Sub(Box::new(acc), Box::new(self.term()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = Expr::Mul(Box::new(acc), Box::new(self.unary()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = Expr::Div(Box::new(acc), Box::new(self.unary()?));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let at = self.pos;
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(ExprError::BadExponent { at });
            }
            let k: u32 = std::str::from_utf8(&self.src[start..self.pos])
                .unwrap()
                .parse()
                .map_err(|_| ExprError::BadExponent { at })?;
            return Ok(Expr::Pow(Box::new(base), k));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        self.skip_ws();
        let at = self.pos;
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ExprError::Expected {
                        expected: "closing parenthesis",
                        at: self.pos,
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let start = self.pos;
                while self.pos < self.src.len() {
                    let c = self.src[self.pos];
                    if c.is_ascii_digit() || c == b'.' {
                        self.pos += 1;
                    } else if (c == b'e' || c == b'E')
                        && self.pos + 1 < self.src.len()
                        && (self.src[self.pos + 1].is_ascii_digit()
                            || self.src[self.pos + 1] == b'-'
                            || self.src[self.pos + 1] == b'+')
                    {
                        self.pos += 2;
                    } else {
                        break;
                    }
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                text.parse()
                    .map(Expr::Num)
                    .map_err(|_| ExprError::Expected {
                        expected: "number",
                        at,
                    })
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match name {
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "x1" => Ok(Expr::Var(0)),
                    "x2" => Ok(Expr::Var(1)),
                    "x3" => Ok(Expr::Var(2)),
                    "sin" | "cos" | "exp" => {
                        if self.peek() != Some(b'(') {
                            return Err(ExprError::Expected {
                                expected: "opening parenthesis after function name",
                                at: self.pos,
                            });
                        }
                        self.pos += 1;
                        let arg = self.expr()?;
                        if self.peek() != Some(b')') {
                            return Err(ExprError::Expected {
                                expected: "closing parenthesis",
                                at: self.pos,
                            });
                        }
                        self.pos += 1;
                        Ok(match name {
                            "sin" => Expr::Sin(Box::new(arg)),
                            "cos" => Expr::Cos(Box::new(arg)),
                            _ => Expr::Exp(Box::new(arg)),
                        })
                    }
                    other => Err(ExprError::UnknownIdent(other.to_string())),
                }
            }
            Some(c) => Err(ExprError::UnexpectedChar {
                found: c as char,
                at,
            }),
            None => Err(ExprError::Expected {
                expected: "expression",
                at,
            }),
        }
    }
}

pub fn parse_expr(text: &str) -> Result<Expr, ExprError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ExprError::Trailing { at: p.pos });
    }
    Ok(e)
}

/// A parsed expression with its partial derivatives to total order two,
/// usable wherever boundary or source data is needed.
pub struct ExprData {
    derivs: Vec<([u8; 3], Expr)>,
}

impl ExprData {
    pub fn new(expr: Expr) -> Self {
        let mut derivs = vec![([0u8, 0, 0], expr)];
        // First derivatives.
        for a in 0..3usize {
            let base = derivs[0].1.diff(a);
            let mut d = [0u8; 3];
            d[a] = 1;
            derivs.push((d, base));
        }
        // Second derivatives from the first (a <= b keeps each once).
        for a in 0..3usize {
            for b in a..3usize {
                let mut da = [0u8; 3];
                da[a] = 1;
                let first = &derivs.iter().find(|(d, _)| *d == da).unwrap().1;
                let second = first.diff(b);
                let mut d = da;
                d[b] += 1;
                derivs.push((d, second));
            }
        }
        Self { derivs }
    }

    pub fn parse(text: &str) -> Result<Self, ExprError> {
        Ok(Self::new(parse_expr(text)?))
    }
}

impl DataFn for ExprData {
    fn eval_deriv(&self, deriv: &[u8; 3], x: &[f64; 3]) -> f64 {
        self.derivs
            .iter()
            .find(|(d, _)| d == deriv)
            .map(|(_, e)| e.eval(x))
            .unwrap_or_else(|| panic!("derivative order {deriv:?} beyond 2 requested"))
    }
}

/// Adapter for exact solutions given as expressions.
pub fn expr_scalar_field(expr: Expr) -> crate::data::ScalarField {
    let data = ExprData::new(expr);
    std::sync::Arc::new(move |d: &[u8; 3], x: &[f64; 3]| data.eval_deriv(d, x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_eval() {
        let e = parse_expr("sin(pi*x1)*sin(pi*x2)").unwrap();
        let v = e.eval(&[0.5, 0.5, 0.0]);
        assert!((v - 1.0).abs() < 1e-15);
        let e = parse_expr("x1^2*(1-x1)^2*(2*x2-6*x2^2+4*x2^3)").unwrap();
        let v = e.eval(&[0.5, 0.25, 0.0]);
        let exact = 0.0625 * (0.5 - 0.375 + 0.0625);
        assert!((v - exact).abs() < 1e-15);
        assert!((parse_expr("-x1 + 2").unwrap().eval(&[3.0, 0.0, 0.0]) - (-1.0)).abs() < 1e-15);
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(
            parse_expr("foo(x1)"),
            Err(ExprError::UnknownIdent(_))
        ));
        assert!(matches!(
            parse_expr("x1 +"),
            Err(ExprError::Expected { .. })
        ));
        assert!(matches!(
            parse_expr("x1 ^ x2"),
            Err(ExprError::BadExponent { .. })
        ));
        assert!(matches!(
            parse_expr("x1 x2"),
            Err(ExprError::Trailing { .. })
        ));
        assert!(matches!(
            parse_expr("x1 # 2"),
            Err(ExprError::Trailing { .. }) | Err(ExprError::UnexpectedChar { .. })
        ));
    }

    #[test]
    fn symbolic_derivatives_match_finite_differences() {
        let exprs = [
            "sin(pi*x1)*cos(pi*x2)",
            "exp(x1*x2)*cos(pi*x1)",
            "x1^3 - 2*x1*x2 + x2^2/(1 + x1^2)",
        ];
        for text in exprs {
            let data = ExprData::parse(text).unwrap();
            let x = [0.37, 0.81, 0.0];
            let h = 1e-5;
            for a in 0..2usize {
                let mut d = [0u8; 3];
                d[a] = 1;
                let mut xp = x;
                let mut xm = x;
                xp[a] += h;
                xm[a] -= h;
                let fd =
                    (data.eval_deriv(&[0; 3], &xp) - data.eval_deriv(&[0; 3], &xm)) / (2.0 * h);
                let an = data.eval_deriv(&d, &x);
                assert!(
                    (fd - an).abs() <= 1e-7 * (1.0 + an.abs()),
                    "{text} d{a}: {fd} vs {an}"
                );
            }
            // Mixed second derivative.
            let h2 = 1e-4;
            let ev = |sx: f64, sy: f64| {
                let mut xx = x;
                xx[0] += sx * h2;
                xx[1] += sy * h2;
                data.eval_deriv(&[0; 3], &xx)
            };
            let fd =
                (ev(1.0, 1.0) - ev(1.0, -1.0) - ev(-1.0, 1.0) + ev(-1.0, -1.0)) / (4.0 * h2 * h2);
            let an = data.eval_deriv(&[1, 1, 0], &x);
            assert!(
                (fd - an).abs() <= 1e-5 * (1.0 + an.abs()),
                "{text} mixed: {fd} vs {an}"
            );
        }
    }
}
