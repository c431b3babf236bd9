//! Rational-function expressions over Gaussian-rational literals.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary | atom)*      juxtaposition multiplies
//! unary  := ("+" | "-") unary | power
//! power  := atom ("^" "-"? digits)?
//! atom   := digits | "i" | variable | "(" expr ")"
//! ```
//!
//! Decimal literals are only accepted when the caller opts in; they are
//! converted to the exact rational they denote.

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, ParseError, Result};
use crate::scalar::{format_rational, i_unit, real, Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub enum RatExpr {
    Const(Scalar),
    Var(usize),
    Neg(Box<RatExpr>),
    Add(Box<RatExpr>, Box<RatExpr>),
    Sub(Box<RatExpr>, Box<RatExpr>),
    Mul(Box<RatExpr>, Box<RatExpr>),
    Div(Box<RatExpr>, Box<RatExpr>),
    Pow(Box<RatExpr>, i32),
}

/// Rendering context: variable names for `Var` indices.
pub struct Render<'a> {
    pub expr: &'a RatExpr,
    pub vars: &'a [&'a str],
}

impl fmt::Display for Render<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.vars;
        let r = |e: &RatExpr| Render { expr: e, vars: v }.to_string();
        match self.expr {
            RatExpr::Const(c) if c.im.is_zero() => write!(f, "({})", format_rational(&c.re)),
            RatExpr::Const(c) => write!(
                f,
                "(({})+({})*i)",
                format_rational(&c.re),
                format_rational(&c.im)
            ),
            RatExpr::Var(i) => f.write_str(v.get(*i).copied().unwrap_or("?")),
            RatExpr::Neg(a) => write!(f, "-({})", r(a)),
            RatExpr::Add(a, b) => write!(f, "({}+{})", r(a), r(b)),
            RatExpr::Sub(a, b) => write!(f, "({}-{})", r(a), r(b)),
            RatExpr::Mul(a, b) => write!(f, "{}*{}", r(a), r(b)),
            RatExpr::Div(a, b) => write!(f, "{}/({})", r(a), r(b)),
            RatExpr::Pow(a, e) => write!(f, "({})^{}", r(a), e),
        }
    }
}

impl RatExpr {
    pub fn constant(s: Scalar) -> Self {
        RatExpr::Const(s)
    }

    /// Evaluates at the given variable values. A vanishing denominator is
    /// reported with its rendered subexpression.
    pub fn eval(&self, values: &[Rational], names: &[&str]) -> Result<Scalar> {
        Ok(match self {
            RatExpr::Const(c) => c.clone(),
            RatExpr::Var(i) => real(values[*i].clone()),
            RatExpr::Neg(a) => -a.eval(values, names)?,
            RatExpr::Add(a, b) => a.eval(values, names)? + b.eval(values, names)?,
            RatExpr::Sub(a, b) => a.eval(values, names)? - b.eval(values, names)?,
            RatExpr::Mul(a, b) => a.eval(values, names)? * b.eval(values, names)?,
            RatExpr::Div(a, b) => {
                let d = b.eval(values, names)?;
                if d.is_zero() {
                    return Err(pole(b, values, names));
                }
                a.eval(values, names)? / d
            }
            RatExpr::Pow(a, e) => {
                let base = a.eval(values, names)?;
                if *e < 0 && base.is_zero() {
                    return Err(pole(a, values, names));
                }
                let mut acc = Scalar::one();
                for _ in 0..e.unsigned_abs() {
                    acc *= &base;
                }
                if *e < 0 {
                    Scalar::one() / acc
                } else {
                    acc
                }
            }
        })
    }
}

fn pole(denominator: &RatExpr, values: &[Rational], names: &[&str]) -> Error {
    let at = names
        .iter()
        .zip(values)
        .map(|(n, v)| format!("{n}={}", format_rational(v)))
        .collect::<Vec<_>>()
        .join(", ");
    Error::Pole {
        denominator: Render {
            expr: denominator,
            vars: names,
        }
        .to_string(),
        at,
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    allow_decimal: bool,
}

impl Lexer<'_> {
    fn tokens(mut self) -> std::result::Result<Vec<(Tok, usize)>, ParseError> {
        let mut out = Vec::new();
        while self.pos < self.src.len() {
            let c = self.src[self.pos] as char;
            let col = self.pos + 1;
            if c.is_whitespace() {
                self.pos += 1;
            } else if c.is_ascii_digit() || c == '.' {
                let start = self.pos;
                while self.pos < self.src.len()
                    && ((self.src[self.pos] as char).is_ascii_digit() || self.src[self.pos] == b'.')
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                out.push((Tok::Num(self.number(text, col)?), col));
            } else if c.is_ascii_alphabetic() || c == '_' {
                let start = self.pos;
                while self.pos < self.src.len()
                    && ((self.src[self.pos] as char).is_ascii_alphanumeric()
                        || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                out.push((Tok::Ident(text.to_string()), col));
            } else if "+-*/^()".contains(c) {
                out.push((Tok::Op(c), col));
                self.pos += 1;
            } else {
                return Err(ParseError::syntax(
                    1,
                    col,
                    format!("unexpected character {c:?}"),
                ));
            }
        }
        Ok(out)
    }

    fn number(&self, text: &str, col: usize) -> std::result::Result<Rational, ParseError> {
        match text.split_once('.') {
            None => Ok(Rational::from_integer(text.parse::<BigInt>().unwrap())),
            Some(_) if !self.allow_decimal => Err(ParseError::non_rational(
                1,
                col,
                format!("decimal literal {text} is not an exact rational"),
            )),
            Some((int_part, frac)) => {
                if frac.contains('.') {
                    return Err(ParseError::syntax(
                        1,
                        col,
                        format!("malformed number {text}"),
                    ));
                }
                let digits = format!("{int_part}{frac}");
                let num: BigInt = digits
                    .parse()
                    .map_err(|_| ParseError::syntax(1, col, format!("malformed number {text}")))?;
                let den = num_traits::pow(BigInt::from(10), frac.len());
                Ok(Rational::new(num, den))
            }
        }
    }
}

struct Parser<'a> {
    toks: Vec<(Tok, usize)>,
    pos: usize,
    vars: &'a [&'a str],
    end_col: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|(t, _)| t)
    }

    fn col(&self) -> usize {
        self.toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or(self.end_col)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> std::result::Result<RatExpr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = RatExpr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = RatExpr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> std::result::Result<RatExpr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = RatExpr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = RatExpr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else if matches!(self.peek(), Some(Tok::Ident(_)) | Some(Tok::Op('('))) {
                lhs = RatExpr::Mul(Box::new(lhs), Box::new(self.power()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> std::result::Result<RatExpr, ParseError> {
        if self.eat('-') {
            return Ok(RatExpr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> std::result::Result<RatExpr, ParseError> {
        let base = self.atom()?;
        if !self.eat('^') {
            return Ok(base);
        }
        let negative = self.eat('-');
        let col = self.col();
        match self.toks.get(self.pos).cloned() {
            Some((Tok::Num(n), _)) if n.is_integer() => {
                self.pos += 1;
                let e: i32 = n
                    .numer()
                    .try_into()
                    .map_err(|_| ParseError::syntax(1, col, "exponent too large"))?;
                Ok(RatExpr::Pow(Box::new(base), if negative { -e } else { e }))
            }
            _ => Err(ParseError::syntax(1, col, "expected an integer exponent")),
        }
    }

    fn atom(&mut self) -> std::result::Result<RatExpr, ParseError> {
        let col = self.col();
        match self.toks.get(self.pos).cloned() {
            Some((Tok::Num(n), _)) => {
                self.pos += 1;
                Ok(RatExpr::Const(real(n)))
            }
            Some((Tok::Ident(name), _)) => {
                self.pos += 1;
                if name == "i" {
                    Ok(RatExpr::Const(i_unit()))
                } else if let Some(idx) = self.vars.iter().position(|v| *v == name) {
                    Ok(RatExpr::Var(idx))
                } else {
                    Err(ParseError::non_rational(
                        1,
                        col,
                        format!("`{name}` is neither a declared variable nor the imaginary unit"),
                    ))
                }
            }
            Some((Tok::Op('('), _)) => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(ParseError::syntax(1, self.col(), "expected `)`"));
                }
                Ok(inner)
            }
            Some((Tok::Op(c), _)) => Err(ParseError::syntax(1, col, format!("unexpected `{c}`"))),
            None => Err(ParseError::syntax(1, col, "unexpected end of expression")),
        }
    }
}

/// Parses one rational-function string in the given variables.
pub fn parse_ratfunc(
    text: &str,
    vars: &[&str],
    allow_decimal: bool,
) -> std::result::Result<RatExpr, ParseError> {
    let toks = Lexer {
        src: text.as_bytes(),
        pos: 0,
        allow_decimal,
    }
    .tokens()?;
    let mut p = Parser {
        toks,
        pos: 0,
        vars,
        end_col: text.len() + 1,
    };
    let e = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(ParseError::syntax(1, p.col(), "trailing input"));
    }
    Ok(e)
}

/// Text for a rational literal that can be spliced into an expression.
pub fn literal(r: &Rational) -> String {
    let s = format_rational(r);
    if r.is_integer() && r >= &Rational::zero() {
        s
    } else {
        format!("({s})")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::ParseErrorKind;
    use crate::scalar::{int, rat};
    use num_complex::Complex;

    fn ev(text: &str, k1: i64, k2: i64) -> Result<Scalar> {
        let vars = ["k1", "k2"];
        parse_ratfunc(text, &vars, false)
            .unwrap()
            .eval(&[int(k1), int(k2)], &vars)
    }

    #[test]
    fn evaluates_gaussian_rational_functions() {
        assert_eq!(ev("1", 0, 0).unwrap(), real(int(1)));
        assert_eq!(
            ev("(k1-k2)/(k1-k2+i)", 2, 1).unwrap(),
            Complex::new(rat(1, 2), rat(-1, 2))
        );
        assert_eq!(
            ev("2i*k1 - 1/2", 3, 0).unwrap(),
            Complex::new(rat(-1, 2), int(6))
        );
        assert_eq!(ev("(k1+1)^-2", 1, 0).unwrap(), real(rat(1, 4)));
        assert_eq!(ev("-k2^2", 0, 3).unwrap(), real(int(-9)));
    }

    #[test]
    fn pole_names_denominator() {
        match ev("1/(k1-k2)", 4, 4) {
            Err(Error::Pole { denominator, at }) => {
                assert!(denominator.contains("k1"), "{denominator}");
                assert_eq!(at, "k1=4, k2=4");
            }
            other => panic!("expected pole, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_positions() {
        let e = parse_ratfunc("k1 + * 2", &["k1"], false).unwrap_err();
        assert_eq!((e.kind, e.column), (ParseErrorKind::Syntax, 6));
        let e = parse_ratfunc("sqrt(2)", &["k1"], false).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::NonRationalCoefficient);
        let e = parse_ratfunc("1.5*k1", &["k1"], false).unwrap_err();
        assert_eq!(e.kind, ParseErrorKind::NonRationalCoefficient);
        let e = parse_ratfunc("(k1", &["k1"], false).unwrap_err();
        assert_eq!(e.column, 4);
        let ok = parse_ratfunc("1.5*k1", &["k1"], true).unwrap();
        assert_eq!(ok.eval(&[int(2)], &["k1"]).unwrap(), real(int(3)));
    }
}
