//! Exact Gaussian-rational scalars and their canonical text form.

use std::fmt;

use num_bigint::BigInt;
use num_complex::Complex;
use num_traits::{One, Zero};

use crate::error::ParseError;
pub use crate::rational::Rational;

/// `a + b i` with `a`, `b` exact rationals.
pub type Scalar = Complex<Rational>;

pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(n: i64) -> Rational {
    Rational::from(n)
}

pub fn real(r: Rational) -> Scalar {
    Complex::new(r, Rational::zero())
}

pub fn sint(n: i64) -> Scalar {
    real(int(n))
}

pub fn i_unit() -> Scalar {
    Complex::new(Rational::zero(), Rational::one())
}

pub fn half() -> Scalar {
    real(rat(1, 2))
}

/// Size of a residual entry: `max(|re|, |im|)`. Zero iff the scalar is zero.
pub fn magnitude(s: &Scalar) -> Rational {
    let re = s.re.abs();
    let im = s.im.abs();
    if re >= im {
        re
    } else {
        im
    }
}

pub fn rational_to_f64(r: &Rational) -> f64 {
    r.to_f64()
}

pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn parse_rational(text: &str) -> Result<Rational, ParseError> {
    let text = text.trim();
    let bad = || ParseError::syntax(1, 1, format!("not a rational literal: {text:?}"));
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (text, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| bad())?;
    let den: BigInt = den.parse().map_err(|_| bad())?;
    if den.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(num, den))
}

/// Canonical form: `3/4`, `-1/2i`, `1/2-1/2i`, `0`.
pub fn format_scalar(s: &Scalar) -> String {
    match (s.re.is_zero(), s.im.is_zero()) {
        (_, true) => format_rational(&s.re),
        (true, false) => format!("{}i", format_rational(&s.im)),
        (false, false) => {
            let sign = if s.im.is_negative() { '-' } else { '+' };
            format!(
                "{}{}{}i",
                format_rational(&s.re),
                sign,
                format_rational(&s.im.abs())
            )
        }
    }
}

pub fn parse_scalar(text: &str) -> Result<Scalar, ParseError> {
    let t = text.trim();
    let Some(body) = t.strip_suffix('i') else {
        return Ok(real(parse_rational(t)?));
    };
    // split at the last sign that is not the leading one
    let split = body
        .char_indices()
        .skip(1)
        .filter(|(_, c)| *c == '+' || *c == '-')
        .map(|(i, _)| i)
        .last();
    match split {
        None => Ok(Complex::new(Rational::zero(), parse_rational(body)?)),
        Some(at) => {
            let re = parse_rational(&body[..at])?;
            let im_text = &body[at..];
            let im = parse_rational(im_text.strip_prefix('+').unwrap_or(im_text))?;
            Ok(Complex::new(re, im))
        }
    }
}

/// Display adapter for scalars in messages.
pub struct Show<'a>(pub &'a Scalar);

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_scalar(self.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn canonical_strings() {
        assert_eq!(format_scalar(&sint(3)), "3");
        assert_eq!(
            format_scalar(&Complex::new(rat(1, 2), rat(-1, 2))),
            "1/2-1/2i"
        );
        assert_eq!(format_scalar(&Complex::new(int(0), rat(-3, 4))), "-3/4i");
        assert_eq!(format_scalar(&Scalar::zero()), "0");
        assert_eq!(
            parse_scalar("-1/2+3i").unwrap(),
            Complex::new(rat(-1, 2), int(3))
        );
        assert_eq!(parse_scalar("-7i").unwrap(), Complex::new(int(0), int(-7)));
        assert!(parse_scalar("1/0").is_err());
    }

    proptest! {
        #[test]
        fn scalar_text_round_trip(a in -50i64..50, b in 1i64..40, c in -50i64..50, d in 1i64..40) {
            let s = Complex::new(rat(a, b), rat(c, d));
            prop_assert_eq!(parse_scalar(&format_scalar(&s)).unwrap(), s);
        }
    }
}
