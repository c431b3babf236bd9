//! Check reports shared by every module.

use num_traits::Zero;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::scalar::{format_rational, parse_rational, rational_to_f64, Rational};

/// How residuals are judged.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Mode {
    /// Pass iff every residual is identically zero.
    #[default]
    Exact,
    /// Pass iff every residual is at most `tol` after conversion to `f64`.
    Float { tol: f64 },
}

impl Mode {
    pub const DEFAULT_TOL: f64 = 1e-10;

    pub fn float() -> Self {
        Mode::Float {
            tol: Self::DEFAULT_TOL,
        }
    }

    pub fn accepts(&self, residual: &Rational) -> bool {
        match self {
            Mode::Exact => residual.is_zero(),
            Mode::Float { tol } => rational_to_f64(residual) <= *tol,
        }
    }

    pub fn residual(&self, r: &Rational) -> Residual {
        match self {
            Mode::Exact => Residual::Exact(r.clone()),
            Mode::Float { .. } => Residual::Float(rational_to_f64(r)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Residual {
    Exact(Rational),
    Float(f64),
}

impl Residual {
    pub fn as_f64(&self) -> f64 {
        match self {
            Residual::Exact(r) => rational_to_f64(r),
            Residual::Float(x) => *x,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Residual::Exact(r) => r.is_zero(),
            Residual::Float(x) => *x == 0.0,
        }
    }
}

impl Serialize for Residual {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Residual::Exact(r) => s.serialize_str(&format_rational(r)),
            Residual::Float(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for Residual {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Text(t) => parse_rational(&t)
                .map(Residual::Exact)
                .map_err(serde::de::Error::custom),
            Raw::Number(x) => Ok(Residual::Float(x)),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Position of the sample in the check's canonical enumeration order.
    pub index: usize,
    pub sample: String,
    pub residual: Residual,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub check: String,
    pub samples: usize,
    pub max_residual: Residual,
    pub pass: bool,
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl Report {
    /// Combines two reports on disjoint sample ranges. The witness kept is the
    /// one with the smallest sample index, so merging is order independent.
    pub fn merge(mut self, other: Report) -> Report {
        self.samples += other.samples;
        if other.max_residual.as_f64() > self.max_residual.as_f64()
            || matches!((&self.max_residual, &other.max_residual), (Residual::Exact(a), Residual::Exact(b)) if b > a)
        {
            self.max_residual = other.max_residual;
        }
        self.pass &= other.pass;
        self.witness = match (self.witness.take(), other.witness) {
            (Some(a), Some(b)) => Some(if b.index < a.index { b } else { a }),
            (a, b) => a.or(b),
        };
        self.notes.extend(other.notes);
        self
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Report {
        self.notes.push(note.into());
        self
    }
}

/// Accumulates residuals sample by sample.
pub struct ReportBuilder {
    check: String,
    mode: Mode,
    samples: usize,
    max: Rational,
    witness: Option<Witness>,
    notes: Vec<String>,
}

impl ReportBuilder {
    pub fn new(check: impl Into<String>, mode: Mode) -> Self {
        ReportBuilder {
            check: check.into(),
            mode,
            samples: 0,
            max: Rational::zero(),
            witness: None,
            notes: Vec::new(),
        }
    }

    pub fn record(&mut self, sample: impl FnOnce() -> String, residual: Rational) {
        let index = self.samples;
        self.samples += 1;
        if !self.mode.accepts(&residual) && self.witness.is_none() {
            self.witness = Some(Witness {
                index,
                sample: sample(),
                residual: self.mode.residual(&residual),
            });
        }
        if residual > self.max {
            self.max = residual;
        }
    }

    pub fn note(&mut self, note: impl Into<String>) {
        self.notes.push(note.into());
    }

    pub fn failed(&self) -> bool {
        self.witness.is_some()
    }

    pub fn finish(self) -> Report {
        Report {
            check: self.check,
            samples: self.samples,
            max_residual: self.mode.residual(&self.max),
            pass: self.witness.is_none(),
            witness: self.witness,
            notes: self.notes,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    #[test]
    fn witness_is_first_failure() {
        let mut b = ReportBuilder::new("demo", Mode::Exact);
        b.record(|| "a".into(), rat(0, 1));
        b.record(|| "b".into(), rat(1, 3));
        b.record(|| "c".into(), rat(2, 1));
        let r = b.finish();
        assert!(!r.pass);
        assert_eq!(r.samples, 3);
        assert_eq!(r.witness.as_ref().unwrap().sample, "b");
        assert_eq!(r.max_residual, Residual::Exact(rat(2, 1)));
    }

    #[test]
    fn float_mode_uses_tolerance() {
        let mut b = ReportBuilder::new("demo", Mode::Float { tol: 1e-3 });
        b.record(|| "a".into(), rat(1, 10_000));
        assert!(b.finish().pass);
    }

    #[test]
    fn merge_is_order_independent() {
        let mk = |idx: usize, res: i64| Report {
            check: "c".into(),
            samples: 1,
            max_residual: Residual::Exact(rat(res, 1)),
            pass: res == 0,
            witness: (res != 0).then(|| Witness {
                index: idx,
                sample: idx.to_string(),
                residual: Residual::Exact(rat(res, 1)),
            }),
            notes: vec![],
        };
        let ab = mk(0, 2).merge(mk(1, 3));
        let ba = mk(1, 3).merge(mk(0, 2));
        assert_eq!(ab.witness, ba.witness);
        assert_eq!(ab.max_residual, ba.max_residual);
        assert_eq!(ab.witness.unwrap().index, 0);
    }

    #[test]
    fn json_round_trip() {
        let mut b = ReportBuilder::new("yang-baxter", Mode::Exact);
        b.record(|| "(3, 2, 1)".into(), rat(1, 7));
        let r = b.finish();
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("\"1/7\""));
        let back: Report = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
