//! Exact checks for Zamolodchikov-Faddeev algebras, their vertex operators
//! and boundary extensions, over Gaussian rationals.

pub mod boundary;
pub mod error;
pub mod fock;
pub mod linalg;
pub mod ratfunc;
pub mod rational;
pub mod report;
pub mod rmatrix;
pub mod scalar;
pub mod suite;
pub mod symbolic;
pub mod vertex;

pub use error::{Error, ParseError, ParseErrorKind, Result};
pub use linalg::Mat;
pub use report::{Mode, Report, Residual, Witness};
pub use rmatrix::{check_rmatrix_axioms, parse_custom_rmatrix, Family, RMatrix};
pub use scalar::{Rational, Scalar};
