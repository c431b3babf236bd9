//! Guide chapters, compiled as doc-tests.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}
#[doc = include_str!("../../../book/src/rmatrix.md")]
pub mod rmatrix {}
#[doc = include_str!("../../../book/src/fock.md")]
pub mod fock {}
#[doc = include_str!("../../../book/src/normal-ordering.md")]
pub mod normal_ordering {}
#[doc = include_str!("../../../book/src/vertex.md")]
pub mod vertex {}
#[doc = include_str!("../../../book/src/boundary.md")]
pub mod boundary {}
#[doc = include_str!("../../../book/src/suites.md")]
pub mod suites {}
