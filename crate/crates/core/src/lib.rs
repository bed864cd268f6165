//! Dynamic maintenance of Kronecker-structured projections with sketched
//! queries, plus the differential-privacy machinery that makes sketch-based
//! estimators robust against adaptive adversaries.
//!
//! Vectors of length `n²` always use column-major `vec`; see [`kronlinalg`].

pub mod adaptive;
pub mod dpcore;
pub mod gen;
pub mod harness;
pub mod kronlinalg;
pub mod oracle;
pub mod projmaint;
pub mod sketch;
