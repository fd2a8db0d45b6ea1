//! Exact boundary invariants of pseudoconvex polynomial domains.
//!
//! Polynomials live in `poly`, weights in `weights`; `kohn` runs the multiplier
//! ideal algorithm on top of `levi` and `boundary`.

pub mod boundary;
pub mod dangelo;
pub mod kohn;
pub mod levi;
pub mod num;
pub mod parse;
pub mod poly;
pub mod report;
pub mod truncation;
pub mod weights;
