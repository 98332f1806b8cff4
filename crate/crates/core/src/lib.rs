//! Weyl-algebra deformation quantization, quasi-free states of the free Bose gas and
//! their classical (h -> 0) and thermodynamic limits, with numerical certificates.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod berezin;
pub mod equilibrium;
pub mod error;
pub mod gibbsmc;
pub mod quad;
pub mod quantize;
pub mod spectrum;
pub mod states;
pub mod testfn;
pub mod weyl;

pub use error::{Error, Result};
