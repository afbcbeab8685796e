//! Chebyshev tensors and a Monte Carlo dynamic initial margin engine.

// Checks such as `!(x > 0.0)` are written that way on purpose: they also
// reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cheb;
pub mod dim;
pub mod harness;
pub mod pricers;
pub mod rfem;
pub mod simm;
