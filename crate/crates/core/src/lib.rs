// `!(x > y)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod bessel;
pub mod io;
pub mod kernel;
pub mod moments;
pub mod sequence;
pub mod solver;
pub mod sum;
pub mod svg;

/// Default certified truncation tolerance.
pub const DEFAULT_EPS: f64 = 1e-12;
