// `!(x > 0.0)` is used deliberately so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coefficients;
pub mod discretization;
pub mod error;
pub mod greens;
pub mod random;
pub mod linalg;
pub mod report;
pub mod riesz;
pub mod spectral;
pub mod susy;
pub mod trace;
pub mod verify;
