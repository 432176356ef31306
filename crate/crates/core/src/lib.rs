// Negated comparisons reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bch;
pub mod error;
pub mod flow;
pub mod hopf;
pub mod ode;
pub mod scenarios;
pub mod so3;
pub mod tip;

pub use error::{Error, Result};
