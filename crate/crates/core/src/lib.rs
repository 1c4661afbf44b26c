//! Continuous-time primal-dual gradient dynamics for convex programs, written
//! as a Brayton-Moser system coupled to a switched multiplier projection, with
//! numerical checks of the passivity and stability certificates.

// negated comparisons reject NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bm;
pub mod error;
pub mod hvac;
pub mod integrator;
pub mod interconnect;
pub mod monitor;
pub mod problem;
pub mod random;
pub mod scenario;
pub mod signal;
pub mod switched;
pub mod trajectory;

pub use error::{Error, Result};
