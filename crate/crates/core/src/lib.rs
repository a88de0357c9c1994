//! Numerical certification of weighted Hardy inequalities for the
//! rectangular integration operator on `R_+^n`.
//!
//! The crate samples a weight pair `(v, w)` on a truncated grid, evaluates
//! the Muckenhoupt-type functionals that characterize boundedness of
//! `I_n: L^p_v -> L^q_w`, estimates the best constant directly by ratio
//! maximization over nonnegative functions, and checks the two-sided
//! estimates that tie the two together.

// `!(x > 0.0)` style tests are deliberate: they reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod functionals;
pub mod grid;
pub mod normest;
pub mod numeric;
pub mod verify;
pub mod weights;

pub use error::{Error, Result};
