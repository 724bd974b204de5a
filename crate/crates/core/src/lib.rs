//! Simulation and stability analysis for the linear Moore-Gibson-Thompson
//! equation
//!
//! ```text
//! tau u_ttt + alpha u_tt - c^2 Lap u - b Lap u_t = f
//! ```
//!
//! with a Robin condition on Gamma0 and a dissipative condition on Gamma1,
//! discretized by P1 finite elements.

// negated comparisons reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod discretization;
pub mod dynamics;
pub mod energy;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod multiplier;
pub mod scenario;
pub mod spectral;

pub use error::{Error, Result};
