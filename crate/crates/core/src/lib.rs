//! Domain-preserving time stepping for SDE systems on hypercubes.
//!
//! A model lives on `D = (L_1, R_1) x ... x (L_d, R_d)` with diagonal noise
//! `G_i(y) = g_i(y) (y_i - L_i) (R_i - y_i)`. Each step builds two
//! positivity-preserving exponential flows, one anchored at the lower bound
//! and one at the upper bound, and selects or mixes them per component so the
//! iterate never leaves `D`.
//!
//! Component indices are zero-based throughout.

// `!(a < b)` is used on purpose so NaN takes the rejecting branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod convergence;
pub mod domain;
pub mod error;
pub mod integrators;
pub mod models;
pub mod validate;

pub use domain::{BoundedSdeModel, FlowTag, State, TimeGrid};
pub use error::{Result, SdeError};
pub use integrators::{Scheme, SchemeConfig, StepResult, Trajectory};
