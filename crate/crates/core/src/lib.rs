//! Numerical lab for contact Hamilton-Jacobi equations `u_t + H(x, u, u_x) = 0`
//! on the circle `T = R/Z`.
//!
//! Grid functions live in [`fields`], Hamiltonians in [`models`]. The
//! solution semigroup is in [`evolve`], stationary and critical-value solvers
//! in [`stationary`], characteristics in [`flow`], 1-graph geometry in
//! [`jets`] and rate fitting / property checks in [`diagnostics`].

// `!(x > 0.0)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod flow;
pub mod io;
pub mod jets;
pub mod models;
pub mod evolve;
pub mod stationary;

pub use error::{LabError, Result};
pub use fields::{torus_dist, wrap_torus, GridFn, TorusGrid};
pub use models::{ContactModel, SharedModel};
