// Index loops mirror the tensor notation; `!(x < tol)` is used on purpose
// so NaN residuals fail.
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::redundant_guards,
    clippy::should_implement_trait,
    clippy::type_complexity
)]

pub mod algebroid;
pub mod cli;
pub mod config;
pub mod connection;
pub mod dconn;
pub mod error;
pub mod expr;
pub mod geo;
pub mod mech;
pub mod report;
pub mod sampling;
#[cfg(test)]
mod testdata;
pub mod weyl;

pub use error::{Error, Result};
pub use expr::{Expr, FiberPoint, Var};
