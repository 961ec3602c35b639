//! Numerical laboratory for the attraction-repulsion chemotaxis system
//!
//! ```text
//! u_t = lap u - chi div(u grad v) + xi div(u grad w)
//! v_t = lap v - beta v + f(u)
//! w_t = lap w - delta w + g(u)
//! ```
//!
//! with homogeneous Neumann conditions on a rectangle. The crate simulates
//! the system, evaluates the constants of the known boundedness criteria and
//! checks the inequalities behind them numerically.

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod criteria;
pub mod error;
pub mod grid;
pub mod model;
pub mod oracles;
pub mod sweep;
pub mod timestep;

pub use error::{Error, Result};
pub use grid::{Grid, ScalarField};
pub use model::{Model, ModelParams, ProductionLaw};

/// Crate version echoed into output headers.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
