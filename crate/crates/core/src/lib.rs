//! Euler-Maruyama integration of neutral stochastic differential delay
//! equations, driven either by Brownian motion or by a finite-activity
//! compensated Poisson random measure, plus a coupled-path Monte Carlo
//! harness that measures strong convergence orders.
//!
//! | Module | Contents |
//! |--------|----------|
//! | [`model`] | model class, initial segments, time grids, assumption probes |
//! | [`noise`] | reproducible Brownian increments and jump streams |
//! | [`em`] | discrete and continuous EM schemes, closed-form oracles |
//! | [`analysis`] | coupled strong errors, moments, order fits |
//! | [`registry`] | named example models |
//! | [`harness`] | config-driven experiment runner behind the CLI |

pub mod analysis;
pub mod em;
pub mod error;
pub mod harness;
pub mod model;
pub mod noise;
pub mod registry;

pub use error::{Error, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
