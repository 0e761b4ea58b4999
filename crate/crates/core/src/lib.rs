//! Revenue-optimal gradual procurement of services with stochastic delivery
//! times.
//!
//! A consumer needs a task done before a deadline and can recruit providers
//! whose delivery times are random and whose costs are private. Providers
//! are recruited gradually: each one is invoked at a planned time only if
//! the task is still unfinished. The crate evaluates such plans, searches for
//! the revenue-maximizing plan given bids, computes incentive-compatible
//! payments, and runs the benchmark experiments.

pub mod allocation;
pub mod error;
pub mod eval;
pub mod mechanism;
pub mod model;
pub mod payments;
pub mod search;
pub mod sim;
pub mod time_opt;

pub use error::{Error, Result};
