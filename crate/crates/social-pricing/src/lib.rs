//! Library for solving a pricing game in which a seller profiles users who
//! derive value from each other's activity on a social platform.
//!
//! The market has `n` users with private valuations drawn from a known
//! distribution. Active users enjoy a network benefit that grows
//! logarithmically in the number of other active users. A seller observes a
//! fraction of users perfectly (profiling accuracy `delta`) and charges them
//! personalized prices, while everyone else faces a uniform price. The
//! library computes the threshold equilibrium of that game, the seller's
//! optimal uniform price, a price-commitment variant, heterogeneous-type and
//! arbitrary-graph extensions, and Monte Carlo simulations of all of the
//! above.
//!
//! Modules:
//! - [`dist`]: valuation distributions (uniform, truncated normal, truncated
//!   exponential, scaled Beta) with CDF/PDF/quantile/sampling, monopoly
//!   prices, shape probes, and maximum-likelihood fitting.
//! - [`social`]: the exact expected log network benefit and its derivatives.
//! - [`pbe`]: threshold equilibrium and optimal uniform pricing, benchmarks,
//!   regime classification, user payoffs.
//! - [`fourstage`]: the price-commitment variant and its comparison with the
//!   baseline game.
//! - [`hetero`]: heterogeneous sociability types and per-node equilibria on
//!   explicit graphs.
//! - [`sim`]: deterministic Monte Carlo market simulation.
//! - [`cli`]: the command-line front end.

// Negated comparisons like `!(x > 0.0)` are deliberate throughout: they
// route NaN to the error path, which `x <= 0.0` would not.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dist;
pub mod error;
pub mod fourstage;
pub mod hetero;
mod numeric;
pub mod pbe;
pub mod sim;
pub mod social;

pub use error::ModelError;
