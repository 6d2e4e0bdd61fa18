//! Constrained autobidding engine.
//!
//! Computes approximately optimal bidding strategies under a spend budget and
//! group-representation constraints, rounds fractional allocations to
//! integral bid decisions with provable guarantees, and simulates first- and
//! second-price auctions to compare fairness strategies.
//!
//! Modules:
//!
//! * [`model`] — domain types and allocation evaluation
//! * [`io`] — population CSV and instance config files
//! * [`lp`] — multiplicative-weights LP solver, thresholds, bid generation
//! * [`oracle`] — exact small-instance solvers and certificate checks
//! * [`rounding`] — randomized and deterministic rounding of fractional plans
//! * [`online`] — per-step Lagrangian bidder for i.i.d. query arrivals
//! * [`sim`] — auction execution, strategy library, synthetic populations

pub mod io;
pub mod lp;
pub mod model;
pub mod online;
pub mod oracle;
pub mod rounding;
pub mod sim;

mod simplex;

pub use model::{FractionalAllocation, GroupSpec, Instance, IntegerAllocation, PriceModel, Query};
