//! Auction simulation: budget-depleting auction runs with click realization,
//! the strategy library (single-bid parity, bid-and-outcome parity, average-
//! bid parity, approximate parity, autobidder), synthetic populations, and
//! built-in scenarios.

mod auction;
mod scenario;
mod strategy;
mod synth;

pub use auction::{AuctionConfig, BudgetRule, PayPer, SimulationReport, run_auction};
pub use scenario::{
    ScenarioSpec, appendix_a1_instance, example_3_1_instance, example_3_1_parity_bids, scenario_instance,
};
pub use strategy::{
    AutobidderConfig, AutobidderResult, BidParityResult, CdfIntersectionResult, CompareConfig,
    ComparisonRow, Strategy, StrategyKind, StrategySpec, approximate_parity_strategy,
    autobidder_strategy, average_bid_parity_strategy, average_bid_parity_with_fraction,
    bid_outcome_parity_strategy, bid_parity_strategy, build_strategy, compare_strategies,
    comparison_to_csv,
};
pub use synth::{OccupationSpec, SyntheticConfig, gen_synthetic_population};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("sample population is empty")]
    EmptySample,
    #[error("group {0} has no members in the sample")]
    EmptyGroup(String),
    #[error("bid {0} is negative")]
    NegativeBid(f64),
    #[error("{0}")]
    Parameter(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Lp(#[from] crate::lp::LpError),
    #[error(transparent)]
    Rounding(#[from] crate::rounding::RoundingError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}
