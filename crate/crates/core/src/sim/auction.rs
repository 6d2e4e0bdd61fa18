//! Auction execution: shuffled arrivals, win/price rules, budget depletion,
//! and click realization, averaged over seeded Monte-Carlo trials.

use super::{SimError, strategy::Strategy, strategy::StrategyKind};
use crate::model::{Instance, PriceModel};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// What the advertiser pays for. Impressions mean unit-ctr semantics: every
/// exposure counts as yield and is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayPer {
    Click,
    Impression,
}

/// What happens at the first arrival the remaining budget cannot cover:
/// stop the run (default; "until the budget runs out"), or skip that arrival
/// and keep going (exposed for sensitivity analysis).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRule {
    Stop,
    Skip,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuctionConfig {
    pub price: PriceModel,
    pub pay_per: PayPer,
    pub budget_rule: BudgetRule,
    pub trials: usize,
    pub seed: u64,
    /// First trial stream index; lets callers split one logical run into
    /// parallel chunks that reproduce the serial result exactly.
    pub stream_offset: u64,
}

impl AuctionConfig {
    pub fn new(price: PriceModel, pay_per: PayPer, trials: usize, seed: u64) -> Self {
        Self { price, pay_per, budget_rule: BudgetRule::Stop, trials, seed, stream_offset: 0 }
    }
}

/// Monte-Carlo averages of one strategy run. Per-group ratios are pooled
/// across trials on the paid yield (clicks under pay-per-click, exposures
/// under pay-per-impression).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationReport {
    pub trials: usize,
    pub utility: f64,
    pub utility_stderr: f64,
    pub spend: f64,
    pub exposures: f64,
    pub exposures_stderr: f64,
    pub clicks: f64,
    pub exposures_per_group: Vec<f64>,
    pub clicks_per_group: Vec<f64>,
    pub representation_ratio: Vec<f64>,
    pub min_exposures: f64,
    pub max_exposures: f64,
    pub min_spend: f64,
    pub max_spend: f64,
}

impl SimulationReport {
    /// Combines chunked runs of the same logical simulation (consecutive
    /// stream offsets) into the aggregate the serial run would report.
    pub fn merge(parts: &[SimulationReport], pay_per: PayPer) -> Option<SimulationReport> {
        if parts.is_empty() {
            return None;
        }
        let total: usize = parts.iter().map(|p| p.trials).sum();
        let n = total as f64;
        let weighted = |f: &dyn Fn(&SimulationReport) -> f64| -> f64 {
            parts.iter().map(|p| f(p) * p.trials as f64).sum::<f64>() / n
        };
        let utility = weighted(&|p| p.utility);
        let exposures = weighted(&|p| p.exposures);
        // pooled sample variance from per-chunk means and standard errors
        let pooled_stderr = |mean: f64, get: &dyn Fn(&SimulationReport) -> (f64, f64)| -> f64 {
            if total < 2 {
                return 0.0;
            }
            let mut sum_sq = 0.0;
            for p in parts {
                let (m, se) = get(p);
                let k = p.trials as f64;
                let var = se * se * k;
                sum_sq += (k - 1.0) * var + k * m * m;
            }
            let var = (sum_sq - n * mean * mean) / (n - 1.0);
            (var.max(0.0) / n).sqrt()
        };
        let n_groups = parts[0].exposures_per_group.len();
        let group_mean = |get: &dyn Fn(&SimulationReport, usize) -> f64| -> Vec<f64> {
            (0..n_groups).map(|g| weighted(&|p| get(p, g))).collect()
        };
        let exposures_per_group = group_mean(&|p, g| p.exposures_per_group[g]);
        let clicks_per_group = group_mean(&|p, g| p.clicks_per_group[g]);
        let clicks = weighted(&|p| p.clicks);
        let yield_total = match pay_per {
            PayPer::Click => clicks * n,
            PayPer::Impression => exposures * n,
        };
        let representation_ratio = (0..n_groups)
            .map(|g| {
                let group_yield = match pay_per {
                    PayPer::Click => clicks_per_group[g] * n,
                    PayPer::Impression => exposures_per_group[g] * n,
                };
                if yield_total > 0.0 { group_yield / yield_total } else { 0.0 }
            })
            .collect();
        Some(SimulationReport {
            trials: total,
            utility,
            utility_stderr: pooled_stderr(utility, &|p| (p.utility, p.utility_stderr)),
            spend: weighted(&|p| p.spend),
            exposures,
            exposures_stderr: pooled_stderr(exposures, &|p| (p.exposures, p.exposures_stderr)),
            clicks,
            exposures_per_group,
            clicks_per_group,
            representation_ratio,
            min_exposures: parts.iter().map(|p| p.min_exposures).fold(f64::INFINITY, f64::min),
            max_exposures: parts.iter().map(|p| p.max_exposures).fold(f64::NEG_INFINITY, f64::max),
            min_spend: parts.iter().map(|p| p.min_spend).fold(f64::INFINITY, f64::min),
            max_spend: parts.iter().map(|p| p.max_spend).fold(f64::NEG_INFINITY, f64::max),
        })
    }
}

fn mean_stderr(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, 0.0);
    }
    let var = samples.iter().map(|&s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Runs `trials` seeded auctions: arrivals are shuffled uniformly, a bid of
/// b wins iff b ≥ cpc (nonpositive bids abstain), the price is cpc under
/// second pricing and the bid under first pricing, and a purchase happens
/// only while the remaining budget covers the price.
pub fn run_auction(
    instance: &Instance,
    strategy: &Strategy,
    config: &AuctionConfig,
) -> Result<SimulationReport, SimError> {
    if config.trials == 0 {
        return Err(SimError::Parameter("trials must be at least 1".into()));
    }
    strategy.validate(instance)?;
    let n = instance.len();
    let n_groups = instance.n_groups();

    let mut utilities = Vec::with_capacity(config.trials);
    let mut spends = Vec::with_capacity(config.trials);
    let mut exposures = Vec::with_capacity(config.trials);
    let mut clicks_total = 0.0;
    let mut exp_group = vec![0.0; n_groups];
    let mut click_group = vec![0.0; n_groups];
    let mut clicks_pooled = 0.0;
    let mut exposures_pooled = 0.0;

    let mut bids: Vec<f64> = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();

    for trial in 0..config.trials {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(config.stream_offset + trial as u64);

        match &strategy.kind {
            StrategyKind::SingleBid(b) => bids.fill(*b),
            StrategyKind::PerQueryBids(v) => bids.copy_from_slice(v),
            StrategyKind::RandomizedAllocation(x) => {
                for (i, (&p, q)) in x.iter().zip(&instance.queries).enumerate() {
                    bids[i] = if rng.random_bool(p.clamp(0.0, 1.0)) { q.cpc } else { 0.0 };
                }
            }
        }
        for (i, slot) in order.iter_mut().enumerate() {
            *slot = i;
        }
        order.shuffle(&mut rng);

        let mut remaining = instance.budget;
        let mut trial_utility = 0.0;
        let mut trial_exposures = 0.0;
        let mut trial_clicks = 0.0;

        for &i in &order {
            let q = &instance.queries[i];
            let bid = bids[i];
            if bid <= 0.0 || bid < q.cpc {
                continue;
            }
            let price = match config.price {
                PriceModel::Second => q.cpc,
                PriceModel::First => bid,
            };
            if remaining < price {
                match config.budget_rule {
                    BudgetRule::Stop => break,
                    BudgetRule::Skip => continue,
                }
            }
            trial_exposures += 1.0;
            for (g, count) in exp_group.iter_mut().enumerate() {
                *count += q.group_bit(g);
            }
            let clicked = match config.pay_per {
                PayPer::Impression => true,
                PayPer::Click => rng.random_bool(q.ctr.clamp(0.0, 1.0)),
            };
            if clicked {
                remaining -= price;
                trial_clicks += 1.0;
                trial_utility += q.value;
                for (g, count) in click_group.iter_mut().enumerate() {
                    *count += q.group_bit(g);
                }
            }
        }

        utilities.push(trial_utility);
        spends.push(instance.budget - remaining);
        exposures.push(trial_exposures);
        clicks_total += trial_clicks;
        clicks_pooled += trial_clicks;
        exposures_pooled += trial_exposures;
    }

    let trials = config.trials as f64;
    let (utility, utility_stderr) = mean_stderr(&utilities);
    let (spend_mean, _) = mean_stderr(&spends);
    let (exposures_mean, exposures_stderr) = mean_stderr(&exposures);
    let yield_pooled = match config.pay_per {
        PayPer::Click => clicks_pooled,
        PayPer::Impression => exposures_pooled,
    };
    let representation_ratio = (0..n_groups)
        .map(|g| {
            let group_yield = match config.pay_per {
                PayPer::Click => click_group[g],
                PayPer::Impression => exp_group[g],
            };
            if yield_pooled > 0.0 { group_yield / yield_pooled } else { 0.0 }
        })
        .collect();

    Ok(SimulationReport {
        trials: config.trials,
        utility,
        utility_stderr,
        spend: spend_mean,
        exposures: exposures_mean,
        exposures_stderr,
        clicks: clicks_total / trials,
        exposures_per_group: exp_group.iter().map(|&c| c / trials).collect(),
        clicks_per_group: click_group.iter().map(|&c| c / trials).collect(),
        representation_ratio,
        min_exposures: exposures.iter().copied().fold(f64::INFINITY, f64::min),
        max_exposures: exposures.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        min_spend: spends.iter().copied().fold(f64::INFINITY, f64::min),
        max_spend: spends.iter().copied().fold(f64::NEG_INFINITY, f64::max),
    })
}
