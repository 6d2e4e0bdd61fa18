//! Per-step bidder for i.i.d. query arrivals under a fixed horizon: pace the
//! budget at ρ = B/T per step and keep long-term representation constraints
//! by projected dual subgradient updates on the per-step costs
//!
//! ```text
//! c_g(x) = x·ctr·(mu_g − g)      (representation, per group)
//! c_B(x) = x·ctr·cpc − ρ        (pacing)
//! ```
//!
//! [`decide`] selects a query when its Lagrangian coefficient is
//! nonnegative; with a positive budget dual this is exactly the threshold
//! test T_i ≥ cpc_i, evaluated through the same arithmetic as
//! [`crate::lp::thresholds`] so selection sets agree bit-for-bit. A hard
//! guard additionally forces 0 whenever a purchase would push expected spend
//! past the budget, so realized spend never exceeds B (stronger than pacing
//! alone).

use crate::lp::{self, MWConfig, threshold_for_query};
use crate::model::{GroupSpec, Instance, Query};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum OnlineError {
    #[error("horizon exhausted: t = {t} of {horizon}")]
    HorizonExhausted { t: usize, horizon: usize },
    #[error("horizon must be at least 1")]
    EmptyHorizon,
    #[error("eta must be positive, got {0}")]
    InvalidEta(f64),
    #[error(transparent)]
    Lp(#[from] lp::LpError),
    #[error(transparent)]
    Model(#[from] crate::model::ModelError),
}

/// Dual variables, pacing target, and accumulators for one trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OnlineState {
    pub lambda_budget: f64,
    pub lambda_group: Vec<f64>,
    /// Per-step budget target ρ = B/T.
    pub rho: f64,
    /// Dual step size.
    pub eta: f64,
    pub t: usize,
    pub horizon: usize,
    pub budget: f64,
    pub spend_so_far: f64,
    /// Running Σ c_B(x_t).
    pub budget_violation_sum: f64,
    /// Running Σ c_g(x_t) per group.
    pub group_violation_sum: Vec<f64>,
    mus: Vec<f64>,
}

impl OnlineState {
    /// Fresh state with zero duals; `eta = None` defaults to T^{-1/2}.
    pub fn new(budget: f64, horizon: usize, eta: Option<f64>, groups: &[GroupSpec]) -> Result<Self, OnlineError> {
        if horizon == 0 {
            return Err(OnlineError::EmptyHorizon);
        }
        let eta = eta.unwrap_or(1.0 / (horizon as f64).sqrt());
        if eta.is_nan() || eta <= 0.0 {
            return Err(OnlineError::InvalidEta(eta));
        }
        Ok(Self {
            lambda_budget: 0.0,
            lambda_group: vec![0.0; groups.len()],
            rho: budget / horizon as f64,
            eta,
            t: 0,
            horizon,
            budget,
            spend_so_far: 0.0,
            budget_violation_sum: 0.0,
            group_violation_sum: vec![0.0; groups.len()],
            mus: groups.iter().map(|g| g.mu).collect(),
        })
    }

    /// State with duals pinned to a given certificate (for threshold
    /// equivalence checks).
    pub fn with_duals(
        budget: f64,
        horizon: usize,
        groups: &[GroupSpec],
        alpha: f64,
        beta: &[f64],
    ) -> Result<Self, OnlineError> {
        let mut state = Self::new(budget, horizon, None, groups)?;
        state.lambda_budget = alpha;
        state.lambda_group = beta.to_vec();
        Ok(state)
    }
}

/// Selects x_t ∈ {0, 1} for the arriving query.
///
/// x_t = 1 iff ctr·v − λ_B·ctr·cpc − Σ_g λ_g·ctr·(mu_g − g) ≥ 0, except that
/// an exact tie only selects a query carrying positive expected value
/// (ctr·v > 0; a worthless query can only consume budget), and the hard
/// budget guard forces 0 when expected spend would exceed the budget.
pub fn decide(state: &OnlineState, query: &Query) -> Result<bool, OnlineError> {
    if state.t >= state.horizon {
        return Err(OnlineError::HorizonExhausted { t: state.t, horizon: state.horizon });
    }
    if state.spend_so_far + query.ctr * query.cpc > state.budget {
        return Ok(false);
    }
    let positive_value = query.ctr * query.value > 0.0;
    if state.lambda_budget > 0.0 {
        // same arithmetic as the threshold vector, so selection sets match exactly
        match threshold_for_query(query, state.lambda_budget, &state.lambda_group, &state.mus) {
            Some(t) => Ok(t > query.cpc || (t == query.cpc && positive_value)),
            None => Ok(positive_value), // ctr = 0: coefficient is exactly 0
        }
    } else {
        let mut coefficient = query.ctr * query.value;
        for (g, &lambda) in state.lambda_group.iter().enumerate() {
            coefficient -= lambda * query.ctr * (state.mus[g] - query.group_bit(g));
        }
        Ok(coefficient > 0.0 || (coefficient == 0.0 && positive_value))
    }
}

/// Projected dual ascent on the per-step costs; advances the step counter
/// and the spend/violation accumulators. Deterministic given its inputs.
pub fn update(state: &mut OnlineState, query: &Query, x_t: bool) {
    let x = if x_t { 1.0 } else { 0.0 };
    let step_spend = x * query.ctr * query.cpc;
    let c_budget = step_spend - state.rho;
    state.lambda_budget = (state.lambda_budget + state.eta * c_budget).max(0.0);
    state.budget_violation_sum += c_budget;
    for (g, lambda) in state.lambda_group.iter_mut().enumerate() {
        let c_g = x * query.ctr * (state.mus[g] - query.group_bit(g));
        *lambda = (*lambda + state.eta * c_g).max(0.0);
        state.group_violation_sum[g] += c_g;
    }
    state.spend_so_far += step_spend;
    state.t += 1;
}

/// Source of i.i.d. queries for [`run_horizon`].
pub trait QuerySource {
    fn groups(&self) -> &[GroupSpec];
    fn sample(&self, rng: &mut ChaCha8Rng) -> Query;
}

/// Uniform i.i.d. draws from a fixed population.
pub struct InstanceSampler<'a> {
    pub instance: &'a Instance,
}

impl QuerySource for InstanceSampler<'_> {
    fn groups(&self) -> &[GroupSpec] {
        &self.instance.groups
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> Query {
        self.instance.queries[rng.random_range(0..self.instance.len())].clone()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorizonParams {
    pub budget: f64,
    pub horizon: usize,
    /// None → T^{-1/2}.
    pub eta: Option<f64>,
    pub seed: u64,
    /// Keep per-step records (duals, costs) for CSV output.
    pub record_steps: bool,
    /// When set, solve the realized sequence offline at this δ and report
    /// regret against it.
    pub hindsight_delta: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepRecord {
    pub t: usize,
    pub x: bool,
    pub spend: f64,
    pub lambda_budget: f64,
    pub lambda_group: Vec<f64>,
    pub c_budget: f64,
    pub c_group: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryReport {
    pub horizon: usize,
    pub utility: f64,
    pub spend: f64,
    /// (1/T) Σ_t c_B(x_t).
    pub avg_budget_constraint: f64,
    /// (1/T) Σ_t c_g(x_t) per group.
    pub avg_group_constraint: Vec<f64>,
    /// Offline objective on the realized sequence (when requested).
    pub hindsight_objective: Option<f64>,
    pub regret: Option<f64>,
    pub steps: Vec<StepRecord>,
}

impl TrajectoryReport {
    /// Positive part of the average constraint values: budget first, then groups.
    pub fn violations(&self) -> Vec<f64> {
        std::iter::once(self.avg_budget_constraint)
            .chain(self.avg_group_constraint.iter().copied())
            .map(|v| v.max(0.0))
            .collect()
    }
}

/// Draws `horizon` i.i.d. queries, runs decide/update, and reports average
/// constraint values, utility, and (optionally) the hindsight offline
/// objective of the realized sequence.
pub fn run_horizon(source: &impl QuerySource, params: &HorizonParams) -> Result<TrajectoryReport, OnlineError> {
    let groups = source.groups().to_vec();
    let mut state = OnlineState::new(params.budget, params.horizon, params.eta, &groups)?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut utility = 0.0;
    let mut steps = Vec::new();
    let mut realized = Vec::with_capacity(if params.hindsight_delta.is_some() { params.horizon } else { 0 });

    for t in 0..params.horizon {
        let query = source.sample(&mut rng);
        let x = decide(&state, &query)?;
        if x {
            utility += query.ctr * query.value;
        }
        let before_budget = state.budget_violation_sum;
        let before_group = state.group_violation_sum.clone();
        update(&mut state, &query, x);
        debug_assert!(state.lambda_budget >= 0.0);
        debug_assert!(state.lambda_group.iter().all(|&l| l >= 0.0));
        if params.record_steps {
            steps.push(StepRecord {
                t,
                x,
                spend: state.spend_so_far,
                lambda_budget: state.lambda_budget,
                lambda_group: state.lambda_group.clone(),
                c_budget: state.budget_violation_sum - before_budget,
                c_group: state
                    .group_violation_sum
                    .iter()
                    .zip(&before_group)
                    .map(|(now, was)| now - was)
                    .collect(),
            });
        }
        if params.hindsight_delta.is_some() {
            realized.push(query);
        }
    }

    let t = params.horizon as f64;
    let (hindsight_objective, regret) = match params.hindsight_delta {
        Some(delta) => {
            let inst = Instance::new(realized, params.budget, groups.clone())?;
            let bounds = lp::derive_bounds(&inst);
            let config = MWConfig::for_delta(delta, groups.len())?;
            let sol = lp::solve_mw(&inst, &config, &bounds)?;
            (Some(sol.evaluation.objective), Some(sol.evaluation.objective - utility))
        }
        None => (None, None),
    };

    Ok(TrajectoryReport {
        horizon: params.horizon,
        utility,
        spend: state.spend_so_far,
        avg_budget_constraint: state.budget_violation_sum / t,
        avg_group_constraint: state.group_violation_sum.iter().map(|&v| v / t).collect(),
        hindsight_objective,
        regret,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GroupSpec;
    use crate::oracle;

    fn plain_query(value: f64, ctr: f64, cpc: f64) -> Query {
        Query::new("q", value, ctr, cpc, vec![])
    }

    #[test]
    fn decide_unconstrained_takes_valuable_queries() {
        let state = OnlineState::new(10.0, 5, None, &[]).unwrap();
        assert!(decide(&state, &plain_query(0.5, 0.8, 1.0)).unwrap());
    }

    #[test]
    fn decide_rejects_when_budget_dual_dominates() {
        let mut state = OnlineState::new(10.0, 5, None, &[]).unwrap();
        state.lambda_budget = 1.0;
        // threshold 0.5/1 = 0.5 < cpc 1.0
        assert!(!decide(&state, &plain_query(0.5, 1.0, 1.0)).unwrap());
    }

    #[test]
    fn decide_hard_guard_and_horizon() {
        let mut state = OnlineState::new(1.0, 2, None, &[]).unwrap();
        state.spend_so_far = 0.9;
        // 0.9 + 0.8·0.2 = 1.06 > 1
        assert!(!decide(&state, &plain_query(5.0, 0.8, 0.2)).unwrap());
        state.t = 2;
        assert!(matches!(
            decide(&state, &plain_query(1.0, 1.0, 0.1)),
            Err(OnlineError::HorizonExhausted { .. })
        ));
    }

    #[test]
    fn zero_value_queries_never_selected() {
        let state = OnlineState::new(10.0, 5, None, &[]).unwrap();
        assert!(!decide(&state, &plain_query(0.0, 0.9, 0.3)).unwrap());
    }

    #[test]
    fn update_examples() {
        // x = 0: c_B = −ρ, dual decreases floored at 0
        let groups = [GroupSpec::new("g", 0.5)];
        let mut state = OnlineState::new(10.0, 10, Some(0.1), &groups).unwrap();
        state.lambda_budget = 0.05;
        update(&mut state, &Query::new("q", 1.0, 1.0, 2.0, vec![false]), false);
        assert!((state.lambda_budget - 0.0f64.max(0.05 - 0.1 * 1.0)).abs() < 1e-12); // ρ = 1
        assert_eq!(state.t, 1);

        // x = 1, ctr 1, cpc 2, ρ 1, η 0.1: λ_B goes 0 → 0.1
        let mut state = OnlineState::new(10.0, 10, Some(0.1), &groups).unwrap();
        update(&mut state, &Query::new("q", 1.0, 1.0, 2.0, vec![false]), true);
        assert!((state.lambda_budget - 0.1).abs() < 1e-12);
        assert!((state.spend_so_far - 2.0).abs() < 1e-12);

        // in-group selection: c_g = mu − 1 = −0.5, group dual decreases (floored)
        let mut state = OnlineState::new(10.0, 10, Some(0.1), &groups).unwrap();
        state.lambda_group[0] = 0.03;
        update(&mut state, &Query::new("q", 1.0, 1.0, 0.5, vec![true]), true);
        assert!((state.lambda_group[0] - 0.0f64.max(0.03 + 0.1 * (-0.5))).abs() < 1e-12);
        assert_eq!(state.lambda_group[0], 0.0);
    }

    #[test]
    fn zero_value_distribution_stays_idle() {
        let queries: Vec<Query> =
            (0..20).map(|i| Query::new(format!("q{i}"), 0.0, 0.7, 0.3, vec![])).collect();
        let inst = Instance::new(queries, 2.0, vec![]).unwrap();
        let source = InstanceSampler { instance: &inst };
        let report = run_horizon(
            &source,
            &HorizonParams {
                budget: 2.0,
                horizon: 500,
                eta: None,
                seed: 9,
                record_steps: false,
                hindsight_delta: None,
            },
        )
        .unwrap();
        assert_eq!(report.utility, 0.0);
        assert_eq!(report.spend, 0.0);
        assert!(report.violations().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn spend_never_exceeds_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let queries: Vec<Query> = (0..50)
            .map(|i| {
                Query::new(
                    format!("q{i}"),
                    rng.random_range(0.1..1.5),
                    rng.random_range(0.2..1.0),
                    rng.random_range(0.1..0.8),
                    vec![],
                )
            })
            .collect();
        let inst = Instance::new(queries, 4.0, vec![]).unwrap();
        let source = InstanceSampler { instance: &inst };
        for seed in 0..20 {
            let report = run_horizon(
                &source,
                &HorizonParams {
                    budget: 4.0,
                    horizon: 300,
                    eta: None,
                    seed,
                    record_steps: false,
                    hindsight_delta: None,
                },
            )
            .unwrap();
            assert!(report.spend <= 4.0 + 1e-12, "seed {seed}: spend {}", report.spend);
        }
    }

    #[test]
    fn decide_matches_threshold_selection_with_oracle_duals() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let n = rng.random_range(3..30);
            let groups = vec![GroupSpec::new("g0", rng.random_range(0.05..0.4))];
            let queries: Vec<Query> = (0..n)
                .map(|i| {
                    Query::new(
                        format!("q{i}"),
                        rng.random_range(0.1..2.0),
                        rng.random_range(0.05..1.0),
                        rng.random_range(0.05..1.5),
                        vec![rng.random_bool(0.4)],
                    )
                })
                .collect();
            let total: f64 = queries.iter().map(|q| q.ctr * q.cpc).sum();
            let inst = Instance::new(queries, 0.35 * total, groups.clone()).unwrap();
            let sol = oracle::exact_lp(&inst).unwrap();
            if sol.duals.alpha <= 0.0 {
                continue;
            }
            let state =
                OnlineState::with_duals(total, inst.len(), &groups, sol.duals.alpha, &sol.duals.beta)
                    .unwrap();
            let thresholds = lp::thresholds(&inst, &sol.duals);
            for (q, t) in inst.queries.iter().zip(&thresholds.values) {
                let chosen = decide(&state, q).unwrap();
                let by_threshold = t.map(|t| t >= q.cpc).unwrap_or(false);
                assert_eq!(chosen, by_threshold, "query {} diverged", q.id);
            }
        }
    }
}
