//! Approximate solver for the relaxed ad-allocation LP.
//!
//! The program being solved, over x ∈ \[0,1\]^n:
//!
//! ```text
//! maximize   Σ x_i ctr_i v_i
//! subject to Σ x_i ctr_i cpc_i ≤ B
//!            Σ x_i ctr_i (mu_g − g_i) ≤ 0    for every group g
//! ```
//!
//! [`solve_mw`] runs a multiplicative-weights search: an outer scan over
//! candidate objective values V, and for each candidate an inner weights loop
//! whose one-dimensional subproblems have a closed-form threshold solution
//! ([`solve_one_dim`]). For bounds (V_obj, V_B, V_g) from [`derive_bounds`]
//! and approximation parameter δ, the returned allocation satisfies
//!
//! ```text
//! objective ≥ OPT − δ·V_obj,   spend ≤ B + δ·V_B,   slack_g ≤ δ·V_g.
//! ```
//!
//! The dual side: [`thresholds`] turns a dual certificate (α, β) into
//! per-query bid cutoffs T_i = (v_i − Σ_g β_g (mu_g − g_i)) / α, and
//! [`thresholds_to_bids`] maps cutoffs to first- or second-price bids.

use crate::model::{
    ConstraintEvaluation, DEFAULT_TOLERANCE, FractionalAllocation, Instance, IntegerAllocation, PriceModel, Query,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("alpha must be positive, got {0}")]
    InvalidDual(f64),
    #[error("beta has length {got}, instance has {expected} groups")]
    DualDimension { expected: usize, got: usize },
    #[error("delta {0} outside (0, 1)")]
    InvalidDelta(f64),
    #[error("config invalid: {0}")]
    InvalidConfig(String),
    #[error("bound for {0} must be positive when the constraint is active")]
    DegenerateBound(String),
}

/// Upper bounds on the objective value and on each constraint's violation,
/// used to normalize the weights-loop rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverBounds {
    /// Bound on the objective: Σ ctr_i v_i.
    pub v_obj: f64,
    /// Bound on budget-constraint violation: Σ ctr_i cpc_i.
    pub v_budget: f64,
    /// Per-group bound on representation violation: Σ ctr_i max(mu_g, 1 − mu_g).
    pub v_group: Vec<f64>,
    /// True when the instance admits no positive objective at all.
    pub degenerate: bool,
    /// True when the bounds dominate every row value over \[0,1\]^n, so the
    /// normalized width stays within ±2. Callers substituting tighter
    /// (e.g. budget-aware) group bounds clear this; the step clipping then
    /// carries the numerical safety alone.
    pub width_checked: bool,
}

pub fn derive_bounds(instance: &Instance) -> SolverBounds {
    let mut v_obj = 0.0;
    let mut v_budget = 0.0;
    let mut v_group = vec![0.0; instance.n_groups()];
    for q in &instance.queries {
        v_obj += q.ctr * q.value;
        v_budget += q.ctr * q.cpc;
        for (g, bound) in v_group.iter_mut().enumerate() {
            let mu = instance.groups[g].mu;
            *bound += q.ctr * mu.max(1.0 - mu);
        }
    }
    SolverBounds { v_obj, v_budget, v_group, degenerate: v_obj == 0.0, width_checked: true }
}

/// Dual variables of the relaxed program: budget dual α, group duals β_g,
/// and box duals δ_i for the x_i ≤ 1 rows.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DualCertificate {
    pub alpha: f64,
    pub beta: Vec<f64>,
    pub delta: Vec<f64>,
}

/// Per-query bid cutoffs; `None` where undefined (α = 0, or ctr = 0 where the
/// threshold theorem says nothing).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdVector {
    pub values: Vec<Option<f64>>,
}

impl ThresholdVector {
    pub fn defined_count(&self) -> usize {
        self.values.iter().filter(|t| t.is_some()).count()
    }
}

/// Cutoff for one query given duals (α, β): (v − Σ_g β_g (mu_g − g)) / α.
///
/// This is the single source of truth for the threshold arithmetic; the
/// online bidder evaluates the same expression so selection sets agree
/// bit-for-bit.
pub fn threshold_for_query(query: &Query, alpha: f64, beta: &[f64], mus: &[f64]) -> Option<f64> {
    if alpha <= 0.0 || query.ctr == 0.0 {
        return None;
    }
    let mut adjusted = query.value;
    for (g, &b) in beta.iter().enumerate() {
        adjusted -= b * (mus[g] - query.group_bit(g));
    }
    Some(adjusted / alpha)
}

pub fn thresholds(instance: &Instance, duals: &DualCertificate) -> ThresholdVector {
    let mus: Vec<f64> = instance.groups.iter().map(|g| g.mu).collect();
    let values = instance
        .queries
        .iter()
        .map(|q| threshold_for_query(q, duals.alpha, &duals.beta, &mus))
        .collect();
    ThresholdVector { values }
}

/// Per-query bids derived from thresholds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BidPlan {
    pub bids: Vec<f64>,
    /// Queries whose threshold was undefined and therefore bid 0.
    pub undefined: usize,
}

/// Second price: bid the cutoff itself (a negative cutoff clamps to 0, which
/// loses the same auctions). First price: bid cpc when the cutoff clears it,
/// else stay out.
pub fn thresholds_to_bids(thresholds: &ThresholdVector, instance: &Instance, price: PriceModel) -> BidPlan {
    let mut undefined = 0;
    let bids = thresholds
        .values
        .iter()
        .zip(&instance.queries)
        .map(|(t, q)| match (t, price) {
            (Some(t), PriceModel::Second) => t.max(0.0),
            (Some(t), PriceModel::First) => {
                if *t > q.cpc {
                    q.cpc
                } else {
                    0.0
                }
            }
            (None, _) => {
                undefined += 1;
                0.0
            }
        })
        .collect();
    BidPlan { bids, undefined }
}

/// Optimal solution of the one-dimensional weighted subproblem: select query l
/// iff b(l) ≥ cpc_l with b(l) = (v_l − Σ_g β_g (mu_g − g_l)) / α. Ties select.
pub fn solve_one_dim(instance: &Instance, alpha: f64, beta: &[f64]) -> Result<IntegerAllocation, LpError> {
    if alpha <= 0.0 {
        return Err(LpError::InvalidDual(alpha));
    }
    if beta.len() != instance.n_groups() {
        return Err(LpError::DualDimension { expected: instance.n_groups(), got: beta.len() });
    }
    let mus: Vec<f64> = instance.groups.iter().map(|g| g.mu).collect();
    let bits = instance
        .queries
        .iter()
        .map(|q| {
            let mut adjusted = q.value;
            for (g, &b) in beta.iter().enumerate() {
                adjusted -= b * (mus[g] - q.group_bit(g));
            }
            adjusted / alpha >= q.cpc
        })
        .collect();
    Ok(IntegerAllocation::new(bits))
}

/// Iteration counts and step size for the weights loop.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MWConfig {
    /// Approximation parameter δ in (0, 1).
    pub delta: f64,
    /// Number of candidate objective values scanned (grid V_obj/outer_iters).
    pub outer_iters: usize,
    /// Weights-loop iterations per candidate.
    pub inner_iters: usize,
    /// Multiplicative step ε in (0, 1/2).
    pub mw_step: f64,
}

impl MWConfig {
    /// Defaults meeting the δ-guarantee: a candidate grid of spacing
    /// V_obj·δ/2 and a weights loop whose averaging error stays below 3δ/8
    /// (row values after normalization lie in [−1, 1]), so grid plus loop
    /// error stay under δ.
    pub fn for_delta(delta: f64, n_groups: usize) -> Result<Self, LpError> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(LpError::InvalidDelta(delta));
        }
        let outer_iters = (2.0 / delta).ceil() as usize;
        let inner_iters = (32.0 * ((n_groups + 2) as f64).ln() / (delta * delta)).ceil() as usize;
        let config = Self { delta, outer_iters, inner_iters, mw_step: delta / 4.0 };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), LpError> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(LpError::InvalidDelta(self.delta));
        }
        if (self.outer_iters as f64) < (1.0 / self.delta).ceil() {
            return Err(LpError::InvalidConfig(format!(
                "outer_iters {} below ceil(1/delta) = {}",
                self.outer_iters,
                (1.0 / self.delta).ceil()
            )));
        }
        if self.inner_iters == 0 {
            return Err(LpError::InvalidConfig("inner_iters must be at least 1".into()));
        }
        if !(self.mw_step > 0.0 && self.mw_step < 0.5) {
            return Err(LpError::InvalidConfig(format!("mw_step {} outside (0, 1/2)", self.mw_step)));
        }
        Ok(())
    }
}

/// Result of a [`solve_mw`] run.
#[derive(Debug, Clone)]
pub struct MwSolution {
    pub allocation: FractionalAllocation,
    /// Largest candidate objective value whose weights loop never failed
    /// (0 when every candidate failed and the zeros allocation is returned).
    pub achieved_v: f64,
    pub evaluation: ConstraintEvaluation,
    /// Duals recovered from the final weights of the kept candidate;
    /// unavailable when the objective weight vanished or no candidate passed.
    pub duals: Option<DualCertificate>,
    /// Total inner iterations executed across all candidates.
    pub iterations: usize,
    pub degenerate: bool,
}

/// Machine-readable solver report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolverReport {
    pub objective: f64,
    pub spend: f64,
    pub group_slack: BTreeMap<String, f64>,
    pub delta: f64,
    #[serde(rename = "achieved_V")]
    pub achieved_v: f64,
    pub iterations: usize,
}

impl MwSolution {
    pub fn report(&self, instance: &Instance, delta: f64) -> SolverReport {
        let group_slack = instance
            .groups
            .iter()
            .zip(&self.evaluation.group_slack)
            .map(|(g, &s)| (g.name.clone(), s))
            .collect();
        SolverReport {
            objective: self.evaluation.objective,
            spend: self.evaluation.spend,
            group_slack,
            delta,
            achieved_v: self.achieved_v,
            iterations: self.iterations,
        }
    }
}

// Normalized constraint rows of the "is there x with Ax ≥ u?" system. Row
// values over x ∈ [0,1]^n stay within [−1, 1] of their targets, which is the
// width the weights-loop analysis needs (the budget target is clamped to
// min(B, V_budget); a budget beyond total spend never binds).
struct RowSystem {
    /// (normalized selection coefficient, normalized row increment) per query per row.
    n_rows: usize,
    budget_row: Option<usize>,
    group_rows: Vec<Option<usize>>,
    /// u_j per row; the objective row's target is set per candidate.
    targets: Vec<f64>,
    /// row-major: for each row, per-query increment A_{j,l}.
    coefficients: Vec<Vec<f64>>,
}

fn build_rows(instance: &Instance, bounds: &SolverBounds) -> Result<RowSystem, LpError> {
    let n = instance.len();
    if bounds.v_obj <= 0.0 {
        return Err(LpError::DegenerateBound("objective".into()));
    }
    let mut coefficients = vec![Vec::with_capacity(n)];
    let mut targets = vec![0.0]; // objective target filled per candidate
    for q in &instance.queries {
        coefficients[0].push(q.ctr * q.value / bounds.v_obj);
    }
    let mut budget_row = None;
    if bounds.v_budget > 0.0 {
        budget_row = Some(coefficients.len());
        coefficients.push(instance.queries.iter().map(|q| -q.ctr * q.cpc / bounds.v_budget).collect());
        targets.push(-instance.budget.min(bounds.v_budget) / bounds.v_budget);
    }
    let mut group_rows = vec![None; instance.n_groups()];
    for (g, row) in group_rows.iter_mut().enumerate() {
        let v_g = bounds.v_group[g];
        if v_g > 0.0 {
            *row = Some(coefficients.len());
            let mu = instance.groups[g].mu;
            coefficients
                .push(instance.queries.iter().map(|q| q.ctr * (q.group_bit(g) - mu) / v_g).collect());
            targets.push(0.0);
        }
    }
    Ok(RowSystem { n_rows: coefficients.len(), budget_row, group_rows, targets, coefficients })
}

/// Approximately solves the relaxed program. Scans candidate objective values
/// ascending and keeps the averaged allocation of the largest candidate whose
/// weights loop never failed; returns the zeros allocation when every
/// candidate fails (always feasible).
pub fn solve_mw(instance: &Instance, config: &MWConfig, bounds: &SolverBounds) -> Result<MwSolution, LpError> {
    config.validate()?;
    let n = instance.len();
    if bounds.degenerate || bounds.v_obj <= 0.0 {
        let allocation = FractionalAllocation::zeros(n);
        let evaluation = instance.evaluate(allocation.values(), DEFAULT_TOLERANCE).expect("zeros evaluates");
        return Ok(MwSolution {
            allocation,
            achieved_v: 0.0,
            evaluation,
            duals: None,
            iterations: 0,
            degenerate: true,
        });
    }
    if bounds.v_group.len() != instance.n_groups() {
        return Err(LpError::DualDimension { expected: instance.n_groups(), got: bounds.v_group.len() });
    }

    let rows = build_rows(instance, bounds)?;
    let eps = config.mw_step;
    let ln_down = (1.0 - eps).ln();
    let ln_up = (1.0 + eps).ln();

    let mut iterations = 0usize;
    let mut best: Option<(Vec<f64>, f64, Vec<f64>)> = None; // (x_avg, candidate value, final weights)

    let mut weights = vec![0.0f64; rows.n_rows];
    let mut row_values = vec![0.0f64; rows.n_rows];
    let mut x_sum = vec![0.0f64; n];
    let mut targets = rows.targets.clone();

    for candidate in 1..=config.outer_iters {
        let v_frac = candidate as f64 / config.outer_iters as f64;
        targets[0] = v_frac;

        weights.fill(1.0 / rows.n_rows as f64);
        x_sum.fill(0.0);
        let mut failed = false;

        for _ in 0..config.inner_iters {
            iterations += 1;
            row_values.fill(0.0);
            // one-dimensional subproblem: include query l iff its weighted
            // column is nonnegative (the threshold rule in weight space)
            for (l, x_acc) in x_sum.iter_mut().enumerate() {
                let mut score = 0.0;
                for (w, coeffs) in weights.iter().zip(&rows.coefficients) {
                    score += w * coeffs[l];
                }
                if score >= 0.0 {
                    for (value, coeffs) in row_values.iter_mut().zip(&rows.coefficients) {
                        *value += coeffs[l];
                    }
                    *x_acc += 1.0;
                }
            }
            let mut oracle_value = 0.0;
            for ((w, value), target) in weights.iter().zip(&row_values).zip(&targets) {
                oracle_value += w * (value - target);
            }
            if oracle_value < -1e-12 {
                failed = true;
                break;
            }
            let mut total = 0.0;
            for ((w, value), target) in weights.iter_mut().zip(&row_values).zip(&targets) {
                let slack = value - target;
                debug_assert!(
                    !bounds.width_checked || slack.abs() <= 2.0 + 1e-9,
                    "row width bound violated: {slack}"
                );
                let e = slack.clamp(-2.0, 2.0);
                *w *= if e >= 0.0 { (e * ln_down).exp() } else { (-e * ln_up).exp() };
                total += *w;
            }
            for w in &mut weights {
                *w /= total;
            }
        }

        if !failed {
            let x_avg: Vec<f64> =
                x_sum.iter().map(|&s| (s / config.inner_iters as f64).clamp(0.0, 1.0)).collect();
            best = Some((x_avg, v_frac * bounds.v_obj, weights.clone()));
        }
    }

    let (x, achieved_v, final_weights) = match best {
        Some((x, v, w)) => (x, v, Some(w)),
        None => (vec![0.0; n], 0.0, None),
    };
    let duals = final_weights.and_then(|w| extract_duals(instance, bounds, &rows, &w));
    let allocation = FractionalAllocation::new(x).expect("averaged iterates stay in [0,1]");
    let evaluation = instance.evaluate(allocation.values(), DEFAULT_TOLERANCE).expect("lengths match");
    Ok(MwSolution { allocation, achieved_v, evaluation, duals, iterations, degenerate: false })
}

// α and β_g from the final weights via the substitution that makes the
// threshold rule b(l) ≥ cpc_l coincide with the weighted column sign test:
// α = w_B·V_obj/(V_B·w_1), β_g = V_obj·w_g/(w_1·V_g). Box duals are completed
// minimally so the certificate is dual-feasible.
fn extract_duals(
    instance: &Instance,
    bounds: &SolverBounds,
    rows: &RowSystem,
    weights: &[f64],
) -> Option<DualCertificate> {
    let w_obj = weights[0];
    let budget_row = rows.budget_row?;
    if w_obj <= 1e-300 {
        return None;
    }
    let alpha = weights[budget_row] * bounds.v_obj / (bounds.v_budget * w_obj);
    let beta: Vec<f64> = rows
        .group_rows
        .iter()
        .enumerate()
        .map(|(g, row)| match row {
            Some(j) => bounds.v_obj * weights[*j] / (w_obj * bounds.v_group[g]),
            None => 0.0,
        })
        .collect();
    let delta = instance
        .queries
        .iter()
        .map(|q| {
            let mut reduced = q.ctr * q.value - alpha * q.ctr * q.cpc;
            for (g, &b) in beta.iter().enumerate() {
                reduced -= b * q.ctr * (instance.groups[g].mu - q.group_bit(g));
            }
            reduced.max(0.0)
        })
        .collect();
    Some(DualCertificate { alpha, beta, delta })
}
