//! Converts fractional allocations into integral bid decisions.
//!
//! Two routes:
//!
//! * **Randomized** ([`randomized_round`]): scale the allocation down
//!   (`(1−ε)x` on unconstrained queries, `(1−ε/2)x` elsewhere) and draw each
//!   bit independently. Works when the instance is flexible enough — a
//!   decent share of the click mass sits on queries outside every
//!   constrained group ([`flexibility`] measures this γ) — and then budget
//!   and representation inequalities hold with high probability while the
//!   expected utility loses only an ε factor.
//!
//! * **Deterministic** ([`deterministic_round`]): for pay-per-impression
//!   instances (ctr ≡ 1) with disjoint groups (or few enough intersecting
//!   ones), round each group down separately after
//!   [`repair_round_condition`] puts fractional entries into the
//!   value/price order the per-group pass needs. The output spends no more
//!   than the fractional plan, loses at most one query per group on
//!   representation, and at most the top value per group on the objective.

use crate::model::{FractionalAllocation, Instance, IntegerAllocation, ModelError};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Entries within this distance of 0 or 1 count as integral.
const INTEGRAL_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum RoundingError {
    #[error("epsilon {0} outside (0, 1)")]
    EpsilonOutOfRange(f64),
    #[error("groups intersect; per-group repair requires disjoint groups")]
    IntersectingGroups,
    #[error("{0} intersecting groups make 2^|G| cells > 64; use randomized rounding")]
    TooManyIntersectingGroups(usize),
    #[error("query {index} has ctr {ctr}; deterministic rounding requires ctr = 1 everywhere")]
    CtrNotOne { index: usize, ctr: f64 },
    #[error("query {index} has x = {x}, not strictly fractional")]
    NotFractional { index: usize, x: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// How much slack an instance/solution pair leaves for randomized rounding.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FlexibilityReport {
    /// Queries free of every binding representation constraint (members of
    /// mu = 0 groups included: those constraints are vacuous).
    pub s_zero: Vec<usize>,
    /// min(condition_a, condition_b); 0 when the solution has no click mass.
    pub gamma: f64,
    /// Share of click mass on unconstrained queries: Σ_{S0} x ctr / Σ x ctr.
    pub condition_a: f64,
    /// Average per-query spend mass: Σ x cpc ctr / n.
    pub condition_b: f64,
}

pub fn flexibility(instance: &Instance, x: &FractionalAllocation) -> FlexibilityReport {
    let binding: Vec<bool> = instance.groups.iter().map(|g| g.mu > 0.0).collect();
    let s_zero: Vec<usize> = instance
        .queries
        .iter()
        .enumerate()
        .filter(|(_, q)| !q.groups.iter().zip(&binding) .any(|(&bit, &live)| bit && live))
        .map(|(i, _)| i)
        .collect();
    let mut click_mass = 0.0;
    let mut s_zero_mass = 0.0;
    let mut spend_mass = 0.0;
    let mut in_s_zero = vec![false; instance.len()];
    for &i in &s_zero {
        in_s_zero[i] = true;
    }
    for (i, (q, &xi)) in instance.queries.iter().zip(x.values()).enumerate() {
        let m = xi * q.ctr;
        click_mass += m;
        spend_mass += m * q.cpc;
        if in_s_zero[i] {
            s_zero_mass += m;
        }
    }
    let condition_a = if click_mass > 0.0 { s_zero_mass / click_mass } else { 0.0 };
    let condition_b = if instance.is_empty() { 0.0 } else { spend_mass / instance.len() as f64 };
    let gamma = if click_mass > 0.0 { condition_a.min(condition_b) } else { 0.0 };
    FlexibilityReport { s_zero, gamma, condition_a, condition_b }
}

/// The scaled allocation x' the randomized round draws from:
/// (1 − ε)·x on S_0, (1 − ε/2)·x elsewhere.
pub fn scale_allocation(
    x: &FractionalAllocation,
    s_zero: &[usize],
    epsilon: f64,
) -> Result<FractionalAllocation, RoundingError> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(RoundingError::EpsilonOutOfRange(epsilon));
    }
    let mut in_s_zero = vec![false; x.len()];
    for &i in s_zero {
        if i < x.len() {
            in_s_zero[i] = true;
        }
    }
    let scaled = x
        .values()
        .iter()
        .zip(&in_s_zero)
        .map(|(&xi, &zero)| if zero { (1.0 - epsilon) * xi } else { (1.0 - epsilon / 2.0) * xi })
        .collect();
    Ok(FractionalAllocation::new(scaled).expect("scaling keeps [0,1]"))
}

#[derive(Debug, Clone)]
pub struct RandomizedRound {
    pub y: IntegerAllocation,
    /// The scaled allocation actually sampled from.
    pub scaled: FractionalAllocation,
    /// Soft precondition findings (representation mass off by more than 2×).
    pub warnings: Vec<String>,
}

/// Draws y_i ~ Bernoulli(x'_i) independently from a ChaCha8 stream seeded
/// with `seed`, so trials reproduce bit-for-bit across platforms.
pub fn randomized_round(
    instance: &Instance,
    x: &FractionalAllocation,
    s_zero: &[usize],
    epsilon: f64,
    seed: u64,
) -> Result<RandomizedRound, RoundingError> {
    if x.len() != instance.len() {
        return Err(ModelError::DimensionMismatch { expected: instance.len(), got: x.len() }.into());
    }
    let scaled = scale_allocation(x, s_zero, epsilon)?;

    // soft check: in-group click mass at least half its target share
    let mut warnings = Vec::new();
    let click_mass: f64 = instance.queries.iter().zip(x.values()).map(|(q, &xi)| xi * q.ctr).sum();
    for (g, spec) in instance.groups.iter().enumerate() {
        let group_mass: f64 = instance
            .queries
            .iter()
            .zip(x.values())
            .filter(|(q, _)| q.group_bit(g) == 1.0)
            .map(|(q, &xi)| xi * q.ctr)
            .sum();
        if group_mass < 0.5 * spec.mu * click_mass {
            warnings.push(format!(
                "group {}: click mass {group_mass:.4} below half of target {:.4}; high-probability bounds may not apply",
                spec.name,
                spec.mu * click_mass
            ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bits = scaled.values().iter().map(|&p| rng.random_bool(p.clamp(0.0, 1.0))).collect();
    Ok(RandomizedRound { y: IntegerAllocation::new(bits), scaled, warnings })
}

/// Click-realized outcome of an integral plan: draws r_i ~ Bernoulli(ctr_i)
/// for the selected queries and accumulates realized spend, utility, and
/// per-group slack (over clicks).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RealizedOutcome {
    pub spend: f64,
    pub utility: f64,
    pub group_slack: Vec<f64>,
    pub clicks: usize,
}

pub fn realize_clicks(instance: &Instance, y: &IntegerAllocation, seed: u64) -> RealizedOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcome =
        RealizedOutcome { spend: 0.0, utility: 0.0, group_slack: vec![0.0; instance.n_groups()], clicks: 0 };
    for (q, &b) in instance.queries.iter().zip(y.bits()) {
        if !b || !rng.random_bool(q.ctr.clamp(0.0, 1.0)) {
            continue;
        }
        outcome.spend += q.cpc;
        outcome.utility += q.value;
        outcome.clicks += 1;
        for (g, s) in outcome.group_slack.iter_mut().enumerate() {
            *s += instance.groups[g].mu - q.group_bit(g);
        }
    }
    outcome
}

fn is_fractional(x: f64) -> bool {
    x > INTEGRAL_TOL && x < 1.0 - INTEGRAL_TOL
}

// Moves mass from dominated fractional entries into dominating ones
// (higher value at lower-or-equal price) until, within the index set, value
// order implies strict price order among fractional entries. Single sweep in
// value-descending order with a price min-heap; each transfer makes one
// endpoint integral.
fn repair_cell(xs: &mut [f64], cell: &[usize], instance: &Instance) {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let mut order: Vec<usize> = cell.iter().copied().filter(|&i| is_fractional(xs[i])).collect();
    order.sort_by(|&a, &b| {
        let qa = &instance.queries[a];
        let qb = &instance.queries[b];
        qb.value
            .partial_cmp(&qa.value)
            .unwrap()
            .then(qa.cpc.partial_cmp(&qb.cpc).unwrap())
            .then(qa.id.cmp(&qb.id))
    });

    // min-heap keyed by cpc over fractional entries with strictly higher value
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    let key = |i: usize| (instance.queries[i].cpc.to_bits(), i); // cpc ≥ 0: bit order = numeric order
    let mut block_start = 0;
    while block_start < order.len() {
        let v = instance.queries[order[block_start]].value;
        let mut block_end = block_start;
        while block_end < order.len() && instance.queries[order[block_end]].value == v {
            block_end += 1;
        }
        for &j in &order[block_start..block_end] {
            while is_fractional(xs[j]) {
                let Some(&Reverse((cpc_bits, i))) = heap.peek() else { break };
                if f64::from_bits(cpc_bits) > instance.queries[j].cpc {
                    break;
                }
                if !is_fractional(xs[i]) {
                    heap.pop(); // filled to 1 by an earlier transfer
                    continue;
                }
                let total = xs[i] + xs[j];
                xs[i] = total.min(1.0);
                xs[j] = (total - 1.0).max(0.0);
                if !is_fractional(xs[i]) {
                    heap.pop();
                }
            }
        }
        for &j in &order[block_start..block_end] {
            if is_fractional(xs[j]) {
                heap.push(Reverse(key(j)));
            }
        }
        block_start = block_end;
    }
}

// Membership-pattern cells; disjoint instances yield one cell per group plus
// the ungrouped cell, which is rounded like a group of its own.
fn intersection_cells(instance: &Instance) -> Result<Vec<Vec<usize>>, RoundingError> {
    let n_groups = instance.n_groups();
    let intersecting = instance.queries.iter().any(|q| q.groups.iter().filter(|&&b| b).count() > 1);
    if intersecting && (n_groups > 6) {
        return Err(RoundingError::TooManyIntersectingGroups(n_groups));
    }
    let mut by_pattern: std::collections::BTreeMap<u64, Vec<usize>> = std::collections::BTreeMap::new();
    for (i, q) in instance.queries.iter().enumerate() {
        let mut pattern = 0u64;
        for g in 0..n_groups {
            if q.groups[g] {
                pattern |= 1 << g;
            }
        }
        by_pattern.entry(pattern).or_default().push(i);
    }
    Ok(by_pattern.into_values().collect())
}

/// Rewrites fractional entries of each group (and of the ungrouped cell) so
/// that higher value implies strictly higher price, by the mass-shifting
/// swap x_i ← min(1, x_i + x_i'), x_i' ← max(0, x_i + x_i' − 1).
///
/// Requires disjoint groups. In the unit-ctr setting this never lowers the
/// objective, never raises spend, and leaves every group slack unchanged.
pub fn repair_round_condition(
    instance: &Instance,
    x: &FractionalAllocation,
) -> Result<FractionalAllocation, RoundingError> {
    if x.len() != instance.len() {
        return Err(ModelError::DimensionMismatch { expected: instance.len(), got: x.len() }.into());
    }
    if instance.queries.iter().any(|q| q.groups.iter().filter(|&&b| b).count() > 1) {
        return Err(RoundingError::IntersectingGroups);
    }
    let mut xs = x.values().to_vec();
    for cell in intersection_cells(instance)? {
        repair_cell(&mut xs, &cell, instance);
    }
    Ok(FractionalAllocation::new(xs).expect("repair keeps [0,1]"))
}

/// True when `x` satisfies the value/price order within each cell's
/// fractional entries.
pub fn satisfies_round_condition(instance: &Instance, x: &FractionalAllocation) -> bool {
    let Ok(cells) = intersection_cells(instance) else {
        return false;
    };
    let xs = x.values();
    for cell in cells {
        let frac: Vec<usize> = cell.into_iter().filter(|&i| is_fractional(xs[i])).collect();
        for (a, &i) in frac.iter().enumerate() {
            for &j in &frac[a + 1..] {
                let (qi, qj) = (&instance.queries[i], &instance.queries[j]);
                if (qi.value > qj.value && qi.cpc <= qj.cpc) || (qj.value > qi.value && qj.cpc <= qi.cpc) {
                    return false;
                }
            }
        }
    }
    true
}

/// Rounds one group's strictly fractional entries, scanning from the highest
/// (value, cpc) rank downward and granting y = 1 whenever the entry plus the
/// mass not yet granted above it reaches a whole unit. Returned bits are
/// aligned with `indices` as given.
pub fn deterministic_round_group(
    instance: &Instance,
    indices: &[usize],
    x: &FractionalAllocation,
) -> Result<Vec<bool>, RoundingError> {
    for &i in indices {
        if !is_fractional(x.values()[i]) {
            return Err(RoundingError::NotFractional { index: i, x: x.values()[i] });
        }
    }
    let mut sorted: Vec<usize> = indices.to_vec();
    sorted.sort_by(|&a, &b| {
        let qa = &instance.queries[a];
        let qb = &instance.queries[b];
        qa.value
            .partial_cmp(&qb.value)
            .unwrap()
            .then(qa.cpc.partial_cmp(&qb.cpc).unwrap())
            .then(qa.id.cmp(&qb.id))
    });
    let mut bits = vec![false; x.len()];
    let mut carry = 0.0; // Σ_{l > j} (x_l − y_l)
    for &i in sorted.iter().rev() {
        let xi = x.values()[i];
        if xi + carry >= 1.0 {
            bits[i] = true;
            carry += xi - 1.0;
        } else {
            carry += xi;
        }
    }
    Ok(indices.iter().map(|&i| bits[i]).collect())
}

/// Deterministic rounding of a whole allocation: integral entries pass
/// through; each cell's fractional entries are repaired and rounded by
/// [`deterministic_round_group`]. Requires ctr = 1 everywhere, and at most
/// 64 membership cells when groups intersect.
pub fn deterministic_round(
    instance: &Instance,
    x: &FractionalAllocation,
) -> Result<IntegerAllocation, RoundingError> {
    if x.len() != instance.len() {
        return Err(ModelError::DimensionMismatch { expected: instance.len(), got: x.len() }.into());
    }
    if let Some((i, q)) = instance.queries.iter().enumerate().find(|(_, q)| q.ctr != 1.0) {
        return Err(RoundingError::CtrNotOne { index: i, ctr: q.ctr });
    }
    let cells = intersection_cells(instance)?;
    let mut xs = x.values().to_vec();
    for cell in &cells {
        repair_cell(&mut xs, cell, instance);
    }
    let repaired = FractionalAllocation::new(xs).expect("repair keeps [0,1]");

    let mut bits: Vec<bool> = repaired.values().iter().map(|&v| v >= 1.0 - INTEGRAL_TOL).collect();
    for cell in &cells {
        let frac: Vec<usize> = cell.iter().copied().filter(|&i| is_fractional(repaired.values()[i])).collect();
        if frac.is_empty() {
            continue;
        }
        let rounded = deterministic_round_group(instance, &frac, &repaired)?;
        for (&i, &b) in frac.iter().zip(&rounded) {
            bits[i] = b;
        }
    }
    Ok(IntegerAllocation::new(bits))
}
