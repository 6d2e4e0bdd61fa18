//! Domain types shared by every module: queries, group targets, instances,
//! allocations, and evaluation of the allocation objective/constraints.
//!
//! An [`Instance`] is the data of the ad-allocation program: a population of
//! [`Query`]s, a spend budget, and per-group minimum click-share targets.
//! [`Instance::evaluate`] computes, for any allocation `x ∈ [0,1]^n`,
//!
//! * objective   `Σ x_i ctr_i v_i`
//! * spend       `Σ x_i ctr_i cpc_i`          (must stay ≤ budget)
//! * group slack `Σ x_i ctr_i (mu_g − g_i)`   (must stay ≤ 0 per group)

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default absolute tolerance for feasibility checks.
pub const DEFAULT_TOLERANCE: f64 = 1e-7;

/// Auction pricing rule: winner pays its bid (first price) or the winning
/// price landscape value (second price).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriceModel {
    First,
    Second,
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("allocation length {got} does not match instance size {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("query {id}: {what}")]
    InvalidQuery { id: String, what: String },
    #[error("group {name}: mu {mu} outside [0, 1]")]
    InvalidGroup { name: String, mu: f64 },
    #[error("budget {0} is negative")]
    NegativeBudget(f64),
    #[error("allocation entry {index} = {value} outside [0, 1]")]
    AllocationOutOfRange { index: usize, value: f64 },
}

/// One ad slot attached to one individual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Query {
    pub id: String,
    /// Advertiser value for a click on this slot (v_i ≥ 0).
    pub value: f64,
    /// Click-through rate in [0, 1].
    pub ctr: f64,
    /// Winning price / cost-per-click landscape value (w_i ≥ 0).
    pub cpc: f64,
    /// Membership bit per instance group, indexed like `Instance::groups`.
    pub groups: Vec<bool>,
}

impl Query {
    pub fn new(id: impl Into<String>, value: f64, ctr: f64, cpc: f64, groups: Vec<bool>) -> Self {
        Self { id: id.into(), value, ctr, cpc, groups }
    }

    /// Membership indicator as 0.0/1.0.
    pub fn group_bit(&self, g: usize) -> f64 {
        if self.groups.get(g).copied().unwrap_or(false) { 1.0 } else { 0.0 }
    }

    pub fn in_any_group(&self) -> bool {
        self.groups.iter().any(|&b| b)
    }

    fn validate(&self, n_groups: usize) -> Result<(), ModelError> {
        let err = |what: String| ModelError::InvalidQuery { id: self.id.clone(), what };
        // NaN fails each of these checks too
        if self.value.is_nan() || self.value < 0.0 {
            return Err(err(format!("value {} must be nonnegative", self.value)));
        }
        if !(0.0..=1.0).contains(&self.ctr) {
            return Err(err(format!("ctr {} outside [0, 1]", self.ctr)));
        }
        if self.cpc.is_nan() || self.cpc < 0.0 {
            return Err(err(format!("cpc {} must be nonnegative", self.cpc)));
        }
        if self.groups.len() != n_groups {
            return Err(err(format!(
                "group bit vector has length {}, instance has {} groups",
                self.groups.len(),
                n_groups
            )));
        }
        Ok(())
    }
}

/// A group with a minimum target share of total clicks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupSpec {
    pub name: String,
    /// Required minimum fraction of total expected clicks coming from this group.
    pub mu: f64,
}

impl GroupSpec {
    pub fn new(name: impl Into<String>, mu: f64) -> Self {
        Self { name: name.into(), mu }
    }
}

/// A population plus budget and representation targets: the program's data.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Instance {
    pub queries: Vec<Query>,
    pub budget: f64,
    pub groups: Vec<GroupSpec>,
}

impl Instance {
    pub fn new(queries: Vec<Query>, budget: f64, groups: Vec<GroupSpec>) -> Result<Self, ModelError> {
        if budget.is_nan() || budget < 0.0 {
            return Err(ModelError::NegativeBudget(budget));
        }
        for g in &groups {
            if !(0.0..=1.0).contains(&g.mu) {
                return Err(ModelError::InvalidGroup { name: g.name.clone(), mu: g.mu });
            }
        }
        for q in &queries {
            q.validate(groups.len())?;
        }
        Ok(Self { queries, budget, groups })
    }

    pub fn len(&self) -> usize {
        self.queries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queries.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    /// Copy of the instance with every ctr forced to 1 (pay-per-impression semantics).
    pub fn with_unit_ctr(&self) -> Instance {
        let mut clone = self.clone();
        for q in &mut clone.queries {
            q.ctr = 1.0;
        }
        clone
    }

    /// Objective, spend, and per-group slack of an allocation, with feasibility
    /// flags at absolute tolerance `tolerance`.
    ///
    /// Errors on a length mismatch; entries outside [0, 1] are rejected so the
    /// result always refers to a genuine (fractional) allocation.
    pub fn evaluate(&self, alloc: &[f64], tolerance: f64) -> Result<ConstraintEvaluation, ModelError> {
        if alloc.len() != self.queries.len() {
            return Err(ModelError::DimensionMismatch { expected: self.queries.len(), got: alloc.len() });
        }
        for (i, &x) in alloc.iter().enumerate() {
            if !(-1e-12..=1.0 + 1e-12).contains(&x) {
                return Err(ModelError::AllocationOutOfRange { index: i, value: x });
            }
        }
        let mut objective = 0.0;
        let mut spend = 0.0;
        let mut group_slack = vec![0.0; self.groups.len()];
        for (q, &x) in self.queries.iter().zip(alloc) {
            let click_mass = x * q.ctr;
            objective += click_mass * q.value;
            spend += click_mass * q.cpc;
            for (g, slack) in group_slack.iter_mut().enumerate() {
                *slack += click_mass * (self.groups[g].mu - q.group_bit(g));
            }
        }
        let budget_feasible = spend <= self.budget + tolerance;
        let groups_feasible = group_slack.iter().map(|&s| s <= tolerance).collect();
        Ok(ConstraintEvaluation {
            objective,
            spend,
            group_slack,
            feasible_within: tolerance,
            budget_feasible,
            groups_feasible,
        })
    }
}

/// Objective and constraint values of one allocation on one instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConstraintEvaluation {
    pub objective: f64,
    pub spend: f64,
    /// Per group: Σ x_i ctr_i (mu_g − g_i); feasible when ≤ 0.
    pub group_slack: Vec<f64>,
    /// Tolerance the feasibility flags were computed at.
    pub feasible_within: f64,
    pub budget_feasible: bool,
    pub groups_feasible: Vec<bool>,
}

impl ConstraintEvaluation {
    pub fn feasible(&self) -> bool {
        self.budget_feasible && self.groups_feasible.iter().all(|&ok| ok)
    }
}

/// A fractional allocation x ∈ \[0,1\]^n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalAllocation(Vec<f64>);

impl FractionalAllocation {
    pub fn new(x: Vec<f64>) -> Result<Self, ModelError> {
        for (i, &v) in x.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelError::AllocationOutOfRange { index: i, value: v });
            }
        }
        Ok(Self(x))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![0.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// An integral bid decision y ∈ {0,1}^n.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntegerAllocation(Vec<bool>);

impl IntegerAllocation {
    pub fn new(y: Vec<bool>) -> Self {
        Self(y)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_floats(&self) -> Vec<f64> {
        self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect()
    }
}

/// Report-only validation of group bookkeeping.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ConsistencyReport {
    /// Ids of queries whose bit vector length mismatches the group list.
    pub length_mismatches: Vec<String>,
    /// Names of groups with mu = 0: memberships there are vacuous.
    pub vacuous_groups: Vec<String>,
}

impl ConsistencyReport {
    pub fn is_clean(&self) -> bool {
        self.length_mismatches.is_empty()
    }
}

/// Checks query bit vectors against the group list and flags mu = 0 groups.
///
/// Works on raw parts so it can run before `Instance::new` enforces the
/// length invariant (e.g. on freshly parsed CSV rows).
pub fn check_group_membership_consistency(queries: &[Query], groups: &[GroupSpec]) -> ConsistencyReport {
    let mut report = ConsistencyReport::default();
    for q in queries {
        if q.groups.len() != groups.len() {
            report.length_mismatches.push(q.id.clone());
        }
    }
    for g in groups {
        if g.mu == 0.0 {
            report.vacuous_groups.push(g.name.clone());
        }
    }
    report
}

impl Instance {
    pub fn consistency_report(&self) -> ConsistencyReport {
        check_group_membership_consistency(&self.queries, &self.groups)
    }
}

#[cfg(test)]
pub(crate) mod test_fixtures {
    use super::*;

    /// Three-query instance used across module tests:
    /// q1(v=1,ctr=1,cpc=0.5,A), q2(v=1,ctr=1,cpc=0.5,B), q3(v=2,ctr=1,cpc=1.0,A), B=1.
    pub fn e1(mu_b: Option<f64>) -> Instance {
        let groups = match mu_b {
            None => vec![],
            Some(mu) => vec![GroupSpec::new("B", mu)],
        };
        let in_b = |b: bool| if groups.is_empty() { vec![] } else { vec![b] };
        Instance::new(
            vec![
                Query::new("q1", 1.0, 1.0, 0.5, in_b(false)),
                Query::new("q2", 1.0, 1.0, 0.5, in_b(true)),
                Query::new("q3", 2.0, 1.0, 1.0, in_b(false)),
            ],
            1.0,
            groups,
        )
        .unwrap()
    }
}
