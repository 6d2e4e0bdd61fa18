//! Built-in scenario populations: the two-group price-table example, the
//! equal-winning-bid populations behind the average-bid and approximate
//! parity counterexamples, and the synthetic occupation scenarios.

use super::synth::{SyntheticConfig, gen_synthetic_population};
use super::SimError;
use crate::model::{GroupSpec, Instance, Query};
use serde::{Deserialize, Serialize};

/// A scenario file: a built-in name plus overrides.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub scenario: String,
    #[serde(default)]
    pub budget: Option<f64>,
    #[serde(default)]
    pub mu: Option<Vec<f64>>,
    /// Synthetic-scenario config override (full object).
    #[serde(default)]
    pub synthetic: Option<SyntheticConfig>,
}

/// Two groups of 50; winning prices $0.1/$0.4/$1 with counts 25/20/5 in
/// group A and 40/10/0 in group B; budget $5; unit values and unit ctr
/// (yield measured in exposures).
pub fn example_3_1_instance(mu_a: f64, mu_b: f64) -> Instance {
    let groups = vec![GroupSpec::new("A", mu_a), GroupSpec::new("B", mu_b)];
    let mut queries = Vec::new();
    let mut add = |count: usize, cpc: f64, in_a: bool, tag: &str| {
        for k in 0..count {
            let id = format!("{tag}_{cpc}_{k:02}");
            queries.push(Query::new(id, 1.0, 1.0, cpc, vec![in_a, !in_a]));
        }
    };
    add(25, 0.1, true, "a");
    add(20, 0.4, true, "a");
    add(5, 1.0, true, "a");
    add(40, 0.1, false, "b");
    add(10, 0.4, false, "b");
    Instance::new(queries, 5.0, groups).expect("static table is valid")
}

/// The outcome-parity hand strategy for the example population: bid $0.1 on
/// the 25 cheap group-A queries and on 25 of the 40 cheap group-B queries,
/// nothing elsewhere. Spends exactly the $5 budget on 50 exposures.
pub fn example_3_1_parity_bids(instance: &Instance) -> Vec<f64> {
    let mut bids = vec![0.0; instance.len()];
    let mut b_remaining = 25;
    for (i, q) in instance.queries.iter().enumerate() {
        if q.cpc != 0.1 {
            continue;
        }
        if q.group_bit(0) == 1.0 {
            bids[i] = 0.1;
        } else if b_remaining > 0 {
            bids[i] = 0.1;
            b_remaining -= 1;
        }
    }
    bids
}

/// Two equal-size groups, every winning price equal to `w`, budget large
/// enough that depletion never interferes.
pub fn appendix_a1_instance(per_group: usize, w: f64) -> Instance {
    let groups = vec![GroupSpec::new("A", 0.0), GroupSpec::new("B", 0.0)];
    let mut queries = Vec::new();
    for k in 0..per_group {
        queries.push(Query::new(format!("a{k:04}"), 1.0, 1.0, w, vec![true, false]));
    }
    for k in 0..per_group {
        queries.push(Query::new(format!("b{k:04}"), 1.0, 1.0, w, vec![false, true]));
    }
    let budget = (2 * per_group) as f64 * w + 1.0;
    Instance::new(queries, budget, groups).expect("static population is valid")
}

/// Builds a named scenario instance. `example_3_1` defaults to unconstrained
/// groups (pure simulation); pass mu overrides for the autobidder variant.
pub fn scenario_instance(spec: &ScenarioSpec, seed: u64) -> Result<Instance, SimError> {
    let mut instance = match spec.scenario.as_str() {
        "example_3_1" => {
            let mu = spec.mu.clone().unwrap_or(vec![0.0, 0.0]);
            if mu.len() != 2 {
                return Err(SimError::Config("example_3_1 takes exactly two mu values".into()));
            }
            example_3_1_instance(mu[0], mu[1])
        }
        "appendix_a1" | "appendix_a2" => appendix_a1_instance(100, 1.0),
        "synthetic" => {
            let config = spec.synthetic.clone().unwrap_or_else(SyntheticConfig::balanced);
            gen_synthetic_population(&config, seed)?
        }
        "synthetic_21" => {
            let config = spec.synthetic.clone().unwrap_or_else(SyntheticConfig::skewed_21);
            gen_synthetic_population(&config, seed)?
        }
        other => return Err(SimError::Config(format!("unknown scenario `{other}`"))),
    };
    if let Some(budget) = spec.budget {
        if budget < 0.0 {
            return Err(SimError::Config(format!("budget {budget} is negative")));
        }
        instance.budget = budget;
    }
    Ok(instance)
}
