//! Synthetic population generator: occupations with gender compositions,
//! income-driven prices with a calibrated premium on reaching women, and
//! own-group-share-driven click rates.

use super::SimError;
use crate::model::{GroupSpec, Instance, Query};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OccupationSpec {
    pub name: String,
    pub size: usize,
    /// Fraction of the occupation that is women, in [0, 1].
    pub share_women: f64,
    /// Annual income distribution (currency units).
    pub income_mean: f64,
    pub income_sd: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub occupations: Vec<OccupationSpec>,
    /// Queries in this occupation get value 1, everyone else 0 (pre-noise).
    pub target_occupation: String,
    pub budget: f64,
    /// Representation target for the `women` group.
    pub mu_women: f64,
    /// cpc = cpc_base + cpc_income_slope·(income/100k) + noise, then the
    /// women's premium is added so mean cpc(women) = women_cpc_ratio ×
    /// mean cpc(men).
    pub cpc_base: f64,
    pub cpc_income_slope: f64,
    pub women_cpc_ratio: f64,
    /// ctr = ctr_base + ctr_share_slope·(own-gender share of occupation) + noise.
    pub ctr_base: f64,
    pub ctr_share_slope: f64,
    pub noise_value: f64,
    pub noise_cpc: f64,
    pub noise_ctr: f64,
    /// Clip floors/ranges after noise.
    pub cpc_min: f64,
    pub ctr_clip: (f64, f64),
}

impl SyntheticConfig {
    /// 50/50 target occupation; women cost 10% more to reach.
    pub fn balanced() -> Self {
        Self {
            occupations: vec![
                OccupationSpec {
                    name: "entertainment".into(),
                    size: 1000,
                    share_women: 0.5,
                    income_mean: 55_000.0,
                    income_sd: 15_000.0,
                },
                OccupationSpec {
                    name: "other".into(),
                    size: 1000,
                    share_women: 0.5,
                    income_mean: 50_000.0,
                    income_sd: 15_000.0,
                },
            ],
            target_occupation: "entertainment".into(),
            budget: 10.0,
            mu_women: 0.5,
            cpc_base: 0.12,
            cpc_income_slope: 0.3,
            women_cpc_ratio: 1.10,
            ctr_base: 0.35,
            ctr_share_slope: 0.4,
            noise_value: 0.0,
            noise_cpc: 0.05,
            noise_ctr: 0.05,
            cpc_min: 0.01,
            ctr_clip: (0.01, 0.99),
        }
    }

    /// 21%-women target occupation with higher incomes (and a higher price
    /// floor); the surrounding audience mirrors the composition.
    pub fn skewed_21() -> Self {
        let mut config = Self::balanced();
        config.occupations = vec![
            OccupationSpec {
                name: "computer_mathematical".into(),
                size: 1000,
                share_women: 0.21,
                income_mean: 95_000.0,
                income_sd: 20_000.0,
            },
            OccupationSpec {
                name: "other".into(),
                size: 1000,
                share_women: 0.21,
                income_mean: 85_000.0,
                income_sd: 20_000.0,
            },
        ];
        config.target_occupation = "computer_mathematical".into();
        config.mu_women = 0.21;
        config.cpc_min = 0.05;
        config
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.occupations.is_empty() {
            return Err(SimError::Config("no occupations".into()));
        }
        for occ in &self.occupations {
            if !(0.0..=1.0).contains(&occ.share_women) {
                return Err(SimError::Config(format!(
                    "occupation {}: gender shares {} and {} do not form a composition",
                    occ.name,
                    occ.share_women,
                    1.0 - occ.share_women
                )));
            }
        }
        if !self.occupations.iter().any(|o| o.name == self.target_occupation) {
            return Err(SimError::Config(format!("target occupation {} not defined", self.target_occupation)));
        }
        if !(0.0..=1.0).contains(&self.mu_women) {
            return Err(SimError::Config(format!("mu_women {} outside [0, 1]", self.mu_women)));
        }
        Ok(())
    }
}

/// Generates the population, deterministic given the seed. The women's price
/// premium is calibrated on the generated sample: a uniform additive bump
/// sets mean cpc(women) = ratio × mean cpc(men) exactly (pre-clip).
pub fn gen_synthetic_population(config: &SyntheticConfig, seed: u64) -> Result<Instance, SimError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = |rng: &mut ChaCha8Rng, sd: f64| -> f64 {
        if sd > 0.0 { Normal::new(0.0, sd).unwrap().sample(rng) } else { 0.0 }
    };

    let mut queries = Vec::new();
    let mut women = Vec::new();
    for occ in &config.occupations {
        let target = occ.name == config.target_occupation;
        for k in 0..occ.size {
            let woman = rng.random_bool(occ.share_women);
            let income = (occ.income_mean + noise(&mut rng, occ.income_sd)).max(0.0);
            let value = ((if target { 1.0 } else { 0.0 }) + noise(&mut rng, config.noise_value)).max(0.0);
            let cpc = (config.cpc_base
                + config.cpc_income_slope * income / 100_000.0
                + noise(&mut rng, config.noise_cpc))
            .max(config.cpc_min);
            let own_share = if woman { occ.share_women } else { 1.0 - occ.share_women };
            let ctr = (config.ctr_base + config.ctr_share_slope * own_share + noise(&mut rng, config.noise_ctr))
                .clamp(config.ctr_clip.0, config.ctr_clip.1);
            women.push(woman);
            queries.push(Query::new(
                format!("{}_{k:05}", occ.name),
                value,
                ctr,
                cpc,
                vec![woman, !woman],
            ));
        }
    }

    // uniform additive premium on women's cpc so the means hit the ratio
    let (mut sum_w, mut n_w, mut sum_m, mut n_m) = (0.0, 0usize, 0.0, 0usize);
    for (q, &w) in queries.iter().zip(&women) {
        if w {
            sum_w += q.cpc;
            n_w += 1;
        } else {
            sum_m += q.cpc;
            n_m += 1;
        }
    }
    if n_w > 0 && n_m > 0 {
        let bump = config.women_cpc_ratio * (sum_m / n_m as f64) - sum_w / n_w as f64;
        for (q, &w) in queries.iter_mut().zip(&women) {
            if w {
                q.cpc = (q.cpc + bump).max(config.cpc_min);
            }
        }
    }

    // the men's group carries no target; it exists so strategies can compare
    // the two price distributions
    let groups = vec![GroupSpec::new("women", config.mu_women), GroupSpec::new("men", 0.0)];
    Ok(Instance::new(queries, config.budget, groups)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mean_cpc(inst: &Instance, woman: bool) -> f64 {
        let xs: Vec<f64> = inst
            .queries
            .iter()
            .filter(|q| (q.group_bit(0) == 1.0) == woman)
            .map(|q| q.cpc)
            .collect();
        xs.iter().sum::<f64>() / xs.len() as f64
    }

    #[test]
    fn women_cpc_premium_calibrated() {
        let mut config = SyntheticConfig::balanced();
        config.occupations[0].size = 5000;
        config.occupations[1].size = 5000;
        let inst = gen_synthetic_population(&config, 42).unwrap();
        let ratio = mean_cpc(&inst, true) / mean_cpc(&inst, false);
        assert!((ratio - 1.10).abs() <= 0.01, "ratio {ratio}");
    }

    #[test]
    fn women_share_matches_composition() {
        let mut config = SyntheticConfig::skewed_21();
        config.occupations[0].size = 5000;
        config.occupations[1].size = 5000;
        let inst = gen_synthetic_population(&config, 7).unwrap();
        let share =
            inst.queries.iter().filter(|q| q.group_bit(0) == 1.0).count() as f64 / inst.len() as f64;
        assert!((share - 0.21).abs() <= 0.01, "share {share}");
    }

    #[test]
    fn generation_is_deterministic_by_seed() {
        let mut config = SyntheticConfig::balanced();
        config.noise_value = 0.0;
        config.noise_cpc = 0.0;
        config.noise_ctr = 0.0;
        let a = gen_synthetic_population(&config, 9).unwrap();
        let b = gen_synthetic_population(&config, 9).unwrap();
        for (qa, qb) in a.queries.iter().zip(&b.queries) {
            assert_eq!(qa.value.to_bits(), qb.value.to_bits());
            assert_eq!(qa.cpc.to_bits(), qb.cpc.to_bits());
            assert_eq!(qa.ctr.to_bits(), qb.ctr.to_bits());
            assert_eq!(qa.groups, qb.groups);
        }
        let c = gen_synthetic_population(&config, 10).unwrap();
        assert!(a.queries.iter().zip(&c.queries).any(|(x, y)| x.cpc != y.cpc || x.groups != y.groups));
    }

    #[test]
    fn bad_compositions_are_config_errors() {
        let mut config = SyntheticConfig::balanced();
        config.occupations[0].share_women = 1.4;
        assert!(matches!(gen_synthetic_population(&config, 1), Err(SimError::Config(_))));
        let mut config = SyntheticConfig::balanced();
        config.target_occupation = "missing".into();
        assert!(matches!(gen_synthetic_population(&config, 1), Err(SimError::Config(_))));
    }

    #[test]
    fn values_zero_outside_target() {
        let config = SyntheticConfig::balanced(); // noise_value = 0
        let inst = gen_synthetic_population(&config, 3).unwrap();
        for q in &inst.queries {
            if q.id.starts_with("other") {
                assert_eq!(q.value, 0.0);
            } else {
                assert_eq!(q.value, 1.0);
            }
        }
    }
}
