//! File formats: population CSV and the instance JSON config.
//!
//! Population CSV (UTF-8, `.` decimal point, no thousands separators):
//!
//! ```text
//! id,value,cpc,ctr,group:women,group:students
//! q0001,1,0.34,0.62,1,0
//! ```
//!
//! Instance config JSON:
//!
//! ```json
//! {"budget": 5.0, "groups": [{"name": "women", "mu": 0.5}], "population": "pop.csv"}
//! ```
//!
//! A relative `population` path resolves against the config file's directory.

use crate::model::{GroupSpec, Instance, ModelError, Query, check_group_membership_consistency};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {what}")]
    Csv { path: PathBuf, line: usize, what: String },
    #[error("config {path}: {what}")]
    Config { path: PathBuf, what: String },
    #[error(transparent)]
    Model(#[from] ModelError),
}

const FIXED_COLUMNS: [&str; 4] = ["id", "value", "cpc", "ctr"];

/// Serializes queries to the population CSV format.
pub fn population_to_csv(queries: &[Query], groups: &[GroupSpec]) -> String {
    let mut out = String::new();
    out.push_str("id,value,cpc,ctr");
    for g in groups {
        let _ = write!(out, ",group:{}", g.name);
    }
    out.push('\n');
    for q in queries {
        let _ = write!(out, "{},{},{},{}", q.id, q.value, q.cpc, q.ctr);
        for g in 0..groups.len() {
            let _ = write!(out, ",{}", if q.groups.get(g).copied().unwrap_or(false) { 1 } else { 0 });
        }
        out.push('\n');
    }
    out
}

pub fn write_population_csv(path: &Path, queries: &[Query], groups: &[GroupSpec]) -> Result<(), IoError> {
    std::fs::write(path, population_to_csv(queries, groups))
        .map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

/// Parses a population CSV into queries plus the group names found in the header.
pub fn parse_population_csv(path: &Path, text: &str) -> Result<(Vec<Query>, Vec<String>), IoError> {
    let csv_err = |line: usize, what: String| IoError::Csv { path: path.to_path_buf(), line, what };
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| csv_err(1, "empty file".into()))?;
    let cols: Vec<&str> = header.split(',').collect();
    if cols.len() < FIXED_COLUMNS.len() || cols[..4] != FIXED_COLUMNS {
        return Err(csv_err(1, format!("header must start with `id,value,cpc,ctr`, got `{header}`")));
    }
    let mut group_names = Vec::new();
    for col in &cols[4..] {
        match col.strip_prefix("group:") {
            Some(name) if !name.is_empty() => group_names.push(name.to_string()),
            _ => return Err(csv_err(1, format!("expected `group:<name>` column, got `{col}`"))),
        }
    }
    let mut queries = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(csv_err(lineno, format!("expected {} fields, got {}", cols.len(), fields.len())));
        }
        let num = |field: &str, name: &str| -> Result<f64, IoError> {
            field.parse::<f64>().map_err(|_| csv_err(lineno, format!("field `{name}`: bad number `{field}`")))
        };
        let mut bits = Vec::with_capacity(group_names.len());
        for (g, field) in fields[4..].iter().enumerate() {
            match *field {
                "0" => bits.push(false),
                "1" => bits.push(true),
                other => {
                    return Err(csv_err(
                        lineno,
                        format!("group column `{}` must be 0 or 1, got `{other}`", group_names[g]),
                    ));
                }
            }
        }
        let value = num(fields[1], "value")?;
        let cpc = num(fields[2], "cpc")?;
        let ctr = num(fields[3], "ctr")?;
        queries.push(Query::new(fields[0], value, ctr, cpc, bits));
    }
    Ok((queries, group_names))
}

pub fn read_population_csv(path: &Path) -> Result<(Vec<Query>, Vec<String>), IoError> {
    let text = std::fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })?;
    parse_population_csv(path, &text)
}

/// JSON instance config: budget, group targets, and population CSV path.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InstanceConfig {
    pub budget: f64,
    pub groups: Vec<GroupSpec>,
    pub population: String,
}

pub fn write_instance_config(path: &Path, config: &InstanceConfig) -> Result<(), IoError> {
    let text = serde_json::to_string_pretty(config).expect("config serializes");
    std::fs::write(path, text).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

/// Loads a config and its population file into a validated [`Instance`].
///
/// The CSV group columns must match the config's group list by name; column
/// order follows the config order.
pub fn load_instance(config_path: &Path) -> Result<Instance, IoError> {
    let cfg_err = |what: String| IoError::Config { path: config_path.to_path_buf(), what };
    let text = std::fs::read_to_string(config_path)
        .map_err(|source| IoError::File { path: config_path.to_path_buf(), source })?;
    let config: InstanceConfig =
        serde_json::from_str(&text).map_err(|e| cfg_err(format!("invalid JSON: {e}")))?;

    let mut pop_path = PathBuf::from(&config.population);
    if pop_path.is_relative()
        && let Some(dir) = config_path.parent()
    {
        pop_path = dir.join(pop_path);
    }
    let (raw_queries, csv_groups) = read_population_csv(&pop_path)?;

    // reorder each bit vector from CSV column order to config group order
    let mut queries = Vec::with_capacity(raw_queries.len());
    let positions: Vec<usize> = config
        .groups
        .iter()
        .map(|g| {
            csv_groups
                .iter()
                .position(|name| *name == g.name)
                .ok_or_else(|| cfg_err(format!("group `{}` not present in population CSV", g.name)))
        })
        .collect::<Result<_, _>>()?;
    for mut q in raw_queries {
        let bits = positions.iter().map(|&p| q.groups.get(p).copied().unwrap_or(false)).collect();
        q.groups = bits;
        queries.push(q);
    }

    let report = check_group_membership_consistency(&queries, &config.groups);
    if !report.is_clean() {
        return Err(cfg_err(format!("inconsistent group bits for queries {:?}", report.length_mismatches)));
    }
    Ok(Instance::new(queries, config.budget, config.groups)?)
}
