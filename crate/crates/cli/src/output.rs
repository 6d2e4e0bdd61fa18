//! Report emission and error-to-exit-code mapping.

use anyhow::Error;
use fairbid_core::lp::LpError;
use fairbid_core::oracle::OracleError;
use fairbid_core::rounding::RoundingError;
use fairbid_core::sim::SimError;
use serde_json::{Map, Value};
use std::path::Path;

/// Attaches a timestamp (unless suppressed), prints the report to stdout,
/// and mirrors it to `out` when given.
pub fn emit(mut report: Value, deterministic: bool, out: Option<&Path>) -> anyhow::Result<()> {
    if !deterministic {
        let stamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        if let Value::Object(map) = &mut report {
            map.insert("timestamp".into(), Value::from(stamp));
        }
    }
    let text = serde_json::to_string_pretty(&report)?;
    println!("{text}");
    if let Some(path) = out {
        std::fs::write(path, format!("{text}\n"))?;
    }
    Ok(())
}

pub fn object(entries: Vec<(&str, Value)>) -> Value {
    let mut map = Map::new();
    for (k, v) in entries {
        map.insert(k.to_string(), v);
    }
    Value::Object(map)
}

/// 2 for infeasibility/refusal, 1 for validation problems.
pub fn exit_code(err: &Error) -> i32 {
    for cause in err.chain() {
        if let Some(oracle) = cause.downcast_ref::<OracleError>() {
            return match oracle {
                OracleError::TooLarge { .. } | OracleError::NotOptimal { .. } | OracleError::ZeroAlpha(_) => 2,
                _ => 1,
            };
        }
        if let Some(rounding) = cause.downcast_ref::<RoundingError>() {
            return match rounding {
                RoundingError::IntersectingGroups
                | RoundingError::TooManyIntersectingGroups(_)
                | RoundingError::CtrNotOne { .. }
                | RoundingError::NotFractional { .. } => 2,
                _ => 1,
            };
        }
        if let Some(lp) = cause.downcast_ref::<LpError>() {
            return match lp {
                LpError::DegenerateBound(_) => 2,
                _ => 1,
            };
        }
        if cause.downcast_ref::<SimError>().is_some() {
            return 1;
        }
    }
    1
}
