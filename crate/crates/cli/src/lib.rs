//! Scenario runner and table emitter for `symbroadcast`.

pub mod bounds;
pub mod emit;
pub mod error;
pub mod fmt;
pub mod mc;
pub mod scenario;
pub mod suite;

pub use emit::{emit, render, Format, Row};
pub use error::{CliError, Result};
pub use scenario::{parse_scenarios, run_all, run_scenario, ResultRecord, RunOptions, ScenarioConfig};

/// Parses `2`, `1,3,5`, `2..6` (inclusive) or mixtures such as `1,4..6`.
pub fn parse_list(flag: &str, text: &str) -> Result<Vec<usize>> {
    let bad = |part: &str| CliError::config(flag, format!("cannot parse `{part}` as a number or range"));
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once("..") {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| bad(part))?;
                let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad(part))?;
                if a > b {
                    return Err(bad(part));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| bad(part))?),
        }
    }
    if out.is_empty() {
        return Err(CliError::config(flag, "empty list"));
    }
    Ok(out)
}
