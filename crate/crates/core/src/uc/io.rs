use crate::error::Result;
use crate::io::{from_json, parse_samples_csv, to_json};
use crate::model::SampleSet;

use super::UcSystem;

/// Parses and validates a UC system JSON document.
pub fn parse_uc_system(text: &str) -> Result<UcSystem> {
    let sys: UcSystem = from_json(text, "UC system")?;
    sys.validate()?;
    Ok(sys)
}

/// System JSON plus a samples CSV whose columns are ordered bus-major
/// (`bus0_t0, bus0_t1, …, bus1_t0, …`), one row per historical day.
pub fn ingest_uc(system_text: &str, samples_text: &str) -> Result<(UcSystem, SampleSet)> {
    let sys = parse_uc_system(system_text)?;
    let samples = parse_samples_csv(samples_text, &sys.support())?;
    Ok((sys, samples))
}

pub fn emit_uc(system: &UcSystem) -> String {
    to_json(system)
}

/// Column names of the samples CSV.
pub fn sample_header(system: &UcSystem) -> Vec<String> {
    (0..system.num_buses())
        .flat_map(|i| (0..system.periods).map(move |t| format!("bus{i}_t{t}")))
        .collect()
}
