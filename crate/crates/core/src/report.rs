//! Stable output formats for a run: frames CSV, per-agent JSON, exposure
//! histogram JSON, and run metadata JSON.
//!
//! The CSV column order and the JSON field names are a contract; identical
//! inputs produce byte-identical files.

use std::fmt::Write as _;

use serde_json::json;

use crate::district::DistrictSpec;
use crate::engine::{MetricsFrame, RunResult, FRAME_COLUMNS};
use crate::scenario::ScenarioConfig;

pub const FORMAT_VERSION: u32 = 1;

/// One row per cycle, columns exactly [`FRAME_COLUMNS`].
pub fn frames_csv(frames: &[MetricsFrame]) -> String {
    let mut out = String::new();
    out.push_str(&FRAME_COLUMNS.join(","));
    out.push('\n');
    for f in frames {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{}",
            f.cycle,
            f.moving,
            f.staying,
            f.seeking,
            f.following,
            f.wandering,
            f.leaders,
            f.dead,
            f.arrived_safe,
            f.arrived_other,
            f.gave_up,
            f.exposed_now,
            f.outside_city
        )
        .unwrap();
    }
    out
}

pub fn agents_json(result: &RunResult) -> String {
    let agents: Vec<_> = result
        .per_agent
        .iter()
        .map(|a| {
            json!({
                "id": a.id,
                "final_status": a.final_status.label(),
                "exposed_seconds": a.exposed_seconds,
                "final_role": a.final_role,
            })
        })
        .collect();
    serde_json::to_string_pretty(&json!({
        "format_version": FORMAT_VERSION,
        "agents": agents,
    }))
    .unwrap()
}

pub fn histogram_json(result: &RunResult) -> String {
    serde_json::to_string_pretty(&json!({
        "format_version": FORMAT_VERSION,
        "bucket_seconds": result.histogram_bucket_seconds,
        "counts": result.exposure_histogram,
        "total": result.exposure_histogram.iter().map(|&c| c as u64).sum::<u64>(),
    }))
    .unwrap()
}

/// Everything needed to reproduce the run: config echo, seed, district
/// source, termination.
pub fn run_meta_json(
    result: &RunResult,
    cfg: &ScenarioConfig,
    district: &DistrictSpec,
    seed: u64,
) -> String {
    serde_json::to_string_pretty(&json!({
        "format_version": FORMAT_VERSION,
        "seed": seed,
        "termination": result.termination.label(),
        "cycles": result.cycles,
        "population": result.totals.population,
        "victims": result.totals.victims,
        "total_exposed_seconds": result.totals.total_exposed_seconds,
        "arrived_safe": result.totals.arrived_safe,
        "outside_city": result.totals.outside_city,
        "gave_up": result.totals.gave_up,
        "district": district,
        "scenario": cfg,
    }))
    .unwrap()
}
