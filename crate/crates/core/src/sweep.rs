//! Reduced-replication re-runs over a grid of config overrides.

use std::io::Write;

use serde::Serialize;
use serde_json::Value;

use crate::analysis::{final_psych_means, split_by_scenario, summarize_by_scenario, ScenarioSummary};
use crate::config::{apply_overrides, Experiment};
use crate::engine::run_experiment;
use crate::error::{Error, Result};
use crate::output::{agent_records, SWEEP_FILE};
use crate::policy::ScenarioKind;

pub const FIDELITY_LABEL: &str = "reduced";

/// Replications per point: a quarter of the full run, at least 5.
pub fn sweep_replications(full: usize) -> usize {
    (full / 4).max(5)
}

/// One swept parameter and its values.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxis {
    pub key: String,
    pub values: Vec<Value>,
}

impl SweepAxis {
    /// Parses `key=v1,v2,...`. Values are JSON where possible.
    pub fn parse(s: &str) -> Result<Self> {
        let (key, raw) = s
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("sweep parameter {s:?} is not key=v1,v2,...")))?;
        let key = key.trim();
        if key.is_empty() || key.split('.').any(str::is_empty) {
            return Err(Error::Config(format!("sweep parameter {s:?} has an empty key segment")));
        }
        let values: Vec<Value> = raw
            .split(',')
            .map(str::trim)
            .filter(|v| !v.is_empty())
            .map(|v| serde_json::from_str(v).unwrap_or_else(|_| Value::String(v.into())))
            .collect();
        if values.is_empty() {
            return Err(Error::Config(format!("sweep parameter {key} has no values")));
        }
        Ok(Self {
            key: key.into(),
            values,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioPoint {
    pub scenario: ScenarioKind,
    pub summary: ScenarioSummary,
    pub mean_final_stress: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub assignments: Vec<(String, Value)>,
    pub replications: usize,
    pub scenarios: Vec<ScenarioPoint>,
}

impl SweepPoint {
    pub fn scenario(&self, kind: ScenarioKind) -> Option<&ScenarioPoint> {
        self.scenarios.iter().find(|s| s.scenario == kind)
    }
}

/// Cartesian product of the axes, first axis varying slowest.
fn product(axes: &[SweepAxis]) -> Vec<Vec<(String, Value)>> {
    let mut points = vec![Vec::new()];
    for axis in axes {
        points = points
            .into_iter()
            .flat_map(|p| {
                axis.values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((axis.key.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    points
}

pub fn run_sweep(experiment: &Experiment, axes: &[SweepAxis]) -> Result<Vec<SweepPoint>> {
    if axes.is_empty() {
        return Err(Error::Config("sweep needs at least one parameter".into()));
    }
    let replications = sweep_replications(experiment.config.replications_per_scenario);
    product(axes)
        .into_iter()
        .map(|assignments| {
            let mut overrides = assignments.clone();
            overrides.push(("replications_per_scenario".into(), Value::from(replications)));
            let e = experiment.with_config(apply_overrides(&experiment.config, &overrides)?)?;
            let result = run_experiment(&e, true)?;
            let records = agent_records(&e, &result);
            let summaries = summarize_by_scenario(&records)?;
            let scenarios = split_by_scenario(&records)
                .into_iter()
                .zip(summaries)
                .map(|((kind, rs), summary)| {
                    Ok(ScenarioPoint {
                        scenario: kind,
                        summary,
                        mean_final_stress: final_psych_means(&rs)?.0,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(SweepPoint {
                assignments,
                replications,
                scenarios,
            })
        })
        .collect()
}

const PER_SCENARIO: [&str; 4] = ["dropout_rate", "equity_gap", "mean_final_stress", "mean_remedial_acceptances"];

/// One row per point; per-scenario columns are empty when the scenario is
/// not configured.
pub fn write_sweep<W: Write>(w: W, points: &[SweepPoint]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec![
        "parameters".to_string(),
        "replications_per_scenario".into(),
        "fidelity".into(),
    ];
    for kind in ScenarioKind::ALL {
        header.extend(PER_SCENARIO.iter().map(|c| format!("{}_{c}", kind.key())));
    }
    out.write_record(&header)?;
    for p in points {
        let params: Vec<String> = p.assignments.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let mut row = vec![params.join(";"), p.replications.to_string(), FIDELITY_LABEL.to_string()];
        for kind in ScenarioKind::ALL {
            match p.scenario(kind) {
                Some(s) => row.extend([
                    s.summary.overall_dropout_rate.to_string(),
                    s.summary.equity_gap_low_vs_high_resilience.to_string(),
                    s.mean_final_stress.to_string(),
                    s.summary.mean_remedial_acceptances.to_string(),
                ]),
                None => row.extend(std::iter::repeat_n(String::new(), PER_SCENARIO.len())),
            }
        }
        out.write_record(&row)?;
    }
    out.flush().map_err(|e| Error::io(SWEEP_FILE, e))
}
