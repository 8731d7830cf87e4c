//! Run directory files: agent outcomes, scenario summary, dropout curves,
//! effective config and run log.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::{summarize_by_scenario, CurveRow, ScenarioSummary};
use crate::calibration::CalibrationResult;
use crate::config::Experiment;
use crate::engine::{ExperimentResult, FrictionFlag};
use crate::error::{Error, Result};
use crate::policy::ScenarioKind;
use crate::population::{AgentStatus, DropoutCause, Resilience};

pub const AGENT_OUTCOMES_FILE: &str = "agent_outcomes_all_runs.csv";
pub const SUMMARY_FILE: &str = "policy_tradeoff_summary.csv";
pub const CONFIG_FILE: &str = "config_effective.json";
pub const CURVES_FILE: &str = "dropout_curves.csv";
pub const RUN_LOG_FILE: &str = "run_log.json";
pub const CALIBRATION_REPORT_FILE: &str = "calibration_report.json";
pub const AUDIT_REPORT_FILE: &str = "audit_report.json";
pub const SWEEP_FILE: &str = "sweep_summary.csv";

pub const AGENT_COLUMNS: [&str; 14] = [
    "scenario",
    "replication",
    "agent_id",
    "archetype_id",
    "resilience",
    "status",
    "dropout_semester",
    "dropout_cause",
    "final_stress",
    "final_belonging",
    "final_debt",
    "killer_failures",
    "remedial_acceptances",
    "courses_passed",
];

pub const SUMMARY_COLUMNS: [&str; 16] = [
    "scenario",
    "n_agents",
    "n_replications",
    "overall_dropout_rate",
    "overall_graduation_rate",
    "normative_dropout_frac",
    "academic_dropout_frac",
    "other_dropout_frac",
    "mean_time_to_event",
    "median_time_to_event",
    "mean_final_debt",
    "mean_killer_failures",
    "mean_remedial_acceptances",
    "equity_gap_low_vs_high_resilience",
    "dropout_rate_low_resilience",
    "dropout_rate_high_resilience",
];

pub const CURVE_COLUMNS: [&str; 5] = [
    "scenario",
    "semester",
    "cumulative_dropout",
    "mean_stress_active",
    "mean_belonging_active",
];

/// One row of the agent outcomes file. Stress and belonging of dropped
/// agents are their values at dropout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub scenario: ScenarioKind,
    pub replication: usize,
    pub agent_id: u32,
    pub archetype_id: u32,
    pub resilience: Resilience,
    pub status: AgentStatus,
    pub dropout_semester: Option<u32>,
    pub dropout_cause: Option<DropoutCause>,
    pub final_stress: f64,
    pub final_belonging: f64,
    pub final_debt: usize,
    pub killer_failures: u32,
    pub remedial_acceptances: u32,
    pub courses_passed: usize,
}

pub fn agent_records(experiment: &Experiment, result: &ExperimentResult) -> Vec<AgentRecord> {
    let table = &experiment.archetypes.archetypes;
    result
        .replications
        .iter()
        .flat_map(|r| {
            r.agents.iter().map(move |a| {
                let arch = &table[a.archetype];
                AgentRecord {
                    scenario: r.scenario,
                    replication: r.replication,
                    agent_id: a.agent_id,
                    archetype_id: arch.id,
                    resilience: arch.resilience,
                    status: a.status,
                    dropout_semester: a.dropout_semester,
                    dropout_cause: a.dropout_cause,
                    final_stress: a.stress,
                    final_belonging: a.belonging,
                    final_debt: a.finals_debt.len(),
                    killer_failures: a.killer_failures,
                    remedial_acceptances: a.remedial_acceptances,
                    courses_passed: a.transcript.passed_count(),
                }
            })
        })
        .collect()
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Reals are written with six decimals.
pub fn write_agent_outcomes<W: Write>(w: W, records: &[AgentRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(AGENT_COLUMNS)?;
    for r in records {
        out.write_record([
            r.scenario.label().to_string(),
            r.replication.to_string(),
            r.agent_id.to_string(),
            r.archetype_id.to_string(),
            r.resilience.as_str().to_string(),
            r.status.as_str().to_string(),
            opt(r.dropout_semester),
            r.dropout_cause.map(|c| c.as_str().to_string()).unwrap_or_default(),
            format!("{:.6}", r.final_stress),
            format!("{:.6}", r.final_belonging),
            r.final_debt.to_string(),
            r.killer_failures.to_string(),
            r.remedial_acceptances.to_string(),
            r.courses_passed.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io(AGENT_OUTCOMES_FILE, e))
}

fn check_header(found: &csv::StringRecord, expected: &[&str], file: &str) -> Result<()> {
    if found.iter().ne(expected.iter().copied()) {
        return Err(Error::Parse(format!(
            "{file}: header {:?} does not match expected columns {:?}",
            found.iter().collect::<Vec<_>>(),
            expected
        )));
    }
    Ok(())
}

pub fn read_agent_outcomes<R: Read>(r: R) -> Result<Vec<AgentRecord>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(rdr.headers()?, &AGENT_COLUMNS, AGENT_OUTCOMES_FILE)?;
    rdr.deserialize()
        .enumerate()
        .map(|(i, row)| {
            row.map_err(|e| Error::Parse(format!("{AGENT_OUTCOMES_FILE}: row {}: {e}", i + 1)))
        })
        .collect()
}

fn real(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Full-precision reals, so every column can be checked against a
/// recomputation from the agent file.
pub fn write_summary<W: Write>(w: W, rows: &[ScenarioSummary]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(SUMMARY_COLUMNS)?;
    for s in rows {
        out.write_record([
            s.scenario.label().to_string(),
            s.n_agents.to_string(),
            s.n_replications.to_string(),
            s.overall_dropout_rate.to_string(),
            s.overall_graduation_rate.to_string(),
            real(s.normative_dropout_frac),
            real(s.academic_dropout_frac),
            real(s.other_dropout_frac),
            real(s.mean_time_to_event),
            real(s.median_time_to_event),
            s.mean_final_debt.to_string(),
            s.mean_killer_failures.to_string(),
            s.mean_remedial_acceptances.to_string(),
            s.equity_gap_low_vs_high_resilience.to_string(),
            s.dropout_rate_low_resilience.to_string(),
            s.dropout_rate_high_resilience.to_string(),
        ])?;
    }
    out.flush().map_err(|e| Error::io(SUMMARY_FILE, e))
}

pub fn read_summary<R: Read>(r: R) -> Result<Vec<ScenarioSummary>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(rdr.headers()?, &SUMMARY_COLUMNS, SUMMARY_FILE)?;
    rdr.deserialize()
        .map(|row| row.map_err(|e| Error::Parse(format!("{SUMMARY_FILE}: {e}"))))
        .collect()
}

pub fn write_curves<W: Write>(w: W, rows: &[CurveRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CURVE_COLUMNS)?;
    for c in rows {
        out.write_record([
            c.scenario.label().to_string(),
            c.semester.to_string(),
            c.cumulative_dropout.to_string(),
            real(c.mean_stress_active),
            real(c.mean_belonging_active),
        ])?;
    }
    out.flush().map_err(|e| Error::io(CURVES_FILE, e))
}

pub fn read_curves<R: Read>(r: R) -> Result<Vec<CurveRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    check_header(rdr.headers()?, &CURVE_COLUMNS, CURVES_FILE)?;
    rdr.deserialize()
        .map(|row| row.map_err(|e| Error::Parse(format!("{CURVES_FILE}: {e}"))))
        .collect()
}

/// Remedial load of one scenario across all its allocation rounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RemedialUsage {
    pub scenario: ScenarioKind,
    pub rounds: usize,
    pub slots_available: usize,
    pub slots_used: usize,
    /// `slots_used / slots_available`; absent when no slot was ever offered.
    pub utilisation: Option<f64>,
    pub candidates: usize,
    pub capacity_respected: bool,
    pub priority_sound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub agent_records: usize,
    pub remedial: Vec<RemedialUsage>,
    /// Per scenario, courses whose regime friction had to be clamped.
    pub clamped_frictions: Vec<(ScenarioKind, Vec<FrictionFlag>)>,
}

impl RunLog {
    pub fn new(result: &ExperimentResult) -> Self {
        let remedial = result
            .scenarios()
            .into_iter()
            .filter(|&k| k == ScenarioKind::SafetyNet)
            .map(|k| {
                let rounds: Vec<_> = result.for_scenario(k).flat_map(|r| &r.remedial_rounds).collect();
                let slots_available: usize = rounds.iter().map(|r| r.capacity).sum();
                let slots_used: usize = rounds.iter().map(|r| r.accepted).sum();
                RemedialUsage {
                    scenario: k,
                    rounds: rounds.len(),
                    slots_available,
                    slots_used,
                    utilisation: (slots_available > 0).then(|| slots_used as f64 / slots_available as f64),
                    candidates: rounds.iter().map(|r| r.candidates).sum(),
                    capacity_respected: rounds.iter().all(|r| r.accepted <= r.capacity),
                    priority_sound: rounds.iter().all(|r| r.priority_sound),
                }
            })
            .collect();
        let clamped_frictions = result
            .scenarios()
            .into_iter()
            .filter_map(|k| {
                let first = result.for_scenario(k).next()?;
                (!first.clamped_frictions.is_empty()).then(|| (k, first.clamped_frictions.clone()))
            })
            .collect();
        Self {
            agent_records: result.agent_count(),
            remedial,
            clamped_frictions,
        }
    }
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn create_file(path: &Path) -> Result<std::io::BufWriter<fs::File>> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufWriter::new(f))
}

pub fn open_file(path: &Path) -> Result<std::io::BufReader<fs::File>> {
    let f = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    Ok(std::io::BufReader::new(f))
}

/// Paths written by [`write_run`].
#[derive(Debug, Clone)]
pub struct RunFiles {
    pub agent_outcomes: PathBuf,
    pub summary: PathBuf,
    pub config: PathBuf,
    pub curves: PathBuf,
    pub run_log: PathBuf,
}

/// Writes the full run directory. `extra_metadata` is merged into the
/// metadata block of the effective config.
pub fn write_run(
    dir: &Path,
    experiment: &Experiment,
    result: &ExperimentResult,
    extra_metadata: Option<Value>,
) -> Result<RunFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let files = RunFiles {
        agent_outcomes: dir.join(AGENT_OUTCOMES_FILE),
        summary: dir.join(SUMMARY_FILE),
        config: dir.join(CONFIG_FILE),
        curves: dir.join(CURVES_FILE),
        run_log: dir.join(RUN_LOG_FILE),
    };
    let records = agent_records(experiment, result);
    write_agent_outcomes(create_file(&files.agent_outcomes)?, &records)?;
    write_summary(create_file(&files.summary)?, &summarize_by_scenario(&records)?)?;
    write_curves(
        create_file(&files.curves)?,
        &crate::analysis::curve_rows(result, experiment.config.horizon_semesters)?,
    )?;
    write_json(&files.config, &experiment.effective_config(extra_metadata))?;
    write_json(&files.run_log, &RunLog::new(result))?;
    Ok(files)
}

/// Writes the calibration report and the calibrated effective config.
/// Returns the experiment with the winning parameters applied.
pub fn write_calibration(dir: &Path, experiment: &Experiment, result: &CalibrationResult) -> Result<Experiment> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_json(&dir.join(CALIBRATION_REPORT_FILE), result)?;
    let calibrated = experiment.with_config(result.best.apply(&experiment.config))?;
    let meta = serde_json::json!({
        "calibration": {
            "achieved_rmse": result.achieved_rmse,
            "tolerance": result.tolerance,
            "accepted": result.accepted,
            "grid_size": result.grid_size,
        }
    });
    write_json(&dir.join(CONFIG_FILE), &calibrated.effective_config(Some(meta)))?;
    Ok(calibrated)
}
