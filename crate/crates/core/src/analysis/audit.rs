//! Consistency checks over a run directory.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::{final_psych_means, km_dropout_curve, split_by_scenario, summarize_by_scenario, CurveRow, ScenarioSummary};
use crate::error::{Error, Result};
use crate::output::{
    open_file, read_agent_outcomes, read_curves, read_summary, write_json, AgentRecord, AGENT_OUTCOMES_FILE,
    AUDIT_REPORT_FILE, CONFIG_FILE, CURVES_FILE, SUMMARY_FILE,
};
use crate::policy::ScenarioKind;

/// Absolute tolerance for values that must agree after recomputation.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-9;
/// Upper bound on mean final debt under the safety-net regime.
pub const SAFETY_NET_DEBT_BOUND: f64 = 1.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CheckStatus {
    Pass,
    Fail,
    /// The check needs scenarios or metadata the run does not contain.
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub status: CheckStatus,
    pub observed: Value,
    pub expected: Value,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub passed: bool,
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failed(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| c.status == CheckStatus::Fail)
    }
}

/// Parsed contents of a run directory.
#[derive(Debug, Clone)]
pub struct AuditInputs {
    pub records: Vec<AgentRecord>,
    pub summary: Vec<ScenarioSummary>,
    pub curves: Vec<CurveRow>,
    pub config: Value,
}

impl AuditInputs {
    pub fn load(dir: &Path) -> Result<Self> {
        let config_path = dir.join(CONFIG_FILE);
        let text = fs::read_to_string(&config_path).map_err(|e| Error::io(&config_path, e))?;
        Ok(Self {
            records: read_agent_outcomes(open_file(&dir.join(AGENT_OUTCOMES_FILE))?)?,
            summary: read_summary(open_file(&dir.join(SUMMARY_FILE))?)?,
            curves: read_curves(open_file(&dir.join(CURVES_FILE))?)?,
            config: serde_json::from_str(&text)
                .map_err(|e| Error::Parse(format!("{}: {e}", config_path.display())))?,
        })
    }
}

fn check(name: &str, ok: bool, observed: Value, expected: Value, detail: impl Into<String>) -> AuditCheck {
    AuditCheck {
        name: name.into(),
        status: if ok { CheckStatus::Pass } else { CheckStatus::Fail },
        observed,
        expected,
        detail: detail.into(),
    }
}

fn skipped(name: &str, detail: impl Into<String>) -> AuditCheck {
    AuditCheck {
        name: name.into(),
        status: CheckStatus::Skipped,
        observed: Value::Null,
        expected: Value::Null,
        detail: detail.into(),
    }
}

/// Values for scenarios A, B and C, or `None` when one is missing.
fn abc<T: Copy>(items: &[(ScenarioKind, T)]) -> Option<[T; 3]> {
    let get = |k| items.iter().find(|(s, _)| *s == k).map(|(_, v)| *v);
    Some([
        get(ScenarioKind::Historical)?,
        get(ScenarioKind::DirectPromotion)?,
        get(ScenarioKind::SafetyNet)?,
    ])
}

fn abc_json(v: [f64; 3]) -> Value {
    json!({"A": v[0], "B": v[1], "C": v[2]})
}

fn row_count(inp: &AuditInputs) -> AuditCheck {
    let name = "row_count";
    let cfg = &inp.config;
    let n_scen = cfg["metadata"]["n_scenarios"]
        .as_u64()
        .or_else(|| cfg["scenarios"].as_object().map(|m| m.len() as u64));
    let (Some(cohort), Some(reps), Some(n_scen)) = (
        cfg["cohort_size"].as_u64(),
        cfg["replications_per_scenario"].as_u64(),
        n_scen,
    ) else {
        return skipped(name, "config lacks cohort_size, replications_per_scenario or scenarios");
    };
    let expected = cohort * n_scen * reps;
    let observed = inp.records.len() as u64;
    check(
        name,
        observed == expected,
        json!(observed),
        json!(expected),
        format!("{cohort} agents x {n_scen} scenarios x {reps} replications; {observed} records present"),
    )
}

fn metadata(inp: &AuditInputs) -> AuditCheck {
    let name = "metadata_matches_records";
    let meta = &inp.config["metadata"];
    if !meta.is_object() {
        return skipped(name, "config has no metadata block");
    }
    let groups = split_by_scenario(&inp.records);
    let labels: Vec<&str> = groups.iter().map(|(k, _)| k.label()).collect();
    let mut problems = Vec::new();
    let mut reps_seen = Vec::new();
    let mut sizes_seen = Vec::new();
    for (kind, rs) in &groups {
        let mut reps: Vec<usize> = rs.iter().map(|r| r.replication).collect();
        reps.sort_unstable();
        reps.dedup();
        reps_seen.push(reps.len());
        for rep in reps {
            sizes_seen.push(rs.iter().filter(|r| r.replication == rep).count());
        }
        if let Some(s) = inp.summary.iter().find(|s| s.scenario == *kind) {
            let n_reps = *reps_seen.last().unwrap_or(&0);
            if s.n_replications != n_reps {
                problems.push(format!("{kind}: summary n_replications {} vs {n_reps} in records", s.n_replications));
            }
        }
    }
    let want = |key: &str| meta[key].as_u64().map(|v| v as usize);
    if let Some(r) = want("n_replications_per_scenario") {
        if let Some(bad) = reps_seen.iter().find(|&&n| n != r) {
            problems.push(format!("{bad} replications observed, metadata says {r}"));
        }
    }
    if let Some(c) = want("cohort_size") {
        if let Some(bad) = sizes_seen.iter().find(|&&n| n != c) {
            problems.push(format!("replication with {bad} agents, metadata cohort_size {c}"));
        }
        for s in &inp.summary {
            if s.n_agents != c {
                problems.push(format!("{}: summary n_agents {} vs cohort_size {c}", s.scenario, s.n_agents));
            }
        }
    }
    if let Some(e) = want("expected_agent_records") {
        if e != inp.records.len() {
            problems.push(format!("expected_agent_records {e}, found {}", inp.records.len()));
        }
    }
    if let Some(ls) = meta["scenario_labels"].as_array() {
        let meta_labels: Vec<&str> = ls.iter().filter_map(Value::as_str).collect();
        if meta_labels != labels {
            problems.push(format!("scenario labels {meta_labels:?} vs {labels:?} in records"));
        }
    }
    check(
        name,
        problems.is_empty(),
        json!({"scenario_labels": labels, "replications": reps_seen, "records": inp.records.len()}),
        meta.clone(),
        if problems.is_empty() {
            "metadata agrees with the agent outcomes".to_string()
        } else {
            problems.join("; ")
        },
    )
}

fn curve_consistency(inp: &AuditInputs) -> AuditCheck {
    let name = "dropout_curve_consistency";
    let Some(horizon) = inp.config["horizon_semesters"].as_u64() else {
        return skipped(name, "config lacks horizon_semesters");
    };
    let mut problems = Vec::new();
    let mut observed = serde_json::Map::new();
    for (kind, rs) in split_by_scenario(&inp.records) {
        let recomputed = match km_dropout_curve(&rs, horizon as u32) {
            Ok(c) => c,
            Err(e) => {
                problems.push(format!("{kind}: {e}"));
                continue;
            }
        };
        let last = *recomputed.last().unwrap_or(&0.0);
        let summary = inp.summary.iter().find(|s| s.scenario == kind).map(|s| s.overall_dropout_rate);
        let file_last = inp
            .curves
            .iter()
            .filter(|c| c.scenario == kind)
            .max_by_key(|c| c.semester)
            .map(|c| c.cumulative_dropout);
        match summary {
            Some(s) if (s - last).abs() <= CONSISTENCY_TOLERANCE => {}
            Some(s) => problems.push(format!("{kind}: curve ends at {last}, summary dropout {s}")),
            None => problems.push(format!("{kind}: missing from summary")),
        }
        match file_last {
            Some(f) if (f - last).abs() <= CONSISTENCY_TOLERANCE => {}
            Some(f) => problems.push(format!("{kind}: {CURVES_FILE} ends at {f}, records give {last}")),
            None => problems.push(format!("{kind}: missing from {CURVES_FILE}")),
        }
        if recomputed.windows(2).any(|w| w[1] < w[0]) {
            problems.push(format!("{kind}: cumulative curve decreases"));
        }
        observed.insert(
            kind.key().into(),
            json!({"curve_final": last, "summary": summary, "curves_file_final": file_last}),
        );
    }
    check(
        name,
        problems.is_empty(),
        Value::Object(observed),
        json!({"tolerance": CONSISTENCY_TOLERANCE}),
        if problems.is_empty() {
            "final cumulative dropout equals overall dropout rate".to_string()
        } else {
            problems.join("; ")
        },
    )
}

fn summary_values(inp: &AuditInputs, f: impl Fn(&ScenarioSummary) -> f64) -> Option<[f64; 3]> {
    let items: Vec<(ScenarioKind, f64)> = inp.summary.iter().map(|s| (s.scenario, f(s))).collect();
    abc(&items)
}

fn dropout_ordering(inp: &AuditInputs) -> AuditCheck {
    let name = "dropout_ordering";
    match summary_values(inp, |s| s.overall_dropout_rate) {
        None => skipped(name, "needs scenarios A, B and C"),
        Some(v @ [a, b, c]) => check(name, a < c && c < b, abc_json(v), json!("A < C < B"), "overall dropout rate"),
    }
}

fn equity_ordering(inp: &AuditInputs) -> AuditCheck {
    let name = "equity_gap_ordering";
    match summary_values(inp, |s| s.equity_gap_low_vs_high_resilience) {
        None => skipped(name, "needs scenarios A, B and C"),
        Some(v @ [a, b, c]) => check(
            name,
            a < c && c < b,
            abc_json(v),
            json!("gap A < gap C < gap B"),
            "LOW minus HIGH resilience dropout",
        ),
    }
}

fn stress_ordering(inp: &AuditInputs) -> AuditCheck {
    let name = "stress_ordering";
    let mut items = Vec::new();
    for (kind, rs) in split_by_scenario(&inp.records) {
        match final_psych_means(&rs) {
            Ok((s, _)) => items.push((kind, s)),
            Err(e) => return check(name, false, Value::Null, json!("C <= B < A"), e.to_string()),
        }
    }
    match abc(&items) {
        None => skipped(name, "needs scenarios A, B and C"),
        Some(v @ [a, b, c]) => check(
            name,
            c <= b && b < a,
            abc_json(v),
            json!("C <= B < A"),
            "mean final stress over all agents",
        ),
    }
}

fn debt_bounds(inp: &AuditInputs) -> AuditCheck {
    let name = "debt_bounds";
    let get = |k| inp.summary.iter().find(|s| s.scenario == k).map(|s| s.mean_final_debt);
    let b = get(ScenarioKind::DirectPromotion);
    let c = get(ScenarioKind::SafetyNet);
    if b.is_none() && c.is_none() {
        return skipped(name, "needs scenario B or C");
    }
    let ok = b.is_none_or(|b| b == 0.0) && c.is_none_or(|c| c <= SAFETY_NET_DEBT_BOUND);
    check(
        name,
        ok,
        json!({"B": b, "C": c}),
        json!({"B": 0.0, "C_max": SAFETY_NET_DEBT_BOUND}),
        "mean final debt under promotion regimes",
    )
}

fn opt_close(a: Option<f64>, b: Option<f64>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(x), Some(y)) => (x - y).abs() <= CONSISTENCY_TOLERANCE,
        _ => false,
    }
}

fn summary_mismatches(file: &ScenarioSummary, derived: &ScenarioSummary) -> Vec<&'static str> {
    let pairs: [(&str, Option<f64>, Option<f64>); 16] = [
        ("n_agents", Some(file.n_agents as f64), Some(derived.n_agents as f64)),
        ("n_replications", Some(file.n_replications as f64), Some(derived.n_replications as f64)),
        ("overall_dropout_rate", Some(file.overall_dropout_rate), Some(derived.overall_dropout_rate)),
        ("overall_graduation_rate", Some(file.overall_graduation_rate), Some(derived.overall_graduation_rate)),
        ("normative_dropout_frac", file.normative_dropout_frac, derived.normative_dropout_frac),
        ("academic_dropout_frac", file.academic_dropout_frac, derived.academic_dropout_frac),
        ("other_dropout_frac", file.other_dropout_frac, derived.other_dropout_frac),
        ("mean_time_to_event", file.mean_time_to_event, derived.mean_time_to_event),
        ("median_time_to_event", file.median_time_to_event, derived.median_time_to_event),
        ("mean_final_debt", Some(file.mean_final_debt), Some(derived.mean_final_debt)),
        ("mean_killer_failures", Some(file.mean_killer_failures), Some(derived.mean_killer_failures)),
        ("mean_remedial_acceptances", Some(file.mean_remedial_acceptances), Some(derived.mean_remedial_acceptances)),
        (
            "equity_gap_low_vs_high_resilience",
            Some(file.equity_gap_low_vs_high_resilience),
            Some(derived.equity_gap_low_vs_high_resilience),
        ),
        ("dropout_rate_low_resilience", Some(file.dropout_rate_low_resilience), Some(derived.dropout_rate_low_resilience)),
        ("dropout_rate_high_resilience", Some(file.dropout_rate_high_resilience), Some(derived.dropout_rate_high_resilience)),
        ("scenario", Some(0.0), Some(if file.scenario == derived.scenario { 0.0 } else { 1.0 })),
    ];
    pairs
        .into_iter()
        .filter(|(_, a, b)| !opt_close(*a, *b))
        .map(|(n, _, _)| n)
        .collect()
}

fn summary_derivable(inp: &AuditInputs) -> AuditCheck {
    let name = "summary_derivable_from_records";
    let derived = match summarize_by_scenario(&inp.records) {
        Ok(d) => d,
        Err(e) => return check(name, false, Value::Null, Value::Null, e.to_string()),
    };
    let mut problems = Vec::new();
    if derived.len() != inp.summary.len() {
        problems.push(format!("{} summary rows, records cover {} scenarios", inp.summary.len(), derived.len()));
    }
    for d in &derived {
        match inp.summary.iter().find(|s| s.scenario == d.scenario) {
            None => problems.push(format!("{}: no summary row", d.scenario)),
            Some(s) => {
                let bad = summary_mismatches(s, d);
                if !bad.is_empty() {
                    problems.push(format!("{}: {}", d.scenario, bad.join(", ")));
                }
            }
        }
    }
    check(
        name,
        problems.is_empty(),
        json!(problems),
        json!([]),
        if problems.is_empty() {
            "every summary column recomputes from the agent outcomes".to_string()
        } else {
            format!("columns differ: {}", problems.join("; "))
        },
    )
}

/// Runs every check on already parsed run data.
pub fn audit_records(inputs: &AuditInputs) -> AuditReport {
    let checks = vec![
        row_count(inputs),
        metadata(inputs),
        curve_consistency(inputs),
        dropout_ordering(inputs),
        equity_ordering(inputs),
        stress_ordering(inputs),
        debt_bounds(inputs),
        summary_derivable(inputs),
    ];
    AuditReport {
        passed: checks.iter().all(|c| c.status != CheckStatus::Fail),
        checks,
    }
}

/// Audits a run directory. Missing or unparseable files are errors, not
/// failed checks.
pub fn audit(dir: &Path) -> Result<AuditReport> {
    Ok(audit_records(&AuditInputs::load(dir)?))
}

pub fn write_audit_report(dir: &Path, report: &AuditReport) -> Result<()> {
    write_json(&dir.join(AUDIT_REPORT_FILE), report)
}
