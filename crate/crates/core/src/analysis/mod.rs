//! Survival curves, equity gaps, psychosocial trajectories and the
//! per-scenario summary. Everything except the active-agent trajectories is
//! computed from agent records alone, so a run directory can be re-derived
//! from its agent outcomes file.
//!
//! Pooling across replications is the mean of per-replication rates.

mod audit;
mod svg;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::engine::{ExperimentResult, ReplicationResult};
use crate::error::{Error, Result};
use crate::output::AgentRecord;
use crate::policy::ScenarioKind;
use crate::population::{AgentStatus, DropoutCause, Resilience};

pub use audit::{audit, audit_records, CONSISTENCY_TOLERANCE, SAFETY_NET_DEBT_BOUND, write_audit_report, AuditCheck, AuditInputs, AuditReport, CheckStatus};
pub use svg::{render, write_figures, Figure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub scenario: ScenarioKind,
    /// Agents per replication.
    pub n_agents: usize,
    pub n_replications: usize,
    pub overall_dropout_rate: f64,
    pub overall_graduation_rate: f64,
    /// Cause fractions are over dropped agents; absent when nobody dropped.
    pub normative_dropout_frac: Option<f64>,
    pub academic_dropout_frac: Option<f64>,
    pub other_dropout_frac: Option<f64>,
    /// Semesters from entry to dropout, over dropped agents.
    pub mean_time_to_event: Option<f64>,
    pub median_time_to_event: Option<f64>,
    pub mean_final_debt: f64,
    pub mean_killer_failures: f64,
    pub mean_remedial_acceptances: f64,
    pub equity_gap_low_vs_high_resilience: f64,
    pub dropout_rate_low_resilience: f64,
    pub dropout_rate_high_resilience: f64,
}

/// Records of one scenario grouped by replication index.
fn by_replication<'a>(records: &[&'a AgentRecord]) -> BTreeMap<usize, Vec<&'a AgentRecord>> {
    let mut map: BTreeMap<usize, Vec<&AgentRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.replication).or_default().push(r);
    }
    map
}

fn single_scenario(records: &[AgentRecord]) -> Result<(ScenarioKind, Vec<&AgentRecord>)> {
    let first = records
        .first()
        .ok_or_else(|| Error::Analysis("no agent records".into()))?;
    if records.iter().any(|r| r.scenario != first.scenario) {
        return Err(Error::Analysis("records mix several scenarios".into()));
    }
    Ok((first.scenario, records.iter().collect()))
}

/// Mean over replications of the per-replication share satisfying `pred`
/// among agents selected by `within`. Replications with no selected agent
/// are skipped; `None` if none qualifies.
fn pooled_rate(
    reps: &BTreeMap<usize, Vec<&AgentRecord>>,
    within: impl Fn(&AgentRecord) -> bool,
    pred: impl Fn(&AgentRecord) -> bool,
) -> Option<f64> {
    let mut sum = 0.0;
    let mut count = 0usize;
    for agents in reps.values() {
        let selected: Vec<_> = agents.iter().filter(|a| within(a)).collect();
        if selected.is_empty() {
            continue;
        }
        sum += selected.iter().filter(|a| pred(a)).count() as f64 / selected.len() as f64;
        count += 1;
    }
    (count > 0).then(|| sum / count as f64)
}

fn pooled_mean(reps: &BTreeMap<usize, Vec<&AgentRecord>>, value: impl Fn(&AgentRecord) -> f64) -> f64 {
    reps.values()
        .map(|agents| agents.iter().map(|a| value(a)).sum::<f64>() / agents.len() as f64)
        .sum::<f64>()
        / reps.len() as f64
}

fn is_dropped(a: &AgentRecord) -> bool {
    a.status == AgentStatus::Dropped
}

/// Dropout rate of one resilience class in one scenario's records.
pub fn class_dropout_rate(records: &[AgentRecord], class: Resilience) -> Result<f64> {
    let (_, all) = single_scenario(records)?;
    pooled_rate(&by_replication(&all), |a| a.resilience == class, is_dropped)
        .ok_or_else(|| Error::Analysis(format!("no agents with resilience {}", class.as_str())))
}

/// `dropout(class_low) - dropout(class_high)`.
pub fn equity_gap(records: &[AgentRecord], class_low: Resilience, class_high: Resilience) -> Result<f64> {
    Ok(class_dropout_rate(records, class_low)? - class_dropout_rate(records, class_high)?)
}

fn median(sorted: &[f64]) -> Option<f64> {
    let n = sorted.len();
    match n {
        0 => None,
        _ if n % 2 == 1 => Some(sorted[n / 2]),
        _ => Some(0.5 * (sorted[n / 2 - 1] + sorted[n / 2])),
    }
}

/// Summary row for the records of one scenario.
pub fn summarize_scenario(records: &[AgentRecord]) -> Result<ScenarioSummary> {
    let (scenario, all) = single_scenario(records)?;
    let reps = by_replication(&all);
    let sizes: Vec<usize> = reps.values().map(Vec::len).collect();
    if sizes.windows(2).any(|w| w[0] != w[1]) {
        return Err(Error::Analysis(format!(
            "{scenario}: replications have different cohort sizes {sizes:?}"
        )));
    }
    let everyone = |_: &AgentRecord| true;
    let dropped: Vec<&AgentRecord> = all.iter().copied().filter(|a| is_dropped(a)).collect();
    let frac = |cause: DropoutCause| {
        (!dropped.is_empty()).then(|| {
            dropped.iter().filter(|a| a.dropout_cause == Some(cause)).count() as f64 / dropped.len() as f64
        })
    };
    let mut times: Vec<f64> = dropped
        .iter()
        .map(|a| {
            a.dropout_semester.map(f64::from).ok_or_else(|| {
                Error::Analysis(format!(
                    "{scenario} replication {} agent {}: dropped without a dropout semester",
                    a.replication, a.agent_id
                ))
            })
        })
        .collect::<Result<_>>()?;
    times.sort_by(f64::total_cmp);
    let class = |c: Resilience| {
        pooled_rate(&reps, |a| a.resilience == c, is_dropped)
            .ok_or_else(|| Error::Analysis(format!("{scenario}: no agents with resilience {}", c.as_str())))
    };
    let low = class(Resilience::Low)?;
    let high = class(Resilience::High)?;
    Ok(ScenarioSummary {
        scenario,
        n_agents: sizes[0],
        n_replications: reps.len(),
        overall_dropout_rate: pooled_rate(&reps, everyone, is_dropped).unwrap_or(0.0),
        overall_graduation_rate: pooled_rate(&reps, everyone, |a| a.status == AgentStatus::Graduated)
            .unwrap_or(0.0),
        normative_dropout_frac: frac(DropoutCause::Normative),
        academic_dropout_frac: frac(DropoutCause::Academic),
        other_dropout_frac: frac(DropoutCause::Other),
        mean_time_to_event: (!times.is_empty()).then(|| times.iter().sum::<f64>() / times.len() as f64),
        median_time_to_event: median(&times),
        mean_final_debt: pooled_mean(&reps, |a| a.final_debt as f64),
        mean_killer_failures: pooled_mean(&reps, |a| a.killer_failures as f64),
        mean_remedial_acceptances: pooled_mean(&reps, |a| a.remedial_acceptances as f64),
        equity_gap_low_vs_high_resilience: low - high,
        dropout_rate_low_resilience: low,
        dropout_rate_high_resilience: high,
    })
}

/// Splits mixed records by scenario, in A, B, C order.
pub fn split_by_scenario(records: &[AgentRecord]) -> Vec<(ScenarioKind, Vec<AgentRecord>)> {
    let mut map: BTreeMap<ScenarioKind, Vec<AgentRecord>> = BTreeMap::new();
    for r in records {
        map.entry(r.scenario).or_default().push(r.clone());
    }
    map.into_iter().collect()
}

pub fn summarize_by_scenario(records: &[AgentRecord]) -> Result<Vec<ScenarioSummary>> {
    split_by_scenario(records)
        .iter()
        .map(|(_, rs)| summarize_scenario(rs))
        .collect()
}

/// Cumulative dropout fraction at the end of semesters `1..=horizon` for
/// one scenario's records.
pub fn km_dropout_curve(records: &[AgentRecord], horizon: u32) -> Result<Vec<f64>> {
    let (_, all) = single_scenario(records)?;
    let reps = by_replication(&all);
    Ok((1..=horizon)
        .map(|s| {
            pooled_rate(&reps, |_| true, |a| {
                is_dropped(a) && a.dropout_semester.is_some_and(|d| d <= s)
            })
            .unwrap_or(0.0)
        })
        .collect())
}

/// Yearly view of [`km_dropout_curve`]: semesters 2k-1 and 2k form year k.
pub fn yearly_from_semesters(curve: &[f64]) -> Vec<f64> {
    curve.iter().skip(1).step_by(2).copied().collect()
}

/// Mean final stress and belonging over every agent; dropped agents count
/// with their values at dropout.
pub fn final_psych_means(records: &[AgentRecord]) -> Result<(f64, f64)> {
    let (_, all) = single_scenario(records)?;
    let reps = by_replication(&all);
    Ok((
        pooled_mean(&reps, |a| a.final_stress),
        pooled_mean(&reps, |a| a.final_belonging),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectorySeries {
    /// Index `s - 1` holds semester `s`. `None` when no agent was active.
    pub mean_stress_active: Vec<Option<f64>>,
    pub mean_belonging_active: Vec<Option<f64>>,
    pub cumulative_dropout_fraction: Vec<f64>,
    pub final_mean_stress: f64,
    pub final_mean_belonging: f64,
}

/// Active-agent means per semester (mean over replications that still had
/// active agents) and final means over all agents.
pub fn psychosocial_trajectories(results: &[ReplicationResult]) -> Result<TrajectorySeries> {
    let first = results
        .first()
        .ok_or_else(|| Error::Analysis("no replications".into()))?;
    let horizon = first.semesters.len();
    if results.iter().any(|r| r.semesters.len() != horizon) {
        return Err(Error::Analysis("replications cover different horizons".into()));
    }
    let active_mean = |f: &dyn Fn(&crate::engine::SemesterAggregate) -> Option<f64>, s: usize| {
        let vals: Vec<f64> = results.iter().filter_map(|r| f(&r.semesters[s])).collect();
        (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
    };
    let per_rep_final = |f: &dyn Fn(&crate::population::AgentState) -> f64| {
        results
            .iter()
            .map(|r| r.agents.iter().map(f).sum::<f64>() / r.agents.len().max(1) as f64)
            .sum::<f64>()
            / results.len() as f64
    };
    Ok(TrajectorySeries {
        mean_stress_active: (0..horizon).map(|s| active_mean(&|a| a.mean_stress_active(), s)).collect(),
        mean_belonging_active: (0..horizon)
            .map(|s| active_mean(&|a| a.mean_belonging_active(), s))
            .collect(),
        cumulative_dropout_fraction: (0..horizon)
            .map(|s| {
                results
                    .iter()
                    .map(|r| r.semesters[s].dropped as f64 / r.agents.len().max(1) as f64)
                    .sum::<f64>()
                    / results.len() as f64
            })
            .collect(),
        final_mean_stress: per_rep_final(&|a| a.stress),
        final_mean_belonging: per_rep_final(&|a| a.belonging),
    })
}

/// One row of the dropout curves file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub scenario: ScenarioKind,
    pub semester: u32,
    pub cumulative_dropout: f64,
    pub mean_stress_active: Option<f64>,
    pub mean_belonging_active: Option<f64>,
}

/// Curve rows for every scenario of a finished experiment. The cumulative
/// column comes from agent records so it matches a recomputation from the
/// outcomes file bit for bit.
pub fn curve_rows(result: &ExperimentResult, horizon: u32) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    for kind in result.scenarios() {
        let reps: Vec<ReplicationResult> = result.for_scenario(kind).cloned().collect();
        let traj = psychosocial_trajectories(&reps)?;
        let records: Vec<AgentRecord> = reps
            .iter()
            .flat_map(|r| {
                r.agents.iter().map(move |a| AgentRecord {
                    scenario: kind,
                    replication: r.replication,
                    agent_id: a.agent_id,
                    archetype_id: 0,
                    resilience: Resilience::Medium,
                    status: a.status,
                    dropout_semester: a.dropout_semester,
                    dropout_cause: a.dropout_cause,
                    final_stress: a.stress,
                    final_belonging: a.belonging,
                    final_debt: a.finals_debt.len(),
                    killer_failures: a.killer_failures,
                    remedial_acceptances: a.remedial_acceptances,
                    courses_passed: a.transcript.passed_count(),
                })
            })
            .collect();
        let cumulative = km_dropout_curve(&records, horizon)?;
        for (i, c) in cumulative.into_iter().enumerate() {
            rows.push(CurveRow {
                scenario: kind,
                semester: i as u32 + 1,
                cumulative_dropout: c,
                mean_stress_active: traj.mean_stress_active[i],
                mean_belonging_active: traj.mean_belonging_active[i],
            });
        }
    }
    Ok(rows)
}

/// Curve rows recomputed from agent records. Active-agent means cannot be
/// derived from final records; they are carried over from `previous` when
/// a matching row exists.
pub fn curve_rows_from_records(
    records: &[AgentRecord],
    horizon: u32,
    previous: &[CurveRow],
) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    for (kind, rs) in split_by_scenario(records) {
        for (i, c) in km_dropout_curve(&rs, horizon)?.into_iter().enumerate() {
            let semester = i as u32 + 1;
            let old = previous.iter().find(|r| r.scenario == kind && r.semester == semester);
            rows.push(CurveRow {
                scenario: kind,
                semester,
                cumulative_dropout: c,
                mean_stress_active: old.and_then(|r| r.mean_stress_active),
                mean_belonging_active: old.and_then(|r| r.mean_belonging_active),
            });
        }
    }
    Ok(rows)
}
