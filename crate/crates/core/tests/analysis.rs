//! Summary, curve and trajectory computations against hand-worked values.

use promowall::analysis::{
    audit_records, equity_gap, final_psych_means, km_dropout_curve, psychosocial_trajectories, summarize_scenario,
    AuditInputs, CheckStatus,
};
use promowall::engine::{ReplicationResult, SemesterAggregate};
use promowall::output::AgentRecord;
use promowall::population::{AgentState, AgentStatus, DropoutCause, Resilience};
use promowall::ScenarioKind;

#[allow(clippy::too_many_arguments)]
fn rec(
    rep: usize,
    id: u32,
    res: Resilience,
    status: AgentStatus,
    drop: Option<(u32, DropoutCause)>,
    stress: f64,
    debt: usize,
    killers: u32,
) -> AgentRecord {
    AgentRecord {
        scenario: ScenarioKind::Historical,
        replication: rep,
        agent_id: id,
        archetype_id: 1,
        resilience: res,
        status,
        dropout_semester: drop.map(|d| d.0),
        dropout_cause: drop.map(|d| d.1),
        final_stress: stress,
        final_belonging: 0.5,
        final_debt: debt,
        killer_failures: killers,
        remedial_acceptances: 0,
        courses_passed: 10,
    }
}

/// Two replications of two agents each.
fn four() -> Vec<AgentRecord> {
    use AgentStatus::*;
    use Resilience::*;
    vec![
        rec(0, 0, Low, Dropped, Some((3, DropoutCause::Normative)), 0.8, 4, 2),
        rec(0, 1, High, Graduated, None, 0.2, 0, 1),
        rec(1, 0, Low, Dropped, Some((6, DropoutCause::Academic)), 0.7, 1, 3),
        rec(1, 1, High, Dropped, Some((10, DropoutCause::Other)), 0.4, 0, 0),
    ]
}

#[test]
fn four_agent_summary_by_hand() {
    let s = summarize_scenario(&four()).unwrap();
    // rep 0: 1 of 2 dropped, rep 1: 2 of 2
    assert_eq!(s.overall_dropout_rate, (0.5 + 1.0) / 2.0);
    assert_eq!(s.overall_graduation_rate, (0.5 + 0.0) / 2.0);
    assert_eq!(s.n_agents, 2);
    assert_eq!(s.n_replications, 2);
    let third = 1.0 / 3.0;
    assert_eq!(s.normative_dropout_frac, Some(third));
    assert_eq!(s.academic_dropout_frac, Some(third));
    assert_eq!(s.other_dropout_frac, Some(third));
    assert_eq!(s.mean_time_to_event, Some(19.0 / 3.0));
    assert_eq!(s.median_time_to_event, Some(6.0));
    assert_eq!(s.mean_final_debt, (2.0 + 0.5) / 2.0);
    assert_eq!(s.mean_killer_failures, (1.5 + 1.5) / 2.0);
    assert_eq!(s.dropout_rate_low_resilience, 1.0);
    assert_eq!(s.dropout_rate_high_resilience, 0.5);
    assert_eq!(
        s.equity_gap_low_vs_high_resilience,
        s.dropout_rate_low_resilience - s.dropout_rate_high_resilience
    );
    let fracs = [s.normative_dropout_frac, s.academic_dropout_frac, s.other_dropout_frac];
    assert!((fracs.iter().map(|f| f.unwrap()).sum::<f64>() - 1.0).abs() < 1e-9);
}

#[test]
fn equity_gap_examples() {
    // 1000 LOW agents with 543 dropouts and 1000 HIGH with 385
    let mut rs = Vec::new();
    for i in 0..1000u32 {
        let drop = |k: u32| (i < k).then_some((4, DropoutCause::Other));
        let st = |k: u32| if i < k { AgentStatus::Dropped } else { AgentStatus::Active };
        rs.push(rec(0, 2 * i, Resilience::Low, st(543), drop(543), 0.5, 0, 0));
        rs.push(rec(0, 2 * i + 1, Resilience::High, st(385), drop(385), 0.5, 0, 0));
    }
    let g = equity_gap(&rs, Resilience::Low, Resilience::High).unwrap();
    assert!((g - 0.158).abs() < 1e-12);
    assert_eq!(equity_gap(&rs, Resilience::Low, Resilience::Low).unwrap(), 0.0);
}

#[test]
fn curve_ends_at_overall_rate() {
    let rs = four();
    let curve = km_dropout_curve(&rs, 12).unwrap();
    assert_eq!(curve[1], 0.0);
    assert_eq!(curve[2], 0.25);
    assert_eq!(curve[5], 0.5);
    assert_eq!(curve[9], 0.75);
    assert_eq!(*curve.last().unwrap(), summarize_scenario(&rs).unwrap().overall_dropout_rate);
}

#[test]
fn no_dropouts_gives_zero_curve() {
    let rs: Vec<_> = four()
        .into_iter()
        .map(|mut r| {
            r.status = AgentStatus::Graduated;
            r.dropout_semester = None;
            r.dropout_cause = None;
            r
        })
        .collect();
    assert!(km_dropout_curve(&rs, 12).unwrap().iter().all(|&v| v == 0.0));
}

#[test]
fn final_means_include_dropped_agents() {
    let rs = vec![
        rec(0, 0, Resilience::Low, AgentStatus::Dropped, Some((1, DropoutCause::Other)), 0.9, 0, 0),
        rec(0, 1, Resilience::High, AgentStatus::Active, None, 0.3, 0, 0),
    ];
    assert!((final_psych_means(&rs).unwrap().0 - 0.6).abs() < 1e-12);
}

#[test]
fn active_means_exclude_dropped_agents() {
    let mut dropped = AgentState::new(0, 0, 0.9, 0.2);
    dropped.status = AgentStatus::Dropped;
    dropped.dropout_semester = Some(1);
    let survivor = AgentState::new(1, 0, 0.3, 0.7);
    let agg = |semester, active, dropped, s, b| SemesterAggregate {
        semester,
        active,
        dropped,
        graduated: 0,
        stress_sum_active: s,
        belonging_sum_active: b,
    };
    let r = ReplicationResult {
        scenario: ScenarioKind::Historical,
        replication: 0,
        seed: 0,
        agents: vec![dropped, survivor],
        semesters: vec![agg(1, 1, 1, 0.3, 0.7), agg(2, 1, 1, 0.3, 0.7)],
        remedial_rounds: vec![],
        clamped_frictions: vec![],
    };
    let t = psychosocial_trajectories(&[r]).unwrap();
    assert_eq!(t.mean_stress_active, vec![Some(0.3), Some(0.3)]);
    assert_eq!(t.mean_belonging_active, vec![Some(0.7), Some(0.7)]);
    assert_eq!(t.cumulative_dropout_fraction, vec![0.5, 0.5]);
    assert!((t.final_mean_stress - 0.6).abs() < 1e-12);
}

#[test]
fn audit_flags_summary_label_swap() {
    // three scenarios whose records respect every ordering
    let mut records = Vec::new();
    for (kind, low_drops, high_drops, stress) in [
        (ScenarioKind::Historical, 5, 4, 0.9),
        (ScenarioKind::DirectPromotion, 10, 5, 0.7),
        (ScenarioKind::SafetyNet, 8, 6, 0.6),
    ] {
        for i in 0..10u32 {
            for (res, k, off) in [(Resilience::Low, low_drops, 0), (Resilience::High, high_drops, 10)] {
                let dropped = i < k;
                let mut r = rec(
                    0,
                    i + off,
                    res,
                    if dropped { AgentStatus::Dropped } else { AgentStatus::Active },
                    dropped.then_some((2, DropoutCause::Other)),
                    stress,
                    0,
                    0,
                );
                r.scenario = kind;
                records.push(r);
            }
        }
    }
    let summary = promowall::analysis::summarize_by_scenario(&records).unwrap();
    let curves: Vec<_> = summary
        .iter()
        .map(|s| promowall::analysis::CurveRow {
            scenario: s.scenario,
            semester: 12,
            cumulative_dropout: s.overall_dropout_rate,
            mean_stress_active: None,
            mean_belonging_active: None,
        })
        .collect();
    let config = serde_json::json!({
        "cohort_size": 20, "replications_per_scenario": 1, "horizon_semesters": 12,
        "metadata": {"n_scenarios": 3}
    });
    let clean = AuditInputs {
        records: records.clone(),
        summary: summary.clone(),
        curves: curves.clone(),
        config: config.clone(),
    };
    let report = audit_records(&clean);
    assert!(report.passed, "{:#?}", report.failed().collect::<Vec<_>>());

    let mut swapped = clean.clone();
    for s in &mut swapped.summary {
        s.scenario = match s.scenario {
            ScenarioKind::Historical => ScenarioKind::DirectPromotion,
            ScenarioKind::DirectPromotion => ScenarioKind::Historical,
            k => k,
        };
    }
    let report = audit_records(&swapped);
    let status = |n: &str| report.check(n).unwrap().status;
    assert_eq!(status("dropout_ordering"), CheckStatus::Fail);
    assert_eq!(status("equity_gap_ordering"), CheckStatus::Fail);
    assert_eq!(status("summary_derivable_from_records"), CheckStatus::Fail);

    // swapping the labels in the agent records as well flips the stress check
    for r in &mut swapped.records {
        r.scenario = match r.scenario {
            ScenarioKind::Historical => ScenarioKind::DirectPromotion,
            ScenarioKind::DirectPromotion => ScenarioKind::Historical,
            k => k,
        };
    }
    let report = audit_records(&swapped);
    for n in ["dropout_ordering", "equity_gap_ordering", "stress_ordering"] {
        assert_eq!(report.check(n).unwrap().status, CheckStatus::Fail, "{n}");
    }
}
