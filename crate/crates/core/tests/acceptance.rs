//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Runs calibration and the full
//! 20-replication experiment once and shares them between criteria.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use promowall::analysis::{audit, final_psych_means, split_by_scenario, summarize_by_scenario, CheckStatus};
use promowall::calibration::{
    calibrate, simulate_yearly_curve, yearly_cumulative_dropout, CalibrationParams, CalibrationResult,
    CalibrationSettings, EmpiricalCurve,
};
use promowall::config::Experiment;
use promowall::engine::{run_experiment, ExperimentResult};
use promowall::output::{agent_records, write_agent_outcomes, write_run, AgentRecord};
use promowall::policy::{attempt_course_regularity, AttemptResult, ScenarioPolicy};
use promowall::population::AgentState;
use promowall::psychodynamics::{dropout_hazard, HazardParams};
use promowall::rng::CounterRng;
use promowall::ScenarioKind::{self, DirectPromotion as B, Historical as A, SafetyNet as C};

const RMSE_TOLERANCE: f64 = 0.05;
const CALIBRATION_BUDGET: Duration = Duration::from_secs(600);
const MAX_GRID_POINTS: usize = 3_125;
const CALIBRATION_REPLICATIONS: usize = 5;
const EXPERIMENT_REPLICATIONS: usize = 20;
const EXPERIMENT_BUDGET: Duration = Duration::from_secs(300);
const SEPARATION_IN_STDS: f64 = 2.0;
const EXPECTED_RECORDS: usize = 1_343 * 3 * 20;
const CURVE_TOLERANCE: f64 = 1e-9;
const HAZARD_TOLERANCE: f64 = 1e-12;
const MONTE_CARLO_DRAWS: usize = 100_000;
const MONTE_CARLO_TOLERANCE: f64 = 0.01;
const SELF_CALIBRATION_SEEDS: (u64, u64) = (1_001, 2_002);

struct Outcome {
    ok: bool,
    detail: String,
}

fn outcome(ok: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        ok,
        detail: detail.into(),
    }
}

struct Shared {
    calibrated: Experiment,
    calibration: CalibrationResult,
    calibration_time: Duration,
    result: ExperimentResult,
    run_time: Duration,
    records: Vec<AgentRecord>,
}

fn by_kind<T: Copy>(items: &[(ScenarioKind, T)], k: ScenarioKind) -> T {
    items.iter().find(|(s, _)| *s == k).expect("scenario present").1
}

fn per_rep_dropout(result: &ExperimentResult, k: ScenarioKind) -> Vec<f64> {
    result
        .for_scenario(k)
        .map(|r| {
            r.agents.iter().filter(|a| a.dropout_semester.is_some()).count() as f64 / r.agents.len() as f64
        })
        .collect()
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, v.sqrt())
}

fn c1_calibration(s: &Shared) -> Outcome {
    let c = &s.calibration;
    let ok = c.achieved_rmse <= RMSE_TOLERANCE
        && s.calibration_time <= CALIBRATION_BUDGET
        && c.grid_size <= MAX_GRID_POINTS
        && c.replications == CALIBRATION_REPLICATIONS
        && c.pruned_count > 0;
    outcome(
        ok,
        format!(
            "rmse {:.4} (<= {RMSE_TOLERANCE}), {:.1}s (<= {}s), {} grid points (<= {MAX_GRID_POINTS}), {} replications, {} pruned early",
            c.achieved_rmse,
            s.calibration_time.as_secs_f64(),
            CALIBRATION_BUDGET.as_secs(),
            c.grid_size,
            c.replications,
            c.pruned_count
        ),
    )
}

fn c2_dropout_ordering(s: &Shared) -> Outcome {
    let stats: Vec<(ScenarioKind, (f64, f64))> =
        ScenarioKind::ALL.iter().map(|&k| (k, mean_std(&per_rep_dropout(&s.result, k)))).collect();
    let (a, sa) = by_kind(&stats, A);
    let (b, sb) = by_kind(&stats, B);
    let (c, _) = by_kind(&stats, C);
    let pooled = ((sa * sa + sb * sb) / 2.0).sqrt();
    let reps = s.result.for_scenario(A).count();
    let ok = a < c
        && c < b
        && b - a > SEPARATION_IN_STDS * pooled
        && reps == EXPERIMENT_REPLICATIONS
        && s.run_time <= EXPERIMENT_BUDGET;
    outcome(
        ok,
        format!(
            "dropout A {a:.3} < C {c:.3} < B {b:.3}; B-A {:.3} vs {SEPARATION_IN_STDS} x pooled std {pooled:.4}; {reps} replications in {:.1}s",
            b - a,
            s.run_time.as_secs_f64()
        ),
    )
}

fn c3_equity(s: &Shared) -> Outcome {
    let summary = summarize_by_scenario(&s.records).expect("summary");
    let gaps: Vec<(ScenarioKind, f64)> =
        summary.iter().map(|r| (r.scenario, r.equity_gap_low_vs_high_resilience)).collect();
    let (a, b, c) = (by_kind(&gaps, A), by_kind(&gaps, B), by_kind(&gaps, C));
    outcome(
        0.0 < a && a < c && c < b,
        format!("gap A {a:.3} < gap C {c:.3} < gap B {b:.3}, all positive"),
    )
}

fn c4_stress(s: &Shared) -> Outcome {
    let stress: Vec<(ScenarioKind, f64)> = split_by_scenario(&s.records)
        .into_iter()
        .map(|(k, rs)| (k, final_psych_means(&rs).expect("means").0))
        .collect();
    let (a, b, c) = (by_kind(&stress, A), by_kind(&stress, B), by_kind(&stress, C));
    outcome(c <= b && b < a, format!("mean final stress C {c:.3} <= B {b:.3} < A {a:.3}"))
}

fn c5_debt_and_remedial(s: &Shared) -> Outcome {
    let summary = summarize_by_scenario(&s.records).expect("summary");
    let get = |k| summary.iter().find(|r| r.scenario == k).expect("row");
    let b_debt = get(B).mean_final_debt;
    let acc = |k| get(k).mean_remedial_acceptances;
    let rounds: Vec<_> = s.result.for_scenario(C).flat_map(|r| &r.remedial_rounds).collect();
    let within = rounds.iter().all(|r| r.accepted <= r.capacity);
    let sound = rounds.iter().all(|r| r.priority_sound);
    let ok = b_debt == 0.0 && acc(C) > 0.0 && acc(A) == 0.0 && acc(B) == 0.0 && within && sound && !rounds.is_empty();
    outcome(
        ok,
        format!(
            "B debt {b_debt}; acceptances A {} B {} C {:.3}; {} rounds, capacity respected {within}, priority sound {sound}",
            acc(A),
            acc(B),
            acc(C),
            rounds.len()
        ),
    )
}

fn c6_audit(s: &Shared) -> Outcome {
    let dir = tempfile::tempdir().expect("tempdir");
    write_run(dir.path(), &s.calibrated, &s.result, None).expect("write run");
    let report = audit(dir.path()).expect("audit");
    let curve_ok = report.check("dropout_curve_consistency").map(|c| c.status) == Some(CheckStatus::Pass);
    let count_ok = report.check("row_count").is_some_and(|c| c.status == CheckStatus::Pass && c.observed == EXPECTED_RECORDS);
    let failed: Vec<&str> = report.failed().map(|c| c.name.as_str()).collect();
    outcome(
        report.passed && curve_ok && count_ok,
        format!(
            "{} checks, failed {failed:?}; curve consistency within {CURVE_TOLERANCE}: {curve_ok}; {EXPECTED_RECORDS} records: {count_ok}",
            report.checks.len()
        ),
    )
}

fn c7_determinism(s: &Shared) -> Outcome {
    let sequential = run_experiment(&s.calibrated, false).expect("sequential run");
    let csv = |r: &ExperimentResult| {
        let mut buf = Vec::new();
        write_agent_outcomes(&mut buf, &agent_records(&s.calibrated, r)).expect("csv");
        buf
    };
    let (p, q) = (csv(&s.result), csv(&sequential));
    outcome(p == q, format!("parallel and sequential agent CSVs identical ({} bytes)", p.len()))
}

fn c8_unit_oracles() -> Outcome {
    let h = HazardParams {
        alpha0: -4.0,
        alpha1: 4.0,
        alpha2: -2.0,
    };
    // logistic through tanh, independent of the model's exp form
    let oracle = |s: f64, b: f64| 0.5 * (1.0 + (0.5 * (h.alpha0 + h.alpha1 * s + h.alpha2 * b)).tanh());
    let grid: Vec<f64> = (0..10).map(|i| i as f64 / 9.0).collect();
    let mut max_err: f64 = 0.0;
    for &s in &grid {
        for &b in &grid {
            max_err = max_err.max((dropout_hazard(s, b, &h) - oracle(s, b)).abs());
        }
    }
    let monotone = grid.windows(2).all(|w| {
        grid.iter().all(|&x| {
            dropout_hazard(w[1], x, &h) > dropout_hazard(w[0], x, &h)
                && dropout_hazard(x, w[1], &h) < dropout_hazard(x, w[0], &h)
        })
    });

    let p = ScenarioPolicy::new(A);
    let course = promowall::curriculum::Course {
        id: "X".into(),
        name: "X".into(),
        nominal_semester: 1,
        friction: 0.4,
        is_bottleneck: false,
        prerequisites: vec![],
    };
    let mut rng = CounterRng::new(99);
    let hits = (0..MONTE_CARLO_DRAWS)
        .filter(|_| {
            let mut a = AgentState::new(0, 0, 0.3, 0.6);
            attempt_course_regularity(&mut a, 0, &course, 0.7, &p, 1, &mut rng).result == AttemptResult::Regularized
        })
        .count();
    let freq = hits as f64 / MONTE_CARLO_DRAWS as f64;
    let mc_ok = (freq - 0.42).abs() <= MONTE_CARLO_TOLERANCE;

    let curve = yearly_cumulative_dropout(&[Some(1), Some(2), Some(3), None], 12).expect("curve");
    let curve_ok = curve == [0.50, 0.75, 0.75, 0.75, 0.75, 0.75];
    outcome(
        max_err <= HAZARD_TOLERANCE && monotone && mc_ok && curve_ok,
        format!(
            "hazard max error {max_err:.1e} on 100 points, monotone {monotone}; regularization frequency {freq:.4} vs 0.42; 4-agent curve {curve:?}"
        ),
    )
}

fn c9_self_calibration(s: &Shared) -> Outcome {
    let space = &s.calibrated.config.calibration.space;
    // an interior grid point other than the calibrated winner
    let pick = |v: Vec<f64>| v[v.len() / 2];
    let theta = CalibrationParams {
        alpha0: pick(space.alpha0.values()),
        alpha1: pick(space.alpha1.values()),
        alpha2: pick(space.alpha2.values()),
        reg_success_scale: pick(space.reg_success_scale.values()),
        stress_fail_gain: pick(space.stress_fail_gain.values()),
        debt_stress_per_item: pick(space.debt_stress_per_item.values()),
    };
    let (gen_seed, fit_seed) = SELF_CALIBRATION_SEEDS;
    let with_seed = |seed| {
        let mut cfg = s.calibrated.config.clone();
        cfg.master_seed = seed;
        s.calibrated.with_config(cfg).expect("config")
    };
    let target = simulate_yearly_curve(&with_seed(gen_seed), &theta, EXPERIMENT_REPLICATIONS).expect("target");
    let settings = CalibrationSettings {
        target: EmpiricalCurve::new(target.clone()).expect("valid target"),
        ..s.calibrated.config.calibration.clone()
    };
    let r = calibrate(&with_seed(fit_seed), &settings).expect("recalibration");
    outcome(
        r.achieved_rmse <= RMSE_TOLERANCE && r.accepted,
        format!(
            "target from grid midpoint with seed {gen_seed}, refit with seed {fit_seed}: rmse {:.4} (<= {RMSE_TOLERANCE})",
            r.achieved_rmse
        ),
    )
}

type Criterion = fn(&Shared) -> Outcome;

fn main() -> ExitCode {
    let base = Experiment::builtin_default();
    let start = Instant::now();
    let calibration = calibrate(&base, &base.config.calibration).expect("calibration runs");
    let calibration_time = start.elapsed();
    let calibrated = base
        .with_config(calibration.best.apply(&base.config))
        .expect("calibrated config");
    let start = Instant::now();
    let result = run_experiment(&calibrated, true).expect("experiment runs");
    let run_time = start.elapsed();
    let records = agent_records(&calibrated, &result);
    let shared = Shared {
        calibrated,
        calibration,
        calibration_time,
        result,
        run_time,
        records,
    };

    let criteria: [(&str, Criterion); 9] = [
        ("calibration reaches the empirical curve", c1_calibration),
        ("dropout ordering A < C < B with separation", c2_dropout_ordering),
        ("equity gap ordering", c3_equity),
        ("final stress ordering", c4_stress),
        ("debt and remedial bookkeeping", c5_debt_and_remedial),
        ("audit of the full run", c6_audit),
        ("sequential and parallel runs agree", c7_determinism),
        ("unit oracles", |_| c8_unit_oracles()),
        ("self-calibration recovers a known target", c9_self_calibration),
    ];
    let mut failures = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check(&shared);
        if !o.ok {
            failures += 1;
        }
        println!("{} criterion {}: {name}: {}", if o.ok { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
