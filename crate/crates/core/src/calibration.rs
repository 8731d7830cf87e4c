//! Grid calibration of the regime-A parameters against a yearly cumulative
//! dropout curve.
//!
//! Under regime A the academic history of an agent (attempts, debt queue,
//! graduation) does not depend on stress, belonging or the hazard, and every
//! draw is addressed. A candidate therefore only changes the psychological
//! replay and the hazard draws on top of a fixed history. Histories are
//! traced once per regularization scale and replication, and each candidate
//! replays them; the result is identical to running the engine.

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{Experiment, ExperimentConfig};
use crate::engine::{run_replication, Replication, ReplicationResult};
use crate::error::{Error, Result};
use crate::policy::ScenarioKind;
use crate::population::AgentStatus;
use crate::psychodynamics::{event_delta, sample_dropout, dropout_hazard, EventKind, HazardParams};
use crate::rng::{Purpose, ReplicationStreams};

pub const YEARS: usize = 6;

/// Cumulative dropout at the end of years 1..=6.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct EmpiricalCurve {
    yearly_cumulative_dropout: Vec<f64>,
}

impl EmpiricalCurve {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() != YEARS {
            return Err(Error::Calibration(format!(
                "target curve needs {YEARS} yearly values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Calibration("target values must lie in [0,1]".into()));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Calibration("target curve must be non-decreasing".into()));
        }
        Ok(Self {
            yearly_cumulative_dropout: values,
        })
    }

    pub fn values(&self) -> &[f64] {
        &self.yearly_cumulative_dropout
    }
}

impl TryFrom<Vec<f64>> for EmpiricalCurve {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<EmpiricalCurve> for Vec<f64> {
    fn from(c: EmpiricalCurve) -> Self {
        c.yearly_cumulative_dropout
    }
}

impl Default for EmpiricalCurve {
    fn default() -> Self {
        default_empirical_target()
    }
}

/// Years 1 and 2 as observed; years 3 to 6 spread linearly over 39%..48%.
pub fn default_empirical_target() -> EmpiricalCurve {
    let mut v = vec![0.234, 0.328];
    v.extend((0..4).map(|i| 0.39 + 0.03 * i as f64));
    EmpiricalCurve::new(v).expect("default target is valid")
}

/// Yearly cumulative dropout of one cohort from its dropout semesters.
/// Year k covers semesters 2k-1 and 2k.
pub fn yearly_cumulative_dropout(dropout_semesters: &[Option<u32>], horizon: u32) -> Result<Vec<f64>> {
    if horizon < 2 * YEARS as u32 {
        return Err(Error::Calibration(format!(
            "a yearly curve needs at least {} semesters, horizon is {horizon}",
            2 * YEARS
        )));
    }
    if dropout_semesters.is_empty() {
        return Err(Error::Calibration("no agents".into()));
    }
    let n = dropout_semesters.len() as f64;
    Ok((1..=YEARS as u32)
        .map(|k| {
            dropout_semesters
                .iter()
                .filter(|s| s.is_some_and(|s| s <= 2 * k))
                .count() as f64
                / n
        })
        .collect())
}

/// Mean over replications of each replication's yearly curve.
pub fn cumulative_dropout_by_year(results: &[ReplicationResult]) -> Result<Vec<f64>> {
    if results.is_empty() {
        return Err(Error::Calibration("no replications".into()));
    }
    let mut acc = vec![0.0; YEARS];
    for r in results {
        let semesters: Vec<Option<u32>> = r.agents.iter().map(|a| a.dropout_semester).collect();
        let curve = yearly_cumulative_dropout(&semesters, r.semesters.len() as u32)?;
        for (a, c) in acc.iter_mut().zip(curve) {
            *a += c;
        }
    }
    Ok(acc.into_iter().map(|a| a / results.len() as f64).collect())
}

pub fn rmse(sim: &[f64], target: &[f64]) -> Result<f64> {
    if sim.len() != target.len() {
        return Err(Error::Calibration(format!(
            "length mismatch: {} simulated vs {} target values",
            sim.len(),
            target.len()
        )));
    }
    if sim.is_empty() {
        return Err(Error::Calibration("empty vectors".into()));
    }
    let sse: f64 = sim.iter().zip(target).map(|(s, t)| (s - t) * (s - t)).sum();
    Ok((sse / sim.len() as f64).sqrt())
}

/// Evenly spaced grid values on `[min, max]`; a single point sits at the
/// midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Axis {
    pub const fn new(min: f64, max: f64, points: usize) -> Self {
        Self { min, max, points }
    }

    pub fn values(&self) -> Vec<f64> {
        match self.points {
            0 => Vec::new(),
            1 => vec![0.5 * (self.min + self.max)],
            n => (0..n)
                .map(|i| (self.min * (n - 1 - i) as f64 + self.max * i as f64) / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpace {
    pub alpha0: Axis,
    pub alpha1: Axis,
    pub alpha2: Axis,
    pub reg_success_scale: Axis,
    pub stress_fail_gain: Axis,
    pub debt_stress_per_item: Axis,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            alpha0: Axis::new(-6.0, -2.0, 5),
            alpha1: Axis::new(1.0, 6.0, 5),
            alpha2: Axis::new(-6.0, -1.0, 5),
            reg_success_scale: Axis::new(0.8, 1.6, 5),
            stress_fail_gain: Axis::new(0.05, 0.3, 5),
            debt_stress_per_item: Axis::new(0.005, 0.05, 1),
        }
    }
}

impl SearchSpace {
    fn axes(&self) -> [(&'static str, &Axis); 6] {
        [
            ("alpha0", &self.alpha0),
            ("alpha1", &self.alpha1),
            ("alpha2", &self.alpha2),
            ("reg_success_scale", &self.reg_success_scale),
            ("stress_fail_gain", &self.stress_fail_gain),
            ("debt_stress_per_item", &self.debt_stress_per_item),
        ]
    }

    pub fn size(&self) -> usize {
        self.axes().iter().map(|(_, a)| a.points).product()
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in self.axes() {
            if !(a.min.is_finite() && a.max.is_finite() && a.min <= a.max) {
                return Err(Error::Calibration(format!("{name}: need finite min <= max")));
            }
            if a.points == 0 {
                return Err(Error::Calibration(format!("{name}: empty search space")));
            }
        }
        if self.alpha1.min <= 0.0 {
            return Err(Error::Calibration("alpha1 range must be positive".into()));
        }
        if self.alpha2.max >= 0.0 {
            return Err(Error::Calibration("alpha2 range must be negative".into()));
        }
        for (name, a) in [
            ("reg_success_scale", &self.reg_success_scale),
            ("stress_fail_gain", &self.stress_fail_gain),
            ("debt_stress_per_item", &self.debt_stress_per_item),
        ] {
            if a.min < 0.0 {
                return Err(Error::Calibration(format!("{name} range must be non-negative")));
            }
        }
        Ok(())
    }

    /// Every grid point, in lexicographic parameter order.
    pub fn grid(&self) -> Vec<CalibrationParams> {
        let [a0, a1, a2, reg, sfg, dsp] = self.axes().map(|(_, a)| a.values());
        let mut out = Vec::with_capacity(self.size());
        for &alpha0 in &a0 {
            for &alpha1 in &a1 {
                for &alpha2 in &a2 {
                    for &reg_success_scale in &reg {
                        for &stress_fail_gain in &sfg {
                            for &debt_stress_per_item in &dsp {
                                out.push(CalibrationParams {
                                    alpha0,
                                    alpha1,
                                    alpha2,
                                    reg_success_scale,
                                    stress_fail_gain,
                                    debt_stress_per_item,
                                });
                            }
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationSettings {
    #[serde(default)]
    pub space: SearchSpace,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub target: EmpiricalCurve,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
    /// Candidates whose first replication misses the target by more than
    /// this RMSE are dropped without running the rest.
    #[serde(default = "default_screen_rmse")]
    pub screen_rmse: f64,
}

fn default_replications() -> usize {
    5
}

fn default_tolerance() -> f64 {
    0.05
}

fn default_screen_rmse() -> f64 {
    0.10
}

impl Default for CalibrationSettings {
    fn default() -> Self {
        Self {
            space: SearchSpace::default(),
            replications: default_replications(),
            target: EmpiricalCurve::default(),
            tolerance: default_tolerance(),
            screen_rmse: default_screen_rmse(),
        }
    }
}

impl CalibrationSettings {
    pub fn validate(&self) -> Result<()> {
        self.space.validate()?;
        if self.replications == 0 {
            return Err(Error::Calibration("calibration.replications must be at least 1".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Calibration("calibration.tolerance must be positive".into()));
        }
        if !(self.screen_rmse > 0.0) {
            return Err(Error::Calibration("calibration.screen_rmse must be positive".into()));
        }
        Ok(())
    }
}

/// One point of the search space. Field order is the tie-break order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CalibrationParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
    pub reg_success_scale: f64,
    pub stress_fail_gain: f64,
    pub debt_stress_per_item: f64,
}

impl CalibrationParams {
    fn key(&self) -> [f64; 6] {
        [
            self.alpha0,
            self.alpha1,
            self.alpha2,
            self.reg_success_scale,
            self.stress_fail_gain,
            self.debt_stress_per_item,
        ]
    }

    pub fn cmp_lexicographic(&self, other: &Self) -> Ordering {
        self.key()
            .iter()
            .zip(other.key())
            .map(|(a, b)| a.total_cmp(&b))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    }

    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self> {
        let a = cfg
            .scenarios
            .get(ScenarioKind::Historical.key())
            .ok_or_else(|| Error::Calibration("config has no scenario A".into()))?;
        Ok(Self {
            alpha0: cfg.hazard.alpha0,
            alpha1: cfg.hazard.alpha1,
            alpha2: cfg.hazard.alpha2,
            reg_success_scale: a.reg_success_scale,
            stress_fail_gain: cfg.psych.stress_fail_gain,
            debt_stress_per_item: cfg.psych.debt_stress_per_item,
        })
    }

    /// Hazard and psych values are shared by every scenario; the
    /// regularization scale only exists under A.
    pub fn apply(&self, cfg: &ExperimentConfig) -> ExperimentConfig {
        let mut out = cfg.clone();
        out.hazard = HazardParams {
            alpha0: self.alpha0,
            alpha1: self.alpha1,
            alpha2: self.alpha2,
        };
        out.psych.stress_fail_gain = self.stress_fail_gain;
        out.psych.debt_stress_per_item = self.debt_stress_per_item;
        if let Some(a) = out.scenarios.get_mut(ScenarioKind::Historical.key()) {
            a.reg_success_scale = self.reg_success_scale;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateEvaluation {
    pub params: CalibrationParams,
    pub rmse: f64,
    pub curve: Vec<f64>,
    pub replications_run: usize,
    pub pruned: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CalibrationResult {
    pub best: CalibrationParams,
    pub achieved_rmse: f64,
    pub curve: Vec<f64>,
    pub target: Vec<f64>,
    pub tolerance: f64,
    pub accepted: bool,
    pub replications: usize,
    pub grid_size: usize,
    pub pruned_count: usize,
    pub candidates: Vec<CandidateEvaluation>,
}

#[derive(Debug, Clone, Copy)]
struct TraceEvent {
    kind: EventKind,
    friction: f64,
    debt_items: usize,
}

/// Hazard-free academic history of one regime-A replication.
struct Trace {
    seed: u64,
    horizon: u32,
    archetype: Vec<usize>,
    init: Vec<(f64, f64)>,
    graduation: Vec<Option<u32>>,
    /// `offsets[agent * horizon + semester - 1]..offsets[.. + 1]` indexes
    /// `events`.
    offsets: Vec<usize>,
    events: Vec<TraceEvent>,
}

impl Trace {
    fn build(experiment: &Experiment, replication: usize) -> Result<Self> {
        let policy = experiment
            .policy(ScenarioKind::Historical)
            .ok_or_else(|| Error::Calibration("config has no scenario A".into()))?;
        let mut rep = Replication::new(experiment, policy, replication)?.without_hazard();
        let seed = rep.context().streams.seed();
        let init: Vec<(f64, f64)> = rep.agents().iter().map(|a| (a.stress, a.belonging)).collect();
        let mut raw = Vec::new();
        while rep.step(Some(&mut raw)).is_some() {}
        let result = rep.finish();
        let horizon = experiment.config.horizon_semesters;
        let n = result.agents.len();
        let slot = |agent: u32, semester: u32| agent as usize * horizon as usize + semester as usize - 1;
        let mut counts = vec![0usize; n * horizon as usize + 1];
        for e in &raw {
            counts[slot(e.agent_id, e.semester) + 1] += 1;
        }
        for i in 1..counts.len() {
            counts[i] += counts[i - 1];
        }
        let offsets = counts.clone();
        let mut fill = counts;
        let mut events = vec![
            TraceEvent {
                kind: EventKind::Pass,
                friction: 0.0,
                debt_items: 0,
            };
            raw.len()
        ];
        for e in &raw {
            let s = slot(e.agent_id, e.semester);
            events[fill[s]] = TraceEvent {
                kind: e.event.kind,
                friction: e.event.friction,
                debt_items: e.debt_items,
            };
            fill[s] += 1;
        }
        Ok(Self {
            seed,
            horizon,
            archetype: result.agents.iter().map(|a| a.archetype).collect(),
            init,
            graduation: result
                .agents
                .iter()
                .map(|a| (a.status == AgentStatus::Graduated).then_some(a.graduation_semester).flatten())
                .collect(),
            offsets,
            events,
        })
    }

    /// Dropout semester of every agent under the candidate's psych and
    /// hazard values.
    fn replay(&self, experiment: &Experiment, params: &CalibrationParams) -> Vec<Option<u32>> {
        let table = &experiment.archetypes.archetypes;
        let mut psych = experiment.config.psych;
        psych.stress_fail_gain = params.stress_fail_gain;
        psych.debt_stress_per_item = params.debt_stress_per_item;
        let hazard = HazardParams {
            alpha0: params.alpha0,
            alpha1: params.alpha1,
            alpha2: params.alpha2,
        };
        let streams = ReplicationStreams::new(self.seed);
        let h = self.horizon as usize;
        (0..self.archetype.len())
            .map(|agent| {
                let arch = &table[self.archetype[agent]];
                let (mut stress, mut belonging) = self.init[agent];
                for semester in 1..=self.horizon {
                    let slot = agent * h + semester as usize - 1;
                    for e in &self.events[self.offsets[slot]..self.offsets[slot + 1]] {
                        let (ds, db) = event_delta(e.kind, e.friction, e.debt_items, arch, &psych);
                        stress = (stress + ds).clamp(0.0, 1.0);
                        belonging = (belonging + db).clamp(0.0, 1.0);
                    }
                    if self.graduation[agent] == Some(semester) {
                        return None;
                    }
                    let p = dropout_hazard(stress, belonging, &hazard);
                    let mut rng = streams.stream(agent as u64, semester, Purpose::Hazard, 0);
                    if sample_dropout(p, &mut rng) {
                        return Some(semester);
                    }
                }
                None
            })
            .collect()
    }
}

fn better(a: &CandidateEvaluation, b: &CandidateEvaluation) -> bool {
    match a.rmse.total_cmp(&b.rmse) {
        Ordering::Less => true,
        Ordering::Greater => false,
        Ordering::Equal => a.params.cmp_lexicographic(&b.params).is_lt(),
    }
}

/// Scenario-A yearly curve from the full engine, averaged over
/// `replications`.
pub fn simulate_yearly_curve(
    experiment: &Experiment,
    params: &CalibrationParams,
    replications: usize,
) -> Result<Vec<f64>> {
    let e = experiment.with_config(params.apply(&experiment.config))?;
    let policy = e
        .policy(ScenarioKind::Historical)
        .ok_or_else(|| Error::Calibration("config has no scenario A".into()))?;
    let results = (0..replications)
        .into_par_iter()
        .map(|r| run_replication(&e, policy, r))
        .collect::<Result<Vec<_>>>()?;
    cumulative_dropout_by_year(&results)
}

/// Grid search over `settings.space`. Each candidate runs
/// `settings.replications` scenario-A replications; a candidate whose first
/// replication already misses by more than `screen_rmse` stops there. The
/// winner is the lowest RMSE, ties broken by lexicographic parameter order,
/// and its curve is re-run through the engine for the report.
pub fn calibrate(experiment: &Experiment, settings: &CalibrationSettings) -> Result<CalibrationResult> {
    settings.validate()?;
    if experiment.policy(ScenarioKind::Historical).is_none() {
        return Err(Error::Calibration("config has no scenario A".into()));
    }
    if experiment.config.horizon_semesters < 2 * YEARS as u32 {
        return Err(Error::Calibration(format!(
            "calibration needs a horizon of at least {} semesters",
            2 * YEARS
        )));
    }
    let target = settings.target.values();
    let grid = settings.space.grid();
    let reps = settings.replications;

    let scales = settings.space.reg_success_scale.values();
    let traces: Vec<Vec<Trace>> = scales
        .par_iter()
        .map(|&scale| {
            let mut cfg = experiment.config.clone();
            if let Some(a) = cfg.scenarios.get_mut(ScenarioKind::Historical.key()) {
                a.reg_success_scale = scale;
            }
            let e = experiment.with_config(cfg)?;
            (0..reps).map(|r| Trace::build(&e, r)).collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let horizon = experiment.config.horizon_semesters;

    let candidates = grid
        .par_iter()
        .map(|params| -> Result<CandidateEvaluation> {
            let i = scales
                .iter()
                .position(|s| *s == params.reg_success_scale)
                .expect("grid scale comes from the axis");
            let mut acc = [0.0; YEARS];
            let mut run = 0;
            for trace in &traces[i] {
                let curve = yearly_cumulative_dropout(&trace.replay(experiment, params), horizon)?;
                for (a, c) in acc.iter_mut().zip(&curve) {
                    *a += c;
                }
                run += 1;
                if run == 1 && rmse(&curve, target)? > settings.screen_rmse {
                    break;
                }
            }
            let curve: Vec<f64> = acc.iter().map(|a| a / run as f64).collect();
            Ok(CandidateEvaluation {
                params: *params,
                rmse: rmse(&curve, target)?,
                curve,
                replications_run: run,
                pruned: run < reps,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    // fully evaluated candidates first; pruned ones only if nothing survived
    let pick = |pruned: bool| {
        candidates
            .iter()
            .filter(|c| c.pruned == pruned)
            .reduce(|b, c| if better(c, b) { c } else { b })
    };
    let best = pick(false)
        .or_else(|| pick(true))
        .ok_or_else(|| Error::Calibration("empty search space".into()))?;

    let curve = simulate_yearly_curve(experiment, &best.params, reps)?;
    let achieved_rmse = rmse(&curve, target)?;
    Ok(CalibrationResult {
        best: best.params,
        achieved_rmse,
        curve,
        target: target.to_vec(),
        tolerance: settings.tolerance,
        accepted: achieved_rmse <= settings.tolerance,
        replications: reps,
        grid_size: grid.len(),
        pruned_count: candidates.iter().filter(|c| c.pruned).count(),
        candidates,
    })
}
