//! Semester loop, replications and experiments.
//!
//! Within a semester each active agent, in ascending id, goes through:
//! enrolment (available courses up to its workload cap), attempts in
//! ascending course id, debt resolution and the debt tick (regime A), the
//! psychological updates in event order, the graduation check and finally
//! the hazard draw. Under regime C the remedial allocation then runs as a
//! barrier over the agents still enrolled.
//!
//! All draws come from streams addressed by
//! `(scenario, replication, agent, semester, purpose, course)`, so a
//! replication's output depends only on the config and the master seed.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Experiment;
use crate::curriculum::available_courses;
use crate::error::{Error, Result};
use crate::policy::{
    allocate_remedial, attempt_course_promotion, attempt_course_regularity, collect_remedial_pool,
    effective_friction, priority_sound, remedial_capacity, resolve_finals_debt, AttemptOutcome,
    AttemptResult, RemedialDecision, RemedialMode, ScenarioKind, ScenarioPolicy,
};
use crate::population::{sample_cohort, AgentState, AgentStatus, DropoutCause, Resilience};
use crate::psychodynamics::{
    apply_event, dropout_hazard, sample_dropout, EventKind, PsychUpdateParams, SemesterEvent,
};
use crate::rng::{Purpose, ReplicationStreams};

/// Cause of a dropout from the agent's state at the moment of leaving.
pub fn classify_dropout_cause(agent: &AgentState, debt_cause_threshold: usize) -> Result<DropoutCause> {
    if agent.status != AgentStatus::Dropped {
        return Err(Error::Contract(format!(
            "agent {} is {} and has no dropout cause",
            agent.agent_id,
            agent.status.as_str()
        )));
    }
    Ok(if agent.finals_debt.len() >= debt_cause_threshold {
        DropoutCause::Normative
    } else if agent.transcript.total_failed_attempts() >= 1 {
        DropoutCause::Academic
    } else {
        DropoutCause::Other
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AgentEvent {
    pub agent_id: u32,
    pub semester: u32,
    #[serde(flatten)]
    pub event: SemesterEvent,
    /// Pending finals when the event was applied.
    pub debt_items: usize,
}

/// End-of-semester counts. Stress and belonging sums run over agents still
/// active after the semester.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemesterAggregate {
    pub semester: u32,
    pub active: usize,
    pub dropped: usize,
    pub graduated: usize,
    pub stress_sum_active: f64,
    pub belonging_sum_active: f64,
}

impl SemesterAggregate {
    pub fn mean_stress_active(&self) -> Option<f64> {
        (self.active > 0).then(|| self.stress_sum_active / self.active as f64)
    }

    pub fn mean_belonging_active(&self) -> Option<f64> {
        (self.active > 0).then(|| self.belonging_sum_active / self.active as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RemedialRound {
    pub semester: u32,
    pub active_count: usize,
    pub capacity: usize,
    pub candidates: usize,
    pub accepted: usize,
    pub priority_sound: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrictionFlag {
    pub course: String,
    pub friction: f64,
}

/// Immutable per-replication inputs.
#[derive(Debug, Clone)]
pub struct ReplicationContext<'a> {
    pub experiment: &'a Experiment,
    pub policy: ScenarioPolicy,
    pub replication: usize,
    pub streams: ReplicationStreams,
    pub frictions: Vec<f64>,
    pub clamped_frictions: Vec<FrictionFlag>,
    pub psych: PsychUpdateParams,
    /// Off only when tracing academic histories; nobody drops.
    pub(crate) hazard_enabled: bool,
    /// Rank of each course index in id order; the attempt and event order.
    id_rank: Vec<usize>,
}

impl<'a> ReplicationContext<'a> {
    pub fn new(experiment: &'a Experiment, policy: &ScenarioPolicy, replication: usize) -> Self {
        let g = &experiment.curriculum;
        let rep_ability = experiment.representative_ability();
        let mut frictions = Vec::with_capacity(g.len());
        let mut clamped_frictions = Vec::new();
        for c in g.courses() {
            let f = effective_friction(c, policy, rep_ability);
            if f.clamped {
                clamped_frictions.push(FrictionFlag {
                    course: c.id.clone(),
                    friction: f.friction,
                });
            }
            frictions.push(f.friction);
        }
        let mut psych = experiment.config.psych;
        psych.remedial_stress_cost = policy.remedial_stress_cost;
        psych.remedial_belonging_bonus = policy.remedial_belonging_bonus;
        let mut by_id: Vec<usize> = (0..g.len()).collect();
        by_id.sort_by(|&a, &b| g.course(a).id.cmp(&g.course(b).id));
        let mut id_rank = vec![0; g.len()];
        for (rank, &c) in by_id.iter().enumerate() {
            id_rank[c] = rank;
        }
        Self {
            experiment,
            policy: policy.clone(),
            replication,
            streams: ReplicationStreams::new(experiment.replication_seed(policy.kind, replication)),
            frictions,
            clamped_frictions,
            psych,
            hazard_enabled: true,
            id_rank,
        }
    }
}

fn emit(sink: &mut Option<&mut Vec<AgentEvent>>, agent: &AgentState, semester: u32, event: SemesterEvent) {
    if let Some(s) = sink.as_deref_mut() {
        s.push(AgentEvent {
            agent_id: agent.agent_id,
            semester,
            event,
            debt_items: agent.finals_debt.len(),
        });
    }
}

/// Advances every active agent by one semester. Returns the remedial round
/// when the regime has one. Events are appended to `sink` when given.
pub fn step_semester(
    ctx: &ReplicationContext<'_>,
    agents: &mut [AgentState],
    semester: u32,
    mut sink: Option<&mut Vec<AgentEvent>>,
) -> Option<RemedialRound> {
    let exp = ctx.experiment;
    let g = &exp.curriculum;
    let table = &exp.archetypes.archetypes;
    let p = &ctx.policy;
    let hazard = &exp.config.hazard;
    let mut near_passes: Vec<(u32, Resilience, AttemptOutcome)> = Vec::new();
    let mut events: Vec<SemesterEvent> = Vec::with_capacity(16);

    for agent in agents.iter_mut().filter(|a| a.is_active()) {
        events.clear();
        let id = agent.agent_id as u64;
        let arch = &table[agent.archetype];
        let mut offered = available_courses(g, &agent.transcript, p.kind, arch.workload_cap());
        offered.sort_by_key(|&c| ctx.id_rank[c]);

        for &c in &offered {
            let course = g.course(c);
            let friction = ctx.frictions[c];
            let mut rng = ctx.streams.stream(id, semester, Purpose::Attempt, c as u64);
            if p.kind == ScenarioKind::Historical {
                let o = attempt_course_regularity(agent, c, course, arch.ability, p, semester, &mut rng);
                let kind = match o.result {
                    AttemptResult::Regularized => EventKind::Regularize,
                    _ => EventKind::Fail,
                };
                events.push(SemesterEvent::new(kind, Some(c), friction));
            } else {
                let o = attempt_course_promotion(agent, c, course, friction, arch.ability, p, &mut rng);
                let kind = match o.result {
                    AttemptResult::Passed => EventKind::Pass,
                    _ => EventKind::Fail,
                };
                events.push(SemesterEvent::new(kind, Some(c), friction));
                if o.near_pass {
                    near_passes.push((agent.agent_id, arch.resilience, o));
                }
            }
        }

        if p.kind == ScenarioKind::Historical {
            let mut rng = ctx.streams.stream(id, semester, Purpose::Debt, 0);
            for c in resolve_finals_debt(agent, g, arch.ability, p, semester, &mut rng) {
                events.push(SemesterEvent::new(EventKind::Pass, Some(c), ctx.frictions[c]));
            }
            events.push(SemesterEvent::new(EventKind::DebtTick, None, 0.0));
        }
        debug_assert!(p.kind == ScenarioKind::Historical || agent.finals_debt.is_empty());

        for e in &events {
            apply_event(agent, e, arch, &ctx.psych);
            emit(&mut sink, agent, semester, *e);
        }

        if agent.transcript.passed_count() == g.len() {
            agent.status = AgentStatus::Graduated;
            agent.graduation_semester = Some(semester);
            continue;
        }
        if !ctx.hazard_enabled {
            continue;
        }
        let h = dropout_hazard(agent.stress, agent.belonging, hazard);
        let mut rng = ctx.streams.stream(id, semester, Purpose::Hazard, 0);
        if sample_dropout(h, &mut rng) {
            agent.status = AgentStatus::Dropped;
            agent.dropout_semester = Some(semester);
            agent.dropout_cause = Some(
                classify_dropout_cause(agent, exp.config.debt_cause_threshold)
                    .expect("agent was just marked dropped"),
            );
        }
    }

    if p.kind != ScenarioKind::SafetyNet {
        return None;
    }
    near_passes.retain(|(id, _, _)| agents[*id as usize].is_active());
    let pool = collect_remedial_pool(&near_passes, g, p);
    let active_count = agents.iter().filter(|a| a.is_active()).count();
    let decisions = allocate_remedial(&pool, active_count, p);
    for d in decisions.iter().filter(|d| d.accepted) {
        apply_remedial(ctx, &mut agents[d.agent_id as usize], d, semester, &mut sink);
    }
    Some(RemedialRound {
        semester,
        active_count,
        capacity: remedial_capacity(p, active_count),
        candidates: pool.len(),
        accepted: decisions.iter().filter(|d| d.accepted).count(),
        priority_sound: priority_sound(&decisions),
    })
}

fn apply_remedial(
    ctx: &ReplicationContext<'_>,
    agent: &mut AgentState,
    d: &RemedialDecision,
    semester: u32,
    sink: &mut Option<&mut Vec<AgentEvent>>,
) {
    let exp = ctx.experiment;
    let arch = &exp.archetypes.archetypes[agent.archetype];
    let friction = ctx.frictions[d.course];
    let p = &ctx.policy;
    let success = match p.remedial_mode {
        RemedialMode::Guaranteed => true,
        RemedialMode::Probabilistic => {
            let mut rng = ctx
                .streams
                .stream(agent.agent_id as u64, semester, Purpose::Remedial, d.course as u64);
            let prob = (d.performance_score + p.remedial_pass_prob_boost).clamp(0.0, 1.0);
            rand::Rng::random::<f64>(&mut rng) < prob
        }
    };
    agent.remedial_acceptances += 1;
    let accept = SemesterEvent::new(EventKind::RemedialAccept, Some(d.course), friction);
    apply_event(agent, &accept, arch, &ctx.psych);
    emit(sink, agent, semester, accept);
    if success {
        agent.transcript.mark_passed(d.course);
        let ok = SemesterEvent::new(EventKind::RemedialSuccess, Some(d.course), friction);
        apply_event(agent, &ok, arch, &ctx.psych);
        emit(sink, agent, semester, ok);
        if agent.transcript.passed_count() == exp.curriculum.len() {
            agent.status = AgentStatus::Graduated;
            agent.graduation_semester = Some(semester);
        }
    }
}

fn aggregate(agents: &[AgentState], semester: u32) -> SemesterAggregate {
    let mut agg = SemesterAggregate {
        semester,
        active: 0,
        dropped: 0,
        graduated: 0,
        stress_sum_active: 0.0,
        belonging_sum_active: 0.0,
    };
    for a in agents {
        match a.status {
            AgentStatus::Active => {
                agg.active += 1;
                agg.stress_sum_active += a.stress;
                agg.belonging_sum_active += a.belonging;
            }
            AgentStatus::Dropped => agg.dropped += 1,
            AgentStatus::Graduated => agg.graduated += 1,
        }
    }
    agg
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationResult {
    pub scenario: ScenarioKind,
    pub replication: usize,
    pub seed: u64,
    #[serde(skip)]
    pub agents: Vec<AgentState>,
    pub semesters: Vec<SemesterAggregate>,
    pub remedial_rounds: Vec<RemedialRound>,
    pub clamped_frictions: Vec<FrictionFlag>,
}

/// A replication advanced one semester at a time.
pub struct Replication<'a> {
    ctx: ReplicationContext<'a>,
    agents: Vec<AgentState>,
    semester: u32,
    semesters: Vec<SemesterAggregate>,
    remedial_rounds: Vec<RemedialRound>,
}

impl<'a> Replication<'a> {
    pub fn new(experiment: &'a Experiment, policy: &ScenarioPolicy, replication: usize) -> Result<Self> {
        experiment.config.validate()?;
        let ctx = ReplicationContext::new(experiment, policy, replication);
        let agents = sample_cohort(
            &experiment.archetypes,
            experiment.config.cohort_size,
            ctx.streams.seed(),
        )?;
        Ok(Self {
            ctx,
            agents,
            semester: 0,
            semesters: Vec::new(),
            remedial_rounds: Vec::new(),
        })
    }

    /// Academic history only: the hazard is never drawn, so every agent
    /// stays enrolled until graduation or the horizon.
    pub(crate) fn without_hazard(mut self) -> Self {
        self.ctx.hazard_enabled = false;
        self
    }

    pub fn context(&self) -> &ReplicationContext<'a> {
        &self.ctx
    }

    pub fn agents(&self) -> &[AgentState] {
        &self.agents
    }

    pub fn semester(&self) -> u32 {
        self.semester
    }

    pub fn is_finished(&self) -> bool {
        self.semester >= self.ctx.experiment.config.horizon_semesters
    }

    /// Runs the next semester; `None` once the horizon is reached.
    pub fn step(&mut self, sink: Option<&mut Vec<AgentEvent>>) -> Option<&SemesterAggregate> {
        if self.is_finished() {
            return None;
        }
        self.semester += 1;
        if let Some(round) = step_semester(&self.ctx, &mut self.agents, self.semester, sink) {
            self.remedial_rounds.push(round);
        }
        self.semesters.push(aggregate(&self.agents, self.semester));
        self.semesters.last()
    }

    pub fn finish(mut self) -> ReplicationResult {
        while self.step(None).is_some() {}
        ReplicationResult {
            scenario: self.ctx.policy.kind,
            replication: self.ctx.replication,
            seed: self.ctx.streams.seed(),
            agents: self.agents,
            semesters: self.semesters,
            remedial_rounds: self.remedial_rounds,
            clamped_frictions: self.ctx.clamped_frictions,
        }
    }
}

/// Samples the replication's cohort and runs the full horizon.
pub fn run_replication(
    experiment: &Experiment,
    policy: &ScenarioPolicy,
    replication: usize,
) -> Result<ReplicationResult> {
    Ok(Replication::new(experiment, policy, replication)?.finish())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    /// Ordered by scenario (A, B, C) then replication index.
    pub replications: Vec<ReplicationResult>,
}

impl ExperimentResult {
    pub fn for_scenario(&self, kind: ScenarioKind) -> impl Iterator<Item = &ReplicationResult> {
        self.replications.iter().filter(move |r| r.scenario == kind)
    }

    pub fn scenarios(&self) -> Vec<ScenarioKind> {
        let mut v: Vec<ScenarioKind> = self.replications.iter().map(|r| r.scenario).collect();
        v.dedup();
        v
    }

    pub fn agent_count(&self) -> usize {
        self.replications.iter().map(|r| r.agents.len()).sum()
    }
}

/// Runs every (scenario, replication) pair. Parallel and sequential
/// execution give identical results.
pub fn run_experiment(experiment: &Experiment, parallel: bool) -> Result<ExperimentResult> {
    let reps = experiment.config.replications_per_scenario;
    let units: Vec<(ScenarioPolicy, usize)> = experiment
        .scenarios()
        .into_iter()
        .flat_map(|p| (0..reps).map(move |r| (p.clone(), r)))
        .collect();
    let run = |(p, r): &(ScenarioPolicy, usize)| run_replication(experiment, p, *r);
    let replications = if parallel {
        units.par_iter().map(run).collect::<Result<Vec<_>>>()?
    } else {
        units.iter().map(run).collect::<Result<Vec<_>>>()?
    };
    Ok(ExperimentResult { replications })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{ExperimentConfig, Source};
    use crate::curriculum::{Course, CurriculumFile};
    use crate::population::{Archetype, ArchetypeTable, NormalSpec, PlanningHorizon};
    use crate::psychodynamics::HazardParams;

    fn single_course_experiment(alpha0: f64, stress: f64, belonging: f64) -> Experiment {
        let mut cfg = ExperimentConfig::builtin_default();
        cfg.cohort_size = 1;
        cfg.replications_per_scenario = 1;
        cfg.curriculum = Source::Inline(CurriculumFile {
            courses: vec![Course {
                id: "C01".into(),
                name: "Only".into(),
                nominal_semester: 1,
                friction: 0.0,
                is_bottleneck: false,
                prerequisites: vec![],
            }],
        });
        cfg.archetypes = Source::Inline(ArchetypeTable {
            archetypes: vec![Archetype {
                id: 1,
                label: "solo".into(),
                frequency: 1.0,
                ability: 0.999_999,
                planning_horizon: PlanningHorizon::Balanced,
                stress_reactivity: 1.0,
                belonging_sensitivity: 1.0,
                resilience: Resilience::Medium,
                init_stress: NormalSpec { mean: stress, std: 0.0 },
                init_belonging: NormalSpec { mean: belonging, std: 0.0 },
            }],
        });
        cfg.hazard = HazardParams {
            alpha0,
            alpha1: 1.0,
            alpha2: -1.0,
        };
        for p in cfg.scenarios.values_mut() {
            p.performance_sigma = 0.0;
        }
        Experiment::new(cfg, None).unwrap()
    }

    #[test]
    fn forced_graduation() {
        let e = single_course_experiment(-30.0, 0.0, 1.0);
        let p = e.policy(ScenarioKind::DirectPromotion).unwrap().clone();
        let r = run_replication(&e, &p, 0).unwrap();
        assert_eq!(r.agents[0].status, AgentStatus::Graduated);
        assert_eq!(r.agents[0].graduation_semester, Some(1));
        assert_eq!(r.semesters.len(), 12);
        assert!(r.semesters.iter().all(|s| s.graduated == 1));
    }

    #[test]
    fn forced_dropout() {
        let e = single_course_experiment(40.0, 1.0, 0.0);
        // friction 1 makes the course impossible, so nobody graduates first
        let mut cfg = e.config.clone();
        if let Source::Inline(f) = &mut cfg.curriculum {
            f.courses[0].friction = 1.0;
        }
        let e = Experiment::new(cfg, None).unwrap();
        for p in e.scenarios() {
            let r = run_replication(&e, &p, 0).unwrap();
            let a = &r.agents[0];
            assert_eq!(a.status, AgentStatus::Dropped, "{}", p.kind);
            assert_eq!(a.dropout_semester, Some(1));
            assert_eq!(a.dropout_cause, Some(DropoutCause::Academic));
        }
    }

    #[test]
    fn cause_rules() {
        let mut a = AgentState::new(0, 0, 0.5, 0.5);
        assert!(classify_dropout_cause(&a, 3).is_err());
        a.status = AgentStatus::Dropped;
        assert_eq!(classify_dropout_cause(&a, 3).unwrap(), DropoutCause::Other);
        a.transcript.record_failure(0);
        a.transcript.record_failure(0);
        assert_eq!(classify_dropout_cause(&a, 3).unwrap(), DropoutCause::Academic);
        for c in 0..5 {
            a.finals_debt.push(crate::population::DebtItem {
                course: c,
                semester_incurred: 1,
            });
        }
        assert_eq!(classify_dropout_cause(&a, 3).unwrap(), DropoutCause::Normative);
    }

    #[test]
    fn replay_is_identical() {
        let mut cfg = ExperimentConfig::builtin_default();
        cfg.cohort_size = 40;
        let e = Experiment::new(cfg, None).unwrap();
        for p in e.scenarios() {
            let run = || {
                let mut rep = Replication::new(&e, &p, 3).unwrap();
                let mut events = Vec::new();
                while rep.step(Some(&mut events)).is_some() {}
                serde_json::to_string(&events).unwrap()
            };
            assert_eq!(run(), run());
        }
    }
}
