//! Stress/belonging transitions and the logistic dropout hazard.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::{AgentState, Archetype};

/// `h = logistic(alpha0 + alpha1 * stress + alpha2 * belonging)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HazardParams {
    pub alpha0: f64,
    pub alpha1: f64,
    pub alpha2: f64,
}

impl HazardParams {
    pub fn validate(&self) -> Result<()> {
        if !self.alpha0.is_finite() {
            return Err(Error::Config("hazard.alpha0 must be finite".into()));
        }
        if !(self.alpha1 > 0.0 && self.alpha1.is_finite()) {
            return Err(Error::Config("hazard.alpha1 must be positive".into()));
        }
        if !(self.alpha2 < 0.0 && self.alpha2.is_finite()) {
            return Err(Error::Config("hazard.alpha2 must be negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsychUpdateParams {
    /// Scaled by course friction and the archetype's stress reactivity.
    pub stress_fail_gain: f64,
    pub stress_pass_relief: f64,
    /// Scaled by belonging sensitivity.
    pub belonging_pass_gain: f64,
    /// Scaled by belonging sensitivity.
    pub belonging_fail_loss: f64,
    /// Per pending final, per semester.
    pub debt_stress_per_item: f64,
    /// Taken from the safety-net policy when a replication starts.
    #[serde(skip)]
    pub remedial_stress_cost: f64,
    #[serde(skip)]
    pub remedial_belonging_bonus: f64,
}

impl PsychUpdateParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("stress_fail_gain", self.stress_fail_gain),
            ("stress_pass_relief", self.stress_pass_relief),
            ("belonging_pass_gain", self.belonging_pass_gain),
            ("belonging_fail_loss", self.belonging_fail_loss),
            ("debt_stress_per_item", self.debt_stress_per_item),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("psych.{name} must be a non-negative number")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum EventKind {
    Pass,
    Fail,
    Regularize,
    DebtTick,
    RemedialAccept,
    RemedialSuccess,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SemesterEvent {
    pub kind: EventKind,
    pub course: Option<usize>,
    pub friction: f64,
}

impl SemesterEvent {
    pub fn new(kind: EventKind, course: Option<usize>, friction: f64) -> Self {
        Self {
            kind,
            course,
            friction,
        }
    }
}

/// Change in (stress, belonging) caused by one event, before clamping.
/// `debt_items` is the agent's pending-finals count when the event fires.
pub fn event_delta(kind: EventKind, friction: f64, debt_items: usize, a: &Archetype, u: &PsychUpdateParams) -> (f64, f64) {
    match kind {
        EventKind::Fail => (
            u.stress_fail_gain * friction * a.stress_reactivity,
            -u.belonging_fail_loss * a.belonging_sensitivity,
        ),
        EventKind::Pass => (
            -u.stress_pass_relief,
            u.belonging_pass_gain * a.belonging_sensitivity,
        ),
        EventKind::DebtTick => (u.debt_stress_per_item * debt_items as f64, 0.0),
        EventKind::RemedialAccept => (u.remedial_stress_cost, 0.0),
        EventKind::RemedialSuccess => (0.0, u.remedial_belonging_bonus),
        EventKind::Regularize => (0.0, 0.0),
    }
}

/// Applies one event to the agent's stress and belonging, clamping both to
/// [0,1]. Regularization carries no psychological effect of its own.
pub fn apply_event(agent: &mut AgentState, e: &SemesterEvent, a: &Archetype, u: &PsychUpdateParams) {
    let (ds, db) = event_delta(e.kind, e.friction, agent.finals_debt.len(), a, u);
    agent.stress = (agent.stress + ds).clamp(0.0, 1.0);
    agent.belonging = (agent.belonging + db).clamp(0.0, 1.0);
}

pub fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn dropout_hazard(stress: f64, belonging: f64, h: &HazardParams) -> f64 {
    logistic(h.alpha0 + h.alpha1 * stress + h.alpha2 * belonging)
}

pub fn sample_dropout<R: Rng + ?Sized>(hazard: f64, rng: &mut R) -> bool {
    let u: f64 = rng.random();
    u < hazard
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::population::{NormalSpec, PlanningHorizon, Resilience};
    use crate::rng::CounterRng;

    fn archetype(reactivity: f64) -> Archetype {
        Archetype {
            id: 1,
            label: "x".into(),
            frequency: 1.0,
            ability: 0.5,
            planning_horizon: PlanningHorizon::Balanced,
            stress_reactivity: reactivity,
            belonging_sensitivity: 1.0,
            resilience: Resilience::Low,
            init_stress: NormalSpec { mean: 0.3, std: 0.0 },
            init_belonging: NormalSpec { mean: 0.5, std: 0.0 },
        }
    }

    fn params() -> PsychUpdateParams {
        PsychUpdateParams {
            stress_fail_gain: 0.1,
            stress_pass_relief: 0.0,
            belonging_pass_gain: 0.0,
            belonging_fail_loss: 0.0,
            debt_stress_per_item: 0.01,
            remedial_stress_cost: 0.0,
            remedial_belonging_bonus: 0.0,
        }
    }

    #[test]
    fn fail_scales_with_friction_and_reactivity() {
        let mut agent = AgentState::new(0, 0, 0.5, 0.5);
        let e = SemesterEvent::new(EventKind::Fail, Some(0), 0.6);
        apply_event(&mut agent, &e, &archetype(1.5), &params());
        assert!((agent.stress - 0.59).abs() < 1e-12);
    }

    #[test]
    fn stress_clamps_at_one() {
        let mut agent = AgentState::new(0, 0, 0.95, 0.5);
        let u = PsychUpdateParams {
            stress_fail_gain: 0.2,
            ..params()
        };
        apply_event(&mut agent, &SemesterEvent::new(EventKind::Fail, None, 1.0), &archetype(1.0), &u);
        assert_eq!(agent.stress, 1.0);
    }

    #[test]
    fn pass_with_zero_gains_is_identity() {
        let mut agent = AgentState::new(0, 0, 0.4, 0.7);
        let before = agent.clone();
        apply_event(&mut agent, &SemesterEvent::new(EventKind::Pass, Some(0), 0.3), &archetype(1.0), &params());
        assert_eq!(agent, before);
    }

    #[test]
    fn debt_tick_counts_queue() {
        let mut agent = AgentState::new(0, 0, 0.1, 0.5);
        for c in 0..4 {
            agent.finals_debt.push(crate::population::DebtItem {
                course: c,
                semester_incurred: 1,
            });
        }
        apply_event(&mut agent, &SemesterEvent::new(EventKind::DebtTick, None, 0.0), &archetype(2.0), &params());
        assert!((agent.stress - 0.14).abs() < 1e-12);
    }

    #[test]
    fn hazard_known_values() {
        let h = HazardParams {
            alpha0: -4.0,
            alpha1: 4.0,
            alpha2: -2.0,
        };
        assert_eq!(dropout_hazard(1.0, 0.0, &h), 0.5);
        assert_eq!(
            dropout_hazard(0.3, 0.0, &HazardParams { alpha0: -1.2, ..h }),
            0.5
        );
        assert!((dropout_hazard(0.5, 0.5, &h) - 0.047_425_873_177_566_78).abs() < 1e-15);
    }

    #[test]
    fn sign_constraints() {
        let ok = HazardParams {
            alpha0: -3.0,
            alpha1: 2.0,
            alpha2: -1.0,
        };
        assert!(ok.validate().is_ok());
        assert!(HazardParams { alpha1: 0.0, ..ok }.validate().is_err());
        assert!(HazardParams { alpha2: 0.5, ..ok }.validate().is_err());
    }

    #[test]
    fn degenerate_hazards() {
        let mut rng = CounterRng::new(11);
        for _ in 0..1000 {
            assert!(!sample_dropout(0.0, &mut rng));
            assert!(sample_dropout(1.0, &mut rng));
        }
    }
}
