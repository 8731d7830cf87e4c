//! Psycho-academic archetypes and cohort sampling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::curriculum::Transcript;
use crate::error::{Error, Result};
use crate::rng::{Purpose, ReplicationStreams};

pub const FREQUENCY_TOLERANCE: f64 = 1e-9;
/// Resampling attempts before a truncated-normal draw falls back to clamping.
pub const MAX_TRUNCATION_ATTEMPTS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum PlanningHorizon {
    Overloader,
    Balanced,
    Conservative,
}

impl PlanningHorizon {
    /// Courses attempted per semester.
    pub fn workload_cap(self) -> usize {
        match self {
            PlanningHorizon::Overloader => 6,
            PlanningHorizon::Balanced => 5,
            PlanningHorizon::Conservative => 4,
        }
    }
}

/// Ordered LOW < MEDIUM < HIGH; remedial priority follows this order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Resilience {
    Low,
    Medium,
    High,
}

impl Resilience {
    pub const ALL: [Resilience; 3] = [Resilience::Low, Resilience::Medium, Resilience::High];

    pub fn as_str(self) -> &'static str {
        match self {
            Resilience::Low => "LOW",
            Resilience::Medium => "MEDIUM",
            Resilience::High => "HIGH",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|r| r.as_str() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalSpec {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Archetype {
    pub id: u32,
    pub label: String,
    pub frequency: f64,
    pub ability: f64,
    pub planning_horizon: PlanningHorizon,
    pub stress_reactivity: f64,
    pub belonging_sensitivity: f64,
    pub resilience: Resilience,
    pub init_stress: NormalSpec,
    pub init_belonging: NormalSpec,
}

impl Archetype {
    pub fn workload_cap(&self) -> usize {
        self.planning_horizon.workload_cap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchetypeTable {
    pub archetypes: Vec<Archetype>,
}

impl ArchetypeTable {
    pub fn from_json(source: &str) -> Result<Self> {
        let table: ArchetypeTable =
            serde_json::from_str(source).map_err(|e| Error::Parse(format!("archetypes: {e}")))?;
        table.validate()?;
        Ok(table)
    }

    pub fn validate(&self) -> Result<()> {
        if self.archetypes.is_empty() {
            return Err(Error::Archetypes("table is empty".into()));
        }
        let mut ids: Vec<u32> = self.archetypes.iter().map(|a| a.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Archetypes("duplicate archetype id".into()));
        }
        for a in &self.archetypes {
            let bad = |what: &str| Err(Error::Archetypes(format!("archetype {}: {what}", a.id)));
            if !(0.0..=1.0).contains(&a.frequency) {
                return bad("frequency outside [0,1]");
            }
            if !(a.ability > 0.0 && a.ability < 1.0) {
                return bad("ability must lie strictly inside (0,1)");
            }
            if !(a.stress_reactivity > 0.0) {
                return bad("stress_reactivity must be positive");
            }
            if !(a.belonging_sensitivity > 0.0) {
                return bad("belonging_sensitivity must be positive");
            }
            for spec in [a.init_stress, a.init_belonging] {
                if !spec.mean.is_finite() || !(spec.std >= 0.0) || !spec.std.is_finite() {
                    return bad("initial-state distribution needs finite mean and std >= 0");
                }
            }
        }
        let total: f64 = self.archetypes.iter().map(|a| a.frequency).sum();
        if (total - 1.0).abs() > FREQUENCY_TOLERANCE {
            return Err(Error::Archetypes(format!(
                "frequencies sum to {total}, expected 1"
            )));
        }
        Ok(())
    }

    pub fn get(&self, id: u32) -> Option<&Archetype> {
        self.archetypes.iter().find(|a| a.id == id)
    }

    /// Frequency-weighted mean ability of the cohort.
    pub fn mean_ability(&self) -> f64 {
        self.archetypes.iter().map(|a| a.frequency * a.ability).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum AgentStatus {
    Active,
    Dropped,
    Graduated,
}

impl AgentStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            AgentStatus::Active => "ACTIVE",
            AgentStatus::Dropped => "DROPPED",
            AgentStatus::Graduated => "GRADUATED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DropoutCause {
    Normative,
    Academic,
    Other,
}

impl DropoutCause {
    pub fn as_str(self) -> &'static str {
        match self {
            DropoutCause::Normative => "NORMATIVE",
            DropoutCause::Academic => "ACADEMIC",
            DropoutCause::Other => "OTHER",
        }
    }
}

/// A regularized course whose final exam is still pending.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DebtItem {
    pub course: usize,
    pub semester_incurred: u32,
}

impl DebtItem {
    pub fn age(&self, current_semester: u32) -> u32 {
        current_semester.saturating_sub(self.semester_incurred)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    pub agent_id: u32,
    /// Position of the archetype in its table.
    pub archetype: usize,
    pub stress: f64,
    pub belonging: f64,
    pub transcript: Transcript,
    pub finals_debt: Vec<DebtItem>,
    pub status: AgentStatus,
    pub dropout_semester: Option<u32>,
    pub dropout_cause: Option<DropoutCause>,
    pub graduation_semester: Option<u32>,
    pub killer_failures: u32,
    pub remedial_acceptances: u32,
}

impl AgentState {
    pub fn new(agent_id: u32, archetype: usize, stress: f64, belonging: f64) -> Self {
        Self {
            agent_id,
            archetype,
            stress: stress.clamp(0.0, 1.0),
            belonging: belonging.clamp(0.0, 1.0),
            transcript: Transcript::new(),
            finals_debt: Vec::new(),
            status: AgentStatus::Active,
            dropout_semester: None,
            dropout_cause: None,
            graduation_semester: None,
            killer_failures: 0,
            remedial_acceptances: 0,
        }
    }

    pub fn is_active(&self) -> bool {
        self.status == AgentStatus::Active
    }
}

/// Draws from Normal(mean, std) truncated to [0,1] by resampling; after
/// [`MAX_TRUNCATION_ATTEMPTS`] rejections the last draw is clamped.
pub fn truncated_unit_normal<R: Rng + ?Sized>(spec: NormalSpec, rng: &mut R) -> f64 {
    if spec.std == 0.0 {
        return spec.mean.clamp(0.0, 1.0);
    }
    let mut x = spec.mean;
    for _ in 0..MAX_TRUNCATION_ATTEMPTS {
        let z: f64 = rng.sample(StandardNormal);
        x = spec.mean + spec.std * z;
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
    x.clamp(0.0, 1.0)
}

/// Initial (stress, belonging) for an agent of archetype `a`.
pub fn init_psych_state<R: Rng + ?Sized>(a: &Archetype, rng: &mut R) -> (f64, f64) {
    let stress = truncated_unit_normal(a.init_stress, rng);
    let belonging = truncated_unit_normal(a.init_belonging, rng);
    (stress, belonging)
}

/// Samples `n` agents with ids `0..n`. Archetype labels are i.i.d. from the
/// table frequencies; each agent draws from its own addressed stream, so the
/// cohort is a pure function of `(table, n, seed)`.
pub fn sample_cohort(table: &ArchetypeTable, n: usize, seed: u64) -> Result<Vec<AgentState>> {
    table.validate()?;
    let weights = WeightedIndex::new(table.archetypes.iter().map(|a| a.frequency))
        .map_err(|e| Error::Archetypes(e.to_string()))?;
    let streams = ReplicationStreams::new(seed);
    Ok((0..n)
        .map(|i| {
            let id = i as u64;
            let archetype = weights.sample(&mut streams.stream(id, 0, Purpose::Archetype, 0));
            let (stress, belonging) = init_psych_state(
                &table.archetypes[archetype],
                &mut streams.stream(id, 0, Purpose::InitPsych, 0),
            );
            AgentState::new(i as u32, archetype, stress, belonging)
        })
        .collect())
}
