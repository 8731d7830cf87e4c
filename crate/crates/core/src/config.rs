//! Experiment configuration: one JSON document, optional dotted-path
//! overrides, and resolution of the curriculum and archetype sources.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::calibration::CalibrationSettings;
use crate::curriculum::{load_curriculum, CurriculumFile, CurriculumGraph};
use crate::error::{Error, Result};
use crate::policy::{ScenarioKind, ScenarioPolicy};
use crate::population::ArchetypeTable;
use crate::psychodynamics::{HazardParams, PsychUpdateParams};
use crate::rng::replication_seed;

pub const DEFAULT_CURRICULUM_JSON: &str = include_str!("../data/curriculum_default.json");
pub const DEFAULT_ARCHETYPES_JSON: &str = include_str!("../data/archetypes_default.json");
pub const DEFAULT_EXPERIMENT_JSON: &str = include_str!("../data/experiment_default.json");

/// Where a curriculum or archetype table comes from: the keyword
/// `"default"` (shipped fixture), a file path relative to the config file,
/// or the document inline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source<T> {
    Named(String),
    Inline(T),
}

impl<T> Default for Source<T> {
    fn default() -> Self {
        Source::Named("default".into())
    }
}

fn default_debt_cause_threshold() -> usize {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cohort_size: usize,
    pub horizon_semesters: u32,
    pub replications_per_scenario: usize,
    pub master_seed: u64,
    /// Debt items at dropout from which the exit counts as normative.
    #[serde(default = "default_debt_cause_threshold")]
    pub debt_cause_threshold: usize,
    #[serde(default)]
    pub curriculum: Source<CurriculumFile>,
    #[serde(default)]
    pub archetypes: Source<ArchetypeTable>,
    pub hazard: HazardParams,
    pub psych: PsychUpdateParams,
    /// Keyed `A`, `B`, `C`.
    pub scenarios: BTreeMap<String, ScenarioPolicy>,
    #[serde(default)]
    pub calibration: CalibrationSettings,
    /// Written into effective configs; ignored when loading.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metadata: Option<Value>,
}

impl ExperimentConfig {
    pub fn from_json(source: &str) -> Result<Self> {
        let value: Value =
            serde_json::from_str(source).map_err(|e| Error::Parse(format!("config: {e}")))?;
        Self::from_value(value)
    }

    pub fn from_value(value: Value) -> Result<Self> {
        let mut cfg: ExperimentConfig =
            serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
        for (key, policy) in cfg.scenarios.iter_mut() {
            policy.kind = ScenarioKind::from_key(key)
                .ok_or_else(|| Error::Config(format!("unknown scenario key {key:?} (expected A, B or C)")))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn builtin_default() -> Self {
        Self::from_json(DEFAULT_EXPERIMENT_JSON).expect("shipped default config is valid")
    }

    pub fn validate(&self) -> Result<()> {
        if self.cohort_size == 0 {
            return Err(Error::Config("cohort_size must be positive".into()));
        }
        if self.horizon_semesters == 0 {
            return Err(Error::Config("horizon_semesters must be >= 1".into()));
        }
        if self.replications_per_scenario == 0 {
            return Err(Error::Config("replications_per_scenario must be >= 1".into()));
        }
        if self.scenarios.is_empty() {
            return Err(Error::Config("at least one scenario is required".into()));
        }
        self.hazard.validate()?;
        self.psych.validate()?;
        for p in self.scenarios.values() {
            p.validate()?;
        }
        self.calibration.validate()?;
        Ok(())
    }

    pub fn to_value(&self) -> Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ExperimentConfig::from_json(&text)
}

/// Parses `key=value`; the value is read as JSON when possible, otherwise as
/// a bare string.
pub fn parse_override(s: &str) -> Result<(String, Value)> {
    let (key, raw) = s
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override {s:?} is not key=value")))?;
    let key = key.trim();
    if key.is_empty() || key.split('.').any(str::is_empty) {
        return Err(Error::Config(format!("override {s:?} has an empty key segment")));
    }
    let value = serde_json::from_str(raw.trim()).unwrap_or_else(|_| Value::String(raw.trim().into()));
    Ok((key.to_string(), value))
}

/// Sets a dotted path inside a JSON document. Intermediate objects must
/// exist; the leaf may be new (field-name checking happens on
/// deserialization).
pub fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let mut cur = doc;
    let parts: Vec<&str> = key.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let obj = cur
            .as_object_mut()
            .ok_or_else(|| Error::Config(format!("override {key}: {} is not an object", parts[..i].join("."))))?;
        if i + 1 == parts.len() {
            obj.insert(part.to_string(), value);
            return Ok(());
        }
        cur = obj
            .get_mut(*part)
            .ok_or_else(|| Error::Config(format!("override {key}: no section {part:?}")))?;
    }
    unreachable!("key has at least one segment")
}

pub fn apply_overrides(cfg: &ExperimentConfig, overrides: &[(String, Value)]) -> Result<ExperimentConfig> {
    let mut doc = cfg.to_value();
    for (k, v) in overrides {
        set_path(&mut doc, k, v.clone())?;
    }
    ExperimentConfig::from_value(doc)
}

/// Config plus its resolved inputs. Immutable and shared by every
/// replication.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub config: ExperimentConfig,
    pub curriculum: CurriculumGraph,
    pub archetypes: ArchetypeTable,
}

impl Experiment {
    /// Resolves sources; relative paths are taken from `base_dir`.
    pub fn new(config: ExperimentConfig, base_dir: Option<&Path>) -> Result<Self> {
        config.validate()?;
        let read = |p: &str| -> Result<String> {
            let path: PathBuf = match base_dir {
                Some(dir) if Path::new(p).is_relative() => dir.join(p),
                _ => PathBuf::from(p),
            };
            fs::read_to_string(&path).map_err(|e| Error::io(path, e))
        };
        let curriculum = match &config.curriculum {
            Source::Named(n) if n == "default" => load_curriculum(DEFAULT_CURRICULUM_JSON)?,
            Source::Named(p) => load_curriculum(&read(p)?)?,
            Source::Inline(f) => CurriculumGraph::from_courses(f.courses.clone())?,
        };
        let archetypes = match &config.archetypes {
            Source::Named(n) if n == "default" => ArchetypeTable::from_json(DEFAULT_ARCHETYPES_JSON)?,
            Source::Named(p) => ArchetypeTable::from_json(&read(p)?)?,
            Source::Inline(t) => {
                t.validate()?;
                t.clone()
            }
        };
        Ok(Self {
            config,
            curriculum,
            archetypes,
        })
    }

    pub fn builtin_default() -> Self {
        Self::new(ExperimentConfig::builtin_default(), None).expect("shipped fixtures are valid")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::new(load_config(path)?, path.parent())
    }

    /// Same inputs, different config values (overrides, calibrated
    /// parameters). Sources are not re-read.
    pub fn with_config(&self, config: ExperimentConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            curriculum: self.curriculum.clone(),
            archetypes: self.archetypes.clone(),
        })
    }

    /// Configured scenarios in A, B, C order.
    pub fn scenarios(&self) -> Vec<ScenarioPolicy> {
        ScenarioKind::ALL
            .into_iter()
            .filter_map(|k| self.policy(k).cloned())
            .collect()
    }

    pub fn policy(&self, kind: ScenarioKind) -> Option<&ScenarioPolicy> {
        self.config.scenarios.get(kind.key())
    }

    /// Ability used to solve bottleneck frictions under promotion regimes.
    pub fn representative_ability(&self) -> f64 {
        self.archetypes.mean_ability()
    }

    pub fn replication_seed(&self, kind: ScenarioKind, replication: usize) -> u64 {
        replication_seed(self.config.master_seed, kind.rng_tag(), replication as u64)
    }

    /// Fully inlined config with derived values, sufficient to reproduce the
    /// run.
    pub fn effective_config(&self, extra: Option<Value>) -> Value {
        let mut cfg = self.config.clone();
        cfg.curriculum = Source::Inline(self.curriculum.to_file());
        cfg.archetypes = Source::Inline(self.archetypes.clone());
        let scenarios = self.scenarios();
        let seeds: BTreeMap<&str, Vec<u64>> = scenarios
            .iter()
            .map(|p| {
                (
                    p.kind.label(),
                    (0..cfg.replications_per_scenario)
                        .map(|r| self.replication_seed(p.kind, r))
                        .collect(),
                )
            })
            .collect();
        let mut metadata = json!({
            "generator": concat!("promowall ", env!("CARGO_PKG_VERSION")),
            "scenario_labels": scenarios.iter().map(|p| p.kind.label()).collect::<Vec<_>>(),
            "n_scenarios": scenarios.len(),
            "n_replications_per_scenario": cfg.replications_per_scenario,
            "cohort_size": cfg.cohort_size,
            "expected_agent_records": cfg.cohort_size * scenarios.len() * cfg.replications_per_scenario,
            "horizon_semesters": cfg.horizon_semesters,
            "representative_ability": self.representative_ability(),
            "replication_seeds": seeds,
        });
        if let (Some(Value::Object(extra)), Value::Object(m)) = (extra, &mut metadata) {
            m.extend(extra);
        }
        cfg.metadata = Some(metadata);
        cfg.to_value()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_resolves() {
        let e = Experiment::builtin_default();
        assert_eq!(e.config.cohort_size, 1343);
        assert_eq!(e.config.horizon_semesters, 12);
        assert_eq!(e.config.replications_per_scenario, 20);
        assert_eq!(e.curriculum.len(), 42);
        assert_eq!(e.archetypes.archetypes.len(), 13);
        assert_eq!(e.scenarios().len(), 3);
    }

    #[test]
    fn overrides_are_typed() {
        let cfg = ExperimentConfig::builtin_default();
        let o = [
            parse_override("scenarios.C.remedial_capacity_fraction=0.5").unwrap(),
            parse_override("cohort_size=10").unwrap(),
        ];
        let cfg = apply_overrides(&cfg, &o).unwrap();
        assert_eq!(cfg.scenarios["C"].remedial_capacity_fraction, 0.5);
        assert_eq!(cfg.cohort_size, 10);
    }

    #[test]
    fn bad_overrides_rejected() {
        let cfg = ExperimentConfig::builtin_default();
        assert!(parse_override("novalue").is_err());
        assert!(parse_override("a..b=1").is_err());
        let unknown = [parse_override("scenarios.C.capacity=1").unwrap()];
        assert!(apply_overrides(&cfg, &unknown).is_err());
        let missing = [parse_override("nosuch.section.x=1").unwrap()];
        assert!(apply_overrides(&cfg, &missing).is_err());
        let zero_horizon = [parse_override("horizon_semesters=0").unwrap()];
        assert!(matches!(apply_overrides(&cfg, &zero_horizon), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_scenario_key() {
        let mut v = ExperimentConfig::builtin_default().to_value();
        let a = v["scenarios"]["A"].clone();
        v["scenarios"]["D"] = a;
        assert!(ExperimentConfig::from_value(v).is_err());
    }

    #[test]
    fn effective_config_round_trips() {
        let e = Experiment::builtin_default();
        let v = e.effective_config(None);
        assert_eq!(v["metadata"]["expected_agent_records"], 80_580);
        let again = Experiment::new(ExperimentConfig::from_value(v.clone()).unwrap(), None).unwrap();
        assert_eq!(again.curriculum, e.curriculum);
        assert_eq!(again.archetypes, e.archetypes);
        assert_eq!(again.effective_config(None), v);
    }
}
