//! Prerequisite-constrained curriculum graph.
//!
//! Courses are addressed internally by their position in the graph
//! (`usize` index); ids are kept for I/O and diagnostics.

mod synthetic;

use std::collections::{BTreeSet, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::ScenarioKind;

pub use synthetic::{generate_synthetic_curriculum, BottleneckSpec, GeneratorConfig};

/// Latest nominal semester a bottleneck course may sit in.
pub const MAX_BOTTLENECK_SEMESTER: u32 = 4;
/// Nominal plan length in semesters.
pub const PLAN_SEMESTERS: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Course {
    pub id: String,
    pub name: String,
    pub nominal_semester: u32,
    pub friction: f64,
    pub is_bottleneck: bool,
    pub prerequisites: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CurriculumFile {
    pub courses: Vec<Course>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FindingKind {
    EmptyCurriculum,
    EmptyId,
    DuplicateId,
    FrictionOutOfRange,
    NominalSemesterOutOfRange,
    DanglingPrerequisite,
    SelfPrerequisite,
    DuplicatePrerequisite,
    LateBottleneck,
    Cycle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Finding {
    pub kind: FindingKind,
    /// Offending course ids; for cycles, the cycle in prerequisite order.
    pub courses: Vec<String>,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.findings.is_empty()
    }

    fn push(&mut self, kind: FindingKind, courses: Vec<String>, message: String) {
        self.findings.push(Finding {
            kind,
            courses,
            message,
        });
    }
}

/// Checks every course and graph invariant. Acyclicity is established by a
/// Kahn topological ordering; courses left unordered are walked along their
/// prerequisites to extract each distinct cycle.
pub fn validate_courses(courses: &[Course]) -> ValidationReport {
    let mut report = ValidationReport::default();
    if courses.is_empty() {
        report.push(
            FindingKind::EmptyCurriculum,
            vec![],
            "curriculum has no courses".into(),
        );
        return report;
    }

    let mut index: HashMap<&str, usize> = HashMap::new();
    for (i, c) in courses.iter().enumerate() {
        if c.id.is_empty() {
            report.push(FindingKind::EmptyId, vec![], format!("course #{i} has an empty id"));
        }
        if index.insert(c.id.as_str(), i).is_some() {
            report.push(
                FindingKind::DuplicateId,
                vec![c.id.clone()],
                format!("duplicate course id {}", c.id),
            );
        }
    }

    for c in courses {
        if !(0.0..=1.0).contains(&c.friction) {
            report.push(
                FindingKind::FrictionOutOfRange,
                vec![c.id.clone()],
                format!("friction out of range: {} has friction {}", c.id, c.friction),
            );
        }
        if !(1..=PLAN_SEMESTERS).contains(&c.nominal_semester) {
            report.push(
                FindingKind::NominalSemesterOutOfRange,
                vec![c.id.clone()],
                format!(
                    "nominal semester out of range: {} has semester {}",
                    c.id, c.nominal_semester
                ),
            );
        }
        if c.is_bottleneck && c.nominal_semester > MAX_BOTTLENECK_SEMESTER {
            report.push(
                FindingKind::LateBottleneck,
                vec![c.id.clone()],
                format!(
                    "bottleneck {} sits in semester {} (must be <= {MAX_BOTTLENECK_SEMESTER})",
                    c.id, c.nominal_semester
                ),
            );
        }
        let mut seen = BTreeSet::new();
        for p in &c.prerequisites {
            if p == &c.id {
                report.push(
                    FindingKind::SelfPrerequisite,
                    vec![c.id.clone()],
                    format!("{} lists itself as prerequisite", c.id),
                );
            } else if !index.contains_key(p.as_str()) {
                report.push(
                    FindingKind::DanglingPrerequisite,
                    vec![c.id.clone(), p.clone()],
                    format!("{} requires unknown course {p}", c.id),
                );
            } else if !seen.insert(p.as_str()) {
                report.push(
                    FindingKind::DuplicatePrerequisite,
                    vec![c.id.clone(), p.clone()],
                    format!("{} lists prerequisite {p} twice", c.id),
                );
            }
        }
    }

    // Edges restricted to well-formed prerequisites.
    let prereqs: Vec<Vec<usize>> = courses
        .iter()
        .map(|c| {
            let mut v: Vec<usize> = c
                .prerequisites
                .iter()
                .filter(|p| *p != &c.id)
                .filter_map(|p| index.get(p.as_str()).copied())
                .collect();
            v.sort_unstable();
            v.dedup();
            v
        })
        .collect();
    if let Err(leftover) = topological_order(&prereqs) {
        for cycle in extract_cycles(&prereqs, &leftover) {
            let ids: Vec<String> = cycle.iter().map(|&i| courses[i].id.clone()).collect();
            report.push(
                FindingKind::Cycle,
                ids.clone(),
                format!("prerequisite cycle: {}", ids.join(" -> ")),
            );
        }
    }
    report
}

/// Kahn's algorithm over prerequisite lists. On failure returns the nodes
/// that could not be ordered.
fn topological_order(prereqs: &[Vec<usize>]) -> std::result::Result<Vec<usize>, Vec<usize>> {
    let n = prereqs.len();
    let mut indegree: Vec<usize> = prereqs.iter().map(Vec::len).collect();
    let mut dependents = vec![Vec::new(); n];
    for (c, ps) in prereqs.iter().enumerate() {
        for &p in ps {
            dependents[p].push(c);
        }
    }
    let mut queue: VecDeque<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(i) = queue.pop_front() {
        order.push(i);
        for &d in &dependents[i] {
            indegree[d] -= 1;
            if indegree[d] == 0 {
                queue.push_back(d);
            }
        }
    }
    if order.len() == n {
        Ok(order)
    } else {
        Err((0..n).filter(|&i| indegree[i] > 0).collect())
    }
}

/// Every node left over by Kahn's algorithm has an unordered prerequisite, so
/// following those edges always closes a cycle. Cycles are reported once,
/// rotated to start at their smallest index.
fn extract_cycles(prereqs: &[Vec<usize>], leftover: &[usize]) -> Vec<Vec<usize>> {
    let in_leftover: BTreeSet<usize> = leftover.iter().copied().collect();
    let mut seen_cycles: BTreeSet<Vec<usize>> = BTreeSet::new();
    let mut cycles = Vec::new();
    for &start in leftover {
        let mut path = vec![start];
        let mut pos: HashMap<usize, usize> = HashMap::from([(start, 0)]);
        let mut cur = start;
        loop {
            let next = prereqs[cur]
                .iter()
                .copied()
                .find(|p| in_leftover.contains(p))
                .expect("leftover node has an unordered prerequisite");
            if let Some(&at) = pos.get(&next) {
                let mut cycle = path[at..].to_vec();
                let min_at = cycle
                    .iter()
                    .enumerate()
                    .min_by_key(|(_, &v)| v)
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                cycle.rotate_left(min_at);
                let key = {
                    let mut k = cycle.clone();
                    k.sort_unstable();
                    k
                };
                if seen_cycles.insert(key) {
                    cycles.push(cycle);
                }
                break;
            }
            pos.insert(next, path.len());
            path.push(next);
            cur = next;
        }
    }
    cycles
}

/// Immutable, validated curriculum.
#[derive(Debug, Clone, PartialEq)]
pub struct CurriculumGraph {
    courses: Vec<Course>,
    index: HashMap<String, usize>,
    prereqs: Vec<Vec<usize>>,
    plan_order: Vec<usize>,
    topo_order: Vec<usize>,
}

impl CurriculumGraph {
    pub fn from_courses(courses: Vec<Course>) -> Result<Self> {
        let report = validate_courses(&courses);
        if let Some(f) = report.findings.into_iter().next() {
            return Err(match f.kind {
                FindingKind::Cycle => Error::Cycle(f.courses),
                _ => Error::Curriculum {
                    course: f.courses.first().cloned().unwrap_or_default(),
                    reason: f.message,
                },
            });
        }
        let index: HashMap<String, usize> = courses
            .iter()
            .enumerate()
            .map(|(i, c)| (c.id.clone(), i))
            .collect();
        let prereqs: Vec<Vec<usize>> = courses
            .iter()
            .map(|c| {
                let mut v: Vec<usize> = c.prerequisites.iter().map(|p| index[p]).collect();
                v.sort_unstable();
                v
            })
            .collect();
        let topo_order = topological_order(&prereqs).expect("validated graph is acyclic");
        let mut plan_order: Vec<usize> = (0..courses.len()).collect();
        plan_order.sort_by(|&a, &b| {
            (courses[a].nominal_semester, &courses[a].id)
                .cmp(&(courses[b].nominal_semester, &courses[b].id))
        });
        Ok(Self {
            courses,
            index,
            prereqs,
            plan_order,
            topo_order,
        })
    }

    pub fn len(&self) -> usize {
        self.courses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.courses.is_empty()
    }

    pub fn courses(&self) -> &[Course] {
        &self.courses
    }

    pub fn course(&self, idx: usize) -> &Course {
        &self.courses[idx]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn prerequisites(&self, idx: usize) -> &[usize] {
        &self.prereqs[idx]
    }

    pub fn edge_count(&self) -> usize {
        self.prereqs.iter().map(Vec::len).sum()
    }

    /// Courses sorted by (nominal semester, id): the recommended plan.
    pub fn plan_order(&self) -> &[usize] {
        &self.plan_order
    }

    pub fn topological_order(&self) -> &[usize] {
        &self.topo_order
    }

    pub fn bottlenecks(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.courses.len()).filter(|&i| self.courses[i].is_bottleneck)
    }

    pub fn ids(&self, idxs: &[usize]) -> Vec<String> {
        idxs.iter().map(|&i| self.courses[i].id.clone()).collect()
    }

    /// Re-runs every invariant check on the graph.
    pub fn validate(&self) -> ValidationReport {
        validate_courses(&self.courses)
    }

    /// Indices of all courses that transitively require `idx`.
    pub fn descendants(&self, idx: usize) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &c in &self.topo_order {
            if self.prereqs[c].iter().any(|&p| p == idx || out.contains(&p)) {
                out.insert(c);
            }
        }
        out
    }

    pub fn to_file(&self) -> CurriculumFile {
        CurriculumFile {
            courses: self.courses.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file()).expect("curriculum serializes")
    }
}

pub fn load_curriculum(source: &str) -> Result<CurriculumGraph> {
    let file: CurriculumFile =
        serde_json::from_str(source).map_err(|e| Error::Parse(format!("curriculum: {e}")))?;
    CurriculumGraph::from_courses(file.courses)
}

pub fn validate_graph(g: &CurriculumGraph) -> ValidationReport {
    g.validate()
}

/// Per-agent course record, indexed by graph position.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Transcript {
    passed: Vec<bool>,
    regularized: Vec<bool>,
    failed_attempts: Vec<u32>,
    n_passed: usize,
}

fn set_flag(v: &mut Vec<bool>, idx: usize, value: bool) {
    if v.len() <= idx {
        v.resize(idx + 1, false);
    }
    v[idx] = value;
}

impl Transcript {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_passed(&self, idx: usize) -> bool {
        self.passed.get(idx).copied().unwrap_or(false)
    }

    pub fn is_regularized(&self, idx: usize) -> bool {
        self.regularized.get(idx).copied().unwrap_or(false)
    }

    /// Marks a course passed; it leaves the regularized set.
    pub fn mark_passed(&mut self, idx: usize) {
        if !self.is_passed(idx) {
            self.n_passed += 1;
        }
        set_flag(&mut self.passed, idx, true);
        if self.is_regularized(idx) {
            self.regularized[idx] = false;
        }
    }

    /// Ignored for courses already passed.
    pub fn mark_regularized(&mut self, idx: usize) {
        if !self.is_passed(idx) {
            set_flag(&mut self.regularized, idx, true);
        }
    }

    pub fn record_failure(&mut self, idx: usize) {
        if self.failed_attempts.len() <= idx {
            self.failed_attempts.resize(idx + 1, 0);
        }
        self.failed_attempts[idx] += 1;
    }

    pub fn failed_attempts(&self, idx: usize) -> u32 {
        self.failed_attempts.get(idx).copied().unwrap_or(0)
    }

    pub fn total_failed_attempts(&self) -> u32 {
        self.failed_attempts.iter().sum()
    }

    pub fn passed_count(&self) -> usize {
        self.n_passed
    }

    pub fn passed(&self) -> impl Iterator<Item = usize> + '_ {
        self.passed
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| p.then_some(i))
    }

    pub fn regularized(&self) -> impl Iterator<Item = usize> + '_ {
        self.regularized
            .iter()
            .enumerate()
            .filter_map(|(i, &p)| p.then_some(i))
    }
}

/// Courses open for enrolment, in plan order, truncated to `workload_cap`.
///
/// A course is open when it is neither passed nor (under regime A)
/// regularized, and each prerequisite is satisfied: passed, or under regime A
/// also regularized.
pub fn available_courses(
    g: &CurriculumGraph,
    t: &Transcript,
    regime: ScenarioKind,
    workload_cap: usize,
) -> Vec<usize> {
    let mut out = Vec::with_capacity(workload_cap.min(g.len()));
    if workload_cap == 0 {
        return out;
    }
    let debt_counts = regime == ScenarioKind::Historical;
    let satisfied = |p: usize| t.is_passed(p) || (debt_counts && t.is_regularized(p));
    for &c in &g.plan_order {
        if t.is_passed(c) || (debt_counts && t.is_regularized(c)) {
            continue;
        }
        if g.prereqs[c].iter().all(|&p| satisfied(p)) {
            out.push(c);
            if out.len() == workload_cap {
                break;
            }
        }
    }
    out
}
