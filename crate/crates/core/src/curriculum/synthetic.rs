//! Seeded generator for synthetic curricula.
//!
//! Courses are spread over the ten-semester plan, bottlenecks first in
//! semester 1. Every course after semester 1 requires one course from the
//! previous semester plus, with probability `chain_density`, one more from any
//! earlier semester. Two repair passes then add edges until each bottleneck is
//! an ancestor of at least `min_bottleneck_reach` of the post-year-1 courses
//! and every post-year-1 course sits downstream of some bottleneck. All edges
//! point forward in the plan, so the result is acyclic by construction.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Course, CurriculumGraph, PLAN_SEMESTERS};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BottleneckSpec {
    pub name: String,
    pub friction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorConfig {
    pub course_count: usize,
    pub bottlenecks: Vec<BottleneckSpec>,
    /// Probability that a course gets a second, long-range prerequisite.
    pub chain_density: f64,
    /// Friction range for non-bottleneck courses, drawn uniformly.
    pub friction_min: f64,
    pub friction_max: f64,
    /// Share of post-year-1 courses each bottleneck must block.
    pub min_bottleneck_reach: f64,
    /// Course names in plan order; bottlenecks take their own names.
    #[serde(default)]
    pub names: Vec<String>,
}

impl GeneratorConfig {
    /// Parameters of the shipped 42-course fixture.
    pub fn default_fixture() -> Self {
        Self {
            course_count: 42,
            bottlenecks: vec![
                BottleneckSpec {
                    name: "Calculus I".into(),
                    friction: 0.70,
                },
                BottleneckSpec {
                    name: "Physics I".into(),
                    friction: 0.70,
                },
                BottleneckSpec {
                    name: "Algebra".into(),
                    friction: 0.66,
                },
            ],
            chain_density: 0.35,
            friction_min: 0.05,
            friction_max: 0.25,
            min_bottleneck_reach: 0.6,
            names: FIXTURE_NAMES.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Seed used for the shipped fixture file.
    pub const FIXTURE_SEED: u64 = 7;
}

const FIXTURE_NAMES: [&str; 39] = [
    "Introduction to Engineering",
    "Technical Drawing",
    "Calculus II",
    "Physics II",
    "Chemistry",
    "Computing Fundamentals",
    "Analytic Geometry",
    "Calculus III",
    "Statics",
    "Probability and Statistics",
    "Materials Science",
    "Numerical Methods",
    "Strength of Materials",
    "Fluid Mechanics",
    "Topography",
    "Engineering Geology",
    "Structural Analysis I",
    "Hydraulics",
    "Soil Mechanics I",
    "Construction Materials",
    "Structural Analysis II",
    "Hydrology",
    "Soil Mechanics II",
    "Reinforced Concrete I",
    "Transportation Engineering",
    "Steel Structures",
    "Reinforced Concrete II",
    "Foundations",
    "Sanitary Engineering",
    "Road Design",
    "Timber Structures",
    "Hydraulic Works",
    "Environmental Engineering",
    "Construction Management",
    "Bridge Engineering",
    "Urban Planning",
    "Engineering Economics",
    "Professional Practice",
    "Final Project",
];

fn semester_sizes(n: usize) -> Vec<usize> {
    let slots = (PLAN_SEMESTERS as usize).min(n.max(1));
    (0..slots)
        .map(|s| n / slots + usize::from(s < n % slots))
        .collect()
}

fn descendants(prereqs: &[BTreeSet<usize>], root: usize) -> BTreeSet<usize> {
    // indices are in plan order and edges point forward
    let mut out = BTreeSet::new();
    for (c, pre) in prereqs.iter().enumerate().skip(root + 1) {
        if pre.iter().any(|&p| p == root || out.contains(&p)) {
            out.insert(c);
        }
    }
    out
}

pub fn generate_synthetic_curriculum(params: &GeneratorConfig, seed: u64) -> Result<CurriculumGraph> {
    let n = params.course_count;
    if n == 0 {
        return Err(Error::Generator("course_count must be positive".into()));
    }
    if !(0.0..=1.0).contains(&params.chain_density) {
        return Err(Error::Generator("chain_density must lie in [0,1]".into()));
    }
    if !(0.0 <= params.friction_min
        && params.friction_min <= params.friction_max
        && params.friction_max <= 1.0)
    {
        return Err(Error::Generator("friction range must satisfy 0 <= min <= max <= 1".into()));
    }
    if !(0.0..=1.0).contains(&params.min_bottleneck_reach) {
        return Err(Error::Generator("min_bottleneck_reach must lie in [0,1]".into()));
    }
    if let Some(b) = params.bottlenecks.iter().find(|b| !(0.0..=1.0).contains(&b.friction)) {
        return Err(Error::Generator(format!(
            "bottleneck {} friction {} outside [0,1]",
            b.name, b.friction
        )));
    }

    let sizes = semester_sizes(n);
    let year1_slots: usize = sizes.iter().take(2).sum();
    if params.bottlenecks.len() > year1_slots {
        return Err(Error::Generator(format!(
            "{} bottlenecks requested but year 1 has only {year1_slots} slots",
            params.bottlenecks.len()
        )));
    }

    let mut semester_of = Vec::with_capacity(n);
    for (s, &size) in sizes.iter().enumerate() {
        semester_of.extend(std::iter::repeat_n(s as u32 + 1, size));
    }
    let first_of: Vec<usize> = sizes
        .iter()
        .scan(0, |acc, &s| {
            let start = *acc;
            *acc += s;
            Some(start)
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = n.to_string().len().max(2);
    let n_bottlenecks = params.bottlenecks.len();
    let mut other_names = params.names.iter();

    let mut courses: Vec<Course> = (0..n)
        .map(|i| {
            let (name, friction, is_bottleneck) = match params.bottlenecks.get(i) {
                Some(b) => (b.name.clone(), b.friction, true),
                None => {
                    let f = if params.friction_max > params.friction_min {
                        rng.random_range(params.friction_min..params.friction_max)
                    } else {
                        params.friction_min
                    };
                    let name = other_names
                        .next()
                        .cloned()
                        .unwrap_or_else(|| format!("Course {}", i + 1));
                    (name, (f * 100.0).round() / 100.0, false)
                }
            };
            Course {
                id: format!("C{:0width$}", i + 1),
                name,
                nominal_semester: semester_of[i],
                friction,
                is_bottleneck,
                prerequisites: vec![],
            }
        })
        .collect();

    let mut prereqs: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for c in 0..n {
        let s = semester_of[c] as usize;
        if s < 2 {
            continue;
        }
        let prev_lo = first_of[s - 2];
        let prev_hi = first_of[s - 1];
        prereqs[c].insert(rng.random_range(prev_lo..prev_hi));
        if rng.random_bool(params.chain_density) && prev_hi > 1 {
            let extra = rng.random_range(0..prev_hi);
            prereqs[c].insert(extra);
        }
    }

    let downstream: Vec<usize> = (0..n).filter(|&c| semester_of[c] > 2).collect();
    let required = (params.min_bottleneck_reach * downstream.len() as f64).ceil() as usize;
    for b in 0..n_bottlenecks {
        loop {
            let reach = descendants(&prereqs, b);
            let covered = downstream.iter().filter(|c| reach.contains(c)).count();
            if covered >= required {
                break;
            }
            let target = *downstream
                .iter()
                .find(|c| !reach.contains(c))
                .expect("uncovered downstream course exists");
            let source = std::iter::once(b)
                .chain(reach.iter().copied())
                .filter(|&s| semester_of[s] < semester_of[target])
                .max_by_key(|&s| (semester_of[s], std::cmp::Reverse(s)))
                .expect("bottleneck precedes every downstream course");
            prereqs[target].insert(source);
        }
    }

    if n_bottlenecks > 0 {
        let mut reaching: BTreeSet<usize> = (0..n_bottlenecks).collect();
        for c in n_bottlenecks..n {
            if prereqs[c].iter().any(|p| reaching.contains(p)) {
                reaching.insert(c);
            } else if semester_of[c] > 2 {
                let source = reaching
                    .iter()
                    .copied()
                    .filter(|&s| semester_of[s] < semester_of[c])
                    .max_by_key(|&s| (semester_of[s], std::cmp::Reverse(s)))
                    .expect("bottlenecks sit in year 1");
                prereqs[c].insert(source);
                reaching.insert(c);
            }
        }
    }

    for (c, ps) in prereqs.iter().enumerate() {
        courses[c].prerequisites = ps.iter().map(|&p| courses[p].id.clone()).collect();
    }
    CurriculumGraph::from_courses(courses)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_for_seed() {
        let p = GeneratorConfig::default_fixture();
        let a = generate_synthetic_curriculum(&p, 7).unwrap();
        let b = generate_synthetic_curriculum(&p, 7).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.to_json(), b.to_json());
        let c = generate_synthetic_curriculum(&p, 8).unwrap();
        assert_ne!(a.to_json(), c.to_json());
    }

    #[test]
    fn single_course() {
        let p = GeneratorConfig {
            course_count: 1,
            bottlenecks: vec![],
            ..GeneratorConfig::default_fixture()
        };
        let g = generate_synthetic_curriculum(&p, 1).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.edge_count(), 0);
    }

    #[test]
    fn too_many_bottlenecks() {
        let mut p = GeneratorConfig::default_fixture();
        p.course_count = 12;
        p.bottlenecks = (0..5)
            .map(|i| BottleneckSpec {
                name: format!("B{i}"),
                friction: 0.6,
            })
            .collect();
        assert!(matches!(
            generate_synthetic_curriculum(&p, 1),
            Err(Error::Generator(_))
        ));
    }

    #[test]
    fn fixture_shape() {
        let g = generate_synthetic_curriculum(&GeneratorConfig::default_fixture(), 7).unwrap();
        assert_eq!(g.len(), 42);
        assert!(g.validate().is_valid());
        let b: Vec<_> = g.bottlenecks().collect();
        assert_eq!(b.len(), 3);
        for i in b {
            let c = g.course(i);
            assert_eq!(c.nominal_semester, 1);
            assert!((0.55..=0.70).contains(&c.friction));
        }
    }
}
