//! Scheduling instances, job selections and feasibility evaluation.
//!
//! Time is discretised into unit slots. A job occupying `[start, end)` covers
//! slots `start..end`, so two jobs where one ends exactly when the other
//! starts share no slot and can run back-to-back on the same machine. An
//! instance with horizon `K` has the slots `0..K`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A job with a fixed half-open interval `[start, end)` and a nonnegative weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Job {
    pub id: String,
    pub start: u32,
    pub end: u32,
    pub weight: f64,
}

impl Job {
    pub fn new(id: impl Into<String>, start: u32, end: u32, weight: f64) -> Self {
        Self { id: id.into(), start, end, weight }
    }

    pub fn duration(&self) -> u32 {
        self.end.saturating_sub(self.start)
    }

    pub fn covers(&self, slot: u32) -> bool {
        self.start <= slot && slot < self.end
    }

    pub fn overlaps(&self, other: &Job) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// An operational fixed interval scheduling instance.
///
/// Eligibility sets hold 1-based machine indices, the same numbering used by
/// [`crate::assign::Assignment`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub machines: u32,
    pub horizon: u32,
    pub jobs: Vec<Job>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub exclusions: Vec<[String; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eligibility: Option<BTreeMap<String, Vec<u32>>>,
}

impl Instance {
    pub fn new(machines: u32, horizon: u32, jobs: Vec<Job>) -> Self {
        Self { machines, horizon, jobs, exclusions: Vec::new(), eligibility: None }
    }

    pub fn with_exclusions(mut self, pairs: impl IntoIterator<Item = (String, String)>) -> Self {
        self.exclusions.extend(pairs.into_iter().map(|(a, b)| [a, b]));
        self
    }

    pub fn with_eligibility(mut self, eligibility: BTreeMap<String, Vec<u32>>) -> Self {
        self.eligibility = Some(eligibility);
        self
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.jobs.iter().map(|j| j.weight).sum()
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.jobs.iter().position(|j| j.id == id)
    }

    /// Number of jobs covering each slot.
    pub fn coverage(&self) -> Vec<u32> {
        let mut diff = vec![0i64; self.horizon as usize + 1];
        for job in &self.jobs {
            let s = job.start.min(self.horizon) as usize;
            let e = job.end.min(self.horizon) as usize;
            if s < e {
                diff[s] += 1;
                diff[e] -= 1;
            }
        }
        prefix_counts(&diff, self.horizon as usize)
    }

    /// Exclusion pairs resolved to job positions. Unknown ids are skipped;
    /// `validate` reports them.
    pub fn exclusion_positions(&self) -> Vec<(usize, usize)> {
        let index = self.id_index();
        self.exclusions
            .iter()
            .filter_map(|[a, b]| Some((*index.get(a.as_str())?, *index.get(b.as_str())?)))
            .filter(|(a, b)| a != b)
            .collect()
    }

    /// Eligible machines (1-based) for the job at `pos`; every machine when
    /// the instance carries no eligibility map or the job has no entry.
    pub fn eligible_machines(&self, pos: usize) -> Vec<u32> {
        let all = || (1..=self.machines).collect();
        match &self.eligibility {
            None => all(),
            Some(map) => map.get(&self.jobs[pos].id).cloned().unwrap_or_else(all),
        }
    }

    fn id_index(&self) -> HashMap<&str, usize> {
        self.jobs.iter().enumerate().map(|(i, j)| (j.id.as_str(), i)).collect()
    }

    /// Every invariant breach, in a stable order. An empty list means the
    /// instance is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut defects = Vec::new();
        if self.machines == 0 {
            defects.push("machine count must be positive".to_string());
        }
        if self.horizon == 0 {
            defects.push("horizon must be positive".to_string());
        }
        let mut seen = HashSet::new();
        for job in &self.jobs {
            if !seen.insert(job.id.as_str()) {
                defects.push(format!("job {}: duplicate id", job.id));
            }
            if job.start >= job.end {
                defects.push(format!("job {}: empty interval [{}, {})", job.id, job.start, job.end));
            }
            if job.end > self.horizon {
                defects.push(format!(
                    "job {}: interval [{}, {}) exceeds horizon {}",
                    job.id, job.start, job.end, self.horizon
                ));
            }
            if !job.weight.is_finite() || job.weight < 0.0 {
                defects.push(format!("job {}: weight {} is not a finite nonnegative number", job.id, job.weight));
            }
        }
        for [a, b] in &self.exclusions {
            for id in [a, b] {
                if !seen.contains(id.as_str()) {
                    defects.push(format!("exclusion pair ({a}, {b}) references unknown job {id}"));
                }
            }
            if a == b {
                defects.push(format!("exclusion pair ({a}, {b}) pairs a job with itself"));
            }
        }
        if let Some(map) = &self.eligibility {
            for (id, set) in map {
                if !seen.contains(id.as_str()) {
                    defects.push(format!("eligibility entry references unknown job {id}"));
                }
                if set.is_empty() {
                    defects.push(format!("job {id}: empty eligibility set"));
                }
                for &m in set {
                    if m == 0 || m > self.machines {
                        defects.push(format!("job {id}: eligible machine {m} outside 1..={}", self.machines));
                    }
                }
            }
        }
        defects
    }

    /// `validate`, turned into an error when any defect exists.
    pub fn ensure_valid(&self) -> Result<()> {
        let defects = self.validate();
        if defects.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidInstance(defects))
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    /// Selection of the jobs with the given ids.
    pub fn select_ids<S: AsRef<str>>(&self, ids: &[S]) -> Result<Selection> {
        let index = self.id_index();
        let mut sel = Selection::default();
        for id in ids {
            let id = id.as_ref();
            let pos = index.get(id).ok_or_else(|| Error::InvalidInstance(vec![format!("unknown job {id}")]))?;
            sel.insert(*pos);
        }
        Ok(sel)
    }
}

/// A subset of jobs, by position in [`Instance::jobs`].
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Selection {
    pub chosen: BTreeSet<usize>,
}

impl Selection {
    pub fn from_positions(positions: impl IntoIterator<Item = usize>) -> Self {
        Self { chosen: positions.into_iter().collect() }
    }

    pub fn insert(&mut self, pos: usize) -> bool {
        self.chosen.insert(pos)
    }

    pub fn contains(&self, pos: usize) -> bool {
        self.chosen.contains(&pos)
    }

    pub fn len(&self) -> usize {
        self.chosen.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chosen.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.chosen.iter().copied()
    }

    pub fn ids<'a>(&'a self, inst: &'a Instance) -> Vec<&'a str> {
        self.iter().filter_map(|p| inst.jobs.get(p)).map(|j| j.id.as_str()).collect()
    }

    pub fn jobs<'a>(&'a self, inst: &'a Instance) -> Vec<&'a Job> {
        self.iter().filter_map(|p| inst.jobs.get(p)).collect()
    }
}

/// Per-slot occupancy of a selection together with violation counts.
///
/// A slot is a hard violation when more than `M` chosen jobs cover it and a
/// soft violation whenever its occupancy differs from `M`, so every hard
/// violation is also a soft one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViolationReport {
    pub occupancy: Vec<u32>,
    pub hard_violations: usize,
    pub soft_violations: usize,
    /// Exclusion pairs with both members chosen.
    pub exclusion_violations: usize,
    pub total_weight: f64,
}

impl ViolationReport {
    pub fn is_feasible(&self) -> bool {
        self.hard_violations == 0 && self.exclusion_violations == 0
    }

    /// Slots with occupancy below the machine count.
    pub fn idle_slots(&self, machines: u32) -> usize {
        self.occupancy.iter().filter(|&&o| o < machines).count()
    }
}

/// Number of chosen jobs covering `slot`.
pub fn occupancy(inst: &Instance, sel: &Selection, slot: u32) -> Result<u32> {
    if slot >= inst.horizon {
        return Err(Error::SlotOutOfRange { slot, horizon: inst.horizon });
    }
    Ok(sel.jobs(inst).iter().filter(|j| j.covers(slot)).count() as u32)
}

/// Occupancy profile, violation counts and total weight of a selection in
/// `O(N + K)`.
pub fn evaluate(inst: &Instance, sel: &Selection) -> ViolationReport {
    let k = inst.horizon as usize;
    let mut diff = vec![0i64; k + 1];
    let mut total_weight = 0.0;
    for job in sel.jobs(inst) {
        total_weight += job.weight;
        let s = (job.start as usize).min(k);
        let e = (job.end as usize).min(k);
        if s < e {
            diff[s] += 1;
            diff[e] -= 1;
        }
    }
    let occupancy = prefix_counts(&diff, k);
    let m = inst.machines;
    let hard_violations = occupancy.iter().filter(|&&o| o > m).count();
    let soft_violations = occupancy.iter().filter(|&&o| o != m).count();
    let exclusion_violations =
        inst.exclusion_positions().into_iter().filter(|&(a, b)| sel.contains(a) && sel.contains(b)).count();
    ViolationReport { occupancy, hard_violations, soft_violations, exclusion_violations, total_weight }
}

fn prefix_counts(diff: &[i64], len: usize) -> Vec<u32> {
    diff[..len]
        .iter()
        .scan(0i64, |acc, d| {
            *acc += d;
            Some(*acc as u32)
        })
        .collect()
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Four jobs with weights 5, 6, 18, 7 on one machine over six slots.
    /// `{b1, b3}` weighs 23 and leaves slot 2 idle; `{b1, b2, b4}` weighs 18
    /// and covers every slot exactly once.
    pub(crate) fn four_job_fixture() -> Instance {
        Instance::new(
            1,
            6,
            vec![
                Job::new("b1", 0, 2, 5.0),
                Job::new("b2", 2, 4, 6.0),
                Job::new("b3", 3, 6, 18.0),
                Job::new("b4", 4, 6, 7.0),
            ],
        )
    }

    #[test]
    fn fixture_is_valid() {
        assert!(four_job_fixture().validate().is_empty());
    }

    #[test]
    fn empty_interval_is_a_defect() {
        let inst = Instance::new(1, 6, vec![Job::new("a", 3, 3, 1.0)]);
        let defects = inst.validate();
        assert_eq!(defects.len(), 1);
        assert!(defects[0].contains("empty interval"));
    }

    #[test]
    fn dangling_exclusion_is_a_defect() {
        let inst = four_job_fixture().with_exclusions([("b1".into(), "zz".into())]);
        let defects = inst.validate();
        assert_eq!(defects.len(), 1);
        assert!(defects[0].contains("unknown job zz"));
    }

    #[test]
    fn out_of_horizon_and_bad_eligibility_are_defects() {
        let mut elig = BTreeMap::new();
        elig.insert("a".to_string(), vec![]);
        elig.insert("b".to_string(), vec![3]);
        let inst =
            Instance::new(2, 4, vec![Job::new("a", 0, 5, 1.0), Job::new("b", 0, 1, -1.0)]).with_eligibility(elig);
        let defects = inst.validate();
        assert_eq!(defects.len(), 4, "{defects:?}");
    }

    #[test]
    fn occupancy_of_empty_selection_is_zero() {
        let inst = four_job_fixture();
        for k in 0..inst.horizon {
            assert_eq!(occupancy(&inst, &Selection::default(), k).unwrap(), 0);
        }
    }

    #[test]
    fn occupancy_rejects_slots_past_horizon() {
        let inst = four_job_fixture();
        assert!(matches!(
            occupancy(&inst, &Selection::default(), 6),
            Err(Error::SlotOutOfRange { slot: 6, horizon: 6 })
        ));
    }

    #[test]
    fn gap_between_b1_and_b3() {
        let inst = four_job_fixture();
        let sel = inst.select_ids(&["b1", "b3"]).unwrap();
        assert_eq!(occupancy(&inst, &sel, 2).unwrap(), 0);
        let report = evaluate(&inst, &sel);
        assert_eq!(report.total_weight, 23.0);
        assert_eq!(report.hard_violations, 0);
        assert_eq!(report.soft_violations, 1);
        assert_eq!(report.idle_slots(1), 1);
    }

    #[test]
    fn gapless_schedule() {
        let inst = four_job_fixture();
        let sel = inst.select_ids(&["b1", "b2", "b4"]).unwrap();
        for k in 0..inst.horizon {
            assert_eq!(occupancy(&inst, &sel, k).unwrap(), 1);
        }
        let report = evaluate(&inst, &sel);
        assert_eq!(report.total_weight, 18.0);
        assert_eq!((report.hard_violations, report.soft_violations), (0, 0));
    }

    #[test]
    fn all_four_jobs_overfill() {
        let inst = four_job_fixture();
        let report = evaluate(&inst, &Selection::from_positions(0..4));
        assert_eq!(report.occupancy, vec![1, 1, 1, 2, 2, 2]);
        assert_eq!(report.hard_violations, 3);
        assert!(report.hard_violations <= report.soft_violations);
    }

    #[test]
    fn exclusion_pairs_are_counted() {
        let inst = four_job_fixture().with_exclusions([("b1".into(), "b2".into())]);
        let sel = inst.select_ids(&["b1", "b2", "b4"]).unwrap();
        let report = evaluate(&inst, &sel);
        assert_eq!(report.exclusion_violations, 1);
        assert!(!report.is_feasible());
    }

    #[test]
    fn json_uses_the_documented_field_names() {
        let text = r#"{
            "machines": 2, "horizon": 4,
            "jobs": [{"id": "a", "start": 0, "end": 2, "weight": 1.5},
                     {"id": "b", "start": 1, "end": 4, "weight": 0}],
            "exclusions": [["a", "b"]],
            "eligibility": {"a": [1], "b": [1, 2]}
        }"#;
        let inst = Instance::from_json(text).unwrap();
        assert!(inst.validate().is_empty());
        assert_eq!(inst.exclusion_positions(), vec![(0, 1)]);
        assert_eq!(inst.eligible_machines(0), vec![1]);
        assert_eq!(Instance::from_json(&inst.to_json().unwrap()).unwrap(), inst);
    }
}
