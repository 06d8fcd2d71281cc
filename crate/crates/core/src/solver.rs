//! Simulated annealing over [`QuboModel`]s, an exhaustive oracle for small
//! models, and the policies that pick a schedule out of a sample set.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{evaluate, Instance, Selection, ViolationReport};
use crate::qubo::QuboModel;

/// Largest model [`brute_force`] will enumerate.
pub const BRUTE_FORCE_MAX_VARS: usize = 24;

/// Annealing parameters. Temperatures left as `None` are derived from the
/// model by [`AnnealSchedule::temperatures`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub reads: usize,
    pub sweeps: usize,
    pub t_init: Option<f64>,
    pub t_final: Option<f64>,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    fn default() -> Self {
        Self { reads: 1000, sweeps: 1000, t_init: None, t_final: None, seed: 0 }
    }
}

impl AnnealSchedule {
    pub fn validate(&self) -> Result<()> {
        if self.reads == 0 || self.sweeps == 0 {
            return Err(Error::InvalidSchedule("reads and sweeps must be at least 1".into()));
        }
        for t in [self.t_init, self.t_final].into_iter().flatten() {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::InvalidSchedule(format!("temperature {t} must be positive")));
            }
        }
        if let (Some(hot), Some(cold)) = (self.t_init, self.t_final) {
            if hot < cold {
                return Err(Error::InvalidSchedule(format!("t_init {hot} is below t_final {cold}")));
            }
        }
        Ok(())
    }

    /// Resolved `(t_init, t_final)`.
    ///
    /// The default hot end is the largest single-flip energy change seen on a
    /// few probe states, so early sweeps accept almost everything. The default
    /// cold end is `10^-3 t_init`, lowered to a tenth of the smallest nonzero
    /// flip change when that is smaller so the final sweeps resolve the
    /// finest energy differences of the model.
    pub fn resolve_temperatures(&self, model: &QuboModel) -> Result<(f64, f64)> {
        self.validate()?;
        let (hot, fine) = probe_deltas(model, self.seed);
        let t_init = self.t_init.unwrap_or(hot);
        let t_final = match self.t_final {
            Some(t) => t,
            None => {
                let mut t = 1e-3 * t_init;
                if fine > 0.0 {
                    t = t.min(fine / 10.0);
                }
                t
            }
        };
        if t_init < t_final {
            return Err(Error::InvalidSchedule(format!("t_init {t_init} is below t_final {t_final}")));
        }
        Ok((t_init, t_final))
    }

    /// One temperature per sweep, geometric from `t_init` to `t_final`.
    pub fn temperatures(&self, model: &QuboModel) -> Result<Vec<f64>> {
        let (hot, cold) = self.resolve_temperatures(model)?;
        Ok(geometric(hot, cold, self.sweeps))
    }
}

fn geometric(hot: f64, cold: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![cold];
    }
    let ratio = cold / hot;
    (0..n).map(|s| if s + 1 == n { cold } else { hot * ratio.powf(s as f64 / (n - 1) as f64) }).collect()
}

/// Largest and smallest nonzero single-flip `|delta|` over the all-zero state
/// and three random states.
fn probe_deltas(model: &QuboModel, seed: u64) -> (f64, f64) {
    let n = model.n_vars();
    let adj = Adjacency::new(model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mut max = 0.0f64;
    let mut deltas = Vec::new();
    for probe in 0..4 {
        let bits: Vec<bool> = if probe == 0 { vec![false; n] } else { (0..n).map(|_| rng.gen()).collect() };
        let state = IncrementalState::with_adjacency(model, &adj, bits);
        for v in 0..n {
            let d = state.delta(v).abs();
            max = max.max(d);
            deltas.push(d);
        }
    }
    if max == 0.0 {
        return (1.0, 0.0);
    }
    let floor = 1e-9 * max;
    let fine = deltas.into_iter().filter(|&d| d > floor).fold(f64::INFINITY, f64::min);
    (max, if fine.is_finite() { fine } else { 0.0 })
}

/// Sparse symmetric adjacency of the quadratic terms (CSR layout).
#[derive(Debug, Clone)]
struct Adjacency {
    start: Vec<usize>,
    neighbor: Vec<usize>,
    weight: Vec<f64>,
}

impl Adjacency {
    fn new(model: &QuboModel) -> Self {
        let n = model.n_vars();
        let mut degree = vec![0usize; n];
        for &(u, v) in model.quadratic().keys() {
            degree[u] += 1;
            degree[v] += 1;
        }
        let mut start = vec![0usize; n + 1];
        for v in 0..n {
            start[v + 1] = start[v] + degree[v];
        }
        let mut fill = start.clone();
        let mut neighbor = vec![0usize; start[n]];
        let mut weight = vec![0.0; start[n]];
        for (&(u, v), &q) in model.quadratic() {
            for (a, b) in [(u, v), (v, u)] {
                neighbor[fill[a]] = b;
                weight[fill[a]] = q;
                fill[a] += 1;
            }
        }
        Self { start, neighbor, weight }
    }

    fn of(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.start[v]..self.start[v + 1];
        self.neighbor[range.clone()].iter().copied().zip(self.weight[range].iter().copied())
    }
}

fn local_fields(model: &QuboModel, bits: &[bool]) -> (Vec<f64>, f64) {
    let mut fields = model.linear().to_vec();
    for (&(u, v), &q) in model.quadratic() {
        if bits[u] {
            fields[v] += q;
        }
        if bits[v] {
            fields[u] += q;
        }
    }
    (fields, model.energy_unchecked(bits))
}

/// A bit assignment with local fields `a_v + sum_u q_uv x_u`, so single-flip
/// energy changes cost `O(1)` and applying a flip costs `O(degree)`.
#[derive(Debug, Clone)]
pub struct IncrementalState<'m> {
    adjacency: std::borrow::Cow<'m, Adjacency>,
    bits: Vec<bool>,
    fields: Vec<f64>,
    energy: f64,
}

impl<'m> IncrementalState<'m> {
    pub fn new(model: &QuboModel, bits: Vec<bool>) -> Result<IncrementalState<'static>> {
        if bits.len() != model.n_vars() {
            return Err(Error::LengthMismatch { expected: model.n_vars(), got: bits.len() });
        }
        let (fields, energy) = local_fields(model, &bits);
        Ok(IncrementalState { adjacency: std::borrow::Cow::Owned(Adjacency::new(model)), bits, fields, energy })
    }

    fn with_adjacency(model: &QuboModel, adj: &'m Adjacency, bits: Vec<bool>) -> Self {
        let (fields, energy) = local_fields(model, &bits);
        Self { adjacency: std::borrow::Cow::Borrowed(adj), bits, fields, energy }
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.bits
    }

    /// Energy tracked through incremental updates.
    pub fn energy(&self) -> f64 {
        self.energy
    }

    /// Energy change if `v` were flipped.
    pub fn delta(&self, v: usize) -> f64 {
        if self.bits[v] {
            -self.fields[v]
        } else {
            self.fields[v]
        }
    }

    pub fn flip(&mut self, v: usize) {
        self.energy += self.delta(v);
        self.bits[v] = !self.bits[v];
        let sign = if self.bits[v] { 1.0 } else { -1.0 };
        let adjacency = &self.adjacency;
        for (u, q) in adjacency.of(v) {
            self.fields[u] += sign * q;
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub bits: Vec<bool>,
    pub energy: f64,
    pub occurrences: usize,
}

/// Distinct states with multiplicities, ascending by energy (ties by bits).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    samples: Vec<Sample>,
}

impl SampleSet {
    /// Groups identical states and evaluates each against `model`.
    pub fn from_states(model: &QuboModel, states: impl IntoIterator<Item = Vec<bool>>) -> Result<Self> {
        let mut counts: BTreeMap<Vec<bool>, usize> = BTreeMap::new();
        for bits in states {
            if bits.len() != model.n_vars() {
                return Err(Error::LengthMismatch { expected: model.n_vars(), got: bits.len() });
            }
            *counts.entry(bits).or_insert(0) += 1;
        }
        let mut samples: Vec<Sample> = counts
            .into_iter()
            .map(|(bits, occurrences)| Sample { energy: model.energy_unchecked(&bits), bits, occurrences })
            .collect();
        samples.sort_by(|a, b| a.energy.total_cmp(&b.energy).then_with(|| a.bits.cmp(&b.bits)));
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn best(&self) -> Option<&Sample> {
        self.samples.first()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn total_reads(&self) -> usize {
        self.samples.iter().map(|s| s.occurrences).sum()
    }
}

/// Runs `reads` independent Metropolis chains of `sweeps` sweeps each.
///
/// Every chain starts from a uniformly random state and owns a ChaCha stream
/// derived from `(seed, chain index)`, so results are reproducible regardless
/// of how chains are scheduled across threads. Each sweep proposes every
/// variable once in a fresh random order; a flip with energy change `delta`
/// is accepted with probability `min(1, exp(-delta / t))`.
pub fn simulated_anneal(model: &QuboModel, schedule: &AnnealSchedule) -> Result<SampleSet> {
    if model.n_vars() == 0 {
        return Err(Error::EmptyModel);
    }
    let temperatures = schedule.temperatures(model)?;
    let adj = Adjacency::new(model);
    let states: Vec<Vec<bool>> = (0..schedule.reads)
        .into_par_iter()
        .map(|read| run_chain(model, &adj, &temperatures, schedule.seed, read as u64))
        .collect();
    SampleSet::from_states(model, states)
}

fn run_chain(model: &QuboModel, adj: &Adjacency, temperatures: &[f64], seed: u64, read: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(read);
    let n = model.n_vars();
    let bits: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    let mut state = IncrementalState::with_adjacency(model, adj, bits);
    let mut order: Vec<usize> = (0..n).collect();
    for &t in temperatures {
        order.shuffle(&mut rng);
        for &v in &order {
            let delta = state.delta(v);
            // Moves costing more than 40 t are accepted with probability
            // below 1e-17; skip the draw.
            if delta <= 0.0 || (delta < 40.0 * t && rng.gen::<f64>() < (-delta / t).exp()) {
                state.flip(v);
            }
        }
    }
    state.into_bits()
}

/// Global minimum by exhaustive enumeration. Among states within `1e-9`
/// (relative) of the minimum, the one with the smallest bit pattern read as
/// an unsigned integer (variable 0 least significant) wins.
pub fn brute_force(model: &QuboModel) -> Result<(Vec<bool>, f64)> {
    let n = model.n_vars();
    if n > BRUTE_FORCE_MAX_VARS {
        return Err(Error::ModelTooLarge(n));
    }
    let adj = Adjacency::new(model);
    let mut state = IncrementalState::with_adjacency(model, &adj, vec![false; n]);
    let scale = 1.0
        + model.offset().abs()
        + model.linear().iter().map(|a| a.abs()).sum::<f64>()
        + model.quadratic().values().map(|q| q.abs()).sum::<f64>();
    let screen = 1e-6 * scale;
    let mut best_pattern = 0u64;
    let mut best = model.energy_unchecked(state.bits());
    // Gray-code walk: step i flips the lowest set bit of i.
    let mut pattern = 0u64;
    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        state.flip(v);
        pattern ^= 1 << v;
        if state.energy() > best + screen {
            continue;
        }
        let exact = model.energy_unchecked(state.bits());
        let tol = 1e-9 * (1.0 + best.abs());
        if exact < best - tol || (exact <= best + tol && pattern < best_pattern) {
            best = exact;
            best_pattern = pattern;
        }
    }
    let bits: Vec<bool> = (0..n).map(|v| best_pattern >> v & 1 == 1).collect();
    let energy = model.energy_unchecked(&bits);
    Ok((bits, energy))
}

/// How to choose among hard-feasible samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Policy {
    /// Largest total weight; fewer soft violations, then lower energy break ties.
    MaxWeight,
    /// Fewest soft violations; larger weight, then lower energy break ties.
    MinSoft,
}

impl Policy {
    pub const ALL: [Policy; 2] = [Policy::MaxWeight, Policy::MinSoft];

    pub fn name(self) -> &'static str {
        match self {
            Policy::MaxWeight => "max-weight",
            Policy::MinSoft => "min-soft",
        }
    }
}

impl std::str::FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "max-weight" | "max_weight" | "max_weight_feasible" => Ok(Policy::MaxWeight),
            "min-soft" | "min_soft" => Ok(Policy::MinSoft),
            other => Err(format!("unknown policy `{other}` (expected max-weight or min-soft)")),
        }
    }
}

/// A decoded sample with its feasibility assessment.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub sample_index: usize,
    pub energy: f64,
    pub selection: Selection,
    /// `(job, machine)` pairs for unidentical-machine models.
    pub placements: Vec<(usize, u32)>,
    pub multi_assigned: Vec<usize>,
    /// Placements on machines outside the job's eligibility set.
    pub ineligible: Vec<(usize, u32)>,
    pub report: ViolationReport,
}

impl Candidate {
    pub fn is_feasible(&self) -> bool {
        self.report.is_feasible() && self.multi_assigned.is_empty() && self.ineligible.is_empty()
    }
}

/// Decodes and evaluates every sample, in sample order.
pub fn candidates(samples: &SampleSet, model: &QuboModel, inst: &Instance) -> Result<Vec<Candidate>> {
    samples
        .samples()
        .iter()
        .enumerate()
        .map(|(sample_index, sample)| {
            let decoded = model.decode(&sample.bits)?;
            let report = evaluate(inst, &decoded.selection);
            let ineligible = decoded
                .placements
                .iter()
                .copied()
                .filter(|&(job, m)| !inst.eligible_machines(job).contains(&m))
                .collect();
            Ok(Candidate {
                sample_index,
                energy: sample.energy,
                selection: decoded.selection,
                placements: decoded.placements,
                multi_assigned: decoded.multi_assigned,
                ineligible,
                report,
            })
        })
        .collect()
}

fn weight_cmp(a: f64, b: f64) -> Ordering {
    if (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs())) {
        Ordering::Equal
    } else {
        a.total_cmp(&b)
    }
}

/// Best hard-feasible candidate under `policy`, or `None` when every sample
/// is infeasible.
pub fn select_solution(
    samples: &SampleSet,
    model: &QuboModel,
    inst: &Instance,
    policy: Policy,
) -> Result<Option<Candidate>> {
    Ok(pick(candidates(samples, model, inst)?, policy))
}

/// Applies `policy` to already-evaluated candidates.
pub fn pick(candidates: Vec<Candidate>, policy: Policy) -> Option<Candidate> {
    candidates.into_iter().filter(Candidate::is_feasible).min_by(|a, b| {
        let weight = weight_cmp(b.report.total_weight, a.report.total_weight);
        let soft = a.report.soft_violations.cmp(&b.report.soft_violations);
        let primary = match policy {
            Policy::MaxWeight => weight.then(soft),
            Policy::MinSoft => soft.then(weight),
        };
        primary.then_with(|| a.sample_index.cmp(&b.sample_index))
    })
}
