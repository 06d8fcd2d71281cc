//! Quadratic pseudo-Boolean models for the min-idle scheduling problem.
//!
//! A [`QuboModel`] stores a minimisation objective
//! `offset + sum_v a_v x_v + sum_{u<v} q_uv x_u x_v` over binary variables.
//! Squares are folded into the linear part at build time (`x^2 = x`), so the
//! quadratic map never holds diagonal entries.
//!
//! Variables are ordered deterministically: decision variables first (jobs in
//! instance order, machine-minor in the unidentical encoding), then slack bits
//! slot-major, bit-minor.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instance::{Instance, Selection};

/// Role of a single binary variable.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarRole {
    /// `x_i` (identical machines) or `x_ij` (`machine` is 1-based).
    Decision { job: usize, machine: Option<u32> },
    /// One bit of the integer slack for `slot`, worth `coefficient` units.
    Slack { slot: u32, coefficient: u32 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VariableRegistry {
    roles: Vec<VarRole>,
}

impl VariableRegistry {
    pub fn from_roles(roles: Vec<VarRole>) -> Self {
        Self { roles }
    }

    /// A registry of `n` decision variables, one per job.
    pub fn decisions(n: usize) -> Self {
        Self::from_roles((0..n).map(|job| VarRole::Decision { job, machine: None }).collect())
    }

    fn push(&mut self, role: VarRole) -> usize {
        self.roles.push(role);
        self.roles.len() - 1
    }

    pub fn len(&self) -> usize {
        self.roles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roles.is_empty()
    }

    pub fn role(&self, var: usize) -> Option<VarRole> {
        self.roles.get(var).copied()
    }

    pub fn roles(&self) -> &[VarRole] {
        &self.roles
    }

    pub fn decision_vars(&self) -> impl Iterator<Item = (usize, usize, Option<u32>)> + '_ {
        self.roles.iter().enumerate().filter_map(|(v, r)| match *r {
            VarRole::Decision { job, machine } => Some((v, job, machine)),
            VarRole::Slack { .. } => None,
        })
    }

    pub fn slack_vars(&self) -> impl Iterator<Item = (usize, u32, u32)> + '_ {
        self.roles.iter().enumerate().filter_map(|(v, r)| match *r {
            VarRole::Slack { slot, coefficient } => Some((v, slot, coefficient)),
            VarRole::Decision { .. } => None,
        })
    }

    pub fn decision_count(&self) -> usize {
        self.decision_vars().count()
    }

    pub fn slack_count(&self) -> usize {
        self.slack_vars().count()
    }

    /// Slack bits of one slot as `(var, coefficient)`.
    pub fn slack_bits(&self, slot: u32) -> Vec<(usize, u32)> {
        self.slack_vars().filter(|&(_, s, _)| s == slot).map(|(v, _, c)| (v, c)).collect()
    }

    /// Decision variables that belong to `job`.
    pub fn job_vars(&self, job: usize) -> Vec<usize> {
        self.decision_vars().filter(|&(_, j, _)| j == job).map(|(v, _, _)| v).collect()
    }

    pub fn is_unidentical(&self) -> bool {
        self.decision_vars().any(|(_, _, m)| m.is_some())
    }
}

/// Penalty weights. `p1` guards the hard occupancy constraint, `p2` the soft
/// (idle time) constraint, `p_pair` mutual exclusions and `p_elig` placements
/// on ineligible machines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyConfig {
    pub p1: f64,
    pub p2: f64,
    pub p_pair: f64,
    pub p_elig: f64,
}

impl PenaltyConfig {
    /// `p2 = 0` is accepted and switches idle-time minimisation off.
    pub fn validate(&self) -> Result<()> {
        let all = [self.p1, self.p2, self.p_pair, self.p_elig];
        if all.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidPenalties("penalties must be finite".into()));
        }
        if self.p2 < 0.0 {
            return Err(Error::InvalidPenalties(format!("p2 = {} must be nonnegative", self.p2)));
        }
        if self.p1 <= self.p2 {
            return Err(Error::InvalidPenalties(format!("p1 = {} must be larger than p2 = {}", self.p1, self.p2)));
        }
        if self.p_pair <= 0.0 || self.p_elig <= 0.0 {
            return Err(Error::InvalidPenalties("p_pair and p_elig must be positive".into()));
        }
        Ok(())
    }
}

/// Penalties derived from the instance: with `W` the total job weight, `K`
/// the slot count and `M` the machine count, `p1 = 2 (W + 1)` and
/// `p2 = (W + 1) / (K M^2)`.
///
/// A feasible slot deviates from `M` by at most `M`, so the soft terms of any
/// feasible selection sum to at most `W + 1`, while any overfull slot costs at
/// least `p1 - W = W + 2` net of the weight it could gain. Hard violations
/// therefore always lose against every feasible selection.
pub fn default_penalties(inst: &Instance) -> Result<PenaltyConfig> {
    if inst.is_empty() {
        return Err(Error::EmptyInstance);
    }
    let slots = f64::from(inst.horizon.max(1));
    let m = f64::from(inst.machines.max(1));
    let scale = inst.total_weight() + 1.0;
    let p1 = 2.0 * scale;
    Ok(PenaltyConfig { p1, p2: scale / (slots * m * m), p_pair: p1, p_elig: p1 })
}

/// Coefficients of the binary expansion of an integer slack in `0..=bound`.
///
/// Powers of two, with the last coefficient clamped so the subset sums cover
/// exactly `0..=bound`. Uses `ceil(log2(bound + 1))` bits.
pub fn slack_binary_expansion(bound: u32) -> Vec<u32> {
    if bound == 0 {
        return Vec::new();
    }
    let bits = 32 - bound.leading_zeros();
    let mut coeffs: Vec<u32> = (0..bits - 1).map(|b| 1 << b).collect();
    coeffs.push(bound - ((1u32 << (bits - 1)) - 1));
    coeffs
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuboModel {
    linear: Vec<f64>,
    #[serde(with = "pair_map")]
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
    registry: VariableRegistry,
}

impl QuboModel {
    /// A model with no terms over the given variables.
    pub fn new(registry: VariableRegistry) -> Self {
        Self { linear: vec![0.0; registry.len()], quadratic: BTreeMap::new(), offset: 0.0, registry }
    }

    pub fn n_vars(&self) -> usize {
        self.linear.len()
    }

    pub fn linear(&self) -> &[f64] {
        &self.linear
    }

    pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        &self.quadratic
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn registry(&self) -> &VariableRegistry {
        &self.registry
    }

    pub fn linear_coefficient(&self, var: usize) -> f64 {
        self.linear.get(var).copied().unwrap_or(0.0)
    }

    pub fn quadratic_coefficient(&self, u: usize, v: usize) -> f64 {
        self.quadratic.get(&ordered(u, v)).copied().unwrap_or(0.0)
    }

    fn check_var(&self, var: usize) -> Result<()> {
        if var < self.n_vars() {
            Ok(())
        } else {
            Err(Error::UnknownVariable(var))
        }
    }

    pub fn add_offset(&mut self, value: f64) {
        self.offset += value;
    }

    pub fn add_linear(&mut self, var: usize, value: f64) -> Result<()> {
        self.check_var(var)?;
        self.linear[var] += value;
        Ok(())
    }

    /// Adds `value * x_u * x_v`; `u == v` folds into the linear term.
    pub fn add_quadratic(&mut self, u: usize, v: usize, value: f64) -> Result<()> {
        self.check_var(u)?;
        self.check_var(v)?;
        if u == v {
            self.linear[u] += value;
        } else {
            *self.quadratic.entry(ordered(u, v)).or_insert(0.0) += value;
        }
        Ok(())
    }

    /// Adds `scale * (sum_t c_t x_t + constant)^2`. Variables in `terms` must
    /// be distinct.
    fn add_squared(&mut self, terms: &[(usize, f64)], constant: f64, scale: f64) {
        if scale == 0.0 {
            return;
        }
        self.offset += scale * constant * constant;
        for (a, &(u, cu)) in terms.iter().enumerate() {
            self.linear[u] += scale * (cu * cu + 2.0 * cu * constant);
            for &(v, cv) in &terms[a + 1..] {
                *self.quadratic.entry(ordered(u, v)).or_insert(0.0) += scale * 2.0 * cu * cv;
            }
        }
    }

    /// Penalises selecting jobs `i` and `j` together: every pair of their
    /// decision variables gains `penalty` on its quadratic coefficient.
    pub fn add_mutual_exclusion(&mut self, i: usize, j: usize, penalty: f64) -> Result<()> {
        let vi = self.registry.job_vars(i);
        let vj = self.registry.job_vars(j);
        if vi.is_empty() {
            return Err(Error::UnknownVariable(i));
        }
        if vj.is_empty() {
            return Err(Error::UnknownVariable(j));
        }
        if i == j {
            return Err(Error::InvalidInstance(vec![format!("job {i} cannot exclude itself")]));
        }
        for &u in &vi {
            for &v in &vj {
                self.add_quadratic(u, v, penalty)?;
            }
        }
        Ok(())
    }

    pub fn energy(&self, bits: &[bool]) -> Result<f64> {
        if bits.len() != self.n_vars() {
            return Err(Error::LengthMismatch { expected: self.n_vars(), got: bits.len() });
        }
        Ok(self.energy_unchecked(bits))
    }

    pub(crate) fn energy_unchecked(&self, bits: &[bool]) -> f64 {
        let lin: f64 = self.linear.iter().zip(bits).filter(|(_, &b)| b).map(|(a, _)| a).sum();
        let quad: f64 = self.quadratic.iter().filter(|(&(u, v), _)| bits[u] && bits[v]).map(|(_, q)| q).sum();
        self.offset + lin + quad
    }

    /// Decision bits projected onto jobs; slack bits are discarded.
    pub fn decode(&self, bits: &[bool]) -> Result<Decoded> {
        if bits.len() != self.n_vars() {
            return Err(Error::LengthMismatch { expected: self.n_vars(), got: bits.len() });
        }
        let mut decoded = Decoded::default();
        let mut machines_of: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
        for (v, job, machine) in self.registry.decision_vars() {
            if !bits[v] {
                continue;
            }
            decoded.selection.insert(job);
            if let Some(m) = machine {
                machines_of.entry(job).or_default().push(m);
                decoded.placements.push((job, m));
            }
        }
        decoded.multi_assigned = machines_of.into_iter().filter(|(_, ms)| ms.len() > 1).map(|(j, _)| j).collect();
        Ok(decoded)
    }

    pub fn to_ising(&self) -> IsingModel {
        let mut h = vec![0.0; self.n_vars()];
        let mut j = BTreeMap::new();
        let mut offset = self.offset;
        for (v, &a) in self.linear.iter().enumerate() {
            h[v] -= a / 2.0;
            offset += a / 2.0;
        }
        for (&(u, v), &q) in &self.quadratic {
            *j.entry((u, v)).or_insert(0.0) += q / 4.0;
            h[u] -= q / 4.0;
            h[v] -= q / 4.0;
            offset += q / 4.0;
        }
        IsingModel { h, j, offset }
    }

    /// Number of body lines in the coordinate-list export.
    pub fn term_count(&self) -> usize {
        self.linear.iter().filter(|&&a| a != 0.0).count() + self.quadratic.values().filter(|&&q| q != 0.0).count()
    }

    pub fn export<W: Write>(&self, format: ExportFormat, mut out: W) -> Result<()> {
        match format {
            ExportFormat::Coo => out.write_all(self.to_coo().as_bytes())?,
            ExportFormat::Json => serde_json::to_writer_pretty(&mut out, self)?,
        }
        Ok(())
    }

    /// Coordinate-list text: a `p qubo <n_vars> <n_terms>` header, comment
    /// lines for the offset and variable roles, then `i i a` for linear and
    /// `i j q` (`i < j`) for quadratic terms. Zero coefficients are omitted.
    pub fn to_coo(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "p qubo {} {}", self.n_vars(), self.term_count());
        let _ = writeln!(s, "c offset {}", self.offset);
        for (v, role) in self.registry.roles().iter().enumerate() {
            let _ = match role {
                VarRole::Decision { job, machine: None } => writeln!(s, "c var {v} decision {job}"),
                VarRole::Decision { job, machine: Some(m) } => {
                    writeln!(s, "c var {v} decision {job} {m}")
                }
                VarRole::Slack { slot, coefficient } => {
                    writeln!(s, "c var {v} slack {slot} {coefficient}")
                }
            };
        }
        for (v, &a) in self.linear.iter().enumerate().filter(|(_, &a)| a != 0.0) {
            let _ = writeln!(s, "{v} {v} {a}");
        }
        for (&(u, v), &q) in self.quadratic.iter().filter(|(_, &q)| q != 0.0) {
            let _ = writeln!(s, "{u} {v} {q}");
        }
        s
    }

    /// Parses the coordinate-list format written by [`QuboModel::to_coo`].
    /// Files without role comments get one decision variable per index.
    pub fn from_coo(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::QuboFormat { line, msg: msg.to_string() };
        let mut model: Option<QuboModel> = None;
        let mut declared_terms = 0usize;
        let mut seen_terms = 0usize;
        let mut offset = 0.0;
        let mut roles: Vec<Option<VarRole>> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "p" => {
                    if fields.len() != 4 || fields[1] != "qubo" {
                        return Err(err(lineno, "expected `p qubo <n_vars> <n_terms>`"));
                    }
                    let n: usize = fields[2].parse().map_err(|_| err(lineno, "bad variable count"))?;
                    declared_terms = fields[3].parse().map_err(|_| err(lineno, "bad term count"))?;
                    roles = vec![None; n];
                    model = Some(QuboModel::new(VariableRegistry::decisions(n)));
                }
                "c" => match fields.get(1).copied() {
                    Some("offset") => {
                        offset = parse_field(fields.get(2), lineno, "offset")?;
                    }
                    Some("var") => {
                        let var: usize = parse_field(fields.get(2), lineno, "variable index")?;
                        let role = match fields.get(3).copied() {
                            Some("decision") => VarRole::Decision {
                                job: parse_field(fields.get(4), lineno, "job")?,
                                machine: match fields.get(5) {
                                    Some(m) => Some(parse_field(Some(m), lineno, "machine")?),
                                    None => None,
                                },
                            },
                            Some("slack") => VarRole::Slack {
                                slot: parse_field(fields.get(4), lineno, "slot")?,
                                coefficient: parse_field(fields.get(5), lineno, "coefficient")?,
                            },
                            _ => return Err(err(lineno, "unknown variable role")),
                        };
                        let slot = roles.get_mut(var).ok_or_else(|| err(lineno, "variable out of range"))?;
                        *slot = Some(role);
                    }
                    _ => {}
                },
                _ => {
                    let m = model.as_mut().ok_or_else(|| err(lineno, "term before header"))?;
                    if fields.len() != 3 {
                        return Err(err(lineno, "expected `i j value`"));
                    }
                    let u: usize = parse_field(Some(&fields[0]), lineno, "index")?;
                    let v: usize = parse_field(Some(&fields[1]), lineno, "index")?;
                    let value: f64 = parse_field(Some(&fields[2]), lineno, "value")?;
                    m.add_quadratic(u, v, value).map_err(|_| err(lineno, "variable out of range"))?;
                    seen_terms += 1;
                }
            }
        }
        let mut model = model.ok_or_else(|| err(0, "missing header"))?;
        if seen_terms != declared_terms {
            return Err(err(0, &format!("header declares {declared_terms} terms, found {seen_terms}")));
        }
        model.offset = offset;
        if roles.iter().any(Option::is_some) {
            let resolved: Option<Vec<VarRole>> = roles.into_iter().collect();
            model.registry = VariableRegistry::from_roles(resolved.ok_or_else(|| err(0, "partial role annotations"))?);
        }
        Ok(model)
    }
}

fn parse_field<T: std::str::FromStr>(field: Option<&&str>, line: usize, what: &str) -> Result<T> {
    field.and_then(|f| f.parse().ok()).ok_or_else(|| Error::QuboFormat { line, msg: format!("bad {what}") })
}

fn ordered(u: usize, v: usize) -> (usize, usize) {
    if u < v {
        (u, v)
    } else {
        (v, u)
    }
}

/// Pair-keyed maps as `[u, v, value]` triples, since JSON keys must be strings.
mod pair_map {
    use std::collections::BTreeMap;

    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(map: &BTreeMap<(usize, usize), f64>, ser: S) -> Result<S::Ok, S::Error> {
        map.iter().map(|(&(u, v), &q)| (u, v, q)).collect::<Vec<_>>().serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<BTreeMap<(usize, usize), f64>, D::Error> {
        let triples = Vec::<(usize, usize, f64)>::deserialize(de)?;
        Ok(triples.into_iter().map(|(u, v, q)| ((u, v), q)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExportFormat {
    Coo,
    Json,
}

/// Jobs selected by a bit assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Decoded {
    pub selection: Selection,
    /// `(job, machine)` for each active `x_ij`; empty for identical machines.
    pub placements: Vec<(usize, u32)>,
    /// Jobs placed on more than one machine. Such states are infeasible.
    pub multi_assigned: Vec<usize>,
}

/// Spin model `offset + sum_i h_i s_i + sum_{i<j} J_ij s_i s_j` over
/// `s_i in {-1, +1}`, related to the binary model by `x = (1 - s) / 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    pub h: Vec<f64>,
    #[serde(with = "pair_map")]
    pub j: BTreeMap<(usize, usize), f64>,
    pub offset: f64,
}

impl IsingModel {
    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.h.len() {
            return Err(Error::LengthMismatch { expected: self.h.len(), got: spins.len() });
        }
        let field: f64 = self.h.iter().zip(spins).map(|(h, &s)| h * f64::from(s)).sum();
        let coupling: f64 = self.j.iter().map(|(&(u, v), j)| j * f64::from(spins[u]) * f64::from(spins[v])).sum();
        Ok(self.offset + field + coupling)
    }

    /// Spin for each bit: `x = 1` maps to `s = -1`.
    pub fn spins_from_bits(bits: &[bool]) -> Vec<i8> {
        bits.iter().map(|&b| if b { -1 } else { 1 }).collect()
    }
}

/// Per-slot bookkeeping shared by both encodings.
struct SlotPlan {
    covering: Vec<usize>,
    target: u32,
    slack: Vec<(usize, u32)>,
}

/// Lays out slack bits after `first_slack` and returns one plan per slot.
///
/// The slack for slot `k` ranges over `0..=min(M, c_k)` where `c_k` counts the
/// jobs covering the slot. Where `c_k > M` the hard term is the usual
/// `occupancy + slack = M`. Where `c_k <= M` the slot can never be overfull,
/// so no hard term is added and its slack bits stay free: they keep the
/// variable layout uniform without raising a `p1` barrier against every
/// change of the selection.
fn plan_slots(inst: &Instance, registry: &mut VariableRegistry) -> Vec<SlotPlan> {
    let mut covering: Vec<Vec<usize>> = vec![Vec::new(); inst.horizon as usize];
    for (pos, job) in inst.jobs.iter().enumerate() {
        for slot in job.start..job.end.min(inst.horizon) {
            covering[slot as usize].push(pos);
        }
    }
    covering
        .into_iter()
        .enumerate()
        .map(|(slot, covering)| {
            let target = inst.machines.min(covering.len() as u32);
            let slack = slack_binary_expansion(target)
                .into_iter()
                .map(|coefficient| (registry.push(VarRole::Slack { slot: slot as u32, coefficient }), coefficient))
                .collect();
            SlotPlan { covering, target, slack }
        })
        .collect()
}

fn add_slot_terms(
    model: &mut QuboModel,
    plan: &SlotPlan,
    occupancy_vars: &[usize],
    inst: &Instance,
    pen: &PenaltyConfig,
) {
    if plan.covering.len() > inst.machines as usize {
        let mut hard: Vec<(usize, f64)> = occupancy_vars.iter().map(|&v| (v, 1.0)).collect();
        hard.extend(plan.slack.iter().map(|&(v, c)| (v, f64::from(c))));
        model.add_squared(&hard, -f64::from(plan.target), pen.p1);
    }
    let soft: Vec<(usize, f64)> = occupancy_vars.iter().map(|&v| (v, 1.0)).collect();
    model.add_squared(&soft, -f64::from(inst.machines), pen.p2);
}

/// Min-idle encoding for identical machines: the weight objective (negated),
/// the hard occupancy constraint with binary-expanded slack, the soft
/// exactly-`M` constraint and one `p_pair` term per exclusion pair.
pub fn encode_min_idle(inst: &Instance, pen: &PenaltyConfig) -> Result<QuboModel> {
    pen.validate()?;
    inst.ensure_valid()?;
    if inst.eligibility.is_some() {
        return Err(Error::InvalidInstance(vec![
            "instance has an eligibility map; use the unidentical-machine encoding".into(),
        ]));
    }
    let mut registry = VariableRegistry::decisions(inst.len());
    let plans = plan_slots(inst, &mut registry);
    let mut model = QuboModel::new(registry);
    for (pos, job) in inst.jobs.iter().enumerate() {
        model.linear[pos] -= job.weight;
    }
    for plan in &plans {
        add_slot_terms(&mut model, plan, &plan.covering, inst, pen);
    }
    for (a, b) in inst.exclusion_positions() {
        model.add_mutual_exclusion(a, b, pen.p_pair)?;
    }
    Ok(model)
}

/// Unidentical-machine encoding over `x_ij` (job `i` on machine `j`).
///
/// Adds `p1 x_ij x_ij'` for every pair of machines of one job, `p_elig x_ij`
/// wherever machine `j` is not eligible for job `i`, and occupancy terms that
/// sum over both jobs and machines.
pub fn encode_unidentical(inst: &Instance, pen: &PenaltyConfig) -> Result<QuboModel> {
    pen.validate()?;
    inst.ensure_valid()?;
    if inst.eligibility.is_none() {
        return Err(Error::MissingEligibility);
    }
    let m = inst.machines;
    let mut registry = VariableRegistry::default();
    for job in 0..inst.len() {
        for machine in 1..=m {
            registry.push(VarRole::Decision { job, machine: Some(machine) });
        }
    }
    let var = |job: usize, machine: u32| job * m as usize + (machine as usize - 1);
    let plans = plan_slots(inst, &mut registry);
    let mut model = QuboModel::new(registry);
    for (pos, job) in inst.jobs.iter().enumerate() {
        let eligible = inst.eligible_machines(pos);
        for j in 1..=m {
            model.linear[var(pos, j)] -= job.weight;
            if !eligible.contains(&j) {
                model.linear[var(pos, j)] += pen.p_elig;
            }
            for j2 in j + 1..=m {
                model.add_quadratic(var(pos, j), var(pos, j2), pen.p1)?;
            }
        }
    }
    for plan in &plans {
        let vars: Vec<usize> = plan.covering.iter().flat_map(|&i| (1..=m).map(move |j| var(i, j))).collect();
        add_slot_terms(&mut model, plan, &vars, inst, pen);
    }
    for (a, b) in inst.exclusion_positions() {
        model.add_mutual_exclusion(a, b, pen.p_pair)?;
    }
    Ok(model)
}

/// Picks the encoding that matches the instance: unidentical when an
/// eligibility map is present, min-idle otherwise.
pub fn encode(inst: &Instance, pen: &PenaltyConfig) -> Result<QuboModel> {
    if inst.eligibility.is_some() {
        encode_unidentical(inst, pen)
    } else {
        encode_min_idle(inst, pen)
    }
}
