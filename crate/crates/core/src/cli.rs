//! Command-line front end. Each subcommand is also available as a library
//! function returning the document it prints.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::assign::{greedy_assign, Assignment};
use crate::error::{Error, Result};
use crate::instance::{evaluate, Instance, Job, Selection, ViolationReport};
use crate::music::{
    build_instance, parse_midi, phrase_table, render_reduction, segment_score, Phrase, PhraseRow, SegmentParams,
};
use crate::qubo::{default_penalties, encode, ExportFormat, PenaltyConfig, QuboModel};
use crate::solver::{brute_force, candidates, pick, simulated_anneal, AnnealSchedule, Candidate, Policy, SampleSet};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INFEASIBLE: u8 = 1;
pub const EXIT_INPUT: u8 = 2;

#[derive(Debug, Parser)]
#[command(name = "ofisp", version, about = "Fixed interval scheduling with minimal idle time, via QUBO")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment every track of a MIDI file into weighted phrases.
    Phrases {
        midi: PathBuf,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile an instance to a QUBO model.
    Encode {
        instance: PathBuf,
        #[command(flatten)]
        penalties: PenaltyArgs,
        #[arg(long, value_enum, default_value_t = Format::Coo)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Encode, sample, select under both policies and assign machines.
    Solve {
        instance: PathBuf,
        #[command(flatten)]
        penalties: PenaltyArgs,
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Reduce a multi-track MIDI file to `--machines` tracks.
    Reduce {
        midi: PathBuf,
        #[arg(long)]
        machines: u32,
        #[arg(long, default_value_t = 4)]
        k_max: usize,
        #[command(flatten)]
        penalties: PenaltyArgs,
        #[command(flatten)]
        solver: SolverArgs,
        /// Reduced MIDI file.
        #[arg(long)]
        out: PathBuf,
        /// Run report; printed to stdout when omitted.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Evaluate a solution file against an instance.
    Check {
        instance: PathBuf,
        solution: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Coo,
    Json,
}

impl From<Format> for ExportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Coo => ExportFormat::Coo,
            Format::Json => ExportFormat::Json,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Args)]
pub struct PenaltyArgs {
    /// Hard-constraint penalty; also used for exclusions and eligibility.
    #[arg(long)]
    pub p1: Option<f64>,
    /// Idle-time penalty; 0 switches idle minimisation off.
    #[arg(long)]
    pub p2: Option<f64>,
}

impl PenaltyArgs {
    pub fn resolve(&self, inst: &Instance) -> Result<PenaltyConfig> {
        let mut pen = default_penalties(inst)?;
        if let Some(p1) = self.p1 {
            pen.p1 = p1;
            pen.p_pair = p1;
            pen.p_elig = p1;
        }
        if let Some(p2) = self.p2 {
            pen.p2 = p2;
        }
        pen.validate()?;
        Ok(pen)
    }
}

#[derive(Debug, Clone, Copy, Args)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 1000)]
    pub reads: usize,
    #[arg(long, default_value_t = 1000)]
    pub sweeps: usize,
    #[arg(long)]
    pub t_init: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Policy whose solution is assigned and decides the exit status.
    #[arg(long, default_value = "max-weight")]
    pub policy: Policy,
    /// Enumerate all states instead of annealing when the model is small enough.
    #[arg(long)]
    pub oracle: bool,
}

impl Default for SolverArgs {
    fn default() -> Self {
        let s = AnnealSchedule::default();
        Self {
            reads: s.reads,
            sweeps: s.sweeps,
            t_init: None,
            t_final: None,
            seed: s.seed,
            policy: Policy::MaxWeight,
            oracle: false,
        }
    }
}

impl SolverArgs {
    pub fn schedule(&self) -> AnnealSchedule {
        AnnealSchedule {
            reads: self.reads,
            sweeps: self.sweeps,
            t_init: self.t_init,
            t_final: self.t_final,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceSummary {
    pub jobs: usize,
    pub slots: u32,
    pub machines: u32,
    pub decision_vars: usize,
    pub slack_vars: usize,
    pub total_vars: usize,
    pub quadratic_terms: usize,
}

impl InstanceSummary {
    fn new(inst: &Instance, model: &QuboModel) -> Self {
        let reg = model.registry();
        Self {
            jobs: inst.len(),
            slots: inst.horizon,
            machines: inst.machines,
            decision_vars: reg.decision_count(),
            slack_vars: reg.slack_count(),
            total_vars: model.n_vars(),
            quadratic_terms: model.quadratic().len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// `anneal` or `brute-force`.
    pub method: String,
    pub reads: usize,
    pub sweeps: usize,
    pub t_init: Option<f64>,
    pub t_final: Option<f64>,
    pub seed: u64,
    pub distinct_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionReport {
    pub sample_index: usize,
    pub occurrences: usize,
    pub energy: f64,
    /// Full model state, variable 0 first.
    pub bits: String,
    pub selected: Vec<String>,
    pub weight: f64,
    pub hard_violations: usize,
    pub soft_violations: usize,
    pub exclusion_violations: usize,
    pub idle_slots: usize,
    pub occupancy: Vec<u32>,
    pub machines_used: u32,
    pub assignment: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub encode_ms: f64,
    pub solve_ms: f64,
    pub select_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionSummary {
    pub source: String,
    pub output: String,
    pub source_tracks: usize,
    pub output_tracks: u32,
    pub phrases: usize,
    pub selected_phrases: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: InstanceSummary,
    pub penalties: PenaltyConfig,
    pub solver: SolverSettings,
    pub policy: Policy,
    pub feasible: bool,
    /// Best hard-feasible sample per policy; `None` when none exists.
    pub solutions: BTreeMap<String, Option<SolutionReport>>,
    /// Hard-feasible sample of lowest energy.
    pub lowest_energy: Option<SolutionReport>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reduction: Option<ReductionSummary>,
    pub timings: Timings,
}

impl RunReport {
    pub fn chosen(&self) -> Option<&SolutionReport> {
        self.solutions.get(self.policy.name()).and_then(Option::as_ref)
    }
}

fn ms(since: Instant) -> f64 {
    since.elapsed().as_secs_f64() * 1e3
}

/// Machine assignment for a candidate: the decoded placements for
/// unidentical machines, otherwise greedy interval partitioning.
pub fn assignment_for(inst: &Instance, candidate: &Candidate) -> Assignment {
    if candidate.placements.is_empty() {
        let jobs: Vec<Job> = candidate.selection.jobs(inst).into_iter().cloned().collect();
        greedy_assign(&jobs)
    } else {
        let machines: Vec<(String, u32)> =
            candidate.placements.iter().map(|&(j, m)| (inst.jobs[j].id.clone(), m)).collect();
        let machines_used = machines.iter().map(|&(_, m)| m).collect::<std::collections::BTreeSet<_>>().len() as u32;
        Assignment { machines, machines_used }
    }
}

fn solution_report(inst: &Instance, samples: &SampleSet, c: &Candidate) -> SolutionReport {
    let sample = &samples.samples()[c.sample_index];
    let assignment = assignment_for(inst, c);
    SolutionReport {
        sample_index: c.sample_index,
        occurrences: sample.occurrences,
        energy: c.energy,
        bits: sample.bits.iter().map(|&b| if b { '1' } else { '0' }).collect(),
        selected: c.selection.ids(inst).into_iter().map(str::to_owned).collect(),
        weight: c.report.total_weight,
        hard_violations: c.report.hard_violations,
        soft_violations: c.report.soft_violations,
        exclusion_violations: c.report.exclusion_violations,
        idle_slots: c.report.idle_slots(inst.machines),
        occupancy: c.report.occupancy.clone(),
        machines_used: assignment.machines_used,
        assignment: assignment.machines.into_iter().collect(),
    }
}

/// Encodes, samples and selects under both policies.
pub fn solve(inst: &Instance, penalties: &PenaltyArgs, args: &SolverArgs) -> Result<RunReport> {
    inst.ensure_valid()?;
    let pen = penalties.resolve(inst)?;
    let t0 = Instant::now();
    let model = encode(inst, &pen)?;
    let encode_ms = ms(t0);

    let schedule = args.schedule();
    let t1 = Instant::now();
    let use_oracle = args.oracle && model.n_vars() <= crate::solver::BRUTE_FORCE_MAX_VARS;
    if args.oracle && !use_oracle {
        log::warn!("model has {} variables, too many for the oracle; annealing instead", model.n_vars());
    }
    let (samples, t_init, t_final) = if use_oracle {
        let (bits, _) = brute_force(&model)?;
        (SampleSet::from_states(&model, [bits])?, None, None)
    } else {
        let (hot, cold) = schedule.resolve_temperatures(&model)?;
        (simulated_anneal(&model, &schedule)?, Some(hot), Some(cold))
    };
    let solve_ms = ms(t1);

    let t2 = Instant::now();
    let evaluated = candidates(&samples, &model, inst)?;
    let mut solutions = BTreeMap::new();
    for policy in Policy::ALL {
        let best = pick(evaluated.clone(), policy).map(|c| solution_report(inst, &samples, &c));
        solutions.insert(policy.name().to_owned(), best);
    }
    let lowest_energy = evaluated.iter().find(|c| c.is_feasible()).map(|c| solution_report(inst, &samples, c));
    let select_ms = ms(t2);

    let feasible = solutions.get(args.policy.name()).is_some_and(Option::is_some);
    Ok(RunReport {
        instance: InstanceSummary::new(inst, &model),
        penalties: pen,
        solver: SolverSettings {
            method: if use_oracle { "brute-force" } else { "anneal" }.into(),
            reads: if use_oracle { 1 } else { schedule.reads },
            sweeps: if use_oracle { 0 } else { schedule.sweeps },
            t_init,
            t_final,
            seed: schedule.seed,
            distinct_samples: samples.len(),
        },
        policy: args.policy,
        feasible,
        solutions,
        lowest_energy,
        reduction: None,
        timings: Timings { encode_ms, solve_ms, select_ms },
    })
}

/// Phrase table grouped by track.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseDocument {
    pub source: String,
    pub measures: usize,
    pub tracks: Vec<TrackPhrases>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrackPhrases {
    pub track: usize,
    pub name: Option<String>,
    pub k_max: usize,
    pub threshold: Option<f64>,
    pub phrases: Vec<PhraseRow>,
}

fn segment(midi: &Path, k_max: usize) -> Result<(crate::music::Score, Vec<crate::music::Segmentation>)> {
    let score = parse_midi(&fs::read(midi)?)?;
    let params = SegmentParams { k_max, ..SegmentParams::default() };
    let segs = segment_score(&score, &params)?;
    Ok((score, segs))
}

pub fn phrases(midi: &Path, k_max: usize) -> Result<PhraseDocument> {
    let (score, segs) = segment(midi, k_max)?;
    let tracks = segs
        .iter()
        .enumerate()
        .map(|(track, seg)| TrackPhrases {
            track,
            name: score.track_names.get(track).cloned().flatten(),
            k_max: seg.k_max,
            threshold: seg.threshold,
            phrases: phrase_table(&score, &seg.phrases),
        })
        .collect();
    Ok(PhraseDocument { source: midi.display().to_string(), measures: score.measure_count(), tracks })
}

/// Full reduction pipeline. Writes the reduced MIDI to `out` when a feasible
/// solution exists under the chosen policy.
pub fn reduce(
    midi: &Path,
    machines: u32,
    k_max: usize,
    penalties: &PenaltyArgs,
    args: &SolverArgs,
    out: &Path,
) -> Result<RunReport> {
    if machines < 1 {
        return Err(Error::NoMachines);
    }
    let (score, segs) = segment(midi, k_max)?;
    let all: Vec<Phrase> = segs.into_iter().flat_map(|s| s.phrases).collect();
    let inst = build_instance(&score, &all, machines)?;
    let mut report = solve(&inst, penalties, args)?;
    let mut selected_phrases = 0;
    if let Some(chosen) = report.chosen() {
        let selected: Vec<&Phrase> = all.iter().filter(|p| chosen.assignment.contains_key(&p.id())).collect();
        let assignment = Assignment {
            machines: selected.iter().map(|p| (p.id(), chosen.assignment[&p.id()])).collect(),
            machines_used: chosen.machines_used,
        };
        fs::write(out, render_reduction(&score, &selected, &assignment, machines)?)?;
        selected_phrases = selected.len();
    }
    report.reduction = Some(ReductionSummary {
        source: midi.display().to_string(),
        output: out.display().to_string(),
        source_tracks: score.tracks.len(),
        output_tracks: machines,
        phrases: all.len(),
        selected_phrases,
    });
    Ok(report)
}

/// A solution to check: selected job ids, optionally with machines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub selected: Vec<String>,
    #[serde(default)]
    pub assignment: Option<BTreeMap<String, u32>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    #[serde(flatten)]
    pub report: ViolationReport,
    pub idle_slots: usize,
    /// Problems with the machine assignment, if one was given.
    pub assignment_errors: Vec<String>,
    pub feasible: bool,
}

pub fn check(inst: &Instance, solution: &SolutionFile) -> Result<CheckReport> {
    inst.ensure_valid()?;
    let sel: Selection = inst.select_ids(&solution.selected)?;
    let report = evaluate(inst, &sel);
    let mut assignment_errors = Vec::new();
    if let Some(map) = &solution.assignment {
        for id in &solution.selected {
            match map.get(id) {
                None => assignment_errors.push(format!("job {id} has no machine")),
                Some(&m) if m == 0 || m > inst.machines => {
                    assignment_errors.push(format!("job {id} on machine {m} outside 1..={}", inst.machines))
                }
                Some(&m) => {
                    let pos = inst.position(id).expect("selected ids were resolved");
                    if !inst.eligible_machines(pos).contains(&m) {
                        assignment_errors.push(format!("job {id} is not eligible for machine {m}"));
                    }
                }
            }
        }
        for id in map.keys() {
            if !solution.selected.contains(id) {
                assignment_errors.push(format!("job {id} is assigned but not selected"));
            }
        }
        let assignment = Assignment { machines: map.iter().map(|(k, &v)| (k.clone(), v)).collect(), machines_used: 0 };
        let jobs: Vec<Job> = sel.jobs(inst).into_iter().cloned().collect();
        if let Err(e) = assignment.check(&jobs) {
            assignment_errors.push(e.to_string());
        }
    }
    let feasible = report.is_feasible() && assignment_errors.is_empty();
    Ok(CheckReport { idle_slots: report.idle_slots(inst.machines), report, assignment_errors, feasible })
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            if !text.ends_with('\n') {
                stdout.write_all(b"\n")?;
            }
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    emit(&serde_json::to_string_pretty(value)?, out)
}

fn status(ok: bool) -> u8 {
    if ok {
        EXIT_OK
    } else {
        EXIT_INFEASIBLE
    }
}

fn execute(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Phrases { midi, k_max, out } => {
            emit_json(&phrases(&midi, k_max)?, out.as_deref())?;
            Ok(EXIT_OK)
        }
        Command::Encode { instance, penalties, format, out } => {
            let inst = Instance::load(&instance)?;
            inst.ensure_valid()?;
            let model = encode(&inst, &penalties.resolve(&inst)?)?;
            let mut buf = Vec::new();
            model.export(format.into(), &mut buf)?;
            emit(&String::from_utf8_lossy(&buf), out.as_deref())?;
            let reg = model.registry();
            eprintln!(
                "{} variables ({} decision, {} slack), {} quadratic terms",
                model.n_vars(),
                reg.decision_count(),
                reg.slack_count(),
                model.quadratic().len()
            );
            Ok(EXIT_OK)
        }
        Command::Solve { instance, penalties, solver, out } => {
            let inst = Instance::load(&instance)?;
            let report = solve(&inst, &penalties, &solver)?;
            emit_json(&report, out.as_deref())?;
            if !report.feasible {
                eprintln!("no hard-feasible sample under policy {}", report.policy.name());
            }
            Ok(status(report.feasible))
        }
        Command::Reduce { midi, machines, k_max, penalties, solver, out, report } => {
            let run = reduce(&midi, machines, k_max, &penalties, &solver, &out)?;
            emit_json(&run, report.as_deref())?;
            if !run.feasible {
                eprintln!("no hard-feasible sample under policy {}; nothing written", run.policy.name());
            }
            Ok(status(run.feasible))
        }
        Command::Check { instance, solution, out } => {
            let inst = Instance::load(&instance)?;
            let sol: SolutionFile = serde_json::from_str(&fs::read_to_string(&solution)?)?;
            let report = check(&inst, &sol)?;
            emit_json(&report, out.as_deref())?;
            Ok(status(report.feasible))
        }
    }
}

/// Runs a parsed command line, reporting errors on stderr.
pub fn run(cli: Cli) -> ExitCode {
    match execute(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
