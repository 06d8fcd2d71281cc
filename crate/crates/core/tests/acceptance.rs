//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use ofisp::cli::{self, PenaltyArgs, SolverArgs};
use ofisp::music::{parse_midi, search_threshold, shannon_entropy};
use ofisp::solver::IncrementalState;
use ofisp::{
    brute_force, default_penalties, depth, encode_min_idle, evaluate, greedy_assign, select_solution, simulated_anneal,
    AnnealSchedule, Instance, IsingModel, Job, Policy, QuboModel, Selection, VariableRegistry,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn fig1() -> Instance {
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

fn random_instance(rng: &mut ChaCha8Rng, max_jobs: usize, max_slots: u32, max_machines: u32) -> Instance {
    let n = rng.gen_range(1..=max_jobs);
    let k = rng.gen_range(1..=max_slots);
    let m = rng.gen_range(1..=max_machines);
    let jobs = (0..n)
        .map(|i| {
            let start = rng.gen_range(0..k);
            let end = rng.gen_range(start + 1..=k);
            Job::new(format!("j{i}"), start, end, rng.gen_range(0.5..10.0))
        })
        .collect();
    Instance::new(m, k, jobs)
}

fn criterion_1() -> Outcome {
    let inst = fig1();
    let args = SolverArgs::default();
    ensure!((args.reads, args.sweeps) == (1000, 1000), "unexpected default schedule");

    let t = Instant::now();
    let gapless = cli::solve(&inst, &PenaltyArgs::default(), &SolverArgs { policy: Policy::MinSoft, ..args })
        .map_err(|e| e.to_string())?;
    let default_secs = t.elapsed().as_secs_f64();
    ensure!(gapless.instance.total_vars == 10, "expected 10 variables, got {}", gapless.instance.total_vars);
    let best = gapless.chosen().ok_or("no feasible sample with default penalties")?;
    ensure!(best.selected == ["b1", "b2", "b4"], "default penalties selected {:?}", best.selected);
    ensure!((best.weight, best.soft_violations) == (18.0, 0), "weight {} soft {}", best.weight, best.soft_violations);
    ensure!(best.machines_used == 1, "used {} machines", best.machines_used);
    let lowest = gapless.lowest_energy.as_ref().ok_or("no lowest-energy sample")?;
    ensure!(lowest.selected == best.selected, "ground state {:?} differs", lowest.selected);

    let t = Instant::now();
    let no_idle = PenaltyArgs { p1: None, p2: Some(0.0) };
    let heavy = cli::solve(&inst, &no_idle, &args).map_err(|e| e.to_string())?;
    let off_secs = t.elapsed().as_secs_f64();
    let best = heavy.chosen().ok_or("no feasible sample with p2 = 0")?;
    ensure!(best.selected == ["b1", "b3"], "p2 = 0 selected {:?}", best.selected);
    ensure!((best.weight, best.idle_slots) == (23.0, 1), "weight {} idle {}", best.weight, best.idle_slots);
    let lowest = heavy.lowest_energy.as_ref().ok_or("no lowest-energy sample")?;
    ensure!(lowest.selected == best.selected, "ground state {:?} differs", lowest.selected);

    ensure!(default_secs < 1.0 && off_secs < 1.0, "runtime {default_secs:.3} s / {off_secs:.3} s");
    Ok(format!("weight 18 gapless, weight 23 with 1 idle slot ({default_secs:.2} s, {off_secs:.2} s)"))
}

/// Independent cost of a decision pattern with slack at its best value:
/// `-weight + p1 sum max(0, occ - min(M, c))^2 + p2 sum (occ - M)^2`.
fn reference_energy(inst: &Instance, sel: &Selection, p1: f64, p2: f64) -> f64 {
    let report = evaluate(inst, sel);
    let coverage = inst.coverage();
    let m = inst.machines;
    let mut e = -report.total_weight;
    for (k, &occ) in report.occupancy.iter().enumerate() {
        let target = m.min(coverage[k]);
        let over = occ.saturating_sub(target) as f64;
        let dev = f64::from(occ) - f64::from(m);
        e += p1 * over * over + p2 * dev * dev;
    }
    e
}

/// Minimum energy over all slack settings for each decision pattern, by a
/// Gray-code walk over every state. Decision variables come first. The walk
/// tracks energies incrementally; each minimiser is re-evaluated exactly.
fn slack_minimized(model: &QuboModel, decisions: usize) -> Vec<f64> {
    let n = model.n_vars();
    let mask = (1u64 << decisions) - 1;
    let mut best = vec![(f64::INFINITY, 0u64); 1 << decisions];
    let mut state = IncrementalState::new(model, vec![false; n]).unwrap();
    let mut pattern = 0u64;
    best[0] = (state.energy(), 0);
    for step in 1u64..(1u64 << n) {
        let v = step.trailing_zeros() as usize;
        state.flip(v);
        pattern ^= 1 << v;
        let d = (pattern & mask) as usize;
        if state.energy() < best[d].0 {
            best[d] = (state.energy(), pattern);
        }
    }
    best.into_iter().map(|(_, p)| model.energy(&(0..n).map(|v| p >> v & 1 == 1).collect::<Vec<_>>()).unwrap()).collect()
}

fn criterion_2() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    let mut states = 0u64;
    let instances = 200;
    for case in 0..instances {
        let inst = random_instance(&mut rng, 6, 8, 3);
        let pen = default_penalties(&inst).map_err(|e| e.to_string())?;
        let model = encode_min_idle(&inst, &pen).map_err(|e| e.to_string())?;
        let n = inst.len();
        let best = slack_minimized(&model, n);
        states += 1 << model.n_vars();
        let mut max_feasible = f64::NEG_INFINITY;
        let mut min_infeasible = f64::INFINITY;
        for (d, &e) in best.iter().enumerate() {
            let sel = Selection::from_positions((0..n).filter(|&i| d >> i & 1 == 1));
            let expected = reference_energy(&inst, &sel, pen.p1, pen.p2);
            worst = worst.max((e - expected).abs());
            ensure!((e - expected).abs() <= 1e-9, "case {case} pattern {d:b}: qubo {e} vs reference {expected}");
            if evaluate(&inst, &sel).is_feasible() {
                max_feasible = max_feasible.max(e);
            } else {
                min_infeasible = min_infeasible.min(e);
            }
        }
        ensure!(
            max_feasible < min_infeasible,
            "case {case}: feasible state at {max_feasible} not below infeasible state at {min_infeasible}"
        );
    }
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1} s");
    Ok(format!("{instances} instances, {states} states, max deviation {worst:.1e} ({secs:.1} s)"))
}

fn random_qubo(rng: &mut ChaCha8Rng, n: usize) -> QuboModel {
    let mut model = QuboModel::new(VariableRegistry::decisions(n));
    model.add_offset(rng.gen_range(-5.0..5.0));
    for v in 0..n {
        model.add_linear(v, rng.gen_range(-10.0..10.0)).unwrap();
        for u in v + 1..n {
            if rng.gen_bool(0.4) {
                model.add_quadratic(v, u, rng.gen_range(-10.0..10.0)).unwrap();
            }
        }
    }
    model
}

fn criterion_3() -> Outcome {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut models = Vec::new();
    while models.len() < 50 {
        let n = rng.gen_range(2..=14);
        models.push(random_qubo(&mut rng, n));
    }
    while models.len() < 100 {
        let inst = random_instance(&mut rng, 8, 6, 2);
        let model = encode_min_idle(&inst, &default_penalties(&inst).unwrap()).unwrap();
        if model.n_vars() <= 14 {
            models.push(model);
        }
    }
    let mut matched = 0;
    for (i, model) in models.iter().enumerate() {
        let (_, optimum) = brute_force(model).map_err(|e| e.to_string())?;
        let schedule = AnnealSchedule { reads: 1000, sweeps: 1000, seed: i as u64, ..Default::default() };
        let samples = simulated_anneal(model, &schedule).map_err(|e| e.to_string())?;
        let found = samples.best().unwrap().energy;
        if found <= optimum + 1e-9 * (1.0 + optimum.abs()) {
            matched += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure!(matched >= 95, "matched {matched}/100");
    ensure!(secs < 120.0, "took {secs:.1} s");
    Ok(format!("{matched}/100 models at the exhaustive optimum ({secs:.1} s)"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let model = random_qubo(&mut rng, 12);
        let ising = model.to_ising();
        for pattern in 0u32..1 << 12 {
            let bits: Vec<bool> = (0..12).map(|v| pattern >> v & 1 == 1).collect();
            let q = model.energy(&bits).map_err(|e| e.to_string())?;
            let s = ising.energy(&IsingModel::spins_from_bits(&bits)).map_err(|e| e.to_string())?;
            worst = worst.max((q - s).abs());
        }
    }
    ensure!(worst <= 1e-9, "max deviation {worst:e}");
    Ok(format!("20 models x 4096 states, max deviation {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for case in 0..500 {
        let n = rng.gen_range(0..=50);
        let jobs: Vec<Job> = (0..n)
            .map(|i| {
                let start = rng.gen_range(0..60);
                Job::new(format!("j{i}"), start, start + rng.gen_range(1..=15), 1.0)
            })
            .collect();
        let a = greedy_assign(&jobs);
        // Depth from a direct count of the jobs covering each slot.
        let horizon = jobs.iter().map(|j| j.end).max().unwrap_or(0);
        let direct = (0..horizon).map(|s| jobs.iter().filter(|j| j.covers(s)).count() as u32).max().unwrap_or(0);
        ensure!(a.machines_used == direct, "case {case}: {} machines, depth {direct}", a.machines_used);
        ensure!(depth(&jobs) == direct, "case {case}: depth() {} vs {direct}", depth(&jobs));
        for x in &jobs {
            for y in &jobs {
                if x.id < y.id && x.overlaps(y) {
                    ensure!(
                        a.machine_of(&x.id) != a.machine_of(&y.id),
                        "case {case}: {} and {} share a machine",
                        x.id,
                        y.id
                    );
                }
            }
        }
    }
    Ok("500 job sets, machines used equals depth, no overlaps".into())
}

fn criterion_6() -> Outcome {
    ensure!(shannon_entropy([5u8; 9]) == 0.0, "single symbol");
    for k in 1u32..=64 {
        let h = shannon_entropy(0..k);
        ensure!(h == f64::from(k).log2(), "k = {k}: {h} vs {}", f64::from(k).log2());
    }
    let h = shannon_entropy(["A", "A", "B", "C"]);
    ensure!(h == 1.5, "{{A,A,B,C}} gave {h}");
    Ok("0, log2 k for k = 1..64, and 1.5 exactly".into())
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut counts = Vec::new();
    for _ in 0..20 {
        let jobs = (0..41)
            .map(|i| {
                let start = rng.gen_range(0..19);
                Job::new(format!("p{i}"), start, (start + rng.gen_range(1..=4)).min(19), rng.gen_range(0.0..6.0))
            })
            .collect();
        let inst = Instance::new(2, 19, jobs);
        let model = encode_min_idle(&inst, &default_penalties(&inst).unwrap()).map_err(|e| e.to_string())?;
        ensure!(model.n_vars() <= 79, "{} variables", model.n_vars());
        counts.push(model.n_vars());
    }
    let (lo, hi) = (counts.iter().min().unwrap(), counts.iter().max().unwrap());
    Ok(format!("N=41 K=19 M=2: {lo}..={hi} variables (bound 79)"))
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let source = fixture_dir().join("frere_jacques.mid");
    let out = dir.path().join("reduced.mid");
    let original = parse_midi(&std::fs::read(&source).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    ensure!(original.tracks.len() == 4, "fixture has {} tracks", original.tracks.len());

    let t = Instant::now();
    let report =
        cli::reduce(&source, 2, 4, &PenaltyArgs::default(), &SolverArgs::default(), &out).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    ensure!(report.feasible, "no feasible reduction");
    ensure!(secs < 60.0, "pipeline took {secs:.1} s");

    let bytes = std::fs::read(&out).map_err(|e| e.to_string())?;
    ensure!(u16::from_be_bytes([bytes[10], bytes[11]]) == 3, "expected conductor plus 2 tracks");
    let reduced = parse_midi(&bytes).map_err(|e| e.to_string())?;
    ensure!(reduced.tracks.len() <= 2, "{} playing tracks", reduced.tracks.len());
    for m in 0..reduced.measure_count() {
        let (lo, hi) = (reduced.measure_boundaries()[m], reduced.measure_boundaries()[m + 1]);
        let sounding = reduced.tracks.iter().filter(|t| t.iter().any(|n| n.onset < hi && n.end() > lo)).count();
        ensure!(sounding <= 2, "measure {m}: {sounding} tracks sound");
    }
    let key = |n: &ofisp::music::NoteEvent| (n.onset, n.duration, n.pitch);
    let source_notes: std::collections::BTreeSet<_> = original.all_notes().map(key).collect();
    ensure!(reduced.all_notes().all(|n| source_notes.contains(&key(n))), "reduced score has foreign notes");

    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let jobs = (0..591)
        .map(|i| {
            let start = rng.gen_range(0..276);
            Job::new(format!("p{i}"), start, (start + rng.gen_range(1..=4)).min(276), rng.gen_range(0.0..6.0))
        })
        .collect();
    let big = Instance::new(2, 276, jobs);
    let t = Instant::now();
    let model = encode_min_idle(&big, &default_penalties(&big).unwrap()).map_err(|e| e.to_string())?;
    let encode_secs = t.elapsed().as_secs_f64();
    ensure!(encode_secs < 5.0, "encoding took {encode_secs:.2} s");
    // 100 reads keep this under a few seconds on one core.
    let schedule = AnnealSchedule { reads: 100, sweeps: 1000, seed: 8, ..Default::default() };
    let t = Instant::now();
    let samples = simulated_anneal(&model, &schedule).map_err(|e| e.to_string())?;
    let anneal_secs = t.elapsed().as_secs_f64();
    let chosen = select_solution(&samples, &model, &big, Policy::MinSoft).map_err(|e| e.to_string())?;
    let chosen = chosen.ok_or("no hard-feasible sample for N=591")?;
    ensure!(chosen.report.hard_violations == 0, "hard violations");
    Ok(format!(
        "fixture 4 -> {} tracks in {secs:.1} s; N=591 model of {} variables encoded in {encode_secs:.3} s, feasible min-soft sample ({} soft) in {anneal_secs:.1} s",
        reduced.tracks.len(),
        model.n_vars(),
        chosen.report.soft_violations
    ))
}

fn random_profile(rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<usize>, usize, usize, usize) {
    let len = rng.gen_range(0..80);
    let levels = if rng.gen_bool(0.3) { rng.gen_range(1..4) } else { 0 };
    let bs: Vec<f64> =
        (0..len).map(|_| if levels > 0 { f64::from(rng.gen_range(0..levels)) / 3.0 } else { rng.gen() }).collect();
    let first = rng.gen_range(0..3);
    let mut measure = first;
    let intervals: Vec<usize> = (0..len)
        .map(|_| {
            measure += rng.gen_range(0..=2);
            measure
        })
        .collect();
    let last = measure + rng.gen_range(0..=2);
    (bs, intervals, first, last, rng.gen_range(1..=6))
}

fn criterion_9() -> Outcome {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        let run = || -> Outcome {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            for case in 0..1000 {
                let (bs, intervals, first, last, k_max) = random_profile(&mut rng);
                let a = search_threshold(&bs, &intervals, first, last, k_max, None);
                let b = search_threshold(&bs, &intervals, first, last, k_max, None);
                ensure!(a == b, "case {case}: nondeterministic");
                ensure!(a.k_max >= k_max, "case {case}: k_max shrank");
                let mut next = first;
                for &(s, e) in &a.bounds {
                    ensure!(s == next && e >= s, "case {case}: bounds {:?} do not tile {first}..={last}", a.bounds);
                    ensure!(e - s < a.k_max, "case {case}: phrase {s}..={e} exceeds k_max {}", a.k_max);
                    next = e + 1;
                }
                ensure!(next == last + 1, "case {case}: bounds {:?} stop before {last}", a.bounds);
            }
            Ok("1000 profiles terminate, phrases within final k_max, repeatable".into())
        };
        let _ = tx.send(run());
    });
    rx.recv_timeout(Duration::from_secs(60)).unwrap_or_else(|_| Err("did not terminate within 60 s".into()))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("small fixture reproduction", criterion_1),
        ("encoding matches evaluator", criterion_2),
        ("annealer agrees with oracle", criterion_3),
        ("ising round trip", criterion_4),
        ("greedy assignment optimal", criterion_5),
        ("entropy units", criterion_6),
        ("variable count bound", criterion_7),
        ("end-to-end reduction", criterion_8),
        ("threshold search properties", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("criterion {} ({name}): PASS - {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} ({name}): FAIL - {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
