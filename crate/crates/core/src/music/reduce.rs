//! Turning phrases into a scheduling instance and rendering a reduced score.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::assign::Assignment;
use crate::error::{Error, Result};
use crate::instance::{Instance, Job};
use crate::music::midi::write_midi;
use crate::music::score::Score;
use crate::music::segment::Phrase;

/// One job per phrase: `[start_measure, end_measure + 1)`, weighted by the
/// phrase entropy, over a horizon of every measure in the score.
pub fn build_instance(score: &Score, phrases: &[Phrase], machines: u32) -> Result<Instance> {
    if machines < 1 {
        return Err(Error::NoMachines);
    }
    let jobs =
        phrases.iter().map(|p| Job::new(p.id(), p.start_measure as u32, p.end_measure as u32 + 1, p.weight)).collect();
    Ok(Instance::new(machines, score.measure_count() as u32, jobs))
}

/// Phrase table row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhraseRow {
    pub id: String,
    pub track: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub track_name: Option<String>,
    pub start_measure: usize,
    pub end_measure: usize,
    pub notes: usize,
    pub pitch_entropy: f64,
    pub ioi_entropy: f64,
    pub weight: f64,
}

pub fn phrase_table(score: &Score, phrases: &[Phrase]) -> Vec<PhraseRow> {
    phrases
        .iter()
        .map(|p| PhraseRow {
            id: p.id(),
            track: p.track,
            track_name: score.track_names.get(p.track).cloned().flatten(),
            start_measure: p.start_measure,
            end_measure: p.end_measure,
            notes: p.notes.len(),
            pitch_entropy: p.pitch_entropy,
            ioi_entropy: p.ioi_entropy,
            weight: p.weight,
        })
        .collect()
}

/// Format 1 MIDI with a conductor track plus `tracks` output tracks, track
/// `m` holding the original notes of the phrases placed on machine `m`.
/// Output track `m` plays on channel `m - 1`, skipping the percussion channel.
pub fn render_reduction(score: &Score, selected: &[&Phrase], assignment: &Assignment, tracks: u32) -> Result<Vec<u8>> {
    if tracks < assignment.machines_used {
        return Err(Error::InvalidInstance(vec![format!(
            "assignment uses {} machines but only {tracks} tracks were requested",
            assignment.machines_used
        )]));
    }
    let jobs: Vec<Job> =
        selected.iter().map(|p| Job::new(p.id(), p.start_measure as u32, p.end_measure as u32 + 1, p.weight)).collect();
    assignment.check(&jobs)?;
    let machine_of: HashMap<&str, u32> = assignment.machines.iter().map(|(id, m)| (id.as_str(), *m)).collect();
    let used = tracks as usize;
    let mut out = vec![Vec::new(); used];
    for (phrase, job) in selected.iter().zip(&jobs) {
        let m = *machine_of
            .get(job.id.as_str())
            .ok_or_else(|| Error::InvalidInstance(vec![format!("phrase {} has no machine", job.id)]))?;
        if m == 0 || m as usize > used {
            return Err(Error::InvalidInstance(vec![format!("phrase {} on machine {m} outside 1..={used}", job.id)]));
        }
        let channel = output_channel(m);
        out[m as usize - 1].extend(phrase.notes.iter().map(|n| {
            let mut n = *n;
            n.channel = channel;
            n
        }));
    }
    let names = (1..=used).map(|m| Some(format!("reduced {m}"))).collect();
    let reduced = Score::new(score.ticks_per_quarter, score.time_signatures.clone(), score.tempos.clone(), out, names);
    Ok(write_midi(&reduced))
}

fn output_channel(machine: u32) -> u8 {
    let c = ((machine - 1) % 15) as u8;
    if c >= 9 {
        c + 1
    } else {
        c
    }
}
