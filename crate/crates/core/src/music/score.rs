use serde::{Deserialize, Serialize};

/// A sounding note. `track` indexes [`Score::tracks`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NoteEvent {
    pub onset: u64,
    pub duration: u64,
    pub pitch: u8,
    pub velocity: u8,
    pub channel: u8,
    pub track: usize,
}

impl NoteEvent {
    pub fn end(&self) -> u64 {
        self.onset + self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimeSignature {
    pub tick: u64,
    pub numerator: u8,
    pub denominator: u8,
}

impl TimeSignature {
    /// Measure length in ticks.
    pub fn measure_ticks(&self, ticks_per_quarter: u16) -> u64 {
        let len = u64::from(ticks_per_quarter) * 4 * u64::from(self.numerator) / u64::from(self.denominator.max(1));
        len.max(1)
    }
}

/// Notes grouped by track with the measure grid derived from the time
/// signatures. Tempo changes are carried for rendering only; measures are
/// purely tick based.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Score {
    pub ticks_per_quarter: u16,
    pub time_signatures: Vec<TimeSignature>,
    /// `(tick, microseconds per quarter)`.
    pub tempos: Vec<(u64, u32)>,
    pub tracks: Vec<Vec<NoteEvent>>,
    pub track_names: Vec<Option<String>>,
    measure_boundaries: Vec<u64>,
}

impl Score {
    /// Builds a score, sorting notes, defaulting to 4/4 at tick 0 and laying
    /// out measures up to the end of the last note. A signature change that
    /// falls inside a measure cuts that measure short.
    pub fn new(
        ticks_per_quarter: u16,
        mut time_signatures: Vec<TimeSignature>,
        mut tempos: Vec<(u64, u32)>,
        mut tracks: Vec<Vec<NoteEvent>>,
        mut track_names: Vec<Option<String>>,
    ) -> Self {
        time_signatures.sort_by_key(|t| t.tick);
        time_signatures.dedup_by(|later, earlier| {
            later.tick == earlier.tick && {
                *earlier = *later;
                true
            }
        });
        if time_signatures.first().is_none_or(|t| t.tick > 0) {
            time_signatures.insert(0, TimeSignature { tick: 0, numerator: 4, denominator: 4 });
        }
        tempos.sort_by_key(|t| t.0);
        for (idx, track) in tracks.iter_mut().enumerate() {
            for note in track.iter_mut() {
                note.track = idx;
            }
            track.sort();
        }
        track_names.resize(tracks.len(), None);
        let end = tracks.iter().flatten().map(NoteEvent::end).max().unwrap_or(0);
        let mut boundaries = vec![0u64];
        let mut tick = 0u64;
        while tick < end {
            let active = time_signatures.iter().rev().find(|t| t.tick <= tick).copied().unwrap();
            let mut next = tick + active.measure_ticks(ticks_per_quarter);
            if let Some(change) = time_signatures.iter().find(|t| t.tick > tick && t.tick < next) {
                next = change.tick;
            }
            boundaries.push(next);
            tick = next;
        }
        Self { ticks_per_quarter, time_signatures, tempos, tracks, track_names, measure_boundaries: boundaries }
    }

    /// Measure start ticks followed by the end of the last measure.
    pub fn measure_boundaries(&self) -> &[u64] {
        &self.measure_boundaries
    }

    pub fn measure_count(&self) -> usize {
        self.measure_boundaries.len() - 1
    }

    /// 0-based measure containing `tick`, clamped to the last measure.
    pub fn measure_of(&self, tick: u64) -> usize {
        let idx = self.measure_boundaries.partition_point(|&b| b <= tick);
        idx.saturating_sub(1).min(self.measure_count().saturating_sub(1))
    }

    pub fn all_notes(&self) -> impl Iterator<Item = &NoteEvent> {
        self.tracks.iter().flatten()
    }
}
