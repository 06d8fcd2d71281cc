//! Shannon entropy of pitch and inter-onset interval distributions, in bits.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::music::score::NoteEvent;
use crate::music::segment::collapse_chords;

/// `H = -sum (n_i / N) log2(n_i / N)` over the distinct symbols, evaluated as
/// `log2 N - (1/N) sum n_i log2 n_i`. Zero for an empty sequence.
pub fn shannon_entropy<T: Ord>(symbols: impl IntoIterator<Item = T>) -> f64 {
    let mut counts: BTreeMap<T, u64> = BTreeMap::new();
    for s in symbols {
        *counts.entry(s).or_insert(0) += 1;
    }
    let total: u64 = counts.values().sum();
    if total == 0 || counts.len() == 1 {
        return 0.0;
    }
    let n = total as f64;
    let weighted: f64 = counts.values().map(|&c| c as f64 * (c as f64).log2()).sum();
    (n.log2() - weighted / n).max(0.0)
}

/// Entropy of the pitches of a phrase, chords reduced to their highest note.
pub fn pitch_entropy(notes: &[NoteEvent]) -> Result<f64> {
    if notes.is_empty() {
        return Err(Error::InvalidSegmentation("entropy of an empty phrase".into()));
    }
    Ok(shannon_entropy(collapse_chords(&sorted(notes)).iter().map(|n| n.pitch)))
}

/// Entropy of the inter-onset intervals of a phrase. A phrase of `N` onsets
/// has `N - 1` intervals; a single note has entropy 0.
pub fn ioi_entropy(notes: &[NoteEvent]) -> Result<f64> {
    if notes.is_empty() {
        return Err(Error::InvalidSegmentation("entropy of an empty phrase".into()));
    }
    let melody = collapse_chords(&sorted(notes));
    Ok(shannon_entropy(melody.windows(2).map(|w| w[1].onset - w[0].onset)))
}

fn sorted(notes: &[NoteEvent]) -> Vec<NoteEvent> {
    let mut v = notes.to_vec();
    v.sort();
    v
}
