//! Phrase segmentation: a local boundary strength profile over a track's
//! melodic line, peak picking, and a bisection search for the peak threshold
//! that keeps every phrase within a maximum number of measures.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::music::entropy::{ioi_entropy, pitch_entropy};
use crate::music::score::{NoteEvent, Score};

/// Relative weights of the pitch, inter-onset and rest interval profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbdmWeights {
    pub pitch: f64,
    pub ioi: f64,
    pub rest: f64,
}

impl Default for LbdmWeights {
    fn default() -> Self {
        Self { pitch: 0.25, ioi: 0.50, rest: 0.25 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentParams {
    /// Initial maximum phrase length in measures; grows when unattainable.
    pub k_max: usize,
    /// Bisection tolerance; `None` uses `1e-6 * (max - min)` of the profile.
    pub epsilon: Option<f64>,
    pub weights: LbdmWeights,
}

impl Default for SegmentParams {
    fn default() -> Self {
        Self { k_max: 4, epsilon: None, weights: LbdmWeights::default() }
    }
}

/// Strength per consecutive-note interval of a melodic line.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryProfile(pub Vec<f64>);

impl BoundaryProfile {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A measure-aligned phrase of one track. Measures are 0-based and inclusive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Phrase {
    pub track: usize,
    pub start_measure: usize,
    pub end_measure: usize,
    pub notes: Vec<NoteEvent>,
    pub pitch_entropy: f64,
    pub ioi_entropy: f64,
    pub weight: f64,
}

impl Phrase {
    pub fn measures(&self) -> usize {
        self.end_measure - self.start_measure + 1
    }

    /// Stable identifier used as the job id.
    pub fn id(&self) -> String {
        format!("t{}m{}-{}", self.track, self.start_measure, self.end_measure)
    }

    /// Fills in both entropies and their sum as the weight.
    pub fn weigh(&mut self) -> Result<()> {
        self.pitch_entropy = pitch_entropy(&self.notes)?;
        self.ioi_entropy = ioi_entropy(&self.notes)?;
        self.weight = self.pitch_entropy + self.ioi_entropy;
        Ok(())
    }
}

/// Keeps the highest pitch among notes sharing an onset. Input must be
/// sorted by onset.
pub fn collapse_chords(notes: &[NoteEvent]) -> Vec<NoteEvent> {
    let mut melody: Vec<NoteEvent> = Vec::with_capacity(notes.len());
    for &note in notes {
        match melody.last_mut() {
            Some(last) if last.onset == note.onset => {
                if note.pitch > last.pitch {
                    *last = note;
                }
            }
            _ => melody.push(note),
        }
    }
    melody
}

fn degree_of_change(a: f64, b: f64) -> f64 {
    if a + b != 0.0 && a >= 0.0 && b >= 0.0 {
        (a - b).abs() / (a + b)
    } else {
        0.0
    }
}

/// `s_i = x_i (r(x_{i-1}, x_i) + r(x_i, x_{i+1}))`, normalised to `[0, 1]`.
fn interval_strengths(x: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut s: Vec<f64> = (0..n)
        .map(|i| {
            let left = if i > 0 { degree_of_change(x[i - 1], x[i]) } else { 0.0 };
            let right = if i + 1 < n { degree_of_change(x[i], x[i + 1]) } else { 0.0 };
            x[i] * (left + right)
        })
        .collect();
    let max = s.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        s.iter_mut().for_each(|v| *v /= max);
    }
    s
}

/// Local boundary strength of each interval between consecutive notes of the
/// collapsed melody of `notes`, combining pitch interval, inter-onset
/// interval and rest profiles.
pub fn boundary_profile(notes: &[NoteEvent], weights: &LbdmWeights) -> BoundaryProfile {
    let melody = collapse_chords(notes);
    if melody.len() < 2 {
        return BoundaryProfile::default();
    }
    let pairs = || melody.windows(2);
    let pitch: Vec<f64> = pairs().map(|w| (f64::from(w[1].pitch) - f64::from(w[0].pitch)).abs()).collect();
    let ioi: Vec<f64> = pairs().map(|w| (w[1].onset - w[0].onset) as f64).collect();
    let rest: Vec<f64> = pairs().map(|w| w[1].onset.saturating_sub(w[0].end()) as f64).collect();
    let (p, i, r) = (interval_strengths(&pitch), interval_strengths(&ioi), interval_strengths(&rest));
    BoundaryProfile((0..pitch.len()).map(|k| weights.pitch * p[k] + weights.ioi * i[k] + weights.rest * r[k]).collect())
}

/// Indices of local maxima strictly above `threshold`. A plateau counts once,
/// at its first index, when both of its outer neighbours are lower; the
/// profile edges count as lower.
pub fn find_peaks(bs: &[f64], threshold: f64) -> Vec<usize> {
    let mut peaks = Vec::new();
    let mut i = 0;
    while i < bs.len() {
        let v = bs[i];
        let mut j = i;
        while j + 1 < bs.len() && bs[j + 1] == v {
            j += 1;
        }
        let left_lower = i == 0 || bs[i - 1] < v;
        let right_lower = j + 1 == bs.len() || bs[j + 1] < v;
        if v > threshold && left_lower && right_lower {
            peaks.push(i);
        }
        i = j + 1;
    }
    peaks
}

/// Phrase bounds `(start, end)` tiling `first..=last`. Each peak ends a
/// phrase at the measure holding the note that opens its interval;
/// `interval_measures[i]` is that measure for interval `i`.
pub fn phrase_bounds(peaks: &[usize], interval_measures: &[usize], first: usize, last: usize) -> Vec<(usize, usize)> {
    let mut cuts: Vec<usize> = peaks.iter().map(|&p| interval_measures[p]).filter(|&m| m < last).collect();
    cuts.sort_unstable();
    cuts.dedup();
    let mut bounds = Vec::with_capacity(cuts.len() + 1);
    let mut start = first;
    for cut in cuts {
        if cut >= start {
            bounds.push((start, cut));
            start = cut + 1;
        }
    }
    bounds.push((start, last));
    bounds
}

/// Outcome of the threshold search.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSearch {
    pub bounds: Vec<(usize, usize)>,
    /// Maximum phrase length actually enforced (grows past the requested one
    /// when no threshold satisfies it).
    pub k_max: usize,
    pub threshold: Option<f64>,
}

/// Bisection on the peak threshold between the profile's minimum and maximum.
///
/// Too few peaks or a phrase longer than `k_max` lowers the threshold; a
/// segmentation within `k_max` is recorded and the threshold raised. When the
/// bracket collapses at the top the current segmentation is returned; at the
/// bottom the last recorded one is returned, or `k_max` grows by one and the
/// search restarts.
pub fn search_threshold(
    bs: &[f64],
    interval_measures: &[usize],
    first: usize,
    last: usize,
    k_max: usize,
    epsilon: Option<f64>,
) -> ThresholdSearch {
    let too_long = |bounds: &[(usize, usize)], k: usize| bounds.iter().any(|&(s, e)| e - s + 1 > k);
    let mut k = k_max.max(1);
    if bs.is_empty() {
        let bounds = phrase_bounds(&[], interval_measures, first, last);
        let longest = bounds.iter().map(|&(s, e)| e - s + 1).max().unwrap_or(1);
        return ThresholdSearch { bounds, k_max: k.max(longest), threshold: None };
    }
    let lo0 = bs.iter().copied().fold(f64::INFINITY, f64::min);
    let hi0 = bs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let floor = 1e-12 * (1.0 + hi0.abs());
    let eps = epsilon.unwrap_or(1e-6 * (hi0 - lo0)).max(floor);
    let (mut lo, mut hi) = (lo0, hi0);
    let mut t = (lo + hi) / 2.0;
    let mut found: Option<f64> = None;
    loop {
        let peaks = find_peaks(bs, t);
        if peaks.is_empty() && t - lo >= eps {
            hi = t;
            t = (lo + hi) / 2.0;
            continue;
        }
        let bounds = phrase_bounds(&peaks, interval_measures, first, last);
        if too_long(&bounds, k) {
            hi = t;
            t = (lo + hi) / 2.0;
            if t - lo < eps {
                if let Some(ft) = found {
                    let bounds = phrase_bounds(&find_peaks(bs, ft), interval_measures, first, last);
                    return ThresholdSearch { bounds, k_max: k, threshold: Some(ft) };
                }
                lo = lo0;
                hi = hi0;
                t = (lo + hi) / 2.0;
                k += 1;
            }
        } else {
            found = Some(t);
            lo = t;
            let current = t;
            t = (lo + hi) / 2.0;
            if hi - t < eps {
                return ThresholdSearch { bounds, k_max: k, threshold: Some(current) };
            }
        }
    }
}

/// Result of segmenting one track.
#[derive(Debug, Clone, PartialEq)]
pub struct Segmentation {
    pub phrases: Vec<Phrase>,
    pub profile: BoundaryProfile,
    pub k_max: usize,
    pub threshold: Option<f64>,
}

/// Splits one track into weighted phrases. Phrases whose measures hold no
/// note onsets are dropped.
pub fn identify_phrases(score: &Score, track: usize, params: &SegmentParams) -> Result<Segmentation> {
    if params.k_max == 0 {
        return Err(Error::InvalidSegmentation("k_max must be at least 1".into()));
    }
    if let Some(eps) = params.epsilon {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::InvalidSegmentation(format!("epsilon {eps} must be positive")));
        }
    }
    let notes = score.tracks.get(track).ok_or_else(|| Error::InvalidSegmentation(format!("no track {track}")))?;
    if notes.is_empty() {
        return Ok(Segmentation {
            phrases: Vec::new(),
            profile: BoundaryProfile::default(),
            k_max: params.k_max,
            threshold: None,
        });
    }
    let melody = collapse_chords(notes);
    let profile = boundary_profile(&melody, &params.weights);
    let interval_measures: Vec<usize> = melody[..melody.len() - 1].iter().map(|n| score.measure_of(n.onset)).collect();
    let first = score.measure_of(notes[0].onset);
    let last_tick = notes.iter().map(|n| n.end() - 1).max().unwrap_or(0);
    let last = score.measure_of(last_tick);
    let search = search_threshold(profile.values(), &interval_measures, first, last, params.k_max, params.epsilon);

    let mut phrases = Vec::with_capacity(search.bounds.len());
    for (start, end) in search.bounds {
        let members: Vec<NoteEvent> =
            notes.iter().copied().filter(|n| (start..=end).contains(&score.measure_of(n.onset))).collect();
        if members.is_empty() {
            continue;
        }
        let mut phrase = Phrase {
            track,
            start_measure: start,
            end_measure: end,
            notes: members,
            pitch_entropy: 0.0,
            ioi_entropy: 0.0,
            weight: 0.0,
        };
        phrase.weigh()?;
        phrases.push(phrase);
    }
    Ok(Segmentation { phrases, profile, k_max: search.k_max, threshold: search.threshold })
}

/// Segments every track in parallel; phrases come back grouped by track.
pub fn segment_score(score: &Score, params: &SegmentParams) -> Result<Vec<Segmentation>> {
    (0..score.tracks.len()).into_par_iter().map(|t| identify_phrases(score, t, params)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::music::score::TimeSignature;

    fn note(onset: u64, duration: u64, pitch: u8) -> NoteEvent {
        NoteEvent { onset, duration, pitch, velocity: 80, channel: 0, track: 0 }
    }

    #[test]
    fn chords_collapse_to_highest_pitch() {
        let notes = vec![note(0, 10, 60), note(0, 10, 67), note(0, 10, 64), note(10, 10, 55)];
        let melody = collapse_chords(&notes);
        assert_eq!(melody.iter().map(|n| n.pitch).collect::<Vec<_>>(), vec![67, 55]);
    }

    #[test]
    fn uniform_melody_has_flat_profile() {
        let notes: Vec<NoteEvent> = (0..8).map(|i| note(i * 480, 480, 60 + 2 * i as u8)).collect();
        let bs = boundary_profile(&notes, &LbdmWeights::default());
        assert_eq!(bs.len(), 7);
        assert!(bs.values().iter().all(|&v| v == bs.values()[0]));
        assert!(find_peaks(bs.values(), -1.0).len() <= 1);
    }

    #[test]
    fn inserted_rest_is_the_strongest_boundary() {
        // Six equal notes a quarter apart except a half-note rest after the third.
        let onsets = [0u64, 480, 960, 2400, 2880, 3360];
        let notes: Vec<NoteEvent> = onsets.iter().map(|&o| note(o, 480, 60)).collect();
        let bs = boundary_profile(&notes, &LbdmWeights::default());
        // Hand evaluation: rest profile [0, 0, 960, 0, 0] normalises to a single
        // 1.0 at index 2; the IOI profile [480, 480, 1440, 480, 480] peaks at
        // index 2 with strength 1440 * (0.5 + 0.5) against 480 * 0.5 next to it.
        let expected = [0.0, 0.5 * 240.0 / 1440.0, 0.75, 0.5 * 240.0 / 1440.0, 0.0];
        for (got, want) in bs.values().iter().zip(expected) {
            assert!((got - want).abs() < 1e-12, "{:?}", bs.values());
        }
        let argmax = (0..bs.len()).max_by(|&a, &b| bs.0[a].total_cmp(&bs.0[b])).unwrap();
        assert_eq!(argmax, 2);
    }

    #[test]
    fn short_tracks_have_empty_profiles() {
        assert!(boundary_profile(&[note(0, 1, 60)], &LbdmWeights::default()).is_empty());
        assert!(boundary_profile(&[], &LbdmWeights::default()).is_empty());
    }

    #[test]
    fn peak_examples() {
        assert!(find_peaks(&[0.1, 0.9, 0.1], 0.95).is_empty());
        assert_eq!(find_peaks(&[0.1, 0.9, 0.1], 0.5), vec![1]);
        assert_eq!(find_peaks(&[0.1, 0.9, 0.9, 0.1], 0.5), vec![1]);
        assert_eq!(find_peaks(&[0.9, 0.1, 0.5, 0.7], 0.3), vec![0, 3]);
        assert!(find_peaks(&[0.1, 0.9, 0.9, 1.0], 0.5).contains(&3));
    }

    #[test]
    fn phrase_bounds_examples() {
        // No peaks: the whole span.
        assert_eq!(phrase_bounds(&[], &[], 0, 7), vec![(0, 7)]);
        // One peak whose opening note sits in measure 3.
        assert_eq!(phrase_bounds(&[1], &[2, 3, 5], 0, 7), vec![(0, 3), (4, 7)]);
        // Two peaks inside the same measure give a single boundary.
        assert_eq!(phrase_bounds(&[0, 1], &[3, 3, 5], 0, 7), vec![(0, 3), (4, 7)]);
        // A peak in the final measure adds nothing.
        assert_eq!(phrase_bounds(&[2], &[3, 3, 7], 0, 7), vec![(0, 7)]);
    }

    #[test]
    fn uniform_profile_grows_k_until_one_phrase_fits() {
        let bs = vec![0.5; 9];
        let measures: Vec<usize> = (0..9).collect();
        let found = search_threshold(&bs, &measures, 0, 9, 2, None);
        assert_eq!(found.bounds, vec![(0, 9)]);
        assert_eq!(found.k_max, 10);
        let found = search_threshold(&bs, &measures, 0, 9, 12, None);
        assert_eq!(found.bounds, vec![(0, 9)]);
        assert_eq!(found.k_max, 12);
    }

    #[test]
    fn single_dominant_peak_gives_two_phrases() {
        // Bisection by hand: min 0.1, max 0.9, t = 0.5 finds peak 2 and two
        // phrases of 3 and 2 measures; raising t towards 0.9 keeps the same
        // single peak until the bracket collapses.
        let bs = [0.1, 0.2, 0.9, 0.2, 0.1];
        let measures = [0, 1, 2, 3, 4];
        let found = search_threshold(&bs, &measures, 0, 4, 10, None);
        assert_eq!(found.bounds, vec![(0, 2), (3, 4)]);
        assert!(found.threshold.unwrap() < 0.9);
    }

    #[test]
    fn k_max_forces_extra_boundaries() {
        let bs = [0.3, 0.1, 0.9, 0.1, 0.3, 0.1, 0.5];
        let measures = [0, 1, 2, 3, 4, 5, 6];
        let found = search_threshold(&bs, &measures, 0, 7, 3, None);
        assert!(found.bounds.iter().all(|&(s, e)| e - s < found.k_max));
        assert_eq!(found.k_max, 3);
    }

    fn two_phrase_score() -> Score {
        // 4/4 at 480 tpq; eight quarter notes per two measures, then two
        // measures of silence, then four quarter notes.
        let mut notes: Vec<NoteEvent> = (0..8).map(|i| note(i * 480, 480, 60 + (i % 3) as u8)).collect();
        notes.extend((0..4).map(|i| note(4 * 1920 + i * 480, 480, 62)));
        Score::new(480, vec![TimeSignature { tick: 0, numerator: 4, denominator: 4 }], vec![], vec![notes], vec![])
    }

    #[test]
    fn identify_splits_at_the_long_rest_and_drops_silence() {
        let score = two_phrase_score();
        let seg = identify_phrases(&score, 0, &SegmentParams { k_max: 2, ..Default::default() }).unwrap();
        assert!(seg.phrases.iter().all(|p| !p.notes.is_empty()));
        assert!(seg.phrases.iter().all(|p| p.measures() <= seg.k_max));
        let spans: Vec<(usize, usize)> = seg.phrases.iter().map(|p| (p.start_measure, p.end_measure)).collect();
        assert_eq!(spans.first().unwrap().0, 0);
        assert_eq!(spans.last().unwrap().1, 4);
        assert!(spans.windows(2).all(|w| w[0].1 < w[1].0));
        let total: usize = seg.phrases.iter().map(|p| p.notes.len()).sum();
        assert_eq!(total, 12);
    }

    #[test]
    fn identify_handles_degenerate_tracks() {
        let one = Score::new(480, vec![], vec![], vec![vec![note(0, 480, 60)]], vec![]);
        let seg = identify_phrases(&one, 0, &SegmentParams::default()).unwrap();
        assert_eq!(seg.phrases.len(), 1);
        assert_eq!(seg.phrases[0].weight, 0.0);
        assert!(identify_phrases(&one, 0, &SegmentParams { k_max: 0, ..Default::default() }).is_err());
        assert!(identify_phrases(&one, 3, &SegmentParams::default()).is_err());
    }

    #[test]
    fn identify_is_deterministic() {
        let score = two_phrase_score();
        let a = identify_phrases(&score, 0, &SegmentParams::default()).unwrap();
        let b = identify_phrases(&score, 0, &SegmentParams::default()).unwrap();
        assert_eq!(a, b);
    }
}
