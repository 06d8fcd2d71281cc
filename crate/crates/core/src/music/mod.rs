//! MIDI front-end for music reduction: parse a multi-track score, split each
//! track into weighted phrases, schedule phrases onto fewer tracks and render
//! the result.

pub mod entropy;
pub mod midi;
pub mod reduce;
pub mod score;
pub mod segment;

pub use entropy::{ioi_entropy, pitch_entropy, shannon_entropy};
pub use midi::{parse_midi, write_midi};
pub use reduce::{build_instance, phrase_table, render_reduction, PhraseRow};
pub use score::{NoteEvent, Score, TimeSignature};
pub use segment::{
    boundary_profile, find_peaks, identify_phrases, phrase_bounds, search_threshold, segment_score, BoundaryProfile,
    LbdmWeights, Phrase, SegmentParams, Segmentation,
};
