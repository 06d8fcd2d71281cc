//! Writes the four-voice "Frere Jacques" round used by the integration tests.
//!
//! ```text
//! cargo run -p ofisp --example make_fixture -- crates/core/tests/fixtures/frere_jacques.mid
//! ```

use ofisp::music::{write_midi, NoteEvent, Score, TimeSignature};

const Q: u64 = 480;

/// (pitch offset from the tonic, length in eighths) per measure.
const TUNE: [&[(i8, u64)]; 8] = [
    &[(0, 2), (2, 2), (4, 2), (0, 2)],
    &[(0, 2), (2, 2), (4, 2), (0, 2)],
    &[(4, 2), (5, 2), (7, 4)],
    &[(4, 2), (5, 2), (7, 4)],
    &[(7, 1), (9, 1), (7, 1), (5, 1), (4, 2), (0, 2)],
    &[(7, 1), (9, 1), (7, 1), (5, 1), (4, 2), (0, 2)],
    &[(0, 2), (-5, 2), (0, 4)],
    &[(0, 2), (-5, 2), (0, 4)],
];

fn voice(track: usize, tonic: u8, first_measure: u64, repeats: u64) -> Vec<NoteEvent> {
    let mut notes = Vec::new();
    let mut tick = first_measure * 4 * Q;
    for _ in 0..repeats {
        for measure in TUNE {
            for &(offset, eighths) in measure {
                let duration = eighths * Q / 2;
                let pitch = (i16::from(tonic) + i16::from(offset)) as u8;
                // Slightly detached so onsets and rests both carry boundary cues.
                notes.push(NoteEvent {
                    onset: tick,
                    duration: duration - Q / 8,
                    pitch,
                    velocity: 80,
                    channel: track as u8,
                    track,
                });
                tick += duration;
            }
        }
    }
    notes
}

fn main() {
    let path = std::env::args().nth(1).unwrap_or_else(|| "frere_jacques.mid".into());
    let tonics = [72, 67, 60, 48];
    let tracks: Vec<Vec<NoteEvent>> = tonics.iter().enumerate().map(|(v, &t)| voice(v, t, 2 * v as u64, 2)).collect();
    let names = ["soprano", "alto", "tenor", "bass"].iter().map(|n| Some(n.to_string())).collect();
    let score = Score::new(
        Q as u16,
        vec![TimeSignature { tick: 0, numerator: 4, denominator: 4 }],
        vec![(0, 500_000)],
        tracks,
        names,
    );
    std::fs::write(&path, write_midi(&score)).expect("write fixture");
    println!("{path}: {} tracks, {} measures", score.tracks.len(), score.measure_count());
}
