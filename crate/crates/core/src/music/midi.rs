//! Standard MIDI File reading and writing (formats 0 and 1, metrical time).

use std::collections::{HashMap, VecDeque};

use crate::error::{Error, Result};
use crate::music::score::{NoteEvent, Score, TimeSignature};

fn malformed(msg: impl Into<String>) -> Error {
    Error::Midi(msg.into())
}

struct Reader<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(data: &'a [u8]) -> Self {
        Self { data, pos: 0 }
    }

    fn at_end(&self) -> bool {
        self.pos >= self.data.len()
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or_else(|| malformed(format!("unexpected end of data at byte {}", self.pos)))?;
        let slice = &self.data[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn peek(&self) -> Option<u8> {
        self.data.get(self.pos).copied()
    }

    fn u32(&mut self) -> Result<u32> {
        let b = self.take(4)?;
        Ok(u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn varlen(&mut self) -> Result<u32> {
        let mut value = 0u32;
        for _ in 0..4 {
            let b = self.u8()?;
            value = (value << 7) | u32::from(b & 0x7f);
            if b & 0x80 == 0 {
                return Ok(value);
            }
        }
        Err(malformed("variable-length quantity longer than 4 bytes"))
    }
}

/// Everything collected from one track chunk.
#[derive(Default)]
struct ChunkEvents {
    notes: Vec<NoteEvent>,
    time_signatures: Vec<TimeSignature>,
    tempos: Vec<(u64, u32)>,
    name: Option<String>,
}

/// Parses a Standard MIDI File.
///
/// Note-on/note-off pairs are matched first-in first-out per channel and
/// pitch; a note-on with velocity 0 is a note-off. Notes still sounding at
/// the end of their track are dropped with a warning. Format 1 yields one
/// score track per track chunk that holds notes; format 0 yields one per
/// channel.
pub fn parse_midi(bytes: &[u8]) -> Result<Score> {
    let mut r = Reader::new(bytes);
    if r.take(4).map_err(|_| malformed("missing MThd header"))? != b"MThd" {
        return Err(malformed("missing MThd header"));
    }
    let header_len = r.u32()? as usize;
    if header_len < 6 {
        return Err(malformed("header chunk shorter than 6 bytes"));
    }
    let header = r.take(header_len)?;
    let format = u16::from_be_bytes([header[0], header[1]]);
    let declared_tracks = u16::from_be_bytes([header[2], header[3]]);
    let division = u16::from_be_bytes([header[4], header[5]]);
    if format > 1 {
        return Err(Error::UnsupportedMidiFormat(format));
    }
    if division & 0x8000 != 0 || division == 0 {
        return Err(malformed("SMPTE or zero time division is not supported"));
    }

    let mut chunks = Vec::new();
    while !r.at_end() && chunks.len() < declared_tracks as usize {
        let kind = r.take(4)?;
        let len = r.u32()? as usize;
        let body = r.take(len).map_err(|_| malformed("truncated track chunk"))?;
        if kind == b"MTrk" {
            chunks.push(parse_track(body, chunks.len())?);
        }
    }
    if chunks.len() < declared_tracks as usize {
        return Err(malformed(format!("header declares {declared_tracks} tracks, found {}", chunks.len())));
    }

    let mut time_signatures = Vec::new();
    let mut tempos = Vec::new();
    let mut tracks: Vec<Vec<NoteEvent>> = Vec::new();
    let mut names = Vec::new();
    for chunk in chunks {
        time_signatures.extend(chunk.time_signatures);
        tempos.extend(chunk.tempos);
        if format == 0 {
            for channel in 0u8..16 {
                let notes: Vec<NoteEvent> = chunk.notes.iter().copied().filter(|n| n.channel == channel).collect();
                if !notes.is_empty() {
                    tracks.push(notes);
                    names.push(chunk.name.clone());
                }
            }
        } else if !chunk.notes.is_empty() {
            tracks.push(chunk.notes);
            names.push(chunk.name);
        }
    }
    Ok(Score::new(division, time_signatures, tempos, tracks, names))
}

fn parse_track(body: &[u8], index: usize) -> Result<ChunkEvents> {
    let mut r = Reader::new(body);
    let mut out = ChunkEvents::default();
    let mut tick = 0u64;
    let mut running: Option<u8> = None;
    let mut sounding: HashMap<(u8, u8), VecDeque<(u64, u8)>> = HashMap::new();

    while !r.at_end() {
        tick += u64::from(r.varlen()?);
        let first = r.peek().ok_or_else(|| malformed("event without status"))?;
        let status = if first & 0x80 != 0 {
            r.u8()?
        } else {
            running.ok_or_else(|| malformed("data byte without running status"))?
        };
        match status {
            0xff => {
                let kind = r.u8()?;
                let len = r.varlen()? as usize;
                let data = r.take(len)?;
                match kind {
                    0x2f => break,
                    0x03 if out.name.is_none() => out.name = Some(String::from_utf8_lossy(data).into_owned()),
                    0x51 if len == 3 => {
                        out.tempos.push((tick, u32::from_be_bytes([0, data[0], data[1], data[2]])));
                    }
                    0x58 if len >= 2 => out.time_signatures.push(TimeSignature {
                        tick,
                        numerator: data[0],
                        denominator: 1u8.checked_shl(u32::from(data[1])).unwrap_or(0),
                    }),
                    _ => {}
                }
                running = None;
            }
            0xf0 | 0xf7 => {
                let len = r.varlen()? as usize;
                r.take(len)?;
                running = None;
            }
            0xf1..=0xfe => return Err(malformed(format!("system message {status:#04x} inside a file"))),
            _ => {
                running = Some(status);
                let channel = status & 0x0f;
                let data_len = match status & 0xf0 {
                    0xc0 | 0xd0 => 1,
                    _ => 2,
                };
                let data = r.take(data_len)?;
                let (key, velocity) = (data[0] & 0x7f, data.get(1).map_or(0, |v| v & 0x7f));
                match status & 0xf0 {
                    0x90 if velocity > 0 => {
                        sounding.entry((channel, key)).or_default().push_back((tick, velocity));
                    }
                    0x80 | 0x90 => {
                        if let Some((onset, vel)) = sounding.get_mut(&(channel, key)).and_then(VecDeque::pop_front) {
                            if tick > onset {
                                out.notes.push(NoteEvent {
                                    onset,
                                    duration: tick - onset,
                                    pitch: key,
                                    velocity: vel,
                                    channel,
                                    track: index,
                                });
                            }
                        }
                    }
                    _ => {}
                }
            }
        }
    }
    let dangling: usize = sounding.values().map(VecDeque::len).sum();
    if dangling > 0 {
        log::warn!("track chunk {index}: dropped {dangling} note-on event(s) without a matching note-off");
    }
    Ok(out)
}

enum Event {
    Meta(u8, Vec<u8>),
    NoteOff { channel: u8, pitch: u8 },
    NoteOn { channel: u8, pitch: u8, velocity: u8 },
}

impl Event {
    /// Same-tick ordering: meta first, then note-offs, then note-ons.
    fn rank(&self) -> u8 {
        match self {
            Event::Meta(..) => 0,
            Event::NoteOff { .. } => 1,
            Event::NoteOn { .. } => 2,
        }
    }
}

fn push_varlen(out: &mut Vec<u8>, mut value: u32) {
    let mut buf = [0u8; 4];
    let mut n = 0;
    loop {
        buf[n] = (value & 0x7f) as u8;
        n += 1;
        value >>= 7;
        if value == 0 {
            break;
        }
    }
    for i in (0..n).rev() {
        out.push(buf[i] | if i > 0 { 0x80 } else { 0 });
    }
}

fn track_chunk(mut events: Vec<(u64, Event)>) -> Vec<u8> {
    events.sort_by_key(|(tick, e)| {
        let pitch = match e {
            Event::NoteOff { pitch, .. } | Event::NoteOn { pitch, .. } => *pitch,
            Event::Meta(..) => 0,
        };
        (*tick, e.rank(), pitch)
    });
    let mut body = Vec::new();
    let mut last = 0u64;
    for (tick, event) in &events {
        push_varlen(&mut body, (tick - last) as u32);
        last = *tick;
        match event {
            Event::Meta(kind, data) => {
                body.extend([0xff, *kind]);
                push_varlen(&mut body, data.len() as u32);
                body.extend(data);
            }
            Event::NoteOff { channel, pitch } => body.extend([0x80 | channel, *pitch, 64]),
            Event::NoteOn { channel, pitch, velocity } => body.extend([0x90 | channel, *pitch, *velocity]),
        }
    }
    body.extend([0x00, 0xff, 0x2f, 0x00]);
    let mut chunk = b"MTrk".to_vec();
    chunk.extend((body.len() as u32).to_be_bytes());
    chunk.extend(body);
    chunk
}

/// Writes a format 1 file: a conductor track with time signatures and tempos,
/// then one track per score track.
pub fn write_midi(score: &Score) -> Vec<u8> {
    let mut out = b"MThd".to_vec();
    out.extend(6u32.to_be_bytes());
    out.extend(1u16.to_be_bytes());
    out.extend((score.tracks.len() as u16 + 1).to_be_bytes());
    out.extend(score.ticks_per_quarter.to_be_bytes());

    let mut conductor = Vec::new();
    for ts in &score.time_signatures {
        let power = ts.denominator.max(1).trailing_zeros() as u8;
        conductor.push((ts.tick, Event::Meta(0x58, vec![ts.numerator, power, 24, 8])));
    }
    for &(tick, tempo) in &score.tempos {
        conductor.push((tick, Event::Meta(0x51, tempo.to_be_bytes()[1..].to_vec())));
    }
    out.extend(track_chunk(conductor));

    for (idx, notes) in score.tracks.iter().enumerate() {
        let mut events = Vec::with_capacity(notes.len() * 2 + 1);
        if let Some(name) = score.track_names.get(idx).and_then(Option::as_ref) {
            events.push((0, Event::Meta(0x03, name.as_bytes().to_vec())));
        }
        for n in notes {
            events.push((
                n.onset,
                Event::NoteOn { channel: n.channel & 0x0f, pitch: n.pitch, velocity: n.velocity.max(1) },
            ));
            events.push((n.end(), Event::NoteOff { channel: n.channel & 0x0f, pitch: n.pitch }));
        }
        out.extend(track_chunk(events));
    }
    out
}
