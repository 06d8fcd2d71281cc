use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("time slot {slot} is outside the horizon 0..{horizon}")]
    SlotOutOfRange { slot: u32, horizon: u32 },

    #[error("instance has no jobs")]
    EmptyInstance,

    #[error("invalid instance: {}", .0.join("; "))]
    InvalidInstance(Vec<String>),

    #[error("invalid penalties: {0}")]
    InvalidPenalties(String),

    #[error("eligibility map is required for the unidentical-machine encoding")]
    MissingEligibility,

    #[error("unknown variable {0}")]
    UnknownVariable(usize),

    #[error("bit vector has length {got}, model has {expected} variables")]
    LengthMismatch { expected: usize, got: usize },

    #[error("model has {0} variables; exhaustive search is limited to {max}", max = crate::solver::BRUTE_FORCE_MAX_VARS)]
    ModelTooLarge(usize),

    #[error("model has no variables")]
    EmptyModel,

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("malformed QUBO file, line {line}: {msg}")]
    QuboFormat { line: usize, msg: String },

    #[error("malformed MIDI: {0}")]
    Midi(String),

    #[error("unsupported MIDI format {0}")]
    UnsupportedMidiFormat(u16),

    #[error("machine {machine} hosts overlapping jobs {first} and {second}")]
    OverlappingAssignment { machine: u32, first: String, second: String },

    #[error("machine count must be at least 1")]
    NoMachines,

    #[error("invalid segmentation parameters: {0}")]
    InvalidSegmentation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
