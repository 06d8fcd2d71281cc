//! Operational fixed interval scheduling with minimal idle time.
//!
//! Instances are compiled to QUBO models ([`qubo`]), solved by simulated
//! annealing or exhaustive search ([`solver`]), and the selected jobs are
//! placed on machines by greedy interval partitioning ([`assign`]). The
//! [`music`] module builds instances from multi-track MIDI scores.

pub mod assign;
pub mod cli;
pub mod error;
pub mod instance;
pub mod music;
pub mod qubo;
pub mod solver;

pub use assign::{depth, greedy_assign, Assignment};
pub use error::{Error, Result};
pub use instance::{evaluate, occupancy, Instance, Job, Selection, ViolationReport};
pub use qubo::{
    default_penalties, encode, encode_min_idle, encode_unidentical, slack_binary_expansion, Decoded, ExportFormat,
    IsingModel, PenaltyConfig, QuboModel, VarRole, VariableRegistry,
};
pub use solver::{brute_force, select_solution, simulated_anneal, AnnealSchedule, Candidate, Policy, SampleSet};
