//! Fake trajectory generation: the prefix-suffix heuristic, its exhaustive
//! baseline, and fake-length sampling.

mod brute;
mod length;
mod prefix;
mod prune;
mod select;
mod trap;

pub use brute::{brute_force_generate, enumerate, DEFAULT_ENUMERATION_CAP};
pub use length::{
    sample_length_distribution, sample_length_distribution_with, LengthDistribution, LengthShape,
};
pub use prefix::PrefixSet;
pub use prune::{delete_hopeless, Candidate, PrefixIndex};
pub use select::{pick_high, PickOutcome, Scored, TieBreak};
pub use trap::{
    trap_generate, validate_patterns, FakeTrajectorySet, RoundStats, TrapConfig, UnderfillPolicy,
};
