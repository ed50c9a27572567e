//! Memory-metered players.
//!
//! Every strategy reports `metered_bits`, a canonical bit count of its
//! persistent state: a stored number costs `ceil(log2(2N + 1))` bits, a
//! sketch residue `ceil(log2 p)` bits, a counter `ceil(log2(2N + 1))` bits
//! and a flag one bit. Oracle contents and query answers are free.

mod alice;
mod bob;

pub use alice::{partition_of, AliceMove, AliceState, PartitionTracker, TrackerMode};
pub use bob::{
    bob_mirror_move, bob_peeking_move, bob_uniform_move, BobStrategy, MirrorBob, PeekingBob, UniformBob,
};

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::missing_numbers::{bits_for, SketchError};
use crate::oracle::{MatchingList, OracleError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StrategyError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("protocol error: {0}")]
    ProtocolError(String),
    #[error("number {x} outside [1, {max}]")]
    OutOfRange { x: u64, max: u64 },
    #[error("no undeclared numbers left")]
    Exhausted,
    #[error("unknown strategy {0:?}")]
    UnknownStrategy(String),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

/// Bits charged for one stored number in `[1, 2N]`.
pub fn number_bits(n: u64) -> u64 {
    bits_for(2 * n)
}

/// Strategy names accepted on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StrategyName {
    AlicePartition,
    BobMirror,
    BobUniform,
    BobPeeking,
}

impl StrategyName {
    pub const ALL: [StrategyName; 4] =
        [StrategyName::AlicePartition, StrategyName::BobMirror, StrategyName::BobUniform, StrategyName::BobPeeking];

    pub fn as_str(self) -> &'static str {
        match self {
            StrategyName::AlicePartition => "alice-partition",
            StrategyName::BobMirror => "bob-mirror",
            StrategyName::BobUniform => "bob-uniform",
            StrategyName::BobPeeking => "bob-peeking",
        }
    }

    pub fn is_bob(self) -> bool {
        !matches!(self, StrategyName::AlicePartition)
    }
}

impl fmt::Display for StrategyName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for StrategyName {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyName::ALL
            .into_iter()
            .find(|name| name.as_str() == s)
            .ok_or_else(|| StrategyError::UnknownStrategy(s.to_string()))
    }
}

/// Builds the named Bob. `oracle` is only consulted by the peeking
/// adversary; mirror Bob uses the fixed matching `x <-> 2N + 1 - x`.
pub fn make_bob(
    name: StrategyName,
    oracle: &Arc<MatchingList>,
    seed: u64,
) -> Result<Box<dyn BobStrategy>, StrategyError> {
    let n = oracle.n();
    Ok(match name {
        StrategyName::BobMirror => Box::new(MirrorBob::fixed(n)?),
        StrategyName::BobUniform => Box::new(UniformBob::new(n, seed)),
        StrategyName::BobPeeking => Box::new(PeekingBob::new(Arc::clone(oracle))),
        StrategyName::AlicePartition => {
            return Err(StrategyError::UnknownStrategy(format!("{name} is not a Bob strategy")))
        }
    })
}
