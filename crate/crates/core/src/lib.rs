//! The mirror game with a memory-metered randomized first player.
//!
//! Alice and Bob alternately declare numbers from `[1, 2N]`; repeating a
//! number loses and declaring all of them ties. Given an auxiliary random
//! matching as a free read-only list of pairs, Alice ties with probability
//! at least `1 - 1/N` while storing only `O((log N)^3)` bits: she mirrors
//! Bob under the matching and tracks `log2 N` geometrically growing
//! partitions of the list, each with a power-sum sketch that recovers the
//! last `k = c log2 N` undeclared numbers.
//!
//! Modules:
//! - [`game`]: the referee and transcripts.
//! - [`oracle`]: the matching list, its query models and random-string decoding.
//! - [`missing_numbers`]: the streaming missing-numbers sketch.
//! - [`strategies`]: Alice's partition strategy and the Bob strategies.
//! - [`two_bin`]: the two-bin process, exact tail probabilities and simulation.
//! - [`harness`]: matches, Monte Carlo campaigns, memory measurement and the REPL.

pub mod game;
pub mod harness;
pub mod missing_numbers;
pub mod oracle;
pub mod seed;
pub mod strategies;
pub mod two_bin;

pub use game::{GameConfig, GameError, GameState, GameTranscript, Outcome, Player};
pub use oracle::{decode_random_string, MatchingList, OracleError, RandomBitString};
pub use strategies::{AliceMove, AliceState, BobStrategy, StrategyError, StrategyName};
