//! Experiment driver: single matches, Monte Carlo campaigns and memory
//! measurements.

mod repl;

pub use repl::run_repl;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::game::{budget, GameConfig, GameError, GameState, GameTranscript, Outcome, Player};
use crate::oracle::{MatchingList, OracleError};
use crate::seed::{substream, trial_seed};
use crate::strategies::{make_bob, number_bits, AliceMove, AliceState, StrategyError, StrategyName};
use crate::two_bin::{union_bound, TwoBinError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Game(#[from] GameError),
    #[error(transparent)]
    Strategy(#[from] StrategyError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    TwoBin(#[from] TwoBinError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

/// Oracle substream of a match seed.
const ORACLE_STREAM: u64 = 0;
/// Bob substream of a match seed.
const BOB_STREAM: u64 = 1;

/// Everything recorded about one finished match.
#[derive(Debug, Clone)]
pub struct MatchRecord {
    pub transcript: GameTranscript,
    pub k: usize,
    pub peak_alice_bits: u64,
    pub peak_bob_bits: u64,
}

impl MatchRecord {
    pub fn outcome(&self) -> Outcome {
        self.transcript.outcome
    }
}

fn check_n(n: u64) -> Result<(), HarnessError> {
    if n < 2 || !n.is_power_of_two() {
        return Err(HarnessError::InvalidConfig(format!("N = {n} must be a power of two and at least 2")));
    }
    Ok(())
}

/// Generates the oracle for `seed`.
pub fn oracle_for_seed(n: u64, seed: u64) -> Result<Arc<MatchingList>, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(substream(seed, ORACLE_STREAM));
    Ok(Arc::new(MatchingList::generate(n, &mut rng)?))
}

/// Plays one full game with a fresh oracle drawn from `seed`.
pub fn play_match(alice: StrategyName, bob: StrategyName, n: u64, c: f64, seed: u64) -> Result<MatchRecord, HarnessError> {
    if alice != StrategyName::AlicePartition {
        return Err(HarnessError::InvalidConfig(format!("{alice} cannot play Alice")));
    }
    if !bob.is_bob() {
        return Err(HarnessError::InvalidConfig(format!("{bob} cannot play Bob")));
    }
    check_n(n)?;
    let config = GameConfig::new(n, c, seed)?;
    let oracle = oracle_for_seed(n, seed)?;
    let mut bob = make_bob(bob, &oracle, substream(seed, BOB_STREAM))?;
    let (mut alice, first) = AliceState::init(Arc::clone(&oracle), c)?;
    let mut game = GameState::new(config)?;

    game.apply_declaration(Player::Alice, first)?;
    let mut last_alice = first;
    let mut peak_bob = 0;
    while !game.outcome().is_over() {
        let b = bob.respond(last_alice)?;
        peak_bob = peak_bob.max(bob.metered_bits());
        if game.apply_declaration(Player::Bob, b)?.is_over() {
            break;
        }
        match alice.respond(b)? {
            AliceMove::Declare(a) => {
                game.apply_declaration(Player::Alice, a)?;
                last_alice = a;
            }
            AliceMove::Abort { partition, undeclared } => {
                game.abort(format!(
                    "P_{partition} has {undeclared} undeclared numbers, more than k = {}",
                    alice.k()
                ))?;
            }
        }
    }
    Ok(MatchRecord {
        transcript: game.transcript(),
        k: alice.k(),
        peak_alice_bits: alice.peak_bits(),
        peak_bob_bits: peak_bob,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(HarnessError::InvalidConfig(format!("unknown format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CampaignConfig {
    pub ns: Vec<u64>,
    pub c: f64,
    pub bob: StrategyName,
    pub trials: u64,
    pub master_seed: u64,
    pub workers: usize,
    pub output: Option<PathBuf>,
    pub format: ReportFormat,
    /// Include wall-clock time per `N`; off by default so reports are
    /// byte-reproducible.
    pub timing: bool,
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.trials < 1 {
            return Err(HarnessError::InvalidConfig("trials must be at least 1".into()));
        }
        if self.ns.is_empty() {
            return Err(HarnessError::InvalidConfig("no N values given".into()));
        }
        for &n in &self.ns {
            check_n(n)?;
        }
        if !(self.c > 0.0) || !self.c.is_finite() {
            return Err(HarnessError::InvalidConfig(format!("c must be positive, got {}", self.c)));
        }
        if !self.bob.is_bob() {
            return Err(HarnessError::InvalidConfig(format!("{} cannot play Bob", self.bob)));
        }
        if self.workers < 1 {
            return Err(HarnessError::InvalidConfig("workers must be at least 1".into()));
        }
        Ok(())
    }
}

/// Aggregate results for one `N`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NStats {
    pub n: u64,
    pub log2_n: u32,
    pub k: usize,
    pub c: f64,
    pub bob: String,
    pub trials: u64,
    /// `1 - 1/N`.
    pub tie_target: f64,
    pub ties: u64,
    pub alice_wins: u64,
    pub bob_wins: u64,
    pub aborts: u64,
    pub tie_rate: f64,
    pub abort_rate: f64,
    /// Three standard errors of `abort_rate`.
    pub abort_rate_3sigma: f64,
    /// Sum of exact two-bin tail probabilities over the sketched partitions.
    pub predicted_abort_bound: f64,
    /// The same sum with bins twice as large.
    pub predicted_abort_bound_literal: f64,
    /// `log2 N * 2^-k`.
    pub union_bound_expression: f64,
    pub peak_alice_bits_max: u64,
    pub peak_alice_bits_mean: f64,
    pub peak_bob_bits: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StatsReport {
    pub master_seed: u64,
    pub results: Vec<NStats>,
}

impl StatsReport {
    pub fn to_json(&self) -> Result<String, HarnessError> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub const CSV_HEADER: &'static str = "n,log2_n,k,c,bob,trials,tie_target,ties,alice_wins,bob_wins,aborts,\
tie_rate,abort_rate,abort_rate_3sigma,predicted_abort_bound,predicted_abort_bound_literal,\
union_bound_expression,peak_alice_bits_max,peak_alice_bits_mean,peak_bob_bits,elapsed_ms";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.results {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
                r.n,
                r.log2_n,
                r.k,
                r.c,
                r.bob,
                r.trials,
                r.tie_target,
                r.ties,
                r.alice_wins,
                r.bob_wins,
                r.aborts,
                r.tie_rate,
                r.abort_rate,
                r.abort_rate_3sigma,
                r.predicted_abort_bound,
                r.predicted_abort_bound_literal,
                r.union_bound_expression,
                r.peak_alice_bits_max,
                r.peak_alice_bits_mean,
                r.peak_bob_bits,
                r.elapsed_ms.map(|e| e.to_string()).unwrap_or_default()
            );
        }
        out
    }

    pub fn render(&self, format: ReportFormat) -> Result<String, HarnessError> {
        match format {
            ReportFormat::Json => self.to_json(),
            ReportFormat::Csv => Ok(self.to_csv()),
        }
    }
}

/// Runs `f(trial_index)` for every trial on a pool of `workers` threads and
/// returns the results in trial order.
fn fan_out<T, F>(workers: usize, trials: u64, f: F) -> Result<Vec<T>, HarnessError>
where
    T: Send,
    F: Fn(u64) -> Result<T, HarnessError> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
    pool.install(|| (0..trials).into_par_iter().map(&f).collect())
}

/// Plays `trials` independent games per `N`; trial `i` uses
/// `trial_seed(master_seed, i)`.
pub fn run_montecarlo(config: &CampaignConfig) -> Result<StatsReport, HarnessError> {
    config.validate()?;
    let mut results = Vec::with_capacity(config.ns.len());
    for &n in &config.ns {
        let start = Instant::now();
        let records = fan_out(config.workers, config.trials, |i| {
            play_match(StrategyName::AlicePartition, config.bob, n, config.c, trial_seed(config.master_seed, i))
        })?;
        let elapsed_ms = start.elapsed().as_millis() as u64;
        let k = budget(n, config.c);
        let count = |o: Outcome| records.iter().filter(|r| r.outcome() == o).count() as u64;
        let aborts = records.iter().filter(|r| r.transcript.aborted).count() as u64;
        let trials = config.trials;
        let abort_rate = aborts as f64 / trials as f64;
        let bound = union_bound(n, k as u64);
        let peak_sum: u64 = records.iter().map(|r| r.peak_alice_bits).sum();
        let ties = count(Outcome::Tie);
        results.push(NStats {
            n,
            log2_n: n.trailing_zeros(),
            k,
            c: config.c,
            bob: config.bob.to_string(),
            trials,
            tie_target: 1.0 - 1.0 / n as f64,
            ties,
            alice_wins: count(Outcome::AliceWins),
            bob_wins: count(Outcome::BobWins),
            aborts,
            tie_rate: ties as f64 / trials as f64,
            abort_rate,
            abort_rate_3sigma: 3.0 * (abort_rate * (1.0 - abort_rate) / trials as f64).sqrt(),
            predicted_abort_bound: bound.exact_sum,
            predicted_abort_bound_literal: bound.literal_sum,
            union_bound_expression: bound.n_times_two_pow_minus_k,
            peak_alice_bits_max: records.iter().map(|r| r.peak_alice_bits).max().unwrap_or(0),
            peak_alice_bits_mean: peak_sum as f64 / trials as f64,
            peak_bob_bits: records.iter().map(|r| r.peak_bob_bits).max().unwrap_or(0),
            elapsed_ms: config.timing.then_some(elapsed_ms),
        });
    }
    let report = StatsReport { master_seed: config.master_seed, results };
    if let Some(path) = &config.output {
        std::fs::write(path, report.render(config.format)?)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryRow {
    pub n: u64,
    pub log2_n: u32,
    pub k: usize,
    pub trials: u64,
    pub peak_alice_bits_max: u64,
    pub peak_alice_bits_mean: f64,
    /// `peak_alice_bits_max / (log2 N)^3`.
    pub bits_per_log_cubed: f64,
    pub peak_mirror_bob_bits: u64,
    /// `2 * ceil(log2(2N + 1))`.
    pub mirror_bob_bound: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryReport {
    pub c: f64,
    pub rows: Vec<MemoryRow>,
    /// Twice the `bits_per_log_cubed` of the smallest `N`.
    pub calibrated_constant: f64,
    /// Whether every row satisfies `peak <= calibrated_constant * (log2 N)^3`.
    pub within_cubic_bound: bool,
}

/// Peak metered memory of Alice (against uniform Bob) and of mirror Bob.
pub fn measure_memory(ns: &[u64], c: f64, trials: u64, seed: u64) -> Result<MemoryReport, HarnessError> {
    if ns.is_empty() {
        return Err(HarnessError::InvalidConfig("no N values given".into()));
    }
    if trials < 1 {
        return Err(HarnessError::InvalidConfig("trials must be at least 1".into()));
    }
    let mut ns = ns.to_vec();
    ns.sort_unstable();
    let mut rows = Vec::with_capacity(ns.len());
    for n in ns {
        check_n(n)?;
        let workers = rayon::current_num_threads();
        let alice_runs = fan_out(workers, trials, |i| {
            play_match(StrategyName::AlicePartition, StrategyName::BobUniform, n, c, trial_seed(seed, i))
        })?;
        let mirror_runs = fan_out(workers, trials.min(5), |i| {
            play_match(StrategyName::AlicePartition, StrategyName::BobMirror, n, c, trial_seed(seed, i))
        })?;
        let max = alice_runs.iter().map(|r| r.peak_alice_bits).max().unwrap_or(0);
        let mean = alice_runs.iter().map(|r| r.peak_alice_bits).sum::<u64>() as f64 / trials as f64;
        let log = n.trailing_zeros();
        rows.push(MemoryRow {
            n,
            log2_n: log,
            k: budget(n, c),
            trials,
            peak_alice_bits_max: max,
            peak_alice_bits_mean: mean,
            bits_per_log_cubed: max as f64 / (log as f64).powi(3),
            peak_mirror_bob_bits: mirror_runs.iter().map(|r| r.peak_bob_bits).max().unwrap_or(0),
            mirror_bob_bound: 2 * number_bits(n),
        });
    }
    let calibrated_constant = 2.0 * rows[0].bits_per_log_cubed;
    let within_cubic_bound = rows
        .iter()
        .all(|r| r.peak_alice_bits_max as f64 <= calibrated_constant * (r.log2_n as f64).powi(3));
    Ok(MemoryReport { c, rows, calibrated_constant, within_cubic_bound })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_bob_small_game_ties() {
        let rec = play_match(StrategyName::AlicePartition, StrategyName::BobUniform, 16, 2.0, 7).unwrap();
        assert_eq!(rec.outcome(), Outcome::Tie);
        assert_eq!(rec.transcript.moves.len(), 32);
        assert_eq!(rec.k, 8);
    }

    #[test]
    fn peeking_bob_forces_abort() {
        for seed in 0..5 {
            let rec = play_match(StrategyName::AlicePartition, StrategyName::BobPeeking, 256, 2.0, seed).unwrap();
            assert_eq!(rec.outcome(), Outcome::BobWins);
            assert!(rec.transcript.aborted);
        }
    }

    #[test]
    fn mirror_bob_game_is_repetition_free() {
        for seed in 0..20 {
            let rec = play_match(StrategyName::AlicePartition, StrategyName::BobMirror, 8, 2.0, seed).unwrap();
            assert_ne!(rec.outcome(), Outcome::AliceWins);
            assert!(rec.outcome() == Outcome::Tie || rec.transcript.aborted);
            assert_eq!(rec.peak_bob_bits, 5);
        }
    }

    #[test]
    fn rejects_bad_names_and_sizes() {
        assert!(play_match(StrategyName::BobMirror, StrategyName::BobMirror, 8, 2.0, 0).is_err());
        assert!(play_match(StrategyName::AlicePartition, StrategyName::AlicePartition, 8, 2.0, 0).is_err());
        assert!(play_match(StrategyName::AlicePartition, StrategyName::BobUniform, 12, 2.0, 0).is_err());
    }

    fn campaign(trials: u64, workers: usize) -> CampaignConfig {
        CampaignConfig {
            ns: vec![16, 64],
            c: 2.0,
            bob: StrategyName::BobUniform,
            trials,
            master_seed: 5,
            workers,
            output: None,
            format: ReportFormat::Json,
            timing: false,
        }
    }

    #[test]
    fn campaign_conserves_and_is_deterministic() {
        let a = run_montecarlo(&campaign(40, 1)).unwrap();
        let b = run_montecarlo(&campaign(40, 4)).unwrap();
        assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
        for r in &a.results {
            assert_eq!(r.ties + r.alice_wins + r.bob_wins, r.trials);
            assert!(r.abort_rate <= 1.0);
            assert_eq!(r.alice_wins, 0);
            assert!(r.elapsed_ms.is_none());
        }
        let csv = a.to_csv();
        assert_eq!(csv.lines().count(), 3);
        assert_eq!(csv.lines().next().unwrap().split(',').count(), csv.lines().nth(1).unwrap().split(',').count());
    }

    #[test]
    fn campaign_guards() {
        assert!(matches!(run_montecarlo(&campaign(0, 1)), Err(HarnessError::InvalidConfig(_))));
        let mut cfg = campaign(1, 1);
        cfg.ns = vec![24];
        assert!(run_montecarlo(&cfg).is_err());
        cfg.ns = vec![];
        assert!(run_montecarlo(&cfg).is_err());
        let mut cfg = campaign(1, 1);
        cfg.bob = StrategyName::AlicePartition;
        assert!(run_montecarlo(&cfg).is_err());
    }

    #[test]
    fn memory_guards_and_mirror_bound() {
        assert!(matches!(measure_memory(&[], 2.0, 1, 0), Err(HarnessError::InvalidConfig(_))));
        let report = measure_memory(&[1024], 2.0, 2, 0).unwrap();
        let row = &report.rows[0];
        assert!(row.peak_mirror_bob_bits <= 2 * 12);
        assert_eq!(row.mirror_bob_bound, 24);
        assert!(report.within_cubic_bound);
    }
}
