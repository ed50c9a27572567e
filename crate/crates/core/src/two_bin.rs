//! The two-bin race behind Alice's abort probability.
//!
//! Bin A stands for the numbers of `P_1 ∪ ... ∪ P_(i-1)`, bin B for `P_i`;
//! both start with `m` balls. Each round Bob removes a uniformly random ball
//! and Alice removes another from the same bin (from the other bin if that
//! one is empty). In the Alice-starts variant Alice first removes one ball
//! from A. The event is that B still holds more than `t` balls at the moment
//! A becomes empty.
//!
//! In the Bob-starts variant with even `m` every round removes a whole pair
//! from one bin, and the round sequence is a uniform interleaving of `m/2`
//! A-pairs and `m/2` B-pairs. The event then says the last `floor(t/2) + 1`
//! pairs all belong to B, which has the closed form [`exact_tail_prob`].

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::seed::trial_seed;

/// Largest bin size accepted by [`enumerate_prob`].
pub const ENUMERATION_LIMIT: u64 = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TwoBinError {
    #[error("invalid two-bin config: {0}")]
    InvalidConfig(String),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("bin size {0} is too large to enumerate (limit {ENUMERATION_LIMIT})")]
    TooLarge(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Variant {
    #[serde(rename = "alice")]
    AliceStarts,
    #[serde(rename = "bob")]
    BobStarts,
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::AliceStarts => "alice",
            Variant::BobStarts => "bob",
        })
    }
}

impl FromStr for Variant {
    type Err = TwoBinError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "alice" | "alice-starts" | "AliceStarts" => Ok(Variant::AliceStarts),
            "bob" | "bob-starts" | "BobStarts" => Ok(Variant::BobStarts),
            other => Err(TwoBinError::InvalidConfig(format!("unknown variant {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TwoBinConfig {
    /// Balls per bin.
    pub m: u64,
    /// The event needs strictly more than `t` balls left in bin B.
    pub t: u64,
    pub variant: Variant,
    pub trials: u64,
    pub seed: u64,
}

impl TwoBinConfig {
    pub fn validate(&self) -> Result<(), TwoBinError> {
        if self.m < 1 {
            return Err(TwoBinError::InvalidConfig("m must be at least 1".into()));
        }
        if self.t >= 2 * self.m {
            return Err(TwoBinError::InvalidConfig(format!("threshold t = {} must be below 2m = {}", self.t, 2 * self.m)));
        }
        if self.trials < 1 {
            return Err(TwoBinError::InvalidConfig("trials must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoBinResult {
    pub event_count: u64,
    pub trials: u64,
    pub estimate: f64,
    /// Closed-form probability when one exists (Bob starts, even `m`).
    pub exact: Option<BigRational>,
    /// Three standard errors of the estimate.
    pub confidence_halfwidth: f64,
}

impl TwoBinResult {
    fn from_counts(event_count: u64, trials: u64, exact: Option<BigRational>) -> Self {
        let estimate = event_count as f64 / trials as f64;
        let confidence_halfwidth = 3.0 * (estimate * (1.0 - estimate) / trials as f64).sqrt();
        TwoBinResult { event_count, trials, estimate, exact, confidence_halfwidth }
    }
}

/// One run of the process; returns whether the event happened.
pub fn run_trial<R: Rng + ?Sized>(m: u64, t: u64, variant: Variant, rng: &mut R) -> bool {
    let (mut a, mut b) = (m, m);
    if variant == Variant::AliceStarts {
        a -= 1;
        if a == 0 {
            return b > t;
        }
    }
    loop {
        // a > 0 here, so Bob always has a ball to draw.
        let bob_from_a = rng.gen_range(0..a + b) < a;
        if bob_from_a {
            a -= 1;
            if a == 0 {
                return b > t;
            }
            a -= 1;
            if a == 0 {
                return b > t;
            }
        } else {
            b -= 1;
            if b > 0 {
                b -= 1;
            } else {
                a -= 1;
                if a == 0 {
                    return b > t;
                }
            }
        }
    }
}

/// Monte Carlo estimate of the event probability, one derived seed per trial.
pub fn simulate_two_bin(config: &TwoBinConfig) -> Result<TwoBinResult, TwoBinError> {
    config.validate()?;
    let TwoBinConfig { m, t, variant, trials, seed } = *config;
    let event_count: u64 = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed, i));
            run_trial(m, t, variant, &mut rng) as u64
        })
        .sum();
    let exact = match variant {
        Variant::BobStarts => bob_starts_prob(m, t),
        Variant::AliceStarts => None,
    };
    Ok(TwoBinResult::from_counts(event_count, trials, exact))
}

/// Probability that the last `r` of `2m'` uniformly interleaved items,
/// half of them B, are all B: `prod_{j<r} (m' - j) / (2m' - j)`.
pub fn exact_tail_prob(pairs: u64, r: u64) -> Result<BigRational, TwoBinError> {
    if r > pairs {
        return Err(TwoBinError::InvalidParams(format!("need 0 <= r <= m', got r = {r}, m' = {pairs}")));
    }
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for j in 0..r {
        num *= BigInt::from(pairs - j);
        den *= BigInt::from(2 * pairs - j);
    }
    Ok(BigRational::new(num, den))
}

/// Closed-form Bob-starts probability for bins of `m` balls and threshold
/// `t`; `None` for odd `m`, where rounds do not remove whole pairs.
pub fn bob_starts_prob(m: u64, t: u64) -> Option<BigRational> {
    if m % 2 != 0 {
        return None;
    }
    let pairs = m / 2;
    let r = t / 2 + 1;
    if r > pairs {
        return Some(BigRational::zero());
    }
    exact_tail_prob(pairs, r).ok()
}

/// `2^-r - exact_tail_prob(m', r)`.
pub fn bound_margin(pairs: u64, r: u64) -> Result<BigRational, TwoBinError> {
    if r < 1 || r > pairs {
        return Err(TwoBinError::InvalidParams(format!("need 1 <= r <= m', got r = {r}, m' = {pairs}")));
    }
    let bound = BigRational::new(BigInt::one(), BigInt::one() << r as usize);
    Ok(bound - exact_tail_prob(pairs, r)?)
}

/// Exact event probability by walking every draw sequence, weighted.
pub fn enumerate_prob(m: u64, t: u64, variant: Variant) -> Result<BigRational, TwoBinError> {
    if m > ENUMERATION_LIMIT {
        return Err(TwoBinError::TooLarge(m));
    }
    if m < 1 {
        return Err(TwoBinError::InvalidConfig("m must be at least 1".into()));
    }
    let event = |b: u64| if b > t { BigRational::one() } else { BigRational::zero() };
    let (a, b) = match variant {
        Variant::AliceStarts if m == 1 => return Ok(event(m)),
        Variant::AliceStarts => (m - 1, m),
        Variant::BobStarts => (m, m),
    };
    Ok(bob_round(a, b, &event))
}

// Probability of the event from a state where Bob is about to draw and a > 0.
fn bob_round(a: u64, b: u64, event: &dyn Fn(u64) -> BigRational) -> BigRational {
    let total = BigInt::from(a + b);
    let mut acc = BigRational::zero();
    // Bob draws from A.
    {
        let weight = BigRational::new(BigInt::from(a), total.clone());
        // With a <= 2, Alice's mirror draw (or her fallback) empties A.
        let value = if a <= 2 {
            event(b)
        } else {
            bob_round(a - 2, b, event)
        };
        acc += weight * value;
    }
    // Bob draws from B.
    if b > 0 {
        let weight = BigRational::new(BigInt::from(b), total);
        let value = if b >= 2 {
            bob_round(a, b - 2, event)
        } else if a == 1 {
            // Alice falls back to A and empties it; B is already empty.
            event(0)
        } else {
            bob_round(a - 1, 0, event)
        };
        acc += weight * value;
    }
    acc
}

/// Converts an exact probability to `f64`.
pub fn to_f64(q: &BigRational) -> f64 {
    q.to_f64().unwrap_or(f64::NAN)
}

/// Abort-probability estimates for a game with `N = 2^n` and budget `k`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnionBound {
    /// Sum over `i = 2..=n` of the Bob-starts probability with `2^i` balls
    /// per bin (the numbers in `P_i`) and threshold `k`.
    pub exact_sum: f64,
    /// Same sum with `2^(i+1)` balls per bin.
    pub literal_sum: f64,
    /// `n * 2^-k`.
    pub n_times_two_pow_minus_k: f64,
}

pub fn union_bound(n: u64, k: u64) -> UnionBound {
    let log_n = n.trailing_zeros() as u64;
    let sum = |shift: u64| -> f64 {
        (2..=log_n)
            .map(|i| bob_starts_prob(1u64 << (i + shift), k).map(|q| to_f64(&q)).unwrap_or(0.0))
            .sum()
    };
    UnionBound {
        exact_sum: sum(0),
        literal_sum: sum(1),
        n_times_two_pow_minus_k: log_n as f64 * 2f64.powi(-(k as i32)),
    }
}

/// One row of a two-bin report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwoBinRow {
    pub m: u64,
    pub t: u64,
    pub variant: Variant,
    pub trials: u64,
    pub estimate: f64,
    pub confidence_halfwidth: f64,
    /// Exact probability as `num/den`, when known.
    pub exact: Option<String>,
    pub exact_f64: Option<f64>,
    /// `2^-r - exact` with `r = floor(t/2) + 1`, when defined.
    pub margin: Option<String>,
}

impl TwoBinRow {
    pub fn new(config: &TwoBinConfig, result: &TwoBinResult, exact: Option<BigRational>) -> Self {
        let r = config.t / 2 + 1;
        let margin = match config.variant {
            Variant::BobStarts if config.m % 2 == 0 => bound_margin(config.m / 2, r).ok().map(|q| q.to_string()),
            _ => None,
        };
        TwoBinRow {
            m: config.m,
            t: config.t,
            variant: config.variant,
            trials: result.trials,
            estimate: result.estimate,
            confidence_halfwidth: result.confidence_halfwidth,
            exact_f64: exact.as_ref().map(to_f64),
            exact: exact.map(|q| q.to_string()),
            margin,
        }
    }

    pub const CSV_HEADER: &'static str = "m,t,variant,trials,estimate,confidence_halfwidth,exact,exact_f64,margin";

    pub fn to_csv(&self) -> String {
        let opt = |o: &Option<String>| o.clone().unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.m,
            self.t,
            self.variant,
            self.trials,
            self.estimate,
            self.confidence_halfwidth,
            opt(&self.exact),
            self.exact_f64.map(|x| x.to_string()).unwrap_or_default(),
            opt(&self.margin)
        )
    }
}
