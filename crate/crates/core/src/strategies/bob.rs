use std::collections::BTreeSet;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::oracle::MatchingList;

use super::{number_bits, StrategyError};

/// A Bob strategy: always answers Alice's latest declaration.
pub trait BobStrategy: Send {
    fn name(&self) -> &'static str;

    /// Bob's declaration after Alice declared `alice_number`.
    fn respond(&mut self, alice_number: u64) -> Result<u64, StrategyError>;

    fn metered_bits(&self) -> u64;
}

/// Partner of Alice's last number under a fixed matching.
pub fn bob_mirror_move(last_alice_number: u64, matching: &MatchingList) -> Result<u64, StrategyError> {
    Ok(matching.query_partner(last_alice_number)?)
}

/// Uniformly random undeclared number of `[1, 2N]`.
pub fn bob_uniform_move<R: Rng + ?Sized>(declared: &BTreeSet<u64>, n: u64, rng: &mut R) -> Result<u64, StrategyError> {
    let max = 2 * n;
    let remaining = max - declared.range(1..=max).count() as u64;
    if remaining == 0 {
        return Err(StrategyError::Exhausted);
    }
    let target = rng.gen_range(0..remaining) as usize;
    Ok((1..=max).filter(|x| !declared.contains(x)).nth(target).expect("target below remaining count"))
}

/// The peeking adversary's choice. It reads the oracle and knows Alice's
/// open generated number `open_g`.
///
/// It drains `P_1 ∪ ... ∪ P_(n-1)` (pairs `1..=N/2`) while holding back the
/// partner of `open_g`, declares that partner last, and only then touches
/// `P_n`. At that moment `P_n` is untouched, so Alice cannot generate from it
/// once `N > k`.
pub fn bob_peeking_move(
    oracle: &MatchingList,
    is_declared: impl Fn(u64) -> bool,
    open_g: Option<u64>,
) -> Result<u64, StrategyError> {
    let n = oracle.n();
    let held_back = open_g.map(|g| oracle.query_partner(g)).transpose()?;
    let low = &oracle.pairs()[..(n / 2) as usize];
    let low_pick = low
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .filter(|&x| !is_declared(x) && Some(x) != held_back)
        .min();
    if let Some(x) = low_pick {
        return Ok(x);
    }
    if let Some(partner) = held_back.filter(|&p| !is_declared(p) && oracle.locate(p).is_ok_and(|q| q <= n / 2)) {
        return Ok(partner);
    }
    oracle.pairs()[(n / 2) as usize..]
        .iter()
        .flat_map(|&(a, b)| [a, b])
        .filter(|&x| !is_declared(x))
        .min()
        .ok_or(StrategyError::Exhausted)
}

/// Declares the partner of Alice's last number under a fixed matching.
#[derive(Debug, Clone)]
pub struct MirrorBob {
    matching: Arc<MatchingList>,
    last: Option<u64>,
}

impl MirrorBob {
    pub fn new(matching: Arc<MatchingList>) -> Self {
        MirrorBob { matching, last: None }
    }

    /// Mirror Bob with `x <-> 2N + 1 - x`.
    pub fn fixed(n: u64) -> Result<Self, StrategyError> {
        Ok(Self::new(Arc::new(MatchingList::mirror(n)?)))
    }
}

impl BobStrategy for MirrorBob {
    fn name(&self) -> &'static str {
        "bob-mirror"
    }

    fn respond(&mut self, alice_number: u64) -> Result<u64, StrategyError> {
        let max = 2 * self.matching.n();
        if alice_number < 1 || alice_number > max {
            return Err(StrategyError::OutOfRange { x: alice_number, max });
        }
        self.last = Some(alice_number);
        bob_mirror_move(alice_number, &self.matching)
    }

    fn metered_bits(&self) -> u64 {
        match self.last {
            Some(_) => number_bits(self.matching.n()),
            None => 0,
        }
    }
}

/// Declares a uniformly random undeclared number.
///
/// Keeps the undeclared numbers in a swap-remove pool so each move is O(1).
#[derive(Debug, Clone)]
pub struct UniformBob {
    n: u64,
    pool: Vec<u64>,
    // slot[x] = index of x in pool, or NONE once declared
    slot: Vec<u32>,
    rng: ChaCha8Rng,
}

impl UniformBob {
    const NONE: u32 = u32::MAX;

    pub fn new(n: u64, seed: u64) -> Self {
        let pool: Vec<u64> = (1..=2 * n).collect();
        let mut slot = vec![Self::NONE; 2 * n as usize + 1];
        for (i, &x) in pool.iter().enumerate() {
            slot[x as usize] = i as u32;
        }
        UniformBob { n, pool, slot, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn remove(&mut self, x: u64) -> Result<(), StrategyError> {
        let max = 2 * self.n;
        if x < 1 || x > max {
            return Err(StrategyError::OutOfRange { x, max });
        }
        let i = self.slot[x as usize];
        if i == Self::NONE {
            return Err(StrategyError::ProtocolError(format!("{x} was already declared")));
        }
        let last = *self.pool.last().expect("x is in the pool");
        self.pool.swap_remove(i as usize);
        if last != x {
            self.slot[last as usize] = i;
        }
        self.slot[x as usize] = Self::NONE;
        Ok(())
    }
}

impl BobStrategy for UniformBob {
    fn name(&self) -> &'static str {
        "bob-uniform"
    }

    fn respond(&mut self, alice_number: u64) -> Result<u64, StrategyError> {
        self.remove(alice_number)?;
        if self.pool.is_empty() {
            return Err(StrategyError::Exhausted);
        }
        let pick = self.pool[self.rng.gen_range(0..self.pool.len())];
        self.remove(pick)?;
        Ok(pick)
    }

    fn metered_bits(&self) -> u64 {
        self.pool.len() as u64 * number_bits(self.n)
    }
}

/// Adversary that reads the oracle; see [`bob_peeking_move`].
#[derive(Debug, Clone)]
pub struct PeekingBob {
    oracle: Arc<MatchingList>,
    declared: Vec<bool>,
    open_g: Option<u64>,
    last_own: Option<u64>,
}

impl PeekingBob {
    pub fn new(oracle: Arc<MatchingList>) -> Self {
        let declared = vec![false; 2 * oracle.n() as usize + 1];
        PeekingBob { oracle, declared, open_g: None, last_own: None }
    }

    pub fn open_g(&self) -> Option<u64> {
        self.open_g
    }
}

impl BobStrategy for PeekingBob {
    fn name(&self) -> &'static str {
        "bob-peeking"
    }

    fn respond(&mut self, alice_number: u64) -> Result<u64, StrategyError> {
        let max = 2 * self.oracle.n();
        if alice_number < 1 || alice_number > max {
            return Err(StrategyError::OutOfRange { x: alice_number, max });
        }
        // Alice either mirrors Bob's last number or opens a new generated one.
        let mirrored = match self.last_own {
            Some(b) => self.oracle.query_partner(b)? == alice_number,
            None => false,
        };
        if !mirrored {
            self.open_g = Some(alice_number);
        }
        self.declared[alice_number as usize] = true;
        let pick = bob_peeking_move(&self.oracle, |x| self.declared[x as usize], self.open_g)?;
        self.declared[pick as usize] = true;
        self.last_own = Some(pick);
        Ok(pick)
    }

    fn metered_bits(&self) -> u64 {
        let n = self.oracle.n();
        let numbers = self.open_g.iter().count() as u64 + self.last_own.iter().count() as u64;
        2 * n + numbers * number_bits(n)
    }
}
