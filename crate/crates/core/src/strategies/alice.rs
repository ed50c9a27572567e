use std::collections::BTreeSet;
use std::sync::Arc;

use crate::game::budget;
use crate::missing_numbers::{recover_newton, select_prime, PowerSumSketch, SketchParams};
use crate::oracle::MatchingList;

use super::{number_bits, StrategyError};

/// Partition index holding pair `q`: pairs 1 and 2 form `P_1`, and for
/// `i >= 2` pairs `2^(i-1) + 1 ..= 2^i` form `P_i`.
pub fn partition_of(q: u64) -> u32 {
    debug_assert!(q >= 1);
    if q <= 2 {
        1
    } else {
        u64::BITS - (q - 1).leading_zeros()
    }
}

fn pair_range(index: u32) -> (u64, u64) {
    if index == 1 {
        (1, 2)
    } else {
        ((1u64 << (index - 1)) + 1, 1u64 << index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TrackerMode {
    /// The undeclared members, listed outright.
    Explicit(BTreeSet<u64>),
    /// Power sums of the whole partition and of its declared members.
    Sketched { offline: PowerSumSketch, online: PowerSumSketch },
}

/// Alice's view of one partition `P_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartitionTracker {
    index: u32,
    first_pair: u64,
    last_pair: u64,
    declared_count: u64,
    mode: TrackerMode,
}

impl PartitionTracker {
    fn build(index: u32, oracle: &MatchingList, k: usize, prime: u64) -> Result<Self, StrategyError> {
        let (first_pair, last_pair) = pair_range(index);
        let mut tracker = PartitionTracker {
            index,
            first_pair,
            last_pair,
            declared_count: 0,
            mode: TrackerMode::Explicit(BTreeSet::new()),
        };
        let size = tracker.size();
        tracker.mode = if size <= k as u64 {
            TrackerMode::Explicit(tracker.members(oracle).collect())
        } else {
            let params = SketchParams::new(oracle.n(), size as usize, k, prime)?;
            TrackerMode::Sketched {
                offline: PowerSumSketch::offline(params, tracker.members(oracle))?,
                online: PowerSumSketch::empty(params),
            }
        };
        Ok(tracker)
    }

    pub fn index(&self) -> u32 {
        self.index
    }

    /// Number of members, `2 * (pairs covered)`.
    pub fn size(&self) -> u64 {
        2 * (self.last_pair - self.first_pair + 1)
    }

    pub fn declared_count(&self) -> u64 {
        self.declared_count
    }

    pub fn undeclared_count(&self) -> u64 {
        self.size() - self.declared_count
    }

    pub fn is_exhausted(&self) -> bool {
        self.declared_count == self.size()
    }

    pub fn mode(&self) -> &TrackerMode {
        &self.mode
    }

    /// The undeclared members, when they are listed explicitly.
    pub fn undeclared(&self) -> Option<&BTreeSet<u64>> {
        match &self.mode {
            TrackerMode::Explicit(set) => Some(set),
            TrackerMode::Sketched { .. } => None,
        }
    }

    /// Members of the partition, read from the oracle.
    pub fn members<'a>(&self, oracle: &'a MatchingList) -> impl Iterator<Item = u64> + 'a {
        oracle.pairs()[self.first_pair as usize - 1..self.last_pair as usize]
            .iter()
            .flat_map(|&(a, b)| [a, b])
    }

    fn absorb(&mut self, x: u64, oracle: &MatchingList, k: usize) -> Result<(), StrategyError> {
        match &mut self.mode {
            TrackerMode::Explicit(set) => {
                if !set.remove(&x) {
                    return Err(StrategyError::ProtocolError(format!("{x} was already declared")));
                }
            }
            TrackerMode::Sketched { online, .. } => online.update(x)?,
        }
        self.declared_count += 1;
        if self.undeclared_count() <= k as u64 {
            self.make_explicit(oracle)?;
        }
        Ok(())
    }

    fn make_explicit(&mut self, oracle: &MatchingList) -> Result<(), StrategyError> {
        if let TrackerMode::Sketched { offline, online } = &self.mode {
            let missing = recover_newton(offline, online, self.members(oracle))?;
            self.mode = TrackerMode::Explicit(missing);
        }
        Ok(())
    }

    fn metered_bits(&self, n: u64) -> u64 {
        match &self.mode {
            TrackerMode::Explicit(set) => (set.len() as u64 + 1) * number_bits(n),
            TrackerMode::Sketched { offline, online } => offline.metered_bits() + online.metered_bits(),
        }
    }
}

/// Alice's reply to a Bob declaration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AliceMove {
    Declare(u64),
    /// The smallest non-exhausted partition still had more than `k`
    /// undeclared numbers.
    Abort { partition: u32, undeclared: u64 },
}

/// Alice's partition strategy in the random list model.
///
/// She mirrors Bob under the oracle matching. When Bob declares the partner
/// of her open generated number she generates the smallest undeclared number
/// of the first non-exhausted partition, provided that partition is explicit,
/// and aborts otherwise.
#[derive(Debug, Clone)]
pub struct AliceState {
    oracle: Arc<MatchingList>,
    n: u64,
    log_n: u32,
    k: usize,
    trackers: Vec<PartitionTracker>,
    // (generated number, its partner)
    open_g: Option<(u64, u64)>,
    aborted: bool,
    peak_bits: u64,
}

impl AliceState {
    /// Builds the trackers and returns the opening declaration, the smaller
    /// element of `M_1`.
    pub fn init(oracle: Arc<MatchingList>, c: f64) -> Result<(Self, u64), StrategyError> {
        let n = oracle.n();
        if n < 2 || !n.is_power_of_two() {
            return Err(StrategyError::InvalidConfig(format!("N = {n} must be a power of two and at least 2")));
        }
        if !(c > 0.0) || !c.is_finite() {
            return Err(StrategyError::InvalidConfig(format!("c must be positive, got {c}")));
        }
        let log_n = n.trailing_zeros();
        let k = budget(n, c);
        let prime = select_prime(n);
        let trackers = (1..=log_n)
            .map(|i| PartitionTracker::build(i, &oracle, k, prime))
            .collect::<Result<Vec<_>, _>>()?;
        let mut state = AliceState { oracle, n, log_n, k, trackers, open_g: None, aborted: false, peak_bits: 0 };
        let (g, partner) = state.oracle.query_pair(1)?;
        state.absorb(g)?;
        state.open_g = Some((g, partner));
        state.update_peak();
        Ok((state, g))
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn log_n(&self) -> u32 {
        self.log_n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn trackers(&self) -> &[PartitionTracker] {
        &self.trackers
    }

    pub fn open_generated(&self) -> Option<u64> {
        self.open_g.map(|(g, _)| g)
    }

    pub fn is_aborted(&self) -> bool {
        self.aborted
    }

    pub fn oracle(&self) -> &MatchingList {
        &self.oracle
    }

    /// Responds to Bob declaring `bob_number`.
    pub fn respond(&mut self, bob_number: u64) -> Result<AliceMove, StrategyError> {
        if self.aborted {
            return Err(StrategyError::ProtocolError("Alice has already aborted".into()));
        }
        let max = 2 * self.n;
        if bob_number < 1 || bob_number > max {
            return Err(StrategyError::OutOfRange { x: bob_number, max });
        }
        self.absorb(bob_number)?;

        let (_, open_partner) = self
            .open_g
            .ok_or_else(|| StrategyError::ProtocolError("no open generated number".into()))?;
        let reply = if bob_number != open_partner {
            let reply = self.oracle.query_partner(bob_number)?;
            self.absorb(reply)?;
            AliceMove::Declare(reply)
        } else {
            self.open_g = None;
            self.generate()?
        };
        self.update_peak();
        Ok(reply)
    }

    fn generate(&mut self) -> Result<AliceMove, StrategyError> {
        let tracker = self
            .trackers
            .iter()
            .find(|t| !t.is_exhausted())
            .ok_or_else(|| StrategyError::ProtocolError("every number is already declared".into()))?;
        let Some(&g) = tracker.undeclared().and_then(|set| set.first()) else {
            self.aborted = true;
            return Ok(AliceMove::Abort { partition: tracker.index, undeclared: tracker.undeclared_count() });
        };
        self.absorb(g)?;
        self.open_g = Some((g, self.oracle.query_partner(g)?));
        Ok(AliceMove::Declare(g))
    }

    fn absorb(&mut self, x: u64) -> Result<(), StrategyError> {
        let i = partition_of(self.oracle.locate(x)?);
        let k = self.k;
        self.trackers[i as usize - 1].absorb(x, &self.oracle, k)
    }

    /// Current metered size of Alice's state.
    pub fn metered_bits(&self) -> u64 {
        let open = if self.open_g.is_some() { 2 * number_bits(self.n) } else { 0 };
        let trackers: u64 = self.trackers.iter().map(|t| t.metered_bits(self.n)).sum();
        trackers + open + 1
    }

    /// Largest metered size seen after any move so far.
    pub fn peak_bits(&self) -> u64 {
        self.peak_bits
    }

    fn update_peak(&mut self) {
        self.peak_bits = self.peak_bits.max(self.metered_bits());
    }
}
