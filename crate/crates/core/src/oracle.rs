//! The auxiliary matching, held outside the players' metered memory.
//!
//! A [`MatchingList`] is the random list model: an ordered list of `N`
//! unordered pairs covering `[1, 2N]`. Whole-pair queries (`query_pair`)
//! are the native interface; partner queries (`query_partner`) simulate the
//! weaker random matching model. The list also answers `locate`, used by
//! Alice to map numbers onto her partitions.
//!
//! Lookups go through an internal position index. That index is part of the
//! read-only oracle, so it costs the players nothing; [`MatchingList::scan_partner`]
//! and [`MatchingList::scan_locate`] implement the literal pair-by-pair scan
//! and are checked against the indexed answers.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("query {x} outside [1, {max}]")]
    OutOfRange { x: u64, max: u64 },
    #[error("random string never produces the number {missing}")]
    IncompleteCoverage { missing: u64 },
    #[error("random string of {len} bits is shorter than one {width}-bit word")]
    StringTooShort { len: usize, width: u32 },
    #[error("pairs do not partition [1, {max}]: {reason}")]
    NotAPartition { max: u64, reason: String },
    #[error("malformed list file line {line}: {reason}")]
    Parse { line: usize, reason: String },
}

/// Ordered list of matched pairs `(M_1, ..., M_N)`, each stored smaller-first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MatchingList {
    pairs: Vec<(u64, u64)>,
    // position[x] = 1-based index of the pair containing x; position[0] unused.
    position: Vec<u32>,
}

impl MatchingList {
    /// Builds a list from explicit pairs, canonicalizing each pair.
    pub fn from_pairs(pairs: Vec<(u64, u64)>) -> Result<Self, OracleError> {
        let n = pairs.len() as u64;
        let max = 2 * n;
        if n == 0 {
            return Err(OracleError::InvalidConfig("a matching needs at least one pair".into()));
        }
        let mut position = vec![0u32; max as usize + 1];
        let mut canonical = Vec::with_capacity(pairs.len());
        for (idx, &(a, b)) in pairs.iter().enumerate() {
            for x in [a, b] {
                if x < 1 || x > max {
                    return Err(OracleError::NotAPartition { max, reason: format!("{x} out of range") });
                }
                if position[x as usize] != 0 {
                    return Err(OracleError::NotAPartition { max, reason: format!("{x} appears twice") });
                }
                position[x as usize] = idx as u32 + 1;
            }
            if a == b {
                return Err(OracleError::NotAPartition { max, reason: format!("{a} paired with itself") });
            }
            canonical.push((a.min(b), a.max(b)));
        }
        Ok(MatchingList { pairs: canonical, position })
    }

    /// Uniformly random ordered list of unordered pairs.
    ///
    /// A uniform permutation of `[1, 2N]` read off two at a time hits every
    /// ordered list of unordered pairs exactly `2^N` times.
    pub fn generate<R: Rng + ?Sized>(n: u64, rng: &mut R) -> Result<Self, OracleError> {
        if n < 1 {
            return Err(OracleError::InvalidConfig("N must be at least 1".into()));
        }
        let mut numbers: Vec<u64> = (1..=2 * n).collect();
        numbers.shuffle(rng);
        let pairs = numbers.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        Self::from_pairs(pairs)
    }

    /// The fixed matching `M_i = (i, 2N + 1 - i)`.
    pub fn mirror(n: u64) -> Result<Self, OracleError> {
        if n < 1 {
            return Err(OracleError::InvalidConfig("N must be at least 1".into()));
        }
        Self::from_pairs((1..=n).map(|i| (i, 2 * n + 1 - i)).collect())
    }

    pub fn n(&self) -> u64 {
        self.pairs.len() as u64
    }

    pub fn pairs(&self) -> &[(u64, u64)] {
        &self.pairs
    }

    /// Pair `M_q` for `q` in `[1, N]`.
    pub fn query_pair(&self, q: u64) -> Result<(u64, u64), OracleError> {
        if q < 1 || q > self.n() {
            return Err(OracleError::OutOfRange { x: q, max: self.n() });
        }
        Ok(self.pairs[q as usize - 1])
    }

    /// The partner `M(x)`.
    pub fn query_partner(&self, x: u64) -> Result<u64, OracleError> {
        let (a, b) = self.query_pair(self.locate(x)?)?;
        Ok(if a == x { b } else { a })
    }

    /// Index `q` of the pair containing `x`.
    pub fn locate(&self, x: u64) -> Result<u64, OracleError> {
        self.check_number(x)?;
        Ok(self.position[x as usize] as u64)
    }

    /// Partner lookup by querying pairs one at a time until `x` shows up.
    pub fn scan_partner(&self, x: u64) -> Result<u64, OracleError> {
        let q = self.scan_locate(x)?;
        let (a, b) = self.query_pair(q)?;
        Ok(if a == x { b } else { a })
    }

    /// Pair index lookup by linear scan of the list.
    pub fn scan_locate(&self, x: u64) -> Result<u64, OracleError> {
        self.check_number(x)?;
        (1..=self.n())
            .find(|&q| {
                let (a, b) = self.pairs[q as usize - 1];
                a == x || b == x
            })
            .ok_or(OracleError::OutOfRange { x, max: 2 * self.n() })
    }

    fn check_number(&self, x: u64) -> Result<(), OracleError> {
        let max = 2 * self.n();
        if x < 1 || x > max {
            return Err(OracleError::OutOfRange { x, max });
        }
        Ok(())
    }

    /// `N` lines, line `q` holding `"a b"` with `a < b`.
    pub fn to_list_file(&self) -> String {
        let mut out = String::with_capacity(self.pairs.len() * 10);
        for (a, b) in &self.pairs {
            let _ = writeln!(out, "{a} {b}");
        }
        out
    }

    pub fn parse_list_file(text: &str) -> Result<Self, OracleError> {
        let mut pairs = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let err = |reason: &str| OracleError::Parse { line: idx + 1, reason: reason.to_string() };
            let nums: Vec<u64> = line
                .split_whitespace()
                .map(|t| t.parse::<u64>().map_err(|_| err("expected decimal numbers")))
                .collect::<Result<_, _>>()?;
            match nums.as_slice() {
                [a, b] => pairs.push((*a, *b)),
                _ => return Err(err("expected exactly two numbers")),
            }
        }
        Self::from_pairs(pairs)
    }
}

/// Bits written into auxiliary memory before the game, most significant bit
/// of each byte first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomBitString {
    bytes: Vec<u8>,
    len: usize,
}

impl RandomBitString {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let len = bytes.len() * 8;
        RandomBitString { bytes, len }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut bytes = vec![0u8; bits.len().div_ceil(8)];
        for (i, &bit) in bits.iter().enumerate() {
            if bit {
                bytes[i / 8] |= 0x80 >> (i % 8);
            }
        }
        RandomBitString { bytes, len: bits.len() }
    }

    /// Parses a string of `0`/`1` characters; whitespace is ignored.
    pub fn parse_binary(text: &str) -> Option<Self> {
        let bits: Option<Vec<bool>> = text
            .chars()
            .filter(|c| !c.is_whitespace())
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect();
        bits.map(|b| Self::from_bits(&b))
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut bytes = vec![0u8; len.div_ceil(8)];
        rng.fill(bytes.as_mut_slice());
        if len % 8 != 0 {
            let last = bytes.len() - 1;
            bytes[last] &= 0xFFu8 << (8 - len % 8);
        }
        RandomBitString { bytes, len }
    }

    /// `ceil(c * N * (log2 N)^2)` bits, with `log2 N` taken as at least 1.
    pub fn recommended_len(n: u64, c: f64) -> usize {
        let log = (n as f64).log2().max(1.0);
        (c * n as f64 * log * log).ceil() as usize
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn bit(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        self.bytes[i / 8] & (0x80 >> (i % 8)) != 0
    }

    /// Big-endian value of the `index`-th `width`-bit word.
    fn word(&self, index: usize, width: u32) -> u64 {
        let start = index * width as usize;
        (start..start + width as usize).fold(0u64, |acc, i| (acc << 1) | self.bit(i) as u64)
    }
}

/// Word width `1 + log2 N` for power-of-two `N`.
fn word_width(n: u64) -> Result<u32, OracleError> {
    if n < 1 || !n.is_power_of_two() {
        return Err(OracleError::InvalidConfig(format!("N = {n} must be a power of two")));
    }
    Ok(1 + n.trailing_zeros())
}

/// Reads the string as `(1 + log2 N)`-bit words, maps word `w` to number
/// `w + 1`, orders `[1, 2N]` by first appearance and pairs consecutive
/// positions. Trailing bits that do not fill a word are ignored.
pub fn decode_random_string(s: &RandomBitString, n: u64) -> Result<MatchingList, OracleError> {
    let width = word_width(n)?;
    let words = s.len() / width as usize;
    if words == 0 {
        return Err(OracleError::StringTooShort { len: s.len(), width });
    }
    let max = 2 * n;
    let mut seen = vec![false; max as usize + 1];
    let mut order = Vec::with_capacity(max as usize);
    for w in 0..words {
        let x = s.word(w, width) + 1;
        if !seen[x as usize] {
            seen[x as usize] = true;
            order.push(x);
            if order.len() as u64 == max {
                break;
            }
        }
    }
    if let Some(missing) = (1..=max).find(|&x| !seen[x as usize]) {
        return Err(OracleError::IncompleteCoverage { missing });
    }
    MatchingList::from_pairs(order.chunks_exact(2).map(|c| (c[0], c[1])).collect())
}

/// Answers list queries straight from the random string with `O(log N)`
/// working state, by rescanning the string for every question.
#[derive(Debug, Clone, Copy)]
pub struct StreamingDecoder<'a> {
    bits: &'a RandomBitString,
    n: u64,
    width: u32,
    words: usize,
}

impl<'a> StreamingDecoder<'a> {
    pub fn new(bits: &'a RandomBitString, n: u64) -> Result<Self, OracleError> {
        let width = word_width(n)?;
        let words = bits.len() / width as usize;
        if words == 0 {
            return Err(OracleError::StringTooShort { len: bits.len(), width });
        }
        Ok(StreamingDecoder { bits, n, width, words })
    }

    fn is_first_appearance(&self, w: usize) -> bool {
        let value = self.bits.word(w, self.width);
        (0..w).all(|earlier| self.bits.word(earlier, self.width) != value)
    }

    /// The `j`-th number (1-based) in first-appearance order.
    pub fn nth(&self, j: u64) -> Result<u64, OracleError> {
        let max = 2 * self.n;
        if j < 1 || j > max {
            return Err(OracleError::OutOfRange { x: j, max });
        }
        let mut found = 0u64;
        for w in 0..self.words {
            if self.is_first_appearance(w) {
                found += 1;
                if found == j {
                    return Ok(self.bits.word(w, self.width) + 1);
                }
            }
        }
        // Fewer than j distinct values: report the smallest number never seen.
        let missing = (1..=max)
            .find(|&x| (0..self.words).all(|w| self.bits.word(w, self.width) + 1 != x))
            .unwrap_or(max);
        Err(OracleError::IncompleteCoverage { missing })
    }

    /// Pair `M_q`, smaller element first.
    pub fn query_pair(&self, q: u64) -> Result<(u64, u64), OracleError> {
        if q < 1 || q > self.n {
            return Err(OracleError::OutOfRange { x: q, max: self.n });
        }
        let a = self.nth(2 * q - 1)?;
        let b = self.nth(2 * q)?;
        Ok((a.min(b), a.max(b)))
    }
}
