//! Exact streaming recovery of a small set of missing numbers.
//!
//! Given an offline set `S` of `s` numbers from `[1, 2N]` and a one-pass
//! stream of a subset `S'` missing at most `k` of them, the difference
//! `S \ S'` is determined by the first `k` power sums of both sets modulo a
//! prime `2N < p < 4N`. A sketch holds those `k` residues plus an element
//! count, i.e. `O(k log N)` bits.
//!
//! Two decoders are provided: [`recover_newton`] converts the power sums to
//! elementary symmetric polynomials and finds the roots among `S`;
//! [`recover_bruteforce`] tries every subset of the right size and is meant
//! as a test oracle for small `S`.

use std::collections::BTreeSet;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SketchError {
    #[error("invalid sketch parameters: {0}")]
    InvalidParams(String),
    #[error("value {y} outside [1, {max}]")]
    OutOfRange { y: u64, max: u64 },
    #[error("sketch already holds all {s} elements")]
    CapacityExceeded { s: usize },
    #[error("sketches were built with different parameters")]
    ParamMismatch,
    #[error("cannot decode missing set: {0}")]
    DecodeFailure(String),
}

/// Smallest prime strictly greater than `2N`; it is below `4N` for every
/// `N >= 1` by Bertrand's postulate.
pub fn select_prime(n: u64) -> u64 {
    assert!(n >= 1, "select_prime needs N >= 1");
    (2 * n + 1..).find(|&c| is_prime(c)).expect("unbounded search")
}

pub fn is_prime(x: u64) -> bool {
    if x < 2 {
        return false;
    }
    if x % 2 == 0 {
        return x == 2;
    }
    let mut d = 3;
    while d * d <= x {
        if x % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// `ceil(log2(x + 1))`: bits needed to hold any value in `[0, x]`.
pub fn bits_for(x: u64) -> u64 {
    (u64::BITS - x.leading_zeros()) as u64
}

/// Arithmetic modulo a small prime. All values stay below `p < 2^32`, so
/// products fit in `u64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Field {
    p: u64,
}

impl Field {
    fn add(self, a: u64, b: u64) -> u64 {
        (a + b) % self.p
    }

    fn sub(self, a: u64, b: u64) -> u64 {
        (a + self.p - b) % self.p
    }

    fn mul(self, a: u64, b: u64) -> u64 {
        a * b % self.p
    }

    fn pow(self, mut base: u64, mut exp: u64) -> u64 {
        let mut acc = 1;
        base %= self.p;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    fn inv(self, a: u64) -> u64 {
        self.pow(a, self.p - 2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SketchParams {
    n: u64,
    s: usize,
    k: usize,
    p: u64,
}

impl SketchParams {
    /// Parameters with an explicit prime `p` in `(2N, 4N)`.
    ///
    /// Requires `1 <= k <= s <= 2N`; `k = s` is accepted so that a singleton
    /// offline set can be sketched.
    pub fn new(n: u64, s: usize, k: usize, p: u64) -> Result<Self, SketchError> {
        if n < 1 {
            return Err(SketchError::InvalidParams("N must be at least 1".into()));
        }
        if k < 1 || k > s || s as u64 > 2 * n {
            return Err(SketchError::InvalidParams(format!(
                "need 1 <= k <= s <= 2N, got k = {k}, s = {s}, N = {n}"
            )));
        }
        if !(2 * n < p && p < 4 * n) || !is_prime(p) {
            return Err(SketchError::InvalidParams(format!("{p} is not a prime in ({}, {})", 2 * n, 4 * n)));
        }
        Ok(SketchParams { n, s, k, p })
    }

    /// Parameters using [`select_prime`].
    pub fn with_default_prime(n: u64, s: usize, k: usize) -> Result<Self, SketchError> {
        if n < 1 {
            return Err(SketchError::InvalidParams("N must be at least 1".into()));
        }
        Self::new(n, s, k, select_prime(n))
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn s(&self) -> usize {
        self.s
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    fn field(&self) -> Field {
        Field { p: self.p }
    }
}

/// `k` running power sums modulo `p` plus the number of absorbed elements.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PowerSumSketch {
    params: SketchParams,
    // sums[i - 1] = sum of x^i mod p
    sums: Vec<u64>,
    count: usize,
}

impl PowerSumSketch {
    /// Empty sketch, ready to absorb the online stream.
    pub fn empty(params: SketchParams) -> Self {
        PowerSumSketch { params, sums: vec![0; params.k], count: 0 }
    }

    /// Sketch of the full offline set `S`.
    pub fn offline<I>(params: SketchParams, set: I) -> Result<Self, SketchError>
    where
        I: IntoIterator<Item = u64>,
    {
        let mut sketch = Self::empty(params);
        let mut seen = BTreeSet::new();
        for x in set {
            if !seen.insert(x) {
                return Err(SketchError::InvalidParams(format!("offline set repeats {x}")));
            }
            sketch.update(x)?;
        }
        if sketch.count != params.s {
            return Err(SketchError::InvalidParams(format!(
                "offline set has {} elements, expected s = {}",
                sketch.count, params.s
            )));
        }
        Ok(sketch)
    }

    /// Absorbs one streamed value: `k` multiplications with a running power.
    pub fn update(&mut self, y: u64) -> Result<(), SketchError> {
        let max = 2 * self.params.n;
        if y < 1 || y > max {
            return Err(SketchError::OutOfRange { y, max });
        }
        if self.count >= self.params.s {
            return Err(SketchError::CapacityExceeded { s: self.params.s });
        }
        let f = self.params.field();
        let mut power = 1;
        for sum in self.sums.iter_mut() {
            power = f.mul(power, y);
            *sum = f.add(*sum, power);
        }
        self.count += 1;
        Ok(())
    }

    pub fn params(&self) -> &SketchParams {
        &self.params
    }

    pub fn sums(&self) -> &[u64] {
        &self.sums
    }

    pub fn count(&self) -> usize {
        self.count
    }

    /// Stored size: `k` residues of `ceil(log2 p)` bits and one counter of
    /// `ceil(log2(2N + 1))` bits.
    pub fn metered_bits(&self) -> u64 {
        let residue_bits = bits_for(self.params.p - 1);
        let counter_bits = bits_for(2 * self.params.n);
        self.params.k as u64 * residue_bits + counter_bits
    }

    /// Power sums of the missing part, `S_i - S'_i` for `i = 1..=k'`.
    fn difference(&self, online: &PowerSumSketch) -> Result<Vec<u64>, SketchError> {
        if self.params != online.params {
            return Err(SketchError::ParamMismatch);
        }
        if online.count > self.count {
            return Err(SketchError::DecodeFailure(format!(
                "online stream has {} elements but the offline set only {}",
                online.count, self.count
            )));
        }
        let missing = self.count - online.count;
        if missing > self.params.k {
            return Err(SketchError::DecodeFailure(format!(
                "{missing} missing exceeds budget k = {}",
                self.params.k
            )));
        }
        let f = self.params.field();
        Ok((0..missing).map(|i| f.sub(self.sums[i], online.sums[i])).collect())
    }
}

/// Elementary symmetric polynomials `e_1..e_m` from power sums `p_1..p_m`
/// by Newton's identities: `j e_j = sum_{i=1..j} (-1)^(i-1) e_(j-i) p_i`.
fn elementary_from_power_sums(f: Field, power_sums: &[u64]) -> Vec<u64> {
    let m = power_sums.len();
    let mut e = Vec::with_capacity(m + 1);
    e.push(1u64);
    for j in 1..=m {
        let mut acc = 0;
        for i in 1..=j {
            let term = f.mul(e[j - i], power_sums[i - 1]);
            acc = if i % 2 == 1 { f.add(acc, term) } else { f.sub(acc, term) };
        }
        e.push(f.mul(acc, f.inv(j as u64 % f.p)));
    }
    e
}

/// Decodes `S \ S'` from the two sketches by root finding over `S`.
pub fn recover_newton<I>(
    offline: &PowerSumSketch,
    online: &PowerSumSketch,
    set: I,
) -> Result<BTreeSet<u64>, SketchError>
where
    I: IntoIterator<Item = u64>,
{
    let diffs = offline.difference(online)?;
    let m = diffs.len();
    if m == 0 {
        return Ok(BTreeSet::new());
    }
    let f = offline.params.field();
    let e = elementary_from_power_sums(f, &diffs);
    // x^m - e_1 x^(m-1) + e_2 x^(m-2) - ..., highest degree first.
    let coeffs: Vec<u64> = e
        .iter()
        .enumerate()
        .map(|(j, &ej)| if j % 2 == 0 { ej } else { f.sub(0, ej) })
        .collect();
    let mut roots = BTreeSet::new();
    for x in set {
        let xm = x % f.p;
        let value = coeffs.iter().fold(0, |acc, &c| f.add(f.mul(acc, xm), c));
        if value == 0 {
            roots.insert(x);
        }
    }
    if roots.len() != m {
        return Err(SketchError::DecodeFailure(format!(
            "found {} roots in the offline set, expected {m}",
            roots.len()
        )));
    }
    Ok(roots)
}

/// Decodes `S \ S'` by trying every subset of `S` of the missing size.
///
/// Exponential in the number missing; fails unless exactly one subset
/// matches the power-sum differences.
pub fn recover_bruteforce<I>(
    offline: &PowerSumSketch,
    online: &PowerSumSketch,
    set: I,
) -> Result<BTreeSet<u64>, SketchError>
where
    I: IntoIterator<Item = u64>,
{
    let diffs = offline.difference(online)?;
    let m = diffs.len();
    let f = offline.params.field();
    let elements: Vec<u64> = set.into_iter().collect();
    let mut found: Option<Vec<u64>> = None;
    let mut chosen = Vec::with_capacity(m);
    let mut ambiguous = false;
    search(&elements, 0, m, &mut chosen, &mut |subset| {
        let matches = (1..=m as u64).all(|i| {
            let sum = subset.iter().fold(0, |acc, &z| f.add(acc, f.pow(z, i)));
            sum == diffs[i as usize - 1]
        });
        if matches {
            if found.is_some() {
                ambiguous = true;
            } else {
                found = Some(subset.to_vec());
            }
        }
    });
    match (found, ambiguous) {
        (Some(subset), false) => Ok(subset.into_iter().collect()),
        (Some(_), true) => Err(SketchError::DecodeFailure("more than one subset matches".into())),
        (None, _) => Err(SketchError::DecodeFailure("no subset matches the power sums".into())),
    }
}

fn search(
    elements: &[u64],
    start: usize,
    remaining: usize,
    chosen: &mut Vec<u64>,
    visit: &mut dyn FnMut(&[u64]),
) {
    if remaining == 0 {
        visit(chosen);
        return;
    }
    for i in start..elements.len() {
        if elements.len() - i < remaining {
            break;
        }
        chosen.push(elements[i]);
        search(elements, i + 1, remaining - 1, chosen, visit);
        chosen.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trial_division_prime_between(lo: u64, hi: u64) -> u64 {
        (lo + 1..hi).find(|&c| c >= 2 && (2..c).all(|d| c % d != 0)).unwrap()
    }

    #[test]
    fn prime_selection() {
        assert_eq!(select_prime(1), 3);
        assert_eq!(select_prime(2), 5);
        assert_eq!(select_prime(16), 37);
        for n in 1..300 {
            let p = select_prime(n);
            assert_eq!(p, trial_division_prime_between(2 * n, 4 * n));
            assert!(2 * n < p && p < 4 * n);
        }
    }

    #[test]
    fn offline_sums_examples() {
        let params = SketchParams::new(2, 4, 2, 5).unwrap();
        let s = PowerSumSketch::offline(params, [1, 2, 3, 4]).unwrap();
        assert_eq!(s.sums(), &[0, 0]);
        assert_eq!(s.count(), 4);

        let params = SketchParams::new(8, 1, 1, 17).unwrap();
        assert_eq!(PowerSumSketch::offline(params, [7]).unwrap().sums(), &[7]);
    }

    #[test]
    fn invalid_params() {
        // Empty offline set: s = 0 cannot exceed k >= 1.
        assert!(matches!(SketchParams::new(2, 0, 1, 5), Err(SketchError::InvalidParams(_))));
        assert!(SketchParams::new(2, 4, 0, 5).is_err());
        assert!(SketchParams::new(2, 5, 2, 5).is_err());
        assert!(SketchParams::new(2, 4, 2, 4).is_err());
        assert!(SketchParams::new(2, 4, 2, 11).is_err());
        let params = SketchParams::new(2, 4, 2, 5).unwrap();
        assert!(PowerSumSketch::offline(params, [1, 2, 3]).is_err());
        assert!(PowerSumSketch::offline(params, [1, 2, 3, 3]).is_err());
    }

    #[test]
    fn stream_updates() {
        let params = SketchParams::new(2, 4, 2, 5).unwrap();
        let mut s = PowerSumSketch::empty(params);
        s.update(3).unwrap();
        assert_eq!(s.sums(), &[3, 4]);
        s.update(1).unwrap();
        assert_eq!(s.sums(), &[4, 0]);

        let mut t = PowerSumSketch::empty(params);
        t.update(1).unwrap();
        t.update(3).unwrap();
        assert_eq!(s, t);

        assert_eq!(t.update(0), Err(SketchError::OutOfRange { y: 0, max: 4 }));
        assert_eq!(t.update(5), Err(SketchError::OutOfRange { y: 5, max: 4 }));
        t.update(2).unwrap();
        t.update(4).unwrap();
        assert_eq!(t.update(4), Err(SketchError::CapacityExceeded { s: 4 }));
    }

    #[test]
    fn newton_worked_example() {
        let f = Field { p: 7 };
        // p_1 = 2 + 4, p_2 = 4 + 16 (mod 7)
        let e = elementary_from_power_sums(f, &[6, 6]);
        assert_eq!(e, vec![1, 6, 1]);

        let params = SketchParams::new(2, 4, 2, 7).unwrap();
        let off = PowerSumSketch::offline(params, [1, 2, 3, 4]).unwrap();
        let mut on = PowerSumSketch::empty(params);
        on.update(1).unwrap();
        on.update(3).unwrap();
        let want: BTreeSet<u64> = [2, 4].into();
        assert_eq!(recover_newton(&off, &on, [1, 2, 3, 4]).unwrap(), want);
        assert_eq!(recover_bruteforce(&off, &on, [1, 2, 3, 4]).unwrap(), want);
    }

    #[test]
    fn nothing_missing() {
        let params = SketchParams::new(2, 4, 2, 7).unwrap();
        let off = PowerSumSketch::offline(params, [1, 2, 3, 4]).unwrap();
        let on = PowerSumSketch::offline(params, [4, 3, 2, 1]).unwrap();
        assert!(recover_newton(&off, &on, [1, 2, 3, 4]).unwrap().is_empty());
        assert!(recover_bruteforce(&off, &on, [1, 2, 3, 4]).unwrap().is_empty());
    }

    #[test]
    fn stream_outside_offline_set_fails() {
        // S = {1,2,3,4} inside [1, 8]; the stream carries 5, which is not in S.
        let params = SketchParams::with_default_prime(4, 4, 2).unwrap();
        let off = PowerSumSketch::offline(params, [1, 2, 3, 4]).unwrap();
        let mut on = PowerSumSketch::empty(params);
        on.update(1).unwrap();
        on.update(5).unwrap();
        assert!(matches!(recover_bruteforce(&off, &on, [1, 2, 3, 4]), Err(SketchError::DecodeFailure(_))));
        assert!(matches!(recover_newton(&off, &on, [1, 2, 3, 4]), Err(SketchError::DecodeFailure(_))));
    }

    #[test]
    fn single_missing_reads_first_sum() {
        let params = SketchParams::with_default_prime(8, 6, 3).unwrap();
        let set = [2, 5, 9, 11, 14, 16];
        let off = PowerSumSketch::offline(params, set).unwrap();
        for &gone in &set {
            let mut on = PowerSumSketch::empty(params);
            for &y in set.iter().filter(|&&y| y != gone) {
                on.update(y).unwrap();
            }
            let first = (off.sums()[0] + params.p() - on.sums()[0]) % params.p();
            assert_eq!(first, gone);
            assert_eq!(recover_bruteforce(&off, &on, set).unwrap(), [gone].into());
            assert_eq!(recover_newton(&off, &on, set).unwrap(), [gone].into());
        }
    }

    #[test]
    fn budget_exceeded() {
        let params = SketchParams::with_default_prime(4, 6, 2).unwrap();
        let off = PowerSumSketch::offline(params, [1, 2, 3, 4, 5, 6]).unwrap();
        let mut on = PowerSumSketch::empty(params);
        on.update(1).unwrap();
        assert!(matches!(recover_newton(&off, &on, 1..=6), Err(SketchError::DecodeFailure(_))));
    }

    #[test]
    fn mismatched_params() {
        let a = SketchParams::new(4, 4, 2, 11).unwrap();
        let b = SketchParams::new(4, 4, 2, 13).unwrap();
        let off = PowerSumSketch::offline(a, [1, 2, 3, 4]).unwrap();
        let on = PowerSumSketch::empty(b);
        assert_eq!(recover_newton(&off, &on, [1, 2, 3, 4]), Err(SketchError::ParamMismatch));
    }

    #[test]
    fn metered_size() {
        // N = 1024: p = 2053 -> 12-bit residues, 12-bit counter.
        let params = SketchParams::with_default_prime(1024, 512, 20).unwrap();
        assert_eq!(params.p(), 2053);
        let s = PowerSumSketch::empty(params);
        assert_eq!(s.metered_bits(), 20 * 12 + 12);
        for n in [2u64, 7, 64, 1000, 1 << 14] {
            let k = 5;
            let params = SketchParams::with_default_prime(n, (2 * n) as usize, k.min(2 * n as usize)).unwrap();
            let log_n = bits_for(n) - 1 + u64::from(!n.is_power_of_two());
            let bound = params.k() as u64 * (log_n + 2) + bits_for(2 * n);
            assert!(PowerSumSketch::empty(params).metered_bits() <= bound);
        }
    }

    #[test]
    fn bits_for_values() {
        assert_eq!(bits_for(8), 4);
        assert_eq!(bits_for(2048), 12);
        assert_eq!(bits_for(2049), 12);
        assert_eq!(bits_for(0), 0);
        assert_eq!(bits_for(1), 1);
    }
}
