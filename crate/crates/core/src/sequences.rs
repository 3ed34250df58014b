//! The `S_k` and `R_i` integer/interval sequence families.
//!
//! `S_0 = <1>`, `S_k = S_{k-1} || S_{k-1} || <2^k>`. The infinite sequence
//! `S_inf` has every `S_k` as a prefix; realized interval sequences `S_k(t)`
//! tile `[t, t + (k+1)*2^k]` with consecutive intervals whose lengths follow
//! `S_k`. `R_0 = <1>`, `R_i = R_{i-1} || R_{i-1} || phi_i` with
//! `phi_i = <2^{2^{i-1}}, ..., 2^{2^i - 1}>`; `R_inf` elements act as weight
//! thresholds for unit time slots.
//!
//! Everything here is computed by recursive descent on the sequence
//! structure; prefixes are never materialized unless a caller explicitly
//! asks for a realized sequence. Element values can exceed 64 bits (the
//! `phi_i` blocks square their range each level), so value accessors return
//! checked errors on overflow while exponent accessors stay exact.

use std::fmt;

use thiserror::Error;

/// Orders above this would overflow `u64` interval arithmetic.
const MAX_S_ORDER: u32 = 56;
/// `|R_57| > u64::MAX`, so positions beyond order 57 cannot be addressed.
const MAX_R_ORDER: u32 = 57;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SequenceError {
    #[error("sequence positions are 1-based; got 0")]
    InvalidIndex,
    #[error("order {0} exceeds the supported maximum {1}")]
    OrderTooLarge(u32, u32),
    #[error("expected k <= d, got k={k}, d={d}")]
    OrderMismatch { k: u32, d: u32 },
    #[error("value 2^{exponent} first appears in R_{min_order}, queried order {order}")]
    BelowMinOrder {
        exponent: u64,
        min_order: u32,
        order: u32,
    },
    #[error("value does not fit in 64 bits")]
    Overflow,
}

/// 1-based position into `S_inf` or `R_inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SIndex(u64);

impl SIndex {
    pub fn new(position: u64) -> Result<Self, SequenceError> {
        if position == 0 {
            Err(SequenceError::InvalidIndex)
        } else {
            Ok(SIndex(position))
        }
    }

    pub fn get(self) -> u64 {
        self.0
    }
}

/// Half-open-in-spirit time interval `[begin, end]` with integer endpoints;
/// two intervals overlap only if their interiors intersect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Interval {
    begin: u64,
    end: u64,
}

impl Interval {
    pub fn new(begin: u64, end: u64) -> Self {
        assert!(end > begin, "interval end must exceed begin");
        Interval { begin, end }
    }

    pub fn begin(&self) -> u64 {
        self.begin
    }

    pub fn end(&self) -> u64 {
        self.end
    }

    pub fn length(&self) -> u64 {
        self.end - self.begin
    }

    /// Interior intersection test, endpoints may touch.
    pub fn overlaps(&self, other: &Interval) -> bool {
        self.begin < other.end && other.begin < self.end
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.begin, self.end)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeqKind {
    S,
    R,
}

/// A realized `S_k(t)` (consecutive intervals) or `R_k` slot range from `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizedSequence {
    pub kind: SeqKind,
    pub order: u32,
    pub start: u64,
    pub intervals: Vec<Interval>,
}

impl RealizedSequence {
    pub fn begin(&self) -> u64 {
        self.start
    }

    pub fn end(&self) -> u64 {
        self.intervals.last().map(|iv| iv.end()).unwrap_or(self.start)
    }
}

/// `n_k = 2^{k+1} - 1`, the length of `S_k`.
pub fn s_len(k: u32) -> Result<u64, SequenceError> {
    if k > MAX_S_ORDER {
        return Err(SequenceError::OrderTooLarge(k, MAX_S_ORDER));
    }
    Ok((1u64 << (k + 1)) - 1)
}

/// Total length `(k+1) * 2^k` of the intervals in `S_k(t)`.
pub fn s_total_length(k: u32) -> Result<u64, SequenceError> {
    if k > MAX_S_ORDER {
        return Err(SequenceError::OrderTooLarge(k, MAX_S_ORDER));
    }
    (k as u64 + 1)
        .checked_mul(1u64 << k)
        .ok_or(SequenceError::Overflow)
}

fn s_order_containing(position: u64) -> u32 {
    let mut k = 0u32;
    while s_len(k).map(|n| n < position).unwrap_or(false) {
        k += 1;
    }
    k
}

/// `S_inf[i]`, computed in O(log i) by descent on `S_k = S_{k-1} || S_{k-1} || <2^k>`.
pub fn s_element(i: SIndex) -> Result<u64, SequenceError> {
    let mut pos = i.get();
    let mut k = s_order_containing(pos);
    if k > MAX_S_ORDER {
        return Err(SequenceError::OrderTooLarge(k, MAX_S_ORDER));
    }
    loop {
        if k == 0 {
            return Ok(1);
        }
        let n_prev = s_len(k - 1)?;
        if pos == 2 * n_prev + 1 {
            return Ok(1u64 << k);
        }
        if pos > n_prev {
            pos -= n_prev;
        }
        k -= 1;
    }
}

/// Prefix sum `gamma_i` of the first `i` entries of `S_inf`.
pub fn s_prefix_sum(i: SIndex) -> Result<u64, SequenceError> {
    fn psum(k: u32, pos: u64) -> Result<u64, SequenceError> {
        let n_k = s_len(k)?;
        if pos == n_k {
            return s_total_length(k);
        }
        debug_assert!(k > 0);
        let n_prev = s_len(k - 1)?;
        if pos <= n_prev {
            psum(k - 1, pos)
        } else {
            let first_half = s_total_length(k - 1)?;
            let rest = psum(k - 1, pos - n_prev)?;
            first_half.checked_add(rest).ok_or(SequenceError::Overflow)
        }
    }
    let pos = i.get();
    let k = s_order_containing(pos);
    if k > MAX_S_ORDER {
        return Err(SequenceError::OrderTooLarge(k, MAX_S_ORDER));
    }
    psum(k, pos)
}

/// Realize the `n_k` consecutive intervals of `S_k(t)`.
pub fn realize_s(k: u32, t: u64) -> Result<RealizedSequence, SequenceError> {
    if k > 26 {
        // n_26 is already 134M intervals; nothing at desk scale needs more.
        return Err(SequenceError::OrderTooLarge(k, 26));
    }
    let total = s_total_length(k)?;
    t.checked_add(total).ok_or(SequenceError::Overflow)?;
    let lengths = s_sequence(k)?;
    let mut intervals = Vec::with_capacity(lengths.len());
    let mut cursor = t;
    for len in lengths {
        let next = cursor + len;
        intervals.push(Interval::new(cursor, next));
        cursor = next;
    }
    Ok(RealizedSequence {
        kind: SeqKind::S,
        order: k,
        start: t,
        intervals,
    })
}

/// The integer sequence `S_k`, materialized.
pub fn s_sequence(k: u32) -> Result<Vec<u64>, SequenceError> {
    if k > 26 {
        return Err(SequenceError::OrderTooLarge(k, 26));
    }
    let mut seq = vec![1u64];
    for level in 1..=k {
        let mut next = Vec::with_capacity(2 * seq.len() + 1);
        next.extend_from_slice(&seq);
        next.extend_from_slice(&seq);
        next.push(1u64 << level);
        seq = next;
    }
    Ok(seq)
}

/// Number of `S_k` appearances in `S_d(t)`: `2^{d-k}`.
pub fn count_sk_in_sd(k: u32, d: u32) -> Result<u64, SequenceError> {
    if k > d {
        return Err(SequenceError::OrderMismatch { k, d });
    }
    if d > MAX_S_ORDER {
        return Err(SequenceError::OrderTooLarge(d, MAX_S_ORDER));
    }
    Ok(1u64 << (d - k))
}

/// Start times of every `S_k(t')` appearance inside `S_d(t)`, in time order.
pub fn s_appearance_starts(k: u32, d: u32, t: u64) -> Result<Vec<u64>, SequenceError> {
    if k > d {
        return Err(SequenceError::OrderMismatch { k, d });
    }
    let mut starts = Vec::with_capacity((1usize << (d - k)).min(1 << 20));
    fn walk(k: u32, d: u32, t: u64, out: &mut Vec<u64>) -> Result<(), SequenceError> {
        if k == d {
            out.push(t);
            return Ok(());
        }
        walk(k, d - 1, t, out)?;
        let second = t
            .checked_add(s_total_length(d - 1)?)
            .ok_or(SequenceError::Overflow)?;
        walk(k, d - 1, second, out)
    }
    walk(k, d, t, &mut starts)?;
    Ok(starts)
}

/// First interval of length `2^c` in `S_inf(t)`: the last interval of the
/// `S_c(t)` prefix, `[t + c*2^c, t + (c+1)*2^c]`.
fn first_of_class(t: u64, c: u32) -> Result<Interval, SequenceError> {
    let total = s_total_length(c)?;
    let end = t.checked_add(total).ok_or(SequenceError::Overflow)?;
    Ok(Interval::new(end - (1u64 << c), end))
}

/// Earliest interval of length exactly `2^c` in `S_k(t)` with begin >= `x`.
pub fn next_of_class_in_s(k: u32, t: u64, c: u32, x: u64) -> Result<Option<Interval>, SequenceError> {
    if c > k {
        return Ok(None);
    }
    if x <= t {
        return Ok(Some(first_of_class(t, c)?));
    }
    if c == k {
        let iv = first_of_class(t, c)?;
        return Ok(if iv.begin() >= x { Some(iv) } else { None });
    }
    let half = s_total_length(k - 1)?;
    let second_start = t.checked_add(half).ok_or(SequenceError::Overflow)?;
    if x < second_start {
        if let Some(iv) = next_of_class_in_s(k - 1, t, c, x)? {
            return Ok(Some(iv));
        }
    }
    next_of_class_in_s(k - 1, second_start, c, x)
}

/// Earliest interval of length exactly `2^c` in `S_inf(t)` with begin >= `x`.
/// Such an interval always exists; errors only on 64-bit exhaustion.
pub fn next_of_class_in_sinf(t: u64, c: u32, x: u64) -> Result<Interval, SequenceError> {
    if c > MAX_S_ORDER {
        return Err(SequenceError::OrderTooLarge(c, MAX_S_ORDER));
    }
    let first = first_of_class(t, c)?;
    if first.begin() >= x {
        return Ok(first);
    }
    // S_inf(t) = S_c(t) extended by second copies at each growing order.
    for k in (c + 1)..=MAX_S_ORDER {
        let second_start = t
            .checked_add(s_total_length(k - 1)?)
            .ok_or(SequenceError::Overflow)?;
        if let Some(iv) = next_of_class_in_s(k - 1, second_start, c, x)? {
            return Ok(iv);
        }
    }
    Err(SequenceError::Overflow)
}

/// `|R_i|`: 1 for i = 0, `(i+2) * 2^{i-1}` otherwise.
pub fn r_len(i: u32) -> Result<u64, SequenceError> {
    if i > MAX_R_ORDER {
        return Err(SequenceError::OrderTooLarge(i, MAX_R_ORDER));
    }
    if i == 0 {
        return Ok(1);
    }
    (i as u64 + 2)
        .checked_mul(1u64 << (i - 1))
        .ok_or(SequenceError::Overflow)
}

fn r_order_containing(position: u64) -> Result<u32, SequenceError> {
    let mut i = 0u32;
    loop {
        if r_len(i)? >= position {
            return Ok(i);
        }
        i += 1;
    }
}

/// Base-2 exponent of `R_inf[pos]`. Exact for any addressable position.
pub fn r_element_exp(i: SIndex) -> Result<u64, SequenceError> {
    let mut pos = i.get();
    let mut order = r_order_containing(pos)?;
    loop {
        if order == 0 {
            return Ok(0);
        }
        let half = r_len(order - 1)?;
        if pos <= half {
            order -= 1;
        } else if pos <= 2 * half {
            pos -= half;
            order -= 1;
        } else {
            // phi_order block: exponents 2^{order-1} .. 2^order - 1.
            let offset = pos - 2 * half;
            return Ok((1u64 << (order - 1)) + offset - 1);
        }
    }
}

/// `R_inf[pos]` as a value; overflows for positions inside `phi_7` and beyond.
pub fn r_element(i: SIndex) -> Result<u64, SequenceError> {
    let exp = r_element_exp(i)?;
    if exp >= 64 {
        return Err(SequenceError::Overflow);
    }
    Ok(1u64 << exp)
}

/// Appearance count of the value `2^k` in `R_i`, in closed form:
/// `2^i` for k = 0, `2^{i - 1 - floor(log2 k)}` for k >= 1.
pub fn count_weight_in_r(k: u64, i: u32) -> Result<u64, SequenceError> {
    if i > MAX_R_ORDER {
        return Err(SequenceError::OrderTooLarge(i, MAX_R_ORDER));
    }
    if k == 0 {
        return Ok(1u64 << i);
    }
    let log_k = 63 - k.leading_zeros();
    let min_order = log_k + 1;
    if i < min_order {
        return Err(SequenceError::BelowMinOrder {
            exponent: k,
            min_order,
            order: i,
        });
    }
    Ok(1u64 << (i - 1 - log_k))
}

/// The exponents of `R_i`, materialized (values themselves may exceed u64).
pub fn r_sequence_exps(i: u32) -> Result<Vec<u64>, SequenceError> {
    if i > 20 {
        return Err(SequenceError::OrderTooLarge(i, 20));
    }
    let mut seq = vec![0u64];
    for level in 1..=i {
        let mut next = Vec::with_capacity(2 * seq.len() + (1 << (level - 1)));
        next.extend_from_slice(&seq);
        next.extend_from_slice(&seq);
        let base = 1u64 << (level - 1);
        for offset in 0..(1u64 << (level - 1)) {
            next.push(base + offset);
        }
        seq = next;
    }
    Ok(seq)
}

/// Realize `R_k` anchored at time `t`: `|R_k|` unit slots `[t+i-1, t+i]`.
pub fn realize_r(k: u32, t: u64) -> Result<RealizedSequence, SequenceError> {
    let len = r_len(k)?;
    if len > (1 << 26) {
        return Err(SequenceError::OrderTooLarge(k, 26));
    }
    t.checked_add(len).ok_or(SequenceError::Overflow)?;
    let intervals = (0..len)
        .map(|off| Interval::new(t + off, t + off + 1))
        .collect();
    Ok(RealizedSequence {
        kind: SeqKind::R,
        order: k,
        start: t,
        intervals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn idx(i: u64) -> SIndex {
        SIndex::new(i).unwrap()
    }

    #[test]
    fn s_element_matches_listing() {
        // S_inf = <1,1,2,1,1,2,4,1,1,2,1,1,2,4,8,...>
        let listing = [1u64, 1, 2, 1, 1, 2, 4, 1, 1, 2, 1, 1, 2, 4, 8];
        for (i, &want) in listing.iter().enumerate() {
            assert_eq!(s_element(idx(i as u64 + 1)).unwrap(), want, "i={}", i + 1);
        }
        assert_eq!(s_element(idx(1)).unwrap(), 1);
        assert_eq!(s_element(idx(7)).unwrap(), 4);
        assert_eq!(s_element(idx(15)).unwrap(), 8);
        assert_eq!(SIndex::new(0), Err(SequenceError::InvalidIndex));
    }

    #[test]
    fn s_element_agrees_with_materialized_prefix() {
        let seq = s_sequence(10).unwrap();
        for (i, &want) in seq.iter().enumerate() {
            assert_eq!(s_element(idx(i as u64 + 1)).unwrap(), want);
        }
    }

    #[test]
    fn prefix_sums_match_direct_summation() {
        assert_eq!(s_prefix_sum(idx(1)).unwrap(), 1);
        assert_eq!(s_prefix_sum(idx(2)).unwrap(), 2);
        assert_eq!(s_prefix_sum(idx(3)).unwrap(), 4);
        assert_eq!(s_prefix_sum(idx(7)).unwrap(), 12);
        // Oracle: direct summation of the materialized prefix.
        let seq = s_sequence(12).unwrap();
        let mut acc = 0u64;
        for (i, &v) in seq.iter().enumerate() {
            acc += v;
            assert_eq!(s_prefix_sum(idx(i as u64 + 1)).unwrap(), acc);
        }
        assert_eq!(s_prefix_sum(idx(15)).unwrap(), 32);
    }

    #[test]
    fn realize_s_reproduces_worked_example() {
        let seq = realize_s(2, 2).unwrap();
        let want: Vec<Interval> = [(2, 3), (3, 4), (4, 6), (6, 7), (7, 8), (8, 10), (10, 14)]
            .iter()
            .map(|&(b, e)| Interval::new(b, e))
            .collect();
        assert_eq!(seq.intervals, want);
        assert_eq!(seq.begin(), 2);
        assert_eq!(seq.end(), 14);

        let single = realize_s(0, 5).unwrap();
        assert_eq!(single.intervals, vec![Interval::new(5, 6)]);

        let s3 = realize_s(3, 0).unwrap();
        assert_eq!(*s3.intervals.last().unwrap(), Interval::new(24, 32));
        let summed: u64 = s3.intervals.iter().map(|iv| iv.length()).sum();
        assert_eq!(summed, 32);
        assert_eq!(s3.end(), s_total_length(3).unwrap());
    }

    fn scan_subsequence_count(hay: &[u64], needle: &[u64]) -> u64 {
        if needle.len() > hay.len() {
            return 0;
        }
        (0..=hay.len() - needle.len())
            .filter(|&i| &hay[i..i + needle.len()] == needle)
            .count() as u64
    }

    #[test]
    fn appearance_counts_match_scan() {
        assert_eq!(count_sk_in_sd(4, 4).unwrap(), 1);
        assert_eq!(count_sk_in_sd(0, 2).unwrap(), 4);
        assert_eq!(count_sk_in_sd(1, 3).unwrap(), 4);
        assert!(count_sk_in_sd(3, 2).is_err());
        for d in 0..=10u32 {
            let hay = s_sequence(d).unwrap();
            for k in 0..=d {
                let needle = s_sequence(k).unwrap();
                assert_eq!(
                    scan_subsequence_count(&hay, &needle),
                    count_sk_in_sd(k, d).unwrap(),
                    "k={k} d={d}"
                );
            }
        }
    }

    #[test]
    fn appearance_starts_are_disjoint_and_complete() {
        for d in 0..=8u32 {
            for k in 0..=d {
                let starts = s_appearance_starts(k, d, 3).unwrap();
                assert_eq!(starts.len() as u64, count_sk_in_sd(k, d).unwrap());
                let span = s_total_length(k).unwrap();
                for w in starts.windows(2) {
                    assert!(w[0] + span <= w[1], "appearances overlap");
                }
                // Each appearance is a faithful copy.
                for &t in &starts {
                    let sub = realize_s(k, t).unwrap();
                    let lens: Vec<u64> = sub.intervals.iter().map(|iv| iv.length()).collect();
                    assert_eq!(lens, s_sequence(k).unwrap());
                }
            }
        }
    }

    #[test]
    fn r_elements_match_listing() {
        // R_inf = <1,1,2,1,1,2,4,8,1,1,2,1,1,2,4,8,16,32,64,128,1,...>
        let listing = [1u64, 1, 2, 1, 1, 2, 4, 8, 1, 1, 2, 1, 1, 2, 4, 8, 16, 32, 64, 128, 1];
        for (i, &want) in listing.iter().enumerate() {
            assert_eq!(r_element(idx(i as u64 + 1)).unwrap(), want, "i={}", i + 1);
        }
        assert_eq!(r_element(idx(1)).unwrap(), 1);
        assert_eq!(r_element(idx(8)).unwrap(), 8);
        assert_eq!(r_element(idx(17)).unwrap(), 16);
    }

    #[test]
    fn r_exponents_agree_with_materialized_prefix() {
        let seq = r_sequence_exps(9).unwrap();
        for (i, &want) in seq.iter().enumerate() {
            assert_eq!(r_element_exp(idx(i as u64 + 1)).unwrap(), want);
        }
    }

    #[test]
    fn r_values_overflow_is_checked() {
        // |R_6| = 256; positions 513.. enter phi_7 whose values exceed u64.
        assert_eq!(r_len(6).unwrap(), 256);
        assert_eq!(r_element(idx(513)), Err(SequenceError::Overflow));
        assert_eq!(r_element_exp(idx(513)).unwrap(), 64);
    }

    #[test]
    fn r_lengths_and_prefix_property() {
        assert_eq!(r_len(0).unwrap(), 1);
        for i in 1..=12u32 {
            assert_eq!(r_len(i).unwrap(), (i as u64 + 2) << (i - 1));
        }
        let big = r_sequence_exps(12).unwrap();
        for i in 0..12u32 {
            let small = r_sequence_exps(i).unwrap();
            assert_eq!(&big[..small.len()], &small[..], "R_{i} prefix of R_12");
        }
    }

    #[test]
    fn weight_counts_match_enumeration() {
        assert_eq!(count_weight_in_r(1, 2).unwrap(), 2);
        assert_eq!(count_weight_in_r(3, 2).unwrap(), 1);
        assert_eq!(count_weight_in_r(2, 4).unwrap(), 4);
        assert!(count_weight_in_r(3, 1).is_err());
        for i in 0..=10u32 {
            let seq = r_sequence_exps(i).unwrap();
            let max_exp = *seq.iter().max().unwrap();
            for k in 0..=max_exp {
                let direct = seq.iter().filter(|&&e| e == k).count() as u64;
                assert_eq!(count_weight_in_r(k, i).unwrap(), direct, "k={k} i={i}");
            }
        }
    }

    #[test]
    fn class_walks_agree_with_realized_sequences() {
        for d in 0..=9u32 {
            let realized = realize_s(d, 5).unwrap();
            for c in 0..=d {
                for x in 0..=realized.end() + 2 {
                    let direct = realized
                        .intervals
                        .iter()
                        .find(|iv| iv.length() == 1u64 << c && iv.begin() >= x)
                        .copied();
                    assert_eq!(
                        next_of_class_in_s(d, 5, c, x).unwrap(),
                        direct,
                        "d={d} c={c} x={x}"
                    );
                }
            }
        }
    }

    #[test]
    fn sinf_class_walk_is_consistent() {
        // Against a long materialized prefix of S_inf(7).
        let realized = realize_s(12, 7).unwrap();
        for c in 0..=6u32 {
            for x in [0, 7, 8, 63, 100, 999, 5000] {
                let direct = realized
                    .intervals
                    .iter()
                    .find(|iv| iv.length() == 1u64 << c && iv.begin() >= x)
                    .copied()
                    .unwrap();
                assert_eq!(next_of_class_in_sinf(7, c, x).unwrap(), direct);
            }
        }
    }

    #[test]
    fn realize_r_is_unit_slots() {
        let r2 = realize_r(2, 3).unwrap();
        assert_eq!(r2.intervals.len(), 8);
        assert_eq!(r2.intervals[0], Interval::new(3, 4));
        assert_eq!(r2.intervals[7], Interval::new(10, 11));
        assert!(r2.intervals.iter().all(|iv| iv.length() == 1));
    }
}
