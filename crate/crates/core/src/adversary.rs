//! Hard-instance generators: the adaptive length and weight adversaries, the
//! warmup instances that defeat the two natural static loop partitions, and
//! the static-mechanism feedback lower-bound instance.
//!
//! The adaptive generators are black boxes toward the mechanism: they feed
//! one job at a time through [`OnlineMechanism::serve`] and look only at the
//! returned assignments. Because every mechanism here is deterministic, the
//! boxes' expected counts are realized counts.

use thiserror::Error;

use crate::baselines::{spt_offline, BaselineError};
use crate::model::{
    Assignment, Job, JobStream, MechanismError, ModelError, OnlineMechanism, Schedule,
};
use crate::sequences::Interval;

#[derive(Debug, Error)]
pub enum AdversaryError {
    #[error("base size 2^{p_exp} too small for ratio parameter c={c}; need p_exp >= 16c")]
    BaseTooSmall { p_exp: u32, c: u64 },
    #[error("expected k < n, got k={k}, n={n}")]
    Misordered { k: u32, n: u32 },
    #[error("parameter too large: {0}")]
    TooLarge(String),
    #[error("no stopping iteration found; the mechanism defeated the adversary")]
    NoStop,
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
}

/// Outcome of an adaptive adversary run against a live mechanism.
#[derive(Debug)]
pub struct AdaptiveRun {
    pub stream: JobStream,
    pub schedule: Schedule,
    /// Stop iteration: batch index `j` for the length adversary, job index
    /// `j*` for the weight adversary.
    pub stop: u32,
    /// Per-iteration statistic: late-job count per batch, or the probe job's
    /// completion time.
    pub per_iteration: Vec<u128>,
    pub alg_cost: u128,
    pub opt_cost: u128,
}

impl AdaptiveRun {
    pub fn ratio(&self) -> (u128, u128) {
        crate::report::reduced_ratio(self.alg_cost, self.opt_cost)
    }
}

/// Adaptive length adversary: batches of `2^i` jobs of size `P / 2^i` at
/// time zero, stopping at the first batch where at least half the jobs
/// complete after `8cP`.
pub fn gen_lengths_lb(
    mechanism: &mut dyn OnlineMechanism,
    c: u64,
    p_exp: u32,
) -> Result<AdaptiveRun, AdversaryError> {
    if (p_exp as u64) < 16 * c {
        return Err(AdversaryError::BaseTooSmall { p_exp, c });
    }
    if p_exp > 40 {
        return Err(AdversaryError::TooLarge(format!("p_exp={p_exp}")));
    }
    let big_p = 1u64 << p_exp;
    let cutoff = 8 * c as u128 * big_p as u128;
    let mut jobs: Vec<Job> = Vec::new();
    let mut assignments: Vec<Assignment> = Vec::new();
    let mut late_counts: Vec<u128> = Vec::new();
    let mut stop = None;
    for i in 0..=(16 * c as u32) {
        let batch_size = 1u64 << i;
        let size = big_p >> i;
        let mut late = 0u64;
        for _ in 0..batch_size {
            let job = Job::new(jobs.len() as u32 + 1, 0, 1, size);
            let assignment = mechanism.serve(&job)?;
            if assignment.completion(size) as u128 > cutoff {
                late += 1;
            }
            jobs.push(job);
            assignments.push(assignment);
        }
        late_counts.push(late as u128);
        if 2 * late >= batch_size {
            stop = Some(i);
            break;
        }
    }
    let stop = stop.ok_or(AdversaryError::NoStop)?;
    let stream = JobStream::new(jobs)?;
    let schedule = Schedule {
        machines: mechanism.machines(),
        assignments,
    };
    let alg_cost = schedule.weighted_completion_sum(&stream)?;
    let opt_cost = spt_offline(&stream, 1)?.weighted_completion_sum(&stream)?;
    Ok(AdaptiveRun {
        stream,
        schedule,
        stop,
        per_iteration: late_counts,
        alg_cost,
        opt_cost,
    })
}

/// Exact decomposition of the offline shortest-first cost of the length
/// adversary's stream at stop batch `j`: completions of the smallest batch,
/// of the larger batches among themselves, and the cross-batch waiting.
pub fn lengths_lb_opt_terms(p_exp: u32, j: u32) -> (u128, u128, u128) {
    let big_p = 1u128 << p_exp;
    let n = |i: u32| 1u128 << i;
    let p = |i: u32| big_p >> i;
    let term1 = p(j) * (n(j) * (n(j) + 1) / 2);
    let term2: u128 = (0..j).map(|i| p(i) * (n(i) * (n(i) + 1) / 2)).sum();
    let term3: u128 = (0..j).map(|i| (j - i) as u128 * big_p * n(i)).sum();
    (term1, term2, term3)
}

/// Adaptive weight adversary: job `j` has weight `2^{k+j}`, unit length,
/// release zero; stop at the first job completing after `4k`.
pub fn gen_weights_lb(
    mechanism: &mut dyn OnlineMechanism,
    k: u32,
) -> Result<AdaptiveRun, AdversaryError> {
    if k == 0 || k > 16 {
        return Err(AdversaryError::TooLarge(format!("k={k}")));
    }
    let mut jobs: Vec<Job> = Vec::new();
    let mut assignments: Vec<Assignment> = Vec::new();
    let mut completions: Vec<u128> = Vec::new();
    let mut stop = None;
    for j in 1..=(8 * k) {
        let shift = k + j;
        if shift >= 128 {
            return Err(AdversaryError::TooLarge(format!("weight 2^{shift}")));
        }
        let job = Job::new(jobs.len() as u32 + 1, 0, 1u128 << shift, 1);
        let assignment = mechanism.serve(&job)?;
        let c = assignment.completion(1);
        jobs.push(job);
        assignments.push(assignment);
        completions.push(c as u128);
        if c as u128 > 4 * k as u128 {
            stop = Some(j);
            break;
        }
    }
    let stop = stop.ok_or(AdversaryError::NoStop)?;
    let stream = JobStream::new(jobs)?;
    let schedule = Schedule {
        machines: mechanism.machines(),
        assignments,
    };
    let alg_cost = schedule.weighted_completion_sum(&stream)?;
    let opt_cost = spt_offline(&stream, 1)?.weighted_completion_sum(&stream)?;
    Ok(AdaptiveRun {
        stream,
        schedule,
        stop,
        per_iteration: completions,
        alg_cost,
        opt_cost,
    })
}

/// Closed form for the weight adversary's offline optimum at stop `j*`:
/// heaviest first, so the i-th heaviest (weight `2^{k+j*-i}`) ends at `i+1`.
pub fn weights_lb_opt_closed_form(k: u32, j_star: u32) -> u128 {
    (0..j_star)
        .map(|i| (i as u128 + 1) * (1u128 << (k + j_star - i)))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WarmupVariant {
    /// Loop of intervals of lengths 2^0, 2^1, ..., 2^d.
    Ascending,
    /// Loop of 2^d unit intervals, then 2^{d-1} length-2 intervals, down to
    /// a single length-2^d interval.
    Descending,
}

/// First-fit over a static looping interval partition on one machine; the
/// two variants are the natural algorithms the dynamic menu improves on.
pub struct LoopingPartition {
    /// (offset within block, length) per interval, in time order.
    layout: Vec<(u64, u64)>,
    block_len: u64,
    occupied: std::collections::BTreeSet<u64>,
    last_release: u64,
}

impl LoopingPartition {
    pub fn new(variant: WarmupVariant, d: u32) -> Self {
        assert!(d <= 20);
        let mut layout = Vec::new();
        let mut offset = 0u64;
        match variant {
            WarmupVariant::Ascending => {
                for i in 0..=d {
                    layout.push((offset, 1u64 << i));
                    offset += 1u64 << i;
                }
            }
            WarmupVariant::Descending => {
                for i in (0..=d).rev() {
                    let len = 1u64 << (d - i);
                    for _ in 0..(1u64 << i) {
                        layout.push((offset, len));
                        offset += len;
                    }
                }
            }
        }
        LoopingPartition {
            layout,
            block_len: offset,
            occupied: std::collections::BTreeSet::new(),
            last_release: 0,
        }
    }
}

impl OnlineMechanism for LoopingPartition {
    fn machines(&self) -> u32 {
        1
    }

    fn serve(&mut self, job: &Job) -> Result<Assignment, MechanismError> {
        if job.weight != 1 {
            return Err(MechanismError::NonUnitWeight(job.index));
        }
        if job.release < self.last_release {
            return Err(MechanismError::ReleaseWentBack(job.index));
        }
        self.last_release = job.release;
        let mut block = job.release / self.block_len;
        loop {
            let base = block * self.block_len;
            for &(offset, len) in &self.layout {
                let begin = base + offset;
                if begin >= job.release && len >= job.processing && !self.occupied.contains(&begin)
                {
                    self.occupied.insert(begin);
                    return Ok(Assignment {
                        job: job.index,
                        machine: 1,
                        interval: Interval::new(begin, begin + len),
                        price: 0,
                    });
                }
            }
            block += 1;
        }
    }
}

/// The warmup instance defeating the named loop partition, plus a fresh
/// instance of that partition to run it against.
pub fn gen_warmup(
    variant: WarmupVariant,
    d: u32,
    tail: u64,
) -> Result<(JobStream, LoopingPartition), AdversaryError> {
    if !(2..=20).contains(&d) {
        return Err(AdversaryError::TooLarge(format!("d={d}")));
    }
    let mut triples: Vec<(u64, u128, u64)> = Vec::new();
    match variant {
        WarmupVariant::Ascending => {
            for i in 0..=d {
                triples.push((0, 1, 1u64 << i));
            }
            for _ in 0..tail {
                triples.push((0, 1, 1));
            }
        }
        WarmupVariant::Descending => {
            for _ in 0..(1u64 << (d / 2)) {
                triples.push((0, 1, 2));
            }
            triples.push((0, 1, 1u64 << d));
        }
    }
    let stream = JobStream::from_triples(&triples)?;
    Ok((stream, LoopingPartition::new(variant, d)))
}

/// The static-mechanism feedback lower-bound instance for parameters (n, k):
/// a block of size-2^k jobs, batches descending from 2^{k-1} to unit size,
/// then 2^n final unit jobs; all at time zero.
pub fn gen_static_lb(n: u32, k: u32) -> Result<JobStream, AdversaryError> {
    if k >= n {
        return Err(AdversaryError::Misordered { k, n });
    }
    if n > 18 {
        return Err(AdversaryError::TooLarge(format!("n={n}")));
    }
    let mut triples: Vec<(u64, u128, u64)> = Vec::new();
    let first_batch = (n - k) as u64 * (1u64 << (n - k));
    for _ in 0..first_batch {
        triples.push((0, 1, 1u64 << k));
    }
    for i in (0..k).rev() {
        for _ in 0..(1u64 << (n - i)) {
            triples.push((0, 1, 1u64 << i));
        }
    }
    for _ in 0..(1u64 << n) {
        triples.push((0, 1, 1));
    }
    Ok(JobStream::from_triples(&triples)?)
}
