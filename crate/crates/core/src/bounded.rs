//! Combined mechanism for arbitrary processing times and weights bounded by
//! a known `B_max`: every interval of the fixed `S_inf(0)` division is
//! replicated `log2(B_max) + 1` times, consecutively and in ascending class
//! order, and the class-`l` copy carries threshold `2^l`. Prices generalize
//! the unit-slot ladder to intervals: the price of a free interval is the
//! integral, from its start to the earliest free threshold-1 interval of at
//! least its length, of the smallest threshold among free intervals of at
//! least its length seen so far. A rational agent of weight `w` and size `p`
//! minimizing `(b+p)*w + price` then prefers early low-threshold copies it
//! fits in, and never profits from a copy priced for heavier agents.
//!
//! With `B_max = 1` the replication is the identity, every price collapses
//! to zero, and the run reproduces the static mechanism exactly.

use crate::model::{Assignment, Job, JobStream, MechanismError, OnlineMechanism, Schedule};
use crate::sequences::{next_of_class_in_sinf, s_element, s_prefix_sum, Interval, SIndex};
use std::collections::BTreeSet;

const MAX_CLASS: u32 = 40;

/// One copy of a base interval on the replicated timeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicatedInterval {
    /// The base interval in `S_inf(0)` coordinates.
    pub base: Interval,
    /// Copy class `l` (threshold `2^l`).
    pub copy_class: u32,
    /// Actual position on the stretched timeline.
    pub placed: Interval,
}

impl ReplicatedInterval {
    pub fn threshold(&self) -> u128 {
        1u128 << self.copy_class
    }
}

/// Materialize the replicated timeline out to at least `horizon`.
pub fn build_replicated_timeline(
    b_max: u128,
    horizon: u64,
) -> Result<Vec<ReplicatedInterval>, MechanismError> {
    if !b_max.is_power_of_two() {
        return Err(MechanismError::WeightNotPowerOfTwo(0));
    }
    let classes = b_max.trailing_zeros() + 1;
    let mut out = Vec::new();
    let mut base_index = 1u64;
    let mut gamma_prev = 0u64;
    let mut placed = 0u64;
    while placed < horizon {
        let len = s_element(SIndex::new(base_index).unwrap())?;
        let base = Interval::new(gamma_prev, gamma_prev + len);
        for l in 0..classes {
            out.push(ReplicatedInterval {
                base,
                copy_class: l,
                placed: Interval::new(placed, placed + len),
            });
            placed += len;
        }
        gamma_prev += len;
        base_index += 1;
    }
    Ok(out)
}

/// A copy encountered while sweeping the occupied span of the timeline.
#[derive(Debug, Clone, Copy)]
struct SweepCopy {
    begin: u64,
    len: u64,
    class: u32,
    thr_exp: u32,
}

#[derive(Debug, Clone)]
pub struct CombinedJobTrace {
    pub job: u32,
    pub release: u64,
    pub weight: u128,
    pub processing: u64,
    pub chosen: Interval,
    pub machine: u32,
    pub copy_class: u32,
    pub price: u128,
    pub cost: u128,
}

impl CombinedJobTrace {
    pub fn to_line(&self) -> String {
        format!(
            "job={} release={} p={} w={} chosen={}@{} class={} price={} cost={}",
            self.job,
            self.release,
            self.processing,
            self.weight,
            self.chosen,
            self.machine,
            self.copy_class,
            self.price,
            self.cost
        )
    }
}

/// The bounded-weight combined mechanism.
pub struct CombinedMenu {
    machines: u32,
    b_max: u128,
    classes: u32,
    occupied: Vec<BTreeSet<u64>>,
    /// One past the furthest occupied placed position; beyond it everything
    /// is untouched.
    frontier: u64,
    last_release: u64,
}

impl CombinedMenu {
    pub fn new(machines: u32, b_max: u128) -> Result<Self, MechanismError> {
        if !b_max.is_power_of_two() {
            return Err(MechanismError::WeightNotPowerOfTwo(0));
        }
        Ok(CombinedMenu {
            machines,
            b_max,
            classes: b_max.trailing_zeros() + 1,
            occupied: vec![BTreeSet::new(); machines as usize],
            frontier: 0,
            last_release: 0,
        })
    }

    pub fn b_max(&self) -> u128 {
        self.b_max
    }

    fn stretch(&self) -> u64 {
        self.classes as u64
    }

    /// Locate the base whose block contains placed position `x`, returning
    /// (base index, gamma before it).
    fn base_at(&self, x: u64) -> Result<(u64, u64), MechanismError> {
        let g = x / self.stretch();
        // Smallest j with gamma_j > g.
        let mut hi = 1u64;
        while s_prefix_sum(SIndex::new(hi).unwrap())? <= g {
            hi *= 2;
        }
        let mut lo = hi / 2; // gamma_lo <= g (or lo == 0)
        while lo + 1 < hi {
            let mid = lo + (hi - lo) / 2;
            if s_prefix_sum(SIndex::new(mid).unwrap())? <= g {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let gamma_prev = if lo == 0 {
            0
        } else {
            s_prefix_sum(SIndex::new(lo).unwrap())?
        };
        Ok((hi, gamma_prev))
    }

    /// Placed position of the earliest entirely-untouched block at or after
    /// `x` whose base length is at least `2^c`; its class-0 copy is the
    /// fresh anchor for class `c`.
    fn fresh_anchor(&self, c: u32, x: u64) -> Result<u64, MechanismError> {
        let stretch = self.stretch();
        let x_base = x.div_ceil(stretch);
        let mut best = u64::MAX;
        for class in c..=MAX_CLASS {
            let base = next_of_class_in_sinf(0, class, x_base)?;
            best = best.min(base.begin() * stretch);
        }
        Ok(best)
    }

    fn free_machines(&self, begin: u64) -> Vec<u32> {
        (0..self.machines as usize)
            .filter(|&q| !self.occupied[q].contains(&begin))
            .map(|q| q as u32 + 1)
            .collect()
    }

    pub fn serve_traced(
        &mut self,
        job: &Job,
    ) -> Result<(Assignment, CombinedJobTrace), MechanismError> {
        if !job.processing.is_power_of_two() {
            return Err(MechanismError::NotPowerOfTwo(job.index));
        }
        if !job.weight.is_power_of_two() {
            return Err(MechanismError::WeightNotPowerOfTwo(job.index));
        }
        if job.weight > self.b_max {
            return Err(MechanismError::WeightAboveBound {
                index: job.index,
                weight: job.weight,
                bound: self.b_max,
            });
        }
        if job.release < self.last_release {
            return Err(MechanismError::ReleaseWentBack(job.index));
        }
        self.last_release = job.release;

        let t = job.release;
        let p = job.processing;
        let k = p.trailing_zeros();
        let w = job.weight;
        let stretch = self.stretch();
        // Sweep through the end of the block containing the occupancy
        // frontier (or the release, if later), so that everything beyond the
        // sweep is an entirely untouched, block-aligned region.
        let raw_end = self.frontier.max(t);
        let span_end = {
            let (base_index, gamma_prev) = self.base_at(raw_end)?;
            let block_start = gamma_prev * stretch;
            if block_start == raw_end {
                raw_end
            } else {
                let len = s_element(SIndex::new(base_index).unwrap())?;
                (gamma_prev + len) * stretch
            }
        };

        // Sweep the copies whose start lies in [t, span_end).
        let mut window: Vec<SweepCopy> = Vec::new();
        let mut window_free: Vec<Vec<u32>> = Vec::new();
        if t < span_end {
            let (mut base_index, mut gamma_prev) = self.base_at(t)?;
            let mut max_class = 0u32;
            'sweep: loop {
                let len = s_element(SIndex::new(base_index).unwrap())?;
                let block_begin = gamma_prev * stretch;
                for l in 0..self.classes {
                    let begin = block_begin + l as u64 * len;
                    if begin >= span_end {
                        break 'sweep;
                    }
                    if begin >= t {
                        let class = len.trailing_zeros();
                        max_class = max_class.max(class);
                        window.push(SweepCopy {
                            begin,
                            len,
                            class,
                            thr_exp: l,
                        });
                        window_free.push(self.free_machines(begin));
                    }
                }
                gamma_prev += len;
                base_index += 1;
            }
            let _ = max_class;
        }
        let cmax = window.iter().map(|c| c.class).max().unwrap_or(k).max(k);

        // Per length class: in-window anchor (earliest free threshold-1 copy
        // of at least that length), else the fresh closed form.
        let mut anchors = vec![u64::MAX; cmax as usize + 2];
        for (i, copy) in window.iter().enumerate() {
            if copy.thr_exp == 0 && !window_free[i].is_empty() {
                for c in (0..=copy.class.min(cmax)).rev() {
                    if anchors[c as usize] != u64::MAX {
                        break;
                    }
                    anchors[c as usize] = copy.begin;
                }
            }
        }
        for c in 0..=cmax {
            if anchors[c as usize] == u64::MAX {
                anchors[c as usize] = self.fresh_anchor(c, span_end)?;
            }
        }
        let fitting_anchor = anchors[k as usize];

        // Prices per class c in [k, cmax]: suffix-integrate the running
        // minimum threshold of free length >= 2^c copies.
        const UNDEF: u32 = u32::MAX;
        let n_win = window.len();
        let mut price_by_class: Vec<Vec<u128>> = vec![Vec::new(); cmax as usize + 1];
        for c in k..=cmax {
            let anchor = anchors[c as usize];
            let mut cmin = vec![UNDEF; n_win];
            let mut running = UNDEF;
            for (i, copy) in window.iter().enumerate() {
                if copy.class >= c && !window_free[i].is_empty() {
                    running = running.min(copy.thr_exp);
                }
                cmin[i] = running;
            }
            let mut prices = vec![u128::MAX; n_win + 1];
            // Tail from span_end out to a fresh anchor: the running minimum
            // cannot change before the anchor block, so the rate is flat.
            prices[n_win] = if anchor > span_end {
                if running == UNDEF {
                    u128::MAX
                } else {
                    (1u128 << running)
                        .checked_mul((anchor - span_end) as u128)
                        .ok_or(MechanismError::Overflow(job.index))?
                }
            } else {
                0
            };
            for i in (0..n_win).rev() {
                let seg_begin = window[i].begin.min(anchor);
                let seg_end = if i + 1 < n_win {
                    window[i + 1].begin.min(anchor)
                } else {
                    span_end.min(anchor)
                };
                if cmin[i] == UNDEF || prices[i + 1] == u128::MAX {
                    prices[i] = if seg_end <= seg_begin { prices[i + 1] } else { u128::MAX };
                    continue;
                }
                let seg = (1u128 << cmin[i])
                    .checked_mul((seg_end - seg_begin) as u128)
                    .ok_or(MechanismError::Overflow(job.index))?;
                prices[i] = prices[i + 1]
                    .checked_add(seg)
                    .ok_or(MechanismError::Overflow(job.index))?;
            }
            price_by_class[c as usize] = prices;
        }

        // Candidates: free fitting copies up to the fitting anchor, plus the
        // fresh anchor itself when it lies beyond the sweep. A copy's price
        // is the class ladder integral, floored by the reserve price
        // (threshold/2) x (distance to the class anchor): the floor makes an
        // under-threshold agent always at least indifferent between the copy
        // and the anchor, and price ties resolve toward the cheaper entry.
        struct Candidate {
            begin: u64,
            len: u64,
            thr_exp: u32,
            machine: u32,
            price: u128,
            cost: u128,
        }
        let mut best: Option<Candidate> = None;
        let consider = |cand: Candidate, best: &mut Option<Candidate>| {
            let better = match best {
                None => true,
                Some(b) => {
                    (cand.cost, cand.price, cand.begin, cand.machine)
                        < (b.cost, b.price, b.begin, b.machine)
                }
            };
            if better {
                *best = Some(cand);
            }
        };
        for (i, copy) in window.iter().enumerate() {
            if copy.len < p || window_free[i].is_empty() || copy.begin > fitting_anchor {
                continue;
            }
            let ladder_price = price_by_class[copy.class as usize][i];
            if ladder_price == u128::MAX {
                continue;
            }
            let anchor = anchors[copy.class as usize];
            let reserve = if copy.thr_exp >= 1 && anchor > copy.begin {
                (1u128 << (copy.thr_exp - 1))
                    .checked_mul((anchor - copy.begin) as u128)
                    .ok_or(MechanismError::Overflow(job.index))?
            } else {
                0
            };
            let price = ladder_price.max(reserve);
            let wait = (copy.begin + p) as u128;
            let cost = wait
                .checked_mul(w)
                .and_then(|v| v.checked_add(price))
                .ok_or(MechanismError::Overflow(job.index))?;
            consider(
                Candidate {
                    begin: copy.begin,
                    len: copy.len,
                    thr_exp: copy.thr_exp,
                    machine: window_free[i][0],
                    price,
                    cost,
                },
                &mut best,
            );
        }
        if fitting_anchor >= span_end {
            // Entirely fresh block: class-0 copy, free on every machine.
            let (base_index, gamma_prev) = self.base_at(fitting_anchor)?;
            let len = s_element(SIndex::new(base_index).unwrap())?;
            debug_assert_eq!(gamma_prev * stretch, fitting_anchor);
            debug_assert!(len >= p);
            let cost = ((fitting_anchor + p) as u128)
                .checked_mul(w)
                .ok_or(MechanismError::Overflow(job.index))?;
            consider(
                Candidate {
                    begin: fitting_anchor,
                    len,
                    thr_exp: 0,
                    machine: 1,
                    price: 0,
                    cost,
                },
                &mut best,
            );
        }
        let chosen = best.expect("a fitting free copy always exists");

        self.occupied[chosen.machine as usize - 1].insert(chosen.begin);
        self.frontier = self.frontier.max(chosen.begin + chosen.len);

        let interval = Interval::new(chosen.begin, chosen.begin + chosen.len);
        let assignment = Assignment {
            job: job.index,
            machine: chosen.machine,
            interval,
            price: chosen.price,
        };
        let trace = CombinedJobTrace {
            job: job.index,
            release: job.release,
            weight: w,
            processing: p,
            chosen: interval,
            machine: chosen.machine,
            copy_class: chosen.thr_exp,
            price: chosen.price,
            cost: chosen.cost,
        };
        Ok((assignment, trace))
    }
}

impl OnlineMechanism for CombinedMenu {
    fn machines(&self) -> u32 {
        self.machines
    }

    fn serve(&mut self, job: &Job) -> Result<Assignment, MechanismError> {
        self.serve_traced(job).map(|(a, _)| a)
    }
}

pub struct CombinedRun {
    pub schedule: Schedule,
    pub trace: Vec<CombinedJobTrace>,
}

/// Serve a normalized stream with weights bounded by `b_max`.
pub fn run_combined(
    stream: &JobStream,
    machines: u32,
    b_max: u128,
) -> Result<CombinedRun, MechanismError> {
    for job in stream.jobs() {
        if job.weight > b_max {
            return Err(MechanismError::WeightAboveBound {
                index: job.index,
                weight: job.weight,
                bound: b_max,
            });
        }
    }
    let mut mech = CombinedMenu::new(machines, b_max)?;
    let mut assignments = Vec::with_capacity(stream.len());
    let mut trace = Vec::with_capacity(stream.len());
    for job in stream.jobs() {
        let (a, t) = mech.serve_traced(job)?;
        assignments.push(a);
        trace.push(t);
    }
    Ok(CombinedRun {
        schedule: Schedule {
            machines,
            assignments,
        },
        trace,
    })
}
