//! Static mechanism: the timeline of every machine is divided once and for
//! all as `S_inf(0)`, and each arriving job takes the earliest unoccupied
//! interval it fits in (lowest machine on ties).
//!
//! Without feedback a chosen interval is consumed whole. With feedback a job
//! of size p occupying `[b, e]` only consumes `[b, b+p]`; the remainder
//! stays available for later jobs that fit inside it. Remainders never merge
//! across division boundaries.

use std::collections::{BTreeMap, BTreeSet};

use crate::model::{Assignment, Job, JobStream, MechanismError, OnlineMechanism, Schedule};
use crate::sequences::{next_of_class_in_sinf, Interval};

const MAX_CLASS: u32 = 40;

/// A free remainder inside a touched interval: `[start, interval_end]`.
#[derive(Debug, Clone, Copy)]
struct Piece {
    start: u64,
    interval_begin: u64,
    interval_end: u64,
}

impl Piece {
    fn free_len(&self) -> u64 {
        self.interval_end - self.start
    }
}

/// Per-machine view of the fixed `S_inf(0)` division. Untouched intervals
/// are implicit (the division is infinite); only touched ones are tracked.
struct MachineStore {
    /// buckets[c]: remainder pieces with free length in [2^c, 2^{c+1}).
    buckets: Vec<BTreeMap<u64, Piece>>,
    /// Per class: begins of touched intervals of that class.
    touched: Vec<BTreeSet<u64>>,
    /// Per class: the earliest never-touched interval of that class.
    cursors: Vec<Interval>,
}

impl MachineStore {
    fn new() -> Self {
        let cursors = (0..=MAX_CLASS)
            .map(|c| next_of_class_in_sinf(0, c, 0).expect("first interval of each class"))
            .collect();
        MachineStore {
            buckets: vec![BTreeMap::new(); MAX_CLASS as usize + 1],
            touched: vec![BTreeSet::new(); MAX_CLASS as usize + 1],
            cursors,
        }
    }

    fn next_untouched(&self, c: u32, from: u64) -> Interval {
        let mut x = from;
        loop {
            let iv = next_of_class_in_sinf(0, c, x).expect("division is infinite");
            if !self.touched[c as usize].contains(&iv.begin()) {
                return iv;
            }
            x = iv.begin() + 1;
        }
    }

    /// Earliest free start (piece or untouched interval) fitting size p at
    /// or after t. Returns (start, whole interval).
    fn earliest_fit(&self, p: u64, t: u64) -> (u64, Interval) {
        let k = p.trailing_zeros();
        let mut best: Option<(u64, Interval)> = None;
        for c in k..=MAX_CLASS {
            if let Some((_, piece)) = self.buckets[c as usize].range(t..).next() {
                debug_assert!(piece.free_len() >= p);
                if best.is_none_or(|(s, _)| piece.start < s) {
                    best = Some((
                        piece.start,
                        Interval::new(piece.interval_begin, piece.interval_end),
                    ));
                }
            }
            let untouched = if t <= self.cursors[c as usize].begin() {
                self.cursors[c as usize]
            } else {
                self.next_untouched(c, t)
            };
            if best.is_none_or(|(s, _)| untouched.begin() < s) {
                best = Some((untouched.begin(), untouched));
            }
        }
        best.expect("an untouched interval of every class always exists")
    }

    fn bucket_of(len: u64) -> usize {
        (63 - len.leading_zeros()) as usize
    }

    /// Consume `[start, start+p]`; with feedback the rest of the interval
    /// remains available, otherwise the interval is gone whole.
    fn allocate(&mut self, start: u64, interval: Interval, p: u64, feedback: bool) {
        let c = interval.length().trailing_zeros();
        if start == interval.begin() && !self.touched[c as usize].contains(&interval.begin()) {
            self.touched[c as usize].insert(interval.begin());
            if self.cursors[c as usize].begin() == interval.begin() {
                self.cursors[c as usize] = self.next_untouched(c, interval.begin() + 1);
            }
        } else {
            // Allocating out of an existing remainder piece.
            let bucket = Self::bucket_of(interval.end() - start);
            let removed = self.buckets[bucket].remove(&start);
            debug_assert!(removed.is_some());
        }
        if feedback && start + p < interval.end() {
            let piece = Piece {
                start: start + p,
                interval_begin: interval.begin(),
                interval_end: interval.end(),
            };
            self.buckets[Self::bucket_of(piece.free_len())].insert(piece.start, piece);
        }
    }
}

/// The static first-fit mechanism over `m` machines.
pub struct StaticMenu {
    machines: u32,
    feedback: bool,
    stores: Vec<MachineStore>,
    last_release: u64,
}

#[derive(Debug, Clone)]
pub struct StaticJobTrace {
    pub job: u32,
    pub release: u64,
    pub processing: u64,
    pub chosen: Interval,
    pub machine: u32,
}

impl StaticJobTrace {
    pub fn to_line(&self) -> String {
        format!(
            "job={} release={} p={} chosen={}@{} rule=- state_len=-",
            self.job, self.release, self.processing, self.chosen, self.machine
        )
    }
}

impl StaticMenu {
    pub fn new(machines: u32, feedback: bool) -> Self {
        assert!(machines >= 1);
        StaticMenu {
            machines,
            feedback,
            stores: (0..machines).map(|_| MachineStore::new()).collect(),
            last_release: 0,
        }
    }

    pub fn feedback(&self) -> bool {
        self.feedback
    }

    pub fn serve_traced(&mut self, job: &Job) -> Result<(Assignment, StaticJobTrace), MechanismError> {
        if job.weight != 1 {
            return Err(MechanismError::NonUnitWeight(job.index));
        }
        if !job.processing.is_power_of_two() {
            return Err(MechanismError::NotPowerOfTwo(job.index));
        }
        if job.release < self.last_release {
            return Err(MechanismError::ReleaseWentBack(job.index));
        }
        self.last_release = job.release;

        let mut best: Option<(u64, Interval, usize)> = None;
        for (q, store) in self.stores.iter().enumerate() {
            let (start, interval) = store.earliest_fit(job.processing, job.release);
            if best.is_none_or(|(s, _, _)| start < s) {
                best = Some((start, interval, q));
            }
        }
        let (start, interval, q) = best.expect("at least one machine");
        self.stores[q].allocate(start, interval, job.processing, self.feedback);

        // Without feedback the whole interval is occupied; with feedback only
        // the consumed sub-interval counts against the schedule.
        let committed = if self.feedback {
            Interval::new(start, start + job.processing)
        } else {
            interval
        };
        let assignment = Assignment {
            job: job.index,
            machine: q as u32 + 1,
            interval: committed,
            price: 0,
        };
        let trace = StaticJobTrace {
            job: job.index,
            release: job.release,
            processing: job.processing,
            chosen: committed,
            machine: q as u32 + 1,
        };
        Ok((assignment, trace))
    }
}

impl OnlineMechanism for StaticMenu {
    fn machines(&self) -> u32 {
        self.machines
    }

    fn serve(&mut self, job: &Job) -> Result<Assignment, MechanismError> {
        self.serve_traced(job).map(|(a, _)| a)
    }
}

pub struct StaticRun {
    pub schedule: Schedule,
    pub trace: Vec<StaticJobTrace>,
}

/// Serve a normalized unit-weight stream through the static division.
pub fn run_static(
    stream: &JobStream,
    machines: u32,
    feedback: bool,
) -> Result<StaticRun, MechanismError> {
    let mut mech = StaticMenu::new(machines, feedback);
    let mut assignments = Vec::with_capacity(stream.len());
    let mut trace = Vec::with_capacity(stream.len());
    for job in stream.jobs() {
        let (a, t) = mech.serve_traced(job)?;
        assignments.push(a);
        trace.push(t);
    }
    Ok(StaticRun {
        schedule: Schedule {
            machines,
            assignments,
        },
        trace,
    })
}

/// Run the hard feedback instance for given (n, k): generate it, schedule it
/// statically with feedback on one machine, and compare against the offline
/// shortest-first optimum.
pub struct StaticLbReport {
    pub n: u32,
    pub k: u32,
    pub alg_cost: u128,
    pub opt_cost: u128,
}

pub fn static_lb_ratio(n: u32, k: u32) -> Result<StaticLbReport, crate::adversary::AdversaryError> {
    let stream = crate::adversary::gen_static_lb(n, k)?;
    let run = run_static(&stream, 1, true)?;
    let alg_cost = run.schedule.weighted_completion_sum(&stream)?;
    let opt = crate::baselines::spt_offline(&stream, 1)?;
    let opt_cost = opt.weighted_completion_sum(&stream)?;
    Ok(StaticLbReport {
        n,
        k,
        alg_cost,
        opt_cost,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_stream(jobs: &[(u64, u64)]) -> JobStream {
        JobStream::from_triples(
            &jobs.iter().map(|&(r, p)| (r, 1u128, p)).collect::<Vec<_>>(),
        )
        .unwrap()
    }

    #[test]
    fn single_job_takes_first_fitting_interval() {
        let stream = unit_stream(&[(0, 4)]);
        let run = run_static(&stream, 1, false).unwrap();
        assert_eq!(run.schedule.assignments[0].interval, Interval::new(8, 12));
    }

    #[test]
    fn no_feedback_wastes_the_remainder() {
        // Unit jobs fill [0,1], [1,2]; the third takes [2,4] whole; the
        // fourth must go to [4,5].
        let stream = unit_stream(&[(0, 1), (0, 1), (0, 1), (0, 1)]);
        let run = run_static(&stream, 1, false).unwrap();
        let chosen: Vec<Interval> = run.schedule.assignments.iter().map(|a| a.interval).collect();
        assert_eq!(
            chosen,
            vec![
                Interval::new(0, 1),
                Interval::new(1, 2),
                Interval::new(2, 4),
                Interval::new(4, 5),
            ]
        );
    }

    #[test]
    fn feedback_reuses_the_remainder() {
        let stream = unit_stream(&[(0, 1), (0, 1), (0, 1), (0, 1)]);
        let run = run_static(&stream, 1, true).unwrap();
        let chosen: Vec<Interval> = run.schedule.assignments.iter().map(|a| a.interval).collect();
        assert_eq!(
            chosen,
            vec![
                Interval::new(0, 1),
                Interval::new(1, 2),
                Interval::new(2, 3), // front of [2,4], remainder [3,4] stays usable
                Interval::new(3, 4),
            ]
        );
        assert!(run.schedule.validate(&stream).is_valid());
    }

    #[test]
    fn respects_release_times() {
        let stream = unit_stream(&[(3, 1)]);
        let run = run_static(&stream, 1, false).unwrap();
        assert_eq!(run.schedule.assignments[0].interval, Interval::new(4, 5));
    }

    #[test]
    fn division_is_static_across_arrivals() {
        // Every committed interval must align with the S_inf(0) division.
        let stream = unit_stream(&[(0, 2), (0, 8), (0, 1), (1, 4), (2, 2), (2, 1)]);
        let run = run_static(&stream, 2, false).unwrap();
        assert!(run.schedule.validate(&stream).is_valid());
        for a in &run.schedule.assignments {
            let c = a.interval.length().trailing_zeros();
            let iv = next_of_class_in_sinf(0, c, a.interval.begin()).unwrap();
            assert_eq!(iv, a.interval, "interval comes from the fixed division");
        }
    }

    #[test]
    fn feedback_lower_bound_certifies_the_ratio_at_n12() {
        // n=12, k=7 (roughly 2 log2 n): the final 2^n unit jobs start inside
        // the last interval of S_12(0), far past the offline optimum.
        let report = static_lb_ratio(12, 7).unwrap();
        assert!(report.alg_cost >= 12u128 << 24, "ALG >= n * 2^{{2n}}");
        assert!(
            report.alg_cost * 8 >= 12 * report.opt_cost,
            "ratio >= n/8: alg={} opt={}",
            report.alg_cost,
            report.opt_cost
        );
    }

    #[test]
    fn feedback_final_units_start_in_the_last_division_interval() {
        let n = 10u32;
        let k = 6u32;
        let stream = crate::adversary::gen_static_lb(n, k).unwrap();
        let run = run_static(&stream, 1, true).unwrap();
        assert!(run.schedule.validate(&stream).is_valid());
        let unit_tail = stream.len() - (1usize << n);
        for a in &run.schedule.assignments[unit_tail..] {
            assert!(
                a.interval.begin() >= (n as u64) << n,
                "final unit starts at {} before the last interval",
                a.interval.begin()
            );
        }
    }

    #[test]
    fn two_machines_share_the_division() {
        let stream = unit_stream(&[(0, 1), (0, 1), (0, 1)]);
        let run = run_static(&stream, 2, false).unwrap();
        let slots: Vec<(Interval, u32)> = run
            .schedule
            .assignments
            .iter()
            .map(|a| (a.interval, a.machine))
            .collect();
        assert_eq!(
            slots,
            vec![
                (Interval::new(0, 1), 1),
                (Interval::new(0, 1), 2),
                (Interval::new(1, 2), 1),
            ]
        );
    }
}
