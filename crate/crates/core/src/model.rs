//! Shared scheduling vocabulary: job streams, non-preemptive and preemptive
//! schedules, the weighted-completion objective, input normalization and
//! schedule validity checks.

use std::collections::HashMap;
use std::fmt;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::sequences::Interval;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("job {0}: weight and processing time must be >= 1")]
    NonPositiveField(u32),
    #[error("job {index}: release {release} decreases below predecessor's {previous}")]
    ReleaseOrder {
        index: u32,
        release: u64,
        previous: u64,
    },
    #[error("job {got} carries index {expected}; indices must be 1..n in order")]
    BadIndex { got: u32, expected: u32 },
    #[error("schedule is missing an assignment for job {0}")]
    MissingAssignment(u32),
    #[error("cost sum overflows 128 bits")]
    CostOverflow,
    #[error("stream line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Errors raised by the online mechanisms while serving a stream.
#[derive(Debug, Error)]
pub enum MechanismError {
    #[error("job {0}: mechanism requires unit weights")]
    NonUnitWeight(u32),
    #[error("job {0}: mechanism requires unit processing times")]
    NonUnitProcessing(u32),
    #[error("job {index}: weight {weight} exceeds the a-priori bound {bound}")]
    WeightAboveBound { index: u32, weight: u128, bound: u128 },
    #[error("job {0}: release time decreased; arrivals must be replayed in order")]
    ReleaseWentBack(u32),
    #[error("job {0}: processing time must be a power of two (normalize first)")]
    NotPowerOfTwo(u32),
    #[error("job {0}: weight must be a power of two (normalize first)")]
    WeightNotPowerOfTwo(u32),
    #[error("arithmetic overflow while serving job {0}")]
    Overflow(u32),
    #[error("sequence machinery: {0}")]
    Sequence(#[from] crate::sequences::SequenceError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// One arriving job: 1-based arrival ordinal, release time, weight, size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Job {
    pub index: u32,
    pub release: u64,
    pub weight: u128,
    pub processing: u64,
}

impl Job {
    pub fn new(index: u32, release: u64, weight: u128, processing: u64) -> Self {
        Job {
            index,
            release,
            weight,
            processing,
        }
    }
}

/// Which fields `normalize` rounds up to powers of two.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NormalizeOptions {
    pub processing: bool,
    pub weights: bool,
}

impl NormalizeOptions {
    pub fn processing_only() -> Self {
        NormalizeOptions {
            processing: true,
            weights: false,
        }
    }

    pub fn weights_only() -> Self {
        NormalizeOptions {
            processing: false,
            weights: true,
        }
    }

    pub fn both() -> Self {
        NormalizeOptions {
            processing: true,
            weights: true,
        }
    }
}

/// An ordered job stream with non-decreasing release times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JobStream {
    jobs: Vec<Job>,
    normalized_processing: bool,
    normalized_weights: bool,
}

impl JobStream {
    pub fn new(jobs: Vec<Job>) -> Result<Self, ModelError> {
        let mut prev_release = 0u64;
        for (pos, job) in jobs.iter().enumerate() {
            let expected = pos as u32 + 1;
            if job.index != expected {
                return Err(ModelError::BadIndex {
                    got: job.index,
                    expected,
                });
            }
            if job.weight == 0 || job.processing == 0 {
                return Err(ModelError::NonPositiveField(job.index));
            }
            if pos > 0 && job.release < prev_release {
                return Err(ModelError::ReleaseOrder {
                    index: job.index,
                    release: job.release,
                    previous: prev_release,
                });
            }
            prev_release = job.release;
        }
        Ok(JobStream {
            jobs,
            normalized_processing: false,
            normalized_weights: false,
        })
    }

    /// Build from (release, weight, processing) triples, indices assigned in order.
    pub fn from_triples(triples: &[(u64, u128, u64)]) -> Result<Self, ModelError> {
        let jobs = triples
            .iter()
            .enumerate()
            .map(|(i, &(r, w, p))| Job::new(i as u32 + 1, r, w, p))
            .collect();
        JobStream::new(jobs)
    }

    pub fn jobs(&self) -> &[Job] {
        &self.jobs
    }

    pub fn job(&self, index: u32) -> &Job {
        &self.jobs[index as usize - 1]
    }

    pub fn len(&self) -> usize {
        self.jobs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jobs.is_empty()
    }

    pub fn p_max(&self) -> u64 {
        self.jobs.iter().map(|j| j.processing).max().unwrap_or(0)
    }

    pub fn w_max(&self) -> u128 {
        self.jobs.iter().map(|j| j.weight).max().unwrap_or(0)
    }

    pub fn total_volume(&self) -> u64 {
        self.jobs.iter().map(|j| j.processing).sum()
    }

    pub fn is_unit_weight(&self) -> bool {
        self.jobs.iter().all(|j| j.weight == 1)
    }

    pub fn is_unit_processing(&self) -> bool {
        self.jobs.iter().all(|j| j.processing == 1)
    }

    pub fn normalized_processing(&self) -> bool {
        self.normalized_processing
    }

    pub fn normalized_weights(&self) -> bool {
        self.normalized_weights
    }

    /// Prefix `sigma[1..len]` of the stream.
    pub fn prefix(&self, len: usize) -> JobStream {
        JobStream {
            jobs: self.jobs[..len.min(self.jobs.len())].to_vec(),
            normalized_processing: self.normalized_processing,
            normalized_weights: self.normalized_weights,
        }
    }

    /// Round the selected fields up to the next power of two. Release times
    /// are already integral here, so they pass through unchanged. Idempotent,
    /// and inflates no field by more than a factor of two.
    pub fn normalize(&self, opts: NormalizeOptions) -> JobStream {
        let jobs = self
            .jobs
            .iter()
            .map(|j| Job {
                index: j.index,
                release: j.release,
                weight: if opts.weights {
                    j.weight.next_power_of_two()
                } else {
                    j.weight
                },
                processing: if opts.processing {
                    j.processing.next_power_of_two()
                } else {
                    j.processing
                },
            })
            .collect();
        JobStream {
            jobs,
            normalized_processing: self.normalized_processing || opts.processing,
            normalized_weights: self.normalized_weights || opts.weights,
        }
    }

    /// Parse the shared stream format: one job per line,
    /// `index release weight processing`, decimal fields, `#` comments.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, ModelError> {
        let mut jobs = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = trimmed.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(ModelError::Parse {
                    line: lineno + 1,
                    reason: format!("expected 4 fields, got {}", fields.len()),
                });
            }
            let parse_err = |what: &str| ModelError::Parse {
                line: lineno + 1,
                reason: format!("bad {what} field"),
            };
            jobs.push(Job {
                index: fields[0].parse().map_err(|_| parse_err("index"))?,
                release: fields[1].parse().map_err(|_| parse_err("release"))?,
                weight: fields[2].parse().map_err(|_| parse_err("weight"))?,
                processing: fields[3].parse().map_err(|_| parse_err("processing"))?,
            });
        }
        JobStream::new(jobs)
    }

    pub fn write<W: Write>(&self, mut writer: W) -> Result<(), ModelError> {
        for j in &self.jobs {
            writeln!(writer, "{} {} {} {}", j.index, j.release, j.weight, j.processing)?;
        }
        Ok(())
    }
}

/// A committed menu choice: job, machine, interval, price.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Assignment {
    pub job: u32,
    pub machine: u32,
    pub interval: Interval,
    pub price: u128,
}

impl Assignment {
    pub fn start(&self) -> u64 {
        self.interval.begin()
    }

    /// Completion time `start + p`; needs the job's processing time.
    pub fn completion(&self, processing: u64) -> u64 {
        self.interval.begin() + processing
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Overlap {
        machine: u32,
        first: u32,
        second: u32,
    },
    EarlyStart {
        job: u32,
        start: u64,
        release: u64,
    },
    TooShort {
        job: u32,
        processing: u64,
        interval: Interval,
    },
    Missing {
        job: u32,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Overlap { machine, first, second } => {
                write!(f, "jobs {first} and {second} overlap on machine {machine}")
            }
            Violation::EarlyStart { job, start, release } => {
                write!(f, "job {job} starts at {start} before release {release}")
            }
            Violation::TooShort { job, processing, interval } => {
                write!(f, "job {job} (p={processing}) does not fit interval {interval}")
            }
            Violation::Missing { job } => write!(f, "job {job} has no assignment"),
        }
    }
}

/// Every violation found in a schedule; empty iff the schedule is valid.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidityReport {
    pub violations: Vec<Violation>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// A non-preemptive schedule: one assignment per job, in index order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schedule {
    pub machines: u32,
    pub assignments: Vec<Assignment>,
}

impl Schedule {
    pub fn assignment(&self, job: u32) -> Option<&Assignment> {
        // Assignments are committed in arrival order.
        self.assignments
            .binary_search_by_key(&job, |a| a.job)
            .ok()
            .map(|i| &self.assignments[i])
    }

    pub fn completion(&self, stream: &JobStream, job: u32) -> Option<u64> {
        self.assignment(job)
            .map(|a| a.completion(stream.job(job).processing))
    }

    /// The objective `sum_j w_j * c_j`.
    pub fn weighted_completion_sum(&self, stream: &JobStream) -> Result<u128, ModelError> {
        let mut total: u128 = 0;
        for job in stream.jobs() {
            let a = self
                .assignment(job.index)
                .ok_or(ModelError::MissingAssignment(job.index))?;
            let c = a.completion(job.processing) as u128;
            let term = job.weight.checked_mul(c).ok_or(ModelError::CostOverflow)?;
            total = total.checked_add(term).ok_or(ModelError::CostOverflow)?;
        }
        Ok(total)
    }

    /// Report every overlap, promptness and feasibility violation.
    pub fn validate(&self, stream: &JobStream) -> ValidityReport {
        let mut report = ValidityReport::default();
        let mut by_machine: HashMap<u32, Vec<&Assignment>> = HashMap::new();
        for job in stream.jobs() {
            match self.assignment(job.index) {
                None => report.violations.push(Violation::Missing { job: job.index }),
                Some(a) => {
                    if a.start() < job.release {
                        report.violations.push(Violation::EarlyStart {
                            job: job.index,
                            start: a.start(),
                            release: job.release,
                        });
                    }
                    if job.processing > a.interval.length() {
                        report.violations.push(Violation::TooShort {
                            job: job.index,
                            processing: job.processing,
                            interval: a.interval,
                        });
                    }
                    by_machine.entry(a.machine).or_default().push(a);
                }
            }
        }
        for (machine, mut list) in by_machine {
            list.sort_by_key(|a| (a.interval.begin(), a.job));
            // Track the furthest-reaching interval seen so far; sorting by
            // begin alone would miss overlaps inside a long early interval.
            let mut reach: Option<(u64, u32)> = None;
            for a in list {
                if let Some((end, holder)) = reach {
                    if a.interval.begin() < end {
                        report.violations.push(Violation::Overlap {
                            machine,
                            first: holder,
                            second: a.job,
                        });
                    }
                }
                if reach.is_none_or(|(end, _)| a.interval.end() > end) {
                    reach = Some((a.interval.end(), a.job));
                }
            }
        }
        report
            .violations
            .sort_by_key(|v| match v {
                Violation::Missing { job } => (*job, 0),
                Violation::EarlyStart { job, .. } => (*job, 1),
                Violation::TooShort { job, .. } => (*job, 2),
                Violation::Overlap { second, .. } => (*second, 3),
            });
        report
    }
}

/// A contiguous run of one job on one machine in a preemptive schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Run {
    pub start: u64,
    pub end: u64,
    pub job: u32,
}

/// Preemptive schedule as per-machine run lists plus completion times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PreemptiveSchedule {
    pub machines: u32,
    pub runs: Vec<Vec<Run>>,
    completions: Vec<u64>,
}

impl PreemptiveSchedule {
    pub fn new(machines: u32, runs: Vec<Vec<Run>>, completions: Vec<u64>) -> Self {
        PreemptiveSchedule {
            machines,
            runs,
            completions,
        }
    }

    pub fn completion(&self, job: u32) -> u64 {
        self.completions[job as usize - 1]
    }

    pub fn completions(&self) -> &[u64] {
        &self.completions
    }

    /// `sum_j w_j * c*_j`.
    pub fn weighted_cost(&self, stream: &JobStream) -> Result<u128, ModelError> {
        let mut total: u128 = 0;
        for job in stream.jobs() {
            if self.completions.len() < job.index as usize {
                return Err(ModelError::MissingAssignment(job.index));
            }
            let c = self.completion(job.index) as u128;
            let term = job.weight.checked_mul(c).ok_or(ModelError::CostOverflow)?;
            total = total.checked_add(term).ok_or(ModelError::CostOverflow)?;
        }
        Ok(total)
    }

    /// Check slice accounting: every job gets exactly `p_j` units, none
    /// before release, one job per machine at a time, and no job on two
    /// machines at once.
    pub fn validate(&self, stream: &JobStream) -> Result<(), String> {
        let mut received = vec![0u64; stream.len()];
        for (m, runs) in self.runs.iter().enumerate() {
            let mut last_end = 0u64;
            let mut sorted = runs.clone();
            sorted.sort_by_key(|r| r.start);
            for run in &sorted {
                if run.start < last_end {
                    return Err(format!("machine {} runs overlap at {}", m + 1, run.start));
                }
                last_end = last_end.max(run.end);
                let job = stream.job(run.job);
                if run.start < job.release {
                    return Err(format!("job {} runs before release", run.job));
                }
                received[run.job as usize - 1] += run.end - run.start;
            }
        }
        for job in stream.jobs() {
            if received[job.index as usize - 1] != job.processing {
                return Err(format!(
                    "job {} received {} of {} units",
                    job.index,
                    received[job.index as usize - 1],
                    job.processing
                ));
            }
        }
        // No job on two machines in the same slice.
        for job in stream.jobs() {
            let mut own: Vec<(u64, u64)> = self
                .runs
                .iter()
                .flatten()
                .filter(|r| r.job == job.index)
                .map(|r| (r.start, r.end))
                .collect();
            own.sort_unstable();
            for pair in own.windows(2) {
                if pair[1].0 < pair[0].1 {
                    return Err(format!("job {} runs on two machines at once", job.index));
                }
            }
        }
        Ok(())
    }
}

/// An online mechanism serving jobs one at a time, committing immediately.
pub trait OnlineMechanism {
    fn machines(&self) -> u32;

    /// Serve the next arrival and irrevocably commit its assignment.
    fn serve(&mut self, job: &Job) -> Result<Assignment, MechanismError>;
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines;

    #[test]
    fn normalize_rounds_up_to_powers_of_two() {
        let stream = JobStream::from_triples(&[(0, 1, 3), (0, 1, 4), (1, 5, 5)]).unwrap();
        let normed = stream.normalize(NormalizeOptions::processing_only());
        assert_eq!(normed.job(1).processing, 4);
        assert_eq!(normed.job(2).processing, 4);
        assert_eq!(normed.job(3).processing, 8);
        assert_eq!(normed.job(3).weight, 5, "weights untouched");
        assert_eq!(normed.p_max(), 8);
        let full = stream.normalize(NormalizeOptions::both());
        assert_eq!(full.job(3).weight, 8);
        assert!(full.normalized_weights());
    }

    #[test]
    fn normalize_is_idempotent_and_bounded() {
        let stream = JobStream::from_triples(&[(0, 3, 7), (2, 9, 1), (5, 1, 1000)]).unwrap();
        let once = stream.normalize(NormalizeOptions::both());
        let twice = once.normalize(NormalizeOptions::both());
        assert_eq!(once.jobs(), twice.jobs());
        for (raw, cooked) in stream.jobs().iter().zip(once.jobs()) {
            assert!(cooked.processing >= raw.processing);
            assert!(cooked.processing < raw.processing * 2);
            assert!(cooked.weight >= raw.weight);
            assert!(cooked.weight < raw.weight * 2);
            assert_eq!(cooked.release, raw.release);
        }
    }

    #[test]
    fn weighted_completion_sum_basics() {
        let stream = JobStream::from_triples(&[(0, 1, 2)]).unwrap();
        let schedule = Schedule {
            machines: 1,
            assignments: vec![Assignment {
                job: 1,
                machine: 1,
                interval: Interval::new(0, 2),
                price: 0,
            }],
        };
        assert_eq!(schedule.weighted_completion_sum(&stream).unwrap(), 2);

        let two = JobStream::from_triples(&[(0, 1, 1), (0, 1, 1)]).unwrap();
        let schedule = Schedule {
            machines: 1,
            assignments: vec![
                Assignment {
                    job: 1,
                    machine: 1,
                    interval: Interval::new(0, 1),
                    price: 0,
                },
                Assignment {
                    job: 2,
                    machine: 1,
                    interval: Interval::new(1, 2),
                    price: 0,
                },
            ],
        };
        assert_eq!(schedule.weighted_completion_sum(&two).unwrap(), 3);
    }

    /// FIFO on the introduction instance: one length-64 job then 8 unit jobs.
    #[test]
    fn fifo_cost_on_intro_instance() {
        let mut triples = vec![(0u64, 1u128, 64u64)];
        triples.extend(std::iter::repeat_n((0, 1, 1), 8));
        let stream = JobStream::from_triples(&triples).unwrap();
        let schedule = baselines::fifo(&stream, 1);
        assert!(schedule.validate(&stream).is_valid());
        assert_eq!(schedule.weighted_completion_sum(&stream).unwrap(), 612);
    }

    #[test]
    fn validate_reports_each_violation_kind() {
        let stream = JobStream::from_triples(&[(0, 1, 1), (0, 1, 1), (5, 1, 1), (5, 1, 4)]).unwrap();
        let schedule = Schedule {
            machines: 1,
            assignments: vec![
                Assignment {
                    job: 1,
                    machine: 1,
                    interval: Interval::new(0, 1),
                    price: 0,
                },
                Assignment {
                    job: 2,
                    machine: 1,
                    interval: Interval::new(0, 1),
                    price: 0,
                },
                Assignment {
                    job: 3,
                    machine: 1,
                    interval: Interval::new(3, 4),
                    price: 0,
                },
                Assignment {
                    job: 4,
                    machine: 1,
                    interval: Interval::new(10, 12),
                    price: 0,
                },
            ],
        };
        let report = schedule.validate(&stream);
        assert_eq!(report.violations.len(), 3);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Overlap { first: 1, second: 2, .. })));
        // Overlaps hiding inside a long earlier interval are still found.
        let nested = Schedule {
            machines: 1,
            assignments: vec![
                Assignment {
                    job: 1,
                    machine: 1,
                    interval: Interval::new(0, 10),
                    price: 0,
                },
                Assignment {
                    job: 2,
                    machine: 1,
                    interval: Interval::new(1, 2),
                    price: 0,
                },
                Assignment {
                    job: 3,
                    machine: 1,
                    interval: Interval::new(3, 4),
                    price: 0,
                },
            ],
        };
        let tiny = JobStream::from_triples(&[(0, 1, 10), (0, 1, 1), (0, 1, 1)]).unwrap();
        let nested_report = nested.validate(&tiny);
        assert_eq!(
            nested_report
                .violations
                .iter()
                .filter(|v| matches!(v, Violation::Overlap { .. }))
                .count(),
            2,
            "both nested overlaps reported"
        );
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::EarlyStart { job: 3, .. })));
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::TooShort { job: 4, .. })));
    }

    #[test]
    fn stream_roundtrip_through_text_format() {
        let stream =
            JobStream::from_triples(&[(0, 1, 3), (2, 170141183460469231731687303715884105727, 1)])
                .unwrap();
        let mut buf = Vec::new();
        stream.write(&mut buf).unwrap();
        let back = JobStream::read(&buf[..]).unwrap();
        assert_eq!(stream.jobs(), back.jobs());
    }

    #[test]
    fn stream_rejects_decreasing_releases() {
        assert!(JobStream::from_triples(&[(5, 1, 1), (3, 1, 1)]).is_err());
        assert!(JobStream::from_triples(&[(0, 0, 1)]).is_err());
    }
}
