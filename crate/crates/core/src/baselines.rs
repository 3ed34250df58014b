//! Reference schedulers the mechanisms are measured against: preemptive SRPT
//! and WSRPT, offline Smith's rule (SPT) at a common release, FIFO, and an
//! exhaustive preemptive optimum for tiny instances.

use std::cmp::Ordering;
use std::collections::HashMap;

use num_bigint::BigUint;
use thiserror::Error;

use crate::model::{Assignment, Job, JobStream, PreemptiveSchedule, Run, Schedule};
use crate::sequences::Interval;

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("offline Smith ordering needs a common release time; job {0} differs")]
    MixedRelease(u32),
    #[error("instance too large for the exhaustive oracle: {0}")]
    OracleBounds(String),
}

/// Compare `a.weight / a.remaining` against `b.weight / b.remaining` by
/// cross-multiplication, falling back to bignum if 128 bits overflow.
fn density_cmp(w_a: u128, rem_a: u64, w_b: u128, rem_b: u64) -> Ordering {
    match (
        w_a.checked_mul(rem_b as u128),
        w_b.checked_mul(rem_a as u128),
    ) {
        (Some(lhs), Some(rhs)) => lhs.cmp(&rhs),
        _ => {
            let lhs = BigUint::from(w_a) * BigUint::from(rem_b);
            let rhs = BigUint::from(w_b) * BigUint::from(rem_a);
            lhs.cmp(&rhs)
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Rule {
    ShortestRemaining,
    WeightedDensity,
}

/// Event-driven preemptive simulation: between releases and completions the
/// running set is fixed, so time advances in blocks rather than unit slices.
fn preemptive_sim(stream: &JobStream, machines: u32, rule: Rule) -> PreemptiveSchedule {
    let n = stream.len();
    let m = machines as usize;
    let mut remaining: Vec<u64> = stream.jobs().iter().map(|j| j.processing).collect();
    let mut completions = vec![0u64; n];
    let mut runs: Vec<Vec<Run>> = vec![Vec::new(); m];
    let mut active: Vec<usize> = Vec::new();
    let mut next_arrival = 0usize;
    let mut machine_of: HashMap<usize, usize> = HashMap::new();
    let mut t = 0u64;
    let mut done = 0usize;

    while done < n {
        while next_arrival < n && stream.jobs()[next_arrival].release <= t {
            active.push(next_arrival);
            next_arrival += 1;
        }
        if active.is_empty() {
            t = stream.jobs()[next_arrival].release;
            continue;
        }
        // Priority order; lower index wins ties.
        active.sort_by(|&a, &b| match rule {
            Rule::ShortestRemaining => remaining[a].cmp(&remaining[b]).then(a.cmp(&b)),
            Rule::WeightedDensity => density_cmp(
                stream.jobs()[b].weight,
                remaining[b],
                stream.jobs()[a].weight,
                remaining[a],
            )
            .then(a.cmp(&b)),
        });
        let running: Vec<usize> = active.iter().copied().take(m).collect();

        // Sticky machine assignment: keep machines across segments, hand
        // freed ones to newcomers in index order.
        machine_of.retain(|job, _| running.contains(job));
        let mut used: Vec<bool> = vec![false; m];
        for &q in machine_of.values() {
            used[q] = true;
        }
        for &job in &running {
            machine_of.entry(job).or_insert_with(|| {
                let q = used.iter().position(|&u| !u).expect("machine available");
                used[q] = true;
                q
            });
        }

        let mut step = running.iter().map(|&j| remaining[j]).min().unwrap();
        if next_arrival < n {
            step = step.min(stream.jobs()[next_arrival].release - t);
        }
        debug_assert!(step >= 1);

        for &job in &running {
            let q = machine_of[&job];
            match runs[q].last_mut() {
                Some(run) if run.job == job as u32 + 1 && run.end == t => run.end = t + step,
                _ => runs[q].push(Run {
                    start: t,
                    end: t + step,
                    job: job as u32 + 1,
                }),
            }
            remaining[job] -= step;
            if remaining[job] == 0 {
                completions[job] = t + step;
                done += 1;
            }
        }
        active.retain(|&j| remaining[j] > 0);
        t += step;
    }
    PreemptiveSchedule::new(machines, runs, completions)
}

/// Shortest remaining processing time, preemptive.
pub fn srpt(stream: &JobStream, machines: u32) -> PreemptiveSchedule {
    preemptive_sim(stream, machines, Rule::ShortestRemaining)
}

/// Highest weight over remaining processing time, preemptive.
pub fn wsrpt(stream: &JobStream, machines: u32) -> PreemptiveSchedule {
    preemptive_sim(stream, machines, Rule::WeightedDensity)
}

/// Offline list schedule in Smith-ratio order (weight / processing time,
/// descending; ties by index) for instances released at a common time.
pub fn spt_offline(stream: &JobStream, machines: u32) -> Result<Schedule, BaselineError> {
    let common = stream.jobs().first().map(|j| j.release).unwrap_or(0);
    if let Some(j) = stream.jobs().iter().find(|j| j.release != common) {
        return Err(BaselineError::MixedRelease(j.index));
    }
    let mut order: Vec<&Job> = stream.jobs().iter().collect();
    order.sort_by(|a, b| {
        density_cmp(b.weight, b.processing, a.weight, a.processing).then(a.index.cmp(&b.index))
    });
    let mut free = vec![common; machines as usize];
    let mut assignments = Vec::with_capacity(order.len());
    for job in order {
        let q = free
            .iter()
            .enumerate()
            .min_by_key(|(i, &f)| (f, *i))
            .map(|(i, _)| i)
            .unwrap();
        let start = free[q];
        free[q] = start + job.processing;
        assignments.push(Assignment {
            job: job.index,
            machine: q as u32 + 1,
            interval: Interval::new(start, start + job.processing),
            price: 0,
        });
    }
    assignments.sort_by_key(|a| a.job);
    Ok(Schedule {
        machines,
        assignments,
    })
}

/// First-in-first-out: each job starts at the earliest time a machine frees
/// up at or after its release, in arrival order.
pub fn fifo(stream: &JobStream, machines: u32) -> Schedule {
    let mut free = vec![0u64; machines as usize];
    let mut assignments = Vec::with_capacity(stream.len());
    for job in stream.jobs() {
        let q = free
            .iter()
            .enumerate()
            .min_by_key(|(i, &f)| (f, *i))
            .map(|(i, _)| i)
            .unwrap();
        let start = free[q].max(job.release);
        free[q] = start + job.processing;
        assignments.push(Assignment {
            job: job.index,
            machine: q as u32 + 1,
            interval: Interval::new(start, start + job.processing),
            price: 0,
        });
    }
    Schedule {
        machines,
        assignments,
    }
}

const ORACLE_MAX_JOBS: usize = 6;
const ORACLE_MAX_VOLUME: u64 = 24;
const ORACLE_MAX_MACHINES: u32 = 2;
const ORACLE_MAX_RELEASE: u64 = 32;

/// Exhaustive minimum of `sum w_j c_j` over preemptive schedules, via
/// unit-slice search with memoization on (time, remaining-work vector).
/// Only idle-free schedules are explored; shifting work earlier never hurts,
/// so the optimum is preserved.
pub fn brute_force_opt_preemptive(
    stream: &JobStream,
    machines: u32,
) -> Result<(PreemptiveSchedule, u128), BaselineError> {
    let n = stream.len();
    if n > ORACLE_MAX_JOBS {
        return Err(BaselineError::OracleBounds(format!("{n} jobs")));
    }
    if stream.total_volume() > ORACLE_MAX_VOLUME {
        return Err(BaselineError::OracleBounds(format!(
            "total volume {}",
            stream.total_volume()
        )));
    }
    if machines > ORACLE_MAX_MACHINES {
        return Err(BaselineError::OracleBounds(format!("{machines} machines")));
    }
    if stream.jobs().iter().any(|j| j.release > ORACLE_MAX_RELEASE) {
        return Err(BaselineError::OracleBounds("release too late".into()));
    }

    let releases: Vec<u64> = stream.jobs().iter().map(|j| j.release).collect();
    let weights: Vec<u128> = stream.jobs().iter().map(|j| j.weight).collect();
    let m = machines as usize;
    let mut memo: HashMap<(u64, [u8; ORACLE_MAX_JOBS]), u128> = HashMap::new();

    fn key(t: u64, rem: &[u8]) -> (u64, [u8; ORACLE_MAX_JOBS]) {
        let mut arr = [0u8; ORACLE_MAX_JOBS];
        arr[..rem.len()].copy_from_slice(rem);
        (t, arr)
    }

    fn subsets(avail: &[usize], size: usize) -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let total = avail.len();
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize == size {
                out.push(
                    (0..total)
                        .filter(|&i| mask & (1 << i) != 0)
                        .map(|i| avail[i])
                        .collect(),
                );
            }
        }
        out
    }

    fn solve(
        t: u64,
        rem: &mut Vec<u8>,
        releases: &[u64],
        weights: &[u128],
        m: usize,
        memo: &mut HashMap<(u64, [u8; ORACLE_MAX_JOBS]), u128>,
    ) -> u128 {
        if rem.iter().all(|&r| r == 0) {
            return 0;
        }
        let avail: Vec<usize> = (0..rem.len())
            .filter(|&j| rem[j] > 0 && releases[j] <= t)
            .collect();
        if avail.is_empty() {
            let t_next = (0..rem.len())
                .filter(|&j| rem[j] > 0)
                .map(|j| releases[j])
                .min()
                .unwrap();
            return solve(t_next, rem, releases, weights, m, memo);
        }
        let k = key(t, rem);
        if let Some(&cached) = memo.get(&k) {
            return cached;
        }
        let q = m.min(avail.len());
        let mut best = u128::MAX;
        for subset in subsets(&avail, q) {
            let mut finish_cost = 0u128;
            for &j in &subset {
                rem[j] -= 1;
                if rem[j] == 0 {
                    finish_cost += weights[j] * (t as u128 + 1);
                }
            }
            let tail = solve(t + 1, rem, releases, weights, m, memo);
            for &j in &subset {
                rem[j] += 1;
            }
            best = best.min(finish_cost + tail);
        }
        memo.insert(k, best);
        best
    }

    let mut rem: Vec<u8> = stream.jobs().iter().map(|j| j.processing as u8).collect();
    let best = solve(0, &mut rem, &releases, &weights, m, &mut memo);

    // Replay the DFS, committing the first subset that achieves the optimum,
    // to reconstruct one optimal schedule.
    let mut rem: Vec<u8> = stream.jobs().iter().map(|j| j.processing as u8).collect();
    let mut t = 0u64;
    let mut completions = vec![0u64; n];
    let mut runs: Vec<Vec<Run>> = vec![Vec::new(); m];
    let mut outstanding = best;
    while rem.iter().any(|&r| r > 0) {
        let avail: Vec<usize> = (0..n).filter(|&j| rem[j] > 0 && releases[j] <= t).collect();
        if avail.is_empty() {
            t = (0..n)
                .filter(|&j| rem[j] > 0)
                .map(|j| releases[j])
                .min()
                .unwrap();
            continue;
        }
        let q = m.min(avail.len());
        let mut committed = false;
        for subset in subsets(&avail, q) {
            let mut finish_cost = 0u128;
            for &j in &subset {
                rem[j] -= 1;
                if rem[j] == 0 {
                    finish_cost += weights[j] * (t as u128 + 1);
                }
            }
            let tail = solve(t + 1, &mut rem, &releases, &weights, m, &mut memo);
            if finish_cost + tail == outstanding {
                for (slot, &j) in subset.iter().enumerate() {
                    match runs[slot].last_mut() {
                        Some(run) if run.job == j as u32 + 1 && run.end == t => run.end = t + 1,
                        _ => runs[slot].push(Run {
                            start: t,
                            end: t + 1,
                            job: j as u32 + 1,
                        }),
                    }
                    if rem[j] == 0 {
                        completions[j] = t + 1;
                    }
                }
                outstanding = tail;
                committed = true;
                break;
            }
            for &j in &subset {
                rem[j] += 1;
            }
        }
        debug_assert!(committed, "replay must find the memoized optimum");
        t += 1;
    }

    Ok((PreemptiveSchedule::new(machines, runs, completions), best))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stream(triples: &[(u64, u128, u64)]) -> JobStream {
        JobStream::from_triples(triples).unwrap()
    }

    #[test]
    fn srpt_examples() {
        let s = stream(&[(0, 1, 2), (0, 1, 1)]);
        let ps = srpt(&s, 1);
        assert_eq!(ps.completion(1), 3);
        assert_eq!(ps.completion(2), 1);
        ps.validate(&s).unwrap();

        let single = stream(&[(3, 1, 5)]);
        assert_eq!(srpt(&single, 1).completion(1), 8);

        let s = stream(&[(0, 1, 4), (1, 1, 1)]);
        let ps = srpt(&s, 1);
        assert_eq!(ps.completion(1), 5, "long job preempted at t=1");
        assert_eq!(ps.completion(2), 2);
        ps.validate(&s).unwrap();
    }

    #[test]
    fn wsrpt_reduces_to_srpt_on_unit_weights() {
        let s = stream(&[(0, 1, 3), (1, 1, 1), (2, 1, 4), (2, 1, 2)]);
        assert_eq!(srpt(&s, 2).completions(), wsrpt(&s, 2).completions());
    }

    #[test]
    fn wsrpt_prefers_heavy_unit_jobs() {
        let s = stream(&[(0, 1, 1), (0, 1, 1), (0, 1, 1), (0, 1, 1), (0, 8, 1)]);
        let ps = wsrpt(&s, 1);
        assert_eq!(ps.completion(5), 1, "heavy job runs first");

        // Weighted intro example: 4 unit-weight unit jobs, then weight 64.
        let s = stream(&[(0, 1, 1), (0, 1, 1), (0, 1, 1), (0, 1, 1), (0, 64, 1)]);
        let ps = wsrpt(&s, 1);
        assert_eq!(ps.weighted_cost(&s).unwrap(), 64 + 2 + 3 + 4 + 5);
    }

    #[test]
    fn spt_offline_orders_by_smith_ratio() {
        let s = stream(&[(0, 1, 4), (0, 1, 1), (0, 1, 2)]);
        let sched = spt_offline(&s, 1).unwrap();
        assert_eq!(sched.completion(&s, 2).unwrap(), 1);
        assert_eq!(sched.completion(&s, 3).unwrap(), 3);
        assert_eq!(sched.completion(&s, 1).unwrap(), 7);
        assert!(sched.validate(&s).is_valid());

        let mixed = stream(&[(0, 1, 1), (1, 1, 1)]);
        assert!(spt_offline(&mixed, 1).is_err());
    }

    #[test]
    fn fifo_examples() {
        let single = stream(&[(3, 1, 5)]);
        assert_eq!(fifo(&single, 1).completion(&single, 1).unwrap(), 8);

        let two = stream(&[(0, 1, 1), (0, 1, 1)]);
        let sched = fifo(&two, 2);
        assert_eq!(sched.completion(&two, 1).unwrap(), 1);
        assert_eq!(sched.completion(&two, 2).unwrap(), 1);
    }

    #[test]
    fn brute_force_handles_tiny_instances() {
        let s = stream(&[(0, 1, 2)]);
        let (ps, cost) = brute_force_opt_preemptive(&s, 1).unwrap();
        assert_eq!(cost, 2);
        assert_eq!(ps.completion(1), 2);
        ps.validate(&s).unwrap();

        // Matches SRPT on a small unit-weight single-machine instance.
        let s = stream(&[(0, 1, 3), (1, 1, 1), (1, 1, 2)]);
        let (ps, cost) = brute_force_opt_preemptive(&s, 1).unwrap();
        ps.validate(&s).unwrap();
        assert_eq!(cost, srpt(&s, 1).weighted_cost(&s).unwrap());

        let too_big = stream(&[(0, 1, 30)]);
        assert!(brute_force_opt_preemptive(&too_big, 1).is_err());
    }

    #[test]
    fn srpt_dominates_same_or_smaller_jobs() {
        // vol(D(j))/m <= c*_j for D(j) = earlier, no-bigger jobs.
        let s = stream(&[(0, 1, 4), (0, 1, 2), (1, 1, 2), (3, 1, 1), (3, 1, 8)]);
        for m in [1u32, 2] {
            let ps = srpt(&s, m);
            ps.validate(&s).unwrap();
            for j in s.jobs() {
                let vol: u64 = s
                    .jobs()
                    .iter()
                    .filter(|o| o.index <= j.index && o.processing <= j.processing)
                    .map(|o| o.processing)
                    .sum();
                assert!(ps.completion(j.index) as u128 * m as u128 >= vol as u128);
            }
        }
    }
}
