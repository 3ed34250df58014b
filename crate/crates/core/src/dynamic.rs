//! Dynamic interval-menu mechanism for unit-weight jobs.
//!
//! The mechanism keeps a state `A = <A_1, ..., A_l>` of disjoint realized
//! `S_k(t)` sequences (all but the last are fixed forever; the last is the
//! tentative sequence) plus the set of already-chosen (interval, machine)
//! pairs. An arriving job sees, for free, every unoccupied interval of the
//! current timeline division that starts at or after its release; a rational
//! unit-weight agent takes the earliest one it fits in. After each choice the
//! state is updated by exactly one of four rules, keyed on the job's
//! completion time relative to the end of the tentative sequence.
//!
//! Menus are enumerated as a frontier of strictly increasing lengths, where
//! each length class advances past fully occupied intervals, so a length-p
//! agent finds its argmin within the first log p + 1 entries.

use std::collections::{BTreeMap, HashMap};

use crate::model::{Assignment, Job, JobStream, MechanismError, OnlineMechanism, Schedule};
use crate::sequences::{next_of_class_in_s, next_of_class_in_sinf, s_total_length, Interval};

/// Largest interval-length class the menu walks (2^40 exceeds any horizon
/// a desk-scale experiment reaches).
pub const MAX_CLASS: u32 = 40;

/// One realized sequence `S_order(start)` in the mechanism state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StateEntry {
    pub order: u32,
    pub start: u64,
}

impl StateEntry {
    pub fn end(&self) -> u64 {
        self.start + s_total_length(self.order).expect("state entry in range")
    }

    pub fn last_interval(&self) -> Interval {
        let end = self.end();
        Interval::new(end - (1u64 << self.order), end)
    }
}

/// Which update rule fired after a choice (rows 1-4 of the update table).
pub type UpdateRule = u8;

/// Per-job trace record: menu frontier prefix, the choice and the update.
#[derive(Debug, Clone)]
pub struct DynJobTrace {
    pub job: u32,
    pub release: u64,
    pub processing: u64,
    pub frontier: Vec<(Interval, u32)>,
    pub chosen: Interval,
    pub machine: u32,
    pub rule: UpdateRule,
    pub state_len: u32,
}

impl DynJobTrace {
    pub fn to_line(&self) -> String {
        let frontier: Vec<String> = self
            .frontier
            .iter()
            .map(|(iv, q)| format!("{}@{}", iv, q))
            .collect();
        format!(
            "job={} release={} p={} frontier={} chosen={}@{} rule={} state_len={}",
            self.job,
            self.release,
            self.processing,
            frontier.join("|"),
            self.chosen,
            self.machine,
            self.rule,
            self.state_len
        )
    }
}

/// The dynamic menu mechanism over `m` identical machines.
pub struct DynamicMenu {
    machines: u32,
    entries: Vec<StateEntry>,
    /// Per length class: fixed entries of order >= class, keyed by start.
    fixed_index: Vec<BTreeMap<u64, StateEntry>>,
    /// Per machine: occupied intervals, begin -> end.
    occupied: Vec<HashMap<u64, u64>>,
    last_release: u64,
    served: u32,
}

impl DynamicMenu {
    pub fn new(machines: u32) -> Self {
        assert!(machines >= 1);
        DynamicMenu {
            machines,
            entries: Vec::new(),
            fixed_index: vec![BTreeMap::new(); MAX_CLASS as usize + 1],
            occupied: vec![HashMap::new(); machines as usize],
            last_release: 0,
            served: 0,
        }
    }

    pub fn state_entries(&self) -> &[StateEntry] {
        &self.entries
    }

    pub fn occupied(&self) -> &[HashMap<u64, u64>] {
        &self.occupied
    }

    /// End of the tentative sequence; 0 for the empty state.
    pub fn tentative_end(&self) -> u64 {
        self.entries.last().map(|e| e.end()).unwrap_or(0)
    }

    fn tentative_begin(&self) -> u64 {
        self.entries.last().map(|e| e.start).unwrap_or(0)
    }

    fn is_free(&self, interval: &Interval, machine: usize) -> bool {
        !self.occupied[machine].contains_key(&interval.begin())
    }

    fn free_machines(&self, interval: &Interval) -> Vec<u32> {
        (0..self.machines as usize)
            .filter(|&q| self.is_free(interval, q))
            .map(|q| q as u32 + 1)
            .collect()
    }

    /// Earliest class-`c` interval of the fixed part with begin >= x.
    fn fixed_next_of_class(&self, c: u32, x: u64) -> Option<Interval> {
        let index = &self.fixed_index[c as usize];
        if let Some((_, entry)) = index.range(..=x).next_back() {
            if entry.end() > x {
                if let Ok(Some(iv)) = next_of_class_in_s(entry.order, entry.start, c, x) {
                    return Some(iv);
                }
            }
        }
        if x < u64::MAX {
            if let Some((_, entry)) = index.range(x + 1..).next() {
                return next_of_class_in_s(entry.order, entry.start, c, x)
                    .ok()
                    .flatten();
            }
        }
        None
    }

    /// Earliest class-`c` interval of `tau(state, t)` with begin >= x.
    /// The timeline division always continues into a fresh `S_inf`, so for
    /// classes within range this only fails on 64-bit exhaustion.
    fn tau_next_of_class(&self, t: u64, c: u32, x: u64) -> Result<Interval, MechanismError> {
        if self.entries.is_empty() {
            return Ok(next_of_class_in_sinf(t, c, x.max(t))?);
        }
        let tail = if t >= self.tentative_end() {
            // Fixed part, tentative as-is, then a fresh S_inf(t) (possibly
            // after a gap).
            let tentative = self.entries.last().unwrap();
            let within =
                next_of_class_in_s(tentative.order, tentative.start, c, x).ok().flatten();
            let fresh = next_of_class_in_sinf(t, c, x.max(t))?;
            match within {
                Some(iv) if iv.begin() < fresh.begin() => iv,
                _ => fresh,
            }
        } else {
            // Tentative re-expansion: S_inf(b(A_l)) subsumes the tentative
            // sequence and continues past it.
            next_of_class_in_sinf(self.tentative_begin(), c, x)?
        };
        Ok(match self.fixed_next_of_class(c, x) {
            Some(fixed) if fixed.begin() < tail.begin() => fixed,
            _ => tail,
        })
    }

    /// Menu view of the division: intervals of `tau(state, t)` from `x`,
    /// restricted to begins at or after the arrival time `t`.
    fn partition_next_of_class(
        &self,
        t: u64,
        c: u32,
        x: u64,
    ) -> Result<Interval, MechanismError> {
        self.tau_next_of_class(t, c, x.max(t))
    }

    /// Lazily enumerate the intervals of `tau(state, t)` in time order.
    pub fn tau_intervals(&self, t: u64) -> impl Iterator<Item = Interval> + '_ {
        let mut cursor = 0u64;
        std::iter::from_fn(move || {
            let mut best: Option<Interval> = None;
            for c in 0..=MAX_CLASS {
                if let Ok(iv) = self.tau_next_of_class(t, c, cursor) {
                    if best.as_ref().is_none_or(|b| iv.begin() < b.begin()) {
                        best = Some(iv);
                    }
                }
            }
            let next = best?;
            cursor = next.end();
            Some(next)
        })
    }

    /// Earliest class-`c` interval at or after `t` with a free machine.
    fn earliest_free_of_class(
        &self,
        t: u64,
        c: u32,
    ) -> Result<(Interval, Vec<u32>), MechanismError> {
        let mut x = t;
        loop {
            let iv = self.partition_next_of_class(t, c, x)?;
            let free = self.free_machines(&iv);
            if !free.is_empty() {
                return Ok((iv, free));
            }
            x = iv.begin() + 1;
        }
    }

    /// The menu frontier at time `t`: per strictly increasing length, the
    /// earliest interval of that length with at least one free machine,
    /// presented in ascending start order. `limit` caps the enumeration.
    pub fn frontier(&self, t: u64, limit: usize) -> Result<Vec<(Interval, Vec<u32>)>, MechanismError> {
        let mut per_class: Vec<Option<(Interval, Vec<u32>)>> =
            vec![None; MAX_CLASS as usize + 1];
        for c in 0..=MAX_CLASS {
            per_class[c as usize] = Some(self.earliest_free_of_class(t, c)?);
        }
        let mut out = Vec::new();
        let mut min_class = 0u32;
        while out.len() < limit && min_class <= MAX_CLASS {
            let next = per_class[min_class as usize..]
                .iter()
                .flatten()
                .min_by_key(|(iv, _)| iv.begin())
                .cloned();
            match next {
                Some((iv, free)) => {
                    min_class = iv.length().trailing_zeros() + 1;
                    out.push((iv, free));
                }
                None => break,
            }
        }
        Ok(out)
    }

    /// Rational unit-weight choice: the offered entry minimizing the start
    /// among intervals of length >= p; machine ties to the lowest index.
    pub fn choose_unit_weight(&self, t: u64, p: u64) -> Result<(Interval, u32), MechanismError> {
        let k = p.trailing_zeros();
        let mut best: Option<(Interval, u32)> = None;
        for c in k..=MAX_CLASS {
            let (iv, free) = self.earliest_free_of_class(t, c)?;
            if best.as_ref().is_none_or(|(b, _)| iv.begin() < b.begin()) {
                best = Some((iv, free[0]));
            }
        }
        Ok(best.expect("classes up to MAX_CLASS always offer an interval"))
    }

    /// Apply the four-row update rule for a committed choice; returns the row.
    fn update_state(&mut self, job: &Job, choice: &Interval, machine: u32) -> UpdateRule {
        let p = job.processing;
        let k = p.trailing_zeros();
        let completion = choice.begin() + p;
        let e_last = self.tentative_end();
        let rule: UpdateRule = if !self.entries.is_empty() && completion <= e_last {
            1
        } else if job.release >= e_last {
            2
        } else {
            let d = self.entries.last().expect("nonempty state").order;
            if k <= d {
                3
            } else {
                4
            }
        };
        match rule {
            1 => {}
            2 => {
                self.fix_tentative();
                self.entries.push(StateEntry {
                    order: k,
                    start: job.release,
                });
            }
            3 => {
                self.fix_tentative();
                self.entries.push(StateEntry {
                    order: k,
                    start: e_last,
                });
            }
            _ => {
                // Extension keeps b(A_l); the choice is the new last interval.
                let tentative = self.entries.last_mut().expect("nonempty state");
                debug_assert_eq!(
                    tentative.start + s_total_length(k).unwrap(),
                    choice.end()
                );
                tentative.order = k;
            }
        }
        self.occupied[machine as usize - 1].insert(choice.begin(), choice.end());
        rule
    }

    fn fix_tentative(&mut self) {
        if let Some(&entry) = self.entries.last() {
            for c in 0..=entry.order.min(MAX_CLASS) {
                self.fixed_index[c as usize].insert(entry.start, entry);
            }
        }
    }

    /// Serve one arrival, returning the assignment, the applied update rule
    /// and the frontier prefix for tracing.
    pub fn serve_traced(&mut self, job: &Job) -> Result<(Assignment, DynJobTrace), MechanismError> {
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
        self.served += 1;

        let frontier = self.frontier(job.release, 8)?;
        let (choice, machine) = self.choose_unit_weight(job.release, job.processing)?;
        let rule = self.update_state(job, &choice, machine);
        let trace = DynJobTrace {
            job: job.index,
            release: job.release,
            processing: job.processing,
            frontier: frontier
                .into_iter()
                .map(|(iv, free)| (iv, free[0]))
                .collect(),
            chosen: choice,
            machine,
            rule,
            state_len: self.entries.len() as u32,
        };
        let assignment = Assignment {
            job: job.index,
            machine,
            interval: choice,
            price: 0,
        };
        Ok((assignment, trace))
    }
}

impl OnlineMechanism for DynamicMenu {
    fn machines(&self) -> u32 {
        self.machines
    }

    fn serve(&mut self, job: &Job) -> Result<Assignment, MechanismError> {
        self.serve_traced(job).map(|(a, _)| a)
    }
}

/// Outcome of a full dynamic-menu run.
pub struct DynamicRun {
    pub schedule: Schedule,
    pub trace: Vec<DynJobTrace>,
    pub mechanism: DynamicMenu,
}

/// Serve a normalized unit-weight stream in arrival order.
pub fn run_dynamic(stream: &JobStream, machines: u32) -> Result<DynamicRun, MechanismError> {
    let mut mech = DynamicMenu::new(machines);
    let mut assignments = Vec::with_capacity(stream.len());
    let mut trace = Vec::with_capacity(stream.len());
    for job in stream.jobs() {
        let (assignment, record) = mech.serve_traced(job)?;
        assignments.push(assignment);
        trace.push(record);
    }
    Ok(DynamicRun {
        schedule: Schedule {
            machines,
            assignments,
        },
        trace,
        mechanism: mech,
    })
}
