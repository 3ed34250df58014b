//! Structural property suites shared by the CLI `verify` subcommand and the
//! acceptance tests: sequence identities, menu and trace structure, pricing
//! oracles, per-job competitive bounds, and baseline oracle equalities.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;

use crate::baselines::{brute_force_opt_preemptive, spt_offline, srpt, wsrpt};
use crate::bounded::run_combined;
use crate::dynamic::{run_dynamic, DynamicMenu, StateEntry};
use crate::gen::{gap_free_unit_stream, random_stream, rng_from_seed, RandomStreamParams};
use crate::model::{JobStream, NormalizeOptions, OnlineMechanism};
use crate::pricing::{compute_prices, rational_choice, run_pricing, threshold_rule_choice};
use crate::report::ratio_gt;
use crate::sequences::{
    count_sk_in_sd, count_weight_in_r, r_len, r_sequence_exps, realize_r, realize_s, s_len,
    s_sequence, s_total_length, Interval,
};
use crate::static_menu::run_static;

/// Outcome of one named property check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub details: String,
}

impl CheckResult {
    fn pass(name: &'static str, details: impl Into<String>) -> Self {
        CheckResult {
            name,
            passed: true,
            details: details.into(),
        }
    }

    fn fail(name: &'static str, details: impl Into<String>) -> Self {
        CheckResult {
            name,
            passed: false,
            details: details.into(),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.details
        )
    }
}

macro_rules! ensure {
    ($name:expr, $cond:expr, $($arg:tt)*) => {
        if !$cond {
            return CheckResult::fail($name, format!($($arg)*));
        }
    };
}

fn flog2(x: u64) -> u32 {
    63 - x.leading_zeros()
}

fn clog2(x: u64) -> u32 {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros()
    }
}

/// Counting identities of the S and R families, by full enumeration.
pub fn sequence_identities() -> CheckResult {
    const NAME: &str = "sequence-identities";
    for d in 0..=16u32 {
        let seq = s_sequence(d).expect("S_16 materializes");
        ensure!(
            NAME,
            seq.len() as u64 == s_len(d).unwrap() && s_len(d).unwrap() == (1 << (d + 1)) - 1,
            "|S_{d}| mismatch"
        );
        let total: u64 = seq.iter().sum();
        ensure!(
            NAME,
            total == s_total_length(d).unwrap() && total == (d as u64 + 1) << d,
            "total length of S_{d} is {total}"
        );
        for k in 0..=d {
            let class_sum: u64 = seq.iter().filter(|&&v| v == 1 << k).sum();
            ensure!(
                NAME,
                class_sum == 1 << d,
                "sum of 2^{k} items in S_{d} is {class_sum}, want 2^{d}"
            );
        }
        if d > 0 {
            let prev = s_sequence(d - 1).unwrap();
            ensure!(NAME, seq[..prev.len()] == prev[..], "S_{} prefix broken", d - 1);
        }
    }
    for i in 0..=12u32 {
        let seq = r_sequence_exps(i).expect("R_12 materializes");
        let want_len = r_len(i).unwrap();
        ensure!(NAME, seq.len() as u64 == want_len, "|R_{i}| mismatch");
        if i > 0 {
            ensure!(NAME, want_len == (i as u64 + 2) << (i - 1), "|R_{i}| closed form");
            let prev = r_sequence_exps(i - 1).unwrap();
            ensure!(NAME, seq[..prev.len()] == prev[..], "R_{} prefix broken", i - 1);
            // phi_i introduces only new values.
            let phi_lo = 1u64 << (i - 1);
            ensure!(
                NAME,
                prev.iter().all(|&e| e < phi_lo),
                "phi_{i} values already in R_{}",
                i - 1
            );
        }
        let mut counts: HashMap<u64, u64> = HashMap::new();
        for &e in &seq {
            *counts.entry(e).or_default() += 1;
        }
        for (&exp, &count) in &counts {
            ensure!(
                NAME,
                count_weight_in_r(exp, i).unwrap() == count,
                "count of 2^{exp} in R_{i} is {count}"
            );
        }
    }
    // Appearance counts against a contiguous scan, small orders.
    for d in 0..=10u32 {
        let hay = s_sequence(d).unwrap();
        for k in 0..=d {
            let needle = s_sequence(k).unwrap();
            let scanned = (0..=hay.len() - needle.len())
                .filter(|&i| hay[i..i + needle.len()] == needle[..])
                .count() as u64;
            ensure!(
                NAME,
                scanned == count_sk_in_sd(k, d).unwrap(),
                "S_{k} appears {scanned} times in S_{d}"
            );
        }
    }
    CheckResult::pass(NAME, "S_d identities (d<=16), R_i identities (i<=12)")
}

/// The displayed worked examples, verbatim.
pub fn worked_examples() -> CheckResult {
    const NAME: &str = "worked-examples";
    let s22 = realize_s(2, 2).unwrap();
    let want: Vec<Interval> = [(2, 3), (3, 4), (4, 6), (6, 7), (7, 8), (8, 10), (10, 14)]
        .iter()
        .map(|&(b, e)| Interval::new(b, e))
        .collect();
    ensure!(NAME, s22.intervals == want, "S_2(2) interval list differs");
    let r2: Vec<u64> = r_sequence_exps(2)
        .unwrap()
        .iter()
        .map(|&e| 1u64 << e)
        .collect();
    ensure!(NAME, r2 == vec![1, 1, 2, 1, 1, 2, 4, 8], "R_2 differs: {r2:?}");
    ensure!(NAME, realize_r(2, 0).unwrap().intervals.len() == 8, "R_2 slot count");
    CheckResult::pass(NAME, "S_2(2) and R_2 reproduce the displayed values")
}

/// Argmin of the agent cost over the priced menu equals the threshold rule,
/// on randomized occupancy/time/weight configurations. Any mismatch is
/// minimized before reporting.
pub fn choice_oracle(samples: usize, seed: u64) -> CheckResult {
    const NAME: &str = "pricing-choice-oracle";
    let mut rng = rng_from_seed(seed);
    for sample in 0..samples {
        let machines = rng.gen_range(1..=3usize);
        let t = rng.gen_range(0..=(1u64 << 12) - 700);
        let window = rng.gen_range(1..=512u64);
        let density = rng.gen_range(0..=100u32);
        let mut occupied = vec![BTreeSet::new(); machines];
        for slots in occupied.iter_mut() {
            for x in t..t + window {
                if rng.gen_range(0..100) < density {
                    slots.insert(x);
                }
            }
        }
        let weight = 1u128 << rng.gen_range(0..=10u32);
        let ladder = compute_prices(&occupied, t);
        let got = rational_choice(&occupied, &ladder, t, weight);
        let want = threshold_rule_choice(&occupied, t, weight);
        if (got.slot, got.machine) != want {
            // Minimize: drop occupied slots while the mismatch persists.
            let mut minimal = occupied.clone();
            loop {
                let mut shrunk = false;
                'outer: for q in 0..machines {
                    for &slot in minimal[q].clone().iter() {
                        let mut candidate = minimal.clone();
                        candidate[q].remove(&slot);
                        let ladder = compute_prices(&candidate, t);
                        let got = rational_choice(&candidate, &ladder, t, weight);
                        if (got.slot, got.machine) != threshold_rule_choice(&candidate, t, weight)
                        {
                            minimal = candidate;
                            shrunk = true;
                            break 'outer;
                        }
                    }
                }
                if !shrunk {
                    break;
                }
            }
            let occ: Vec<String> = minimal
                .iter()
                .enumerate()
                .map(|(q, s)| format!("m{}:{:?}", q + 1, s.iter().collect::<Vec<_>>()))
                .collect();
            return CheckResult::fail(
                NAME,
                format!(
                    "sample {sample}: t={t} w={weight} argmin=({},{}) rule=({},{}) occupied={}",
                    got.slot,
                    got.machine,
                    want.0,
                    want.1,
                    occ.join(" ")
                ),
            );
        }
    }
    CheckResult::pass(NAME, format!("argmin == threshold rule on {samples} configurations"))
}

/// Per-job bound for the dynamic menu on gap-free unit-weight streams:
/// c_j <= (6 log2 P_max + 12) c*_j against SRPT.
pub fn dynamic_perjob_bound(streams: usize, seed: u64) -> CheckResult {
    const NAME: &str = "dynamic-perjob-bound";
    let mut rng = rng_from_seed(seed);
    let mut worst: (u128, u128) = (0, 1);
    for run_idx in 0..streams {
        let machines = [1u32, 2, 4][run_idx % 3];
        let n = rng.gen_range(200..=2000usize);
        let max_p_exp = rng.gen_range(0..=10u32);
        let step = rng.gen_range(0..=64u64);
        let stream = gap_free_unit_stream(&mut rng, n, max_p_exp, step, machines);
        let run = match run_dynamic(&stream, machines) {
            Ok(run) => run,
            Err(e) => return CheckResult::fail(NAME, format!("run {run_idx}: {e}")),
        };
        let base = srpt(&stream, machines);
        let factor = (6 * flog2(stream.p_max()) + 12) as u128;
        for job in stream.jobs() {
            let c = run.schedule.completion(&stream, job.index).unwrap() as u128;
            let c_star = base.completion(job.index) as u128;
            if ratio_gt(c, c_star, worst.0, worst.1) {
                worst = (c, c_star);
            }
            if c > factor * c_star {
                return CheckResult::fail(
                    NAME,
                    format!(
                        "run {run_idx} (n={n}, m={machines}, P_max={}): job {} has c={c}, c*={c_star}, bound factor {factor}",
                        stream.p_max(),
                        job.index
                    ),
                );
            }
        }
    }
    CheckResult::pass(
        NAME,
        format!(
            "{} streams; worst per-job ratio {}",
            streams,
            crate::report::ratio_decimal(worst.0, worst.1)
        ),
    )
}

/// SRPT equals the exhaustive preemptive optimum on unit weights; WSRPT stays
/// within twice the optimum on weighted instances; Smith's rule matches the
/// optimum offline at a common release.
pub fn baseline_oracles(instances: usize, seed: u64) -> CheckResult {
    const NAME: &str = "baseline-oracles";
    let mut rng = rng_from_seed(seed);
    let tiny = |rng: &mut rand_chacha::ChaCha8Rng, weighted: bool, common_release: bool| {
        let n = rng.gen_range(1..=6usize);
        let mut triples = Vec::with_capacity(n);
        let mut budget = 24u64;
        let mut release = 0u64;
        for _ in 0..n {
            if budget == 0 {
                break;
            }
            let max_exp = (63 - budget.leading_zeros()).min(3);
            let p = 1u64 << rng.gen_range(0..=max_exp);
            budget -= p;
            if !common_release {
                release += rng.gen_range(0..=3u64);
            }
            let w = if weighted {
                1u128 << rng.gen_range(0..=3u32)
            } else {
                1
            };
            triples.push((release, w, p));
        }
        JobStream::from_triples(&triples).unwrap()
    };
    for i in 0..instances {
        // Unit weights, one machine: exact equality with SRPT.
        let stream = tiny(&mut rng, false, false);
        let (oracle_sched, oracle) = brute_force_opt_preemptive(&stream, 1).unwrap();
        if let Err(e) = oracle_sched.validate(&stream) {
            return CheckResult::fail(NAME, format!("instance {i}: oracle schedule invalid: {e}"));
        }
        let srpt_cost = srpt(&stream, 1).weighted_cost(&stream).unwrap();
        ensure!(
            NAME,
            srpt_cost == oracle,
            "instance {i}: SRPT={srpt_cost} != optimum={oracle}"
        );

        // Weighted, one or two machines: WSRPT within factor two.
        let machines = 1 + (i % 2) as u32;
        let stream = tiny(&mut rng, true, false);
        let (_, oracle) = brute_force_opt_preemptive(&stream, machines).unwrap();
        let wsrpt_cost = wsrpt(&stream, machines).weighted_cost(&stream).unwrap();
        ensure!(
            NAME,
            oracle <= wsrpt_cost && wsrpt_cost <= 2 * oracle,
            "instance {i}: WSRPT={wsrpt_cost} vs optimum={oracle} on m={machines}"
        );

        // Common release, unit weights, one machine: Smith's rule is optimal.
        let stream = tiny(&mut rng, false, true);
        let (_, oracle) = brute_force_opt_preemptive(&stream, 1).unwrap();
        let spt_cost = spt_offline(&stream, 1)
            .unwrap()
            .weighted_completion_sum(&stream)
            .unwrap();
        ensure!(
            NAME,
            spt_cost == oracle,
            "instance {i}: SPT={spt_cost} != optimum={oracle}"
        );
    }
    CheckResult::pass(NAME, format!("{instances} tiny instances per oracle identity"))
}

/// State-trace structure of the dynamic menu: fixed entries are immutable,
/// every sequence's last interval is fully occupied by a job of matching
/// size, and choices sit within the first log p + 1 frontier entries.
pub fn dynamic_trace_structure(seed: u64) -> CheckResult {
    const NAME: &str = "dynamic-trace-structure";
    let mut rng = rng_from_seed(seed);
    for run_idx in 0..12 {
        let machines = [1u32, 2, 4][run_idx % 3];
        let n = rng.gen_range(30..=250usize);
        let max_p_exp = rng.gen_range(0..=7u32);
        let stream = if run_idx % 2 == 0 {
            gap_free_unit_stream(&mut rng, n, max_p_exp, 16, machines)
        } else {
            let params = RandomStreamParams {
                n,
                max_p_exp,
                max_w_exp: 0,
                max_release: rng.gen_range(0..=400u64),
            };
            random_stream(&mut rng, &params)
        };
        let mut mech = DynamicMenu::new(machines);
        let mut previous: Vec<StateEntry> = Vec::new();
        let mut assignments = Vec::with_capacity(stream.len());
        for job in stream.jobs() {
            let frontier = mech.frontier(job.release, 12).unwrap();
            let (trace_choice, _) = mech.choose_unit_weight(job.release, job.processing).unwrap();
            let pos = frontier.iter().position(|(iv, _)| *iv == trace_choice);
            let bound = job.processing.trailing_zeros() as usize + 1;
            ensure!(
                NAME,
                pos.is_some() && pos.unwrap() < bound,
                "run {run_idx}: choice outside the first {bound} frontier entries"
            );
            assignments.push(mech.serve(job).unwrap());
            let entries = mech.state_entries().to_vec();
            if !previous.is_empty() {
                for (i, e) in previous[..previous.len() - 1].iter().enumerate() {
                    ensure!(NAME, entries[i] == *e, "run {run_idx}: fixed entry {i} changed");
                }
                let tail_pos = previous.len() - 1;
                let old = previous[tail_pos];
                let new = entries[tail_pos];
                ensure!(
                    NAME,
                    new.start == old.start && new.order >= old.order,
                    "run {run_idx}: tentative neither kept, fixed nor extended in place"
                );
            }
            previous = entries;
        }
        // Every state entry's last interval is fully occupied by a job
        // whose size equals the sequence order exactly.
        for entry in mech.state_entries() {
            let last = entry.last_interval();
            let occupant = assignments.iter().find(|a| a.interval == last);
            ensure!(
                NAME,
                occupant.is_some(),
                "run {run_idx}: last interval {last} of S_{}({}) unoccupied",
                entry.order,
                entry.start
            );
            let p = stream.job(occupant.unwrap().job).processing;
            ensure!(
                NAME,
                p == 1u64 << entry.order,
                "run {run_idx}: entry S_{}({}) closed by a size-{p} job",
                entry.order,
                entry.start
            );
        }
    }
    CheckResult::pass(NAME, "12 runs: immutability, leaders and frontier bounds hold")
}

/// Volume bounds on dynamic-menu traces: a size-2^d interval occupied by a
/// job released before its enclosing appearance implies at least 2^d volume
/// of no-later, no-bigger jobs inside that appearance on the same machine;
/// the late-release variant gives half that.
pub fn volume_bounds(seed: u64) -> CheckResult {
    const NAME: &str = "dynamic-volume-bounds";
    let mut rng = rng_from_seed(seed);
    let mut checked = 0u64;
    for run_idx in 0..10 {
        let machines = [1u32, 2][run_idx % 2];
        let n = rng.gen_range(50..=400usize);
        let max_p_exp = rng.gen_range(1..=8u32);
        let stream = gap_free_unit_stream(&mut rng, n, max_p_exp, 8, machines);
        let run = run_dynamic(&stream, machines).unwrap();
        let assignments = &run.schedule.assignments;
        for a in assignments {
            let len = a.interval.length();
            let d = len.trailing_zeros();
            if d > 8 {
                continue;
            }
            let span = (d as u64 + 1) << d;
            if a.interval.end() < span {
                continue;
            }
            let appearance_start = a.interval.end() - span;
            let job = stream.job(a.job);
            let strict = job.release <= appearance_start;
            let relaxed = d >= 1
                && job.release <= appearance_start + ((d as u64) << (d - 1));
            if !strict && !relaxed {
                continue;
            }
            let vol: u64 = assignments
                .iter()
                .filter(|b| {
                    b.machine == a.machine
                        && b.job <= a.job
                        && stream.job(b.job).processing <= job.processing
                        && b.interval.begin() >= appearance_start
                        && b.interval.end() <= a.interval.end()
                })
                .map(|b| stream.job(b.job).processing)
                .sum();
            let bound = if strict { 1u64 << d } else { 1u64 << (d - 1) };
            ensure!(
                NAME,
                vol >= bound,
                "run {run_idx}: appearance at {appearance_start} (d={d}) holds volume {vol} < {bound}"
            );
            checked += 1;
        }
    }
    CheckResult::pass(NAME, format!("{checked} occupied appearances checked"))
}

/// Ladder well-formedness on random occupancy: breakpoints strictly
/// decreasing, exchange rates strictly increasing, prices non-decreasing and
/// satisfying the ladder recurrence.
pub fn ladder_wellformed(seed: u64) -> CheckResult {
    const NAME: &str = "pricing-ladder-wellformed";
    let mut rng = rng_from_seed(seed);
    for _ in 0..500 {
        let machines = rng.gen_range(1..=2usize);
        let t = rng.gen_range(0..=2000u64);
        let mut occupied = vec![BTreeSet::new(); machines];
        for slots in occupied.iter_mut() {
            for x in t..t + rng.gen_range(0..200u64) {
                if rng.gen_bool(0.4) {
                    slots.insert(x);
                }
            }
        }
        let ladder = compute_prices(&occupied, t);
        ensure!(NAME, ladder.steps[0].price == 0u32.into(), "anchor price nonzero");
        ensure!(NAME, ladder.steps[0].value_exp == 0, "anchor exchange rate nonzero");
        for pair in ladder.steps.windows(2) {
            ensure!(NAME, pair[0].start > pair[1].start, "b not strictly decreasing");
            ensure!(NAME, pair[0].value_exp < pair[1].value_exp, "v not strictly increasing");
            ensure!(NAME, pair[0].price <= pair[1].price, "prices decreasing");
            let width = num_bigint::BigUint::from(pair[0].start - pair[1].start);
            let step = width * (num_bigint::BigUint::from(1u32) << pair[1].value_exp);
            ensure!(
                NAME,
                pair[1].price == pair[0].price.clone() + step,
                "ladder recurrence broken"
            );
        }
    }
    CheckResult::pass(NAME, "500 random occupancy ladders")
}

/// Holding the configuration fixed, a heavier agent never chooses a later
/// slot than a lighter one.
pub fn pricing_monotonicity(seed: u64) -> CheckResult {
    const NAME: &str = "pricing-choice-monotonicity";
    let mut rng = rng_from_seed(seed);
    for _ in 0..300 {
        let machines = rng.gen_range(1..=2usize);
        let t = rng.gen_range(0..=1000u64);
        let mut occupied = vec![BTreeSet::new(); machines];
        for slots in occupied.iter_mut() {
            for x in t..t + rng.gen_range(0..150u64) {
                if rng.gen_bool(0.5) {
                    slots.insert(x);
                }
            }
        }
        let ladder = compute_prices(&occupied, t);
        let mut previous_slot: Option<u64> = None;
        for w_exp in 0..=9u32 {
            let slot = rational_choice(&occupied, &ladder, t, 1u128 << w_exp).slot;
            if let Some(prev) = previous_slot {
                ensure!(
                    NAME,
                    slot <= prev,
                    "weight 2^{w_exp} chose slot {slot} after lighter agent's {prev}"
                );
            }
            previous_slot = Some(slot);
        }
    }
    CheckResult::pass(NAME, "300 configurations, weights 1..512")
}

/// Per-job bound for the priced-slot mechanism against WSRPT with the
/// explicit constant 32: c_j <= 32 L (LL + log n) c*_j where L = log2 W_max
/// (at least 1) and LL = log2 L.
pub fn pricing_perjob_bound(streams: usize, seed: u64) -> CheckResult {
    const NAME: &str = "pricing-perjob-bound";
    let mut rng = rng_from_seed(seed);
    let mut worst: (u128, u128) = (0, 1);
    for run_idx in 0..streams {
        let machines = [1u32, 2][run_idx % 2];
        let n = rng.gen_range(200..=2000usize);
        let params = RandomStreamParams {
            n,
            max_p_exp: 0,
            max_w_exp: rng.gen_range(1..=8u32),
            max_release: rng.gen_range(0..=(2 * n as u64)),
        };
        let stream = random_stream(&mut rng, &params);
        let run = match run_pricing(&stream, machines) {
            Ok(run) => run,
            Err(e) => return CheckResult::fail(NAME, format!("run {run_idx}: {e}")),
        };
        let base = wsrpt(&stream, machines);
        let l = flog2(stream.w_max() as u64).max(1);
        let ll = if l > 1 { flog2(l as u64) } else { 0 };
        let factor = (32 * l * (ll + clog2(n as u64).max(1))) as u128;
        for job in stream.jobs() {
            let c = run.schedule.completion(&stream, job.index).unwrap() as u128;
            let c_star = base.completion(job.index) as u128;
            if ratio_gt(c, c_star, worst.0, worst.1) {
                worst = (c, c_star);
            }
            ensure!(
                NAME,
                c <= factor * c_star,
                "run {run_idx} (n={n}, W_max={}): job {} c={c} c*={c_star} factor={factor}",
                stream.w_max(),
                job.index
            );
        }
    }
    CheckResult::pass(
        NAME,
        format!(
            "{streams} streams; worst per-job ratio {}",
            crate::report::ratio_decimal(worst.0, worst.1)
        ),
    )
}

/// Per-job bound for the static division against SRPT with the explicit
/// constant 16: c_j <= 16 (log2 P_max + log2 n_max) c*_j, n_max the largest
/// strict size-class census.
pub fn static_perjob_bound(streams: usize, seed: u64) -> CheckResult {
    const NAME: &str = "static-perjob-bound";
    let mut rng = rng_from_seed(seed);
    let mut worst: (u128, u128) = (0, 1);
    for run_idx in 0..streams {
        let machines = [1u32, 2, 4][run_idx % 3];
        let n = rng.gen_range(300..=2000usize);
        let params = RandomStreamParams {
            n,
            max_p_exp: rng.gen_range(2..=8u32),
            max_w_exp: 0,
            max_release: rng.gen_range(0..=(n as u64)),
        };
        let stream = random_stream(&mut rng, &params);
        let run = match run_static(&stream, machines, false) {
            Ok(run) => run,
            Err(e) => return CheckResult::fail(NAME, format!("run {run_idx}: {e}")),
        };
        let base = srpt(&stream, machines);
        let p_max = stream.p_max();
        // n_i counts jobs with 2^i < p <= 2^{i+1}; size-1 jobs fall outside
        // every class by the strict lower bound.
        let mut n_max = 0u64;
        for i in 0..=flog2(p_max) {
            let census = stream
                .jobs()
                .iter()
                .filter(|j| (1u64 << i) < j.processing && j.processing <= (1u64 << (i + 1)))
                .count() as u64;
            n_max = n_max.max(census);
        }
        let factor = (16 * (flog2(p_max) + clog2(n_max.max(2)))) as u128;
        for job in stream.jobs() {
            let c = run.schedule.completion(&stream, job.index).unwrap() as u128;
            let c_star = base.completion(job.index) as u128;
            if ratio_gt(c, c_star, worst.0, worst.1) {
                worst = (c, c_star);
            }
            ensure!(
                NAME,
                c <= factor * c_star,
                "run {run_idx} (n={n}, P_max={p_max}, n_max={n_max}): job {} c={c} c*={c_star} factor={factor}",
                job.index
            );
        }
    }
    CheckResult::pass(
        NAME,
        format!(
            "{streams} streams; worst per-job ratio {}",
            crate::report::ratio_decimal(worst.0, worst.1)
        ),
    )
}

/// Combined mechanism: class discipline on every trace, identity with the
/// static run at B_max = 1, and the desk-scale ratio bound with constant 16.
pub fn combined_ratio_and_discipline(runs: usize, seed: u64) -> CheckResult {
    const NAME: &str = "combined-ratio-discipline";
    let mut rng = rng_from_seed(seed);
    let mut worst = (0u128, 1u128);
    for run_idx in 0..runs {
        let machines = [1u32, 2][run_idx % 2];
        let b_exp = rng.gen_range(1..=6u32);
        let b_max = 1u128 << b_exp;
        let n = rng.gen_range(200..=1000usize);
        let params = RandomStreamParams {
            n,
            max_p_exp: rng.gen_range(0..=8u32),
            max_w_exp: b_exp,
            max_release: rng.gen_range(0..=(n as u64 * 4)),
        };
        let stream = random_stream(&mut rng, &params);
        let run = match run_combined(&stream, machines, b_max) {
            Ok(run) => run,
            Err(e) => return CheckResult::fail(NAME, format!("run {run_idx}: {e}")),
        };
        let report = run.schedule.validate(&stream);
        ensure!(NAME, report.is_valid(), "run {run_idx}: invalid schedule");
        for t in &run.trace {
            ensure!(
                NAME,
                (1u128 << t.copy_class) <= t.weight,
                "run {run_idx}: job {} (w={}) took a class-{} copy",
                t.job,
                t.weight,
                t.copy_class
            );
        }
        let alg = run.schedule.weighted_completion_sum(&stream).unwrap();
        let base = wsrpt(&stream, machines).weighted_cost(&stream).unwrap();
        let factor =
            (16 * (flog2(stream.p_max()).max(1) + clog2(n as u64)) * (b_exp + 1)) as u128;
        ensure!(
            NAME,
            alg <= factor * base,
            "run {run_idx} (n={n}, P_max={}, B_max={b_max}): ALG={alg}, WSRPT={base}, factor={factor}",
            stream.p_max()
        );
        if ratio_gt(alg, base, worst.0, worst.1) {
            worst = (alg, base);
        }
    }
    // Reduction: B_max = 1 reproduces the static run bit for bit.
    let params = RandomStreamParams {
        n: 300,
        max_p_exp: 6,
        max_w_exp: 0,
        max_release: 200,
    };
    let stream = random_stream(&mut rng, &params);
    let combined = run_combined(&stream, 2, 1).unwrap();
    let statik = run_static(&stream, 2, false).unwrap();
    ensure!(NAME, combined.schedule == statik.schedule, "B_max=1 reduction differs");
    CheckResult::pass(
        NAME,
        format!(
            "{runs} runs; worst ratio {}",
            crate::report::ratio_decimal(worst.0, worst.1)
        ),
    )
}

/// SRPT dominance: the volume of no-later, no-bigger jobs never exceeds
/// m * c*_j.
pub fn srpt_volume_property(seed: u64) -> CheckResult {
    const NAME: &str = "srpt-volume-dominance";
    let mut rng = rng_from_seed(seed);
    for _ in 0..20 {
        let machines = rng.gen_range(1..=4u32);
        let params = RandomStreamParams {
            n: rng.gen_range(20..=200usize),
            max_p_exp: rng.gen_range(0..=6u32),
            max_w_exp: 0,
            max_release: rng.gen_range(0..=300u64),
        };
        let stream = random_stream(&mut rng, &params);
        let ps = srpt(&stream, machines);
        if let Err(e) = ps.validate(&stream) {
            return CheckResult::fail(NAME, e);
        }
        for job in stream.jobs() {
            let vol: u64 = stream
                .jobs()
                .iter()
                .filter(|o| o.index <= job.index && o.processing <= job.processing)
                .map(|o| o.processing)
                .sum();
            ensure!(
                NAME,
                vol as u128 <= machines as u128 * ps.completion(job.index) as u128,
                "job {}: vol(D)={vol} > m*c*",
                job.index
            );
        }
    }
    CheckResult::pass(NAME, "20 random streams")
}

/// Both natural loop partitions lose on their warmup instances while the
/// offline optimum stays small.
pub fn warmup_ratios() -> CheckResult {
    const NAME: &str = "warmup-counterexamples";
    use crate::adversary::{gen_warmup, WarmupVariant};
    let d = 8u32;
    let tail = 1u64 << (d / 2);
    for (variant, label) in [
        (WarmupVariant::Ascending, "ascending"),
        (WarmupVariant::Descending, "descending"),
    ] {
        let (stream, mut mech) = gen_warmup(variant, d, tail).unwrap();
        let mut assignments = Vec::new();
        for job in stream.jobs() {
            assignments.push(mech.serve(job).unwrap());
        }
        let schedule = crate::model::Schedule {
            machines: 1,
            assignments,
        };
        ensure!(NAME, schedule.validate(&stream).is_valid(), "{label}: invalid");
        let alg = schedule.weighted_completion_sum(&stream).unwrap();
        let opt = spt_offline(&stream, 1)
            .unwrap()
            .weighted_completion_sum(&stream)
            .unwrap();
        match variant {
            WarmupVariant::Ascending => {
                ensure!(NAME, alg >= tail as u128 * (1 << d), "{label}: ALG below n*2^d");
                let bound =
                    (tail as u128).pow(2) + (d as u128 + 1) * tail as u128 + (1u128 << (d + 2));
                ensure!(NAME, opt <= bound, "{label}: OPT {opt} above {bound}");
            }
            WarmupVariant::Descending => {
                ensure!(NAME, alg >= 1 << (d + d / 2), "{label}: ALG below 2^{{d+d/2}}");
            }
        }
        ensure!(NAME, ratio_gt(alg, opt, 2, 1), "{label}: ratio not above 2");
    }
    CheckResult::pass(NAME, "both loop partitions lose at d=8")
}

/// Normalization properties: idempotent, bounded inflation, metadata kept
/// consistent.
pub fn normalize_properties(seed: u64) -> CheckResult {
    const NAME: &str = "normalize-properties";
    let mut rng = rng_from_seed(seed);
    for _ in 0..200 {
        let n = rng.gen_range(1..=40usize);
        let triples: Vec<(u64, u128, u64)> = {
            let mut release = 0u64;
            (0..n)
                .map(|_| {
                    release += rng.gen_range(0..=9u64);
                    (release, rng.gen_range(1..=1000u128), rng.gen_range(1..=1000u64))
                })
                .collect()
        };
        let stream = JobStream::from_triples(&triples).unwrap();
        let once = stream.normalize(NormalizeOptions::both());
        let twice = once.normalize(NormalizeOptions::both());
        ensure!(NAME, once.jobs() == twice.jobs(), "not idempotent");
        for (raw, cooked) in stream.jobs().iter().zip(once.jobs()) {
            ensure!(
                NAME,
                cooked.processing >= raw.processing && cooked.processing < 2 * raw.processing,
                "processing inflation out of bounds"
            );
            ensure!(
                NAME,
                cooked.weight >= raw.weight && cooked.weight < 2 * raw.weight,
                "weight inflation out of bounds"
            );
        }
        ensure!(
            NAME,
            once.p_max() == once.jobs().iter().map(|j| j.processing).max().unwrap(),
            "P_max stale"
        );
    }
    CheckResult::pass(NAME, "200 random streams")
}

/// The named verification suites exposed by the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Sequences,
    Menus,
    Pricing,
    Bounds,
    Oracles,
}

impl Suite {
    pub fn parse(name: &str) -> Option<Suite> {
        match name {
            "sequences" => Some(Suite::Sequences),
            "menus" => Some(Suite::Menus),
            "pricing" => Some(Suite::Pricing),
            "bounds" => Some(Suite::Bounds),
            "oracles" => Some(Suite::Oracles),
            _ => None,
        }
    }

    pub const ALL: [Suite; 5] = [
        Suite::Sequences,
        Suite::Menus,
        Suite::Pricing,
        Suite::Bounds,
        Suite::Oracles,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Sequences => "sequences",
            Suite::Menus => "menus",
            Suite::Pricing => "pricing",
            Suite::Bounds => "bounds",
            Suite::Oracles => "oracles",
        }
    }
}

/// Run one suite with the default sizes used by the acceptance gate.
pub fn run_suite(suite: Suite, seed: u64) -> Vec<CheckResult> {
    match suite {
        Suite::Sequences => vec![sequence_identities(), worked_examples()],
        Suite::Menus => vec![
            dynamic_trace_structure(seed),
            volume_bounds(seed.wrapping_add(1)),
            warmup_ratios(),
            normalize_properties(seed.wrapping_add(2)),
        ],
        Suite::Pricing => vec![
            ladder_wellformed(seed),
            choice_oracle(10_000, seed.wrapping_add(1)),
            pricing_monotonicity(seed.wrapping_add(2)),
        ],
        Suite::Bounds => vec![
            dynamic_perjob_bound(50, seed),
            pricing_perjob_bound(10, seed.wrapping_add(1)),
            static_perjob_bound(10, seed.wrapping_add(2)),
            combined_ratio_and_discipline(8, seed.wrapping_add(3)),
        ],
        Suite::Oracles => vec![
            baseline_oracles(200, seed),
            srpt_volume_property(seed.wrapping_add(1)),
        ],
    }
}
