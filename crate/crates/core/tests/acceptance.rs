//! Acceptance suite: one test per criterion. Each prints a single
//! pass/fail line (visible with `--nocapture`) and asserts the result.

use promptsched::adversary::{gen_lengths_lb, gen_weights_lb, lengths_lb_opt_terms};
use promptsched::bounded::run_combined;
use promptsched::dynamic::{run_dynamic, DynamicMenu};
use promptsched::gen::{random_stream, rng_from_seed, RandomStreamParams};
use promptsched::model::{Job, JobStream};
use promptsched::pricing::run_pricing;
use promptsched::report::ratio_gt;
use promptsched::static_menu::{run_static, static_lb_ratio};
use promptsched::verify;

use rand::Rng;

const SEED: u64 = 0x5EED_CAFE;

fn gate(number: u32, name: &str, passed: bool, details: &str) {
    println!(
        "criterion {number:02} ({name}): {}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "criterion {number} ({name}) failed: {details}");
}

#[test]
fn criterion_01_sequence_identities() {
    let result = verify::sequence_identities();
    gate(1, "sequence identities", result.passed, &result.details);
}

#[test]
fn criterion_02_worked_example_fidelity() {
    let result = verify::worked_examples();
    gate(2, "worked example fidelity", result.passed, &result.details);
}

#[test]
fn criterion_03_choice_oracle_equivalence() {
    let result = verify::choice_oracle(10_000, SEED);
    gate(3, "rational-choice oracle equivalence", result.passed, &result.details);
}

#[test]
fn criterion_04_dynamic_upper_bound() {
    let result = verify::dynamic_perjob_bound(50, SEED);
    gate(4, "dynamic mechanism upper bound", result.passed, &result.details);
}

#[test]
fn criterion_05_lengths_lower_bound() {
    let p_exp = 24u32;
    let c = 1u64;
    let mut mech = DynamicMenu::new(1);
    let run = gen_lengths_lb(&mut mech, c, p_exp).expect("adversary run completes");
    let big_p = 1u128 << p_exp;
    let n_j = 1u128 << run.stop;
    let stop_ok = run.stop <= 16 * c as u32;
    let opt_ok = run.opt_cost <= 4 * big_p * n_j;
    let alg_ok = run.alg_cost > 4 * c as u128 * big_p * n_j;
    let (t1, t2, t3) = lengths_lb_opt_terms(p_exp, run.stop);
    let decomposition_ok = t1 + t2 + t3 == run.opt_cost;
    gate(
        5,
        "length adversary reproduction",
        stop_ok && opt_ok && alg_ok && decomposition_ok,
        &format!(
            "stop={} opt={} alg={} bound={} decomposition={}",
            run.stop,
            run.opt_cost,
            run.alg_cost,
            4 * big_p * n_j,
            t1 + t2 + t3
        ),
    );
}

#[test]
fn criterion_06_weights_lower_bound() {
    let mut ratios: Vec<(u128, u128)> = Vec::new();
    let mut all_ok = true;
    let mut details = String::new();
    for k in [4u32, 8, 16] {
        let mut mech = promptsched::pricing::SlotPricing::new(1);
        let run = gen_weights_lb(&mut mech, k).expect("adversary run completes");
        let stop_ok = run.stop <= 8 * k;
        let opt_ok = run.opt_cost < 1u128 << (k + run.stop + 2);
        let ratio_above_one = run.alg_cost > run.opt_cost;
        let ratio_above_k = run.alg_cost > k as u128 * run.opt_cost;
        details.push_str(&format!(
            "k={k}: stop={} alg={} opt={}; ",
            run.stop, run.alg_cost, run.opt_cost
        ));
        all_ok &= stop_ok && opt_ok && ratio_above_one && ratio_above_k;
        ratios.push((run.alg_cost, run.opt_cost));
    }
    // Measured ratio grows with k.
    for pair in ratios.windows(2) {
        all_ok &= ratio_gt(pair[1].0, pair[1].1, pair[0].0, pair[0].1);
    }
    gate(6, "weight adversary reproduction", all_ok, &details);
}

#[test]
fn criterion_07_static_feedback_lower_bound() {
    let (n, k) = (16u32, 8u32);
    let report = static_lb_ratio(n, k).expect("instance runs");
    let floor = (n as u128) << (2 * n);
    let opt_cap = 8u128 << (2 * n);
    let alg_ok = report.alg_cost >= floor;
    let opt_ok = report.opt_cost <= opt_cap;
    let ratio_ok = report.alg_cost >= 2 * report.opt_cost;
    gate(
        7,
        "static feedback lower bound",
        alg_ok && opt_ok && ratio_ok,
        &format!(
            "alg={} (floor {floor}), opt={} (cap {opt_cap})",
            report.alg_cost, report.opt_cost
        ),
    );
}

#[test]
fn criterion_08_baseline_oracle_suite() {
    let result = verify::baseline_oracles(200, SEED);
    gate(8, "baseline oracle suite", result.passed, &result.details);
}

/// Runs a mechanism family over a stream and returns its assignments.
fn assignments_for(
    kind: &str,
    stream: &JobStream,
    machines: u32,
) -> Vec<promptsched::model::Assignment> {
    match kind {
        "dynamic" => run_dynamic(stream, machines).unwrap().schedule.assignments,
        "pricing" => run_pricing(stream, machines).unwrap().schedule.assignments,
        "static" => run_static(stream, machines, false).unwrap().schedule.assignments,
        "static-feedback" => run_static(stream, machines, true).unwrap().schedule.assignments,
        "combined" => run_combined(stream, machines, 16).unwrap().schedule.assignments,
        _ => unreachable!(),
    }
}

#[test]
fn criterion_09_promptness_and_validity() {
    let mut rng = rng_from_seed(SEED ^ 9);
    let mut checked = 0usize;
    for round in 0..6 {
        let machines = [1u32, 2, 4][round % 3];
        for kind in ["dynamic", "pricing", "static", "static-feedback", "combined"] {
            let params = RandomStreamParams {
                n: rng.gen_range(40..=200usize),
                max_p_exp: if kind == "pricing" { 0 } else { rng.gen_range(0..=7u32) },
                max_w_exp: match kind {
                    "pricing" => rng.gen_range(0..=8u32),
                    "combined" => 4,
                    _ => 0,
                },
                max_release: rng.gen_range(0..=300u64),
            };
            let stream = random_stream(&mut rng, &params);
            let full = match kind {
                "dynamic" => run_dynamic(&stream, machines).unwrap().schedule,
                "pricing" => run_pricing(&stream, machines).unwrap().schedule,
                "static" => run_static(&stream, machines, false).unwrap().schedule,
                "static-feedback" => run_static(&stream, machines, true).unwrap().schedule,
                "combined" => run_combined(&stream, machines, 16).unwrap().schedule,
                _ => unreachable!(),
            };
            let report = full.validate(&stream);
            if !report.is_valid() {
                gate(
                    9,
                    "promptness and validity",
                    false,
                    &format!("{kind} produced {} violations", report.violations.len()),
                );
            }
            // Replaying any prefix reproduces the same assignments, and no
            // assignment is ever revised.
            let cut = stream.len() / 2;
            let prefix = stream.prefix(cut);
            let partial = assignments_for(kind, &prefix, machines);
            if partial[..] != full.assignments[..cut] {
                gate(
                    9,
                    "promptness and validity",
                    false,
                    &format!("{kind} revised assignments on prefix replay"),
                );
            }
            checked += 1;
        }
    }
    gate(
        9,
        "promptness and validity",
        true,
        &format!("{checked} mechanism runs validated and replayed"),
    );
}

/// Move job `index`'s release `delta` later, keeping the stream sorted by
/// release; the delayed agent acts after every job released no later.
fn delay_job(stream: &JobStream, index: u32, delta: u64) -> (JobStream, u32) {
    let mut jobs: Vec<Job> = stream.jobs().to_vec();
    let mut moved = jobs.remove(index as usize - 1);
    moved.release += delta;
    let pos = jobs.partition_point(|j| j.release <= moved.release);
    jobs.insert(pos, moved);
    let reindexed: Vec<(u64, u128, u64)> = jobs
        .iter()
        .map(|j| (j.release, j.weight, j.processing))
        .collect();
    (
        JobStream::from_triples(&reindexed).unwrap(),
        pos as u32 + 1,
    )
}

#[test]
fn criterion_10_no_delay_benefit() {
    let mut rng = rng_from_seed(SEED ^ 10);
    let mut checked = 0usize;
    for round in 0..100 {
        let machines = [1u32, 2][round % 2];
        let params = RandomStreamParams {
            n: rng.gen_range(10..=60usize),
            max_p_exp: rng.gen_range(0..=5u32),
            max_w_exp: 0,
            max_release: rng.gen_range(0..=100u64),
        };
        let stream = random_stream(&mut rng, &params);
        let baseline = run_dynamic(&stream, machines).unwrap();
        let victim = rng.gen_range(1..=stream.len() as u32);
        let original_completion = baseline.schedule.completion(&stream, victim).unwrap();
        for delta in [1u64, 2, 4] {
            let (delayed, new_index) = delay_job(&stream, victim, delta);
            let rerun = run_dynamic(&delayed, machines).unwrap();
            let delayed_completion = rerun.schedule.completion(&delayed, new_index).unwrap();
            if delayed_completion < original_completion {
                gate(
                    10,
                    "no delay benefit",
                    false,
                    &format!(
                        "round {round}: job {victim} delayed by {delta} improved {original_completion} -> {delayed_completion}"
                    ),
                );
            }
            checked += 1;
        }
    }
    gate(
        10,
        "no delay benefit",
        true,
        &format!("{checked} delayed reruns, none improved"),
    );
}
