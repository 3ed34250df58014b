//! End-to-end checks of the harness binary: determinism of artifacts,
//! adversary reproductions, and the distinct exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_promptsched"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|_| panic!("{name} exists"))
}

#[test]
fn identical_seed_produces_identical_artifacts() {
    let base = std::env::temp_dir().join(format!("psched-det-{}", std::process::id()));
    let dir_a = base.join("a");
    let dir_b = base.join("b");
    for dir in [&dir_a, &dir_b] {
        let out = run(&[
            "run",
            "--mechanism",
            "pricing",
            "--baseline",
            "wsrpt",
            "--gen",
            "rand-unitp",
            "--params",
            "n=150,wexp=6,rmax=80",
            "--machines",
            "2",
            "--seed",
            "42",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for artifact in ["trace.txt", "report.txt", "stream.txt", "summary.csv"] {
        assert_eq!(
            read(&dir_a, artifact),
            read(&dir_b, artifact),
            "{artifact} differs between identical runs"
        );
    }
    fs::remove_dir_all(&base).ok();
}

#[test]
fn dynamic_beats_fifo_on_the_intro_instance() {
    let base = std::env::temp_dir().join(format!("psched-intro-{}", std::process::id()));
    let dyn_out = run(&[
        "run",
        "--mechanism",
        "dynamic",
        "--baseline",
        "srpt",
        "--gen",
        "intro",
        "--seed",
        "1",
        "--out",
        base.join("dyn").to_str().unwrap(),
    ]);
    assert!(dyn_out.status.success());
    let report = String::from_utf8(read(&base.join("dyn"), "report.txt")).unwrap();
    let alg: u128 = report
        .lines()
        .find_map(|l| l.strip_prefix("cost_alg: "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(alg < 612, "dynamic cost {alg} must undercut FIFO's 612");
    fs::remove_dir_all(&base).ok();
}

#[test]
fn adversary_static_lb_certifies_the_ratio() {
    let base = std::env::temp_dir().join(format!("psched-adv-{}", std::process::id()));
    let out = run(&[
        "adversary",
        "--kind",
        "static-lb",
        "--n",
        "12",
        "--lb-k",
        "7",
        "--out",
        base.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8(read(&base, "report.txt")).unwrap();
    let field = |key: &str| -> u128 {
        report
            .lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    assert!(field("cost_alg:") > field("cost_opt:"));
    // The emitted stream is loadable and matches the instance size.
    let stream = String::from_utf8(read(&base, "stream.txt")).unwrap();
    assert!(stream.lines().count() > 1 << 12);
    fs::remove_dir_all(&base).ok();
}

#[test]
fn verify_subcommand_reports_sequence_suite() {
    let out = run(&["verify", "--suite", "sequences"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("PASS sequence-identities"));
    assert!(text.contains("PASS worked-examples"));
}

#[test]
fn exit_codes_distinguish_failure_kinds() {
    // Incompatible mechanism/stream: pricing demands unit processing times.
    let out = run(&[
        "run",
        "--mechanism",
        "pricing",
        "--baseline",
        "wsrpt",
        "--gen",
        "rand",
        "--params",
        "n=10,pexp=3",
        "--out",
        "/tmp/psched-reject",
    ]);
    assert_eq!(out.status.code(), Some(2));

    // I/O failure: missing stream file.
    let out = run(&[
        "run",
        "--mechanism",
        "dynamic",
        "--baseline",
        "srpt",
        "--stream",
        "/nonexistent/stream.txt",
        "--out",
        "/tmp/psched-io",
    ]);
    assert_eq!(out.status.code(), Some(3));

    // Usage: unknown suite.
    let out = run(&["verify", "--suite", "nonsense"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_supplies_defaults_and_flags_override() {
    let base = std::env::temp_dir().join(format!("psched-cfg-{}", std::process::id()));
    fs::create_dir_all(&base).unwrap();
    let config = base.join("run.conf");
    fs::write(
        &config,
        "mechanism=dynamic\nbaseline=fifo\ngen=intro\nseed=5\nmachines=1\n",
    )
    .unwrap();
    let out_dir = base.join("out");
    let out = run(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--baseline",
        "srpt", // overrides the config's fifo
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = String::from_utf8(read(&out_dir, "report.txt")).unwrap();
    assert!(report.contains("baseline: srpt"));
    assert!(report.contains("mechanism: dynamic"));
    fs::remove_dir_all(&base).ok();
}
