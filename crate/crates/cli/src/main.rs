//! Harness binary: run a mechanism against a baseline on a stream, verify
//! the structural property suites, reproduce the adversarial lower bounds,
//! or generate stream files.
//!
//! Exit codes: 0 success, 2 incompatible mechanism/stream or bad usage,
//! 3 I/O failure, 4 schedule validity violation.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use promptsched::adversary::{
    gen_lengths_lb, gen_static_lb, gen_warmup, gen_weights_lb, WarmupVariant,
};
use promptsched::baselines::{brute_force_opt_preemptive, fifo, spt_offline, srpt, wsrpt};
use promptsched::bounded::run_combined;
use promptsched::dynamic::{run_dynamic, DynamicMenu};
use promptsched::gen::{intro_lengths, intro_weighted, random_stream, rng_from_seed, RandomStreamParams};
use promptsched::model::{JobStream, NormalizeOptions};
use promptsched::pricing::{run_pricing, SlotPricing};
use promptsched::report::{ratio_decimal, ratio_gt, RatioReport};
use promptsched::static_menu::run_static;
use promptsched::verify::{self, Suite};

#[derive(Parser)]
#[command(name = "promptsched", version, about = "Prompt scheduling mechanisms harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a mechanism against a baseline and report the cost ratio.
    Run(RunArgs),
    /// Run the structural property suites.
    Verify(VerifyArgs),
    /// Generate an adversarial instance and run it against its target.
    Adversary(AdversaryArgs),
    /// Generate a stream file.
    Gen(GenArgs),
}

#[derive(Args, Default)]
struct RunArgs {
    /// dynamic | pricing | combined | static | static-feedback
    #[arg(long)]
    mechanism: Option<String>,
    /// srpt | wsrpt | spt | fifo | brute
    #[arg(long)]
    baseline: Option<String>,
    /// Read the stream from a file (one `index release weight processing` per line).
    #[arg(long)]
    stream: Option<PathBuf>,
    /// Generate the stream: rand | rand-unitw | rand-unitp | intro | intro-weighted
    #[arg(long)]
    gen: Option<String>,
    /// Generator parameters, comma separated K=V pairs (n, pexp, wexp, rmax, l, w).
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    machines: Option<u32>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for trace, report and CSV summary.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Weight bound for the combined mechanism.
    #[arg(long)]
    bmax: Option<u128>,
    /// Enable job feedback (static mechanism only).
    #[arg(long)]
    feedback: bool,
    /// Optional KEY=VALUE config file; explicit flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// sequences | menus | pricing | bounds | oracles | all
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 0x5EED_CAFE)]
    seed: u64,
}

#[derive(Args)]
struct AdversaryArgs {
    /// lengths | weights | warmup-ascending | warmup-descending | static-lb
    #[arg(long)]
    kind: String,
    /// Ratio parameter for the length adversary.
    #[arg(long, default_value_t = 1)]
    c: u64,
    /// Base size exponent for the length adversary (P = 2^p_exp).
    #[arg(long, default_value_t = 24)]
    p_exp: u32,
    /// Scale for the weight adversary.
    #[arg(long, default_value_t = 8)]
    k: u32,
    /// Exponent for the warmup and static-lb instances.
    #[arg(long, default_value_t = 8)]
    d: u32,
    /// Tail length for the ascending warmup instance.
    #[arg(long, default_value_t = 16)]
    tail: u64,
    /// Size parameter n for the static-lb instance.
    #[arg(long, default_value_t = 16)]
    n: u32,
    /// static-lb small-size exponent.
    #[arg(long, default_value_t = 8)]
    lb_k: u32,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// rand | rand-unitw | rand-unitp | intro | intro-weighted
    #[arg(long)]
    name: String,
    #[arg(long)]
    params: Option<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output stream file.
    #[arg(long)]
    out: PathBuf,
}

enum HarnessError {
    Usage(String),
    Io(String),
    Validity(String),
}

impl HarnessError {
    fn code(&self) -> u8 {
        match self {
            HarnessError::Usage(_) => 2,
            HarnessError::Io(_) => 3,
            HarnessError::Validity(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            HarnessError::Usage(m) | HarnessError::Io(m) | HarnessError::Validity(m) => m,
        }
    }
}

fn io_err<E: std::fmt::Display>(e: E) -> HarnessError {
    HarnessError::Io(e.to_string())
}

fn usage<E: std::fmt::Display>(e: E) -> HarnessError {
    HarnessError::Usage(e.to_string())
}

fn parse_params(text: &Option<String>) -> Result<HashMap<String, u128>, HarnessError> {
    let mut map = HashMap::new();
    if let Some(text) = text {
        for pair in text.split(',').filter(|p| !p.trim().is_empty()) {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| usage(format!("bad parameter `{pair}`, want K=V")))?;
            let value: u128 = value
                .trim()
                .parse()
                .map_err(|_| usage(format!("parameter `{key}` is not an integer")))?;
            map.insert(key.trim().to_string(), value);
        }
    }
    Ok(map)
}

fn generate_stream(
    name: &str,
    params: &HashMap<String, u128>,
    seed: u64,
) -> Result<JobStream, HarnessError> {
    let get = |key: &str, default: u128| params.get(key).copied().unwrap_or(default);
    let mut rng = rng_from_seed(seed);
    let stream = match name {
        "rand" | "rand-unitw" | "rand-unitp" => {
            let p = RandomStreamParams {
                n: get("n", 100) as usize,
                max_p_exp: if name == "rand-unitp" { 0 } else { get("pexp", 6) as u32 },
                max_w_exp: if name == "rand-unitw" { 0 } else { get("wexp", 0) as u32 },
                max_release: get("rmax", 100) as u64,
            };
            random_stream(&mut rng, &p)
        }
        "intro" => intro_lengths(get("l", 64) as u64),
        "intro-weighted" => intro_weighted(get("l", 4) as u64, get("w", 64)),
        other => return Err(usage(format!("unknown generator `{other}`"))),
    };
    Ok(stream)
}

/// Completion times and total weighted cost under the named baseline.
fn baseline_costs(
    name: &str,
    stream: &JobStream,
    machines: u32,
) -> Result<(Vec<u64>, u128), HarnessError> {
    match name {
        "srpt" => {
            let ps = srpt(stream, machines);
            let cost = ps.weighted_cost(stream).map_err(usage)?;
            Ok((ps.completions().to_vec(), cost))
        }
        "wsrpt" => {
            let ps = wsrpt(stream, machines);
            let cost = ps.weighted_cost(stream).map_err(usage)?;
            Ok((ps.completions().to_vec(), cost))
        }
        "spt" => {
            let schedule = spt_offline(stream, machines).map_err(usage)?;
            let cost = schedule.weighted_completion_sum(stream).map_err(usage)?;
            let completions = stream
                .jobs()
                .iter()
                .map(|j| schedule.completion(stream, j.index).unwrap())
                .collect();
            Ok((completions, cost))
        }
        "fifo" => {
            let schedule = fifo(stream, machines);
            let cost = schedule.weighted_completion_sum(stream).map_err(usage)?;
            let completions = stream
                .jobs()
                .iter()
                .map(|j| schedule.completion(stream, j.index).unwrap())
                .collect();
            Ok((completions, cost))
        }
        "brute" => {
            let (ps, cost) = brute_force_opt_preemptive(stream, machines).map_err(usage)?;
            Ok((ps.completions().to_vec(), cost))
        }
        other => Err(usage(format!("unknown baseline `{other}`"))),
    }
}

fn merge_config(args: &mut RunArgs) -> Result<(), HarnessError> {
    let Some(path) = &args.config else {
        return Ok(());
    };
    let text = fs::read_to_string(path).map_err(io_err)?;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line `{line}` is not KEY=VALUE")))?;
        let value = value.trim();
        match key.trim() {
            "mechanism" if args.mechanism.is_none() => args.mechanism = Some(value.into()),
            "baseline" if args.baseline.is_none() => args.baseline = Some(value.into()),
            "stream" if args.stream.is_none() => args.stream = Some(value.into()),
            "gen" if args.gen.is_none() => args.gen = Some(value.into()),
            "params" if args.params.is_none() => args.params = Some(value.into()),
            "machines" if args.machines.is_none() => {
                args.machines = Some(value.parse().map_err(usage)?)
            }
            "seed" if args.seed.is_none() => args.seed = Some(value.parse().map_err(usage)?),
            "out" if args.out.is_none() => args.out = Some(value.into()),
            "bmax" if args.bmax.is_none() => args.bmax = Some(value.parse().map_err(usage)?),
            "feedback" => args.feedback = args.feedback || value == "true" || value == "1",
            _ => {}
        }
    }
    Ok(())
}

fn write_file(path: &Path, contents: &str) -> Result<(), HarnessError> {
    fs::write(path, contents).map_err(io_err)
}

fn run_command(mut args: RunArgs) -> Result<(), HarnessError> {
    merge_config(&mut args)?;
    let mechanism = args
        .mechanism
        .clone()
        .ok_or_else(|| usage("--mechanism is required"))?;
    let baseline = args
        .baseline
        .clone()
        .ok_or_else(|| usage("--baseline is required"))?;
    let machines = args.machines.unwrap_or(1);
    let seed = args.seed.unwrap_or(0);
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));

    let raw = match (&args.stream, &args.gen) {
        (Some(path), None) => {
            let file = fs::File::open(path).map_err(io_err)?;
            JobStream::read(std::io::BufReader::new(file)).map_err(io_err)?
        }
        (None, Some(name)) => generate_stream(name, &parse_params(&args.params)?, seed)?,
        _ => return Err(usage("exactly one of --stream or --gen is required")),
    };

    // Normalize at ingestion: sizes for interval mechanisms, weights for the
    // priced ones.
    let stream = match mechanism.as_str() {
        "dynamic" | "static" | "static-feedback" => {
            raw.normalize(NormalizeOptions::processing_only())
        }
        "pricing" => raw.normalize(NormalizeOptions::weights_only()),
        "combined" => raw.normalize(NormalizeOptions::both()),
        other => return Err(usage(format!("unknown mechanism `{other}`"))),
    };

    // Compatibility gates.
    match mechanism.as_str() {
        "dynamic" | "static" | "static-feedback" => {
            if !stream.is_unit_weight() {
                return Err(usage(format!("{mechanism} requires unit weights")));
            }
        }
        "pricing" => {
            if !stream.is_unit_processing() {
                return Err(usage("pricing requires unit processing times"));
            }
        }
        "combined" => {
            if args.bmax.is_none() {
                return Err(usage("combined requires --bmax"));
            }
        }
        _ => unreachable!(),
    }
    if args.feedback && !mechanism.starts_with("static") {
        return Err(usage("--feedback applies to the static mechanism only"));
    }

    let (schedule, trace_lines): (_, Vec<String>) = match mechanism.as_str() {
        "dynamic" => {
            let run = run_dynamic(&stream, machines).map_err(usage)?;
            (
                run.schedule,
                run.trace.iter().map(|t| t.to_line()).collect(),
            )
        }
        "pricing" => {
            let run = run_pricing(&stream, machines).map_err(usage)?;
            (
                run.schedule,
                run.trace.iter().map(|t| t.to_line()).collect(),
            )
        }
        "static" | "static-feedback" => {
            let feedback = args.feedback || mechanism == "static-feedback";
            let run = run_static(&stream, machines, feedback).map_err(usage)?;
            (
                run.schedule,
                run.trace.iter().map(|t| t.to_line()).collect(),
            )
        }
        "combined" => {
            let run = run_combined(&stream, machines, args.bmax.unwrap()).map_err(usage)?;
            (
                run.schedule,
                run.trace.iter().map(|t| t.to_line()).collect(),
            )
        }
        _ => unreachable!(),
    };

    let validity = schedule.validate(&stream);
    if !validity.is_valid() {
        let lines: Vec<String> = validity.violations.iter().map(|v| v.to_string()).collect();
        return Err(HarnessError::Validity(lines.join("; ")));
    }

    let cost_alg = schedule.weighted_completion_sum(&stream).map_err(usage)?;
    let (base_completions, cost_base) = baseline_costs(&baseline, &stream, machines)?;
    let mut max_perjob: (u128, u128) = (0, 1);
    for job in stream.jobs() {
        let c = schedule.completion(&stream, job.index).unwrap() as u128;
        let c_star = base_completions[job.index as usize - 1] as u128;
        if ratio_gt(c, c_star.max(1), max_perjob.0, max_perjob.1) {
            max_perjob = (c, c_star.max(1));
        }
    }
    let report = RatioReport {
        mechanism: mechanism.clone(),
        baseline: baseline.clone(),
        n: stream.len(),
        machines,
        p_max: stream.p_max(),
        w_max: stream.w_max(),
        cost_alg,
        cost_base,
        max_perjob,
        seed,
    };

    fs::create_dir_all(&out_dir).map_err(io_err)?;
    write_file(&out_dir.join("trace.txt"), &(trace_lines.join("\n") + "\n"))?;
    write_file(&out_dir.join("report.txt"), &(report.report_text() + "\n"))?;
    let mut stream_text = Vec::new();
    stream.write(&mut stream_text).map_err(io_err)?;
    write_file(
        &out_dir.join("stream.txt"),
        std::str::from_utf8(&stream_text).unwrap(),
    )?;
    let csv_path = out_dir.join("summary.csv");
    let mut csv = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&csv_path)
        .map_err(io_err)?;
    if csv.metadata().map_err(io_err)?.len() == 0 {
        writeln!(csv, "{}", RatioReport::CSV_HEADER).map_err(io_err)?;
    }
    writeln!(csv, "{}", report.csv_row()).map_err(io_err)?;

    println!(
        "{mechanism} vs {baseline}: cost {cost_alg} / {cost_base} = {}",
        ratio_decimal(cost_alg, cost_base)
    );
    Ok(())
}

fn verify_command(args: VerifyArgs) -> Result<(), HarnessError> {
    let suites: Vec<Suite> = if args.suite == "all" {
        Suite::ALL.to_vec()
    } else {
        vec![Suite::parse(&args.suite)
            .ok_or_else(|| usage(format!("unknown suite `{}`", args.suite)))?]
    };
    for suite in suites {
        for check in verify::run_suite(suite, args.seed) {
            println!("[{}] {}", suite.name(), check.line());
        }
    }
    Ok(())
}

fn adversary_command(args: AdversaryArgs) -> Result<(), HarnessError> {
    let out_dir = args.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    fs::create_dir_all(&out_dir).map_err(io_err)?;
    let mut report: Vec<String> = Vec::new();
    let stream = match args.kind.as_str() {
        "lengths" => {
            let mut mech = DynamicMenu::new(1);
            let run = gen_lengths_lb(&mut mech, args.c, args.p_exp).map_err(usage)?;
            let (num, den) = run.ratio();
            report.push("kind: lengths".to_string());
            report.push(format!("c: {}", args.c));
            report.push(format!("p_exp: {}", args.p_exp));
            report.push(format!("stop_iteration: {}", run.stop));
            report.push(format!("late_counts: {:?}", run.per_iteration));
            report.push(format!("cost_alg: {}", run.alg_cost));
            report.push(format!("cost_opt: {}", run.opt_cost));
            report.push(format!("ratio_exact: {num}/{den}"));
            report.push(format!(
                "ratio_decimal: {}",
                ratio_decimal(run.alg_cost, run.opt_cost)
            ));
            run.stream
        }
        "weights" => {
            let mut mech = SlotPricing::new(1);
            let run = gen_weights_lb(&mut mech, args.k).map_err(usage)?;
            let (num, den) = run.ratio();
            report.push("kind: weights".to_string());
            report.push(format!("k: {}", args.k));
            report.push(format!("stop_index: {}", run.stop));
            report.push(format!("completions: {:?}", run.per_iteration));
            report.push(format!("cost_alg: {}", run.alg_cost));
            report.push(format!("cost_opt: {}", run.opt_cost));
            report.push(format!("ratio_exact: {num}/{den}"));
            report.push(format!(
                "ratio_decimal: {}",
                ratio_decimal(run.alg_cost, run.opt_cost)
            ));
            run.stream
        }
        "warmup-ascending" | "warmup-descending" => {
            let variant = if args.kind.ends_with("ascending") {
                WarmupVariant::Ascending
            } else {
                WarmupVariant::Descending
            };
            let (stream, mut mech) = gen_warmup(variant, args.d, args.tail).map_err(usage)?;
            let mut assignments = Vec::new();
            for job in stream.jobs() {
                assignments.push(
                    promptsched::model::OnlineMechanism::serve(&mut mech, job).map_err(usage)?,
                );
            }
            let schedule = promptsched::model::Schedule {
                machines: 1,
                assignments,
            };
            let alg = schedule.weighted_completion_sum(&stream).map_err(usage)?;
            let opt = spt_offline(&stream, 1)
                .map_err(usage)?
                .weighted_completion_sum(&stream)
                .map_err(usage)?;
            report.push(format!("kind: {}", args.kind));
            report.push(format!("d: {}", args.d));
            report.push(format!("cost_alg: {alg}"));
            report.push(format!("cost_opt: {opt}"));
            report.push(format!("ratio_decimal: {}", ratio_decimal(alg, opt)));
            stream
        }
        "static-lb" => {
            let run = promptsched::static_menu::static_lb_ratio(args.n, args.lb_k).map_err(usage)?;
            report.push("kind: static-lb".to_string());
            report.push(format!("n: {}", args.n));
            report.push(format!("k: {}", args.lb_k));
            report.push(format!("cost_alg: {}", run.alg_cost));
            report.push(format!("cost_opt: {}", run.opt_cost));
            report.push(format!(
                "ratio_decimal: {}",
                ratio_decimal(run.alg_cost, run.opt_cost)
            ));
            gen_static_lb(args.n, args.lb_k).map_err(usage)?
        }
        other => return Err(usage(format!("unknown adversary kind `{other}`"))),
    };
    let mut stream_text = Vec::new();
    stream.write(&mut stream_text).map_err(io_err)?;
    write_file(
        &out_dir.join("stream.txt"),
        std::str::from_utf8(&stream_text).unwrap(),
    )?;
    write_file(&out_dir.join("report.txt"), &(report.join("\n") + "\n"))?;
    for line in &report {
        println!("{line}");
    }
    Ok(())
}

fn gen_command(args: GenArgs) -> Result<(), HarnessError> {
    let stream = generate_stream(&args.name, &parse_params(&args.params)?, args.seed)?;
    let mut text = Vec::new();
    stream.write(&mut text).map_err(io_err)?;
    write_file(&args.out, std::str::from_utf8(&text).unwrap())?;
    println!("wrote {} jobs to {}", stream.len(), args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run_command(args),
        Command::Verify(args) => verify_command(args),
        Command::Adversary(args) => adversary_command(args),
        Command::Gen(args) => gen_command(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
