use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use procurement::mechanism::{run_mechanism, verify_mechanism, Mechanism, MechanismConfig, MechanismKind, MechanismOutcome, SuiteConfig};
use procurement::model::{BidVector, Environment, EnvironmentFile};
use procurement::payments::PaymentConfig;
use procurement::search::TimeCache;
use procurement::sim::cases::{self, Example2Report, REVENUE_ORDERING, ROBUSTNESS_DELTAS};
use procurement::sim::{
    emit_results, generate_environment, paired_difference, run_experiment, run_heuristic_study, run_robustness,
    summarize, write_summary, ExperimentConfig, Format, GeneratorSpec, ResultRow, Setting, Stat,
};
use procurement::Result;

#[derive(Parser, Debug)]
#[command(name = "procure", version, about = "Gradual service procurement auctions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one auction and print the plan, payments and expected outcome.
    RunAuction(RunAuction),
    /// Replicated experiment; writes a CSV per setting, JSON lines and a summary.
    Experiment(ExperimentArgs),
    /// Check incentive compatibility, IR and monotonicity on an environment.
    Verify(VerifyArgs),
    /// Rerun a named reference study.
    Reproduce(ReproduceArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Scale {
    Desk,
    Paper,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Suite {
    Quick,
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Case {
    Example2,
    Settings,
    HeuristicRatio,
    Robustness,
    Multimodal,
}

/// `N` or `LO..HI`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct NRange(usize, usize);

impl FromStr for NRange {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let parse = |t: &str| t.trim().parse::<usize>().map_err(|e| format!("bad provider count {t:?}: {e}"));
        match s.split_once("..") {
            Some((a, b)) => Ok(NRange(parse(a)?, parse(b.trim_start_matches('='))?)),
            None => {
                let n = parse(s)?;
                Ok(NRange(n, n))
            }
        }
    }
}

/// Flags that override experiment config fields.
#[derive(Args, Debug, Default)]
struct Overrides {
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Mechanisms to run, comma separated.
    #[arg(long = "mechanism", value_delimiter = ',')]
    mechanisms: Vec<MechanismKind>,
    /// Standard settings 1-4, comma separated.
    #[arg(long = "setting", value_delimiter = ',')]
    settings: Vec<u8>,
    /// Provider count `N` or range `LO..HI`.
    #[arg(long)]
    n: Option<NRange>,
    #[arg(long)]
    replications: Option<usize>,
    #[arg(long)]
    payment_grid_step: Option<f64>,
    #[arg(long, value_enum)]
    scale: Option<Scale>,
}

impl Overrides {
    fn apply(&self, mut config: ExperimentConfig) -> Result<ExperimentConfig> {
        if self.scale == Some(Scale::Paper) {
            config = config.paper_scale();
        }
        if let Some(s) = self.seed {
            config.seed = s;
        }
        if self.jobs.is_some() {
            config.jobs = self.jobs;
        }
        if !self.mechanisms.is_empty() {
            config.mechanisms = self.mechanisms.clone();
        }
        if !self.settings.is_empty() {
            config.settings = self.settings.iter().map(|&k| Setting::standard(k)).collect::<Result<_>>()?;
        }
        if let Some(NRange(lo, hi)) = self.n {
            config.n_min = lo;
            config.n_max = hi;
        }
        if let Some(r) = self.replications {
            config.replications = r;
        }
        if let Some(h) = self.payment_grid_step {
            config.mechanism.payment.grid_step = Some(h);
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Args, Debug)]
struct RunAuction {
    /// Environment JSON; without it one is drawn from `--setting` and `--n`.
    #[arg(long)]
    env: Option<PathBuf>,
    /// Bids, comma separated. Defaults to truthful bids.
    #[arg(long, value_delimiter = ',', conflicts_with = "sample")]
    bids: Vec<f64>,
    /// Redraw true costs from the priors and bid truthfully.
    #[arg(long)]
    sample: bool,
    #[arg(long, default_value = "wgpa")]
    mechanism: MechanismKind,
    /// Mechanism config JSON (time optimizer and payment settings).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    setting: u8,
    #[arg(long, default_value_t = 4)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    payment_grid_step: Option<f64>,
    /// Write the result JSON here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// Experiment config JSON; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Execution traces simulated per outcome.
    #[arg(long)]
    traces: Option<usize>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Environment JSON; defaults to the two-provider example.
    #[arg(long)]
    env: Option<PathBuf>,
    #[arg(long, default_value = "wgpa")]
    mechanism: MechanismKind,
    #[arg(long, value_enum, default_value = "full")]
    suite: Suite,
    /// Mechanism config JSON.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    payment_grid_step: Option<f64>,
    /// Write the report JSON here as well.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReproduceArgs {
    #[arg(value_enum)]
    case: Case,
    /// Directory for result tables.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let outcome = match cli.command {
        Command::RunAuction(a) => run_auction(a),
        Command::Experiment(a) => experiment(a),
        Command::Verify(a) => verify(a),
        Command::Reproduce(a) => reproduce(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn mechanism_config(path: Option<&Path>, grid_step: Option<f64>) -> Result<MechanismConfig> {
    let mut config: MechanismConfig = match path {
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)?,
        None => MechanismConfig::default(),
    };
    if grid_step.is_some() {
        config.payment.grid_step = grid_step;
    }
    Ok(config)
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => std::fs::write(p, text + "\n")?,
        None => println!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct AuctionReport {
    environment: EnvironmentFile,
    bids: Vec<f64>,
    outcome: MechanismOutcome,
}

fn run_auction(a: RunAuction) -> Result<u8> {
    let config = mechanism_config(a.config.as_deref(), a.payment_grid_step)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut env = match &a.env {
        Some(p) => Environment::load(p, &mut rng)?,
        None => {
            let s = Setting::standard(a.setting)?;
            generate_environment(&GeneratorSpec::Correlated, a.n, s.value, s.deadline, &mut rng)?
        }
    };
    if a.sample {
        env = env.resample_costs(&mut rng);
    }
    let bids = if a.bids.is_empty() { BidVector::truthful(&env) } else { BidVector::new(a.bids.clone(), &env)? };
    let outcome = run_mechanism(a.mechanism, &bids, &env, &config, &mut rng)?;
    let report = AuctionReport { environment: env.to_file(), bids: bids.as_slice().to_vec(), outcome };
    write_json(&report, a.out.as_deref())?;
    Ok(0)
}

fn file_stem(label: &str) -> String {
    label.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' || c == '-' { c } else { '_' }).collect()
}

/// CSV per setting, every row as JSON lines, and the summary.
fn write_outputs(dir: &Path, rows: &[ResultRow]) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut labels: Vec<&str> = vec![];
    for r in rows {
        if !labels.contains(&r.setting.as_str()) {
            labels.push(&r.setting);
        }
    }
    for label in labels {
        let subset: Vec<ResultRow> = rows.iter().filter(|r| r.setting == label).cloned().collect();
        emit_results(&subset, Format::Csv, &dir.join(format!("{}.csv", file_stem(label))))?;
    }
    emit_results(rows, Format::JsonLines, &dir.join("results.jsonl"))?;
    write_summary(&summarize(rows), &dir.join("summary.json"))?;
    Ok(())
}

fn fmt_stat(s: Option<Stat>) -> String {
    match s {
        Some(s) => format!("{:>9.4} ± {:.4}", s.mean, s.se),
        None => format!("{:>18}", "-"),
    }
}

fn print_summary(rows: &[ResultRow]) {
    println!(
        "{:<14} {:<15} {:>18} {:>18} {:>18} {:>18}",
        "setting", "mechanism", "revenue", "success", "m", "D_I"
    );
    for e in summarize(rows) {
        println!(
            "{:<14} {:<15} {} {} {} {}",
            e.setting,
            e.mechanism,
            fmt_stat(e.revenue),
            fmt_stat(e.success),
            fmt_stat(e.m),
            fmt_stat(e.d_i)
        );
    }
}

/// Exit status for a finished run: 2 when any solve failed.
fn row_status(rows: &[ResultRow]) -> u8 {
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} of {} solves failed; see the error column", rows.len());
        2
    } else {
        0
    }
}

fn experiment(a: ExperimentArgs) -> Result<u8> {
    let base = match &a.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let mut config = a.overrides.apply(base)?;
    if let Some(t) = a.traces {
        config.traces = t;
    }
    let rows = run_experiment(&config)?;
    write_outputs(&a.out, &rows)?;
    print_summary(&rows);
    println!("wrote {}", a.out.display());
    Ok(row_status(&rows))
}

fn verify(a: VerifyArgs) -> Result<u8> {
    let config = mechanism_config(a.config.as_deref(), a.payment_grid_step)?;
    let mut suite = match a.suite {
        Suite::Quick => SuiteConfig::quick(),
        Suite::Full => SuiteConfig::default(),
    };
    if let Some(s) = a.seed {
        suite.seed = s;
    }
    let env = match &a.env {
        Some(p) => Environment::load(p, &mut ChaCha8Rng::seed_from_u64(suite.seed))?,
        None => cases::example2_env([0.2, 0.2])?,
    };
    let cache = TimeCache::new();
    let mech = Mechanism::for_kind(a.mechanism, &config, Some(&cache))?;
    let report = verify_mechanism(&mech, &env, &suite)?;
    print!("{report}");
    if let Some(p) = &a.out {
        write_json(&report, Some(p))?;
    }
    Ok(if report.passed() { 0 } else { 1 })
}

fn reproduce(a: ReproduceArgs) -> Result<u8> {
    match a.case {
        Case::Example2 => reproduce_example2(&a),
        Case::Settings => reproduce_settings(&a),
        Case::HeuristicRatio => reproduce_heuristic(&a),
        Case::Robustness => reproduce_robustness(&a),
        Case::Multimodal => reproduce_multimodal(&a),
    }
}

fn reproduce_example2(a: &ReproduceArgs) -> Result<u8> {
    let mut payment = PaymentConfig::default().refined();
    if a.overrides.payment_grid_step.is_some() {
        payment.grid_step = a.overrides.payment_grid_step;
    }
    let r = cases::example2_report(&payment, &Default::default())?;
    let p = Example2Report::REFERENCE;
    let lines = [
        ("simultaneous threshold", r.simultaneous_threshold, p.simultaneous_threshold, 0.01),
        ("simultaneous payment", r.simultaneous_payment, p.simultaneous_payment, 0.005),
        ("fixed-delay payment", r.fixed_delay_payment, p.fixed_delay_payment, 0.005),
        ("second invocation prob", r.second_invocation, p.second_invocation, 1e-4),
        ("gradual boundary", r.optimal_boundary, p.optimal_boundary, 0.02),
    ];
    println!("{:<24} {:>10} {:>10} {:>10}", "quantity", "computed", "reference", "tolerance");
    let mut ok = true;
    for (name, got, want, tol) in lines {
        let within = (got - want).abs() <= tol;
        ok &= within;
        println!("{name:<24} {got:>10.4} {want:>10.4} {tol:>10.0e} {}", if within { "ok" } else { "off" });
    }
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        write_json(&r, Some(&dir.join("example2.json")))?;
    }
    Ok(if ok { 0 } else { 1 })
}

fn finish(a: &ReproduceArgs, rows: &[ResultRow]) -> Result<u8> {
    if let Some(dir) = &a.out {
        write_outputs(dir, rows)?;
    }
    Ok(row_status(rows))
}

fn reproduce_settings(a: &ReproduceArgs) -> Result<u8> {
    let config = a.overrides.apply(cases::settings_config(300))?;
    let rows = run_experiment(&config)?;
    print_summary(&rows);
    println!("\npaired revenue differences (z = mean / se)");
    for s in &config.settings {
        for (hi, lo) in REVENUE_ORDERING {
            if !(config.mechanisms.contains(&hi) && config.mechanisms.contains(&lo)) {
                continue;
            }
            if let Some(d) = paired_difference(&rows, &s.label, hi.name(), lo.name(), |r| r.revenue) {
                println!(
                    "{:<10} {:>5} - {:<5} {:>9.4} ± {:.4}  z {:>6.1}",
                    s.label,
                    hi.name(),
                    lo.name(),
                    d.mean,
                    d.se,
                    d.mean / d.se.max(1e-300)
                );
            }
        }
    }
    finish(a, &rows)
}

fn reproduce_heuristic(a: &ReproduceArgs) -> Result<u8> {
    let config = a.overrides.apply(cases::heuristic_config(50))?;
    let rows = run_heuristic_study(&config)?;
    let ratios: Vec<f64> = rows.iter().map(|r| r.ratio).collect();
    let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let mean = Stat::of(&ratios).map_or(f64::NAN, |s| s.mean);
    println!("instances {}  worst ratio {worst:.4}  mean ratio {mean:.4}", rows.len());
    let top = rows.iter().map(|r| r.n).max().unwrap_or(0);
    let at_top: Vec<_> = rows.iter().filter(|r| r.n == top).collect();
    let bnb: f64 = at_top.iter().map(|r| r.bnb_seconds).sum();
    let heur: f64 = at_top.iter().map(|r| r.heuristic_seconds).sum();
    println!(
        "n = {top}: {} instances, branch and bound {:.4} s, heuristic {:.4} s per instance ({:.1}% of exact)",
        at_top.len(),
        bnb / at_top.len().max(1) as f64,
        heur / at_top.len().max(1) as f64,
        100.0 * heur / bnb.max(1e-300)
    );
    if let Some(dir) = &a.out {
        std::fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join("heuristic.csv"))?;
        for r in &rows {
            w.serialize(r)?;
        }
        w.flush()?;
    }
    Ok(0)
}

fn reproduce_robustness(a: &ReproduceArgs) -> Result<u8> {
    let config = a.overrides.apply(cases::robustness_config(100))?;
    let mut rows = run_experiment(&config)?;
    for delta in ROBUSTNESS_DELTAS {
        rows.extend(run_robustness(&config, delta)?);
    }
    print_summary(&rows);
    finish(a, &rows)
}

fn reproduce_multimodal(a: &ReproduceArgs) -> Result<u8> {
    let config = a.overrides.apply(cases::multimodal_config(300))?;
    let rows = run_experiment(&config)?;
    print_summary(&rows);
    let label = &config.settings[0].label;
    let mean = |mech: &str, f: fn(&ResultRow) -> Option<f64>| {
        let v: Vec<f64> = rows.iter().filter(|r| &r.setting == label && r.mechanism == mech).filter_map(f).collect();
        Stat::of(&v).map_or(f64::NAN, |s| s.mean)
    };
    if config.mechanisms.contains(&MechanismKind::Wgpa) && config.mechanisms.contains(&MechanismKind::Bm2) {
        let gain = |f: fn(&ResultRow) -> Option<f64>| mean("wgpa", f) / mean("bm2", f) - 1.0;
        println!(
            "\nwgpa over bm2: success {:+.1}%  revenue {:+.1}%",
            100.0 * gain(|r| r.success),
            100.0 * gain(|r| r.revenue)
        );
    }
    finish(a, &rows)
}
