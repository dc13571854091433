//! Command-line front end: single planner runs, multi-trial sampler
//! benchmarks and the local-search dimensionality check.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use les_planner::appendix::appendix_verify;
use les_planner::bench::{emit_plot_data, finals_csv, records_csv, run_benchmark, BenchConfig};
use les_planner::env::Environment;
use les_planner::error::{Error, Result};
use les_planner::planner::{plan, PlannerConfig, SamplerKind};

#[derive(Parser)]
#[command(name = "lesplan", version, about = "Sampling-based planner benchmark tool")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one planner instance and write its metrics stream.
    Plan(PlanArgs),
    /// Run seeded trials for several samplers and aggregate them.
    Bench(BenchArgs),
    /// Measure the local-search improvement probability against its bound.
    VerifyAppendix(VerifyArgs),
}

#[derive(Args)]
struct CommonPlanArgs {
    /// Environment JSON file.
    #[arg(long)]
    env: PathBuf,
    /// Wall-clock budget in seconds.
    #[arg(long)]
    time: Option<f64>,
    /// Iteration budget (deterministic mode).
    #[arg(long)]
    iterations: Option<u64>,
    /// Steering range; defaults to the environment's value.
    #[arg(long)]
    eta: Option<f64>,
    /// Probability of the exploitative / relevant-region branch.
    #[arg(long, default_value_t = 0.5)]
    p_les: f64,
    /// Goal bias applied to the informed and uniform branches.
    #[arg(long, default_value_t = 0.05)]
    goal_bias: f64,
}

impl CommonPlanArgs {
    fn build(&self, sampler: SamplerKind) -> Result<(Environment, PlannerConfig)> {
        let env = Environment::from_file(&self.env)?;
        let eta = self
            .eta
            .or(env.eta)
            .ok_or_else(|| Error::InvalidConfig(
                "no steering range: pass --eta or add an \"eta\" field to the environment".into(),
            ))?;
        let mut config = PlannerConfig::new(sampler, eta);
        config.time_budget = self.time;
        config.iteration_budget = self.iterations;
        config.p_les = self.p_les;
        config.goal_bias = self.goal_bias;
        Ok((env, config))
    }
}

#[derive(Args)]
struct PlanArgs {
    #[command(flatten)]
    common: CommonPlanArgs,
    /// Sampling strategy: uniform | informed | relevant | les.
    #[arg(long)]
    sampler: SamplerKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Metrics CSV output path.
    #[arg(long)]
    out: PathBuf,
    /// Optional solution path output (JSON list of states).
    #[arg(long)]
    path_out: Option<PathBuf>,
    /// Optional per-emission diagnostics CSV for the exploitative sampler.
    #[arg(long)]
    les_diag: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    common: CommonPlanArgs,
    /// Comma-separated sampler list, e.g. les,informed,relevant.
    #[arg(long, value_delimiter = ',')]
    samplers: Vec<SamplerKind>,
    #[arg(long)]
    trials: u32,
    #[arg(long, default_value_t = 0)]
    base_seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Output directory for records.csv, finals.csv and summary.csv.
    #[arg(long)]
    out: PathBuf,
    /// Aggregation bucket: seconds under --time, iterations under
    /// --iterations. Defaults to 0.5 s or 10% of the iteration budget.
    #[arg(long)]
    bucket: Option<f64>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated dimensions to test.
    #[arg(long, value_delimiter = ',', default_value = "2,6,10,14")]
    dims: Vec<usize>,
    /// Ball radius as a fraction of the start point's distance from the
    /// optimum, strictly inside (0, 1).
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
    #[arg(long, default_value_t = 100_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Plan(args) => run_plan(args),
        Command::Bench(args) => run_bench(args),
        Command::VerifyAppendix(args) => run_verify(args),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run_plan(args: PlanArgs) -> Result<ExitCode> {
    let (env, mut config) = args.common.build(args.sampler)?;
    config.seed = args.seed;
    config.record_les_diagnostics = args.les_diag.is_some();
    let metrics = plan(&env, &config)?;

    let record = les_planner::bench::TrialRecord {
        env: env.name.clone(),
        trial_id: 0,
        sampler: args.sampler,
        seed: args.seed,
        metrics,
    };
    std::fs::write(&args.out, records_csv(std::slice::from_ref(&record)))?;
    let metrics = record.metrics;

    if let Some(path_out) = &args.path_out {
        match &metrics.path {
            Some(path) => {
                let states: Vec<&[f64]> = path.iter().map(|s| s.coords()).collect();
                std::fs::write(path_out, serde_json::to_string_pretty(&states)?)?;
            }
            None => eprintln!("no solution found; {} not written", path_out.display()),
        }
    }
    if let Some(diag_out) = &args.les_diag {
        let mut csv = String::from("iteration,vertex,subset_size,gamma,improved\n");
        for row in &metrics.les_diagnostics {
            let _ = writeln!(
                csv,
                "{},{},{},{},{}",
                row.iteration,
                row.vertex.index(),
                row.subset_size,
                row.gamma,
                row.improved as u8
            );
        }
        std::fs::write(diag_out, csv)?;
    }

    println!(
        "{}: cost {} after {} iterations, {} rewires, {} vertices ({:.2}s)",
        env.name,
        if metrics.final_cost.is_finite() {
            format!("{:.6}", metrics.final_cost)
        } else {
            "unsolved".into()
        },
        metrics.iterations,
        metrics.rewires,
        metrics.vertices,
        metrics.wall_time_s,
    );
    Ok(ExitCode::SUCCESS)
}

fn run_bench(args: BenchArgs) -> Result<ExitCode> {
    let (env, planner) = args.common.build(SamplerKind::Informed)?;
    let samplers = if args.samplers.is_empty() {
        vec![SamplerKind::Les, SamplerKind::Informed, SamplerKind::RelevantRegion]
    } else {
        args.samplers.clone()
    };
    let bucket = args.bucket.unwrap_or_else(|| match planner.time_budget {
        Some(_) => 0.5,
        None => (planner.iteration_budget.unwrap_or(1000) as f64 / 10.0).max(1.0),
    });
    let config = BenchConfig {
        samplers,
        trials: args.trials,
        base_seed: args.base_seed,
        workers: args.workers,
        planner,
    };
    let outcome = run_benchmark(&env, &config)?;

    std::fs::create_dir_all(&args.out)?;
    std::fs::write(args.out.join("records.csv"), records_csv(&outcome.records))?;
    std::fs::write(args.out.join("finals.csv"), finals_csv(&outcome.records))?;
    if !outcome.records.is_empty() {
        std::fs::write(
            args.out.join("summary.csv"),
            emit_plot_data(&outcome.records, bucket)?,
        )?;
    }
    println!(
        "{} records written to {}",
        outcome.records.len(),
        args.out.display()
    );
    if let Some(failure) = outcome.failure {
        eprintln!("bench aborted after partial results: {failure}");
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

fn run_verify(args: VerifyArgs) -> Result<ExitCode> {
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    println!("dim,empirical_p,bound,r_c,std_err,verdict");
    let mut all_pass = true;
    let mut previous: Option<f64> = None;
    for &d in &args.dims {
        let report = appendix_verify(d, args.ratio, args.samples, &mut rng)?;
        let pass = report.passes();
        all_pass &= pass;
        println!(
            "{},{:.6},{:.6},{:.6},{:.6},{}",
            d,
            report.empirical_p,
            report.bound,
            report.r_c,
            report.std_err,
            if pass { "PASS" } else { "FAIL" }
        );
        if let Some(prev) = previous {
            if report.empirical_p > prev {
                eprintln!("warning: improvement probability rose from {prev} at d={d}");
            }
        }
        previous = Some(report.empirical_p);
    }
    Ok(if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    })
}
