use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use gssm_core::radar::{measure_range, run_estimator, simulate_truth, EstimatorKind, ScenarioConfig, TruthMode};
use gssm_core::report::{compute_rmse, monte_carlo, run_comparison, write_truth_csv, MonteCarloReport};
use gssm_core::{dimension_report, PriorMode, RmseSummary};

const THREADS_VAR: &str = "GSSM_LAB_THREADS";

#[derive(Parser)]
#[command(name = "gssm-lab", version, about = "Radar tracking experiments with EKF, sliding-window and GSSM estimators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate truth and range measurements.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value = "truth.csv")]
        out: PathBuf,
    },
    /// Run one estimator and write its estimate series.
    Run {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, value_parser = parse_estimator)]
        estimator: EstimatorKind,
        /// Defaults to `<estimator>.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured estimators on shared data and summarize RMSE.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long, default_value_t = 1.0)]
        trailing: f64,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
    /// Average RMSE over consecutive seeds.
    MonteCarlo {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Defaults to `runs` from the config.
        #[arg(long)]
        runs: Option<usize>,
        #[arg(long, default_value_t = 1.0)]
        trailing: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print window dimensions for the unified and partitioned estimators.
    Dims {
        #[arg(long)]
        nb: usize,
        #[arg(long)]
        nc: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        w: usize,
    },
}

#[derive(Args)]
struct ScenarioArgs {
    /// JSON scenario document. Flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    w: Option<usize>,
    #[arg(long, value_parser = parse_truth_mode)]
    truth_mode: Option<TruthMode>,
    #[arg(long, value_parser = parse_prior_mode)]
    prior_mode: Option<PriorMode>,
    /// Comma-separated list, e.g. `ekf,gssm,fgo`.
    #[arg(long, value_delimiter = ',', value_parser = parse_estimator)]
    estimators: Option<Vec<EstimatorKind>>,
}

fn parse_estimator(s: &str) -> Result<EstimatorKind, String> {
    s.parse().map_err(|e: gssm_core::Error| e.to_string())
}

fn parse_prior_mode(s: &str) -> Result<PriorMode, String> {
    s.parse().map_err(|e: gssm_core::Error| e.to_string())
}

fn parse_truth_mode(s: &str) -> Result<TruthMode, String> {
    match s {
        "sampled" => Ok(TruthMode::Sampled),
        "exact" => Ok(TruthMode::Exact),
        other => Err(format!("unknown truth mode `{other}` (expected sampled or exact)")),
    }
}

impl ScenarioArgs {
    fn resolve(&self) -> Result<ScenarioConfig> {
        let mut cfg = match &self.config {
            Some(path) => ScenarioConfig::load(path)
                .with_context(|| format!("reading config {}", path.display()))?,
            None => ScenarioConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(steps) = self.steps {
            cfg.steps = steps;
        }
        if let Some(w) = self.w {
            cfg.w = w;
        }
        if let Some(mode) = self.truth_mode {
            cfg.truth_mode = mode;
        }
        if let Some(mode) = self.prior_mode {
            cfg.prior_mode = mode;
        }
        if let Some(estimators) = &self.estimators {
            cfg.estimators = estimators.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_json(path: &Path, report: &MonteCarloReport) -> Result<()> {
    let mut out = create(path)?;
    serde_json::to_writer_pretty(&mut out, report)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

fn print_summaries(summaries: &[RmseSummary]) {
    println!("{:<8} {:>14} {:>14} {:>14}", "", "rmse x", "rmse v", "rmse h");
    for s in summaries {
        println!("{:<8} {:>14.6} {:>14.6} {:>14.6}", s.estimator, s.mean.x, s.mean.v, s.mean.h);
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var(THREADS_VAR) {
        let threads: usize = value
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| usage(format!("{THREADS_VAR} must be a positive integer, got `{value}`")))?;
        builder = builder.num_threads(threads);
    }
    Ok(builder.build()?)
}

#[derive(Debug)]
struct Usage(String);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: String) -> anyhow::Error {
    Usage(msg).into()
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Simulate { scenario, out } => {
            let cfg = scenario.resolve()?;
            let truth = simulate_truth(&cfg, cfg.seed);
            let meas = measure_range(&truth, cfg.range_variance, cfg.seed)?;
            let mut file = create(&out)?;
            write_truth_csv(&truth, &meas, &mut file)?;
            file.flush()?;
        }
        Command::Run { scenario, estimator, out } => {
            let cfg = scenario.resolve()?;
            let truth = simulate_truth(&cfg, cfg.seed);
            let meas = measure_range(&truth, cfg.range_variance, cfg.seed)?;
            let series = run_estimator(estimator, &cfg, &truth, &meas)?;
            let out = out.unwrap_or_else(|| PathBuf::from(format!("{estimator}.csv")));
            let mut file = create(&out)?;
            series.write_csv(&mut file)?;
            file.flush()?;
        }
        Command::Compare { scenario, trailing, out_dir } => {
            let cfg = scenario.resolve()?;
            fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            let mut summaries = Vec::new();
            for series in run_comparison(&cfg, cfg.seed)? {
                let mut file = create(&out_dir.join(format!("{}.csv", series.estimator)))?;
                series.write_csv(&mut file)?;
                file.flush()?;
                let rmse = compute_rmse(&series, trailing)?;
                summaries.push(RmseSummary::from_runs(&series.estimator, trailing, vec![rmse])?);
            }
            let report = MonteCarloReport {
                runs: 1,
                first_seed: cfg.seed,
                steps: cfg.steps,
                summaries,
            };
            write_json(&out_dir.join("summary.json"), &report)?;
            print_summaries(&report.summaries);
        }
        Command::MonteCarlo { scenario, runs, trailing, out } => {
            let cfg = scenario.resolve()?;
            let runs = runs.unwrap_or(cfg.runs);
            if runs == 0 {
                return Err(usage("--runs must be at least 1".into()));
            }
            let report = thread_pool()?.install(|| monte_carlo(&cfg, runs, trailing))?;
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            println!("{} runs from seed {}, {} steps, trailing {}", runs, cfg.seed, cfg.steps, trailing);
            print_summaries(&report.summaries);
        }
        Command::Dims { nb, nc, m, w } => {
            for report in dimension_report(nb, nc, m, w)? {
                println!("{report}");
            }
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<gssm_core::Error>() {
        Some(e) if e.is_numerical() => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
