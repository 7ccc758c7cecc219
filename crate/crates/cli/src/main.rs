mod config;
mod output;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use krotov::{iterate, OptimizationRecord, Termination};
use rayon::prelude::*;

use config::{load, RunConfig};

const EXIT_ERROR: u8 = 1;
const EXIT_NOT_MONOTONIC: u8 = 2;

#[derive(Parser)]
#[command(name = "krotov", version, about = "Krotov optimization of quantum control problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one configuration and write its artifacts.
    Run(RunArgs),
    /// Repeat a run for each value of one parameter.
    Scan(ScanArgs),
    /// Check a configuration and build its problem without iterating.
    Validate(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides `seed` of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides `stop.max_iter` of the config.
    #[arg(long)]
    max_iter: Option<usize>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Overrides `output.dir` of the config.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Exit with status 2 if any iteration increased J.
    #[arg(long)]
    strict_monotonic: bool,
    /// Print the resolved problem and stop before writing anything.
    #[arg(long)]
    dry_run: bool,
}

#[derive(Args)]
struct ScanArgs {
    #[command(flatten)]
    run: RunArgs,
    #[arg(long)]
    param: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<f64>,
}

fn resolve(common: &CommonArgs) -> Result<(RunConfig, PathBuf)> {
    let loaded = load(&common.config)?;
    let mut config = loaded.config;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(max_iter) = common.max_iter {
        config.stop.max_iter = max_iter;
    }
    Ok((config, loaded.base_dir))
}

fn out_dir(args: &RunArgs, config: &RunConfig, base_dir: &Path) -> PathBuf {
    match &args.out_dir {
        Some(dir) => dir.clone(),
        None => base_dir.join(&config.output.dir),
    }
}

fn optimize(config: &RunConfig, base_dir: &Path, dir: &Path) -> Result<OptimizationRecord> {
    let problem = config.problem(base_dir)?;
    let record = iterate(&problem, &config.options())?;
    output::write_run(dir, &problem, &record)?;
    Ok(record)
}

fn describe(record: &OptimizationRecord) -> String {
    let last = record.last();
    format!(
        "{} iterations ({}), J = {:.10e}, J_T = {:.10e}, {} monotonicity violations",
        record.completed(),
        output::termination_label(record.termination),
        last.j,
        last.j_t,
        record.violations()
    )
}

fn status(records: &[&OptimizationRecord], strict: bool) -> ExitCode {
    for rec in records {
        if let Termination::Diverged { last_good } = rec.termination {
            eprintln!("error: J became non-finite; last good iteration {last_good}");
            return ExitCode::from(EXIT_ERROR);
        }
    }
    if strict && records.iter().any(|r| !r.is_monotonic()) {
        eprintln!("error: monotonicity violated");
        return ExitCode::from(EXIT_NOT_MONOTONIC);
    }
    ExitCode::SUCCESS
}

fn run(args: &RunArgs) -> Result<ExitCode> {
    let (config, base_dir) = resolve(&args.common)?;
    let dir = out_dir(args, &config, &base_dir);
    if args.dry_run {
        let problem = config.problem(&base_dir)?;
        println!("{config}");
        println!("dimension   {} ({} states)", problem.initial.dim(), problem.n_states());
        println!("output      {} (not written)", dir.display());
        return Ok(ExitCode::SUCCESS);
    }
    let record = optimize(&config, &base_dir, &dir)?;
    println!("{}", describe(&record));
    Ok(status(&[&record], args.strict_monotonic))
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(value) = std::env::var("KROTOV_THREADS") {
        let n: usize = value.trim().parse().with_context(|| format!("KROTOV_THREADS = {value:?} is not a count"))?;
        if n == 0 {
            bail!("KROTOV_THREADS must be at least 1");
        }
        builder = builder.num_threads(n);
    }
    Ok(builder.build()?)
}

fn scan(args: &ScanArgs) -> Result<ExitCode> {
    let (config, base_dir) = resolve(&args.run.common)?;
    if !config::SCANNABLE.contains(&args.param.as_str()) {
        bail!("`{}` cannot be scanned; scannable parameters: {}", args.param, config::SCANNABLE.join(", "));
    }
    if args.values.is_empty() {
        eprintln!("warning: empty value list for {}; nothing to do", args.param);
        return Ok(ExitCode::SUCCESS);
    }
    let configs = args.values.iter().map(|&v| config.with_parameter(&args.param, v)).collect::<Result<Vec<_>>>()?;
    let root = out_dir(&args.run, &config, &base_dir);
    let dirs: Vec<PathBuf> = args.values.iter().map(|v| root.join(format!("{}={v}", args.param))).collect();
    if args.run.dry_run {
        for (c, d) in configs.iter().zip(&dirs) {
            c.problem(&base_dir)?;
            println!("{} (not written)", d.display());
        }
        return Ok(ExitCode::SUCCESS);
    }
    let records = thread_pool()?
        .install(|| configs.par_iter().zip(dirs.par_iter()).map(|(c, d)| optimize(c, &base_dir, d)).collect::<Result<Vec<_>>>())?;
    let rows: Vec<(f64, &OptimizationRecord)> = args.values.iter().copied().zip(records.iter()).collect();
    output::write_summary(&root, &args.param, &rows)?;
    for (value, rec) in &rows {
        println!("{} = {value}: {}", args.param, describe(rec));
    }
    Ok(status(&records.iter().collect::<Vec<_>>(), args.run.strict_monotonic))
}

fn validate(common: &CommonArgs) -> Result<ExitCode> {
    let (config, base_dir) = resolve(common)?;
    let problem = config.problem(&base_dir)?;
    println!("{}: ok (dimension {}, {} states)", common.config.display(), problem.initial.dim(), problem.n_states());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => run(args),
        Command::Scan(args) => scan(args),
        Command::Validate(args) => validate(args),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e:#}");
        ExitCode::from(EXIT_ERROR)
    })
}
