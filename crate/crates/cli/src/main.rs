//! `synergy` command-line front end: simulate batches, analyse trajectory
//! sets and check configurations.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use synergy_core::analysis::{aggregate_report, Analysis, AnalysisOptions, DiffForm, Record, TimeStatistic};
use synergy_core::io::colmap::ColumnMap;
use synergy_core::io::config::RunConfig;
use synergy_core::io::manifest::Manifest;
use synergy_core::io::report::write_analysis;
use synergy_core::simulator::{run_batch, START};
use synergy_core::Error;

const EXIT_CONFIG: u8 = 2;
const EXIT_IO: u8 = 3;
const EXIT_SIM: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "synergy", version, about = "Prosthetic elbow synergy simulator and reach-metric analysis")]
struct Cli {
    /// Override the configured batch seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Exit 0 even when iterations fail or hit the singularity guard.
    #[arg(long, global = true)]
    keep_going: bool,

    /// Print the default configuration and exit.
    #[arg(long)]
    print_defaults: bool,

    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Run the batch described by a config and write trajectories, manifest
    /// and report under its out_dir (relative paths resolve against the
    /// config file's directory).
    Simulate { config: PathBuf },
    /// Compute the metrics report for a simulated batch directory (with
    /// manifest.json) or a directory of external CSV files (with --colmap).
    Analyze {
        dir: PathBuf,
        /// Reference label for the path-difference metrics.
        #[arg(long)]
        ab: Option<String>,
        /// Column map for external CSV files.
        #[arg(long)]
        colmap: Option<PathBuf>,
        /// Output directory (defaults to DIR).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Report the median task time instead of the mean.
        #[arg(long)]
        median: bool,
        /// Report the per-sample mean path difference instead of the sum.
        #[arg(long)]
        mean_diff: bool,
        /// Skip the anti-alias filter before resampling.
        #[arg(long)]
        no_filter: bool,
    },
    /// Check a config and print the resolved targets and parameters.
    Validate { config: PathBuf },
}

struct Failure {
    code: u8,
    msg: String,
}

impl Failure {
    fn new(code: u8, msg: impl ToString) -> Self {
        Failure { code, msg: msg.to_string() }
    }

    /// I/O problems keep their own code; everything else gets `code`.
    fn from_error(e: Error, code: u8) -> Self {
        let code = if matches!(e, Error::Io { .. }) { EXIT_IO } else { code };
        Failure::new(code, e)
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = if cli.print_defaults {
        print!("{}", RunConfig::defaults_toml());
        Ok(())
    } else {
        match &cli.command {
            Some(Cmd::Simulate { config }) => simulate(config, cli.seed, cli.keep_going),
            Some(Cmd::Analyze { dir, ab, colmap, out, median, mean_diff, no_filter }) => {
                let mut opts = AnalysisOptions { reference: ab.clone(), ..Default::default() };
                if *median {
                    opts.time_statistic = TimeStatistic::Median;
                }
                if *mean_diff {
                    opts.diff_form = DiffForm::Mean;
                }
                if *no_filter {
                    opts.normalize.filter = None;
                }
                analyze(dir, colmap.as_deref(), out.as_deref().unwrap_or(dir), &opts)
            }
            Some(Cmd::Validate { config }) => validate(config, cli.seed),
            None => Err(Failure::new(EXIT_CONFIG, "no command given (see --help)")),
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, Failure> {
    let mut cfg = RunConfig::load(path).map_err(|e| Failure::from_error(e, EXIT_CONFIG))?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate().map_err(|e| Failure::from_error(e, EXIT_CONFIG))?;
    Ok(cfg)
}

fn report_warnings(analysis: &Analysis) {
    for w in &analysis.report.warnings {
        eprintln!("warning: {w}");
    }
}

fn simulate(config: &Path, seed: Option<u64>, keep_going: bool) -> CmdResult {
    let cfg = load_config(config, seed)?;
    let out_dir = match config.parent() {
        Some(base) if cfg.out_dir.is_relative() => base.join(&cfg.out_dir),
        _ => cfg.out_dir.clone(),
    };
    let sim = cfg.simulation();
    let batch = run_batch(&sim, &cfg.modalities(), &out_dir, cfg.seed, &cfg.overrides())
        .map_err(|e| Failure::from_error(e, EXIT_SIM))?;

    let records: Vec<Record> = batch.results.iter().map(Record::from).collect();
    if !records.is_empty() {
        let analysis =
            aggregate_report(&records, &cfg.analysis_options()).map_err(|e| Failure::from_error(e, EXIT_SIM))?;
        report_warnings(&analysis);
        write_analysis(&out_dir, &analysis).map_err(|e| Failure::from_error(e, EXIT_IO))?;
    }

    let singular: Vec<String> = batch
        .results
        .iter()
        .filter(|r| r.flags.singularity_hit)
        .map(|r| format!("{} {} #{}", r.modality, r.target, r.iteration))
        .collect();
    let timeouts = batch.results.iter().filter(|r| r.flags.timeout).count();
    println!(
        "{} iterations written to {} ({} failed, {} singular, {} timed out)",
        batch.results.len(),
        out_dir.display(),
        batch.failures.len(),
        singular.len(),
        timeouts
    );
    for f in &batch.failures {
        eprintln!("iteration {} {} #{} failed: {}", f.job.modality, f.job.target, f.job.iteration, f.error);
    }
    for s in &singular {
        eprintln!("iteration {s} hit the singularity guard");
    }
    let errors = batch.failures.len() + singular.len();
    if errors > 0 && !keep_going {
        return Err(Failure::new(EXIT_SIM, format!("{errors} iteration error(s); rerun with --keep-going to accept")));
    }
    Ok(())
}

fn analyze(dir: &Path, colmap: Option<&Path>, out: &Path, opts: &AnalysisOptions) -> CmdResult {
    if !dir.is_dir() {
        return Err(Failure::new(EXIT_CONFIG, format!("{} is not a directory", dir.display())));
    }
    let manifest_path = dir.join(Manifest::FILE_NAME);
    let records = if manifest_path.is_file() {
        let manifest = Manifest::read(&manifest_path).map_err(|e| Failure::from_error(e, EXIT_CONFIG))?;
        manifest.load_records(dir).map_err(|e| Failure::from_error(e, EXIT_CONFIG))?
    } else if let Some(path) = colmap {
        let map = ColumnMap::load(path).map_err(|e| Failure::from_error(e, EXIT_CONFIG))?;
        map.load_records(dir).map_err(|e| Failure::from_error(e, EXIT_CONFIG))?
    } else {
        return Err(Failure::new(
            EXIT_CONFIG,
            format!("{} has no {} and no --colmap was given", dir.display(), Manifest::FILE_NAME),
        ));
    };
    if records.is_empty() {
        return Err(Failure::new(EXIT_CONFIG, format!("no trajectories in {}", dir.display())));
    }
    let analysis = aggregate_report(&records, opts).map_err(|e| Failure::from_error(e, EXIT_CONFIG))?;
    report_warnings(&analysis);
    let written = write_analysis(out, &analysis).map_err(|e| Failure::from_error(e, EXIT_IO))?;
    println!(
        "{} cells from {} trajectories; {} files written to {}",
        analysis.report.cells.len(),
        records.len(),
        written.len(),
        out.display()
    );
    Ok(())
}

fn validate(config: &Path, seed: Option<u64>) -> CmdResult {
    let cfg = load_config(config, seed)?;
    let task = &cfg.task;
    println!("targets (h = {} m, l = {} m):", task.subject_height, task.arm_length);
    for t in &task.targets {
        let p = task.position(&t.name).map_err(|e| Failure::from_error(e, EXIT_CONFIG))?;
        let role = if t.name == START { " (start)" } else { "" };
        println!("  {:<8} ({:.4}, {:.4}, {:.4}){role}", t.name, p.x, p.y, p.z);
    }
    let modalities: Vec<String> = cfg.modalities().iter().map(|m| m.to_string()).collect();
    println!("modalities: {}", modalities.join(", "));
    println!();
    print!("{}", cfg.to_toml());
    Ok(())
}
