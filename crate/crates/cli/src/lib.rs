//! `classtrack` command line: generate scenarios, track, evaluate, benchmark.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use classtrack_core::bench::{emit_report, run_benchmark, TimingReport, DEFAULT_REPETITIONS};
use classtrack_core::ingest::{
    load_ground_truth, load_results, load_sequence, write_results, write_sequence, SequenceBundle,
};
use classtrack_core::metrics::{evaluate, DEFAULT_IOU_THRESHOLD};
use classtrack_core::scenario::{generate, load_suite, table1_suite, ScenarioSpec};
use classtrack_core::tracker::{run_sequence, TrackerConfig};

#[derive(Debug, Parser)]
#[command(
    name = "classtrack",
    version,
    about = "Class-partitioned multi-object tracking"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic sequence directory from a scenario TOML file.
    Gen {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Track a sequence directory and write a results CSV.
    Track {
        #[arg(long)]
        sequence: PathBuf,
        /// Tracker config TOML; defaults apply to missing keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Run per-class matching on worker threads (overrides the config).
        #[arg(long)]
        parallel: Option<bool>,
        /// Skip the appearance stage.
        #[arg(long)]
        iou_only: bool,
    },
    /// Score a results CSV against a ground-truth CSV.
    Eval {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long, default_value_t = DEFAULT_IOU_THRESHOLD)]
        threshold: f64,
        /// Also write the metrics as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time partitioned against monolithic matching.
    Bench {
        /// `table1`, or a suite TOML file with `[[scenario]]` tables.
        #[arg(long, default_value = "table1")]
        suite: String,
        #[arg(long, default_value_t = DEFAULT_REPETITIONS)]
        reps: usize,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        parallel: Option<bool>,
    },
}

/// Parses `args` (including the program name) and runs the command.
/// Returns the process exit code: 0 on success, 1 on failure, 2 on a usage
/// error.
pub fn dispatch<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            1
        }
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen { spec, out } => gen(&spec, &out),
        Command::Track {
            sequence,
            config,
            out,
            parallel,
            iou_only,
        } => track(&sequence, config.as_deref(), &out, parallel, iou_only),
        Command::Eval {
            results,
            gt,
            threshold,
            out,
        } => eval(&results, &gt, threshold, out.as_deref()),
        Command::Bench {
            suite,
            reps,
            out,
            parallel,
        } => bench(&suite, reps, &out, parallel),
    }
}

fn gen(spec_path: &Path, out: &Path) -> Result<()> {
    let spec = ScenarioSpec::load(spec_path)?;
    let bundle = generate(&spec)?;
    write_sequence(&bundle, out)
        .with_context(|| format!("cannot write sequence to {}", out.display()))?;
    let detections: usize = bundle.detections.iter().map(Vec::len).sum();
    println!(
        "wrote {} frames, {} detections to {}",
        bundle.info.frames,
        detections,
        out.display()
    );
    Ok(())
}

fn load_config(path: Option<&Path>, parallel: Option<bool>) -> Result<TrackerConfig> {
    let mut config = match path {
        Some(p) => TrackerConfig::load(p)?,
        None => TrackerConfig::default(),
    };
    if let Some(p) = parallel {
        config.parallel = p;
    }
    Ok(config)
}

fn track(
    sequence: &Path,
    config: Option<&Path>,
    out: &Path,
    parallel: Option<bool>,
    iou_only: bool,
) -> Result<()> {
    if !sequence.is_dir() {
        bail!("sequence directory {} does not exist", sequence.display());
    }
    let mut config = load_config(config, parallel)?;
    config.iou_only |= iou_only;

    let bundle: SequenceBundle = load_sequence(sequence)?;
    let results = run_sequence(&bundle.detections, &config)?;
    write_results(&results, out)
        .with_context(|| format!("cannot write results to {}", out.display()))?;

    let rows: usize = results.iter().map(|r| r.outputs.len()).sum();
    let stage2: usize = results.iter().map(|r| r.stage2_invocations()).sum();
    println!(
        "tracked {} frames: {} output rows, {} appearance-stage solves",
        results.len(),
        rows,
        stage2
    );
    Ok(())
}

fn eval(results: &Path, gt: &Path, threshold: f64, out: Option<&Path>) -> Result<()> {
    let hypotheses = load_results(results)?;
    let truth = load_ground_truth(gt, SequenceBundle::empty())?
        .ground_truth
        .unwrap_or_default();
    let metrics = evaluate(&hypotheses, &truth, threshold)?;
    println!("{metrics}");
    if let Some(path) = out {
        metrics
            .write_csv(path)
            .with_context(|| format!("cannot write metrics to {}", path.display()))?;
    }
    Ok(())
}

fn bench(suite: &str, reps: usize, out: &Path, parallel: Option<bool>) -> Result<()> {
    let specs = if suite == "table1" {
        table1_suite()
    } else {
        let path = Path::new(suite);
        if !path.is_file() {
            bail!("unknown suite `{suite}`: expected `table1` or a suite file");
        }
        load_suite(path)?
    };
    let config = load_config(None, parallel)?;
    let reports = run_benchmark(&specs, reps, &config)?;
    emit_report(&reports, out)
        .with_context(|| format!("cannot write report to {}", out.display()))?;
    print_reports(&reports);
    Ok(())
}

fn print_reports(reports: &[TimingReport]) {
    println!(
        "{:<12} {:>16} {:>16} {:>8} {:>10}",
        "scenario", "partitioned ms", "monolithic ms", "speedup", "steps"
    );
    for r in reports {
        println!(
            "{:<12} {:>16.5} {:>16.5} {:>8.2} {:>4}/{:<5}",
            r.scenario_label,
            r.partitioned_total.mean_ms,
            r.monolithic_total.mean_ms,
            r.speedup(),
            r.step_counts.partitioned_parallel,
            r.step_counts.monolithic
        );
    }
}
