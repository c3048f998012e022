//! Match-time comparison between class-partitioned and monolithic
//! association over synthetic scenarios.
//!
//! Only matrix population and solving are timed (the cascade's own timer);
//! Kalman filtering, lifecycle bookkeeping and I/O are excluded. Statistics
//! are taken over every frame of every repetition.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::assignment::{step_count_model, StepCounts};
use crate::scenario::{generate, ScenarioError, ScenarioSpec};
use crate::tracker::{
    ClassId, Detection, FrameResult, Strategy, Tracker, TrackerConfig, TrackerError,
};

pub const DEFAULT_REPETITIONS: usize = 50;
pub const DEFAULT_WARMUP: usize = 5;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("repetitions must be at least 1")]
    NoRepetitions,
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Tracker(#[from] TrackerError),
    #[error("cannot write report: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write report: {0}")]
    Csv(#[from] csv::Error),
}

/// Mean and sample standard deviation in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Stat {
    pub mean_ms: f64,
    pub std_ms: f64,
}

impl Stat {
    pub fn of(samples: &[f64]) -> Self {
        if samples.is_empty() {
            return Self::default();
        }
        let n = samples.len() as f64;
        let mean = samples.iter().sum::<f64>() / n;
        let var = if samples.len() > 1 {
            samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        Self {
            mean_ms: mean,
            std_ms: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub scenario_label: String,
    pub class_counts: Vec<usize>,
    /// Per-class match time, for classes that occur in the scenario.
    pub per_class_times: BTreeMap<ClassId, Stat>,
    /// Per-frame partitioned match time: the slowest class when classes run
    /// concurrently, their sum otherwise.
    pub partitioned_total: Stat,
    pub monolithic_total: Stat,
    /// Whole `step` time per frame with partitioning, for reference.
    pub pipeline: Stat,
    pub step_counts: StepCounts,
    /// Appearance-stage solves over one pass of the sequence.
    pub stage2_invocations: usize,
    /// Whether both strategies emitted identical tracks.
    pub outputs_agree: bool,
}

impl TimingReport {
    pub fn speedup(&self) -> f64 {
        self.monolithic_total.mean_ms / self.partitioned_total.mean_ms
    }
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

struct Pass {
    results: Vec<FrameResult>,
    step_ms: Vec<f64>,
}

fn run_pass(
    frames: &[Vec<Detection>],
    config: &TrackerConfig,
    strategy: Strategy,
) -> Result<Pass, BenchError> {
    let mut tracker = Tracker::with_strategy(config.clone(), strategy)?;
    let mut results = Vec::with_capacity(frames.len());
    let mut step_ms = Vec::with_capacity(frames.len());
    for (i, dets) in frames.iter().enumerate() {
        let dets = dets.clone();
        let start = Instant::now();
        let r = tracker.step(dets, i as u32 + 1)?;
        step_ms.push(ms(start.elapsed()));
        results.push(r);
    }
    Ok(Pass { results, step_ms })
}

/// Runs every scenario `repetitions` times with each strategy after
/// [`DEFAULT_WARMUP`] discarded warm-up repetitions.
pub fn run_benchmark(
    specs: &[ScenarioSpec],
    repetitions: usize,
    config: &TrackerConfig,
) -> Result<Vec<TimingReport>, BenchError> {
    run_benchmark_with_warmup(specs, repetitions, DEFAULT_WARMUP, config)
}

pub fn run_benchmark_with_warmup(
    specs: &[ScenarioSpec],
    repetitions: usize,
    warmup: usize,
    config: &TrackerConfig,
) -> Result<Vec<TimingReport>, BenchError> {
    if repetitions == 0 {
        return Err(BenchError::NoRepetitions);
    }
    specs
        .iter()
        .map(|spec| bench_one(spec, repetitions, warmup, config))
        .collect()
}

fn bench_one(
    spec: &ScenarioSpec,
    repetitions: usize,
    warmup: usize,
    config: &TrackerConfig,
) -> Result<TimingReport, BenchError> {
    let frames = generate(spec)?.detections;

    let mut per_class: BTreeMap<ClassId, Vec<f64>> = BTreeMap::new();
    let mut partitioned = Vec::new();
    let mut monolithic = Vec::new();
    let mut pipeline = Vec::new();
    let mut stage2_invocations = 0;
    let mut outputs_agree = true;

    for rep in 0..warmup + repetitions {
        let part = run_pass(&frames, config, Strategy::Partitioned)?;
        let mono = run_pass(&frames, config, Strategy::Monolithic)?;
        if rep < warmup {
            continue;
        }
        if rep == warmup {
            stage2_invocations = part
                .results
                .iter()
                .map(FrameResult::stage2_invocations)
                .sum();
            outputs_agree = part
                .results
                .iter()
                .zip(&mono.results)
                .all(|(a, b)| a.outputs == b.outputs);
        }

        for r in &part.results {
            if r.diagnostics.is_empty() {
                continue;
            }
            let mut frame_total: f64 = 0.0;
            for d in &r.diagnostics {
                let t = ms(d.match_time);
                per_class
                    .entry(d.class_id.expect("partitioned diagnostics carry a class"))
                    .or_default()
                    .push(t);
                frame_total = if config.parallel {
                    frame_total.max(t)
                } else {
                    frame_total + t
                };
            }
            partitioned.push(frame_total);
        }
        monolithic.extend(
            mono.results
                .iter()
                .filter(|r| !r.diagnostics.is_empty())
                .map(|r| ms(r.max_match_time())),
        );
        pipeline.extend(part.step_ms);
    }

    Ok(TimingReport {
        scenario_label: spec.label(),
        class_counts: spec.class_counts.clone(),
        per_class_times: per_class
            .into_iter()
            .map(|(c, s)| (c, Stat::of(&s)))
            .collect(),
        partitioned_total: Stat::of(&partitioned),
        monolithic_total: Stat::of(&monolithic),
        pipeline: Stat::of(&pipeline),
        step_counts: step_count_model(&spec.class_counts)
            .expect("validated scenarios have objects"),
        stage2_invocations,
        outputs_agree,
    })
}

/// One row per scenario: per-class mean/std (0 for absent classes), the two
/// match times, the step-count model and the appearance-stage count.
pub fn emit_report(reports: &[TimingReport], path: impl AsRef<Path>) -> Result<(), BenchError> {
    let classes = reports
        .iter()
        .map(|r| r.class_counts.len())
        .max()
        .unwrap_or(0);
    let mut w = csv::Writer::from_path(path)?;

    let mut header = vec!["scenario".to_string()];
    for c in 0..classes {
        header.push(format!("class{c}_mean_ms"));
        header.push(format!("class{c}_std_ms"));
    }
    header.extend(
        [
            "partitioned_mean_ms",
            "partitioned_std_ms",
            "monolithic_mean_ms",
            "monolithic_std_ms",
            "pipeline_mean_ms",
            "steps_monolithic",
            "steps_partitioned_sequential",
            "steps_partitioned_parallel",
            "stage2_invocations",
            "outputs_agree",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;

    for r in reports {
        let mut row = vec![r.scenario_label.clone()];
        for c in 0..classes {
            let s = r
                .per_class_times
                .get(&(c as ClassId))
                .copied()
                .unwrap_or_default();
            row.push(format!("{:.6}", s.mean_ms));
            row.push(format!("{:.6}", s.std_ms));
        }
        row.extend([
            format!("{:.6}", r.partitioned_total.mean_ms),
            format!("{:.6}", r.partitioned_total.std_ms),
            format!("{:.6}", r.monolithic_total.mean_ms),
            format!("{:.6}", r.monolithic_total.std_ms),
            format!("{:.6}", r.pipeline.mean_ms),
            r.step_counts.monolithic.to_string(),
            r.step_counts.partitioned_sequential.to_string(),
            r.step_counts.partitioned_parallel.to_string(),
            r.stage2_invocations.to_string(),
            r.outputs_agree.to_string(),
        ]);
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
