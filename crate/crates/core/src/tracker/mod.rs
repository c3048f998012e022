//! Class-partitioned tracking-by-detection.
//!
//! Every frame the live tracks and the accepted detections are split by
//! class label. Each class is matched independently (on its own worker when
//! [`TrackerConfig::parallel`] is set) with the two-stage cascade in
//! [`cascade`]. Workers own their tracks exclusively; creation, deletion and
//! id assignment happen afterwards in a single-threaded merge.

mod cascade;
mod config;

use std::collections::BTreeMap;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appearance::{Embedding, FeatureHistory};
use crate::geometry::BoundingBox;
use crate::motion::{KalmanFilter, KalmanState};

pub use cascade::{match_class, ClassMatch, MatrixShape};
pub use config::{ConfigError, TrackerConfig};

pub type ClassId = u32;
pub type TrackId = u64;

#[derive(Debug, Error)]
pub enum TrackerError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("frame {got} does not follow frame {previous}")]
    FrameOrder { previous: u32, got: u32 },
    #[error("frame {frame}, detection {index}: {reason}")]
    InvalidDetection {
        frame: u32,
        index: usize,
        reason: String,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub bbox: BoundingBox,
    pub class_id: ClassId,
    pub confidence: f64,
    pub embedding: Option<Embedding>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrackStatus {
    Tentative,
    Confirmed,
}

#[derive(Debug, Clone)]
pub struct Track {
    pub id: TrackId,
    pub class_id: ClassId,
    pub state: KalmanState,
    pub features: FeatureHistory,
    pub status: TrackStatus,
    pub hits: u32,
    pub time_since_update: u32,
    pub age: u32,
}

impl Track {
    pub(crate) fn new(
        id: TrackId,
        detection: &Detection,
        kf: &KalmanFilter,
        config: &TrackerConfig,
    ) -> Self {
        let mut features = FeatureHistory::new(config.h);
        if let Some(f) = &detection.embedding {
            // Embeddings are validated before tracks are seeded.
            let _ = features.push(f.clone());
        }
        Track {
            id,
            class_id: detection.class_id,
            state: kf.initiate(&detection.bbox),
            features,
            status: if config.n_init <= 1 {
                TrackStatus::Confirmed
            } else {
                TrackStatus::Tentative
            },
            hits: 1,
            time_since_update: 0,
            age: 1,
        }
    }

    pub fn predicted_box(&self) -> BoundingBox {
        self.state.to_box()
    }

    pub fn is_confirmed(&self) -> bool {
        self.status == TrackStatus::Confirmed
    }

    fn predict(&mut self, kf: &KalmanFilter) {
        self.state = kf.predict(&self.state);
        self.age += 1;
    }

    fn apply_match(&mut self, detection: &Detection, kf: &KalmanFilter, n_init: u32) {
        self.state = kf.update(&self.state, &detection.bbox);
        if let Some(f) = &detection.embedding {
            let _ = self.features.push(f.clone());
        }
        self.hits += 1;
        self.time_since_update = 0;
        if self.status == TrackStatus::Tentative && self.hits >= n_init {
            self.status = TrackStatus::Confirmed;
        }
    }
}

/// Tracks and detections sharing one class label.
#[derive(Debug, Clone, Default)]
pub struct Partition {
    pub tracks: Vec<Track>,
    pub detections: Vec<Detection>,
    /// Position of each detection in the frame's original list.
    pub detection_indices: Vec<usize>,
}

/// Groups tracks and indexed detections by class. Classes with neither are
/// absent.
pub fn partition_by_class(
    tracks: impl IntoIterator<Item = Track>,
    detections: impl IntoIterator<Item = (usize, Detection)>,
) -> BTreeMap<ClassId, Partition> {
    let mut map: BTreeMap<ClassId, Partition> = BTreeMap::new();
    for t in tracks {
        map.entry(t.class_id).or_default().tracks.push(t);
    }
    for (i, d) in detections {
        let p = map.entry(d.class_id).or_default();
        p.detections.push(d);
        p.detection_indices.push(i);
    }
    map
}

/// How association is organised each frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Strategy {
    /// One matching problem per class.
    #[default]
    Partitioned,
    /// One class-gated matrix over every class (the baseline).
    Monolithic,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackOutput {
    pub track_id: TrackId,
    pub class_id: ClassId,
    pub bbox: BoundingBox,
}

/// Matching statistics for one class, or for the whole frame under
/// [`Strategy::Monolithic`] (`class_id == None`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchDiagnostics {
    pub class_id: Option<ClassId>,
    pub tracks: usize,
    pub detections: usize,
    pub stage1: Option<MatrixShape>,
    pub stage2: Option<MatrixShape>,
    pub stage1_matches: usize,
    pub stage2_matches: usize,
    pub stage2_evaluations: usize,
    pub match_time: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub frame_index: u32,
    /// Confirmed tracks updated this frame, ordered by id.
    pub outputs: Vec<TrackOutput>,
    pub diagnostics: Vec<MatchDiagnostics>,
}

impl FrameResult {
    /// Slowest matching worker of the frame.
    pub fn max_match_time(&self) -> Duration {
        self.diagnostics
            .iter()
            .map(|d| d.match_time)
            .max()
            .unwrap_or_default()
    }

    pub fn stage2_invocations(&self) -> usize {
        self.diagnostics
            .iter()
            .filter(|d| d.stage2.is_some())
            .count()
    }
}

/// Outcome of one matching worker.
struct WorkerOutput {
    tracks: Vec<Track>,
    matched: Vec<bool>,
    unmatched_detections: Vec<(usize, Detection)>,
    diagnostics: MatchDiagnostics,
}

fn run_worker(
    class_id: Option<ClassId>,
    mut tracks: Vec<Track>,
    detections: Vec<Detection>,
    indices: Vec<usize>,
    kf: &KalmanFilter,
    config: &TrackerConfig,
) -> WorkerOutput {
    for t in &mut tracks {
        t.predict(kf);
    }
    let m = cascade::associate(&tracks, &detections, config);

    let mut matched = vec![false; tracks.len()];
    for &(t, d) in &m.matches {
        tracks[t].apply_match(&detections[d], kf, config.n_init);
        matched[t] = true;
    }
    let unmatched_detections = m
        .unmatched_detections
        .iter()
        .map(|&d| (indices[d], detections[d].clone()))
        .collect();

    WorkerOutput {
        diagnostics: MatchDiagnostics {
            class_id,
            tracks: tracks.len(),
            detections: detections.len(),
            stage1: m.stage1,
            stage2: m.stage2,
            stage1_matches: m.stage1_matches,
            stage2_matches: m.stage2_matches,
            stage2_evaluations: m.stage2_evaluations,
            match_time: m.elapsed,
        },
        tracks,
        matched,
        unmatched_detections,
    }
}

#[derive(Debug)]
pub struct Tracker {
    config: TrackerConfig,
    strategy: Strategy,
    kf: KalmanFilter,
    tracks: Vec<Track>,
    next_id: TrackId,
    last_frame: Option<u32>,
    embedding_dim: Option<usize>,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self, TrackerError> {
        Self::with_strategy(config, Strategy::Partitioned)
    }

    pub fn with_strategy(config: TrackerConfig, strategy: Strategy) -> Result<Self, TrackerError> {
        config.validate()?;
        Ok(Self {
            kf: KalmanFilter::new(config.motion()),
            config,
            strategy,
            tracks: Vec::new(),
            next_id: 1,
            last_frame: None,
            embedding_dim: None,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Live tracks, ordered by id.
    pub fn tracks(&self) -> &[Track] {
        &self.tracks
    }

    fn accept(
        &mut self,
        frame: u32,
        detections: Vec<Detection>,
    ) -> Result<Vec<(usize, Detection)>, TrackerError> {
        let invalid = |index: usize, reason: String| TrackerError::InvalidDetection {
            frame,
            index,
            reason,
        };
        let mut accepted = Vec::with_capacity(detections.len());
        for (i, d) in detections.into_iter().enumerate() {
            if !(0.0..=1.0).contains(&d.confidence) {
                return Err(invalid(
                    i,
                    format!("confidence {} outside [0, 1]", d.confidence),
                ));
            }
            if let Some(f) = &d.embedding {
                let expected = *self.embedding_dim.get_or_insert(f.len());
                if f.len() != expected {
                    return Err(invalid(
                        i,
                        format!("embedding dimension {} (expected {expected})", f.len()),
                    ));
                }
                if f.iter().any(|v| !v.is_finite()) || f.iter().all(|v| *v == 0.0) {
                    return Err(invalid(i, "embedding is zero or non-finite".into()));
                }
            }
            if d.confidence >= self.config.min_confidence {
                accepted.push((i, d));
            }
        }
        Ok(accepted)
    }

    /// Advances the tracker by one frame.
    pub fn step(
        &mut self,
        detections: Vec<Detection>,
        frame_index: u32,
    ) -> Result<FrameResult, TrackerError> {
        if let Some(previous) = self.last_frame {
            if frame_index <= previous {
                return Err(TrackerError::FrameOrder {
                    previous,
                    got: frame_index,
                });
            }
        }
        let accepted = self.accept(frame_index, detections)?;
        self.last_frame = Some(frame_index);

        let tracks = std::mem::take(&mut self.tracks);
        let kf = self.kf;
        let config = &self.config;

        let outputs: Vec<WorkerOutput> = match self.strategy {
            Strategy::Partitioned => {
                let partitions: Vec<(ClassId, Partition)> =
                    partition_by_class(tracks, accepted).into_iter().collect();
                let work = |(class_id, p): (ClassId, Partition)| {
                    run_worker(
                        Some(class_id),
                        p.tracks,
                        p.detections,
                        p.detection_indices,
                        &kf,
                        config,
                    )
                };
                if config.parallel && partitions.len() > 1 {
                    partitions.into_par_iter().map(work).collect()
                } else {
                    partitions.into_iter().map(work).collect()
                }
            }
            Strategy::Monolithic => {
                if tracks.is_empty() && accepted.is_empty() {
                    Vec::new()
                } else {
                    let (indices, detections) = accepted.into_iter().unzip();
                    vec![run_worker(None, tracks, detections, indices, &kf, config)]
                }
            }
        };

        Ok(self.merge(frame_index, outputs))
    }

    fn merge(&mut self, frame_index: u32, outputs: Vec<WorkerOutput>) -> FrameResult {
        let mut diagnostics = Vec::with_capacity(outputs.len());
        let mut new_detections = Vec::new();
        let max_age = self.config.max_age;

        for out in outputs {
            diagnostics.push(out.diagnostics);
            new_detections.extend(out.unmatched_detections);
            for (mut t, matched) in out.tracks.into_iter().zip(out.matched) {
                if !matched {
                    t.time_since_update += 1;
                    if t.status == TrackStatus::Tentative || t.time_since_update > max_age {
                        continue;
                    }
                }
                self.tracks.push(t);
            }
        }

        new_detections.sort_by_key(|(i, _)| *i);
        for (_, d) in new_detections {
            let track = Track::new(self.next_id, &d, &self.kf, &self.config);
            self.next_id += 1;
            self.tracks.push(track);
        }
        self.tracks.sort_by_key(|t| t.id);

        let outputs = self
            .tracks
            .iter()
            .filter(|t| t.is_confirmed() && t.time_since_update == 0)
            .map(|t| TrackOutput {
                track_id: t.id,
                class_id: t.class_id,
                bbox: t.state.to_box(),
            })
            .collect();

        FrameResult {
            frame_index,
            outputs,
            diagnostics,
        }
    }
}

/// Runs a fresh tracker over `frames`, numbering them from 1.
pub fn run_sequence(
    frames: &[Vec<Detection>],
    config: &TrackerConfig,
) -> Result<Vec<FrameResult>, TrackerError> {
    run_sequence_with(frames, config, Strategy::Partitioned)
}

pub fn run_sequence_with(
    frames: &[Vec<Detection>],
    config: &TrackerConfig,
    strategy: Strategy,
) -> Result<Vec<FrameResult>, TrackerError> {
    let mut tracker = Tracker::with_strategy(config.clone(), strategy)?;
    frames
        .iter()
        .enumerate()
        .map(|(i, dets)| tracker.step(dets.clone(), i as u32 + 1))
        .collect()
}
