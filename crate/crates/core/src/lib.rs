//! Class-partitioned multi-object tracking: a two-stage (CIoU, then
//! appearance) cascade solved per class, with the supporting assignment
//! solver, Kalman motion model, synthetic scenarios, file I/O, CLEAR-MOT
//! metrics and a timing harness.

pub mod appearance;
pub mod assignment;
pub mod bench;
pub mod geometry;
pub mod ingest;
pub mod metrics;
pub mod motion;
pub mod scenario;
pub mod tracker;

pub use appearance::{cosine_cost, Embedding, FeatureHistory};
pub use assignment::{
    brute_force_solve, pad_costs, solve, step_count_model, Assignment, CostMatrix, StepCounts,
};
pub use bench::{emit_report, run_benchmark, TimingReport};
pub use geometry::{ciou, ciou_cost, iou, iou_cost, BoundingBox};
pub use ingest::{GroundTruthObject, SequenceBundle, SequenceInfo};
pub use metrics::{evaluate, TrackingMetrics};
pub use motion::{KalmanFilter, KalmanState, MotionParams};
pub use scenario::{generate, table1_suite, ScenarioSpec};
pub use tracker::{
    partition_by_class, run_sequence, run_sequence_with, ClassId, Detection, FrameResult, Strategy,
    Track, TrackId, TrackOutput, Tracker, TrackerConfig,
};
