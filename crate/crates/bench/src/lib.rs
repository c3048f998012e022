//! Inputs shared by the criterion benches.

use classtrack_core::scenario::{generate, table1_suite};
use classtrack_core::{pad_costs, CostMatrix, Detection, ScenarioSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Padded `rows × cols` matrix of uniform costs in `[0, 1)`.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> CostMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..rows * cols).map(|_| rng.random()).collect();
    pad_costs(rows, cols, &raw, 1.0).expect("finite costs")
}

/// The standard class-count suite cut to `frames` frames.
pub fn short_suite(frames: u32) -> Vec<ScenarioSpec> {
    table1_suite()
        .into_iter()
        .map(|s| ScenarioSpec {
            num_frames: frames,
            ..s
        })
        .collect()
}

/// Detections of a generated scenario, one vector per frame.
pub fn frames_of(spec: &ScenarioSpec) -> Vec<Vec<Detection>> {
    generate(spec).expect("valid scenario").detections
}
