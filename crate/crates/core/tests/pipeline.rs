//! End-to-end properties of the tracker over generated and random input.

use std::collections::{BTreeMap, BTreeSet};

use classtrack_core::ingest::{load_sequence, write_sequence};
use classtrack_core::scenario::{generate, table1_suite};
use classtrack_core::{
    run_sequence, run_sequence_with, BoundingBox, ClassId, Detection, FrameResult, ScenarioSpec,
    Strategy as Association, TrackId, TrackOutput, TrackerConfig,
};
use proptest::prelude::*;

fn outputs(results: &[FrameResult]) -> Vec<Vec<TrackOutput>> {
    results.iter().map(|r| r.outputs.clone()).collect()
}

fn short(spec: ScenarioSpec, frames: u32) -> ScenarioSpec {
    ScenarioSpec {
        num_frames: frames,
        ..spec
    }
}

/// Per-track box sequences of one class, without the ids themselves.
fn trajectories(results: &[FrameResult], class: ClassId) -> BTreeSet<Vec<String>> {
    let mut by_id: BTreeMap<TrackId, Vec<String>> = BTreeMap::new();
    for r in results {
        for o in r.outputs.iter().filter(|o| o.class_id == class) {
            by_id
                .entry(o.track_id)
                .or_default()
                .push(format!("{}:{:?}", r.frame_index, o.bbox));
        }
    }
    by_id.into_values().collect()
}

#[test]
fn sequence_directory_round_trip_preserves_tracking() {
    let spec = short(table1_suite()[1].clone(), 40);
    let bundle = generate(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_sequence(&bundle, dir.path()).unwrap();
    let loaded = load_sequence(dir.path()).unwrap();

    assert_eq!(loaded.info, bundle.info);
    assert_eq!(loaded.ground_truth, bundle.ground_truth);
    let config = TrackerConfig::default();
    assert_eq!(
        outputs(&run_sequence(&loaded.detections, &config).unwrap()),
        outputs(&run_sequence(&bundle.detections, &config).unwrap())
    );
}

#[test]
fn missing_embeddings_behave_like_iou_only() {
    let bundle = generate(&short(ScenarioSpec::default(), 60)).unwrap();
    let stripped = bundle.clone().without_embeddings();
    let iou_only = TrackerConfig {
        iou_only: true,
        ..Default::default()
    };
    let a = run_sequence(&stripped.detections, &TrackerConfig::default()).unwrap();
    let b = run_sequence(&bundle.detections, &iou_only).unwrap();
    assert_eq!(outputs(&a), outputs(&b));
    assert_eq!(
        a.iter().map(FrameResult::stage2_invocations).sum::<usize>(),
        0
    );
}

#[test]
fn other_classes_do_not_disturb_a_class() {
    let spec = short(table1_suite()[2].clone(), 60);
    let bundle = generate(&spec).unwrap();
    let only_cars: Vec<Vec<Detection>> = bundle
        .detections
        .iter()
        .map(|f| f.iter().filter(|d| d.class_id == 0).cloned().collect())
        .collect();
    let config = TrackerConfig::default();
    let mixed = run_sequence(&bundle.detections, &config).unwrap();
    let alone = run_sequence(&only_cars, &config).unwrap();
    assert!(!trajectories(&alone, 0).is_empty());
    assert_eq!(trajectories(&mixed, 0), trajectories(&alone, 0));
}

#[test]
fn parallel_and_sequential_agree_on_the_suite() {
    let parallel = TrackerConfig::default();
    let sequential = TrackerConfig {
        parallel: false,
        ..Default::default()
    };
    for spec in table1_suite() {
        let frames = generate(&short(spec, 50)).unwrap().detections;
        assert_eq!(
            outputs(&run_sequence(&frames, &parallel).unwrap()),
            outputs(&run_sequence(&frames, &sequential).unwrap())
        );
    }
}

fn detection() -> impl Strategy<Value = Detection> {
    (
        0.0..400.0f64,
        0.0..300.0f64,
        10.0..80.0f64,
        10.0..80.0f64,
        0u32..3,
        0.0..1.0f64,
        prop::option::of(prop::collection::vec(0.1..1.0f64, 4)),
    )
        .prop_map(|(x, y, w, h, class_id, confidence, embedding)| Detection {
            bbox: BoundingBox { x, y, w, h },
            class_id,
            confidence,
            embedding,
        })
}

fn clutter() -> impl Strategy<Value = Vec<Vec<Detection>>> {
    prop::collection::vec(prop::collection::vec(detection(), 0..8), 1..12)
}

fn spec() -> impl Strategy<Value = ScenarioSpec> {
    (prop::collection::vec(0usize..4, 1..4), any::<u64>())
        .prop_filter("at least one object", |(c, _)| c.iter().sum::<usize>() > 0)
        .prop_map(|(class_counts, seed)| ScenarioSpec {
            class_counts,
            num_frames: 15,
            seed,
            ..Default::default()
        })
}

fn check_identity_invariants(results: &[FrameResult]) -> Result<(), TestCaseError> {
    let mut class_of: BTreeMap<TrackId, ClassId> = BTreeMap::new();
    for r in results {
        let ids: BTreeSet<TrackId> = r.outputs.iter().map(|o| o.track_id).collect();
        prop_assert_eq!(ids.len(), r.outputs.len(), "duplicate id in a frame");
        for o in &r.outputs {
            let class = *class_of.entry(o.track_id).or_insert(o.class_id);
            prop_assert_eq!(class, o.class_id, "track changed class");
        }
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn strategies_agree_on_clutter(frames in clutter()) {
        let config = TrackerConfig::default();
        let part = run_sequence_with(&frames, &config, Association::Partitioned).unwrap();
        let mono = run_sequence_with(&frames, &config, Association::Monolithic).unwrap();
        prop_assert_eq!(outputs(&part), outputs(&mono));
        check_identity_invariants(&part)?;
    }

    #[test]
    fn generated_scenarios_keep_identity_invariants(spec in spec()) {
        let frames = generate(&spec).unwrap().detections;
        let config = TrackerConfig { n_init: 1, ..Default::default() };
        let part = run_sequence_with(&frames, &config, Association::Partitioned).unwrap();
        let mono = run_sequence_with(&frames, &config, Association::Monolithic).unwrap();
        prop_assert_eq!(outputs(&part), outputs(&mono));
        check_identity_invariants(&part)?;
    }
}
