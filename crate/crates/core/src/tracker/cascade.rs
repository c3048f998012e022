//! Two-stage cascade: CIoU matching on predicted boxes, then cosine matching
//! on the appearance history for whatever stage one left over.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use serde::Serialize;

use super::{ClassId, Detection, Track, TrackerConfig};
use crate::appearance::cosine_cost;
use crate::assignment::{pad_costs_gated, solve, CostMatrix};
use crate::geometry::{ciou_cost, BoundingBox};

/// Genuine rows/columns and padded dimension of one solved matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MatrixShape {
    pub rows: usize,
    pub cols: usize,
    pub dim: usize,
}

impl MatrixShape {
    fn of(m: &CostMatrix) -> Self {
        Self {
            rows: m.real_rows(),
            cols: m.real_cols(),
            dim: m.n(),
        }
    }

    /// Dummy rows plus dummy columns.
    pub fn padding_lines(&self) -> usize {
        (self.dim - self.rows) + (self.dim - self.cols)
    }
}

/// Result of associating one group of tracks with one group of detections.
/// Indices refer to the slices passed in.
#[derive(Debug, Clone, Default)]
pub struct ClassMatch {
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
    pub stage1: Option<MatrixShape>,
    pub stage2: Option<MatrixShape>,
    pub stage1_matches: usize,
    pub stage2_matches: usize,
    /// Individual cosine similarities computed in stage two.
    pub stage2_evaluations: usize,
    /// Wall time spent populating and solving the matrices.
    pub elapsed: Duration,
}

/// Matches tracks and detections of a single class.
///
/// `tracks` must already be Kalman-predicted to the current frame.
pub fn match_class(
    tracks: &[Track],
    detections: &[Detection],
    config: &TrackerConfig,
) -> ClassMatch {
    debug_assert!(
        tracks
            .iter()
            .map(|t| t.class_id)
            .chain(detections.iter().map(|d| d.class_id))
            .collect::<std::collections::BTreeSet<_>>()
            .len()
            <= 1,
        "match_class expects a single class"
    );
    associate(tracks, detections, config)
}

/// Class-gated cascade over arbitrary classes. Cross-class pairs are never
/// matched; with one class this is exactly [`match_class`].
pub(crate) fn associate(
    tracks: &[Track],
    detections: &[Detection],
    config: &TrackerConfig,
) -> ClassMatch {
    let start = Instant::now();
    let mut out = ClassMatch::default();

    let track_ids: Vec<usize> = (0..tracks.len()).collect();
    let det_ids: Vec<usize> = (0..detections.len()).collect();

    let (left_tracks, left_dets) = if tracks.is_empty() || detections.is_empty() {
        (track_ids, det_ids)
    } else {
        let predicted: Vec<BoundingBox> = tracks.iter().map(Track::predicted_box).collect();
        let stage = solve_stage(
            &track_ids,
            &det_ids,
            |t| tracks[t].class_id,
            |d| detections[d].class_id,
            |t, d| Some(ciou_cost(&predicted[t], &detections[d].bbox)),
            config.stage1_gate,
            config.k,
        );
        out.stage1 = Some(stage.shape);
        out.stage1_matches = stage.matches.len();
        out.matches.extend(stage.matches);
        (stage.left_rows, stage.left_cols)
    };

    let mut left_tracks = left_tracks;
    let mut left_dets = left_dets;
    if !config.iou_only {
        let candidates_t: Vec<usize> = left_tracks
            .iter()
            .copied()
            .filter(|&t| !tracks[t].features.is_empty())
            .collect();
        let candidates_d: Vec<usize> = left_dets
            .iter()
            .copied()
            .filter(|&d| detections[d].embedding.is_some())
            .collect();

        if !candidates_t.is_empty() && !candidates_d.is_empty() {
            let mut evaluations = 0usize;
            let stage = solve_stage(
                &candidates_t,
                &candidates_d,
                |t| tracks[t].class_id,
                |d| detections[d].class_id,
                |t, d| {
                    let history = &tracks[t].features;
                    evaluations += history.len();
                    detections[d]
                        .embedding
                        .as_deref()
                        .and_then(|f| cosine_cost(history, f).ok())
                },
                config.stage2_gate,
                config.k,
            );
            out.stage2 = Some(stage.shape);
            out.stage2_evaluations = evaluations;
            out.stage2_matches = stage.matches.len();
            left_tracks.retain(|t| !stage.matches.iter().any(|m| m.0 == *t));
            left_dets.retain(|d| !stage.matches.iter().any(|m| m.1 == *d));
            out.matches.extend(stage.matches);
        }
    }

    out.matches.sort_unstable();
    out.unmatched_tracks = left_tracks;
    out.unmatched_detections = left_dets;
    out.elapsed = start.elapsed();
    out
}

struct StageResult {
    shape: MatrixShape,
    /// `(track, detection)` in caller indices.
    matches: Vec<(usize, usize)>,
    left_rows: Vec<usize>,
    left_cols: Vec<usize>,
}

/// Builds the class-gated matrix over `rows × cols`, solves it and applies
/// the acceptance gate.
fn solve_stage(
    rows: &[usize],
    cols: &[usize],
    row_class: impl Fn(usize) -> ClassId,
    col_class: impl Fn(usize) -> ClassId,
    mut cost: impl FnMut(usize, usize) -> Option<f64>,
    gate: f64,
    k: f64,
) -> StageResult {
    let mut raw = Vec::with_capacity(rows.len() * cols.len());
    for &r in rows {
        let rc = row_class(r);
        for &c in cols {
            raw.push(if col_class(c) == rc { cost(r, c) } else { None });
        }
    }

    let mut per_class: BTreeMap<ClassId, (usize, usize)> = BTreeMap::new();
    for &r in rows {
        per_class.entry(row_class(r)).or_default().0 += 1;
    }
    for &c in cols {
        per_class.entry(col_class(c)).or_default().1 += 1;
    }
    let dim = per_class.values().map(|&(p, d)| p.max(d)).sum();

    let matrix = pad_costs_gated(rows.len(), cols.len(), &raw, k, dim)
        .expect("matching costs are finite and non-negative");
    let assignment = solve(&matrix);

    let mut matches = Vec::new();
    let mut row_used = vec![false; rows.len()];
    let mut col_used = vec![false; cols.len()];
    for &(r, c) in &assignment.matches {
        if matrix.get(r, c) <= gate {
            matches.push((rows[r], cols[c]));
            row_used[r] = true;
            col_used[c] = true;
        }
    }

    StageResult {
        shape: MatrixShape::of(&matrix),
        matches,
        left_rows: rows
            .iter()
            .zip(&row_used)
            .filter(|(_, u)| !**u)
            .map(|(r, _)| *r)
            .collect(),
        left_cols: cols
            .iter()
            .zip(&col_used)
            .filter(|(_, u)| !**u)
            .map(|(c, _)| *c)
            .collect(),
    }
}
