//! CLEAR-MOT evaluation: MOTA, MOTP and identity switches.
//!
//! Ground-truth objects and hypotheses are matched per frame, only within the
//! same class and only at IoU ≥ threshold. A pairing from the previous frame
//! is kept while it still clears the threshold; the rest is solved as an
//! assignment on `1 - IoU`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use serde::Serialize;
use thiserror::Error;

use crate::assignment::{pad_costs_masked, solve};
use crate::geometry::iou;
use crate::ingest::GroundTruthObject;
use crate::tracker::{TrackId, TrackOutput};

pub const DEFAULT_IOU_THRESHOLD: f64 = 0.5;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("ground truth is empty, MOTA is undefined")]
    NoGroundTruth,
    #[error("IoU threshold {0} is outside (0, 1)")]
    Threshold(f64),
    #[error("frame {frame}: track id {id} appears twice")]
    DuplicateTrack { frame: usize, id: TrackId },
    #[error("frame {frame}: object id {id} appears twice")]
    DuplicateObject { frame: usize, id: u64 },
    #[error("cannot write metrics: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write metrics: {0}")]
    Csv(#[from] csv::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrackingMetrics {
    pub mota: f64,
    /// Mean IoU over matched pairs; 0 with no matches.
    pub motp: f64,
    pub id_switches: usize,
    pub false_positives: usize,
    pub misses: usize,
    pub matches: usize,
    pub gt_count: usize,
    /// Identity switches per ground-truth object (objects without any are
    /// omitted).
    #[serde(skip)]
    pub id_switches_by_object: BTreeMap<u64, usize>,
}

impl TrackingMetrics {
    pub fn switches_for(&self, object_id: u64) -> usize {
        self.id_switches_by_object
            .get(&object_id)
            .copied()
            .unwrap_or(0)
    }

    /// Header plus one data row.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<(), MetricsError> {
        let mut w = csv::Writer::from_path(path)?;
        w.serialize(self)?;
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for TrackingMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "MOTA {:.3}", self.mota)?;
        writeln!(f, "MOTP {:.3}", self.motp)?;
        writeln!(f, "IDS {}", self.id_switches)?;
        writeln!(f, "FP {}", self.false_positives)?;
        writeln!(f, "FN {}", self.misses)?;
        write!(f, "GT {}", self.gt_count)
    }
}

/// Evaluates `hypotheses[i]` against `ground_truth[i]` for every frame `i`.
/// The shorter list is padded with empty frames.
pub fn evaluate(
    hypotheses: &[Vec<TrackOutput>],
    ground_truth: &[Vec<GroundTruthObject>],
    iou_threshold: f64,
) -> Result<TrackingMetrics, MetricsError> {
    if !(iou_threshold > 0.0 && iou_threshold < 1.0) {
        return Err(MetricsError::Threshold(iou_threshold));
    }
    let gt_count: usize = ground_truth.iter().map(Vec::len).sum();
    if gt_count == 0 {
        return Err(MetricsError::NoGroundTruth);
    }

    let mut previous: HashMap<u64, TrackId> = HashMap::new();
    let mut last_id: HashMap<u64, TrackId> = HashMap::new();
    let mut by_object: BTreeMap<u64, usize> = BTreeMap::new();
    let (mut matches, mut misses, mut false_positives, mut switches) = (0, 0, 0, 0);
    let mut overlap = 0.0;

    let frames = hypotheses.len().max(ground_truth.len());
    for i in 0..frames {
        let hyps = hypotheses.get(i).map_or(&[][..], Vec::as_slice);
        let gts = ground_truth.get(i).map_or(&[][..], Vec::as_slice);
        check_unique(i + 1, hyps, gts)?;

        let pairs = match_frame(hyps, gts, &previous, iou_threshold);
        previous.clear();
        for &(g, h, o) in &pairs {
            let object = gts[g].object_id;
            let track = hyps[h].track_id;
            if let Some(&last) = last_id.get(&object) {
                if last != track {
                    switches += 1;
                    *by_object.entry(object).or_default() += 1;
                }
            }
            last_id.insert(object, track);
            previous.insert(object, track);
            overlap += o;
        }
        matches += pairs.len();
        misses += gts.len() - pairs.len();
        false_positives += hyps.len() - pairs.len();
    }

    Ok(TrackingMetrics {
        mota: 1.0 - (misses + false_positives + switches) as f64 / gt_count as f64,
        motp: if matches > 0 {
            overlap / matches as f64
        } else {
            0.0
        },
        id_switches: switches,
        false_positives,
        misses,
        matches,
        gt_count,
        id_switches_by_object: by_object,
    })
}

fn check_unique(
    frame: usize,
    hyps: &[TrackOutput],
    gts: &[GroundTruthObject],
) -> Result<(), MetricsError> {
    let mut seen = HashSet::new();
    if let Some(h) = hyps.iter().find(|h| !seen.insert(h.track_id)) {
        return Err(MetricsError::DuplicateTrack {
            frame,
            id: h.track_id,
        });
    }
    let mut seen = HashSet::new();
    if let Some(g) = gts.iter().find(|g| !seen.insert(g.object_id)) {
        return Err(MetricsError::DuplicateObject {
            frame,
            id: g.object_id,
        });
    }
    Ok(())
}

/// Returns `(gt index, hypothesis index, IoU)` for every match in a frame.
fn match_frame(
    hyps: &[TrackOutput],
    gts: &[GroundTruthObject],
    previous: &HashMap<u64, TrackId>,
    threshold: f64,
) -> Vec<(usize, usize, f64)> {
    let overlap = |g: usize, h: usize| -> Option<f64> {
        if gts[g].class_id != hyps[h].class_id {
            return None;
        }
        let o = iou(&gts[g].bbox, &hyps[h].bbox);
        (o >= threshold).then_some(o)
    };

    let mut pairs = Vec::new();
    let mut gt_used = vec![false; gts.len()];
    let mut hyp_used = vec![false; hyps.len()];
    for (g, gt) in gts.iter().enumerate() {
        let Some(&track) = previous.get(&gt.object_id) else {
            continue;
        };
        let Some(h) = hyps.iter().position(|h| h.track_id == track) else {
            continue;
        };
        if let Some(o) = overlap(g, h) {
            pairs.push((g, h, o));
            gt_used[g] = true;
            hyp_used[h] = true;
        }
    }

    let rows: Vec<usize> = (0..gts.len()).filter(|&g| !gt_used[g]).collect();
    let cols: Vec<usize> = (0..hyps.len()).filter(|&h| !hyp_used[h]).collect();
    if rows.is_empty() || cols.is_empty() {
        return pairs;
    }
    let raw: Vec<Option<f64>> = rows
        .iter()
        .flat_map(|&g| cols.iter().map(move |&h| (g, h)))
        .map(|(g, h)| overlap(g, h).map(|o| 1.0 - o))
        .collect();
    if raw.iter().all(Option::is_none) {
        return pairs;
    }
    let matrix = pad_costs_masked(rows.len(), cols.len(), &raw, 1.0).expect("IoU costs are valid");
    for (r, c) in solve(&matrix).matches {
        let (g, h) = (rows[r], cols[c]);
        pairs.push((g, h, 1.0 - matrix.get(r, c)));
    }
    pairs
}
