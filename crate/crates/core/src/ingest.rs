//! CSV sequence files: detections, embedding sidecars, ground truth and
//! tracker results, plus a `seqinfo.toml` describing the sequence.
//!
//! All files are header-less CSV. Frames are numbered from 1; blank lines
//! are skipped.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appearance::Embedding;
use crate::geometry::BoundingBox;
use crate::tracker::{ClassId, Detection, FrameResult, TrackId, TrackOutput};

pub const DETECTIONS_FILE: &str = "det.csv";
pub const EMBEDDINGS_FILE: &str = "emb.csv";
pub const GROUND_TRUTH_FILE: &str = "gt.csv";
pub const INFO_FILE: &str = "seqinfo.toml";

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}, line {line}: {reason}")]
    Row {
        path: PathBuf,
        line: u64,
        reason: String,
    },
    #[error("{path}: {reason}")]
    Invalid { path: PathBuf, reason: String },
}

/// Sequence metadata. Width and height are 0 when unknown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceInfo {
    pub frames: u32,
    #[serde(default)]
    pub width: f64,
    #[serde(default)]
    pub height: f64,
    /// 0 when the sequence carries no embeddings.
    #[serde(default)]
    pub embedding_dim: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroundTruthObject {
    pub object_id: u64,
    pub class_id: ClassId,
    pub bbox: BoundingBox,
}

/// One sequence of per-frame inputs. `detections[i]` holds frame `i + 1`.
/// Embeddings live on the detections they belong to.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceBundle {
    pub info: SequenceInfo,
    pub detections: Vec<Vec<Detection>>,
    pub ground_truth: Option<Vec<Vec<GroundTruthObject>>>,
}

impl SequenceBundle {
    pub fn empty() -> Self {
        Self {
            info: SequenceInfo {
                frames: 0,
                width: 0.0,
                height: 0.0,
                embedding_dim: 0,
            },
            detections: Vec::new(),
            ground_truth: None,
        }
    }

    /// Pads the detection (and ground-truth) lists to `frames` frames.
    fn extend_to(&mut self, frames: u32) {
        if frames > self.info.frames {
            self.info.frames = frames;
        }
        let n = self.info.frames as usize;
        self.detections.resize_with(n, Vec::new);
        if let Some(gt) = &mut self.ground_truth {
            gt.resize_with(n, Vec::new);
        }
    }

    /// Removes every embedding, as if the sidecar were absent.
    pub fn without_embeddings(mut self) -> Self {
        for d in self.detections.iter_mut().flatten() {
            d.embedding = None;
        }
        self.info.embedding_dim = 0;
        self
    }
}

struct Rows {
    path: PathBuf,
    text: Vec<u8>,
}

impl Rows {
    fn open(path: &Path) -> Result<Self, IngestError> {
        let text = fs::read(path).map_err(|source| IngestError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self {
            path: path.to_path_buf(),
            text,
        })
    }

    /// Calls `f` with each non-blank record; `f` gets a constructor for errors
    /// tagged with the record's 1-based line number.
    fn for_each(
        self,
        mut f: impl FnMut(&csv::StringRecord, &dyn Fn(String) -> IngestError) -> Result<(), IngestError>,
    ) -> Result<(), IngestError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(self.text.as_slice());
        let mut record = csv::StringRecord::new();
        loop {
            match reader.read_record(&mut record) {
                Ok(false) => return Ok(()),
                Ok(true) => {}
                Err(source) => {
                    return Err(IngestError::Csv {
                        path: self.path.clone(),
                        source,
                    })
                }
            }
            if record.iter().all(str::is_empty) {
                continue;
            }
            // Positions point at any blank lines preceding the record.
            let mut start = record.position().map_or(0, |p| p.byte() as usize);
            while matches!(self.text.get(start), Some(b'\n' | b'\r')) {
                start += 1;
            }
            let line = 1 + self.text[..start].iter().filter(|&&b| b == b'\n').count() as u64;
            let path = &self.path;
            let fail = |reason: String| IngestError::Row {
                path: path.clone(),
                line,
                reason,
            };
            f(&record, &fail)?;
        }
    }
}

fn field<T: std::str::FromStr>(
    record: &csv::StringRecord,
    i: usize,
    name: &str,
) -> Result<T, String> {
    let raw = record.get(i).ok_or_else(|| format!("missing {name}"))?;
    raw.parse().map_err(|_| format!("bad {name} `{raw}`"))
}

fn expect_len(record: &csv::StringRecord, n: usize) -> Result<(), String> {
    if record.len() == n {
        Ok(())
    } else {
        Err(format!("expected {n} fields, found {}", record.len()))
    }
}

fn frame_field(record: &csv::StringRecord) -> Result<u32, String> {
    let f: u32 = field(record, 0, "frame")?;
    if f == 0 {
        return Err("frames are numbered from 1".into());
    }
    Ok(f)
}

fn box_fields(record: &csv::StringRecord, first: usize) -> Result<BoundingBox, String> {
    let x = field(record, first, "x")?;
    let y = field(record, first + 1, "y")?;
    let w = field(record, first + 2, "w")?;
    let h = field(record, first + 3, "h")?;
    BoundingBox::new(x, y, w, h).map_err(|e| e.to_string())
}

/// Reads `frame,-1,x,y,w,h,confidence,class_id` rows. The frame count is the
/// largest frame present; absent frames are empty.
pub fn load_detections(path: impl AsRef<Path>) -> Result<SequenceBundle, IngestError> {
    let mut bundle = SequenceBundle::empty();
    Rows::open(path.as_ref())?.for_each(|r, fail| {
        let parse = || -> Result<(u32, Detection), String> {
            expect_len(r, 8)?;
            let frame = frame_field(r)?;
            let _: i64 = field(r, 1, "id")?;
            let bbox = box_fields(r, 2)?;
            let confidence: f64 = field(r, 6, "confidence")?;
            if !(0.0..=1.0).contains(&confidence) {
                return Err(format!("confidence {confidence} outside [0, 1]"));
            }
            let class_id = field(r, 7, "class_id")?;
            Ok((
                frame,
                Detection {
                    bbox,
                    class_id,
                    confidence,
                    embedding: None,
                },
            ))
        };
        let (frame, det) = parse().map_err(fail)?;
        bundle.extend_to(frame);
        bundle.detections[frame as usize - 1].push(det);
        Ok(())
    })?;
    Ok(bundle)
}

/// Attaches `frame,detection_index,v1,...,vF` rows to the detections of
/// `bundle`. `detection_index` is the 0-based position of the detection
/// within its frame, in file order.
pub fn load_embeddings(
    path: impl AsRef<Path>,
    mut bundle: SequenceBundle,
) -> Result<SequenceBundle, IngestError> {
    let mut dim = (bundle.info.embedding_dim > 0).then_some(bundle.info.embedding_dim);
    let mut seen = HashSet::new();
    Rows::open(path.as_ref())?.for_each(|r, fail| {
        let mut parse = || -> Result<(), String> {
            if r.len() < 3 {
                return Err("expected frame, detection index and at least one value".into());
            }
            let frame = frame_field(r)?;
            let index: usize = field(r, 1, "detection_index")?;
            let values: Embedding = (2..r.len())
                .map(|i| field(r, i, "embedding value"))
                .collect::<Result<_, _>>()?;
            if values.iter().any(|v: &f64| !v.is_finite()) {
                return Err("embedding values must be finite".into());
            }
            let expected = *dim.get_or_insert(values.len());
            if values.len() != expected {
                return Err(format!(
                    "embedding dimension {} differs from {expected}",
                    values.len()
                ));
            }
            let det = bundle
                .detections
                .get_mut(frame as usize - 1)
                .and_then(|f| f.get_mut(index))
                .ok_or_else(|| format!("frame {frame} has no detection {index}"))?;
            if !seen.insert((frame, index)) {
                return Err(format!(
                    "duplicate embedding for frame {frame}, detection {index}"
                ));
            }
            det.embedding = Some(values);
            Ok(())
        };
        parse().map_err(fail)
    })?;
    if let Some(d) = dim {
        bundle.info.embedding_dim = d;
    }
    Ok(bundle)
}

/// Reads `frame,object_id,x,y,w,h,class_id` rows into `bundle`, extending
/// its frame count if the ground truth runs longer.
pub fn load_ground_truth(
    path: impl AsRef<Path>,
    mut bundle: SequenceBundle,
) -> Result<SequenceBundle, IngestError> {
    let mut rows: Vec<(u32, GroundTruthObject)> = Vec::new();
    Rows::open(path.as_ref())?.for_each(|r, fail| {
        let parse = || -> Result<(u32, GroundTruthObject), String> {
            expect_len(r, 7)?;
            let frame = frame_field(r)?;
            let object_id = field(r, 1, "object_id")?;
            let bbox = box_fields(r, 2)?;
            let class_id = field(r, 6, "class_id")?;
            Ok((
                frame,
                GroundTruthObject {
                    object_id,
                    class_id,
                    bbox,
                },
            ))
        };
        rows.push(parse().map_err(fail)?);
        Ok(())
    })?;

    let frames = rows.iter().map(|(f, _)| *f).max().unwrap_or(0);
    bundle.ground_truth = Some(Vec::new());
    bundle.extend_to(frames);
    let gt = bundle.ground_truth.as_mut().expect("just set");
    for (frame, obj) in rows {
        gt[frame as usize - 1].push(obj);
    }
    Ok(bundle)
}

/// Reads a results file into per-frame outputs; `result[i]` is frame `i + 1`.
pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<Vec<TrackOutput>>, IngestError> {
    let mut frames: Vec<Vec<TrackOutput>> = Vec::new();
    Rows::open(path.as_ref())?.for_each(|r, fail| {
        let parse = || -> Result<(u32, TrackOutput), String> {
            expect_len(r, 7)?;
            let frame = frame_field(r)?;
            let track_id: TrackId = field(r, 1, "track_id")?;
            let bbox = box_fields(r, 2)?;
            let class_id = field(r, 6, "class_id")?;
            Ok((
                frame,
                TrackOutput {
                    track_id,
                    class_id,
                    bbox,
                },
            ))
        };
        let (frame, out) = parse().map_err(fail)?;
        if frames.len() < frame as usize {
            frames.resize_with(frame as usize, Vec::new);
        }
        frames[frame as usize - 1].push(out);
        Ok(())
    })?;
    Ok(frames)
}

fn create(path: &Path) -> Result<csv::Writer<fs::File>, IngestError> {
    let file = fs::File::create(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::WriterBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_writer(file))
}

fn write_rows<I, R>(path: &Path, rows: I) -> Result<(), IngestError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let csv_err = |source| IngestError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut w = create(path)?;
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>())
            .map_err(csv_err)?;
    }
    w.flush().map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn box_strings(b: &BoundingBox) -> [String; 4] {
    [
        b.x.to_string(),
        b.y.to_string(),
        b.w.to_string(),
        b.h.to_string(),
    ]
}

fn frame_number(i: usize) -> String {
    (i + 1).to_string()
}

pub fn write_detections(
    detections: &[Vec<Detection>],
    path: impl AsRef<Path>,
) -> Result<(), IngestError> {
    let rows = detections.iter().enumerate().flat_map(|(i, frame)| {
        frame.iter().map(move |d| {
            let mut row = vec![frame_number(i), "-1".to_string()];
            row.extend(box_strings(&d.bbox));
            row.push(d.confidence.to_string());
            row.push(d.class_id.to_string());
            row
        })
    });
    write_rows(path.as_ref(), rows)
}

pub fn write_embeddings(
    detections: &[Vec<Detection>],
    path: impl AsRef<Path>,
) -> Result<(), IngestError> {
    let rows = detections.iter().enumerate().flat_map(|(i, frame)| {
        frame.iter().enumerate().filter_map(move |(j, d)| {
            d.embedding.as_ref().map(|e| {
                let mut row = vec![frame_number(i), j.to_string()];
                row.extend(e.iter().map(f64::to_string));
                row
            })
        })
    });
    write_rows(path.as_ref(), rows)
}

pub fn write_ground_truth(
    ground_truth: &[Vec<GroundTruthObject>],
    path: impl AsRef<Path>,
) -> Result<(), IngestError> {
    let rows = ground_truth.iter().enumerate().flat_map(|(i, frame)| {
        frame.iter().map(move |g| {
            let mut row = vec![frame_number(i), g.object_id.to_string()];
            row.extend(box_strings(&g.bbox));
            row.push(g.class_id.to_string());
            row
        })
    });
    write_rows(path.as_ref(), rows)
}

/// One row per confirmed output.
pub fn write_results(results: &[FrameResult], path: impl AsRef<Path>) -> Result<(), IngestError> {
    let rows = results.iter().flat_map(|r| {
        r.outputs.iter().map(move |o| {
            let mut row = vec![r.frame_index.to_string(), o.track_id.to_string()];
            row.extend(box_strings(&o.bbox));
            row.push(o.class_id.to_string());
            row
        })
    });
    write_rows(path.as_ref(), rows)
}

/// Writes `seqinfo.toml`, `det.csv`, and `emb.csv` / `gt.csv` when present.
pub fn write_sequence(bundle: &SequenceBundle, dir: impl AsRef<Path>) -> Result<(), IngestError> {
    let dir = dir.as_ref();
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| IngestError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;

    let info_path = dir.join(INFO_FILE);
    let info = toml::to_string(&bundle.info).expect("sequence info serializes");
    fs::write(&info_path, info).map_err(io(&info_path))?;

    write_detections(&bundle.detections, dir.join(DETECTIONS_FILE))?;
    if bundle
        .detections
        .iter()
        .flatten()
        .any(|d| d.embedding.is_some())
    {
        write_embeddings(&bundle.detections, dir.join(EMBEDDINGS_FILE))?;
    }
    if let Some(gt) = &bundle.ground_truth {
        write_ground_truth(gt, dir.join(GROUND_TRUTH_FILE))?;
    }
    Ok(())
}

/// Reads a directory written by [`write_sequence`]. Only `det.csv` and
/// `seqinfo.toml` are required.
pub fn load_sequence(dir: impl AsRef<Path>) -> Result<SequenceBundle, IngestError> {
    let dir = dir.as_ref();
    let info_path = dir.join(INFO_FILE);
    let text = fs::read_to_string(&info_path).map_err(|source| IngestError::Io {
        path: info_path.clone(),
        source,
    })?;
    let info: SequenceInfo = toml::from_str(&text).map_err(|e| IngestError::Invalid {
        path: info_path.clone(),
        reason: e.to_string(),
    })?;

    let det_path = dir.join(DETECTIONS_FILE);
    let mut bundle = load_detections(&det_path)?;
    let too_long = |path: &Path, frames: u32| IngestError::Invalid {
        path: path.to_path_buf(),
        reason: format!(
            "data for frame {frames} but the sequence declares {} frames",
            info.frames
        ),
    };
    if bundle.info.frames > info.frames {
        return Err(too_long(&det_path, bundle.info.frames));
    }
    bundle.info = SequenceInfo {
        frames: bundle.info.frames,
        ..info.clone()
    };
    bundle.extend_to(info.frames);

    let emb_path = dir.join(EMBEDDINGS_FILE);
    if emb_path.exists() {
        bundle = load_embeddings(&emb_path, bundle)?;
    }
    let gt_path = dir.join(GROUND_TRUTH_FILE);
    if gt_path.exists() {
        bundle = load_ground_truth(&gt_path, bundle)?;
        if bundle.info.frames > info.frames {
            return Err(too_long(&gt_path, bundle.info.frames));
        }
    }
    Ok(bundle)
}
