//! Synthetic multi-class sequences with known ground truth.
//!
//! Objects move on straight lines (one horizontal lane each, by default) or
//! on circular arcs. Scripted events hide or relabel individual detections
//! while the ground truth stays untouched.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::appearance::Embedding;
use crate::geometry::BoundingBox;
use crate::ingest::{GroundTruthObject, SequenceBundle, SequenceInfo};
use crate::tracker::{ClassId, Detection};

/// Largest pairwise cosine similarity allowed between base embeddings.
pub const MAX_BASE_SIMILARITY: f64 = 0.5;
const EMBEDDING_ATTEMPTS: usize = 10_000;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("could not draw {objects} embeddings of dimension {dim} with pairwise cosine below {MAX_BASE_SIMILARITY}")]
    Embeddings { objects: usize, dim: usize },
    #[error("cannot read scenario {path}: {reason}")]
    Load { path: String, reason: String },
}

/// Path of one object, in pixels per frame. `t` counts frames from 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Trajectory {
    /// Center starts at `(x, y)` and moves by `(vx, vy)` each frame.
    Linear { x: f64, y: f64, vx: f64, vy: f64 },
    /// Center at `(cx + r cos θ, cy + r sin θ)` with `θ = start_angle + angular_velocity · t`.
    Arc {
        cx: f64,
        cy: f64,
        radius: f64,
        angular_velocity: f64,
        start_angle: f64,
    },
}

impl Trajectory {
    pub fn center(&self, t: f64) -> (f64, f64) {
        match *self {
            Trajectory::Linear { x, y, vx, vy } => (x + vx * t, y + vy * t),
            Trajectory::Arc {
                cx,
                cy,
                radius,
                angular_velocity,
                start_angle,
            } => {
                let a = start_angle + angular_velocity * t;
                (cx + radius * a.cos(), cy + radius * a.sin())
            }
        }
    }
}

/// Replaces the generated motion (and optionally size) of one object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectMotion {
    pub object_id: u64,
    pub trajectory: Trajectory,
    #[serde(default)]
    pub size: Option<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EventKind {
    Occlusion {
        object_id: u64,
    },
    Misclassify {
        object_id: u64,
        wrong_class: ClassId,
    },
    Dropout {
        object_id: u64,
    },
}

impl EventKind {
    pub fn object_id(&self) -> u64 {
        match *self {
            EventKind::Occlusion { object_id } | EventKind::Dropout { object_id } => object_id,
            EventKind::Misclassify { object_id, .. } => object_id,
        }
    }
}

/// An event active on frames `frames.0..=frames.1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEvent {
    pub frames: (u32, u32),
    pub kind: EventKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    /// Objects per class; class `i` has label `i`.
    pub class_counts: Vec<usize>,
    pub num_frames: u32,
    /// `(width, height)` in pixels.
    pub image_size: (f64, f64),
    pub motion: Vec<ObjectMotion>,
    /// 0 disables embeddings.
    pub embedding_dim: usize,
    pub embedding_noise: f64,
    pub detection_noise: f64,
    pub events: Vec<FrameEvent>,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        Self {
            class_counts: vec![2, 2, 2],
            num_frames: 100,
            image_size: (1280.0, 720.0),
            motion: Vec::new(),
            embedding_dim: 32,
            embedding_noise: 0.05,
            detection_noise: 1.0,
            events: Vec::new(),
            seed: 2024,
        }
    }
}

impl ScenarioSpec {
    pub fn from_toml_str(text: &str) -> Result<Self, ScenarioError> {
        let spec: Self = toml::from_str(text).map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let load_err = |reason: String| ScenarioError::Load {
            path: path.display().to_string(),
            reason,
        };
        let text = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }

    pub fn num_objects(&self) -> usize {
        self.class_counts.iter().sum()
    }

    /// Class label of object `id` (ids run from 1 in class-major order).
    pub fn class_of(&self, id: u64) -> Option<ClassId> {
        let mut upper = 0u64;
        for (c, &n) in self.class_counts.iter().enumerate() {
            upper += n as u64;
            if id >= 1 && id <= upper {
                return Some(c as ClassId);
            }
        }
        None
    }

    /// Short label such as `(2,2,2)`.
    pub fn label(&self) -> String {
        let parts: Vec<String> = self.class_counts.iter().map(usize::to_string).collect();
        format!("({})", parts.join(","))
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |msg: String| Err(ScenarioError::Invalid(msg));
        if self.num_objects() == 0 {
            return invalid("class_counts must contain at least one object".into());
        }
        if self.num_frames == 0 {
            return invalid("num_frames must be at least 1".into());
        }
        let (w, h) = self.image_size;
        if !(w > 0.0 && h > 0.0 && w.is_finite() && h.is_finite()) {
            return invalid(format!("image_size ({w}, {h}) must be positive"));
        }
        for (name, v) in [
            ("embedding_noise", self.embedding_noise),
            ("detection_noise", self.detection_noise),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return invalid(format!("{name} must be a non-negative number, got {v}"));
            }
        }
        let n = self.num_objects() as u64;
        for m in &self.motion {
            if m.object_id < 1 || m.object_id > n {
                return invalid(format!("motion refers to unknown object {}", m.object_id));
            }
            if let Some((w, h)) = m.size {
                if !(w > 0.0 && h > 0.0) {
                    return invalid(format!("object {} has non-positive size", m.object_id));
                }
            }
        }
        for e in &self.events {
            let (start, end) = e.frames;
            if start < 1 || start > end || end > self.num_frames {
                return invalid(format!(
                    "event frames {start}..={end} outside 1..={}",
                    self.num_frames
                ));
            }
            let id = e.kind.object_id();
            let Some(class) = self.class_of(id) else {
                return invalid(format!("event refers to unknown object {id}"));
            };
            if let EventKind::Misclassify { wrong_class, .. } = e.kind {
                if wrong_class == class {
                    return invalid(format!(
                        "object {id} misclassified as its own class {class}"
                    ));
                }
            }
        }
        Ok(())
    }
}

struct Object {
    id: u64,
    class_id: ClassId,
    trajectory: Trajectory,
    size: (f64, f64),
    embedding: Option<Embedding>,
}

fn unit(v: Embedding) -> Embedding {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

fn random_unit(dim: usize, rng: &mut ChaCha8Rng) -> Embedding {
    loop {
        let v: Embedding = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        if v.iter().any(|x: &f64| *x != 0.0) {
            return unit(v);
        }
    }
}

fn base_embeddings(
    count: usize,
    dim: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Embedding>, ScenarioError> {
    let mut out: Vec<Embedding> = Vec::with_capacity(count);
    for _ in 0..count {
        let mut attempts = 0;
        loop {
            attempts += 1;
            if attempts > EMBEDDING_ATTEMPTS {
                return Err(ScenarioError::Embeddings {
                    objects: count,
                    dim,
                });
            }
            let v = random_unit(dim, rng);
            let similar = out
                .iter()
                .any(|u| u.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() >= MAX_BASE_SIMILARITY);
            if !similar {
                out.push(v);
                break;
            }
        }
    }
    Ok(out)
}

fn build_objects(spec: &ScenarioSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Object>, ScenarioError> {
    let n = spec.num_objects();
    let (w, h) = spec.image_size;
    let mut lanes: Vec<usize> = (0..n).collect();
    lanes.shuffle(rng);

    let mut objects = Vec::with_capacity(n);
    let mut id = 0u64;
    for (class, &count) in spec.class_counts.iter().enumerate() {
        for _ in 0..count {
            let lane = lanes[id as usize];
            id += 1;
            // Draw every parameter even when overridden, so one override
            // leaves the other objects unchanged.
            let cx = rng.random_range(0.1 * w..0.4 * w);
            let cy = (lane + 1) as f64 * h / (n + 1) as f64;
            let vx = rng.random_range(1.0..3.0);
            let vy = rng.random_range(-0.05..0.05);
            let size = (rng.random_range(30.0..60.0), rng.random_range(20.0..40.0));

            let custom = spec.motion.iter().find(|m| m.object_id == id);
            objects.push(Object {
                id,
                class_id: class as ClassId,
                trajectory: custom.map_or(
                    Trajectory::Linear {
                        x: cx,
                        y: cy,
                        vx,
                        vy,
                    },
                    |m| m.trajectory.clone(),
                ),
                size: custom.and_then(|m| m.size).unwrap_or(size),
                embedding: None,
            });
        }
    }

    if spec.embedding_dim > 0 {
        let bases = base_embeddings(n, spec.embedding_dim, rng)?;
        for (o, e) in objects.iter_mut().zip(bases) {
            o.embedding = Some(e);
        }
    }
    Ok(objects)
}

/// Clips the box centered at `(cx, cy)` to the image.
fn clamped_box(cx: f64, cy: f64, size: (f64, f64), image: (f64, f64)) -> Option<BoundingBox> {
    let x0 = (cx - size.0 / 2.0).max(0.0);
    let y0 = (cy - size.1 / 2.0).max(0.0);
    let x1 = (cx + size.0 / 2.0).min(image.0);
    let y1 = (cy + size.1 / 2.0).min(image.1);
    BoundingBox::new(x0, y0, x1 - x0, y1 - y0).ok()
}

fn inside(cx: f64, cy: f64, image: (f64, f64)) -> bool {
    (0.0..=image.0).contains(&cx) && (0.0..=image.1).contains(&cy)
}

/// Renders `spec` into per-frame detections and ground truth.
pub fn generate(spec: &ScenarioSpec) -> Result<SequenceBundle, ScenarioError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let objects = build_objects(spec, &mut rng)?;

    let box_noise = Normal::new(0.0, spec.detection_noise).expect("validated");
    let emb_noise = Normal::new(0.0, spec.embedding_noise).expect("validated");
    let mut departed = vec![false; objects.len()];

    let mut detections = Vec::with_capacity(spec.num_frames as usize);
    let mut ground_truth = Vec::with_capacity(spec.num_frames as usize);
    for frame in 1..=spec.num_frames {
        let t = (frame - 1) as f64;
        let mut dets = Vec::new();
        let mut gts = Vec::new();
        for (i, o) in objects.iter().enumerate() {
            let jitter: [f64; 4] = std::array::from_fn(|_| box_noise.sample(&mut rng));
            let confidence = rng.random_range(0.7..=1.0);
            let embedding = o.embedding.as_ref().map(|base| {
                let noisy: Embedding = base
                    .iter()
                    .map(|v| v + emb_noise.sample(&mut rng))
                    .collect();
                if spec.embedding_noise > 0.0 && noisy.iter().any(|v| *v != 0.0) {
                    unit(noisy)
                } else {
                    base.clone()
                }
            });

            let (cx, cy) = o.trajectory.center(t);
            departed[i] |= !inside(cx, cy, spec.image_size);
            if departed[i] {
                continue;
            }
            let Some(truth) = clamped_box(cx, cy, o.size, spec.image_size) else {
                continue;
            };
            gts.push(GroundTruthObject {
                object_id: o.id,
                class_id: o.class_id,
                bbox: truth,
            });

            let mut class_id = o.class_id;
            let mut visible = true;
            for e in spec
                .events
                .iter()
                .filter(|e| (e.frames.0..=e.frames.1).contains(&frame))
            {
                match e.kind {
                    EventKind::Occlusion { object_id } | EventKind::Dropout { object_id }
                        if object_id == o.id =>
                    {
                        visible = false
                    }
                    EventKind::Misclassify {
                        object_id,
                        wrong_class,
                    } if object_id == o.id => class_id = wrong_class,
                    _ => {}
                }
            }
            if !visible {
                continue;
            }

            let bbox = if spec.detection_noise > 0.0 {
                BoundingBox {
                    x: truth.x + jitter[0],
                    y: truth.y + jitter[1],
                    w: (truth.w + jitter[2]).max(1.0),
                    h: (truth.h + jitter[3]).max(1.0),
                }
            } else {
                truth
            };
            dets.push(Detection {
                bbox,
                class_id,
                confidence,
                embedding,
            });
        }
        detections.push(dets);
        ground_truth.push(gts);
    }

    Ok(SequenceBundle {
        info: SequenceInfo {
            frames: spec.num_frames,
            width: spec.image_size.0,
            height: spec.image_size.1,
            embedding_dim: spec.embedding_dim,
        },
        detections,
        ground_truth: Some(ground_truth),
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SuiteFile {
    scenario: Vec<ScenarioSpec>,
}

/// Reads a suite file: a TOML document with one `[[scenario]]` table per
/// scenario, each holding [`ScenarioSpec`] keys.
pub fn load_suite(path: impl AsRef<Path>) -> Result<Vec<ScenarioSpec>, ScenarioError> {
    let path = path.as_ref();
    let load_err = |reason: String| ScenarioError::Load {
        path: path.display().to_string(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| load_err(e.to_string()))?;
    let suite: SuiteFile = toml::from_str(&text).map_err(|e| load_err(e.to_string()))?;
    if suite.scenario.is_empty() {
        return Err(load_err("suite has no scenarios".into()));
    }
    for s in &suite.scenario {
        s.validate()?;
    }
    Ok(suite.scenario)
}

/// The seven class distributions used for the timing comparison, sharing
/// every other setting.
pub fn table1_suite() -> Vec<ScenarioSpec> {
    [
        [2, 2, 2],
        [3, 2, 1],
        [1, 1, 4],
        [6, 0, 0],
        [0, 0, 6],
        [3, 3, 3],
        [4, 4, 4],
    ]
    .into_iter()
    .map(|counts| ScenarioSpec {
        class_counts: counts.to_vec(),
        ..Default::default()
    })
    .collect()
}

/// Noise-free, event-free version of `spec`.
pub fn noiseless(spec: ScenarioSpec) -> ScenarioSpec {
    ScenarioSpec {
        embedding_noise: 0.0,
        detection_noise: 0.0,
        events: Vec::new(),
        ..spec
    }
}

/// Frames during which [`occlusion_scenario`] hides object 1.
pub const OCCLUSION_FRAMES: (u32, u32) = (40, 54);

/// A car (object 1, class 0) circling on a tight arc is hidden for 15 frames
/// while a bus (object 2, class 1) drives across its path. Dead reckoning
/// carries the car's prediction off the arc, so only appearance can
/// re-associate it.
pub fn occlusion_scenario(seed: u64) -> ScenarioSpec {
    ScenarioSpec {
        class_counts: vec![1, 1],
        num_frames: 100,
        image_size: (640.0, 480.0),
        motion: vec![
            ObjectMotion {
                object_id: 1,
                trajectory: Trajectory::Arc {
                    cx: 320.0,
                    cy: 240.0,
                    radius: 80.0,
                    angular_velocity: 0.075,
                    start_angle: 0.0,
                },
                size: Some((40.0, 30.0)),
            },
            ObjectMotion {
                object_id: 2,
                trajectory: Trajectory::Linear {
                    x: 40.0,
                    y: 250.0,
                    vx: 4.0,
                    vy: 0.0,
                },
                size: Some((90.0, 60.0)),
            },
        ],
        embedding_dim: 32,
        embedding_noise: 0.05,
        detection_noise: 0.5,
        events: vec![FrameEvent {
            frames: OCCLUSION_FRAMES,
            kind: EventKind::Occlusion { object_id: 1 },
        }],
        seed,
    }
}

/// Two cars and two buses, noise-free; on frame 2 the detection of car 1 is
/// labelled as a bus.
pub fn misclassification_scenario() -> ScenarioSpec {
    ScenarioSpec {
        class_counts: vec![2, 2],
        num_frames: 20,
        embedding_noise: 0.0,
        detection_noise: 0.0,
        events: vec![FrameEvent {
            frames: (2, 2),
            kind: EventKind::Misclassify {
                object_id: 1,
                wrong_class: 1,
            },
        }],
        ..Default::default()
    }
}
