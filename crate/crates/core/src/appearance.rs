//! Bounded per-track appearance history and the cosine matching cost.

use std::collections::VecDeque;

use thiserror::Error;

pub type Embedding = Vec<f64>;

/// Default number of embeddings kept per track.
pub const DEFAULT_HISTORY: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AppearanceError {
    #[error("embedding dimension {actual} does not match history dimension {expected}")]
    Dimension { expected: usize, actual: usize },
    #[error("embedding has zero norm")]
    ZeroNorm,
    #[error("embedding is empty or contains non-finite values")]
    Invalid,
    #[error("feature history is empty")]
    EmptyHistory,
}

/// Ring buffer of the most recent `capacity` embeddings of one track.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureHistory {
    capacity: usize,
    entries: VecDeque<Embedding>,
}

impl FeatureHistory {
    /// # Panics
    /// If `capacity` is zero.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "feature history capacity must be positive");
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Dimension of the stored embeddings, once anything has been pushed.
    pub fn dim(&self) -> Option<usize> {
        self.entries.front().map(Vec::len)
    }

    pub fn entries(&self) -> impl Iterator<Item = &Embedding> {
        self.entries.iter()
    }

    /// Appends `f`, evicting the oldest entry when full.
    pub fn push(&mut self, f: Embedding) -> Result<(), AppearanceError> {
        validate(&f)?;
        if let Some(expected) = self.dim() {
            if f.len() != expected {
                return Err(AppearanceError::Dimension {
                    expected,
                    actual: f.len(),
                });
            }
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(f);
        Ok(())
    }
}

fn validate(f: &[f64]) -> Result<f64, AppearanceError> {
    if f.is_empty() || f.iter().any(|v| !v.is_finite()) {
        return Err(AppearanceError::Invalid);
    }
    let norm = f.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(AppearanceError::ZeroNorm);
    }
    Ok(norm)
}

pub fn cosine_similarity(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// `1 - max_k cos(f_k, query)` over the stored entries, in `[0, 2]`.
pub fn cosine_cost(history: &FeatureHistory, query: &[f64]) -> Result<f64, AppearanceError> {
    let expected = history.dim().ok_or(AppearanceError::EmptyHistory)?;
    if query.len() != expected {
        return Err(AppearanceError::Dimension {
            expected,
            actual: query.len(),
        });
    }
    validate(query)?;
    let best = history
        .entries()
        .map(|f| cosine_similarity(f, query))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok((1.0 - best).clamp(0.0, 2.0))
}
