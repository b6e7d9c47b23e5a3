//! Immutable labeled sample tables.

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};

/// Binary classifier output, one of {-1, +1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Label {
    Neg,
    Pos,
}

impl Label {
    /// Sign convention: non-negative values map to `Pos`, so `sign(0) = +1`.
    pub fn from_sign(v: f64) -> Self {
        if v >= 0.0 {
            Label::Pos
        } else {
            Label::Neg
        }
    }

    pub fn from_i8(v: i8) -> Option<Self> {
        match v {
            1 => Some(Label::Pos),
            -1 => Some(Label::Neg),
            _ => None,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Label::Pos => 1,
            Label::Neg => -1,
        }
    }

    pub fn as_f64(self) -> f64 {
        self.as_i8() as f64
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Pos => Label::Neg,
            Label::Neg => Label::Pos,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Pos
    }
}

/// Where a dataset came from: generator name, master seed, and the
/// parameters that reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub generator: String,
    pub seed: u64,
    pub params: Vec<(String, String)>,
}

impl Provenance {
    pub fn new(generator: &str, seed: u64) -> Self {
        Provenance {
            generator: generator.to_string(),
            seed,
            params: Vec::new(),
        }
    }

    pub fn with_param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.push((key.to_string(), value.to_string()));
        self
    }
}

/// N feature vectors in R^d with labels in {-1, +1}.
///
/// Features are stored row-major in a flat buffer. The table is immutable
/// after construction; all entries are validated finite.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<Label>,
    meta: Provenance,
}

impl Dataset {
    /// Build from row vectors. Every row must have the same dimension d >= 1
    /// and finite entries; `features.len()` must match `labels.len()`.
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<Label>, meta: Provenance) -> Result<Self> {
        if rows.is_empty() {
            return Err(AuditError::InvalidInput("dataset must be nonempty".into()));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(AuditError::InvalidInput("feature dimension must be >= 1".into()));
        }
        let mut features = Vec::with_capacity(rows.len() * dim);
        for row in &rows {
            if row.len() != dim {
                return Err(AuditError::DimensionMismatch {
                    expected: dim,
                    got: row.len(),
                });
            }
            for &v in row {
                if !v.is_finite() {
                    return Err(AuditError::InvalidInput("non-finite feature entry".into()));
                }
                features.push(v);
            }
        }
        Self::from_flat(features, dim, labels, meta)
    }

    /// Build from a flat row-major buffer of length `n * dim`.
    pub fn from_flat(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<Label>,
        meta: Provenance,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(AuditError::InvalidInput("feature dimension must be >= 1".into()));
        }
        if features.len() != labels.len() * dim {
            return Err(AuditError::InvalidInput(format!(
                "feature buffer length {} does not match {} samples of dimension {}",
                features.len(),
                labels.len(),
                dim
            )));
        }
        if labels.is_empty() {
            return Err(AuditError::InvalidInput("dataset must be nonempty".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(AuditError::InvalidInput("non-finite feature entry".into()));
        }
        Ok(Dataset {
            features,
            dim,
            labels,
            meta,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.dim)
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> Label {
        self.labels[i]
    }

    pub fn meta(&self) -> &Provenance {
        &self.meta
    }

    /// Same features, every label negated (the D^- construction).
    pub fn with_flipped_labels(&self) -> Dataset {
        Dataset {
            features: self.features.clone(),
            dim: self.dim,
            labels: self.labels.iter().map(|l| l.flipped()).collect(),
            meta: self.meta.clone(),
        }
    }

    /// Subset by sample indices.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            features,
            dim: self.dim,
            labels,
            meta: self.meta.clone(),
        }
    }
}
