//! Empirical fairness quantities with Hoeffding confidence intervals.
//!
//! All estimates are plain frequencies on the given sample; the conditional
//! rate `Pr{c=1 | g}` is a ratio of counts on the same sample, which keeps
//! the agreement identity exact on the empirical measure.

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::error::{AuditError, Result};
use crate::halfspace::Halfspace;

/// A point estimate with a two-sided Hoeffding half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateWithCI {
    pub point: f64,
    pub half_width: f64,
    pub confidence: f64,
    pub n_samples: usize,
}

impl EstimateWithCI {
    pub fn probability(point: f64, confidence: f64, n_samples: usize) -> Self {
        EstimateWithCI {
            point,
            half_width: hoeffding_half_width(confidence, n_samples),
            confidence,
            n_samples,
        }
    }
}

/// `sqrt(ln(2 / (1 - confidence)) / (2 n))`.
pub fn hoeffding_half_width(confidence: f64, n_samples: usize) -> f64 {
    ((2.0 / (1.0 - confidence)).ln() / (2.0 * n_samples as f64)).sqrt()
}

/// Smallest N with `N >= ln(2/delta) / (2 eps^2)`.
pub fn hoeffding_sample_size(epsilon: f64, delta: f64) -> Result<usize> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(AuditError::InvalidInput(format!(
            "epsilon must be in (0,1), got {epsilon}"
        )));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AuditError::InvalidInput(format!(
            "delta must be in (0,1), got {delta}"
        )));
    }
    Ok(((2.0 / delta).ln() / (2.0 * epsilon * epsilon)).ceil() as usize)
}

/// All the pieces of the weighted unfairness of one subgroup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairnessMeasurement {
    /// `Pr{x in g}`
    pub mass: EstimateWithCI,
    /// `Pr{c(x) = 1}`
    pub pos_rate_global: EstimateWithCI,
    /// `Pr{c(x) = 1 | x in g}`
    pub pos_rate_group: EstimateWithCI,
    /// `d(c, g) = Pr{c=1} - Pr{c=1 | g}`
    pub deviation: f64,
    /// `Pr{x in g} * |d(c, g)|`
    pub gamma: f64,
}

/// Empirical frequency of a predicate over (features, label) pairs.
pub fn estimate_rate<F>(data: &Dataset, confidence: f64, predicate: F) -> EstimateWithCI
where
    F: Fn(&[f64], Label) -> bool,
{
    let hits = data
        .rows()
        .zip(data.labels())
        .filter(|(x, l)| predicate(x, **l))
        .count();
    EstimateWithCI::probability(hits as f64 / data.len() as f64, confidence, data.len())
}

struct JointCounts {
    n: usize,
    n_pos: usize,   // c = 1
    n_group: usize, // x in g
    n_both: usize,  // c = 1 and x in g
    n_agree: usize, // c(x) = g(x)
}

fn joint_counts(data: &Dataset, labels: &[Label], g: &Halfspace) -> Result<JointCounts> {
    if data.dim() != g.dim() {
        return Err(AuditError::DimensionMismatch {
            expected: g.dim(),
            got: data.dim(),
        });
    }
    if labels.len() != data.len() {
        return Err(AuditError::InvalidInput("label count does not match dataset".into()));
    }
    let mut counts = JointCounts {
        n: data.len(),
        n_pos: 0,
        n_group: 0,
        n_both: 0,
        n_agree: 0,
    };
    for (x, &c) in data.rows().zip(labels) {
        let in_group = g.evaluate_unchecked(x).is_positive();
        let pos = c.is_positive();
        if pos {
            counts.n_pos += 1;
        }
        if in_group {
            counts.n_group += 1;
            if pos {
                counts.n_both += 1;
            }
        }
        if pos == in_group {
            counts.n_agree += 1;
        }
    }
    Ok(counts)
}

/// `Pr{c=1} - Pr{c=1 | x in g}` on the empirical measure. `labels` are the
/// classifier outputs for the dataset rows.
pub fn deviation(data: &Dataset, labels: &[Label], g: &Halfspace) -> Result<f64> {
    let counts = joint_counts(data, labels, g)?;
    if counts.n_group == 0 {
        return Err(AuditError::EmptyGroup);
    }
    Ok(counts.n_pos as f64 / counts.n as f64 - counts.n_both as f64 / counts.n_group as f64)
}

/// Full measurement of `Pr{g} * |d(c, g)|` with component CIs.
pub fn weighted_unfairness(
    data: &Dataset,
    labels: &[Label],
    g: &Halfspace,
    confidence: f64,
) -> Result<FairnessMeasurement> {
    let counts = joint_counts(data, labels, g)?;
    if counts.n_group == 0 {
        return Err(AuditError::EmptyGroup);
    }
    let n = counts.n as f64;
    let mass = counts.n_group as f64 / n;
    let pos_global = counts.n_pos as f64 / n;
    let pos_group = counts.n_both as f64 / counts.n_group as f64;
    let deviation = pos_global - pos_group;
    Ok(FairnessMeasurement {
        mass: EstimateWithCI::probability(mass, confidence, counts.n),
        pos_rate_global: EstimateWithCI::probability(pos_global, confidence, counts.n),
        pos_rate_group: EstimateWithCI::probability(pos_group, confidence, counts.n_group),
        deviation,
        gamma: mass * deviation.abs(),
    })
}

/// Empirical `Pr{c(x) = h(x)}`.
pub fn agreement_rate(
    data: &Dataset,
    labels: &[Label],
    h: &Halfspace,
    confidence: f64,
) -> Result<EstimateWithCI> {
    let counts = joint_counts(data, labels, h)?;
    Ok(EstimateWithCI::probability(
        counts.n_agree as f64 / counts.n as f64,
        confidence,
        counts.n,
    ))
}

/// Empirical disagreement `Pr{c(x) != h(x)}` as a bare number.
pub fn disagreement(data: &Dataset, labels: &[Label], h: &Halfspace) -> Result<f64> {
    let counts = joint_counts(data, labels, h)?;
    Ok(1.0 - counts.n_agree as f64 / counts.n as f64)
}

/// Residual of the agreement identity
/// `2 Pr{g} d(c,g) = Pr{!c} Pr{!g} + Pr{c} Pr{g} - Pr{c = g}`,
/// which holds exactly for every probability measure; the empirical value
/// should vanish to rounding error.
pub fn lemma_identity_residual(data: &Dataset, labels: &[Label], g: &Halfspace) -> Result<f64> {
    let counts = joint_counts(data, labels, g)?;
    if counts.n_group == 0 {
        return Err(AuditError::EmptyGroup);
    }
    let n = counts.n as f64;
    let p_c = counts.n_pos as f64 / n;
    let p_g = counts.n_group as f64 / n;
    let p_agree = counts.n_agree as f64 / n;
    let d = p_c - counts.n_both as f64 / counts.n_group as f64;
    let lhs = 2.0 * p_g * d;
    let rhs = (1.0 - p_c) * (1.0 - p_g) + p_c * p_g - p_agree;
    Ok((lhs - rhs).abs())
}
