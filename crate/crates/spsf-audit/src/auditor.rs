//! The grid-sweep audit: for each mass level mu in a window [a, b], learn a
//! fixed-mass halfspace against the classifier labels and against their
//! negation, keep the side with the larger deviation on a held-out
//! estimation split, and certify the grid maximum of mu * |deviation|.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label};
use crate::error::{AuditError, Result};
use crate::halfspace::{Halfspace, MassConstraint};
use crate::metrics::{deviation, hoeffding_half_width, weighted_unfairness, EstimateWithCI, FairnessMeasurement};
use crate::oracle::{learn_fixed_mass_halfspace, OracleKind, OracleRequest, OracleResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AuditMode {
    /// Report the certificate halfspace with the verdict.
    Constructive,
    /// Report only whether an unfair subgroup exists.
    NonConstructive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Fair,
    Unfair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// Oracle run on labels as-is.
    Plus,
    /// Oracle run on negated labels.
    Minus,
}

/// Audit parameters. `n` is the grid count: the sweep visits the n+1 mass
/// values `a + k(b-a)/n`; `n = 1` means the single point mu = a and
/// requires `a = b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub epsilon: f64,
    pub delta: f64,
    pub oracle: OracleKind,
    pub mode: AuditMode,
    /// The verdict threshold gamma'.
    pub gamma_threshold: f64,
    pub seed: u64,
    /// Fraction of samples used for learning; the rest estimate.
    pub split_fraction: f64,
    /// Flagging tolerance for the empirical mass constraint.
    pub mass_tolerance: f64,
}

impl AuditConfig {
    pub fn new(
        a: f64,
        b: f64,
        n: usize,
        epsilon: f64,
        delta: f64,
        oracle: OracleKind,
        mode: AuditMode,
        gamma_threshold: f64,
        seed: u64,
    ) -> Self {
        AuditConfig {
            a,
            b,
            n,
            epsilon,
            delta,
            oracle,
            mode,
            gamma_threshold,
            seed,
            split_fraction: 0.5,
            mass_tolerance: 0.01,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a <= self.b && self.b < 1.0) {
            return Err(AuditError::InvalidInput(format!(
                "mass window must satisfy 0 < a <= b < 1, got [{}, {}]",
                self.a, self.b
            )));
        }
        if self.n < 1 {
            return Err(AuditError::InvalidInput("grid count must be >= 1".into()));
        }
        if self.n == 1 && self.a != self.b {
            return Err(AuditError::InvalidInput(
                "grid count 1 means a single mass point and requires a = b".into(),
            ));
        }
        for (name, v) in [("epsilon", self.epsilon), ("delta", self.delta), ("split_fraction", self.split_fraction)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(AuditError::InvalidInput(format!("{name} must be in (0,1), got {v}")));
            }
        }
        if !(self.gamma_threshold >= 0.0) {
            return Err(AuditError::InvalidInput("gamma threshold must be >= 0".into()));
        }
        Ok(())
    }

    /// The mass grid `a + k(b-a)/n`, k = 0..=n, deduplicated.
    pub fn mass_grid(&self) -> Vec<f64> {
        if self.a == self.b {
            return vec![self.a];
        }
        let mut grid: Vec<f64> = (0..=self.n)
            .map(|k| self.a + k as f64 * (self.b - self.a) / self.n as f64)
            .collect();
        grid.dedup();
        grid
    }
}

/// Result of one grid point: both oracle runs, the chosen side, and the
/// measurement of the chosen candidate on the estimation split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditStepRecord {
    pub mu: f64,
    pub side: Side,
    pub plus: OracleResult,
    pub minus: OracleResult,
    pub measurement: FairnessMeasurement,
}

impl AuditStepRecord {
    pub fn chosen(&self) -> &OracleResult {
        match self.side {
            Side::Plus => &self.plus,
            Side::Minus => &self.minus,
        }
    }

    /// Selection key of Algorithm sweep: nominal mu times measured |d|.
    pub fn score(&self) -> f64 {
        self.mu * self.measurement.deviation.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub config: AuditConfig,
    pub trace: Vec<AuditStepRecord>,
    pub certificate: Halfspace,
    pub certificate_mu: f64,
    pub gamma_hat: EstimateWithCI,
    pub verdict: Verdict,
    pub n_learn: usize,
    pub n_estimate: usize,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seeds are keyed by the mass value, not the iteration index, so refining
/// the grid re-runs existing points identically.
fn mu_seed(master: u64, mu: f64, side: Side) -> u64 {
    let tag = match side {
        Side::Plus => 0x2B,
        Side::Minus => 0x2D,
    };
    splitmix64(master ^ mu.to_bits() ^ tag)
}

const SPLIT_TAG: u64 = 0x5370_6C69_7453_6565; // stream separation for the shuffle

/// Seeded shuffle split into (learn, estimate).
pub fn split_dataset(data: &Dataset, split_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if data.len() < 4 {
        return Err(AuditError::InsufficientSamples { need: 4, got: data.len() });
    }
    let mut indices: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(splitmix64(seed ^ SPLIT_TAG));
    indices.shuffle(&mut rng);
    let n_learn = ((split_fraction * data.len() as f64).round() as usize).clamp(1, data.len() - 1);
    let (learn_idx, est_idx) = indices.split_at(n_learn);
    Ok((data.subset(learn_idx), data.subset(est_idx)))
}

/// One grid point: run the oracle on labels as-is and on negated labels,
/// measure both candidates' deviation on the estimation split, keep the
/// larger in magnitude (ties toward the as-is side).
pub fn audit_step(
    learn: &Dataset,
    learn_negated: &Dataset,
    estimate: &Dataset,
    mu: f64,
    cfg: &AuditConfig,
    n_grid: usize,
) -> Result<AuditStepRecord> {
    let mass = MassConstraint::new(mu, cfg.mass_tolerance)?;
    // Algorithm budget: each oracle call gets delta / 2n.
    let oracle_delta = (cfg.delta / (2.0 * n_grid as f64)).clamp(f64::MIN_POSITIVE, 0.5);
    let plus = learn_fixed_mass_halfspace(
        &OracleRequest::new(learn, mass, cfg.epsilon, oracle_delta, mu_seed(cfg.seed, mu, Side::Plus))?,
        cfg.oracle,
    )?;
    let minus = learn_fixed_mass_halfspace(
        &OracleRequest::new(learn_negated, mass, cfg.epsilon, oracle_delta, mu_seed(cfg.seed, mu, Side::Minus))?,
        cfg.oracle,
    )?;

    let dev_plus = deviation(estimate, estimate.labels(), &plus.halfspace)?;
    let dev_minus = deviation(estimate, estimate.labels(), &minus.halfspace)?;
    let side = if dev_minus.abs() > dev_plus.abs() {
        Side::Minus
    } else {
        Side::Plus
    };
    let chosen = match side {
        Side::Plus => &plus.halfspace,
        Side::Minus => &minus.halfspace,
    };
    let measurement = weighted_unfairness(
        estimate,
        estimate.labels(),
        chosen,
        estimation_confidence(cfg, n_grid),
    )?;
    Ok(AuditStepRecord { mu, side, plus, minus, measurement })
}

/// Half the delta budget goes to the union bound over the 2(n+1) candidate
/// measurements on the estimation split.
fn estimation_confidence(cfg: &AuditConfig, n_grid: usize) -> f64 {
    let delta_est = cfg.delta / 2.0 / (2.0 * (n_grid as f64 + 1.0));
    1.0 - delta_est.clamp(f64::MIN_POSITIVE, 0.5)
}

/// Run the full sweep and assemble the report.
pub fn audit(data: &Dataset, cfg: &AuditConfig) -> Result<AuditReport> {
    cfg.validate()?;
    let (learn, estimate) = split_dataset(data, cfg.split_fraction, cfg.seed)?;
    let learn_negated = learn.with_flipped_labels();
    let grid = cfg.mass_grid();

    let mut trace = Vec::with_capacity(grid.len());
    for &mu in &grid {
        trace.push(audit_step(&learn, &learn_negated, &estimate, mu, cfg, cfg.n)?);
    }

    // argmax of mu * |d|; ties break toward smaller mu, so strict > while
    // scanning the grid in increasing order
    let mut best = 0usize;
    for (i, rec) in trace.iter().enumerate() {
        if rec.score() > trace[best].score() {
            best = i;
        }
    }
    let winner = &trace[best];
    let gamma_hat = gamma_estimate(&winner.measurement, cfg, grid.len());
    let verdict = verdict(&gamma_hat, cfg.gamma_threshold);
    Ok(AuditReport {
        config: cfg.clone(),
        certificate: winner.chosen().halfspace.clone(),
        certificate_mu: winner.mu,
        gamma_hat,
        verdict,
        n_learn: learn.len(),
        n_estimate: estimate.len(),
        trace,
    })
}

/// gamma = |Pr{c} Pr{g} - Pr{c and g}|, so its error is bounded by three
/// probability-estimate errors; the half-width is 3x the per-probability
/// Hoeffding width at the estimation confidence.
fn gamma_estimate(m: &FairnessMeasurement, cfg: &AuditConfig, n_grid: usize) -> EstimateWithCI {
    let confidence = estimation_confidence(cfg, n_grid);
    let n = m.mass.n_samples;
    EstimateWithCI {
        point: m.gamma,
        half_width: 3.0 * hoeffding_half_width(confidence, n),
        confidence,
        n_samples: n,
    }
}

/// Unfair iff the lower confidence edge clears the threshold.
pub fn verdict(gamma_hat: &EstimateWithCI, gamma_threshold: f64) -> Verdict {
    if gamma_hat.point - gamma_hat.half_width >= gamma_threshold {
        Verdict::Unfair
    } else {
        Verdict::Fair
    }
}

/// Fresh-sample measurement of a (possibly third-party) certificate.
pub fn evaluate_certificate(
    data: &Dataset,
    labels: &[Label],
    h: &Halfspace,
    confidence: f64,
) -> Result<FairnessMeasurement> {
    weighted_unfairness(data, labels, h, confidence)
}
