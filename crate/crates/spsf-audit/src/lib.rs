//! Auditing black-box binary classifiers for statistical parity subgroup
//! fairness over halfspace subgroups.
//!
//! The audit reduces to a sequence of fixed-positive-rate halfspace
//! learning problems: for each mass level mu on a grid over [a, b], a
//! pluggable oracle fits a halfspace of empirical mass mu to the classifier
//! labels and to their negation, and the sweep certifies the subgroup
//! maximizing mass times positive-rate deviation. Synthetic generators
//! (planted halfspaces and modular-projection hard instances with witness
//! halfspaces) validate the pipeline end to end.

pub mod auditor;
pub mod dataset;
pub mod error;
pub mod generators;
pub mod halfspace;
pub mod io;
pub mod metrics;
pub mod oracle;
pub mod report;

pub use auditor::{audit, AuditConfig, AuditMode, AuditReport, Verdict};
pub use dataset::{Dataset, Label, Provenance};
pub use error::{AuditError, Result};
pub use halfspace::{
    fixed_mass_halfspace_empirical, fixed_mass_halfspace_gaussian, gaussian_quantile, Halfspace,
    MassConstraint,
};
pub use metrics::{EstimateWithCI, FairnessMeasurement};
pub use oracle::{learn_fixed_mass_halfspace, OracleKind, OracleRequest, OracleResult};
