//! The audit report file: a versioned JSON document whose floats are
//! printed with 17 significant digits so round-trips are lossless.

use std::path::Path;

use serde::ser::Serialize as SerTrait;
use serde::{Deserialize, Serialize};

use crate::auditor::{AuditConfig, AuditMode, AuditReport, Side, Verdict};
use crate::error::{AuditError, Result};
use crate::io::{write_atomic, CertificateFile};

pub const REPORT_VERSION: u64 = 1;

/// serde_json formatter that prints every f64 as `{:.16e}` (17 significant
/// digits), which always round-trips.
struct SigDigitFormatter;

impl serde_json::ser::Formatter for SigDigitFormatter {
    fn write_f64<W>(&mut self, writer: &mut W, value: f64) -> std::io::Result<()>
    where
        W: ?Sized + std::io::Write,
    {
        write!(writer, "{value:.16e}")
    }
}

/// Serialize to JSON bytes with 17-significant-digit floats and a trailing
/// newline.
pub fn to_json_17<T: SerTrait>(value: &T) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SigDigitFormatter);
    value.serialize(&mut ser)?;
    out.push(b'\n');
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiEntry {
    pub half_width: f64,
    pub confidence: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub mu: f64,
    pub side: String,
    pub direction: Vec<f64>,
    pub threshold: f64,
    pub mass_hat: f64,
    pub deviation_hat: f64,
    pub gamma_hat: f64,
    pub ci: CiEntry,
}

/// The on-disk schema. In non-constructive mode the certificate key is
/// omitted; everything else is retained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub version: u64,
    pub config: AuditConfig,
    pub trace: Vec<TraceEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub certificate: Option<CertificateFile>,
    pub gamma_hat: f64,
    pub ci: CiEntry,
    pub verdict: String,
    pub seed: u64,
}

impl ReportFile {
    pub fn from_report(report: &AuditReport) -> Self {
        let trace = report
            .trace
            .iter()
            .map(|rec| {
                let h = &rec.chosen().halfspace;
                TraceEntry {
                    mu: rec.mu,
                    side: match rec.side {
                        Side::Plus => "plus".to_string(),
                        Side::Minus => "minus".to_string(),
                    },
                    direction: h.normal().to_vec(),
                    threshold: h.threshold(),
                    mass_hat: rec.measurement.mass.point,
                    deviation_hat: rec.measurement.deviation,
                    gamma_hat: rec.measurement.gamma,
                    ci: CiEntry {
                        half_width: rec.measurement.mass.half_width,
                        confidence: rec.measurement.mass.confidence,
                        n_samples: rec.measurement.mass.n_samples,
                    },
                }
            })
            .collect();
        let certificate = match report.config.mode {
            AuditMode::Constructive => Some(CertificateFile::from_halfspace(&report.certificate)),
            AuditMode::NonConstructive => None,
        };
        ReportFile {
            version: REPORT_VERSION,
            config: report.config.clone(),
            trace,
            certificate,
            gamma_hat: report.gamma_hat.point,
            ci: CiEntry {
                half_width: report.gamma_hat.half_width,
                confidence: report.gamma_hat.confidence,
                n_samples: report.gamma_hat.n_samples,
            },
            verdict: match report.verdict {
                Verdict::Fair => "fair".to_string(),
                Verdict::Unfair => "unfair".to_string(),
            },
            seed: report.config.seed,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        write_atomic(path, &to_json_17(self)?)
    }

    /// Parse with the version gate: unknown versions are rejected before
    /// any field is interpreted.
    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
        if version != REPORT_VERSION {
            return Err(AuditError::UnsupportedVersion(version));
        }
        Ok(serde_json::from_value(value)?)
    }
}
