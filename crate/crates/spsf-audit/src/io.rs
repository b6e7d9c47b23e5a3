//! Dataset CSV and certificate JSON files.
//!
//! The CSV schema is `f1,...,fd,label` with one row per sample, LF line
//! endings, and labels in {-1, 1}. Features print via the shortest
//! round-trip decimal form, so write -> read -> write is byte-identical.
//! All files are written atomically (temp file + rename).

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Label, Provenance};
use crate::error::{AuditError, Result};
use crate::generators::ClweWitnesses;
use crate::halfspace::Halfspace;
use crate::report::to_json_17;

/// Write bytes via a sibling temp file and rename into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension(format!(
        "{}tmp",
        path.extension().map(|e| format!("{}.", e.to_string_lossy())).unwrap_or_default()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn dataset_to_csv(data: &Dataset) -> String {
    let mut out = String::new();
    for j in 1..=data.dim() {
        if j > 1 {
            out.push(',');
        }
        out.push_str(&format!("f{j}"));
    }
    out.push_str(",label\n");
    for (x, l) in data.rows().zip(data.labels()) {
        for v in x {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!("{}\n", l.as_i8()));
    }
    out
}

pub fn write_dataset(path: &Path, data: &Dataset) -> Result<()> {
    write_atomic(path, dataset_to_csv(data).as_bytes())
}

pub fn dataset_from_csv(text: &str, meta: Provenance) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| AuditError::Parse { line: 1, msg: "empty file".into() })?;
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 2 || columns.last() != Some(&"label") {
        return Err(AuditError::Parse {
            line: 1,
            msg: "header must be f1,...,fd,label".into(),
        });
    }
    let dim = columns.len() - 1;
    for (j, col) in columns[..dim].iter().enumerate() {
        if *col != format!("f{}", j + 1) {
            return Err(AuditError::Parse {
                line: 1,
                msg: format!("unexpected feature column name {col:?}"),
            });
        }
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != dim + 1 {
            return Err(AuditError::Parse {
                line: i + 1,
                msg: format!("expected {} columns, got {}", dim + 1, fields.len()),
            });
        }
        let mut row = Vec::with_capacity(dim);
        for f in &fields[..dim] {
            let v: f64 = f.parse().map_err(|_| AuditError::Parse {
                line: i + 1,
                msg: format!("bad feature value {f:?}"),
            })?;
            row.push(v);
        }
        let label = match *fields.last().unwrap() {
            "1" => Label::Pos,
            "-1" => Label::Neg,
            other => {
                return Err(AuditError::Parse {
                    line: i + 1,
                    msg: format!("label must be 1 or -1, got {other:?}"),
                })
            }
        };
        rows.push(row);
        labels.push(label);
    }
    Dataset::new(rows, labels, meta)
}

pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let meta = Provenance::new("file", 0).with_param("path", path.display());
    dataset_from_csv(&text, meta)
}

/// The on-disk certificate schema: a halfspace as {normal, threshold}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateFile {
    pub normal: Vec<f64>,
    pub threshold: f64,
}

impl CertificateFile {
    pub fn from_halfspace(h: &Halfspace) -> Self {
        CertificateFile {
            normal: h.normal().to_vec(),
            threshold: h.threshold(),
        }
    }

    pub fn to_halfspace(&self) -> Result<Halfspace> {
        Halfspace::new(self.normal.clone(), self.threshold)
    }
}

pub fn write_certificate(path: &Path, h: &Halfspace) -> Result<()> {
    let bytes = to_json_17(&CertificateFile::from_halfspace(h))?;
    write_atomic(path, &bytes)
}

pub fn read_certificate(path: &Path) -> Result<Halfspace> {
    let text = fs::read_to_string(path)?;
    let cert: CertificateFile = serde_json::from_str(&text)?;
    cert.to_halfspace()
}

/// Witness sidecar written next to alternative hard instances.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WitnessFile {
    pub version: u64,
    pub h1: CertificateFile,
    pub h2: CertificateFile,
}

pub fn write_witnesses(path: &Path, witnesses: &ClweWitnesses) -> Result<()> {
    let file = WitnessFile {
        version: 1,
        h1: CertificateFile::from_halfspace(&witnesses.h1),
        h2: CertificateFile::from_halfspace(&witnesses.h2),
    };
    write_atomic(path, &to_json_17(&file)?)
}

pub fn read_witnesses(path: &Path) -> Result<(Halfspace, Halfspace)> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let version = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0);
    if version != 1 {
        return Err(AuditError::UnsupportedVersion(version));
    }
    let file: WitnessFile = serde_json::from_value(value)?;
    Ok((file.h1.to_halfspace()?, file.h2.to_halfspace()?))
}
