//! File formats.
//!
//! State file (JSON), either form plus an optional label; other keys are
//! ignored, so richer reports that embed a `matrix` are valid state files:
//!
//! ```json
//! {"label": "a", "variances": {"p_minus": 0.5, "p_plus": 2.1, "q_plus": 1.7, "q_minus": 2.05}}
//! {"label": "b", "matrix": [[1,0,0,0],[0,1,0,0],[0,0,1,0],[0,0,0,1]]}
//! ```
//!
//! Matrices are row-major in the `(p1, q1, p2, q2)` ordering.
//!
//! Sample file (CSV): header `p1,q1,p2,q2`, one joint sample per row. An
//! optional sidecar `<file>.json` may carry `{"label": "..."}`.

use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::esd::{RegionMap, SweepCurve};
use crate::ingest::QuadratureRecord;
use crate::state::{embed_with_tol, extract, CovarianceMatrix, TwinBeamVariances};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variances: Option<TwinBeamVariances>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[f64; 4]; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StateSpec {
    Variances(TwinBeamVariances),
    Matrix(CovarianceMatrix),
}

impl StateSpec {
    /// Physical covariance matrix, or `Error::Unphysical` with the offending
    /// symplectic eigenvalue.
    pub fn covariance(&self, physicality_tol: f64) -> Result<CovarianceMatrix> {
        match self {
            StateSpec::Variances(v) => embed_with_tol(v, physicality_tol),
            StateSpec::Matrix(m) => {
                m.ensure_physical(physicality_tol)?;
                Ok(*m)
            }
        }
    }

    pub fn twin_beam(&self) -> Option<TwinBeamVariances> {
        match self {
            StateSpec::Variances(v) => Some(*v),
            StateSpec::Matrix(m) => extract(m).ok(),
        }
    }
}

impl StateFile {
    pub fn from_variances(v: TwinBeamVariances, label: Option<String>) -> Self {
        StateFile {
            label,
            variances: Some(v),
            matrix: None,
        }
    }

    pub fn from_matrix(m: &CovarianceMatrix, label: Option<String>) -> Self {
        StateFile {
            label,
            variances: None,
            matrix: Some(m.to_rows()),
        }
    }

    pub fn spec(&self) -> Result<StateSpec> {
        match (&self.variances, &self.matrix) {
            (Some(v), None) => {
                v.validate()?;
                Ok(StateSpec::Variances(*v))
            }
            (None, Some(rows)) => Ok(StateSpec::Matrix(CovarianceMatrix::from_rows(*rows)?)),
            (Some(_), Some(_)) => Err(Error::StateFile(
                "give either \"variances\" or \"matrix\", not both".into(),
            )),
            (None, None) => Err(Error::StateFile(
                "missing \"variances\" or \"matrix\"".into(),
            )),
        }
    }
}

pub fn read_state_file(path: &Path) -> Result<StateFile> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Serialize, Deserialize)]
struct SampleRow {
    p1: f64,
    q1: f64,
    p2: f64,
    q2: f64,
}

#[derive(Debug, Default, Serialize, Deserialize)]
struct Sidecar {
    #[serde(default)]
    label: Option<String>,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

pub fn read_samples<R: Read>(reader: R) -> Result<QuadratureRecord> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["p1", "q1", "p2", "q2"] {
        return Err(Error::StateFile(format!(
            "sample CSV header must be p1,q1,p2,q2, got {}",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let samples = rdr
        .deserialize::<SampleRow>()
        .map(|row| row.map(|r| [r.p1, r.q1, r.p2, r.q2]))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    QuadratureRecord::new(samples)
}

/// Reads a sample CSV and, when present, its JSON sidecar.
pub fn read_sample_file(path: &Path) -> Result<QuadratureRecord> {
    let mut record = read_samples(std::fs::File::open(path)?)?;
    let side = sidecar_path(path);
    if side.exists() {
        let meta: Sidecar = serde_json::from_str(&std::fs::read_to_string(side)?)?;
        record.label = meta.label;
    }
    Ok(record)
}

pub fn write_samples<W: Write>(record: &QuadratureRecord, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in &record.samples {
        w.serialize(SampleRow {
            p1: s[0],
            q1: s[1],
            p2: s[2],
            q2: s[3],
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_sweep_csv<W: Write>(curve: &SweepCurve, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t", "nu_min"])?;
    for p in &curve.points {
        w.write_record([p.t.to_string(), p.nu_min.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn opt(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_region_map_csv<W: Write>(map: &RegionMap, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "p_minus",
        "q_plus",
        "region",
        "decided_by",
        "duan_violated",
        "nu_min",
        "esd_quantity",
    ])?;
    for c in &map.cells {
        w.write_record([
            c.p_minus.to_string(),
            c.q_plus.to_string(),
            c.region.code().to_string(),
            match c.decided_by {
                crate::esd::Decider::Analytic => "analytic".to_string(),
                crate::esd::Decider::Oracle => "oracle".to_string(),
            },
            u8::from(c.duan_violated).to_string(),
            opt(c.nu_min),
            opt(c.esd_quantity),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize, W: Write>(value: &T, mut writer: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut writer, value)?;
    writer.write_all(b"\n")?;
    Ok(())
}
