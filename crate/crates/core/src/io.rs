//! File formats: sequence CSV (`n,value`), forcing JSON, snapshot and
//! decay-report CSVs with JSON sidecars.
//!
//! Floats are written in Rust's shortest round-trip form, so reading a file
//! back reproduces every value bit for bit.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::DecayReport;
use crate::sequence::LatticeSequence;
use crate::solver::{ForcingSpec, SolutionSnapshot, SolverError};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
    #[error(transparent)]
    Forcing(#[from] SolverError),
}

impl IoError {
    fn format(path: &Path, message: impl Into<String>) -> Self {
        IoError::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}

fn float(v: f64) -> String {
    format!("{v:?}")
}

/// Renders rows as CSV with a header line and LF endings.
pub fn table_to_csv<S: AsRef<str>>(header: &[&str], rows: &[Vec<S>]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // Writing to a Vec cannot fail.
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(row.iter().map(|c| c.as_ref()))
            .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

pub fn sequence_to_csv(seq: &LatticeSequence) -> String {
    let rows: Vec<Vec<String>> = seq
        .iter()
        .map(|(n, v)| vec![n.to_string(), float(v)])
        .collect();
    table_to_csv(&["n", "value"], &rows)
}

/// Parses `n,value` rows. Indices must increase strictly; gaps read as zero.
pub fn sequence_from_csv(text: &str, origin: &Path) -> Result<LatticeSequence, IoError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = r
        .headers()
        .map_err(|e| IoError::format(origin, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != ["n", "value"] {
        return Err(IoError::format(origin, "expected header `n,value`"));
    }
    let mut pairs = Vec::new();
    let mut last: Option<i64> = None;
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| IoError::format(origin, e.to_string()))?;
        let row = line + 2;
        if rec.len() != 2 {
            return Err(IoError::format(
                origin,
                format!("row {row}: expected 2 fields"),
            ));
        }
        let n: i64 = rec[0]
            .parse()
            .map_err(|_| IoError::format(origin, format!("row {row}: bad index `{}`", &rec[0])))?;
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| IoError::format(origin, format!("row {row}: bad value `{}`", &rec[1])))?;
        if !v.is_finite() {
            return Err(IoError::format(
                origin,
                format!("row {row}: non-finite value"),
            ));
        }
        if last.is_some_and(|m| n <= m) {
            return Err(IoError::format(
                origin,
                format!("row {row}: indices must increase strictly"),
            ));
        }
        last = Some(n);
        pairs.push((n, v));
    }
    Ok(LatticeSequence::from_pairs(pairs))
}

pub fn read_sequence(path: &Path) -> Result<LatticeSequence, IoError> {
    let text = read_to_string(path)?;
    sequence_from_csv(&text, path)
}

fn read_to_string(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_text(path: &Path, text: &str) -> Result<(), IoError> {
    fs::write(path, text).map_err(|source| IoError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_sequence(path: &Path, seq: &LatticeSequence) -> Result<(), IoError> {
    write_text(path, &sequence_to_csv(seq))
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum ForcingFile {
    None,
    Separable {
        spatial: PathBuf,
        gamma: f64,
        #[serde(default = "unit")]
        amplitude: f64,
    },
}

fn unit() -> f64 {
    1.0
}

/// Reads a forcing description. A relative `spatial` path is resolved
/// against the directory holding the JSON file.
pub fn read_forcing(path: &Path) -> Result<ForcingSpec, IoError> {
    let text = read_to_string(path)?;
    let file: ForcingFile =
        serde_json::from_str(&text).map_err(|e| IoError::format(path, e.to_string()))?;
    match file {
        ForcingFile::None => Ok(ForcingSpec::None),
        ForcingFile::Separable {
            spatial,
            gamma,
            amplitude,
        } => {
            let spatial = match path.parent() {
                Some(dir) if spatial.is_relative() => dir.join(spatial),
                _ => spatial,
            };
            let seq = read_sequence(&spatial)?;
            Ok(ForcingSpec::separable(seq, gamma, amplitude)?)
        }
    }
}

/// Writes a separable forcing as a JSON file pointing at `spatial_csv`,
/// and the spatial factor itself to that CSV.
pub fn write_forcing(
    path: &Path,
    spatial_csv: &Path,
    spatial: &LatticeSequence,
    gamma: f64,
    amplitude: f64,
) -> Result<(), IoError> {
    write_sequence(spatial_csv, spatial)?;
    let file = ForcingFile::Separable {
        spatial: spatial_csv.to_path_buf(),
        gamma,
        amplitude,
    };
    write_text(path, &json_pretty(&file))
}

fn json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

/// Sidecar path next to a CSV output: same stem, `.json` extension.
pub fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

#[derive(Serialize)]
struct SnapshotMeta {
    t: f64,
    quad_error: f64,
    trunc_error: f64,
}

pub fn snapshot_sidecar(snap: &SolutionSnapshot) -> String {
    json_pretty(&SnapshotMeta {
        t: snap.t,
        quad_error: snap.quad_error,
        trunc_error: snap.trunc_error,
    })
}

pub fn write_snapshot(path: &Path, snap: &SolutionSnapshot) -> Result<(), IoError> {
    write_sequence(path, &snap.u)?;
    write_text(&sidecar_path(path), &snapshot_sidecar(snap))
}

#[derive(Serialize)]
struct DecayMeta<'a> {
    label: &'a str,
    slope: f64,
    intercept: f64,
    max_residual: f64,
    t_min: f64,
    t_max: f64,
    dropped: Vec<f64>,
}

pub fn decay_to_csv(report: &DecayReport) -> String {
    let rows: Vec<Vec<String>> = report
        .pairs
        .iter()
        .map(|&(t, v)| vec![float(t), float(v)])
        .collect();
    table_to_csv(&["t", "value"], &rows)
}

pub fn decay_sidecar(report: &DecayReport) -> String {
    json_pretty(&DecayMeta {
        label: &report.label,
        slope: report.slope,
        intercept: report.intercept,
        max_residual: report.max_residual,
        t_min: report.t_range.0,
        t_max: report.t_range.1,
        dropped: report.dropped.iter().map(|s| s.t).collect(),
    })
}

pub fn write_decay_report(path: &Path, report: &DecayReport) -> Result<(), IoError> {
    write_text(path, &decay_to_csv(report))?;
    write_text(&sidecar_path(path), &decay_sidecar(report))
}

/// Shortest round-trip rendering used for every float in CSV output.
pub fn format_float(v: f64) -> String {
    float(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_round_trips_bitwise() {
        let seq = LatticeSequence::new(-2, vec![0.1, 1.0 / 3.0, 1e-300, -2.5, 0.0]);
        let text = sequence_to_csv(&seq);
        assert!(text.starts_with("n,value\n-2,0.1\n"));
        assert!(!text.contains('\r'));
        let back = sequence_from_csv(&text, Path::new("mem")).unwrap();
        assert_eq!(back.offset(), -2);
        for (a, b) in seq.values().iter().zip(back.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn rejects_malformed_sequences() {
        let p = Path::new("mem");
        assert!(sequence_from_csv("i,v\n0,1\n", p).is_err());
        assert!(sequence_from_csv("n,value\n0,x\n", p).is_err());
        assert!(sequence_from_csv("n,value\n1,1\n0,1\n", p).is_err());
        assert!(sequence_from_csv("n,value\n0,NaN\n", p).is_err());
    }

    #[test]
    fn gaps_fill_with_zero() {
        let s = sequence_from_csv("n,value\n0,1\n3,2\n", Path::new("mem")).unwrap();
        assert_eq!(s.values(), &[1.0, 0.0, 0.0, 2.0]);
    }

    #[test]
    fn forcing_resolves_relative_path() {
        let dir = tempfile::tempdir().unwrap();
        write_sequence(&dir.path().join("g.csv"), &LatticeSequence::delta(0)).unwrap();
        let json = dir.path().join("g.json");
        write_text(
            &json,
            r#"{"kind":"separable","spatial":"g.csv","gamma":2.0,"amplitude":1.0}"#,
        )
        .unwrap();
        let g = read_forcing(&json).unwrap();
        assert_eq!(g.total_mass(), Some(1.0));
        write_text(&json, r#"{"kind":"none"}"#).unwrap();
        assert!(matches!(read_forcing(&json).unwrap(), ForcingSpec::None));
        write_text(
            &json,
            r#"{"kind":"separable","spatial":"g.csv","gamma":-1}"#,
        )
        .unwrap();
        assert!(read_forcing(&json).is_err());
    }
}
