//! File formats written and read by the command line.
//!
//! Readings CSV header:
//! `timestamp_s,truth_temp_c,truth_strain_ue,freq_hz,amplitude_db,snr_db,temp_c,strain_ue,dropout`.
//! Missing values are empty fields; `dropout` is 0 or 1. The JSON Lines
//! stream carries the same keys with `null` for missing values.

use std::fs;
use std::io::Write;
use std::path::Path;

use sawcrete::scenario::SeriesRecord;
use sawcrete::Spectrum;
use serde::{Deserialize, Serialize};

pub const READINGS_HEADER: &str =
    "timestamp_s,truth_temp_c,truth_strain_ue,freq_hz,amplitude_db,snr_db,temp_c,strain_ue,dropout";
pub const SPECTRUM_HEADER: &str = "freq_hz,s11_db";

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    /// An input file could not be read.
    #[error("{path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{path}: expected header `{expected}`, found `{found}`")]
    Header {
        path: String,
        expected: &'static str,
        found: String,
    },
    #[error("{0}")]
    Encode(String),
}

/// One row of the readings table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReadingRow {
    pub timestamp_s: f64,
    pub truth_temp_c: f64,
    pub truth_strain_ue: f64,
    pub freq_hz: Option<f64>,
    pub amplitude_db: Option<f64>,
    pub snr_db: Option<f64>,
    pub temp_c: Option<f64>,
    pub strain_ue: Option<f64>,
    pub dropout: u8,
}

impl From<&SeriesRecord> for ReadingRow {
    fn from(r: &SeriesRecord) -> Self {
        ReadingRow {
            timestamp_s: r.timestamp_s,
            truth_temp_c: r.truth_temp_c,
            truth_strain_ue: r.truth_strain_ue,
            freq_hz: r.reading.map(|x| x.freq_hz),
            amplitude_db: r.reading.map(|x| x.amplitude_db),
            snr_db: r.reading.map(|x| x.snr_db),
            temp_c: r.reading.and_then(|x| x.temp_c),
            strain_ue: r.reading.and_then(|x| x.strain_ue),
            dropout: u8::from(r.is_dropout()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct SpectrumRow {
    freq_hz: f64,
    s11_db: f64,
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), FormatError> {
    let io = |source| FormatError::Io {
        path: path.display().to_string(),
        source,
    };
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Result<Vec<u8>, FormatError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)
            .map_err(|e| FormatError::Encode(e.to_string()))?;
    }
    w.into_inner()
        .map_err(|e| FormatError::Encode(e.to_string()))
}

pub fn readings_csv(records: &[SeriesRecord]) -> Result<Vec<u8>, FormatError> {
    csv_bytes(records.iter().map(ReadingRow::from))
}

pub fn readings_jsonl(records: &[SeriesRecord]) -> Result<Vec<u8>, FormatError> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, &ReadingRow::from(r))
            .map_err(|e| FormatError::Encode(e.to_string()))?;
        out.push(b'\n');
    }
    Ok(out)
}

pub fn spectrum_csv(spectrum: &Spectrum) -> Result<Vec<u8>, FormatError> {
    csv_bytes(
        spectrum
            .freqs_hz
            .iter()
            .zip(&spectrum.s11_db)
            .map(|(&freq_hz, &s11_db)| SpectrumRow { freq_hz, s11_db }),
    )
}

fn read_rows<T: for<'de> Deserialize<'de>>(
    path: &Path,
    expected: &'static str,
) -> Result<Vec<T>, FormatError> {
    let name = path.display().to_string();
    let text = fs::read_to_string(path).map_err(|source| FormatError::Read {
        path: name.clone(),
        source,
    })?;
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|source| FormatError::Csv {
            path: name.clone(),
            source,
        })?
        .iter()
        .collect::<Vec<_>>()
        .join(",");
    if header != expected {
        return Err(FormatError::Header {
            path: name,
            expected,
            found: header,
        });
    }
    reader
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|source| FormatError::Csv { path: name, source })
}

pub fn read_readings_csv(path: &Path) -> Result<Vec<ReadingRow>, FormatError> {
    read_rows(path, READINGS_HEADER)
}

/// Raw `(freqs, s11_db)` columns of a spectrum file; validation is left to
/// [`Spectrum::new`].
pub fn read_spectrum_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>), FormatError> {
    let rows: Vec<SpectrumRow> = read_rows(path, SPECTRUM_HEADER)?;
    Ok(rows.into_iter().map(|r| (r.freq_hz, r.s11_db)).unzip())
}

#[cfg(test)]
mod tests {
    use super::*;
    use sawcrete::interrogator::Reading;

    fn records() -> Vec<SeriesRecord> {
        vec![
            SeriesRecord {
                timestamp_s: 0.0,
                truth_temp_c: 21.5,
                truth_strain_ue: 0.0,
                link_snr_db: 60.0,
                reading: Some(Reading {
                    timestamp_s: 0.0,
                    freq_hz: 2_459_123_456.789,
                    amplitude_db: 12.25,
                    snr_db: 33.1,
                    temp_c: Some(21.4999),
                    strain_ue: None,
                }),
            },
            SeriesRecord {
                timestamp_s: 3600.0,
                truth_temp_c: 22.0,
                truth_strain_ue: 0.0,
                link_snr_db: 3.0,
                reading: None,
            },
        ]
    }

    #[test]
    fn header_is_exact() {
        let bytes = readings_csv(&records()).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), READINGS_HEADER);
        lines.next();
        assert_eq!(lines.next().unwrap(), "3600.0,22.0,0.0,,,,,,1");
    }

    #[test]
    fn csv_round_trip_is_lossless() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.csv");
        write_atomic(&path, &readings_csv(&records()).unwrap()).unwrap();
        let back = read_readings_csv(&path).unwrap();
        let expected: Vec<ReadingRow> = records().iter().map(ReadingRow::from).collect();
        assert_eq!(back, expected);
        assert_eq!(back[0].strain_ue, None);
    }

    #[test]
    fn jsonl_uses_null_for_missing() {
        let text = String::from_utf8(readings_jsonl(&records()).unwrap()).unwrap();
        let second: serde_json::Value = serde_json::from_str(text.lines().nth(1).unwrap()).unwrap();
        assert!(second["freq_hz"].is_null());
        assert_eq!(second["dropout"], 1);
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        fs::write(&path, "f,s\n1,2\n").unwrap();
        assert!(matches!(
            read_spectrum_csv(&path),
            Err(FormatError::Header { .. })
        ));
    }
}
