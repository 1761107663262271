//! Error statistics and trends over a recorded series.

use serde::{Deserialize, Serialize};

use super::SeriesRecord;
use crate::{Error, Result};

/// Named time window `[start_s, end_s]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Phase {
    pub name: String,
    pub start_s: f64,
    pub end_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SummaryOptions {
    pub phases: Vec<Phase>,
    /// Width of the windows used for SNR/amplitude trends.
    pub trend_window_s: f64,
    /// Shortest run of identical truth strain treated as a hold.
    pub min_hold_records: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowStats {
    pub name: String,
    pub start_s: f64,
    pub end_s: f64,
    pub n_records: usize,
    pub n_dropouts: usize,
    pub temp_error_mean_c: Option<f64>,
    pub temp_error_std_c: Option<f64>,
    pub strain_error_mean_ue: Option<f64>,
    pub strain_error_std_ue: Option<f64>,
    pub mean_snr_db: Option<f64>,
    pub mean_amplitude_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub start_s: f64,
    pub link_snr_db: f64,
    pub reading_snr_db: Option<f64>,
    pub amplitude_db: Option<f64>,
}

/// Direction from the previous hold into this one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Approach {
    Initial,
    Loading,
    Unloading,
}

/// A run of constant applied strain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldStats {
    pub start_s: f64,
    pub end_s: f64,
    pub truth_strain_ue: f64,
    pub approach: Approach,
    pub n_readings: usize,
    pub mean_freq_hz: Option<f64>,
    pub mean_strain_ue: Option<f64>,
    /// Least-squares rise of (recovered - truth) strain across the hold.
    pub drift_ue: Option<f64>,
    /// Mean (recovered - truth) strain over the hold: creep accumulated so far.
    pub offset_ue: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub n_records: usize,
    pub n_dropouts: usize,
    pub dropout_rate: f64,
    pub overall: WindowStats,
    pub phases: Vec<WindowStats>,
    pub trend: Vec<TrendPoint>,
    pub holds: Vec<HoldStats>,
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation (n - 1).
pub fn std_dev(values: &[f64]) -> Option<f64> {
    if values.len() < 2 {
        return None;
    }
    let m = mean(values)?;
    let ss: f64 = values.iter().map(|v| (v - m).powi(2)).sum();
    Some((ss / (values.len() - 1) as f64).sqrt())
}

fn window_stats(name: &str, start_s: f64, end_s: f64, records: &[&SeriesRecord]) -> WindowStats {
    let readings: Vec<_> = records.iter().filter_map(|r| r.reading.as_ref()).collect();
    let temp_err: Vec<f64> = records.iter().filter_map(|r| r.temp_error_c()).collect();
    let strain_err: Vec<f64> = records.iter().filter_map(|r| r.strain_error_ue()).collect();
    let snr: Vec<f64> = readings.iter().map(|r| r.snr_db).collect();
    let amp: Vec<f64> = readings.iter().map(|r| r.amplitude_db).collect();
    WindowStats {
        name: name.to_string(),
        start_s,
        end_s,
        n_records: records.len(),
        n_dropouts: records.len() - readings.len(),
        temp_error_mean_c: mean(&temp_err),
        temp_error_std_c: std_dev(&temp_err),
        strain_error_mean_ue: mean(&strain_err),
        strain_error_std_ue: std_dev(&strain_err),
        mean_snr_db: mean(&snr),
        mean_amplitude_db: mean(&amp),
    }
}

/// Slope of `y` against `x` by least squares.
fn slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

fn holds(records: &[SeriesRecord], min_len: usize) -> Vec<HoldStats> {
    let mut out = Vec::new();
    let mut start = 0;
    while start < records.len() {
        let level = records[start].truth_strain_ue;
        let mut end = start;
        while end + 1 < records.len() && records[end + 1].truth_strain_ue == level {
            end += 1;
        }
        let run = &records[start..=end];
        if run.len() >= min_len.max(2) {
            let freqs: Vec<f64> = run
                .iter()
                .filter_map(|r| r.reading.map(|x| x.freq_hz))
                .collect();
            let strains: Vec<f64> = run
                .iter()
                .filter_map(|r| r.reading.and_then(|x| x.strain_ue))
                .collect();
            let err: Vec<(f64, f64)> = run
                .iter()
                .filter_map(|r| r.strain_error_ue().map(|e| (r.timestamp_s, e)))
                .collect();
            let (t0, t1) = (run[0].timestamp_s, run[run.len() - 1].timestamp_s);
            let approach = match out.last().map(|h: &HoldStats| h.truth_strain_ue) {
                None => Approach::Initial,
                Some(prev) if level > prev => Approach::Loading,
                Some(_) => Approach::Unloading,
            };
            let offsets: Vec<f64> = err.iter().map(|e| e.1).collect();
            out.push(HoldStats {
                start_s: t0,
                end_s: t1,
                truth_strain_ue: level,
                approach,
                n_readings: freqs.len(),
                mean_freq_hz: mean(&freqs),
                mean_strain_ue: mean(&strains),
                drift_ue: slope(&err).map(|s| s * (t1 - t0)),
                offset_ue: mean(&offsets),
            });
        }
        start = end + 1;
    }
    out
}

/// Windowed statistics over `records`.
pub fn summarize(records: &[SeriesRecord], options: &SummaryOptions) -> Result<Summary> {
    if records.is_empty() {
        return Err(Error::Empty("record list"));
    }
    let all: Vec<&SeriesRecord> = records.iter().collect();
    let first = records[0].timestamp_s;
    let last = records[records.len() - 1].timestamp_s;
    let overall = window_stats("overall", first, last, &all);

    let phases = options
        .phases
        .iter()
        .map(|p| {
            let inside: Vec<&SeriesRecord> = records
                .iter()
                .filter(|r| r.timestamp_s >= p.start_s && r.timestamp_s <= p.end_s)
                .collect();
            window_stats(&p.name, p.start_s, p.end_s, &inside)
        })
        .collect();

    let mut trend = Vec::new();
    if options.trend_window_s > 0.0 {
        let mut lo = first;
        while lo <= last {
            let hi = lo + options.trend_window_s;
            let inside: Vec<&SeriesRecord> = records
                .iter()
                .filter(|r| r.timestamp_s >= lo && r.timestamp_s < hi)
                .collect();
            if !inside.is_empty() {
                let link: Vec<f64> = inside.iter().map(|r| r.link_snr_db).collect();
                let snr: Vec<f64> = inside
                    .iter()
                    .filter_map(|r| r.reading.map(|x| x.snr_db))
                    .collect();
                let amp: Vec<f64> = inside
                    .iter()
                    .filter_map(|r| r.reading.map(|x| x.amplitude_db))
                    .collect();
                trend.push(TrendPoint {
                    start_s: lo,
                    link_snr_db: mean(&link).unwrap_or(f64::NAN),
                    reading_snr_db: mean(&snr),
                    amplitude_db: mean(&amp),
                });
            }
            lo = hi;
        }
    }

    let n_dropouts = overall.n_dropouts;
    Ok(Summary {
        n_records: records.len(),
        n_dropouts,
        dropout_rate: n_dropouts as f64 / records.len() as f64,
        overall,
        phases,
        trend,
        holds: holds(records, options.min_hold_records),
    })
}
