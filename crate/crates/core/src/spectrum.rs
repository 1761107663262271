use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Reflection magnitude over a frequency sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    /// Strictly increasing sweep grid (Hz).
    pub freqs_hz: Vec<f64>,
    /// |S11| in dB, one value per grid point.
    pub s11_db: Vec<f64>,
    /// The resonance band is not fully inside the sweep; the dip may be cut.
    pub truncated: bool,
}

impl Spectrum {
    pub fn new(freqs_hz: Vec<f64>, s11_db: Vec<f64>) -> Result<Self> {
        if freqs_hz.len() != s11_db.len() {
            return Err(Error::param(
                "s11_db",
                format!(
                    "length {} does not match frequency grid length {}",
                    s11_db.len(),
                    freqs_hz.len()
                ),
            ));
        }
        check_grid(&freqs_hz)?;
        if s11_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("s11_db", "non-finite magnitude"));
        }
        Ok(Spectrum {
            freqs_hz,
            s11_db,
            truncated: false,
        })
    }

    pub fn len(&self) -> usize {
        self.freqs_hz.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freqs_hz.is_empty()
    }

    /// Marks the spectrum truncated unless `[lo, hi]` lies inside the grid.
    pub(crate) fn flag_band(&mut self, lo: f64, hi: f64) {
        let covered = match (self.freqs_hz.first(), self.freqs_hz.last()) {
            (Some(&first), Some(&last)) => first <= lo && hi <= last,
            _ => false,
        };
        self.truncated = !covered;
    }
}

/// Uniform grid of `n` points from `start` to `stop` inclusive.
pub fn linear_grid(start_hz: f64, stop_hz: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start_hz];
    }
    let step = (stop_hz - start_hz) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            if i == n - 1 {
                stop_hz
            } else {
                start_hz + step * i as f64
            }
        })
        .collect()
}

pub(crate) fn check_grid(freqs: &[f64]) -> Result<()> {
    if freqs.iter().any(|f| !f.is_finite() || *f <= 0.0) {
        return Err(Error::param(
            "freqs_hz",
            "frequencies must be finite and > 0",
        ));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::param("freqs_hz", "grid must be strictly increasing"));
    }
    Ok(())
}
