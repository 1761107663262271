//! Environmental ground truth: ambient weather, hydration heat of the curing
//! concrete, and the drying of its dielectric properties.

use std::f64::consts::PI;

use serde::Serialize;

use crate::link::{round_trip_budget_db, DielectricMedium, LinkConfig};
use crate::{Error, Result};

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Base temperature with a linear warming trend and a daily sine.
pub fn ambient_c(age_s: f64, base_c: f64, trend_k_per_day: f64, diurnal_amplitude_k: f64) -> f64 {
    base_c
        + trend_k_per_day * (age_s / SECONDS_PER_DAY)
        + diurnal_amplitude_k * (2.0 * PI * age_s / SECONDS_PER_DAY).sin()
}

/// Ambient plus an exotherm pulse `peak * (t/t_peak) * exp(1 - t/t_peak)`,
/// which rises from zero, peaks at `peak_age_s` and decays back to zero.
pub fn hydration_temperature_c(
    age_s: f64,
    ambient: impl Fn(f64) -> f64,
    exotherm_peak_k: f64,
    peak_age_s: f64,
) -> Result<f64> {
    if !(peak_age_s.is_finite() && peak_age_s > 0.0) {
        return Err(Error::param("exotherm_peak_age_s", "must be > 0"));
    }
    let x = age_s.max(0.0) / peak_age_s;
    Ok(ambient(age_s) + exotherm_peak_k * x * (1.0 - x).exp())
}

/// Dielectric state of the concrete at a given age.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CuringState {
    pub age_s: f64,
    pub medium: DielectricMedium,
    /// Link improvement over the fresh state (dB); zero without a wireless link.
    pub snr_bonus_db: f64,
}

/// Exponential drying from `fresh` toward `dry` with time constant `cure_tau_s`.
pub fn curing_state(
    age_s: f64,
    fresh: &DielectricMedium,
    dry: &DielectricMedium,
    cure_tau_s: f64,
    link: Option<&LinkConfig>,
) -> Result<CuringState> {
    if !(cure_tau_s.is_finite() && cure_tau_s > 0.0) {
        return Err(Error::param("cure_tau_s", "must be > 0"));
    }
    let wet = (-age_s.max(0.0) / cure_tau_s).exp();
    let medium = DielectricMedium {
        eps_r: dry.eps_r + (fresh.eps_r - dry.eps_r) * wet,
        tan_delta: dry.tan_delta + (fresh.tan_delta - dry.tan_delta) * wet,
    };
    let snr_bonus_db = match link {
        Some(cfg) => round_trip_budget_db(cfg, &medium)? - round_trip_budget_db(cfg, fresh)?,
        None => 0.0,
    };
    Ok(CuringState {
        age_s,
        medium,
        snr_bonus_db,
    })
}
