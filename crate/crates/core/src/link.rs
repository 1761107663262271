//! RF channel between the reader antenna and a sensor antenna buried in
//! concrete: free-space loss across the air gap, dielectric attenuation in the
//! cover, two-way link budget and maximum read distance.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, C_LIGHT, NP_TO_DB};

/// Above this loss tangent the low-loss attenuation formula is rejected.
pub const MAX_TAN_DELTA: f64 = 0.5;

/// Relative permittivity and loss tangent of a (concrete) dielectric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DielectricMedium {
    pub eps_r: f64,
    pub tan_delta: f64,
}

impl DielectricMedium {
    /// Hardened, dry concrete.
    pub const DRY_CONCRETE: DielectricMedium = DielectricMedium {
        eps_r: 4.7,
        tan_delta: 0.13,
    };

    /// Freshly cast concrete. Not a measured value: the wet state is only
    /// known to be strongly polar and very lossy.
    pub const FRESH_CONCRETE: DielectricMedium = DielectricMedium {
        eps_r: 12.0,
        tan_delta: 0.35,
    };

    pub fn validate(&self) -> Result<()> {
        if !(self.eps_r.is_finite() && self.eps_r >= 1.0) {
            return Err(Error::param(
                "eps_r",
                format!("must be >= 1, got {}", self.eps_r),
            ));
        }
        if !(self.tan_delta.is_finite() && self.tan_delta >= 0.0) {
            return Err(Error::param(
                "tan_delta",
                format!("must be >= 0, got {}", self.tan_delta),
            ));
        }
        Ok(())
    }
}

/// Reader/sensor geometry and radio parameters.
///
/// Defaults are calibration knobs: chosen once so that the 2.45 GHz link
/// through 2.5 cm of dry cover closes at about 1 m of air.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkConfig {
    pub freq_hz: f64,
    pub tx_power_dbm: f64,
    pub gain_reader_dbi: f64,
    pub gain_sensor_dbi: f64,
    /// Reader antenna to concrete surface (m).
    pub air_distance_m: f64,
    /// Concrete between surface and the sensor antenna (m).
    pub cover_thickness_m: f64,
    /// Total sensor conversion loss over the round trip, including the
    /// air/concrete interface (dB).
    pub insertion_loss_db: f64,
    pub noise_floor_dbm: f64,
    pub snr_threshold_db: f64,
}

impl Default for LinkConfig {
    fn default() -> Self {
        LinkConfig {
            freq_hz: 2.45e9,
            tx_power_dbm: 10.0,
            gain_reader_dbi: 6.0,
            gain_sensor_dbi: 2.0,
            air_distance_m: 1.0,
            cover_thickness_m: 0.025,
            insertion_loss_db: 32.0,
            noise_floor_dbm: -100.0,
            snr_threshold_db: 10.0,
        }
    }
}

impl LinkConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.freq_hz.is_finite() && self.freq_hz > 0.0) {
            return Err(Error::param("freq_hz", "must be > 0"));
        }
        for (key, v) in [
            ("air_distance_m", self.air_distance_m),
            ("cover_thickness_m", self.cover_thickness_m),
        ] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::param(key, format!("must be >= 0, got {v}")));
            }
        }
        if !(self.snr_threshold_db.is_finite() && self.snr_threshold_db > 0.0) {
            return Err(Error::param("snr_threshold_db", "must be > 0"));
        }
        for (key, v) in [
            ("tx_power_dbm", self.tx_power_dbm),
            ("gain_reader_dbi", self.gain_reader_dbi),
            ("gain_sensor_dbi", self.gain_sensor_dbi),
            ("insertion_loss_db", self.insertion_loss_db),
            ("noise_floor_dbm", self.noise_floor_dbm),
        ] {
            if !v.is_finite() {
                return Err(Error::param(key, "must be finite"));
            }
        }
        Ok(())
    }
}

/// Attenuation constant of a plane wave in a low-loss dielectric (Np/m):
/// `alpha = pi * f * sqrt(eps_r) * tan_delta / c`.
///
/// Accurate to about 1% for `tan_delta` up to ~0.28.
pub fn attenuation_np_per_m(medium: &DielectricMedium, freq_hz: f64) -> Result<f64> {
    medium.validate()?;
    if !(freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(Error::param("freq_hz", "must be > 0"));
    }
    if medium.tan_delta > MAX_TAN_DELTA {
        return Err(Error::param(
            "tan_delta",
            format!(
                "{} exceeds {MAX_TAN_DELTA}; low-loss approximation invalid",
                medium.tan_delta
            ),
        ));
    }
    Ok(PI * freq_hz * medium.eps_r.sqrt() * medium.tan_delta / C_LIGHT)
}

/// Smallest distance treated as far field: `lambda / (2 pi)`.
pub fn far_field_bound_m(freq_hz: f64) -> f64 {
    C_LIGHT / freq_hz / (2.0 * PI)
}

/// Friis free-space path loss `20 log10(4 pi d f / c)`.
pub fn free_space_path_loss_db(freq_hz: f64, distance_m: f64) -> Result<f64> {
    if !(freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(Error::param("freq_hz", "must be > 0"));
    }
    let bound = far_field_bound_m(freq_hz);
    if !(distance_m >= bound) {
        return Err(Error::NearField {
            distance_m,
            bound_m: bound,
        });
    }
    Ok(20.0 * (4.0 * PI * distance_m * freq_hz / C_LIGHT).log10())
}

/// Antenna resonance pulled down by dielectric loading.
pub fn detuned_frequency(
    f_air_hz: f64,
    medium: &DielectricMedium,
    embedding_fraction: f64,
) -> Result<f64> {
    medium.validate()?;
    if !(f_air_hz.is_finite() && f_air_hz > 0.0) {
        return Err(Error::param("f_air_hz", "must be > 0"));
    }
    if !(0.0..=1.0).contains(&embedding_fraction) {
        return Err(Error::param(
            "embedding_fraction",
            format!("must be in [0, 1], got {embedding_fraction}"),
        ));
    }
    Ok(f_air_hz / (1.0 + embedding_fraction * (medium.eps_r - 1.0)).sqrt())
}

/// Per-term breakdown of the two-way budget. All losses positive, in dB.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BudgetBreakdown {
    pub tx_power_dbm: f64,
    /// Reader plus sensor gain, counted on both passes.
    pub gains_db: f64,
    /// Distance used for spreading loss: air gap plus cover scaled by 1/sqrt(eps_r).
    pub effective_distance_m: f64,
    /// Spreading loss on both passes.
    pub fspl_two_way_db: f64,
    /// Dielectric loss in the cover on both passes.
    pub concrete_loss_two_way_db: f64,
    pub insertion_loss_db: f64,
    pub noise_floor_dbm: f64,
    pub snr_db: f64,
}

pub fn budget_breakdown(cfg: &LinkConfig, medium: &DielectricMedium) -> Result<BudgetBreakdown> {
    cfg.validate()?;
    let alpha = attenuation_np_per_m(medium, cfg.freq_hz)?;
    let effective = cfg.air_distance_m + cfg.cover_thickness_m / medium.eps_r.sqrt();
    let fspl = free_space_path_loss_db(cfg.freq_hz, effective)?;
    let gains = 2.0 * (cfg.gain_reader_dbi + cfg.gain_sensor_dbi);
    let concrete = 2.0 * NP_TO_DB * alpha * cfg.cover_thickness_m;
    let snr = cfg.tx_power_dbm + gains
        - 2.0 * fspl
        - concrete
        - cfg.insertion_loss_db
        - cfg.noise_floor_dbm;
    Ok(BudgetBreakdown {
        tx_power_dbm: cfg.tx_power_dbm,
        gains_db: gains,
        effective_distance_m: effective,
        fspl_two_way_db: 2.0 * fspl,
        concrete_loss_two_way_db: concrete,
        insertion_loss_db: cfg.insertion_loss_db,
        noise_floor_dbm: cfg.noise_floor_dbm,
        snr_db: snr,
    })
}

/// Received SNR (dB) after the reader -> sensor -> reader round trip.
pub fn round_trip_budget_db(cfg: &LinkConfig, medium: &DielectricMedium) -> Result<f64> {
    budget_breakdown(cfg, medium).map(|b| b.snr_db)
}

/// Read-range search resolution (m).
pub const RANGE_RESOLUTION_M: f64 = 1e-3;

/// Largest air gap at which the budget still meets `snr_threshold_db`.
///
/// The search starts at the closest far-field-valid air gap; if the link does
/// not close there, [`Error::NoLink`] is returned. The result `r` satisfies
/// `budget(r) >= threshold > budget(r + 2 mm)`.
pub fn max_read_range_m(cfg: &LinkConfig, medium: &DielectricMedium) -> Result<f64> {
    cfg.validate()?;
    medium.validate()?;
    let threshold = cfg.snr_threshold_db;
    let at = |air: f64| {
        round_trip_budget_db(
            &LinkConfig {
                air_distance_m: air,
                ..*cfg
            },
            medium,
        )
    };

    let cover_equiv = cfg.cover_thickness_m / medium.eps_r.sqrt();
    // nudge past the bound so rounding in `air + cover_equiv` stays far field
    let mut lo = (far_field_bound_m(cfg.freq_hz) * (1.0 + 1e-12) - cover_equiv).max(0.0);
    let snr_lo = at(lo)?;
    if snr_lo < threshold {
        return Err(Error::NoLink {
            snr_db: snr_lo,
            distance_m: lo,
            threshold_db: threshold,
        });
    }

    let mut hi = lo.max(1.0);
    while at(hi)? >= threshold {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::param(
                "link",
                "budget does not decrease with distance",
            ));
        }
    }
    while hi - lo > RANGE_RESOLUTION_M {
        let mid = 0.5 * (lo + hi);
        if at(mid)? >= threshold {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}
