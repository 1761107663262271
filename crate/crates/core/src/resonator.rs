//! One-port SAW resonator: frequency response to strain and temperature, and
//! the electrical reflection seen at its port through a Butterworth-Van Dyke
//! (BVD) equivalent circuit.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectrum::{check_grid, Spectrum};
use crate::{Error, Result};

/// Strain range the linear sensitivity model is calibrated for (microstrain).
pub const STRAIN_ENVELOPE_UE: (f64, f64) = (-5000.0, 5000.0);
/// Temperature range the TCF polynomial is calibrated for (degC).
pub const TEMP_ENVELOPE_C: (f64, f64) = (-40.0, 150.0);

/// Electrical and sensitivity description of a one-port SAW resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonatorParams {
    /// Series resonance at zero strain and `ref_temp_c` (Hz).
    pub f0_hz: f64,
    /// Unloaded quality factor.
    pub q_factor: f64,
    /// Static (electrode) capacitance (F).
    pub c0_farad: f64,
    /// Motional to static capacitance ratio Cm/C0.
    pub coupling_ratio: f64,
    /// Signed strain sensitivity (ppm per microstrain). Negative: tension lowers f.
    pub strain_sens_ppm_per_ue: f64,
    /// First-order temperature coefficient of frequency (ppm/K).
    pub tcf1_ppm_per_k: f64,
    /// Second-order temperature coefficient (ppb/K^2).
    pub tcf2_ppb_per_k2: f64,
    pub ref_temp_c: f64,
    /// Reference impedance for S11 (ohm).
    pub z0_ohm: f64,
}

impl ResonatorParams {
    /// 869 MHz strain resonator glued to the rebar.
    pub fn strain_sensor() -> Self {
        ResonatorParams {
            f0_hz: 869.0e6,
            q_factor: 8000.0,
            c0_farad: 2.0e-12,
            coupling_ratio: 2.5e-4,
            strain_sens_ppm_per_ue: -0.6,
            tcf1_ppm_per_k: -40.0,
            tcf2_ppb_per_k2: 0.0,
            ref_temp_c: 20.0,
            z0_ohm: 50.0,
        }
    }

    /// 2.459 GHz packaged temperature sensor, mechanically decoupled from the rebar.
    pub fn temperature_sensor() -> Self {
        ResonatorParams {
            f0_hz: 2.459e9,
            strain_sens_ppm_per_ue: 0.0,
            ..Self::strain_sensor()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("f0_hz", self.f0_hz),
            ("c0_farad", self.c0_farad),
            ("coupling_ratio", self.coupling_ratio),
            ("z0_ohm", self.z0_ohm),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(key, format!("must be > 0, got {v}")));
            }
        }
        if !(self.q_factor.is_finite() && self.q_factor > 1.0) {
            return Err(Error::param(
                "q_factor",
                format!("must be > 1, got {}", self.q_factor),
            ));
        }
        let finite = [
            ("strain_sens_ppm_per_ue", self.strain_sens_ppm_per_ue),
            ("tcf1_ppm_per_k", self.tcf1_ppm_per_k),
            ("tcf2_ppb_per_k2", self.tcf2_ppb_per_k2),
            ("ref_temp_c", self.ref_temp_c),
        ];
        for (key, v) in finite {
            if !v.is_finite() {
                return Err(Error::param(key, "must be finite"));
            }
        }
        Ok(())
    }

    /// Fractional thermal shift `tcf1*dT*1e-6 + tcf2*dT^2*1e-9`.
    pub fn thermal_shift(&self, temp_c: f64) -> f64 {
        let dt = temp_c - self.ref_temp_c;
        self.tcf1_ppm_per_k * dt * 1e-6 + self.tcf2_ppb_per_k2 * dt * dt * 1e-9
    }
}

fn check_envelope(quantity: &'static str, value: f64, (min, max): (f64, f64)) -> Result<()> {
    if value.is_finite() && (min..=max).contains(&value) {
        Ok(())
    } else {
        Err(Error::OutOfEnvelope {
            quantity,
            value,
            min,
            max,
        })
    }
}

/// Series resonance under strain and temperature. Additive model, no cross term.
pub fn resonant_frequency(params: &ResonatorParams, strain_ue: f64, temp_c: f64) -> Result<f64> {
    params.validate()?;
    check_envelope("strain_ue", strain_ue, STRAIN_ENVELOPE_UE)?;
    check_envelope("temp_c", temp_c, TEMP_ENVELOPE_C)?;
    let strain_shift = params.strain_sens_ppm_per_ue * strain_ue * 1e-6;
    Ok(params.f0_hz * (1.0 + strain_shift + params.thermal_shift(temp_c)))
}

/// BVD circuit: static capacitance C0 in parallel with a series Rm-Lm-Cm branch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BvdCircuit {
    pub c0: f64,
    pub cm: f64,
    pub lm: f64,
    pub rm: f64,
    pub z0: f64,
}

impl BvdCircuit {
    /// Motional branch tuned to resonate in series at `fs_hz` with the
    /// resonator's Q and capacitance ratio.
    pub fn tuned(params: &ResonatorParams, fs_hz: f64) -> Self {
        let ws = 2.0 * PI * fs_hz;
        let cm = params.coupling_ratio * params.c0_farad;
        let lm = 1.0 / (ws * ws * cm);
        let rm = ws * lm / params.q_factor;
        BvdCircuit {
            c0: params.c0_farad,
            cm,
            lm,
            rm,
            z0: params.z0_ohm,
        }
    }

    pub fn series_resonance_hz(&self) -> f64 {
        1.0 / (2.0 * PI * (self.lm * self.cm).sqrt())
    }

    pub fn motional_impedance(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz;
        Complex64::new(self.rm, w * self.lm - 1.0 / (w * self.cm))
    }

    pub fn impedance(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz;
        let y = Complex64::new(0.0, w * self.c0) + self.motional_impedance(freq_hz).inv();
        y.inv()
    }

    /// Reflection coefficient referenced to `z0`.
    pub fn reflection(&self, freq_hz: f64) -> Complex64 {
        let z = self.impedance(freq_hz);
        (z - self.z0) / (z + self.z0)
    }

    /// |S11| in dB.
    ///
    /// Evaluated as `1 - 4*R*Z0/|Z+Z0|^2` so a passive load (R >= 0) can never
    /// round above 0 dB.
    pub fn reflection_db(&self, freq_hz: f64) -> f64 {
        let z = self.impedance(freq_hz);
        let r = z.re.max(0.0);
        let denom = (r + self.z0).powi(2) + z.im * z.im;
        let loss = 4.0 * r * self.z0 / denom;
        10.0 * (-loss).ln_1p() / std::f64::consts::LN_10
    }
}

/// Port impedance of the resonator at `freq_hz` for the given operating point.
pub fn bvd_impedance(
    params: &ResonatorParams,
    strain_ue: f64,
    temp_c: f64,
    freq_hz: f64,
) -> Result<Complex64> {
    if !(freq_hz.is_finite() && freq_hz > 0.0) {
        return Err(Error::param("freq_hz", "must be > 0"));
    }
    let fs = resonant_frequency(params, strain_ue, temp_c)?;
    Ok(BvdCircuit::tuned(params, fs).impedance(freq_hz))
}

/// Half-width of the band that must lie inside a sweep for the dip to be
/// considered complete, as a fraction of the resonance.
pub(crate) fn dip_band_fraction(params: &ResonatorParams) -> f64 {
    2.0 / params.q_factor
}

/// Ideal |S11| (dB) on `freq_grid`. Flags the spectrum truncated when the
/// resonance band `fs*(1 +/- 2/Q)` is not inside the grid.
pub fn s11_response(
    params: &ResonatorParams,
    strain_ue: f64,
    temp_c: f64,
    freq_grid: &[f64],
) -> Result<Spectrum> {
    let fs = resonant_frequency(params, strain_ue, temp_c)?;
    s11_response_at(params, fs, freq_grid)
}

/// Same as [`s11_response`] with the series resonance given directly.
pub fn s11_response_at(
    params: &ResonatorParams,
    fs_hz: f64,
    freq_grid: &[f64],
) -> Result<Spectrum> {
    params.validate()?;
    if freq_grid.is_empty() {
        return Err(Error::Empty("frequency grid"));
    }
    check_grid(freq_grid)?;
    let bvd = BvdCircuit::tuned(params, fs_hz);
    let s11_db = freq_grid.iter().map(|&f| bvd.reflection_db(f)).collect();
    let mut spectrum = Spectrum {
        freqs_hz: freq_grid.to_vec(),
        s11_db,
        truncated: false,
    };
    let band = dip_band_fraction(params) * fs_hz;
    spectrum.flag_band(fs_hz - band, fs_hz + band);
    Ok(spectrum)
}
