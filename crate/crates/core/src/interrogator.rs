//! Simulated swept-frequency reader.
//!
//! [`sweep`] synthesizes what the reader sees through the channel,
//! [`detect_resonance`] locates the reflection dip, [`ResonanceMap`] converts
//! a dip location back into the resonator's series resonance, and the
//! `invert_*` functions map frequency to temperature or strain.

use nalgebra::{Matrix4, Vector4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::resonator::{resonant_frequency, s11_response_at, ResonatorParams};
use crate::spectrum::{linear_grid, Spectrum};
use crate::{Error, Result};

/// Reader sweep settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub f_start_hz: f64,
    pub f_stop_hz: f64,
    pub n_points: usize,
    /// Per-point Gaussian noise on |S11| in dB when the link SNR equals `ref_snr_db`.
    pub if_noise_sigma_db: f64,
    /// Link SNR at which the dip is seen at full depth with `if_noise_sigma_db` noise.
    pub ref_snr_db: f64,
    pub seed: u64,
}

impl SweepConfig {
    pub const MIN_POINTS: usize = 16;

    pub fn validate(&self) -> Result<()> {
        if !(self.f_start_hz.is_finite() && self.f_start_hz > 0.0) {
            return Err(Error::param("f_start_hz", "must be > 0"));
        }
        if !(self.f_stop_hz.is_finite() && self.f_start_hz < self.f_stop_hz) {
            return Err(Error::param(
                "f_start_hz/f_stop_hz",
                format!(
                    "f_start_hz ({}) must be < f_stop_hz ({})",
                    self.f_start_hz, self.f_stop_hz
                ),
            ));
        }
        if self.n_points < Self::MIN_POINTS {
            return Err(Error::param(
                "n_points",
                format!("must be >= {}, got {}", Self::MIN_POINTS, self.n_points),
            ));
        }
        if !(self.if_noise_sigma_db.is_finite() && self.if_noise_sigma_db >= 0.0) {
            return Err(Error::param("if_noise_sigma_db", "must be >= 0"));
        }
        if !self.ref_snr_db.is_finite() {
            return Err(Error::param("ref_snr_db", "must be finite"));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        linear_grid(self.f_start_hz, self.f_stop_hz, self.n_points)
    }

    /// Linear factor applied to the dip depth at `link_snr_db` (1 at or above reference).
    pub fn depth_scale(&self, link_snr_db: f64) -> f64 {
        10f64.powf((link_snr_db - self.ref_snr_db) / 20.0).min(1.0)
    }

    /// Per-point noise sigma (dB) at `link_snr_db`.
    pub fn noise_sigma_db(&self, link_snr_db: f64) -> f64 {
        self.if_noise_sigma_db * 10f64.powf(-(link_snr_db - self.ref_snr_db) / 20.0)
    }
}

/// One interrogation result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Reading {
    pub timestamp_s: f64,
    /// Estimated dip frequency (Hz).
    pub freq_hz: f64,
    /// Dip depth below the spectrum's median baseline (dB).
    pub amplitude_db: f64,
    /// Dip depth over the robust per-point noise estimate, in dB.
    pub snr_db: f64,
    pub temp_c: Option<f64>,
    pub strain_ue: Option<f64>,
}

/// Sweep of the resonator at an operating point, as received through a link
/// with `link_snr_db`. Deterministic for a fixed `cfg.seed`.
pub fn sweep(
    resonator: &ResonatorParams,
    strain_ue: f64,
    temp_c: f64,
    link_snr_db: f64,
    cfg: &SweepConfig,
) -> Result<Spectrum> {
    let fs = resonant_frequency(resonator, strain_ue, temp_c)?;
    sweep_at(resonator, fs, link_snr_db, cfg)
}

/// [`sweep`] with the series resonance supplied directly.
pub fn sweep_at(
    resonator: &ResonatorParams,
    fs_hz: f64,
    link_snr_db: f64,
    cfg: &SweepConfig,
) -> Result<Spectrum> {
    cfg.validate()?;
    if !link_snr_db.is_finite() {
        return Err(Error::param("link_snr_db", "must be finite"));
    }
    let mut spectrum = s11_response_at(resonator, fs_hz, &cfg.grid())?;
    let scale = cfg.depth_scale(link_snr_db);
    let sigma = cfg.noise_sigma_db(link_snr_db);
    if scale == 1.0 && sigma == 0.0 {
        return Ok(spectrum);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ceiling = 3.0 * sigma;
    for v in spectrum.s11_db.iter_mut() {
        let z: f64 = StandardNormal.sample(&mut rng);
        *v = (scale * *v + sigma * z).min(ceiling);
    }
    Ok(spectrum)
}

/// Dip refinement method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Estimator {
    /// Three-point parabola through the minimum and its neighbours.
    #[default]
    Parabolic,
    /// Least-squares Lorentzian over the dip, seeded by the parabolic estimate.
    Lorentzian,
}

// floor on the robust noise estimate so that noiseless spectra give finite SNR
const SIGMA_FLOOR_DB: f64 = 1e-12;

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let mid = n / 2;
    values.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = values[mid];
    if n % 2 == 1 {
        upper
    } else {
        let lower = values[..mid]
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

/// Per-point noise sigma from the median absolute deviation of first differences.
pub fn robust_noise_sigma_db(s11_db: &[f64]) -> f64 {
    if s11_db.len() < 3 {
        return SIGMA_FLOOR_DB;
    }
    let mut diffs: Vec<f64> = s11_db.windows(2).map(|w| w[1] - w[0]).collect();
    let center = median(&mut diffs);
    let mut dev: Vec<f64> = diffs.iter().map(|d| (d - center).abs()).collect();
    let mad = median(&mut dev);
    (1.4826 * mad / std::f64::consts::SQRT_2).max(SIGMA_FLOOR_DB)
}

/// Vertex abscissa of the parabola through three points, if it opens upward.
pub fn parabola_vertex(x: [f64; 3], y: [f64; 3]) -> Option<f64> {
    // work relative to the middle abscissa to keep precision at GHz scale
    let (a, b) = (x[0] - x[1], x[2] - x[1]);
    let (ya, yb) = (y[0] - y[1], y[2] - y[1]);
    // y = p u^2 + q u through (a, ya), (0, 0), (b, yb)
    let det = a * b * (a - b);
    if det == 0.0 {
        return None;
    }
    let p = (ya * b - yb * a) / det;
    let q = (yb * a * a - ya * b * b) / det;
    if !(p > 0.0) {
        return None;
    }
    Some(x[1] - q / (2.0 * p))
}

fn argmin(values: &[f64]) -> usize {
    values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap_or(0)
}

fn parabolic_estimate(spec: &Spectrum, i0: usize) -> f64 {
    let (f, y) = (&spec.freqs_hz, &spec.s11_db);
    if i0 == 0 || i0 + 1 >= f.len() {
        return f[i0];
    }
    match parabola_vertex([f[i0 - 1], f[i0], f[i0 + 1]], [y[i0 - 1], y[i0], y[i0 + 1]]) {
        Some(v) => v.clamp(f[i0 - 1], f[i0 + 1]),
        None => f[i0],
    }
}

/// Locates the global |S11| minimum and refines it with a three-point parabola.
pub fn detect_resonance(spec: &Spectrum) -> Result<Reading> {
    detect_resonance_with(spec, Estimator::Parabolic)
}

pub fn detect_resonance_with(spec: &Spectrum, estimator: Estimator) -> Result<Reading> {
    if spec.is_empty() {
        return Err(Error::Empty("spectrum"));
    }
    if spec.freqs_hz.len() != spec.s11_db.len() {
        return Err(Error::param(
            "s11_db",
            "length does not match frequency grid",
        ));
    }
    let i0 = argmin(&spec.s11_db);
    let min = spec.s11_db[i0];
    let baseline = median(&mut spec.s11_db.clone());
    let depth = baseline - min;
    let sigma = robust_noise_sigma_db(&spec.s11_db);
    if !(depth >= 3.0 * sigma) || depth <= 0.0 {
        return Err(Error::NoResonance {
            depth_db: depth.max(0.0),
            sigma_db: sigma,
        });
    }
    let parabolic = parabolic_estimate(spec, i0);
    let freq_hz = match estimator {
        Estimator::Parabolic => parabolic,
        Estimator::Lorentzian => {
            lorentzian_fit(spec, i0, baseline, depth, parabolic).unwrap_or(parabolic)
        }
    };
    Ok(Reading {
        timestamp_s: 0.0,
        freq_hz,
        amplitude_db: depth,
        snr_db: 20.0 * (depth / sigma).log10(),
        temp_c: None,
        strain_ue: None,
    })
}

/// Result of a Lorentzian dip fit `y = base - depth / (1 + ((f - center)/hwhm)^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    pub base_db: f64,
    pub depth_db: f64,
    pub center_hz: f64,
    pub hwhm_hz: f64,
}

fn lorentzian_fit(
    spec: &Spectrum,
    i0: usize,
    baseline: f64,
    depth: f64,
    seed_hz: f64,
) -> Option<f64> {
    let (f, y) = (&spec.freqs_hz, &spec.s11_db);
    let n = f.len();
    let half = spec.s11_db[i0] + depth / 2.0;
    let left = (0..i0).rev().find(|&i| y[i] > half).unwrap_or(0);
    let right = (i0..n).find(|&i| y[i] > half).unwrap_or(n - 1);
    let half_width = (right - left).max(4) / 2;
    let lo = i0.saturating_sub(3 * half_width);
    let hi = (i0 + 3 * half_width).min(n - 1);
    if hi - lo < 5 {
        return None;
    }
    let step = (f[hi] - f[lo]) / (hi - lo) as f64;
    let hwhm0 = ((f[right] - f[left]) / 2.0).max(step);
    let fit = fit_lorentzian(
        &f[lo..=hi],
        &y[lo..=hi],
        LorentzianFit {
            base_db: baseline,
            depth_db: depth,
            center_hz: seed_hz,
            hwhm_hz: hwhm0.max(f64::MIN_POSITIVE),
        },
    )?;
    (fit.center_hz >= f[lo] && fit.center_hz <= f[hi]).then_some(fit.center_hz)
}

/// Levenberg-Marquardt fit of a Lorentzian dip starting from `init`.
pub fn fit_lorentzian(freqs: &[f64], values: &[f64], init: LorentzianFit) -> Option<LorentzianFit> {
    if freqs.len() < 5 || freqs.len() != values.len() {
        return None;
    }
    // normalised abscissa: u = (f - origin) / scale
    let origin = init.center_hz;
    let scale = init.hwhm_hz;
    let u: Vec<f64> = freqs.iter().map(|f| (f - origin) / scale).collect();
    let mut p = Vector4::new(init.base_db, init.depth_db, 0.0, 1.0);

    let residuals = |p: &Vector4<f64>| -> f64 {
        u.iter()
            .zip(values)
            .map(|(ui, yi)| {
                let t = (ui - p[2]) / p[3];
                let r = yi - (p[0] - p[1] / (1.0 + t * t));
                r * r
            })
            .sum()
    };

    let mut cost = residuals(&p);
    let mut lambda = 1e-3;
    for _ in 0..200 {
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (ui, yi) in u.iter().zip(values) {
            let t = (ui - p[2]) / p[3];
            let d = 1.0 + t * t;
            let model = p[0] - p[1] / d;
            let r = yi - model;
            // partial derivatives of the model
            let dd = p[1] * 2.0 * t / (d * d);
            let j = Vector4::new(1.0, -1.0 / d, -dd / p[3], -dd * t / p[3]);
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut improved = false;
        for _ in 0..20 {
            let mut a = jtj;
            for k in 0..4 {
                a[(k, k)] *= 1.0 + lambda;
            }
            let step = a.lu().solve(&jtr)?;
            let trial = p + step;
            if !(trial[3] > 0.0) || !trial.iter().all(|v| v.is_finite()) {
                lambda *= 10.0;
                continue;
            }
            let c = residuals(&trial);
            if c < cost {
                let done = (cost - c) <= 1e-15 * cost.max(1e-300) || step.norm() < 1e-12;
                p = trial;
                cost = c;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if done {
                    return finish(p, origin, scale);
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    finish(p, origin, scale)
}

fn finish(p: Vector4<f64>, origin: f64, scale: f64) -> Option<LorentzianFit> {
    let fit = LorentzianFit {
        base_db: p[0],
        depth_db: p[1],
        center_hz: origin + p[2] * scale,
        hwhm_hz: p[3] * scale,
    };
    (fit.center_hz.is_finite() && fit.hwhm_hz > 0.0).then_some(fit)
}

/// Temperature from a resonance frequency, taking the root of the TCF
/// polynomial nearest the reference temperature.
pub fn invert_temperature(freq_hz: f64, params: &ResonatorParams) -> Result<f64> {
    params.validate()?;
    if params.tcf1_ppm_per_k == 0.0 {
        return Err(Error::param(
            "tcf1_ppm_per_k",
            "must be non-zero to invert temperature",
        ));
    }
    let y = freq_hz / params.f0_hz - 1.0;
    let a = params.tcf1_ppm_per_k * 1e-6;
    let b = params.tcf2_ppb_per_k2 * 1e-9;
    let dt = if b == 0.0 {
        y / a
    } else {
        // b dT^2 + a dT - y = 0
        let disc = a * a + 4.0 * b * y;
        if disc < 0.0 {
            return Err(Error::Inversion(format!(
                "no real temperature for fractional shift {y:e}"
            )));
        }
        let q = -0.5 * (a + a.signum() * disc.sqrt());
        let r1 = q / b;
        let r2 = if q == 0.0 { 0.0 } else { -y / q };
        if r1.abs() < r2.abs() {
            r1
        } else {
            r2
        }
    };
    if !(dt.abs() <= 150.0) {
        return Err(Error::Inversion(format!(
            "temperature offset {dt:.2} K outside +/-150 K"
        )));
    }
    Ok(params.ref_temp_c + dt)
}

/// Strain from a resonance frequency after removing the thermal shift at `temp_c`.
///
/// Exact inverse of [`resonant_frequency`]: the thermal part is subtracted
/// from the fractional shift rather than divided out.
pub fn invert_strain(freq_hz: f64, temp_c: f64, params: &ResonatorParams) -> Result<f64> {
    if params.strain_sens_ppm_per_ue == 0.0 {
        return Err(Error::param(
            "strain_sens_ppm_per_ue",
            "must be non-zero to invert strain",
        ));
    }
    let f_temp_only = resonant_frequency(params, 0.0, temp_c)?;
    Ok((freq_hz - f_temp_only) / params.f0_hz * 1e6 / params.strain_sens_ppm_per_ue)
}

/// Maps a detected dip frequency back to the series resonance that produced
/// it, by matching against the noiseless model seen through the same grid and
/// estimator.
///
/// The |S11| minimum of a BVD resonator sits slightly off its series
/// resonance and the grid estimator adds a position-dependent bias; both are
/// removed here so that a noiseless chain inverts exactly.
#[derive(Debug, Clone)]
pub struct ResonanceMap {
    params: ResonatorParams,
    grid: Vec<f64>,
    estimator: Estimator,
}

impl ResonanceMap {
    const FIXED_POINT_ITERATIONS: usize = 12;
    const MAX_ITERATIONS: usize = 80;

    pub fn new(params: ResonatorParams, grid: Vec<f64>, estimator: Estimator) -> Self {
        ResonanceMap {
            params,
            grid,
            estimator,
        }
    }

    /// Dip frequency the estimator reports for a noiseless resonator at `fs_hz`.
    pub fn model_dip(&self, fs_hz: f64) -> Result<f64> {
        let spectrum = s11_response_at(&self.params, fs_hz, &self.grid)?;
        detect_resonance_with(&spectrum, self.estimator).map(|r| r.freq_hz)
    }

    pub fn series_resonance(&self, dip_hz: f64) -> Result<f64> {
        let tol = 1e-13 * dip_hz.abs() + 1e-6;
        let mut fs = dip_hz;
        for _ in 0..Self::FIXED_POINT_ITERATIONS {
            let err = dip_hz - self.model_dip(fs)?;
            if err.abs() <= tol {
                return Ok(fs);
            }
            fs += err;
        }
        // The fixed point stalls where the grid bias is steep; the model dip
        // is monotone in fs, so fall back to bisection.
        let offset = self.model_dip(dip_hz)? - dip_hz;
        let step = self.grid_step().max(offset.abs());
        let (mut lo, mut hi) = (dip_hz - offset - step, dip_hz - offset + step);
        let mut widen = 0;
        while self.model_dip(lo)? > dip_hz || self.model_dip(hi)? < dip_hz {
            lo -= step;
            hi += step;
            widen += 1;
            if widen > Self::MAX_ITERATIONS {
                return Err(Error::Inversion(format!(
                    "no series resonance maps to dip {dip_hz} Hz"
                )));
            }
        }
        for _ in 0..Self::MAX_ITERATIONS {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= tol {
                return Ok(mid);
            }
            if self.model_dip(mid)? < dip_hz {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    fn grid_step(&self) -> f64 {
        match (self.grid.first(), self.grid.last()) {
            (Some(a), Some(b)) if self.grid.len() > 1 => (b - a) / (self.grid.len() - 1) as f64,
            _ => 0.0,
        }
    }
}
