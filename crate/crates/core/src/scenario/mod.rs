//! End-to-end experiment replays.
//!
//! A [`ScenarioConfig`] describes the ground truth (environment, curing,
//! loads, creep) and the reader. [`run`] steps through the interrogation
//! schedule and pairs every truth sample with what the reader recovered.

pub mod calibration;
pub mod config;
pub mod environment;
pub mod program;
pub mod summary;

use serde::{Deserialize, Serialize};

use crate::interrogator::{detect_resonance_with, invert_strain, invert_temperature, ResonanceMap};
use crate::interrogator::{sweep_at, Estimator, Reading, SweepConfig};
use crate::link::{round_trip_budget_db, DielectricMedium, LinkConfig};
use crate::resonator::{resonant_frequency, ResonatorParams};
use crate::structure::{BeamSpec, CreepParams, CreepState};
use crate::{Error, Result, Spectrum};

pub use environment::{
    ambient_c, curing_state, hydration_temperature_c, CuringState, SECONDS_PER_DAY,
};
pub use program::{LoadSchedule, MachineProgram, WeightsProgram};
pub use summary::{summarize, Approach, HoldStats, Phase, Summary, SummaryOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScenarioKind {
    #[serde(rename = "temperature-21day")]
    Temperature21Day,
    WeightsStaircase,
    MachineCycle,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [
        ScenarioKind::Temperature21Day,
        ScenarioKind::WeightsStaircase,
        ScenarioKind::MachineCycle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::Temperature21Day => "temperature-21day",
            ScenarioKind::WeightsStaircase => "weights-staircase",
            ScenarioKind::MachineCycle => "machine-cycle",
        }
    }

    pub fn measures_strain(self) -> bool {
        !matches!(self, ScenarioKind::Temperature21Day)
    }
}

impl std::str::FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param("kind", format!("unknown scenario kind '{s}'")))
    }
}

/// Dielectric end points of the curing concrete.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConcreteConfig {
    pub fresh: DielectricMedium,
    pub dry: DielectricMedium,
    pub cure_tau_s: f64,
}

impl Default for ConcreteConfig {
    fn default() -> Self {
        ConcreteConfig {
            fresh: DielectricMedium::FRESH_CONCRETE,
            dry: DielectricMedium::DRY_CONCRETE,
            cure_tau_s: 2.0 * SECONDS_PER_DAY,
        }
    }
}

/// Ambient weather and hydration heat.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub base_c: f64,
    pub trend_k_per_day: f64,
    pub diurnal_amplitude_k: f64,
    pub exotherm_peak_k: f64,
    pub exotherm_peak_age_s: f64,
    /// Concrete age at scenario time zero.
    pub age_offset_s: f64,
}

impl Default for EnvironmentConfig {
    /// Constant laboratory conditions around mature concrete.
    fn default() -> Self {
        EnvironmentConfig {
            base_c: 20.0,
            trend_k_per_day: 0.0,
            diurnal_amplitude_k: 0.0,
            exotherm_peak_k: 0.0,
            exotherm_peak_age_s: 12.0 * 3600.0,
            age_offset_s: 60.0 * SECONDS_PER_DAY,
        }
    }
}

impl EnvironmentConfig {
    pub fn temperature_c(&self, age_s: f64) -> Result<f64> {
        hydration_temperature_c(
            age_s,
            |a| {
                ambient_c(
                    a,
                    self.base_c,
                    self.trend_k_per_day,
                    self.diurnal_amplitude_k,
                )
            },
            self.exotherm_peak_k,
            self.exotherm_peak_age_s,
        )
    }
}

/// Scheduled reader outage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Window {
    pub start_s: f64,
    pub end_s: f64,
}

impl Window {
    pub fn contains(&self, t_s: f64) -> bool {
        t_s >= self.start_s && t_s <= self.end_s
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SummaryConfig {
    /// Width of SNR/amplitude trend windows; 0 disables the trend.
    pub trend_window_s: f64,
    pub min_hold_records: usize,
}

impl Default for SummaryConfig {
    fn default() -> Self {
        SummaryConfig {
            trend_window_s: 0.0,
            min_hold_records: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub duration_s: f64,
    pub interrogation_period_s: f64,
    pub seed: u64,
    pub estimator: Estimator,
    /// Multiplier on `sweep.if_noise_sigma_db`; the single knob fitted by
    /// noise calibration.
    pub noise_scale: f64,
    pub resonator: ResonatorParams,
    /// Wireless channel. Without one the reader is cabled and sees
    /// `sweep.ref_snr_db`.
    pub link: Option<LinkConfig>,
    pub concrete: ConcreteConfig,
    pub environment: EnvironmentConfig,
    pub sweep: SweepConfig,
    pub beam: Option<BeamSpec>,
    pub creep: Option<CreepParams>,
    pub weights: Option<WeightsProgram>,
    pub machine: Option<MachineProgram>,
    pub phases: Vec<Phase>,
    pub dropout_windows: Vec<Window>,
    pub summary: SummaryConfig,
}

impl ScenarioConfig {
    /// Timestamps of every interrogation, `0, period, ..` up to `duration_s`.
    pub fn ticks(&self) -> Vec<f64> {
        let n = (self.duration_s / self.interrogation_period_s * (1.0 + 1e-12)).floor() as u64;
        (0..=n)
            .map(|k| k as f64 * self.interrogation_period_s)
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let scoped = |section: &str, e: Error| match e {
            Error::InvalidParameter { key, reason } => Error::InvalidParameter {
                key: format!("{section}.{key}"),
                reason,
            },
            other => other,
        };
        if !(self.duration_s.is_finite() && self.duration_s > 0.0) {
            return Err(Error::param("duration_s", "must be > 0"));
        }
        if !(self.interrogation_period_s.is_finite() && self.interrogation_period_s > 0.0) {
            return Err(Error::param("interrogation_period_s", "must be > 0"));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale >= 0.0) {
            return Err(Error::param("noise_scale", "must be >= 0"));
        }
        self.resonator
            .validate()
            .map_err(|e| scoped("resonator", e))?;
        if let Some(link) = &self.link {
            link.validate().map_err(|e| scoped("link", e))?;
        }
        self.concrete
            .fresh
            .validate()
            .map_err(|e| scoped("concrete.fresh", e))?;
        self.concrete
            .dry
            .validate()
            .map_err(|e| scoped("concrete.dry", e))?;
        if !(self.concrete.cure_tau_s.is_finite() && self.concrete.cure_tau_s > 0.0) {
            return Err(Error::param("concrete.cure_tau_s", "must be > 0"));
        }
        if !(self.environment.exotherm_peak_age_s.is_finite()
            && self.environment.exotherm_peak_age_s > 0.0)
        {
            return Err(Error::param(
                "environment.exotherm_peak_age_s",
                "must be > 0",
            ));
        }
        self.sweep.validate().map_err(|e| scoped("sweep", e))?;
        if let Some(creep) = &self.creep {
            creep.validate().map_err(|e| scoped("creep", e))?;
        }
        for (i, p) in self.phases.iter().enumerate() {
            if !(p.start_s <= p.end_s) {
                return Err(Error::param(
                    format!("phases[{i}]"),
                    "start_s must be <= end_s",
                ));
            }
        }
        for (i, w) in self.dropout_windows.iter().enumerate() {
            if !(w.start_s <= w.end_s) {
                return Err(Error::param(
                    format!("dropout_windows[{i}]"),
                    "start_s must be <= end_s",
                ));
            }
        }
        if self.kind.measures_strain() {
            if self.resonator.strain_sens_ppm_per_ue == 0.0 {
                return Err(Error::param(
                    "resonator.strain_sens_ppm_per_ue",
                    "strain scenarios need a strain-sensitive resonator",
                ));
            }
            let beam = self
                .beam
                .as_ref()
                .ok_or_else(|| Error::param("beam", "required by strain scenarios"))?;
            beam.validate().map_err(|e| scoped("beam", e))?;
        } else if self.resonator.tcf1_ppm_per_k == 0.0 {
            return Err(Error::param(
                "resonator.tcf1_ppm_per_k",
                "temperature scenarios need a temperature-sensitive resonator",
            ));
        }
        match self.kind {
            ScenarioKind::WeightsStaircase if self.weights.is_none() => {
                Err(Error::param("weights", "required by weights-staircase"))
            }
            ScenarioKind::MachineCycle if self.machine.is_none() => {
                Err(Error::param("machine", "required by machine-cycle"))
            }
            _ => Ok(()),
        }
    }

    fn schedule(&self) -> Result<Option<LoadSchedule>> {
        let beam = match &self.beam {
            Some(b) => b,
            None => return Ok(None),
        };
        match self.kind {
            ScenarioKind::Temperature21Day => Ok(None),
            ScenarioKind::WeightsStaircase => {
                let program = self.weights.unwrap_or_default();
                LoadSchedule::weights(beam, &program).map(Some)
            }
            ScenarioKind::MachineCycle => {
                let program = self.machine.unwrap_or_default();
                LoadSchedule::machine(beam, &program).map(Some)
            }
        }
    }

    pub fn summary_options(&self) -> SummaryOptions {
        SummaryOptions {
            phases: self.phases.clone(),
            trend_window_s: self.summary.trend_window_s,
            min_hold_records: self.summary.min_hold_records,
        }
    }
}

/// Truth and recovered values at one interrogation tick.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesRecord {
    pub timestamp_s: f64,
    pub truth_temp_c: f64,
    /// Applied rebar strain, excluding adhesive creep.
    pub truth_strain_ue: f64,
    pub link_snr_db: f64,
    /// `None` marks a dropout.
    pub reading: Option<Reading>,
}

impl SeriesRecord {
    pub fn is_dropout(&self) -> bool {
        self.reading.is_none()
    }

    pub fn temp_error_c(&self) -> Option<f64> {
        self.reading?.temp_c.map(|t| t - self.truth_temp_c)
    }

    pub fn strain_error_ue(&self) -> Option<f64> {
        self.reading?.strain_ue.map(|s| s - self.truth_strain_ue)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutput {
    pub records: Vec<SeriesRecord>,
    pub summary: Summary,
}

/// Seed of the sweep at `tick`, decorrelated across ticks and runs.
pub fn tick_seed(run_seed: u64, sweep_seed: u64, tick: u64) -> u64 {
    // splitmix64 finalizer over a combined key
    let mut z = run_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(sweep_seed.rotate_left(29))
        .wrapping_add(tick.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Series records for the whole schedule.
pub fn simulate(config: &ScenarioConfig) -> Result<Vec<SeriesRecord>> {
    simulate_observed(config, |_, _| {})
}

/// [`simulate`], handing every synthesized spectrum to `observer` with its tick index.
pub fn simulate_observed(
    config: &ScenarioConfig,
    mut observer: impl FnMut(usize, &Spectrum),
) -> Result<Vec<SeriesRecord>> {
    config.validate()?;
    let schedule = config.schedule()?;
    let mut creep = match (&config.creep, config.kind.measures_strain()) {
        (Some(p), true) => Some(CreepState::new(*p)?),
        _ => None,
    };
    let map = ResonanceMap::new(config.resonator, config.sweep.grid(), config.estimator);
    let mut sweep_cfg = SweepConfig {
        if_noise_sigma_db: config.sweep.if_noise_sigma_db * config.noise_scale,
        ..config.sweep
    };

    let ticks = config.ticks();
    let mut records = Vec::with_capacity(ticks.len());
    for (k, &t) in ticks.iter().enumerate() {
        let age = config.environment.age_offset_s + t;
        let truth_temp = config.environment.temperature_c(age)?;
        let truth_strain = match (&schedule, &config.beam) {
            (Some(s), Some(beam)) => s.strain_at(beam, t)?,
            _ => 0.0,
        };
        let drift = creep.as_mut().map_or(0.0, |c| c.push(t, truth_strain));
        let sensed_strain = truth_strain + drift;

        let link_snr = match &config.link {
            Some(link) => {
                let cure = curing_state(
                    age,
                    &config.concrete.fresh,
                    &config.concrete.dry,
                    config.concrete.cure_tau_s,
                    None,
                )?;
                round_trip_budget_db(link, &cure.medium)?
            }
            None => config.sweep.ref_snr_db,
        };

        let mut record = SeriesRecord {
            timestamp_s: t,
            truth_temp_c: truth_temp,
            truth_strain_ue: truth_strain,
            link_snr_db: link_snr,
            reading: None,
        };
        let scheduled_gap = config.dropout_windows.iter().any(|w| w.contains(t));
        let below_threshold = config
            .link
            .as_ref()
            .is_some_and(|l| link_snr < l.snr_threshold_db);
        if !(scheduled_gap || below_threshold) {
            sweep_cfg.seed = tick_seed(config.seed, config.sweep.seed, k as u64);
            let fs = resonant_frequency(&config.resonator, sensed_strain, truth_temp)?;
            let spectrum = sweep_at(&config.resonator, fs, link_snr, &sweep_cfg)?;
            observer(k, &spectrum);
            record.reading = match detect_resonance_with(&spectrum, config.estimator) {
                Ok(dip) => Some(recover(config, &map, dip, t, truth_temp)?),
                Err(Error::NoResonance { .. }) => None,
                Err(e) => return Err(e),
            };
        }
        records.push(record);
    }
    Ok(records)
}

fn recover(
    config: &ScenarioConfig,
    map: &ResonanceMap,
    dip: Reading,
    t: f64,
    truth_temp: f64,
) -> Result<Reading> {
    let fs = match map.series_resonance(dip.freq_hz) {
        Ok(f) => f,
        // estimate too close to the sweep edge to model; keep the raw dip
        Err(Error::NoResonance { .. }) => dip.freq_hz,
        Err(e) => return Err(e),
    };
    let (temp_c, strain_ue) = if config.kind.measures_strain() {
        // the decoupled reference sensor supplies the compensation temperature
        (None, invert_strain(fs, truth_temp, &config.resonator).ok())
    } else {
        (invert_temperature(fs, &config.resonator).ok(), None)
    };
    Ok(Reading {
        timestamp_s: t,
        freq_hz: fs,
        temp_c,
        strain_ue,
        ..dip
    })
}

/// Simulates the schedule and summarizes it.
pub fn run(config: &ScenarioConfig) -> Result<RunOutput> {
    let records = simulate(config)?;
    let summary = summarize(&records, &config.summary_options())?;
    Ok(RunOutput { records, summary })
}
