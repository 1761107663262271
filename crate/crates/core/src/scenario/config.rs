//! Bundled presets and the TOML overlay that turns a partial config file into
//! a fully resolved [`ScenarioConfig`].
//!
//! A config file names a `kind`; every key it sets replaces the value in that
//! kind's preset, tables merge key by key and arrays are replaced whole.
//! Unknown keys are rejected by dotted path.

use toml::{Table, Value};

use super::program::{LoadSchedule, MachineProgram, WeightsProgram};
use super::summary::Phase;
use super::{
    ConcreteConfig, EnvironmentConfig, ScenarioConfig, ScenarioKind, SummaryConfig, Window,
    SECONDS_PER_DAY,
};
use crate::interrogator::{Estimator, SweepConfig};
use crate::link::LinkConfig;
use crate::resonator::ResonatorParams;
use crate::structure::{BeamSpec, CreepParams};
use crate::{Error, Result};

const HOUR: f64 = 3600.0;

/// Noise multiplier fitted for the temperature-21day preset against
/// fresh/hardened precision targets of 0.5 / 0.1 degC.
pub const CALIBRATED_TEMPERATURE_NOISE_SCALE: f64 = 0.509136;

impl ScenarioConfig {
    pub fn preset(kind: ScenarioKind) -> ScenarioConfig {
        match kind {
            ScenarioKind::Temperature21Day => temperature_preset(),
            ScenarioKind::WeightsStaircase => weights_preset(),
            ScenarioKind::MachineCycle => machine_preset(),
        }
    }

    /// Parses a config file and overlays it on its kind's preset.
    pub fn from_toml_str(text: &str) -> Result<ScenarioConfig> {
        let user: Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        let kind = match user.get("kind") {
            Some(Value::String(s)) => s.parse::<ScenarioKind>()?,
            Some(_) => return Err(Error::param("kind", "must be a string")),
            None => return Err(Error::param("kind", "missing")),
        };
        let preset = ScenarioConfig::preset(kind);
        let schema = to_table(&preset.fully_populated())?;
        check_keys(&user, &schema, "")?;
        let mut merged = to_table(&preset)?;
        overlay(&mut merged, &user, &schema);
        let config: ScenarioConfig = Value::Table(merged)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.message().to_string()))?;
        config.validate()?;
        Ok(config)
    }

    /// Fully resolved config as TOML; parses back to an identical config.
    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Copy with every optional section present, used as the key schema.
    fn fully_populated(&self) -> ScenarioConfig {
        let mut c = self.clone();
        c.link.get_or_insert_with(LinkConfig::default);
        c.beam.get_or_insert_with(BeamSpec::default);
        c.creep.get_or_insert_with(CreepParams::default);
        c.weights.get_or_insert_with(WeightsProgram::default);
        c.machine.get_or_insert_with(MachineProgram::default);
        if let Some(w) = c.weights.as_mut() {
            w.target_ue_per_step.get_or_insert(2.0);
            w.calibration_scale.get_or_insert(1.0);
        }
        if c.phases.is_empty() {
            c.phases.push(Phase {
                name: String::new(),
                start_s: 0.0,
                end_s: 0.0,
            });
        }
        if c.dropout_windows.is_empty() {
            c.dropout_windows.push(Window {
                start_s: 0.0,
                end_s: 0.0,
            });
        }
        c
    }
}

fn to_table(config: &ScenarioConfig) -> Result<Table> {
    match Value::try_from(config).map_err(|e| Error::Config(e.to_string()))? {
        Value::Table(t) => Ok(t),
        _ => Err(Error::Config("config did not serialize to a table".into())),
    }
}

fn check_keys(user: &Table, schema: &Table, prefix: &str) -> Result<()> {
    for (key, value) in user {
        let path = if prefix.is_empty() {
            key.clone()
        } else {
            format!("{prefix}.{key}")
        };
        let expected = schema
            .get(key)
            .ok_or_else(|| Error::param(path.clone(), "unknown key"))?;
        match (value, expected) {
            (Value::Table(u), Value::Table(s)) => check_keys(u, s, &path)?,
            (Value::Array(items), Value::Array(s)) => {
                if let Some(Value::Table(item_schema)) = s.first() {
                    for (i, item) in items.iter().enumerate() {
                        match item {
                            Value::Table(t) => check_keys(t, item_schema, &format!("{path}[{i}]"))?,
                            _ => {
                                return Err(Error::param(
                                    format!("{path}[{i}]"),
                                    "expected a table",
                                ))
                            }
                        }
                    }
                }
            }
            (Value::Integer(_), Value::Float(_)) => {}
            (v, e) if v.same_type(e) => {}
            (v, e) => {
                return Err(Error::param(
                    path,
                    format!("expected {}, got {}", e.type_str(), v.type_str()),
                ))
            }
        }
    }
    Ok(())
}

fn overlay(base: &mut Table, user: &Table, schema: &Table) {
    for (key, value) in user {
        match (base.get_mut(key), value) {
            (Some(Value::Table(b)), Value::Table(u)) => {
                let empty = Table::new();
                let s = match schema.get(key) {
                    Some(Value::Table(s)) => s,
                    _ => &empty,
                };
                overlay(b, u, s);
            }
            (None, Value::Table(u)) => {
                // an optional section absent from the preset starts from its defaults
                match schema.get(key) {
                    Some(Value::Table(s)) => {
                        let mut b = s.clone();
                        overlay(&mut b, u, s);
                        base.insert(key.clone(), Value::Table(b));
                    }
                    _ => {
                        base.insert(key.clone(), value.clone());
                    }
                }
            }
            _ => {
                base.insert(key.clone(), value.clone());
            }
        }
    }
}

const TEMPERATURE_SWEEP_START_HZ: f64 = 2.4555e9;
const TEMPERATURE_SWEEP_STEP_HZ: f64 = 1.7e5;

fn temperature_preset() -> ScenarioConfig {
    // Lower Q with stronger coupling keeps the matched dip deep but wide enough
    // for a 170 kHz sweep step.
    let resonator = ResonatorParams {
        q_factor: 4000.0,
        coupling_ratio: 5.0e-4,
        ..ResonatorParams::temperature_sensor()
    };
    ScenarioConfig {
        kind: ScenarioKind::Temperature21Day,
        duration_s: 21.0 * SECONDS_PER_DAY,
        interrogation_period_s: HOUR,
        seed: 1,
        estimator: Estimator::Parabolic,
        noise_scale: CALIBRATED_TEMPERATURE_NOISE_SCALE,
        resonator,
        link: Some(LinkConfig {
            freq_hz: 2.45e9,
            air_distance_m: 0.025,
            cover_thickness_m: 0.025,
            ..LinkConfig::default()
        }),
        concrete: ConcreteConfig {
            cure_tau_s: 4.0 * SECONDS_PER_DAY,
            ..ConcreteConfig::default()
        },
        environment: EnvironmentConfig {
            base_c: 17.0,
            trend_k_per_day: 0.25,
            diurnal_amplitude_k: 2.0,
            exotherm_peak_k: 12.0,
            exotherm_peak_age_s: 14.0 * HOUR,
            age_offset_s: 0.0,
        },
        sweep: SweepConfig {
            f_start_hz: TEMPERATURE_SWEEP_START_HZ,
            f_stop_hz: TEMPERATURE_SWEEP_START_HZ + 38.0 * TEMPERATURE_SWEEP_STEP_HZ,
            n_points: 39,
            if_noise_sigma_db: 1.0,
            ref_snr_db: 70.0,
            seed: 0,
        },
        beam: None,
        creep: None,
        weights: None,
        machine: None,
        phases: vec![
            Phase {
                name: "fresh".into(),
                start_s: 3.0 * HOUR,
                end_s: 24.0 * HOUR,
            },
            Phase {
                name: "hardened".into(),
                start_s: 9.0 * SECONDS_PER_DAY,
                end_s: 21.0 * SECONDS_PER_DAY,
            },
        ],
        dropout_windows: Vec::new(),
        summary: SummaryConfig {
            trend_window_s: SECONDS_PER_DAY,
            min_hold_records: 3,
        },
    }
}

fn weights_preset() -> ScenarioConfig {
    let weights = WeightsProgram::default();
    let n_levels = if weights.unload {
        2 * weights.n_steps
    } else {
        weights.n_steps
    };
    ScenarioConfig {
        kind: ScenarioKind::WeightsStaircase,
        duration_s: 2.0 * weights.lead_s + n_levels as f64 * weights.hold_s - weights.hold_s,
        interrogation_period_s: 5.0,
        seed: 1,
        estimator: Estimator::Parabolic,
        noise_scale: 1.0,
        resonator: ResonatorParams::strain_sensor(),
        link: None,
        concrete: ConcreteConfig::default(),
        environment: EnvironmentConfig::default(),
        sweep: SweepConfig {
            f_start_hz: 868.6e6,
            f_stop_hz: 869.4e6,
            n_points: 801,
            if_noise_sigma_db: 0.02,
            ref_snr_db: 40.0,
            seed: 0,
        },
        beam: Some(BeamSpec::default()),
        creep: Some(CreepParams::default()),
        weights: Some(weights),
        machine: None,
        phases: Vec::new(),
        dropout_windows: Vec::new(),
        summary: SummaryConfig::default(),
    }
}

fn machine_preset() -> ScenarioConfig {
    let beam = BeamSpec::default();
    let machine = MachineProgram::default();
    let end = LoadSchedule::machine(&beam, &machine)
        .map(|s| s.end_s())
        .unwrap_or(0.0);
    ScenarioConfig {
        kind: ScenarioKind::MachineCycle,
        duration_s: end.ceil(),
        interrogation_period_s: 1.0,
        seed: 1,
        estimator: Estimator::Parabolic,
        noise_scale: 1.0,
        resonator: ResonatorParams::strain_sensor(),
        link: Some(LinkConfig {
            freq_hz: 869e6,
            air_distance_m: 0.07,
            cover_thickness_m: 0.038,
            ..LinkConfig::default()
        }),
        concrete: ConcreteConfig::default(),
        environment: EnvironmentConfig::default(),
        sweep: SweepConfig {
            f_start_hz: 868.0e6,
            f_stop_hz: 869.4e6,
            n_points: 1401,
            if_noise_sigma_db: 0.02,
            ref_snr_db: 40.0,
            seed: 0,
        },
        beam: Some(beam),
        creep: Some(CreepParams::default()),
        weights: None,
        machine: Some(machine),
        phases: Vec::new(),
        dropout_windows: Vec::new(),
        summary: SummaryConfig::default(),
    }
}
