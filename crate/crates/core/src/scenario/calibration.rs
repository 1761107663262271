//! Fitting the noise scale to fresh/hardened temperature precision targets.
//!
//! Precision at a candidate scale is measured over a fixed set of seeded
//! replicas run in parallel; the scale is found by bisection in log space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::summary::std_dev;
use super::{simulate, ScenarioConfig, SeriesRecord};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionTargets {
    pub fresh_c: f64,
    pub hardened_c: f64,
}

impl Default for PrecisionTargets {
    fn default() -> Self {
        PrecisionTargets {
            fresh_c: 0.5,
            hardened_c: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOptions {
    pub replicas: usize,
    /// Replica `i` runs with seed `first_seed + i`.
    pub first_seed: u64,
    pub fresh_phase: String,
    pub hardened_phase: String,
    /// Accepted relative deviation from each target.
    pub tolerance: f64,
    /// The binding phase is placed at `aim * target`.
    pub aim: f64,
    pub max_iterations: usize,
}

impl Default for CalibrationOptions {
    fn default() -> Self {
        CalibrationOptions {
            replicas: 20,
            first_seed: 1,
            fresh_phase: "fresh".into(),
            hardened_phase: "hardened".into(),
            tolerance: 0.1,
            aim: 0.97,
            max_iterations: 60,
        }
    }
}

/// Temperature-error spread of a replica set at one noise scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasePrecision {
    pub noise_scale: f64,
    /// Standard deviation of the errors pooled over all replicas.
    pub fresh_std_c: f64,
    pub hardened_std_c: f64,
    /// `(fresh, hardened)` per replica.
    pub per_replica: Vec<(f64, f64)>,
    pub dropout_rate: f64,
}

impl PhasePrecision {
    pub fn ordered_in_every_replica(&self) -> bool {
        self.per_replica.iter().all(|(f, h)| f > h)
    }

    fn excess(&self, targets: &PrecisionTargets) -> f64 {
        (self.fresh_std_c / targets.fresh_c).max(self.hardened_std_c / targets.hardened_c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub noise_scale: f64,
    pub targets: PrecisionTargets,
    pub replicas: usize,
    pub first_seed: u64,
    pub iterations: usize,
    pub achieved: PhasePrecision,
}

fn phase_window(config: &ScenarioConfig, name: &str) -> Result<(f64, f64)> {
    config
        .phases
        .iter()
        .find(|p| p.name == name)
        .map(|p| (p.start_s, p.end_s))
        .ok_or_else(|| Error::param("phases", format!("no phase named '{name}'")))
}

fn errors_in(records: &[SeriesRecord], (lo, hi): (f64, f64)) -> Vec<f64> {
    records
        .iter()
        .filter(|r| r.timestamp_s >= lo && r.timestamp_s <= hi)
        .filter_map(SeriesRecord::temp_error_c)
        .collect()
}

/// Runs the replica set at `noise_scale` and measures both phases.
pub fn evaluate(
    config: &ScenarioConfig,
    noise_scale: f64,
    options: &CalibrationOptions,
) -> Result<PhasePrecision> {
    if options.replicas == 0 {
        return Err(Error::param("replicas", "must be >= 1"));
    }
    let fresh = phase_window(config, &options.fresh_phase)?;
    let hardened = phase_window(config, &options.hardened_phase)?;
    let runs: Vec<Vec<SeriesRecord>> = (0..options.replicas as u64)
        .into_par_iter()
        .map(|i| {
            let mut c = config.clone();
            c.noise_scale = noise_scale;
            c.seed = options.first_seed + i;
            simulate(&c)
        })
        .collect::<Result<_>>()?;

    let mut pooled_f = Vec::new();
    let mut pooled_h = Vec::new();
    let mut per_replica = Vec::with_capacity(runs.len());
    let (mut total, mut dropped) = (0usize, 0usize);
    for records in &runs {
        let f = errors_in(records, fresh);
        let h = errors_in(records, hardened);
        per_replica.push((
            std_dev(&f).unwrap_or(f64::NAN),
            std_dev(&h).unwrap_or(f64::NAN),
        ));
        pooled_f.extend(f);
        pooled_h.extend(h);
        total += records.len();
        dropped += records.iter().filter(|r| r.is_dropout()).count();
    }
    let too_few =
        |what: &str| Error::Inversion(format!("fewer than two readings in the {what} phase"));
    Ok(PhasePrecision {
        noise_scale,
        fresh_std_c: std_dev(&pooled_f).ok_or_else(|| too_few("fresh"))?,
        hardened_std_c: std_dev(&pooled_h).ok_or_else(|| too_few("hardened"))?,
        per_replica,
        dropout_rate: dropped as f64 / total as f64,
    })
}

fn frontier(p: &PhasePrecision, targets: &PrecisionTargets) -> String {
    let ratio = p.fresh_std_c / p.hardened_std_c;
    format!(
        "achievable fresh/hardened ratio is {ratio:.2} (requested {:.2}); with hardened at {:.3} degC fresh is {:.3} degC, with fresh at {:.3} degC hardened is {:.3} degC",
        targets.fresh_c / targets.hardened_c,
        targets.hardened_c,
        targets.hardened_c * ratio,
        targets.fresh_c,
        targets.fresh_c / ratio,
    )
}

/// Finds the noise scale meeting both precision targets.
pub fn calibrate_noise(
    config: &ScenarioConfig,
    targets: PrecisionTargets,
    options: &CalibrationOptions,
) -> Result<Calibration> {
    if !(targets.fresh_c > 0.0 && targets.hardened_c > 0.0) {
        return Err(Error::param("targets", "must be > 0"));
    }
    if targets.fresh_c < targets.hardened_c {
        return Err(Error::CalibrationInfeasible {
            reason: format!(
                "fresh target {} degC is tighter than hardened target {} degC",
                targets.fresh_c, targets.hardened_c
            ),
            frontier: "fresh-concrete precision is always the worse of the two".into(),
        });
    }
    if !(options.aim > 0.0 && options.aim <= 1.0 && options.tolerance > 0.0) {
        return Err(Error::param(
            "aim/tolerance",
            "require 0 < aim <= 1, tolerance > 0",
        ));
    }

    let calls = std::cell::Cell::new(0usize);
    let eval = |s: f64| -> Result<PhasePrecision> {
        calls.set(calls.get() + 1);
        evaluate(config, s, options)
    };
    let start = if config.noise_scale > 0.0 {
        config.noise_scale
    } else {
        1.0
    };
    let first = eval(start)?;
    let (mut lo, mut hi) = if first.excess(&targets) > options.aim {
        let mut hi = first;
        loop {
            let s = hi.noise_scale / 2.0;
            let p = eval(s)?;
            if p.excess(&targets) <= options.aim {
                break (p, hi);
            }
            if calls.get() >= options.max_iterations {
                return Err(Error::CalibrationInfeasible {
                    reason: "targets not reached at any tried noise scale".into(),
                    frontier: frontier(&p, &targets),
                });
            }
            hi = p;
        }
    } else {
        let mut lo = first;
        loop {
            let s = lo.noise_scale * 2.0;
            let p = eval(s)?;
            if p.excess(&targets) > options.aim {
                break (lo, p);
            }
            if calls.get() >= options.max_iterations {
                return Err(Error::CalibrationInfeasible {
                    reason: "precision saturates below the targets".into(),
                    frontier: frontier(&p, &targets),
                });
            }
            lo = p;
        }
    };
    while hi.noise_scale / lo.noise_scale - 1.0 > 1e-4 && calls.get() < options.max_iterations {
        let mid = (lo.noise_scale * hi.noise_scale).sqrt();
        let p = eval(mid)?;
        if p.excess(&targets) <= options.aim {
            lo = p;
        } else {
            hi = p;
        }
    }

    let within = |v: f64, t: f64| (v / t - 1.0).abs() <= options.tolerance;
    if !(within(lo.fresh_std_c, targets.fresh_c) && within(lo.hardened_std_c, targets.hardened_c)) {
        return Err(Error::CalibrationInfeasible {
            reason: format!(
                "best scale {:.6} gives fresh {:.3} / hardened {:.3} degC, not both within {:.0}% of targets",
                lo.noise_scale,
                lo.fresh_std_c,
                lo.hardened_std_c,
                options.tolerance * 100.0
            ),
            frontier: frontier(&lo, &targets),
        });
    }
    Ok(Calibration {
        noise_scale: lo.noise_scale,
        targets,
        replicas: options.replicas,
        first_seed: options.first_seed,
        iterations: calls.get(),
        achieved: lo,
    })
}
