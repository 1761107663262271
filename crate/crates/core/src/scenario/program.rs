//! Load programs driving the strain scenarios.

use serde::{Deserialize, Serialize};

use crate::structure::{
    fit_calibration_scale, load_for_strain_n, rebar_strain_ue, BeamSpec, GRAVITY,
};
use crate::{Error, Result};

/// Manual staircase of dead weights placed at mid-span.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsProgram {
    /// Unloaded time before the first weight and after the last is removed.
    pub lead_s: f64,
    pub hold_s: f64,
    pub step_kg: f64,
    pub n_steps: u32,
    /// Remove the weights again in reverse order.
    pub unload: bool,
    /// Fit the beam calibration so each step produces this strain.
    pub target_ue_per_step: Option<f64>,
    /// Explicit calibration multiplier; ignored when `target_ue_per_step` is set.
    pub calibration_scale: Option<f64>,
}

impl Default for WeightsProgram {
    fn default() -> Self {
        WeightsProgram {
            lead_s: 60.0,
            hold_s: 120.0,
            step_kg: 40.0,
            n_steps: 4,
            unload: true,
            target_ue_per_step: Some(2.0),
            calibration_scale: None,
        }
    }
}

/// Bending-machine cycles specified by target rebar strains.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MachineProgram {
    pub hold_s: f64,
    /// Small seating load applied before the pre-load (below the creep threshold).
    pub seating_ue: f64,
    pub preload_ue: f64,
    pub step_ue: f64,
    pub peak_ue: f64,
    pub load_rate_kn_per_s: f64,
}

impl Default for MachineProgram {
    fn default() -> Self {
        MachineProgram {
            hold_s: 30.0,
            seating_ue: 50.0,
            preload_ue: 500.0,
            step_ue: 100.0,
            peak_ue: 1050.0,
            load_rate_kn_per_s: 0.06,
        }
    }
}

impl MachineProgram {
    /// Cycle peaks: pre-load plus successive steps, capped at the maximum.
    pub fn levels(&self) -> Vec<f64> {
        let mut levels = Vec::new();
        let mut level = self.preload_ue + self.step_ue;
        while level < self.peak_ue - 1e-9 {
            levels.push(level);
            level += self.step_ue;
        }
        levels.push(self.peak_ue);
        levels
    }
}

/// Time-indexed mid-span load with a fixed strain calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadSchedule {
    /// `(time_s, load_n)` breakpoints, time non-decreasing.
    pub steps: Vec<(f64, f64)>,
    /// Linear ramps between breakpoints; otherwise the load jumps at each one.
    pub ramped: bool,
    pub calibration: Option<f64>,
}

impl LoadSchedule {
    pub fn weights(beam: &BeamSpec, program: &WeightsProgram) -> Result<Self> {
        if !(program.hold_s > 0.0 && program.lead_s >= 0.0 && program.step_kg > 0.0) {
            return Err(Error::param(
                "weights",
                "hold_s and step_kg must be > 0, lead_s >= 0",
            ));
        }
        let step_n = program.step_kg * GRAVITY;
        let calibration = match program.target_ue_per_step {
            Some(target) => Some(fit_calibration_scale(beam, step_n, target)?),
            None => program.calibration_scale,
        };
        let n = program.n_steps as usize;
        let mut levels: Vec<usize> = (0..=n).collect();
        if program.unload {
            levels.extend((0..n).rev());
        }
        let mut steps = Vec::with_capacity(levels.len());
        let mut t = 0.0;
        for (i, &k) in levels.iter().enumerate() {
            steps.push((t, k as f64 * step_n));
            t += if i == 0 {
                program.lead_s
            } else {
                program.hold_s
            };
        }
        Ok(LoadSchedule {
            steps,
            ramped: false,
            calibration,
        })
    }

    pub fn machine(beam: &BeamSpec, program: &MachineProgram) -> Result<Self> {
        if !(program.hold_s > 0.0 && program.load_rate_kn_per_s > 0.0 && program.step_ue > 0.0) {
            return Err(Error::param(
                "machine",
                "hold_s, step_ue and load_rate_kn_per_s must be > 0",
            ));
        }
        if !(0.0 <= program.seating_ue
            && program.seating_ue <= program.preload_ue
            && program.preload_ue < program.peak_ue)
        {
            return Err(Error::param(
                "machine",
                "require 0 <= seating_ue <= preload_ue < peak_ue",
            ));
        }
        let mut targets = vec![0.0, program.seating_ue, program.preload_ue];
        for level in program.levels() {
            targets.push(level);
            targets.push(program.preload_ue);
        }
        targets.push(0.0);

        let rate = program.load_rate_kn_per_s * 1e3;
        let mut steps = Vec::new();
        let mut t = 0.0;
        let mut previous: Option<f64> = None;
        for target in targets {
            let load = load_for_strain_n(beam, target, None)?;
            if let Some(prev) = previous {
                t += (load - prev).abs() / rate;
            }
            steps.push((t, load));
            t += program.hold_s;
            steps.push((t, load));
            previous = Some(load);
        }
        Ok(LoadSchedule {
            steps,
            ramped: true,
            calibration: None,
        })
    }

    pub fn end_s(&self) -> f64 {
        self.steps.last().map(|s| s.0).unwrap_or(0.0)
    }

    pub fn load_at(&self, t_s: f64) -> f64 {
        let idx = self.steps.partition_point(|s| s.0 <= t_s);
        if idx == 0 {
            return self.steps.first().map(|s| s.1).unwrap_or(0.0);
        }
        let (t0, l0) = self.steps[idx - 1];
        match self.steps.get(idx) {
            Some(&(t1, l1)) if self.ramped && t1 > t0 && l1 != l0 => {
                l0 + (l1 - l0) * (t_s - t0) / (t1 - t0)
            }
            _ => l0,
        }
    }

    pub fn strain_at(&self, beam: &BeamSpec, t_s: f64) -> Result<f64> {
        rebar_strain_ue(beam, self.load_at(t_s), self.calibration)
    }
}
