//! Beam mechanics and adhesive creep.
//!
//! A simply supported reinforced-concrete beam under a mid-span point load,
//! analysed as an elastic transformed section: uncracked up to the cracking
//! moment, cracked (concrete tension ignored) beyond it. The glue between the
//! SAW die and the rebar adds a slow first-order drift on top of the true
//! rebar strain.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Standard gravity, for converting test masses to loads.
pub const GRAVITY: f64 = 9.80665;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bar {
    pub diameter_m: f64,
    /// Distance from the compression (top) face to the bar centre.
    pub depth_m: f64,
}

impl Bar {
    pub fn area_m2(&self) -> f64 {
        std::f64::consts::PI * self.diameter_m * self.diameter_m / 4.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSpec {
    pub length_m: f64,
    /// Support-to-support distance.
    pub span_m: f64,
    pub width_m: f64,
    pub height_m: f64,
    pub tension_bars: Vec<Bar>,
    pub compression_bars: Vec<Bar>,
    pub fc_prime_mpa: f64,
    pub es_gpa: f64,
    pub yield_strain_ue: f64,
}

impl Default for BeamSpec {
    /// 1.2 m beam, 155 x 200 mm, 2 x 10 mm bars in tension and 2 x 8 mm in
    /// compression. Bar depths assume 25 mm cover outside 8 mm stirrups.
    fn default() -> Self {
        let tension = Bar {
            diameter_m: 0.010,
            depth_m: 0.200 - 0.025 - 0.008 - 0.005,
        };
        let compression = Bar {
            diameter_m: 0.008,
            depth_m: 0.025 + 0.008 + 0.004,
        };
        BeamSpec {
            length_m: 1.2,
            span_m: 1.1,
            width_m: 0.155,
            height_m: 0.200,
            tension_bars: vec![tension; 2],
            compression_bars: vec![compression; 2],
            fc_prime_mpa: 19.56,
            es_gpa: 200.0,
            yield_strain_ue: 2000.0,
        }
    }
}

impl BeamSpec {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("length_m", self.length_m),
            ("span_m", self.span_m),
            ("width_m", self.width_m),
            ("height_m", self.height_m),
            ("fc_prime_mpa", self.fc_prime_mpa),
            ("es_gpa", self.es_gpa),
            ("yield_strain_ue", self.yield_strain_ue),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::param(key, format!("must be > 0, got {v}")));
            }
        }
        if self.span_m > self.length_m {
            return Err(Error::param("span_m", "span exceeds beam length"));
        }
        if self.tension_bars.is_empty() {
            return Err(Error::param(
                "tension_bars",
                "at least one tension bar required",
            ));
        }
        for bar in self.tension_bars.iter().chain(&self.compression_bars) {
            if !(bar.diameter_m > 0.0 && bar.depth_m > 0.0 && bar.depth_m < self.height_m) {
                return Err(Error::param(
                    "bars",
                    format!("bar {bar:?} must lie inside the section"),
                ));
            }
        }
        Ok(())
    }

    fn tension_area(&self) -> f64 {
        self.tension_bars.iter().map(Bar::area_m2).sum()
    }

    /// Area-weighted depth of the tension steel.
    pub fn tension_depth_m(&self) -> f64 {
        self.tension_bars
            .iter()
            .map(|b| b.area_m2() * b.depth_m)
            .sum::<f64>()
            / self.tension_area()
    }

    pub fn concrete_modulus_pa(&self) -> f64 {
        elastic_modulus_gpa(self.fc_prime_mpa) * 1e9
    }

    pub fn modular_ratio(&self) -> f64 {
        self.es_gpa / elastic_modulus_gpa(self.fc_prime_mpa)
    }

    /// Mid-span moment from a point load at mid-span.
    pub fn midspan_moment_nm(&self, load_n: f64) -> f64 {
        load_n * self.span_m / 4.0
    }
}

/// Empirical concrete modulus `4.7 sqrt(f'c)` (GPa, f'c in MPa).
pub fn elastic_modulus_gpa(fc_prime_mpa: f64) -> f64 {
    4.7 * fc_prime_mpa.sqrt()
}

/// Rupture modulus `0.62 sqrt(f'c)` (MPa).
pub fn rupture_modulus_mpa(fc_prime_mpa: f64) -> f64 {
    0.62 * fc_prime_mpa.sqrt()
}

/// Neutral axis depth and second moment of a section, in concrete units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionProps {
    pub neutral_axis_m: f64,
    pub inertia_m4: f64,
}

/// Uncracked transformed section: all concrete plus steel at `(n - 1) As`.
pub fn uncracked_section(beam: &BeamSpec) -> SectionProps {
    let n = beam.modular_ratio();
    let (b, h) = (beam.width_m, beam.height_m);
    let gross = b * h;
    let bars: Vec<(f64, f64)> = beam
        .tension_bars
        .iter()
        .chain(&beam.compression_bars)
        .map(|bar| ((n - 1.0) * bar.area_m2(), bar.depth_m))
        .collect();
    let area = gross + bars.iter().map(|(a, _)| a).sum::<f64>();
    let ybar = (gross * h / 2.0 + bars.iter().map(|(a, y)| a * y).sum::<f64>()) / area;
    let inertia = b * h.powi(3) / 12.0
        + gross * (h / 2.0 - ybar).powi(2)
        + bars
            .iter()
            .map(|(a, y)| a * (y - ybar).powi(2))
            .sum::<f64>();
    SectionProps {
        neutral_axis_m: ybar,
        inertia_m4: inertia,
    }
}

/// Cracked transformed section: concrete in tension ignored.
pub fn cracked_section(beam: &BeamSpec) -> SectionProps {
    let n = beam.modular_ratio();
    let b = beam.width_m;
    let tension: Vec<(f64, f64)> = beam
        .tension_bars
        .iter()
        .map(|bar| (n * bar.area_m2(), bar.depth_m))
        .collect();
    let compression: Vec<(f64, f64)> = beam
        .compression_bars
        .iter()
        .map(|bar| ((n - 1.0) * bar.area_m2(), bar.depth_m))
        .collect();
    // b c^2 / 2 + sum A (c - y) = 0 over all steel: quadratic in c
    let steel = tension.iter().chain(&compression);
    let sum_a: f64 = steel.clone().map(|(a, _)| a).sum();
    let sum_ay: f64 = steel.map(|(a, y)| a * y).sum();
    let c = (-sum_a + (sum_a * sum_a + 2.0 * b * sum_ay).sqrt()) / b;
    let inertia = b * c.powi(3) / 3.0
        + tension
            .iter()
            .chain(&compression)
            .map(|(a, y)| a * (y - c).powi(2))
            .sum::<f64>();
    SectionProps {
        neutral_axis_m: c,
        inertia_m4: inertia,
    }
}

/// Moment at which the extreme tension fibre of the gross section reaches
/// the rupture modulus.
pub fn cracking_moment_nm(beam: &BeamSpec) -> Result<f64> {
    beam.validate()?;
    let gross_inertia = beam.width_m * beam.height_m.powi(3) / 12.0;
    let y_t = beam.height_m / 2.0;
    Ok(rupture_modulus_mpa(beam.fc_prime_mpa) * 1e6 * gross_inertia / y_t)
}

/// Strain compliance (ue per N m) of the uncracked and cracked regimes at the
/// tension steel, and the cracking moment.
fn compliances(beam: &BeamSpec) -> Result<(f64, f64, f64)> {
    let mcr = cracking_moment_nm(beam)?;
    let ec = beam.concrete_modulus_pa();
    let d = beam.tension_depth_m();
    let un = uncracked_section(beam);
    let cr = cracked_section(beam);
    let k_un = (d - un.neutral_axis_m) / (ec * un.inertia_m4) * 1e6;
    let k_cr = (d - cr.neutral_axis_m) / (ec * cr.inertia_m4) * 1e6;
    Ok((k_un, k_cr, mcr))
}

/// Tension-steel strain (ue) under a mid-span point load.
///
/// Below the cracking moment the uncracked section applies; the moment in
/// excess of it is carried by the cracked section, so the curve is
/// continuous with a stiffness drop at cracking. `calibration` multiplies the
/// physical result.
pub fn rebar_strain_ue(beam: &BeamSpec, load_n: f64, calibration: Option<f64>) -> Result<f64> {
    if !(load_n.is_finite() && load_n >= 0.0) {
        return Err(Error::param(
            "load_n",
            format!("must be >= 0, got {load_n}"),
        ));
    }
    let (k_un, k_cr, mcr) = compliances(beam)?;
    let m = beam.midspan_moment_nm(load_n);
    let strain = if m <= mcr {
        k_un * m
    } else {
        k_un * mcr + k_cr * (m - mcr)
    };
    if strain > beam.yield_strain_ue {
        return Err(Error::BeyondYield {
            strain_ue: strain,
            yield_ue: beam.yield_strain_ue,
        });
    }
    Ok(strain * calibration.unwrap_or(1.0))
}

/// Inverse of [`rebar_strain_ue`]: the load producing `strain_ue`.
pub fn load_for_strain_n(beam: &BeamSpec, strain_ue: f64, calibration: Option<f64>) -> Result<f64> {
    let scale = calibration.unwrap_or(1.0);
    if !(scale > 0.0) {
        return Err(Error::param("calibration", "must be > 0"));
    }
    let physical = strain_ue / scale;
    if !(physical >= 0.0) {
        return Err(Error::param("strain_ue", "must be >= 0"));
    }
    if physical > beam.yield_strain_ue {
        return Err(Error::BeyondYield {
            strain_ue: physical,
            yield_ue: beam.yield_strain_ue,
        });
    }
    let (k_un, k_cr, mcr) = compliances(beam)?;
    let moment = if physical <= k_un * mcr {
        physical / k_un
    } else {
        mcr + (physical - k_un * mcr) / k_cr
    };
    Ok(4.0 * moment / beam.span_m)
}

/// Calibration multiplier making `load_n` produce exactly `target_ue`.
pub fn fit_calibration_scale(beam: &BeamSpec, load_n: f64, target_ue: f64) -> Result<f64> {
    let physical = rebar_strain_ue(beam, load_n, None)?;
    if physical <= 0.0 {
        return Err(Error::param(
            "load_n",
            "calibration load must produce non-zero strain",
        ));
    }
    Ok(target_ue / physical)
}

/// First-order creep of the die adhesive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CreepParams {
    /// Asymptotic drift as a fraction of the applied strain.
    pub amplitude_fraction: f64,
    pub tau_s: f64,
    /// Strain levels at or below this magnitude do not creep.
    pub threshold_ue: f64,
}

impl Default for CreepParams {
    fn default() -> Self {
        CreepParams {
            amplitude_fraction: 0.05,
            tau_s: 60.0,
            threshold_ue: 100.0,
        }
    }
}

impl CreepParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=0.5).contains(&self.amplitude_fraction) {
            return Err(Error::param("amplitude_fraction", "must be in [0, 0.5]"));
        }
        if !(self.tau_s.is_finite() && self.tau_s > 0.0) {
            return Err(Error::param("tau_s", "must be > 0"));
        }
        if !(self.threshold_ue.is_finite() && self.threshold_ue >= 0.0) {
            return Err(Error::param("threshold_ue", "must be >= 0"));
        }
        Ok(())
    }

    /// Strain seen by the creep model: zero at or below threshold.
    fn gate(&self, strain_ue: f64) -> f64 {
        if strain_ue.abs() > self.threshold_ue {
            strain_ue
        } else {
            0.0
        }
    }
}

/// Drift (ue) at `t_s` from a time-ordered applied strain history.
///
/// Each change of the gated strain at `t_i` contributes
/// `amplitude * delta * (1 - exp(-(t - t_i) / tau))`.
pub fn creep_drift_ue(history: &[(f64, f64)], params: &CreepParams, t_s: f64) -> Result<f64> {
    params.validate()?;
    if history.is_empty() {
        return Err(Error::Empty("strain history"));
    }
    if history.windows(2).any(|w| w[1].0 < w[0].0) {
        return Err(Error::param("history", "times must be non-decreasing"));
    }
    let mut previous = 0.0;
    let mut drift = 0.0;
    for &(t_i, strain) in history {
        if t_i > t_s {
            break;
        }
        let gated = params.gate(strain);
        let step = gated - previous;
        previous = gated;
        if step != 0.0 {
            drift += params.amplitude_fraction * step * -(-(t_s - t_i) / params.tau_s).exp_m1();
        }
    }
    Ok(drift)
}

/// Incremental form of [`creep_drift_ue`] for streaming histories.
#[derive(Debug, Clone, PartialEq)]
pub struct CreepState {
    params: CreepParams,
    last_t: f64,
    gated: f64,
    /// Sum of step amplitudes decayed to `last_t`.
    pending: f64,
}

impl CreepState {
    pub fn new(params: CreepParams) -> Result<Self> {
        params.validate()?;
        Ok(CreepState {
            params,
            last_t: f64::NEG_INFINITY,
            gated: 0.0,
            pending: 0.0,
        })
    }

    /// Records the applied strain at `t_s` (non-decreasing) and returns the drift there.
    pub fn push(&mut self, t_s: f64, strain_ue: f64) -> f64 {
        self.advance(t_s);
        let gated = self.params.gate(strain_ue);
        self.pending += gated - self.gated;
        self.gated = gated;
        self.drift()
    }

    fn advance(&mut self, t_s: f64) {
        if self.last_t.is_finite() {
            self.pending *= (-(t_s - self.last_t) / self.params.tau_s).exp();
        }
        self.last_t = t_s;
    }

    fn drift(&self) -> f64 {
        self.params.amplitude_fraction * (self.gated - self.pending)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn modulus() {
        assert!((elastic_modulus_gpa(19.56) - 20.8).abs() < 0.05);
        assert!((elastic_modulus_gpa(25.0) - 23.5).abs() < 1e-12);
        assert!(elastic_modulus_gpa(30.0) > elastic_modulus_gpa(25.0));
    }

    #[test]
    fn cracking_moment_of_default_beam() {
        let beam = BeamSpec::default();
        // 0.62 sqrt(19.56) MPa * (0.155 * 0.2^3 / 12) / 0.1
        let by_hand = 0.62 * 19.56f64.sqrt() * 1e6 * (0.155 * 0.008 / 12.0) / 0.1;
        let mcr = cracking_moment_nm(&beam).unwrap();
        assert!((mcr - by_hand).abs() < 1e-6);
        assert!((mcr - 2.8e3).abs() < 0.1e3, "{mcr}");
        let test_moment = beam.midspan_moment_nm(200.0 * GRAVITY);
        assert!((test_moment - 540.0).abs() < 5.0 && test_moment < mcr);
        let deeper = BeamSpec {
            height_m: 0.4,
            ..beam
        };
        assert!(cracking_moment_nm(&deeper).unwrap() > 2.0 * mcr);
    }

    #[test]
    fn zero_load_zero_strain() {
        assert_eq!(
            rebar_strain_ue(&BeamSpec::default(), 0.0, None).unwrap(),
            0.0
        );
    }

    #[test]
    fn weights_magnitude() {
        let beam = BeamSpec::default();
        let e = rebar_strain_ue(&beam, 1962.0, None).unwrap();
        assert!((4.0..=16.0).contains(&e), "{e}");
        let scale = fit_calibration_scale(&beam, 40.0 * GRAVITY, 2.0).unwrap();
        let e40 = rebar_strain_ue(&beam, 40.0 * GRAVITY, Some(scale)).unwrap();
        let e80 = rebar_strain_ue(&beam, 80.0 * GRAVITY, Some(scale)).unwrap();
        assert!((e40 - 2.0).abs() < 1e-12 && (e80 - 4.0).abs() < 1e-12);
    }

    #[test]
    fn cracked_section_is_softer() {
        let beam = BeamSpec::default();
        let un = uncracked_section(&beam);
        let cr = cracked_section(&beam);
        assert!(cr.inertia_m4 < un.inertia_m4);
        // first moment balance about the cracked neutral axis
        let n = beam.modular_ratio();
        let c = cr.neutral_axis_m;
        let mut balance = beam.width_m * c * c / 2.0;
        for b in &beam.compression_bars {
            balance += (n - 1.0) * b.area_m2() * (c - b.depth_m);
        }
        for b in &beam.tension_bars {
            balance -= n * b.area_m2() * (b.depth_m - c);
        }
        assert!(balance.abs() < 1e-12);
    }

    #[test]
    fn yield_guard() {
        let beam = BeamSpec::default();
        assert!(matches!(
            rebar_strain_ue(&beam, 80e3, None),
            Err(Error::BeyondYield { .. })
        ));
        assert!(rebar_strain_ue(&beam, -1.0, None).is_err());
    }

    #[test]
    fn load_inverse() {
        let beam = BeamSpec::default();
        for strain in [0.0, 10.0, 50.0, 500.0, 1050.0] {
            let load = load_for_strain_n(&beam, strain, None).unwrap();
            let back = rebar_strain_ue(&beam, load, None).unwrap();
            assert!((back - strain).abs() < 1e-9, "{strain}: {back}");
        }
    }

    #[test]
    fn creep_examples() {
        let p = CreepParams::default();
        let below = [(0.0, 80.0), (10.0, 80.0)];
        assert_eq!(creep_drift_ue(&below, &p, 100.0).unwrap(), 0.0);
        let step = [(0.0, 600.0)];
        let late = creep_drift_ue(&step, &p, 1e5).unwrap();
        assert!((late - p.amplitude_fraction * 600.0).abs() < 1e-9);
        let stairs = |top: f64| -> Vec<(f64, f64)> {
            (1..=4)
                .map(|k| (30.0 * (k - 1) as f64, top * (k + 1) as f64 / 5.0))
                .collect()
        };
        let d400 = creep_drift_ue(&stairs(400.0), &p, 120.0).unwrap();
        let d800 = creep_drift_ue(&stairs(800.0), &p, 120.0).unwrap();
        assert!(d400 > 0.0);
        assert!((d800 - 2.0 * d400).abs() <= 1e-12 * d800);
    }

    #[test]
    fn creep_history_must_be_ordered() {
        let p = CreepParams::default();
        assert!(creep_drift_ue(&[(1.0, 200.0), (0.0, 300.0)], &p, 2.0).is_err());
        assert!(creep_drift_ue(&[], &p, 2.0).is_err());
    }

    #[test]
    fn streaming_matches_direct_sum() {
        let p = CreepParams::default();
        let history: Vec<(f64, f64)> = (0..300)
            .map(|i| {
                let t = i as f64;
                (t, 600.0 * (t / 40.0).sin().abs() + 50.0)
            })
            .collect();
        let mut state = CreepState::new(p).unwrap();
        for (k, &(t, e)) in history.iter().enumerate() {
            let streamed = state.push(t, e);
            let direct = creep_drift_ue(&history[..=k], &p, t).unwrap();
            assert!(
                (streamed - direct).abs() < 1e-9,
                "{k}: {streamed} vs {direct}"
            );
        }
    }

    proptest! {
        #[test]
        fn linear_below_cracking(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let beam = BeamSpec::default();
            let pcr = 4.0 * cracking_moment_nm(&beam).unwrap() / beam.span_m;
            let (la, lb) = (a * pcr, b * pcr);
            let ea = rebar_strain_ue(&beam, la, None).unwrap();
            let eb = rebar_strain_ue(&beam, lb, None).unwrap();
            let esum = rebar_strain_ue(&beam, 0.5 * (la + lb), None).unwrap();
            prop_assert!((ea + eb - 2.0 * esum).abs() < 1e-9 * (1.0 + esum));
        }

        #[test]
        fn calibration_preserves_shape(load in 0.0..25e3f64, scale in 0.1..3.0f64) {
            let beam = BeamSpec::default();
            let raw = rebar_strain_ue(&beam, load, None).unwrap();
            let cal = rebar_strain_ue(&beam, load, Some(scale)).unwrap();
            prop_assert!(cal >= 0.0 && raw >= 0.0);
            let more = rebar_strain_ue(&beam, load + 100.0, Some(scale)).unwrap();
            prop_assert!(more > cal);
        }

        #[test]
        fn creep_monotone(e in 0.0..2000.0f64, extra in 0.0..500.0f64, t in 0.0..600.0f64, dt in 0.0..100.0f64) {
            let p = CreepParams::default();
            let h = [(0.0, e)];
            let d = creep_drift_ue(&h, &p, t).unwrap();
            prop_assert!(creep_drift_ue(&h, &p, t + dt).unwrap() >= d);
            prop_assert!(creep_drift_ue(&[(0.0, e + extra)], &p, t).unwrap() >= d);
        }

        #[test]
        fn creep_superposition(e1 in 150.0..800.0f64, e2 in 150.0..800.0f64, t1 in 0.0..100.0f64, t in 100.0..400.0f64) {
            let p = CreepParams::default();
            // step histories above threshold add linearly
            let a = [(0.0, e1)];
            let b = [(t1, e2)];
            let sum = [(0.0, e1), (t1, e1 + e2)];
            let lhs = creep_drift_ue(&sum, &p, t).unwrap();
            let rhs = creep_drift_ue(&a, &p, t).unwrap() + creep_drift_ue(&b, &p, t).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1e-12));
        }
    }
}
