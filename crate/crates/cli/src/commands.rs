//! Implementations of the command-line verbs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sawcrete::interrogator::{detect_resonance_with, Estimator};
use sawcrete::link::{budget_breakdown, max_read_range_m, DielectricMedium, LinkConfig};
use sawcrete::scenario::calibration::{calibrate_noise, CalibrationOptions, PrecisionTargets};
use sawcrete::scenario::{
    simulate_observed, summarize, Approach, ScenarioConfig, ScenarioKind, Summary,
};
use sawcrete::{Error, Spectrum};
use serde::{Deserialize, Serialize};

use crate::output::{self, write_atomic, FormatError};
use crate::{bundled_config, CliError, Exit};

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        let code = match e {
            FormatError::Io { .. } | FormatError::Encode(_) => Exit::Runtime,
            FormatError::Read { .. } | FormatError::Csv { .. } | FormatError::Header { .. } => {
                Exit::Input
            }
        };
        CliError::new(code, e.to_string())
    }
}

fn runtime(e: Error) -> CliError {
    CliError::new(Exit::Runtime, e.to_string())
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::new(Exit::Input, e.to_string())
}

/// Text of a config given as a path or as the name of a bundled config.
pub fn config_text(spec: &str, config_dir: Option<&Path>) -> Result<(String, String), CliError> {
    let path = Path::new(spec);
    if path.is_file() {
        let text = fs::read_to_string(path).map_err(|e| input(format!("{spec}: {e}")))?;
        return Ok((text, path.display().to_string()));
    }
    let name = spec.strip_suffix(".toml").unwrap_or(spec);
    if let Some(dir) = config_dir {
        let candidate = dir.join(format!("{name}.toml"));
        if candidate.is_file() {
            let text = fs::read_to_string(&candidate)
                .map_err(|e| input(format!("{}: {e}", candidate.display())))?;
            return Ok((text, candidate.display().to_string()));
        }
    }
    match bundled_config(name) {
        Some(text) => Ok((text.to_string(), format!("bundled:{name}"))),
        None => Err(input(format!(
            "config `{spec}` is neither a file nor a bundled config"
        ))),
    }
}

pub fn load_scenario(
    spec: &str,
    config_dir: Option<&Path>,
) -> Result<(ScenarioConfig, String), CliError> {
    let (text, origin) = config_text(spec, config_dir)?;
    let config =
        ScenarioConfig::from_toml_str(&text).map_err(|e| input(format!("{origin}: {e}")))?;
    Ok((config, origin))
}

#[derive(Debug, Clone)]
pub struct ScenarioArgs {
    pub config: String,
    pub out: PathBuf,
    pub seed: Option<u64>,
    /// Also write every n-th synthesized spectrum.
    pub spectra_every: Option<usize>,
}

#[derive(Debug, Serialize)]
struct SummaryFile<'a> {
    kind: &'static str,
    seed: u64,
    noise_scale: f64,
    #[serde(flatten)]
    summary: &'a Summary,
}

pub fn summary_table(kind: ScenarioKind, summary: &Summary) -> String {
    let opt = |v: Option<f64>, digits: usize| match v {
        Some(x) => format!("{x:.digits$}"),
        None => "-".into(),
    };
    let mut s = String::new();
    let _ = writeln!(s, "scenario   {}", kind.name());
    let _ = writeln!(
        s,
        "records    {}  dropouts {} ({:.2}%)",
        summary.n_records,
        summary.n_dropouts,
        100.0 * summary.dropout_rate
    );
    let _ = writeln!(
        s,
        "{:<12} {:>8} {:>6} {:>12} {:>12} {:>12} {:>12} {:>9}",
        "window",
        "records",
        "drops",
        "temp_err_sd",
        "temp_err_mu",
        "strain_sd",
        "strain_mu",
        "snr_db"
    );
    for w in std::iter::once(&summary.overall).chain(&summary.phases) {
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>6} {:>12} {:>12} {:>12} {:>12} {:>9}",
            w.name,
            w.n_records,
            w.n_dropouts,
            opt(w.temp_error_std_c, 4),
            opt(w.temp_error_mean_c, 4),
            opt(w.strain_error_std_ue, 4),
            opt(w.strain_error_mean_ue, 4),
            opt(w.mean_snr_db, 2),
        );
    }
    if !summary.holds.is_empty() {
        let _ = writeln!(
            s,
            "{:<10} {:>10} {:>10} {:>12} {:>12} {:>16} {:>10} {:>10}",
            "hold_t0_s",
            "hold_t1_s",
            "approach",
            "truth_ue",
            "recovered_ue",
            "freq_hz",
            "drift_ue",
            "offset_ue"
        );
        for h in &summary.holds {
            let _ = writeln!(
                s,
                "{:<10.1} {:>10.1} {:>10} {:>12.3} {:>12} {:>16} {:>10} {:>10}",
                h.start_s,
                h.end_s,
                approach_name(h.approach),
                h.truth_strain_ue,
                opt(h.mean_strain_ue, 3),
                opt(h.mean_freq_hz, 1),
                opt(h.drift_ue, 3),
                opt(h.offset_ue, 3),
            );
        }
    }
    s
}

fn approach_name(a: Approach) -> &'static str {
    match a {
        Approach::Initial => "initial",
        Approach::Loading => "loading",
        Approach::Unloading => "unloading",
    }
}

pub fn cmd_scenario(
    args: &ScenarioArgs,
    config_dir: Option<&Path>,
    verbose: bool,
) -> Result<String, CliError> {
    let (mut config, origin) = load_scenario(&args.config, config_dir)?;
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    if verbose {
        eprintln!(
            "running {} from {origin}: {} ticks, seed {}",
            config.kind.name(),
            config.ticks().len(),
            config.seed
        );
    }
    fs::create_dir_all(&args.out)
        .map_err(|e| CliError::new(Exit::Runtime, format!("{}: {e}", args.out.display())))?;

    let mut spectra: Vec<(usize, Spectrum)> = Vec::new();
    let records = simulate_observed(&config, |k, spectrum| {
        if let Some(n) = args.spectra_every {
            if n > 0 && k % n == 0 {
                spectra.push((k, spectrum.clone()));
            }
        }
    })
    .map_err(runtime)?;
    let summary = summarize(&records, &config.summary_options()).map_err(runtime)?;

    write_atomic(
        &args.out.join("readings.csv"),
        &output::readings_csv(&records)?,
    )?;
    write_atomic(
        &args.out.join("readings.jsonl"),
        &output::readings_jsonl(&records)?,
    )?;
    let summary_json = serde_json::to_vec_pretty(&SummaryFile {
        kind: config.kind.name(),
        seed: config.seed,
        noise_scale: config.noise_scale,
        summary: &summary,
    })
    .map_err(|e| CliError::new(Exit::Runtime, e.to_string()))?;
    write_atomic(&args.out.join("summary.json"), &summary_json)?;
    let table = summary_table(config.kind, &summary);
    write_atomic(&args.out.join("summary.txt"), table.as_bytes())?;
    let manifest = config.to_toml().map_err(runtime)?;
    write_atomic(&args.out.join("manifest.toml"), manifest.as_bytes())?;
    if !spectra.is_empty() {
        let dir = args.out.join("spectra");
        fs::create_dir_all(&dir)
            .map_err(|e| CliError::new(Exit::Runtime, format!("{}: {e}", dir.display())))?;
        for (k, spectrum) in &spectra {
            write_atomic(
                &dir.join(format!("tick_{k:06}.csv")),
                &output::spectrum_csv(spectrum)?,
            )?;
        }
    }
    if verbose {
        eprintln!("wrote {} records to {}", records.len(), args.out.display());
    }
    Ok(table)
}

/// Link budget file: a `[link]` table and an optional `[medium]` table.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkFile {
    #[serde(default)]
    pub link: Option<LinkConfig>,
    #[serde(default)]
    pub medium: Option<DielectricMedium>,
}

/// Command-line overrides for single link parameters.
#[derive(Debug, Clone, Default)]
pub struct LinkOverrides {
    pub freq_hz: Option<f64>,
    pub tx_power_dbm: Option<f64>,
    pub gain_reader_dbi: Option<f64>,
    pub gain_sensor_dbi: Option<f64>,
    pub air_m: Option<f64>,
    pub cover_m: Option<f64>,
    pub insertion_loss_db: Option<f64>,
    pub noise_floor_dbm: Option<f64>,
    pub threshold_db: Option<f64>,
    pub eps_r: Option<f64>,
    pub tan_delta: Option<f64>,
}

pub fn resolve_link(
    config: Option<&str>,
    config_dir: Option<&Path>,
    overrides: &LinkOverrides,
) -> Result<(LinkConfig, DielectricMedium), CliError> {
    let (mut link, mut medium) = (LinkConfig::default(), DielectricMedium::DRY_CONCRETE);
    if let Some(spec) = config {
        let (text, origin) = config_text(spec, config_dir)?;
        let table: toml::Table = text.parse().map_err(|e| input(format!("{origin}: {e}")))?;
        if table.contains_key("kind") {
            let scenario = ScenarioConfig::from_toml_str(&text)
                .map_err(|e| input(format!("{origin}: {e}")))?;
            link = scenario
                .link
                .ok_or_else(|| input(format!("{origin}: scenario has no [link] section")))?;
            medium = scenario.concrete.dry;
        } else {
            let file: LinkFile =
                toml::from_str(&text).map_err(|e| input(format!("{origin}: {e}")))?;
            link = file.link.unwrap_or(link);
            medium = file.medium.unwrap_or(medium);
        }
    }
    let set = |dst: &mut f64, v: Option<f64>| {
        if let Some(v) = v {
            *dst = v;
        }
    };
    set(&mut link.freq_hz, overrides.freq_hz);
    set(&mut link.tx_power_dbm, overrides.tx_power_dbm);
    set(&mut link.gain_reader_dbi, overrides.gain_reader_dbi);
    set(&mut link.gain_sensor_dbi, overrides.gain_sensor_dbi);
    set(&mut link.air_distance_m, overrides.air_m);
    set(&mut link.cover_thickness_m, overrides.cover_m);
    set(&mut link.insertion_loss_db, overrides.insertion_loss_db);
    set(&mut link.noise_floor_dbm, overrides.noise_floor_dbm);
    set(&mut link.snr_threshold_db, overrides.threshold_db);
    set(&mut medium.eps_r, overrides.eps_r);
    set(&mut medium.tan_delta, overrides.tan_delta);
    link.validate().map_err(input)?;
    medium.validate().map_err(input)?;
    Ok((link, medium))
}

pub fn cmd_linkbudget(link: &LinkConfig, medium: &DielectricMedium) -> Result<String, CliError> {
    let b = budget_breakdown(link, medium).map_err(input)?;
    let mut s = String::new();
    let _ = writeln!(
        s,
        "frequency                {:>10.3} MHz",
        link.freq_hz / 1e6
    );
    let _ = writeln!(
        s,
        "medium                   eps_r {:.2}  tan_delta {:.3}",
        medium.eps_r, medium.tan_delta
    );
    let _ = writeln!(
        s,
        "air distance             {:>10.4} m",
        link.air_distance_m
    );
    let _ = writeln!(
        s,
        "concrete cover           {:>10.4} m",
        link.cover_thickness_m
    );
    let _ = writeln!(
        s,
        "effective distance       {:>10.4} m",
        b.effective_distance_m
    );
    let _ = writeln!(s, "tx power                 {:>10.2} dBm", b.tx_power_dbm);
    let _ = writeln!(s, "antenna gains (2-way)    {:>10.2} dB", b.gains_db);
    let _ = writeln!(s, "free-space loss (2-way)  {:>10.2} dB", b.fspl_two_way_db);
    let _ = writeln!(
        s,
        "concrete loss (2-way)    {:>10.2} dB",
        b.concrete_loss_two_way_db
    );
    let _ = writeln!(
        s,
        "insertion loss           {:>10.2} dB",
        b.insertion_loss_db
    );
    let _ = writeln!(
        s,
        "noise floor              {:>10.2} dBm",
        b.noise_floor_dbm
    );
    let _ = writeln!(s, "snr                      {:>10.2} dB", b.snr_db);
    let _ = writeln!(
        s,
        "snr threshold            {:>10.2} dB",
        link.snr_threshold_db
    );
    match max_read_range_m(link, medium) {
        Ok(r) => {
            let _ = writeln!(s, "max read range           {r:>10.3} m");
        }
        Err(e @ Error::NoLink { .. }) => {
            let _ = writeln!(s, "max read range           no link ({e})");
        }
        Err(e) => return Err(input(e)),
    }
    Ok(s)
}

#[derive(Debug, Serialize)]
struct FitOutput {
    freq_hz: f64,
    amplitude_db: f64,
    snr_db: f64,
    estimator: Estimator,
    truncated: bool,
}

pub fn cmd_fit(path: &Path, estimator: Estimator) -> Result<String, CliError> {
    let (freqs, s11) = output::read_spectrum_csv(path)?;
    let spectrum =
        Spectrum::new(freqs, s11).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let reading = detect_resonance_with(&spectrum, estimator).map_err(|e| match e {
        Error::NoResonance { .. } => CliError::new(Exit::NoResonance, e.to_string()),
        other => input(other),
    })?;
    serde_json::to_string_pretty(&FitOutput {
        freq_hz: reading.freq_hz,
        amplitude_db: reading.amplitude_db,
        snr_db: reading.snr_db,
        estimator,
        truncated: spectrum.truncated,
    })
    .map_err(|e| CliError::new(Exit::Runtime, e.to_string()))
}

#[derive(Debug, Clone)]
pub struct CalibrateArgs {
    pub config: String,
    pub out: PathBuf,
    pub targets: PrecisionTargets,
    pub replicas: usize,
    pub first_seed: u64,
}

pub fn cmd_calibrate_noise(
    args: &CalibrateArgs,
    config_dir: Option<&Path>,
    verbose: bool,
) -> Result<String, CliError> {
    let (config, origin) = load_scenario(&args.config, config_dir)?;
    let options = CalibrationOptions {
        replicas: args.replicas,
        first_seed: args.first_seed,
        ..CalibrationOptions::default()
    };
    if verbose {
        eprintln!(
            "calibrating {origin} over {} replicas against fresh {} / hardened {} degC",
            args.replicas, args.targets.fresh_c, args.targets.hardened_c
        );
    }
    let cal = calibrate_noise(&config, args.targets, &options).map_err(|e| match e {
        Error::CalibrationInfeasible { .. } => CliError::new(Exit::Infeasible, e.to_string()),
        Error::InvalidParameter { .. } => input(e),
        other => runtime(other),
    })?;
    let text = toml::to_string(&cal).map_err(|e| CliError::new(Exit::Runtime, e.to_string()))?;
    if let Some(dir) = args.out.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)
                .map_err(|e| CliError::new(Exit::Runtime, format!("{}: {e}", dir.display())))?;
        }
    }
    write_atomic(&args.out, text.as_bytes())?;
    Ok(format!(
        "noise_scale {:.6}\nfresh std {:.4} degC (target {})\nhardened std {:.4} degC (target {})\nordered in every replica: {}\nwrote {}\n",
        cal.noise_scale,
        cal.achieved.fresh_std_c,
        cal.targets.fresh_c,
        cal.achieved.hardened_std_c,
        cal.targets.hardened_c,
        cal.achieved.ordered_in_every_replica(),
        args.out.display()
    ))
}
