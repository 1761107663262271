//! Command-line front end: argument parsing, exit codes and the bundled
//! scenario configs.

pub mod commands;
pub mod output;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use sawcrete::interrogator::Estimator;
use sawcrete::scenario::calibration::PrecisionTargets;

use commands::{CalibrateArgs, LinkOverrides, ScenarioArgs};

/// Environment variable naming a directory searched for `<name>.toml` configs.
pub const CONFIG_DIR_ENV: &str = "SAWCRETE_CONFIG_DIR";

const BUNDLED: [(&str, &str); 4] = [
    (
        "temperature-21day",
        include_str!("../configs/temperature-21day.toml"),
    ),
    (
        "weights-staircase",
        include_str!("../configs/weights-staircase.toml"),
    ),
    (
        "machine-cycle",
        include_str!("../configs/machine-cycle.toml"),
    ),
    ("linkbudget", include_str!("../configs/linkbudget.toml")),
];

pub fn bundled_config(name: &str) -> Option<&'static str> {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, text)| *text)
}

pub fn bundled_names() -> impl Iterator<Item = &'static str> {
    BUNDLED.iter().map(|(n, _)| *n)
}

/// Process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    Ok = 0,
    Runtime = 1,
    Input = 2,
    NoResonance = 3,
    Infeasible = 4,
}

#[derive(Debug, thiserror::Error)]
#[error("{message}")]
pub struct CliError {
    pub code: Exit,
    pub message: String,
}

impl CliError {
    pub fn new(code: Exit, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "sawcrete",
    version,
    about = "Wireless SAW sensors embedded in concrete: scenarios, link budgets, spectrum fits"
)]
pub struct Cli {
    /// Progress messages on stderr.
    #[arg(long, short, global = true)]
    pub verbose: bool,

    /// Directory searched for named configs before the bundled ones.
    #[arg(long, global = true, env = CONFIG_DIR_ENV)]
    pub config_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write readings, summary and manifest.
    Scenario {
        /// Config file, or the name of a bundled config.
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        /// Replaces the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write the spectrum of every n-th tick under `spectra/`.
        #[arg(long, value_name = "N")]
        spectra_every: Option<usize>,
    },
    /// Print the round-trip link budget and the maximum read range.
    Linkbudget(LinkArgs),
    /// Detect the resonance in a spectrum CSV (`freq_hz,s11_db`).
    Fit {
        spectrum: PathBuf,
        #[arg(long, value_enum, default_value = "parabolic")]
        estimator: EstimatorArg,
    },
    /// Fit the noise scale to fresh/hardened temperature precision targets.
    CalibrateNoise {
        #[arg(long, default_value = "temperature-21day")]
        config: String,
        /// Calibration file to write.
        #[arg(long, default_value = "calibration.toml")]
        out: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        fresh: f64,
        #[arg(long, default_value_t = 0.1)]
        hardened: f64,
        #[arg(long, default_value_t = 20)]
        replicas: usize,
        /// Seed of the first replica; replica i uses seed + i.
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum EstimatorArg {
    Parabolic,
    Lorentzian,
}

impl From<EstimatorArg> for Estimator {
    fn from(e: EstimatorArg) -> Self {
        match e {
            EstimatorArg::Parabolic => Estimator::Parabolic,
            EstimatorArg::Lorentzian => Estimator::Lorentzian,
        }
    }
}

#[derive(Debug, Args)]
pub struct LinkArgs {
    /// Link file (`[link]`, `[medium]`), scenario config, or bundled name.
    #[arg(long)]
    pub config: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub freq_hz: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tx_power_dbm: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gain_reader_dbi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub gain_sensor_dbi: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub air_m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub cover_m: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub insertion_loss_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub noise_floor_dbm: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub threshold_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub eps_r: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    pub tan_delta: Option<f64>,
}

/// Executes a parsed command line, returning its standard output.
pub fn execute(cli: &Cli) -> Result<String, CliError> {
    let dir = cli.config_dir.as_deref();
    match &cli.command {
        Command::Scenario {
            config,
            out,
            seed,
            spectra_every,
        } => commands::cmd_scenario(
            &ScenarioArgs {
                config: config.clone(),
                out: out.clone(),
                seed: *seed,
                spectra_every: *spectra_every,
            },
            dir,
            cli.verbose,
        ),
        Command::Linkbudget(a) => {
            let overrides = LinkOverrides {
                freq_hz: a.freq_hz,
                tx_power_dbm: a.tx_power_dbm,
                gain_reader_dbi: a.gain_reader_dbi,
                gain_sensor_dbi: a.gain_sensor_dbi,
                air_m: a.air_m,
                cover_m: a.cover_m,
                insertion_loss_db: a.insertion_loss_db,
                noise_floor_dbm: a.noise_floor_dbm,
                threshold_db: a.threshold_db,
                eps_r: a.eps_r,
                tan_delta: a.tan_delta,
            };
            let (link, medium) = commands::resolve_link(a.config.as_deref(), dir, &overrides)?;
            commands::cmd_linkbudget(&link, &medium)
        }
        Command::Fit {
            spectrum,
            estimator,
        } => commands::cmd_fit(spectrum, (*estimator).into()),
        Command::CalibrateNoise {
            config,
            out,
            fresh,
            hardened,
            replicas,
            seed,
        } => commands::cmd_calibrate_noise(
            &CalibrateArgs {
                config: config.clone(),
                out: out.clone(),
                targets: PrecisionTargets {
                    fresh_c: *fresh,
                    hardened_c: *hardened,
                },
                replicas: *replicas,
                first_seed: *seed,
            },
            dir,
            cli.verbose,
        ),
    }
}
