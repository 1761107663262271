use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A parameter set violates its invariants.
    #[error("invalid parameter `{key}`: {reason}")]
    InvalidParameter { key: String, reason: String },

    /// Input outside the envelope the model is calibrated for.
    #[error("{quantity} = {value} outside model envelope [{min}, {max}]")]
    OutOfEnvelope {
        quantity: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    /// Requested distance lies in the reactive near field.
    #[error("distance {distance_m} m is inside the near field (far-field bound {bound_m} m)")]
    NearField { distance_m: f64, bound_m: f64 },

    /// Link cannot close even at the closest valid distance.
    #[error(
        "no link: SNR {snr_db:.2} dB at {distance_m} m is below threshold {threshold_db:.2} dB"
    )]
    NoLink {
        snr_db: f64,
        distance_m: f64,
        threshold_db: f64,
    },

    /// Dip not distinguishable from noise.
    #[error(
        "no resonance detected: dip depth {depth_db:.4} dB below 3x noise sigma {sigma_db:.4} dB"
    )]
    NoResonance { depth_db: f64, sigma_db: f64 },

    /// Frequency cannot be mapped back to a physical quantity.
    #[error("inversion failed: {0}")]
    Inversion(String),

    /// Beam loaded beyond the elastic model (steel yield).
    #[error("steel strain {strain_ue:.1} ue exceeds yield limit {yield_ue:.1} ue")]
    BeyondYield { strain_ue: f64, yield_ue: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    /// Precision targets cannot be met together; `frontier` describes what can.
    #[error("calibration infeasible: {reason}; {frontier}")]
    CalibrationInfeasible { reason: String, frontier: String },
}

impl Error {
    pub(crate) fn param(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            key: key.into(),
            reason: reason.into(),
        }
    }
}
