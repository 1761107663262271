//! Simulation toolkit for passive wireless SAW strain and temperature sensors
//! embedded in reinforced concrete.
//!
//! The crate follows the physical interrogation chain:
//!
//! * [`resonator`]: one-port SAW resonator, frequency shifts and BVD reflection response
//! * [`link`]: RF channel through air and lossy concrete, link budget and read range
//! * [`spectrum`]: swept reflection magnitudes as seen by the reader
//! * [`interrogator`]: swept-frequency reader, resonance detection and inversion
//! * [`structure`]: beam mechanics (rebar strain under load) and adhesive creep
//! * [`scenario`]: end-to-end replays producing ground truth vs recovered series

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod error;
pub mod interrogator;
pub mod link;
pub mod resonator;
pub mod scenario;
pub mod spectrum;
pub mod structure;

pub use error::{Error, Result};
pub use spectrum::Spectrum;

/// Speed of light in vacuum (m/s).
pub const C_LIGHT: f64 = 299_792_458.0;

/// Nepers to decibels.
pub const NP_TO_DB: f64 = 8.685_889_638_065_037;
